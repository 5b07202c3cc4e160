"""Recursive-descent parser for the closed instruction grammar.

Inverse of grammar.realize on every emitted sentence: parsing recovers the
object frame, position frame, and schema exactly. The grammar is closed --
anything else raises ParseError with the furthest token position reached
and the token kinds expected there.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError
from .frames import (
    ANOTHER_SAME_COLOR,
    JUST_MOVED,
    LAST_REMAINING,
    ObjectFrame,
    PositionFrame,
    RELATIONS,
)
from .grammar import LEXICON, SCHEMA_CONJOINED, SCHEMA_SINGLE
from .world import Region


@dataclass(frozen=True)
class ParsedInstruction:
    schema: int
    pick_verb: str | None
    place_verb: str
    object_frame: ObjectFrame
    position_frame: PositionFrame


def _tokens(text: str) -> list[str]:
    text = text.strip()
    if not text.endswith("."):
        raise ParseError("sentence must end with '.'", position=len(text.split()))
    return text[:-1].lower().split()


class _Parser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.far_pos = 0
        self.far_expected: set[str] = set()

    def _miss(self, pos: int, expected: str):
        if pos > self.far_pos:
            self.far_pos = pos
            self.far_expected = {expected}
        elif pos == self.far_pos:
            self.far_expected.add(expected)

    def _match_seq(self, pos: int, words: str, expected: str | None = None):
        """Match a fixed multiword sequence; return new pos or None."""
        seq = words.split()
        if self.toks[pos:pos + len(seq)] == seq:
            return pos + len(seq)
        self._miss(pos, expected or words)
        return None

    def _match_verb(self, pos: int, verbs: list[str], expected: str):
        for verb in sorted(verbs, key=lambda v: -len(v.split())):
            newpos = self._match_seq(pos, verb, expected)
            if newpos is not None:
                return verb, newpos
        return None

    def _match_region_name(self, pos: int):
        for key, name in sorted(LEXICON.region_names.items(),
                                key=lambda kv: -len(kv[1].split())):
            newpos = self._match_seq(pos, name, "region name")
            if newpos is not None:
                return Region.from_key(key), newpos
        return None

    # -- object phrases ---------------------------------------------------
    # Returns a list of (frame, pos) candidates, greediest first, so the
    # caller can backtrack when the rest of the sentence does not fit.

    def parse_object(self, pos: int, depth: int = 0) -> list[tuple[ObjectFrame, int]]:
        out: list[tuple[ObjectFrame, int]] = []
        newpos = self._match_seq(pos, LEXICON.phrases["just_moved"], "object phrase")
        if newpos is not None:
            out.append((ObjectFrame(history_ref=JUST_MOVED), newpos))
        newpos = self._match_seq(pos, LEXICON.phrases["last_remaining"], "object phrase")
        if newpos is not None:
            out.append((ObjectFrame(history_ref=LAST_REMAINING), newpos))
        newpos = self._match_seq(pos, LEXICON.phrases["same_color_contrast"], "object phrase")
        if newpos is not None:
            out.append((ObjectFrame(same_color_contrast=True), newpos))
        if self.toks[pos:pos + 1] == ["another"]:
            color = self.toks[pos + 1] if pos + 1 < len(self.toks) else None
            if color in LEXICON.colors and self.toks[pos + 2:pos + 3] == ["block"]:
                out.append((ObjectFrame(color=color, history_ref=ANOTHER_SAME_COLOR),
                            pos + 3))
        if depth == 0:
            newpos = self._match_seq(pos, "the block closest to", "object phrase")
            if newpos is not None:
                for ref, refpos in self.parse_object(newpos, depth=1):
                    out.append((ObjectFrame(nearest_to=ref), refpos))
        out.extend(self._parse_plain_object(pos))
        if not out:
            self._miss(pos, "object phrase")
        return out

    def _parse_plain_object(self, pos: int) -> list[tuple[ObjectFrame, int]]:
        """'the [superlative] [color] block [region-pp]' with >=1 constraint."""
        if self.toks[pos:pos + 1] != ["the"]:
            return []
        cur = pos + 1
        superlative = None
        for key, word in LEXICON.superlatives.items():
            if self.toks[cur:cur + 1] == [word]:
                superlative = key
                cur += 1
                break
        color = None
        if self.toks[cur:cur + 1] and self.toks[cur] in LEXICON.colors:
            color = self.toks[cur]
            cur += 1
        if self.toks[cur:cur + 1] != ["block"]:
            self._miss(cur, "'block'")
            return []
        cur += 1
        out = []
        region = self._parse_region_pp(cur)
        if region is not None:
            reg, regpos = region
            out.append((ObjectFrame(color=color, region=reg, superlative=superlative),
                        regpos))
        if color is not None or superlative is not None:
            out.append((ObjectFrame(color=color, superlative=superlative), cur))
        return out

    def _parse_region_pp(self, pos: int):
        """Region modifier inside an object phrase: 'on the left side' etc.
        Rejected when 'of' follows -- that sequence belongs to a relation.
        Region names carry their own 'the'."""
        if self.toks[pos:pos + 1] not in (["in"], ["on"]):
            return None
        match = self._match_region_name(pos + 1)
        if match is None:
            return None
        region, newpos = match
        if self.toks[newpos:newpos + 1] == ["of"]:
            return None
        return region, newpos

    # -- position phrases ---------------------------------------------------

    def parse_position(self, pos: int) -> list[tuple[PositionFrame, int]]:
        out: list[tuple[PositionFrame, int]] = []
        for relation in sorted(RELATIONS, key=lambda r: -len(LEXICON.relations[r].split())):
            newpos = self._match_seq(pos, LEXICON.relations[relation], "position phrase")
            if newpos is None:
                continue
            for ref, refpos in self.parse_object(newpos):
                out.append((PositionFrame(relation=relation, ref=ref), refpos))
        if self.toks[pos:pos + 1] in (["in"], ["on"], ["to"]):
            match = self._match_region_name(pos + 1)
            if match is not None:
                region, newpos = match
                out.append((PositionFrame(region=region), newpos))
        if not out:
            self._miss(pos, "position phrase")
        return out

    # -- sentences ----------------------------------------------------------

    def parse_sentence(self) -> ParsedInstruction:
        end = len(self.toks)
        v1 = self._match_verb(0, LEXICON.pick_verbs, "verb")
        if v1 is not None:
            pick_verb, pos = v1
            for obj, opos in self.parse_object(pos):
                apos = self._match_seq(opos, "and")
                if apos is None:
                    continue
                v2 = self._match_verb(apos, LEXICON.place_verbs, "place verb")
                if v2 is None:
                    continue
                place_verb, vpos = v2
                ipos = self._match_seq(vpos, "it")
                if ipos is None:
                    continue
                for position, ppos in self.parse_position(ipos):
                    if ppos == end:
                        return ParsedInstruction(SCHEMA_CONJOINED, pick_verb,
                                                 place_verb, obj, position)
                    self._miss(ppos, "end of sentence")
        v2 = self._match_verb(0, LEXICON.place_verbs, "verb")
        if v2 is not None:
            place_verb, pos = v2
            for obj, opos in self.parse_object(pos):
                for position, ppos in self.parse_position(opos):
                    if ppos == end:
                        return ParsedInstruction(SCHEMA_SINGLE, None,
                                                 place_verb, obj, position)
                    self._miss(ppos, "end of sentence")
        raise ParseError(
            f"cannot parse at token {self.far_pos}: expected "
            f"{', '.join(sorted(self.far_expected))}",
            position=self.far_pos, expected=sorted(self.far_expected))


def parse(text: str) -> ParsedInstruction:
    return _Parser(_tokens(text)).parse_sentence()
