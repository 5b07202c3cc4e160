"""Lexicon loading and surface realization of semantic frames.

The lexicon lives in grammar.txt (versioned, pinned by tests). Sentences
follow two schemas:

    1: (V1) (T) and (V2) it (P)     e.g. "Take the red block and place it
                                          on the left side of the yellow block."
    2: (V2) (T) (P)                 e.g. "Place the red block on the left
                                          side of the yellow block."

Realization is deterministic given the frames, the schema, and the chosen
verbs; an rng may pick the verbs instead.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

from .frames import ANOTHER_SAME_COLOR, JUST_MOVED, LAST_REMAINING, ON_TOP_OF
from .frames import ObjectFrame, PositionFrame
from .world import Region

SCHEMA_CONJOINED = 1  # V1 T and V2 it P
SCHEMA_SINGLE = 2     # V2 T P


@dataclass
class Lexicon:
    version: int = 0
    pick_verbs: list[str] = field(default_factory=list)
    place_verbs: list[str] = field(default_factory=list)
    colors: list[str] = field(default_factory=list)
    superlatives: dict[tuple[str, str], str] = field(default_factory=dict)
    region_preps: dict[str, str] = field(default_factory=dict)
    region_names: dict[str, str] = field(default_factory=dict)
    relations: dict[str, str] = field(default_factory=dict)
    phrases: dict[str, str] = field(default_factory=dict)


def _parse_grammar(text: str) -> Lexicon:
    lex = Lexicon()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "version":
            lex.version = int(value)
        elif key == "verb.pick":
            lex.pick_verbs.append(value)
        elif key == "verb.place":
            lex.place_verbs.append(value)
        elif key == "color":
            lex.colors.append(value)
        elif key.startswith("superlative."):
            _, axis, direction = key.split(".")
            lex.superlatives[(axis, direction)] = value
        elif key.startswith("region."):
            region_key = key.split(".", 1)[1]
            prep, _, name = value.partition("|")
            lex.region_preps[region_key] = prep.strip()
            lex.region_names[region_key] = name.strip()
        elif key.startswith("relation."):
            lex.relations[key.split(".", 1)[1]] = value
        elif key.startswith("phrase."):
            lex.phrases[key.split(".", 1)[1]] = value
        else:
            raise ValueError(f"unknown grammar entry {key!r}")
    return lex


def grammar_text() -> str:
    return importlib.resources.files(__package__).joinpath("grammar.txt").read_text()


LEXICON = _parse_grammar(grammar_text())


# --- phrase realization ----------------------------------------------------

def object_phrase(f: ObjectFrame) -> str:
    if f.history_ref == JUST_MOVED:
        return LEXICON.phrases["just_moved"]
    if f.history_ref == LAST_REMAINING:
        return LEXICON.phrases["last_remaining"]
    if f.history_ref == ANOTHER_SAME_COLOR:
        return f"another {f.color} block"
    if f.same_color_contrast:
        return LEXICON.phrases["same_color_contrast"]
    if f.nearest_to is not None:
        return f"the block closest to {object_phrase(f.nearest_to)}"
    words = ["the"]
    if f.superlative is not None:
        words.append(LEXICON.superlatives[f.superlative])
    if f.color is not None:
        words.append(f.color)
    words.append("block")
    phrase = " ".join(words)
    if f.region is not None:
        phrase += f" {region_pp(f.region)}"
    return phrase


def region_pp(region: Region, prep: str | None = None) -> str:
    key = region.key
    return f"{prep or LEXICON.region_preps[key]} {LEXICON.region_names[key]}"


def position_phrase(p: PositionFrame, place_verb: str) -> str:
    if p.region is not None:
        # "move" pairs with "to the center"; other verbs keep the region's
        # own preposition ("in the center", "on the left side").
        prep = "to" if place_verb == "move" else None
        return region_pp(p.region, prep)
    return f"{LEXICON.relations[p.relation]} {object_phrase(p.ref)}"


def realize(object_frame: ObjectFrame, position_frame: PositionFrame,
            schema: int, pick_verb: str | None = None,
            place_verb: str | None = None, rng=None) -> str:
    """Assemble a full sentence from frames.

    Verbs may be given explicitly or sampled from `rng`; "stack" is only
    used for on-top-of placements.
    """
    place_pool = list(LEXICON.place_verbs)
    if position_frame.relation != ON_TOP_OF and "stack" in place_pool:
        place_pool.remove("stack")
    if place_verb is None:
        place_verb = place_pool[int(rng.integers(len(place_pool)))] if rng is not None else place_pool[0]
    elif place_verb not in place_pool:
        raise ValueError(f"verb {place_verb!r} not usable here")
    target = object_phrase(object_frame)
    position = position_phrase(position_frame, place_verb)
    if schema == SCHEMA_SINGLE:
        sentence = f"{place_verb} {target} {position}"
    elif schema == SCHEMA_CONJOINED:
        if pick_verb is None:
            pick_verb = (LEXICON.pick_verbs[int(rng.integers(len(LEXICON.pick_verbs)))]
                         if rng is not None else LEXICON.pick_verbs[0])
        elif pick_verb not in LEXICON.pick_verbs:
            raise ValueError(f"unknown pick verb {pick_verb!r}")
        sentence = f"{pick_verb} {target} and {place_verb} it {position}"
    else:
        raise ValueError(f"unknown schema {schema}")
    return sentence[0].upper() + sentence[1:] + "."
