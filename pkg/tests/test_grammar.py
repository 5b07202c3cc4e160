import hashlib
import itertools

import pytest

from histblocks.errors import ParseError
from histblocks.frames import (
    ANOTHER_SAME_COLOR,
    JUST_MOVED,
    LAST_REMAINING,
    ON_TOP_OF,
    RELATIONS,
    SUPERLATIVES,
    ObjectFrame,
    PositionFrame,
)
from histblocks.grammar import (
    LEXICON,
    SCHEMA_CONJOINED,
    SCHEMA_SINGLE,
    grammar_text,
    realize,
)
from histblocks.parse import parse
from histblocks.world import BANDS, SIDES, Region

# the grammar file is versioned and pinned: changing it must break a test
PINNED_GRAMMAR_SHA = "dd11b21679abd2651130506daceac2a75f1ec68d784fcee840b110d2ce8223d0"


def test_grammar_file_pinned():
    assert LEXICON.version == 1
    digest = hashlib.sha256(grammar_text().encode()).hexdigest()
    assert digest == PINNED_GRAMMAR_SHA, (
        f"grammar.txt changed (sha256 {digest}); bump the version and "
        "update the pin")


def test_lexicon_contents():
    assert LEXICON.pick_verbs == ["take", "pick up", "grab"]
    assert LEXICON.place_verbs == ["place", "put", "move", "stack"]
    assert len(LEXICON.region_names) == 9


class TestRealize:
    def test_schema_conjoined_matches_template(self):
        o = ObjectFrame(color="red")
        p = PositionFrame(relation="left_of", ref=ObjectFrame(color="yellow"))
        text = realize(o, p, SCHEMA_CONJOINED, pick_verb="take", place_verb="place")
        assert text == ("Take the red block and place it on the left side "
                        "of the yellow block.")

    def test_schema_single_matches_template(self):
        o = ObjectFrame(color="red")
        p = PositionFrame(relation="left_of", ref=ObjectFrame(color="yellow"))
        text = realize(o, p, SCHEMA_SINGLE, place_verb="place")
        assert text == "Place the red block on the left side of the yellow block."

    def test_just_moved_to_center(self):
        o = ObjectFrame(history_ref=JUST_MOVED)
        p = PositionFrame(region=Region("middle", "center"))
        text = realize(o, p, SCHEMA_SINGLE, place_verb="move")
        assert text == "Move the block that you just moved to the center."

    def test_region_preposition_depends_on_verb(self):
        o = ObjectFrame(color="red")
        p = PositionFrame(region=Region("middle", "center"))
        assert realize(o, p, SCHEMA_SINGLE, place_verb="place").endswith(
            "in the center.")
        assert realize(o, p, SCHEMA_SINGLE, place_verb="move").endswith(
            "to the center.")

    def test_stack_only_for_on_top_of(self):
        o = ObjectFrame(color="red")
        on_top = PositionFrame(relation=ON_TOP_OF, ref=ObjectFrame(color="blue"))
        lateral = PositionFrame(relation="behind", ref=ObjectFrame(color="blue"))
        assert realize(o, on_top, SCHEMA_SINGLE, place_verb="stack") == \
            "Stack the red block on top of the blue block."
        with pytest.raises(ValueError):
            realize(o, lateral, SCHEMA_SINGLE, place_verb="stack")

    def test_same_color_contrast_phrase(self):
        o = ObjectFrame(color="red", superlative=("col", "min"))
        p = PositionFrame(relation=ON_TOP_OF,
                          ref=ObjectFrame(same_color_contrast=True))
        text = realize(o, p, SCHEMA_CONJOINED, pick_verb="take", place_verb="stack")
        assert text == ("Take the leftmost red block and stack it on top of "
                        "the another same colored block.")


class TestParse:
    def test_paper_sentence(self):
        pi = parse("Place the red block on the left side of the yellow block.")
        assert pi.schema == SCHEMA_SINGLE
        assert pi.object_frame == ObjectFrame(color="red")
        assert pi.position_frame == PositionFrame(
            relation="left_of", ref=ObjectFrame(color="yellow"))

    def test_history_phrases(self):
        pi = parse("Take the last remaining block and put it in the center.")
        assert pi.schema == SCHEMA_CONJOINED
        assert pi.object_frame == ObjectFrame(history_ref=LAST_REMAINING)
        assert pi.position_frame == PositionFrame(region=Region("middle", "center"))

    def test_out_of_grammar(self):
        with pytest.raises(ParseError):
            parse("Frobnicate the block.")

    def test_parse_error_carries_position(self):
        with pytest.raises(ParseError) as exc:
            parse("Take the red block and paint it in the center.")
        assert exc.value.position > 0
        assert exc.value.expected

    def test_missing_period(self):
        with pytest.raises(ParseError):
            parse("Take the red block and place it in the center")

    def test_region_object_vs_relative_position(self):
        # the region modifier must not swallow "on the left side of ..."
        pi = parse("Place the red block on the left side on the rear side.")
        assert pi.object_frame == ObjectFrame(
            color="red", region=Region("middle", "left"))
        assert pi.position_frame == PositionFrame(region=Region("rear", "center"))
        pi = parse("Place the red block on the left side.")
        assert pi.object_frame == ObjectFrame(color="red")
        assert pi.position_frame == PositionFrame(region=Region("middle", "left"))


def _frame_space():
    regions = [Region(b, s) for b in BANDS for s in SIDES]
    simple = [ObjectFrame(color=c) for c in LEXICON.colors]
    simple += [ObjectFrame(color="red", region=r) for r in regions[:3]]
    simple += [ObjectFrame(region=r) for r in regions]
    for sup in SUPERLATIVES:
        simple.append(ObjectFrame(superlative=sup))
        simple.append(ObjectFrame(color="green", superlative=sup))
    simple += [ObjectFrame(history_ref=JUST_MOVED),
               ObjectFrame(history_ref=LAST_REMAINING),
               ObjectFrame(color="blue", history_ref=ANOTHER_SAME_COLOR)]
    objects = simple + [ObjectFrame(nearest_to=f) for f in simple[:14]]
    positions = [PositionFrame(region=r) for r in regions]
    refs = simple[:10] + [ObjectFrame(same_color_contrast=True)]
    positions += [PositionFrame(relation=rel, ref=ref)
                  for rel in RELATIONS for ref in refs]
    return objects, positions


def test_round_trip_identity_over_grammar():
    """parse(realize(f_T, f_P, schema)) recovers the frames and schema for
    every grammar-reachable combination and verb choice."""
    objects, positions = _frame_space()
    checked = 0
    for o, p in itertools.product(objects, positions):
        verbs2 = ["place", "move"] + (["stack"] if p.relation == ON_TOP_OF else [])
        for schema, v1 in ((SCHEMA_CONJOINED, "pick up"), (SCHEMA_CONJOINED, "grab"),
                           (SCHEMA_SINGLE, None)):
            for v2 in verbs2:
                text = realize(o, p, schema, pick_verb=v1, place_verb=v2)
                pi = parse(text)
                assert (pi.object_frame, pi.position_frame, pi.schema) == \
                    (o, p, schema), text
                checked += 1
    assert checked > 10000
