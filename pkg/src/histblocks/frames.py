"""Semantic frames: the structured constraints an instruction phrase encodes.

ObjectFrame describes a block, PositionFrame a placement. Frames are plain
values so they serialize cleanly and support exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .world import COLORS, Region

JUST_MOVED = "just_moved"
ANOTHER_SAME_COLOR = "another_same_color"
LAST_REMAINING = "last_remaining"
HISTORY_REFS = (JUST_MOVED, ANOTHER_SAME_COLOR, LAST_REMAINING)

LEFT_OF = "left_of"
RIGHT_OF = "right_of"
FRONT_OF = "front_of"
BEHIND = "behind"
ON_TOP_OF = "on_top_of"
RELATIONS = (LEFT_OF, RIGHT_OF, FRONT_OF, BEHIND, ON_TOP_OF)

# lateral relations as (dcol, drow) from the reference block, human view
RELATION_DELTA = {
    LEFT_OF: (-1, 0),
    RIGHT_OF: (1, 0),
    FRONT_OF: (0, 1),
    BEHIND: (0, -1),
}

SUPERLATIVES = (("col", "min"), ("col", "max"), ("row", "max"), ("row", "min"))


@dataclass(frozen=True)
class ObjectFrame:
    color: Optional[str] = None
    region: Optional[Region] = None
    superlative: Optional[tuple[str, str]] = None  # (axis, dir)
    nearest_to: Optional["ObjectFrame"] = None
    history_ref: Optional[str] = None
    same_color_contrast: bool = False

    def __post_init__(self):
        if self.color is not None and self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if self.history_ref is not None and self.history_ref not in HISTORY_REFS:
            raise ValueError(f"unknown history ref {self.history_ref!r}")
        if self.superlative is not None and self.superlative not in SUPERLATIVES:
            raise ValueError(f"unknown superlative {self.superlative!r}")
        if not any([self.color, self.region, self.superlative, self.nearest_to,
                    self.history_ref, self.same_color_contrast]):
            raise ValueError("object frame needs at least one constraint")
        if self.history_ref == ANOTHER_SAME_COLOR and self.color is None:
            raise ValueError("another_same_color requires a color")
        if self.nearest_to is not None and self.nearest_to.nearest_to is not None:
            raise ValueError("nearest_to nesting depth exceeds 1")

    def contains_history_ref(self) -> bool:
        if self.history_ref is not None:
            return True
        if self.nearest_to is not None:
            return self.nearest_to.contains_history_ref()
        return False


@dataclass(frozen=True)
class PositionFrame:
    region: Optional[Region] = None
    relation: Optional[str] = None
    ref: Optional[ObjectFrame] = None

    def __post_init__(self):
        if (self.region is None) == (self.relation is None):
            raise ValueError("position frame is either a region or a relation")
        if self.relation is not None:
            if self.relation not in RELATIONS:
                raise ValueError(f"unknown relation {self.relation!r}")
            if self.ref is None:
                raise ValueError("relative position frame needs a reference")
        if self.region is not None and self.ref is not None:
            raise ValueError("region position frame takes no reference")

    def contains_history_ref(self) -> bool:
        return self.ref is not None and self.ref.contains_history_ref()


# --- serialization --------------------------------------------------------

def object_frame_to_dict(f: ObjectFrame) -> dict:
    d = {}
    if f.color:
        d["color"] = f.color
    if f.region:
        d["region"] = f.region.key
    if f.superlative:
        d["superlative"] = {"axis": f.superlative[0], "dir": f.superlative[1]}
    if f.nearest_to:
        d["nearest_to"] = object_frame_to_dict(f.nearest_to)
    if f.history_ref:
        d["history_ref"] = f.history_ref
    if f.same_color_contrast:
        d["same_color_contrast"] = True
    return d


def object_frame_from_dict(d: dict) -> ObjectFrame:
    sup = d.get("superlative")
    return ObjectFrame(
        color=d.get("color"),
        region=Region.from_key(d["region"]) if "region" in d else None,
        superlative=(sup["axis"], sup["dir"]) if sup else None,
        nearest_to=object_frame_from_dict(d["nearest_to"]) if "nearest_to" in d else None,
        history_ref=d.get("history_ref"),
        same_color_contrast=bool(d.get("same_color_contrast", False)),
    )


def position_frame_to_dict(f: PositionFrame) -> dict:
    if f.region is not None:
        return {"region": f.region.key}
    return {"relation": f.relation, "ref": object_frame_to_dict(f.ref)}


def position_frame_from_dict(d: dict) -> PositionFrame:
    if "region" in d:
        return PositionFrame(region=Region.from_key(d["region"]))
    return PositionFrame(relation=d["relation"],
                         ref=object_frame_from_dict(d["ref"]))
