"""History-dependency annotation.

A phrase depends on the manipulation history two ways:

  * explicitly, when it contains a construct that can only be interpreted
    by recalling how blocks were moved ("the block that you just moved");
  * implicitly, when a block it mentions is currently occluded and must be
    recalled from remembered state.

Each dependency carries the history time indices of the manipulations that
must be consulted; distances are current time minus those indices.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotOccluded
from .frames import (
    ANOTHER_SAME_COLOR,
    JUST_MOVED,
    LAST_REMAINING,
    ObjectFrame,
    PositionFrame,
)
from .resolve import ResolveCtx, omniscient_ctx, resolve_object
from .world import Action, Cell, Workspace, is_occluded, visible_blocks


@dataclass(frozen=True)
class HistoryRecord:
    time: int
    block: str
    src: Cell
    src_level: int
    dst: Cell
    dst_level: int
    occluded: tuple[str, ...]  # blocks this placement covered


def make_record(before: Workspace, after: Workspace, action: Action) -> HistoryRecord:
    b0 = before.block(action.block)
    b1 = after.block(action.block)
    covered = tuple(sorted(visible_blocks(before) - visible_blocks(after)))
    return HistoryRecord(before.time, action.block, b0.cell, b0.level,
                         b1.cell, b1.level, covered)


@dataclass(frozen=True)
class DepInfo:
    explicit: bool
    implicit: bool
    history_indices: tuple[int, ...]
    distances: tuple[int, ...]

    @property
    def any(self) -> bool:
        return self.explicit or self.implicit

    @staticmethod
    def none() -> "DepInfo":
        return DepInfo(False, False, (), ())


def _make_dep(explicit: bool, implicit: bool, indices: set[int],
              current_time: int) -> DepInfo:
    idx = tuple(sorted(indices))
    return DepInfo(explicit, implicit, idx,
                   tuple(sorted(current_time - i for i in idx)))


@dataclass(frozen=True)
class StepAnnotation:
    pick: DepInfo
    place: DepInfo

    @property
    def category(self) -> str:
        """Table-layout category: which phrase needs the history."""
        if self.pick.any and self.place.any:
            return "both"
        if self.pick.any:
            return "pick"
        if self.place.any:
            return "place"
        return "none"


def explicit_indices(frame: ObjectFrame, ws: Workspace,
                     history: list[HistoryRecord], current_time: int) -> set[int]:
    """Time indices an explicit construct refers to."""
    ref = frame.history_ref
    if ref == JUST_MOVED:
        return {current_time - 1}
    if ref == ANOTHER_SAME_COLOR:
        return {r.time for r in history if ws.block(r.block).color == frame.color}
    if ref == LAST_REMAINING:
        # recalling every prior manipulation is what rules the others out
        return set(range(current_time))
    return set()


def implicit_indices(block_id: str, ws: Workspace,
                     history: list[HistoryRecord], current_time: int) -> set[int]:
    """When the occluded block reached its position and when it was covered
    (the latest cover event, if it was uncovered and covered again)."""
    if not is_occluded(ws, block_id):
        raise NotOccluded(block_id)
    out: set[int] = set()
    moved = [r.time for r in history if r.block == block_id]
    if moved:  # a never-moved block contributes only its occlusion index
        out.add(max(moved))
    covered = [r.time for r in history if block_id in r.occluded]
    if covered:
        out.add(max(covered))
    return out


def _mentioned_blocks(frame: ObjectFrame, ctx: ResolveCtx) -> list[str]:
    """The blocks a phrase talks about: its denotee plus nested references."""
    ids = [resolve_object(frame, ctx)]
    if frame.nearest_to is not None:
        ids.extend(_mentioned_blocks(frame.nearest_to, ctx))
    return ids


def _classify(frame: ObjectFrame, ws: Workspace, history: list[HistoryRecord],
              current_time: int, ctx: ResolveCtx) -> DepInfo:
    indices: set[int] = set()
    explicit = False
    stack = [frame]
    while stack:
        f = stack.pop()
        if f.history_ref is not None:
            explicit = True
            indices |= explicit_indices(f, ws, history, current_time)
        if f.nearest_to is not None:
            stack.append(f.nearest_to)
    implicit = False
    for bid in _mentioned_blocks(frame, ctx):
        if is_occluded(ws, bid):
            implicit = True
            indices |= implicit_indices(bid, ws, history, current_time)
    return _make_dep(explicit, implicit, indices, current_time)


def classify_object(frame: ObjectFrame, ws: Workspace,
                    history: list[HistoryRecord], current_time: int) -> DepInfo:
    """Dependency annotation of a pick phrase."""
    ctx = omniscient_ctx(ws, tuple(r.block for r in history))
    return _classify(frame, ws, history, current_time, ctx)


def classify_position(frame: PositionFrame, ws: Workspace,
                      history: list[HistoryRecord], current_time: int,
                      target: str, target_color: str | None) -> DepInfo:
    """Dependency annotation of a place phrase. Region phrases mention no
    blocks and never depend on history."""
    if frame.region is not None:
        return DepInfo.none()
    ctx = omniscient_ctx(ws, tuple(r.block for r in history))
    ctx = ResolveCtx(ctx.grid_side, ctx.blocks, ctx.manipulated,
                     target=target, target_color=target_color)
    return _classify(frame.ref, ws, history, current_time, ctx)
