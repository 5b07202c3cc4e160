"""Resolution of semantic frames against a workspace view.

Two solver modes share the same resolution code and differ only in the
view they are given:

  * omniscient -- sees every block (occluded ones included) and the
    manipulation order taken from the history record log. This is the
    ground-truth oracle.
  * blind -- sees only the blocks visible from the overhead camera and has
    no manipulation history; history constructs are unevaluable and raise
    Unresolvable. This is the no-history ablation solver.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import Ambiguous, CellOccupiedConflict, Unresolvable
from .frames import (
    ANOTHER_SAME_COLOR,
    JUST_MOVED,
    LAST_REMAINING,
    ON_TOP_OF,
    RELATION_DELTA,
    ObjectFrame,
    PositionFrame,
)
from .parse import parse
from .render import BBox, cell_box, footprint_box
from .world import (
    MAX_STACK,
    BlockState,
    Cell,
    Region,
    Workspace,
    region_cells,
    region_center,
    region_of,
    visible_blocks,
)

OMNISCIENT = "omniscient"
BLIND = "blind"


@dataclass(frozen=True)
class ResolveCtx:
    """A solver's view of the world: candidate blocks plus, when available,
    the manipulation order.

    `target` is set while resolving the sentence's position phrase: a
    reference never denotes the block being picked (it is in the gripper by
    placing time), so candidate sets exclude it. Occupancy (`heights`) stays
    the observed pre-pick scene.
    """

    grid_side: int
    blocks: tuple[BlockState, ...]
    manipulated: Optional[tuple[str, ...]]
    target: Optional[str] = None
    target_color: Optional[str] = None

    def state(self, block_id: str) -> BlockState:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise Unresolvable(f"block {block_id} not in view")

    def candidates(self) -> tuple[BlockState, ...]:
        if self.target is None:
            return self.blocks
        return tuple(b for b in self.blocks if b.id != self.target)

    def heights(self) -> dict[Cell, int]:
        # every stack has a visible top, so even the blind view knows the
        # full occupancy map: height = top level + 1
        out: dict[Cell, int] = {}
        for b in self.blocks:
            out[b.cell] = max(out.get(b.cell, 0), b.level + 1)
        return out


def omniscient_ctx(ws: Workspace, manipulated: tuple[str, ...]) -> ResolveCtx:
    return ResolveCtx(ws.grid_side, ws.blocks, tuple(manipulated))


def blind_ctx(ws: Workspace) -> ResolveCtx:
    vis = visible_blocks(ws)
    return ResolveCtx(ws.grid_side,
                      tuple(b for b in ws.blocks if b.id in vis), None)


def make_ctx(ws: Workspace, history, mode: str) -> ResolveCtx:
    if mode == OMNISCIENT:
        return omniscient_ctx(ws, tuple(r.block for r in history))
    if mode == BLIND:
        return blind_ctx(ws)
    raise ValueError(f"unknown mode {mode!r}")


def _sole(candidates: list[BlockState], what: str) -> str:
    if not candidates:
        raise Unresolvable(f"no block matches {what}")
    if len(candidates) > 1:
        raise Ambiguous(f"{len(candidates)} blocks match {what}",
                        candidates=[b.id for b in candidates])
    return candidates[0].id


def resolve_object(frame: ObjectFrame, ctx: ResolveCtx) -> str:
    """Return the id of the sole block the frame denotes in this view."""
    if frame.same_color_contrast:
        if ctx.target is None or ctx.target_color is None:
            raise Unresolvable("no color-bearing sibling phrase")
        cands = [b for b in ctx.candidates() if b.color == ctx.target_color]
        return _sole(cands, "same-colored contrast")

    if frame.nearest_to is not None:
        ref_id = resolve_object(frame.nearest_to, ctx)
        ref = ctx.state(ref_id)
        others = [b for b in ctx.candidates() if b.id != ref_id]
        if not others:
            raise Unresolvable("no other blocks near the reference")
        d2 = {b.id: (b.cell.col - ref.cell.col) ** 2 + (b.cell.row - ref.cell.row) ** 2
              for b in others}
        best = min(d2.values())
        winners = [b for b in others if d2[b.id] == best]
        return _sole(winners, "closest block")

    cands = list(ctx.candidates())
    if frame.color is not None:
        cands = [b for b in cands if b.color == frame.color]
    if frame.region is not None:
        cands = [b for b in cands if region_of(b.cell, ctx.grid_side) == frame.region]
    if frame.history_ref is not None:
        if ctx.manipulated is None:
            raise Unresolvable("history reference without history")
        moved = set(ctx.manipulated)
        if frame.history_ref == JUST_MOVED:
            if not ctx.manipulated:
                raise Unresolvable("nothing has been moved yet")
            cands = [b for b in cands if b.id == ctx.manipulated[-1]]
        elif frame.history_ref == ANOTHER_SAME_COLOR:
            colors = {ctx.state(m).color for m in moved if any(b.id == m for b in ctx.blocks)}
            if frame.color not in colors:
                raise Unresolvable(f"no {frame.color} block was moved before")
            cands = [b for b in cands if b.id not in moved]
        elif frame.history_ref == LAST_REMAINING:
            cands = [b for b in cands if b.id not in moved]
    if frame.superlative is not None:
        if not cands:
            raise Unresolvable("no candidates for superlative")
        axis, direction = frame.superlative
        coords = {b.id: getattr(b.cell, axis) for b in cands}
        best = min(coords.values()) if direction == "min" else max(coords.values())
        cands = [b for b in cands if coords[b.id] == best]
        if len(cands) > 1:
            raise Ambiguous("superlative tie", candidates=[b.id for b in cands])
    return _sole(cands, "object phrase")


def region_anchor(region: Region, heights: dict[Cell, int],
                  grid_side: int) -> Optional[Cell]:
    """The cell a bare region phrase denotes: the region's center cell if
    free, otherwise the free cell nearest the center (row-major tiebreak)."""
    center = region_center(region, grid_side)
    if heights.get(center, 0) == 0:
        return center
    free = [c for c in region_cells(region, grid_side) if heights.get(c, 0) == 0]
    if not free:
        return None
    free.sort(key=lambda c: ((c.col - center.col) ** 2 + (c.row - center.row) ** 2,
                             c.row, c.col))
    return free[0]


def resolve_position(frame: PositionFrame, ctx: ResolveCtx) -> tuple[Cell, int]:
    """Return the destination (cell, landing level) the frame denotes."""
    heights = ctx.heights()
    if frame.region is not None:
        anchor = region_anchor(frame.region, heights, ctx.grid_side)
        if anchor is None:
            raise Unresolvable(f"no free cell in {frame.region.key}")
        return anchor, 0

    ref_id = resolve_object(frame.ref, ctx)
    ref = ctx.state(ref_id)
    if frame.relation == ON_TOP_OF:
        height = heights[ref.cell]
        if ref.level != height - 1:
            raise CellOccupiedConflict(f"{ref_id} is covered; cannot stack on it")
        if height >= MAX_STACK:
            raise CellOccupiedConflict(f"stack at {ref.cell} is full")
        return ref.cell, ref.level + 1
    dcol, drow = RELATION_DELTA[frame.relation]
    cell = Cell(ref.cell.col + dcol, ref.cell.row + drow)
    if not (0 <= cell.col < ctx.grid_side and 0 <= cell.row < ctx.grid_side):
        raise Unresolvable(f"{frame.relation} of {ref_id} is off the grid")
    height = heights.get(cell, 0)
    if height >= MAX_STACK:
        raise CellOccupiedConflict(f"stack at {cell} is full")
    return cell, height


@dataclass(frozen=True)
class Resolution:
    block: str
    dest: Cell
    level: int
    object_box: BBox
    position_box: BBox


def resolve_pair(object_frame: ObjectFrame, position_frame: PositionFrame,
                 ctx: ResolveCtx) -> tuple[str, Cell, int]:
    block = resolve_object(object_frame, ctx)
    tctx = replace(ctx, target=block, target_color=object_frame.color)
    dest, level = resolve_position(position_frame, tctx)
    return block, dest, level


def blind_outcomes(object_frame: ObjectFrame, position_frame: PositionFrame,
                   ws: Workspace):
    """Per-phrase blind resolution: (block or None, error or None,
    (cell, level) or None, error or None). The position side inherits the
    sentence target only when the object side succeeded."""
    ctx = blind_ctx(ws)
    block = obj_err = pos = pos_err = None
    try:
        block = resolve_object(object_frame, ctx)
    except (Unresolvable, Ambiguous, CellOccupiedConflict) as e:
        obj_err = e
    tctx = replace(ctx, target=block,
                   target_color=object_frame.color if block is not None else None)
    try:
        pos = resolve_position(position_frame, tctx)
    except (Unresolvable, Ambiguous, CellOccupiedConflict) as e:
        pos_err = e
    return block, obj_err, pos, pos_err


def ground(text: str, ws: Workspace, history, mode: str,
           raster_px: int = 128) -> Resolution:
    """Parse an instruction and resolve it to a concrete manipulation with
    the two bounding boxes to compare against predictions."""
    parsed = parse(text)
    ctx = make_ctx(ws, history, mode)
    block, dest, level = resolve_pair(parsed.object_frame, parsed.position_frame, ctx)
    return Resolution(
        block=block, dest=dest, level=level,
        object_box=footprint_box(ctx.state(block), ws.grid_side, raster_px),
        position_box=cell_box(dest, ws.grid_side, raster_px),
    )
