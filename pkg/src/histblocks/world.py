"""Gridded tabletop world: block stacks, manipulation semantics, occlusion,
regions, and the geometric predicates everything else builds on.

The workspace is a value type: operations return new snapshots and never
mutate their inputs, so snapshots can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .errors import (
    BlockNotClear,
    EmptyCandidateSet,
    NoSuchBlock,
    NoUniqueExtreme,
    NoUniqueNearest,
    SelfTarget,
    StackFull,
)

COLORS = ("red", "green", "blue", "yellow", "purple", "orange")

GRID_SIDE = 9
MAX_STACK = 4
MAX_BLOCKS = 10
MAX_SAME_COLOR = 2

BANDS = ("rear", "middle", "front")   # row bands, rear = row 0 side
SIDES = ("left", "center", "right")   # column bands, left = col 0 side


class Cell(NamedTuple):
    col: int
    row: int


class Region(NamedTuple):
    band: str  # rear | middle | front
    side: str  # left | center | right

    @property
    def key(self) -> str:
        return f"{self.band}-{self.side}"

    @staticmethod
    def from_key(key: str) -> "Region":
        band, side = key.split("-")
        if band not in BANDS or side not in SIDES:
            raise ValueError(f"bad region key {key!r}")
        return Region(band, side)


class Action(NamedTuple):
    block: str
    dest: Cell


@dataclass(frozen=True)
class BlockState:
    id: str
    color: str
    cell: Cell
    level: int = 0
    yaw: float = 0.0  # render-only orientation

    def __post_init__(self):
        if self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if self.level < 0:
            raise ValueError("level must be >= 0")


@dataclass(frozen=True)
class Workspace:
    """Snapshot of the tabletop: stacks of blocks on a G x G grid.

    `time` counts completed pick-and-place manipulations and `manipulated`
    lists the moved block ids in order (ids may repeat if a block is moved
    again).
    """

    grid_side: int
    blocks: tuple[BlockState, ...]
    time: int = 0
    manipulated: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(sorted(self.blocks, key=lambda b: b.id))
        )
        self._validate()

    def _validate(self):
        seen_ids = set()
        occupancy = {}
        for b in self.blocks:
            if b.id in seen_ids:
                raise ValueError(f"duplicate block id {b.id!r}")
            seen_ids.add(b.id)
            if not (0 <= b.cell.col < self.grid_side and 0 <= b.cell.row < self.grid_side):
                raise ValueError(f"block {b.id} outside grid: {b.cell}")
            key = (b.cell, b.level)
            if key in occupancy:
                raise ValueError(f"two blocks at {key}")
            occupancy[key] = b.id
        # stack integrity: levels contiguous from 0 within each cell
        for (cell, level) in occupancy:
            if level > 0 and (cell, level - 1) not in occupancy:
                raise ValueError(f"floating block at {cell} level {level}")

    # -- queries ----------------------------------------------------------

    def block(self, block_id: str) -> BlockState:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise NoSuchBlock(block_id)

    def has_block(self, block_id: str) -> bool:
        return any(b.id == block_id for b in self.blocks)

    def stack_at(self, cell: Cell) -> tuple[BlockState, ...]:
        """Blocks at `cell`, bottom to top."""
        return tuple(sorted((b for b in self.blocks if b.cell == cell),
                            key=lambda b: b.level))

    def height_at(self, cell: Cell) -> int:
        return len(self.stack_at(cell))

    def top_at(self, cell: Cell) -> Optional[BlockState]:
        stack = self.stack_at(cell)
        return stack[-1] if stack else None

    def is_clear(self, block_id: str) -> bool:
        b = self.block(block_id)
        return not any(o.cell == b.cell and o.level == b.level + 1 for o in self.blocks)

    def occupied_cells(self) -> set[Cell]:
        return {b.cell for b in self.blocks}

    def free_cells(self) -> list[Cell]:
        occupied = self.occupied_cells()
        return [Cell(c, r) for r in range(self.grid_side)
                for c in range(self.grid_side) if Cell(c, r) not in occupied]


def apply_action(ws: Workspace, action: Action) -> Workspace:
    """Pick `action.block` and place it on top of the stack at `action.dest`.

    Returns a new workspace; raises if the pick or place is illegal.
    """
    b = ws.block(action.block)
    if not ws.is_clear(b.id):
        raise BlockNotClear(f"{b.id} is covered and cannot be picked")
    dest_stack = ws.stack_at(action.dest)
    if action.dest == b.cell and len(dest_stack) == 1:
        raise SelfTarget(f"{b.id} is the only occupant of {action.dest}")
    if len(dest_stack) >= MAX_STACK:
        raise StackFull(f"stack at {action.dest} is full")
    new_level = len(dest_stack) - 1 if action.dest == b.cell else len(dest_stack)
    moved = BlockState(b.id, b.color, action.dest, new_level, b.yaw)
    blocks = tuple(o for o in ws.blocks if o.id != b.id) + (moved,)
    return Workspace(ws.grid_side, blocks, ws.time + 1, ws.manipulated + (b.id,))


def visible_blocks(ws: Workspace) -> set[str]:
    """Ids of blocks visible from the overhead camera: the top of each stack."""
    tops = {}
    for b in ws.blocks:
        cur = tops.get(b.cell)
        if cur is None or b.level > cur.level:
            tops[b.cell] = b
    return {b.id for b in tops.values()}


def is_occluded(ws: Workspace, block_id: str) -> bool:
    if not ws.has_block(block_id):
        raise NoSuchBlock(block_id)
    return block_id not in visible_blocks(ws)


def region_of(cell: Cell, grid_side: int = GRID_SIDE) -> Region:
    """3x3 bucketing of the grid; rows [0, G/3) are the rear band and
    cols [0, G/3) the left band (human view: col grows rightward, row grows
    toward the human)."""
    third = grid_side // 3
    return Region(BANDS[min(cell.row // third, 2)], SIDES[min(cell.col // third, 2)])


def region_cells(region: Region, grid_side: int = GRID_SIDE) -> list[Cell]:
    third = grid_side // 3
    r0 = BANDS.index(region.band) * third
    c0 = SIDES.index(region.side) * third
    return [Cell(c, r) for r in range(r0, r0 + third) for c in range(c0, c0 + third)]


def region_center(region: Region, grid_side: int = GRID_SIDE) -> Cell:
    third = grid_side // 3
    half = third // 2
    return Cell(SIDES.index(region.side) * third + half,
                BANDS.index(region.band) * third + half)


def superlative(ws: Workspace, axis: str, direction: str,
                among: Iterable[str]) -> str:
    """Unique arg-extreme of a cell coordinate among the given block ids.

    axis: "col" | "row"; direction: "min" | "max". A tie raises
    NoUniqueExtreme (the phrase would be ambiguous).
    """
    ids = list(among)
    if not ids:
        raise EmptyCandidateSet("superlative over empty set")
    coord = {bid: getattr(ws.block(bid).cell, axis) for bid in ids}
    best = min(coord.values()) if direction == "min" else max(coord.values())
    winners = [bid for bid in ids if coord[bid] == best]
    if len(winners) != 1:
        raise NoUniqueExtreme(f"{len(winners)} blocks at {axis}={best}")
    return winners[0]


def nearest_block(ws: Workspace, ref: str) -> str:
    """Unique Euclidean-nearest other block by cell-center distance."""
    r = ws.block(ref)
    others = [b for b in ws.blocks if b.id != ref]
    if not others:
        raise EmptyCandidateSet("no other blocks")
    # squared integer distance keeps tie detection exact
    d2 = {b.id: (b.cell.col - r.cell.col) ** 2 + (b.cell.row - r.cell.row) ** 2
          for b in others}
    best = min(d2.values())
    winners = [bid for bid, v in d2.items() if v == best]
    if len(winners) != 1:
        raise NoUniqueNearest(f"{len(winners)} blocks at distance^2 {best}")
    return winners[0]
