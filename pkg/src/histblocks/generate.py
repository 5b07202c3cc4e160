"""Procedural task generation: initial scatter, a plan of pick-and-place
actions with at least one occlusion event, and per-step instructions with
ground truth.

Everything is driven by numpy's seed-sequence machinery so a config seed
reproduces the dataset byte for byte; scenario regeneration after an
infeasible draw uses a derived sub-seed (seed, scenario index, attempt).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .annotate import HistoryRecord, make_record
from .errors import (
    GenerationExhausted,
    GridTooSmall,
    InsufficientUniquePhrasings,
    NoDistinguishingFrame,
    PlanInfeasible,
)
from .instructions import Instruction, generate_instructions
from .render import RASTER_PX, BBox, block_box, cell_box
from .resolve import region_anchor
from .world import (
    COLORS,
    GRID_SIDE,
    MAX_BLOCKS,
    MAX_SAME_COLOR,
    MAX_STACK,
    Action,
    BlockState,
    Cell,
    Region,
    Workspace,
    apply_action,
    visible_blocks,
)

PLAN_ATTEMPTS = 24
SCENARIO_ATTEMPTS = 64
STACK_BIAS = 0.45        # chance a step stacks instead of placing on the table
DESCRIBABLE_BIAS = 0.8   # chance a table destination is an anchor/adjacent cell
TWIN_WEIGHT = 3.0        # preference for targets whose color twin already moved


@dataclass
class GenConfig:
    seed: int = 0
    n_tasks: int = 120
    n_blocks: tuple[int, int] = (4, 8)
    steps: tuple[int, int] = (4, 8)
    instructions: tuple[int, int] = (3, 12)
    grid_side: int = GRID_SIDE
    train_ratio: float = 5.0 / 6.0
    raster_px: int = RASTER_PX

    def __post_init__(self):
        for name in ("n_blocks", "steps", "instructions"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: min {lo} > max {hi}")
        if self.n_blocks[1] > MAX_BLOCKS:
            raise ValueError(f"at most {MAX_BLOCKS} blocks")
        if self.steps[0] > self.n_blocks[1]:
            raise ValueError("steps cannot exceed the number of blocks")
        if self.grid_side % 3 != 0:
            raise ValueError("grid side must be divisible by 3")
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError("train_ratio must be in (0, 1)")

    @property
    def train_count(self) -> int:
        return round(self.n_tasks * self.train_ratio)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "n_tasks": self.n_tasks,
            "n_blocks": list(self.n_blocks), "steps": list(self.steps),
            "instructions": list(self.instructions),
            "grid_side": self.grid_side, "train_ratio": self.train_ratio,
            "raster_px": self.raster_px,
        }

    @staticmethod
    def from_dict(d: dict) -> "GenConfig":
        kwargs = dict(d)
        for name in ("n_blocks", "steps", "instructions"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return GenConfig(**kwargs)

    @staticmethod
    def from_file(path) -> "GenConfig":
        with open(path) as fh:
            return GenConfig.from_dict(json.load(fh))


@dataclass
class Step:
    time: int
    pre: Workspace
    action: Action
    gt_object_box: BBox
    gt_position_box: BBox
    instructions: list[Instruction]
    rgb: str
    depth: str
    depth_vis: str


@dataclass
class Scenario:
    scenario_id: str
    seed_key: tuple[int, int, int]  # (config seed, scenario index, attempt)
    initial: Workspace
    steps: list[Step]

    @property
    def actions(self) -> list[Action]:
        return [s.action for s in self.steps]


def gen_initial_layout(rng: np.random.Generator, n_blocks: int,
                       grid_side: int = GRID_SIDE) -> Workspace:
    """Scatter blocks at distinct cells on the table, at most two per color,
    with random render-only orientation."""
    if n_blocks > grid_side * grid_side:
        raise GridTooSmall(f"{n_blocks} blocks on a {grid_side}x{grid_side} grid")
    if n_blocks > MAX_SAME_COLOR * len(COLORS):
        raise GridTooSmall("not enough colors")
    cells = rng.choice(grid_side * grid_side, size=n_blocks, replace=False)
    counts: dict[str, int] = {}
    blocks = []
    for i, idx in enumerate(cells):
        available = [c for c in COLORS if counts.get(c, 0) < MAX_SAME_COLOR]
        color = available[int(rng.integers(len(available)))]
        counts[color] = counts.get(color, 0) + 1
        blocks.append(BlockState(
            id=f"b{i}", color=color,
            cell=Cell(int(idx) % grid_side, int(idx) // grid_side),
            level=0, yaw=float(rng.uniform(0.0, 2.0 * math.pi))))
    return Workspace(grid_side, tuple(blocks))


def _pick_target(rng, ws: Workspace, moved: set[str]) -> Optional[str]:
    candidates = [b for b in ws.blocks
                  if b.id not in moved and ws.is_clear(b.id)]
    if not candidates:
        return None
    moved_colors = {ws.block(m).color for m in moved}
    weights = np.array([TWIN_WEIGHT if b.color in moved_colors else 1.0
                        for b in candidates])
    i = rng.choice(len(candidates), p=weights / weights.sum())
    return candidates[int(i)].id


def _pick_destination(rng, ws: Workspace, block_id: str) -> Optional[Cell]:
    b = ws.block(block_id)
    heights = {c: ws.height_at(c) for c in ws.occupied_cells()}
    stackable = [c for c in sorted(heights) if c != b.cell and heights[c] < MAX_STACK]
    empty = ws.free_cells()
    if stackable and rng.random() < STACK_BIAS:
        return stackable[int(rng.integers(len(stackable)))]
    if not empty:
        return None
    # bias table placements toward cells a phrase can denote: region anchors
    # and cells laterally adjacent to some other block
    anchors = set()
    for band in ("rear", "middle", "front"):
        for side in ("left", "center", "right"):
            a = region_anchor(Region(band, side), heights, ws.grid_side)
            if a is not None:
                anchors.add(a)
    adjacent = set()
    for cell in heights:
        if cell == b.cell and heights[cell] == 1:
            continue  # the target leaves this cell
        for dc, dr in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            adjacent.add(Cell(cell.col + dc, cell.row + dr))
    preferred = [c for c in empty if c in anchors or c in adjacent]
    pool = preferred if preferred and rng.random() < DESCRIBABLE_BIAS else empty
    return pool[int(rng.integers(len(pool)))]


def gen_plan(rng: np.random.Generator, ws: Workspace,
             n_steps: int) -> list[Action]:
    """A legal plan moving `n_steps` distinct, currently clear blocks, with
    at least one occlusion event whenever n_steps >= 3."""
    if n_steps > len(ws.blocks):
        raise PlanInfeasible("more steps than blocks")
    for _ in range(PLAN_ATTEMPTS):
        cur = ws
        plan: list[Action] = []
        moved: set[str] = set()
        occluded_any = False
        for _ in range(n_steps):
            target = _pick_target(rng, cur, moved)
            if target is None:
                break
            dest = _pick_destination(rng, cur, target)
            if dest is None:
                break
            action = Action(target, dest)
            before = visible_blocks(cur)
            cur = apply_action(cur, action)
            if before - visible_blocks(cur):
                occluded_any = True
            plan.append(action)
            moved.add(target)
        if len(plan) == n_steps and (n_steps < 3 or occluded_any):
            return plan
    raise PlanInfeasible(f"no plan of {n_steps} steps found")


def build_scenario(cfg: GenConfig, index: int) -> Scenario:
    """Compose layout, plan, instructions, annotations, and ground truth for
    one task; retries with a derived sub-seed until everything fits."""
    for attempt in range(SCENARIO_ATTEMPTS):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(index, attempt)))
        n_blocks = int(rng.integers(cfg.n_blocks[0], cfg.n_blocks[1] + 1))
        hi = min(cfg.steps[1], n_blocks)
        lo = min(cfg.steps[0], hi)
        n_steps = int(rng.integers(lo, hi + 1))
        layout = gen_initial_layout(rng, n_blocks, cfg.grid_side)
        try:
            plan = gen_plan(rng, layout, n_steps)
        except PlanInfeasible:
            continue
        ws = layout
        history: list[HistoryRecord] = []
        steps: list[Step] = []
        ok = True
        for action in plan:
            try:
                instrs = generate_instructions(ws, history, action,
                                               cfg.instructions, rng)
            except (NoDistinguishingFrame, InsufficientUniquePhrasings):
                ok = False
                break
            t = ws.time
            steps.append(Step(
                time=t, pre=ws, action=action,
                gt_object_box=block_box(ws, action.block, cfg.raster_px),
                gt_position_box=cell_box(action.dest, cfg.grid_side, cfg.raster_px),
                instructions=instrs,
                rgb=f"{t}_rgb.png", depth=f"{t}_depth.raw",
                depth_vis=f"{t}_depth_vis.png"))
            nxt = apply_action(ws, action)
            history.append(make_record(ws, nxt, action))
            ws = nxt
        if ok:
            return Scenario(scenario_id=f"{index:05d}",
                            seed_key=(cfg.seed, index, attempt),
                            initial=layout, steps=steps)
    raise GenerationExhausted(f"scenario {index} failed after "
                              f"{SCENARIO_ATTEMPTS} attempts")


def replay_prestates(scenario: Scenario) -> list[Workspace]:
    """Fold the actions over the initial workspace; element i is the state
    before step i."""
    out = [scenario.initial]
    for action in scenario.actions[:-1]:
        out.append(apply_action(out[-1], action))
    return out
