"""IoU evaluation harness: scores a solver's predicted boxes against ground
truth under teacher forcing and aggregates by dependency category and by
history dependency distance.

Teacher forcing follows the measurement protocol: the solver's history
context for step n is the ground-truth action log through step n-1, no
matter what it predicted earlier. A free-running mode (the solver consumes
its own predictions) exists behind a flag for future solvers and is not
part of acceptance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .annotate import HistoryRecord, make_record
from .errors import (
    Ambiguous,
    CellOccupiedConflict,
    DatasetCorrupt,
    HistBlocksError,
    ParseError,
    SolverFailure,
    Unresolvable,
)
from .parse import parse
from .render import BBox, cell_box, footprint_box
from .resolve import blind_ctx, omniscient_ctx, resolve_object, resolve_position
from .world import Action, Cell, Workspace, apply_action

CATEGORIES = ("none", "pick", "place", "both")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union by integer pixel area."""
    ix = max(0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union else 0.0


def score_step(gt_object: BBox, gt_position: BBox,
               pred_object: Optional[BBox], pred_position: Optional[BBox],
               threshold: float = 0.5) -> tuple[bool, bool, bool]:
    """Strictly-greater-than threshold; abstention counts as incorrect."""
    pick_ok = pred_object is not None and iou(gt_object, pred_object) > threshold
    place_ok = pred_position is not None and iou(gt_position, pred_position) > threshold
    return pick_ok, place_ok, pick_ok and place_ok


# --- solvers -------------------------------------------------------------------

@dataclass
class SolverOutcome:
    object_box: Optional[BBox] = None
    position_box: Optional[BBox] = None
    object_error: Optional[str] = None
    position_error: Optional[str] = None
    block: Optional[str] = None      # resolved action, for free-running mode
    dest: Optional[Cell] = None


def _error_kind(e: Exception) -> str:
    if isinstance(e, ParseError):
        return "parse"
    if isinstance(e, Ambiguous):
        return "ambiguous"
    if isinstance(e, CellOccupiedConflict):
        return "conflict"
    return "unresolvable"


class _EngineSolver:
    """Shared text -> per-phrase boxes path; subclasses pick the view."""

    def __init__(self, raster_px: int = 128):
        self.raster_px = raster_px

    def _ctx(self, ws: Workspace, history: list[HistoryRecord]):
        raise NotImplementedError

    def solve(self, ws: Workspace, history: list[HistoryRecord],
              text: str) -> SolverOutcome:
        out = SolverOutcome()
        try:
            parsed = parse(text)
        except ParseError:
            out.object_error = out.position_error = "parse"
            return out
        ctx = self._ctx(ws, history)
        try:
            block = resolve_object(parsed.object_frame, ctx)
            out.block = block
            out.object_box = footprint_box(ctx.state(block), ws.grid_side,
                                           self.raster_px)
        except (Unresolvable, Ambiguous, CellOccupiedConflict) as e:
            out.object_error = _error_kind(e)
        tctx = replace(ctx, target=out.block,
                       target_color=parsed.object_frame.color if out.block else None)
        try:
            dest, _level = resolve_position(parsed.position_frame, tctx)
            out.dest = dest
            out.position_box = cell_box(dest, ws.grid_side, self.raster_px)
        except (Unresolvable, Ambiguous, CellOccupiedConflict) as e:
            out.position_error = _error_kind(e)
        return out


class OracleSolver(_EngineSolver):
    """The omniscient grounding engine: full state, teacher-forced history."""

    name = "oracle"

    def _ctx(self, ws, history):
        return omniscient_ctx(ws, tuple(r.block for r in history))


class BlindSolver(_EngineSolver):
    """The no-history ablation: visible blocks only, history log unread."""

    name = "blind"

    def _ctx(self, ws, history):
        del history  # ablated
        return blind_ctx(ws)


class FileSolver:
    """Replays an external solver's prediction file: one JSON record per
    line with scenario id, step, instruction index, and the two boxes
    (null = abstain)."""

    name = "file"

    def __init__(self, path):
        self.predictions: dict[tuple[str, int, int], tuple] = {}
        try:
            with open(path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    key = (str(rec["scenario"]), int(rec["step"]),
                           int(rec["instruction"]))
                    obj = rec.get("object_box")
                    pos = rec.get("position_box")
                    self.predictions[key] = (
                        BBox(*obj) if obj is not None else None,
                        BBox(*pos) if pos is not None else None)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise SolverFailure(f"bad prediction file: {e}") from e

    def solve_indexed(self, scenario_id: str, step: int,
                      instruction: int) -> SolverOutcome:
        pred = self.predictions.get((scenario_id, step, instruction))
        if pred is None:
            return SolverOutcome(object_error="abstain", position_error="abstain")
        obj, pos = pred
        return SolverOutcome(
            object_box=obj, position_box=pos,
            object_error=None if obj is not None else "abstain",
            position_error=None if pos is not None else "abstain")


# --- report ----------------------------------------------------------------------

@dataclass
class _Tally:
    count: int = 0
    pick: int = 0
    place: int = 0
    both: int = 0

    def add(self, pick_ok: bool, place_ok: bool, both_ok: bool):
        self.count += 1
        self.pick += pick_ok
        self.place += place_ok
        self.both += both_ok

    def accuracies(self) -> dict:
        if self.count == 0:
            return {"count": 0, "pick": None, "place": None, "both": None}
        return {"count": self.count,
                "pick": 100.0 * self.pick / self.count,
                "place": 100.0 * self.place / self.count,
                "both": 100.0 * self.both / self.count}


@dataclass
class _DistTally:
    count: int = 0
    correct: int = 0
    explicit_count: int = 0
    explicit_correct: int = 0


@dataclass
class Report:
    solver: str
    iou_threshold: float
    totals: dict = field(default_factory=dict)
    categories: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"solver": self.solver, "iou_threshold": self.iou_threshold,
                "totals": self.totals, "categories": self.categories,
                "distances": self.distances, "errors": self.errors}

    def category_accuracy(self, category: str, which: str):
        return self.categories[category][which]

    def format_text(self) -> str:
        def fmt(v):
            return f"{v:7.1f}" if v is not None else "      -"

        lines = [f"solver: {self.solver}   IoU > {self.iou_threshold}",
                 f"totals: {self.totals}",
                 "",
                 "category        n    pick   place    both"]
        for cat in CATEGORIES:
            c = self.categories[cat]
            lines.append(f"{cat:<12} {c['count']:5d} {fmt(c['pick'])} "
                         f"{fmt(c['place'])} {fmt(c['both'])}")
        for phrase in ("pick", "place"):
            lines.append("")
            lines.append(f"{phrase} accuracy by dependency distance")
            lines.append("distance      n     acc  n(expl)  acc(expl)")
            for d in sorted(self.distances[phrase], key=int):
                row = self.distances[phrase][d]
                acc = 100.0 * row["correct"] / row["count"] if row["count"] else None
                eacc = (100.0 * row["explicit_correct"] / row["explicit_count"]
                        if row["explicit_count"] else None)
                lines.append(f"{d:>8} {row['count']:6d} {fmt(acc)} "
                             f"{row['explicit_count']:8d} {fmt(eacc)}")
        lines.append("")
        lines.append(f"errors: {self.errors}")
        return "\n".join(lines)


def evaluate(scenarios, solver, iou_threshold: float = 0.5,
             free_running: bool = False) -> Report:
    """Run the solver over every instruction and aggregate a report."""
    cats = {c: _Tally() for c in CATEGORIES}
    dists: dict[str, dict[int, _DistTally]] = {"pick": {}, "place": {}}
    errors = {"parse": 0, "unresolvable": 0, "ambiguous": 0, "conflict": 0,
              "abstain": 0}
    totals = {"scenarios": 0, "steps": 0, "instructions": 0}

    for scenario in scenarios:
        totals["scenarios"] += 1
        ws = scenario.initial
        history: list[HistoryRecord] = []
        for step_idx, step in enumerate(scenario.steps):
            if not free_running and ws != step.pre:
                raise DatasetCorrupt(
                    f"scenario {scenario.scenario_id}: replayed state at step "
                    f"{step_idx} does not match the recorded one")
            totals["steps"] += 1
            followed: Optional[Action] = None
            for instr_idx, instr in enumerate(step.instructions):
                totals["instructions"] += 1
                if isinstance(solver, FileSolver):
                    out = solver.solve_indexed(scenario.scenario_id,
                                               step_idx, instr_idx)
                else:
                    try:
                        out = solver.solve(ws, history, instr.text)
                    except HistBlocksError as e:
                        raise SolverFailure(str(e)) from e
                for err in (out.object_error, out.position_error):
                    if err is not None:
                        errors[err if err in errors else "abstain"] += 1
                pick_ok, place_ok, both_ok = score_step(
                    step.gt_object_box, step.gt_position_box,
                    out.object_box, out.position_box, iou_threshold)
                cats[instr.annotation.category].add(pick_ok, place_ok, both_ok)
                if followed is None and out.block is not None and out.dest is not None:
                    followed = Action(out.block, out.dest)
                for phrase, dep, ok in (("pick", instr.annotation.pick, pick_ok),
                                        ("place", instr.annotation.place, place_ok)):
                    if not dep.distances:
                        continue
                    # a phrase with several distances lands in its max bucket
                    tally = dists[phrase].setdefault(max(dep.distances), _DistTally())
                    tally.count += 1
                    tally.correct += ok
                    if dep.explicit:
                        tally.explicit_count += 1
                        tally.explicit_correct += ok
            if free_running:
                # follow the solver's own resolution when it produced a legal
                # one, otherwise fall back to the ground-truth action
                action = followed if followed is not None else step.action
                try:
                    nxt = apply_action(ws, action)
                except HistBlocksError:
                    action = step.action
                    nxt = apply_action(ws, action)
                history.append(make_record(ws, nxt, action))
                ws = nxt
            else:
                # teacher forcing: history advances along the ground truth
                nxt = apply_action(step.pre, step.action)
                history.append(make_record(step.pre, nxt, step.action))
                ws = nxt
    return Report(
        solver=getattr(solver, "name", type(solver).__name__),
        iou_threshold=iou_threshold,
        totals=totals,
        categories={c: t.accuracies() for c, t in cats.items()},
        distances={p: {str(d): vars(t) for d, t in sorted(table.items())}
                   for p, table in dists.items()},
        errors=errors)


def make_solver(spec: str, raster_px: int = 128):
    if spec == "oracle":
        return OracleSolver(raster_px)
    if spec == "blind":
        return BlindSolver(raster_px)
    if spec.startswith("file:"):
        return FileSolver(spec[len("file:"):])
    raise SolverFailure(f"unknown solver {spec!r}")
