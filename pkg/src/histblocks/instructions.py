"""Instruction generation: enumerate frames that uniquely denote the step's
target and destination, realize them as sentences, and filter out anything
ambiguous.

Two uniqueness routes are kept deliberately separate:

  * satisfaction -- per-candidate predicates (`satisfies_object`,
    `satisfies_position`) decide whether a given (block, destination) pair
    is consistent with a sentence; an instruction is emitted only when
    exactly one legal pair is, and it equals the planned action;
  * resolution -- the grounding engine's functional path, used to confirm
    every emitted frame resolves back to the plan.

On top of that, every emitted instruction is checked against the blind
solver: phrases without history dependency must resolve identically without
history, and phrases with one must fail outright, never resolve to a wrong
answer with confidence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .annotate import (
    HistoryRecord,
    StepAnnotation,
    classify_object,
    classify_position,
)
from .errors import (
    Ambiguous,
    CellOccupiedConflict,
    InsufficientUniquePhrasings,
    NoDistinguishingFrame,
    Unresolvable,
)
from .frames import (
    ANOTHER_SAME_COLOR,
    JUST_MOVED,
    LAST_REMAINING,
    ON_TOP_OF,
    RELATION_DELTA,
    RELATIONS,
    SUPERLATIVES,
    ObjectFrame,
    PositionFrame,
)
from .grammar import LEXICON, SCHEMA_CONJOINED, SCHEMA_SINGLE, realize
from .resolve import (
    ResolveCtx,
    blind_outcomes,
    omniscient_ctx,
    region_anchor,
    resolve_object,
    resolve_position,
)
from .world import MAX_STACK, Action, Cell, Workspace, region_of

FRAME_CAP = 40       # frames enumerated per referent
PAIR_CAP = 36        # frame pairs realized per step
REF_FRAME_CAP = 4    # frames per reference block inside a position phrase


@dataclass(frozen=True)
class Instruction:
    text: str
    schema: int
    object_frame: ObjectFrame
    position_frame: PositionFrame
    annotation: StepAnnotation


# --- satisfaction predicates ------------------------------------------------

def _base_pass(frame: ObjectFrame, b, ctx: ResolveCtx) -> bool:
    """Color/region/history constraints of a plain frame, superlative aside."""
    if frame.color is not None and b.color != frame.color:
        return False
    if frame.region is not None and region_of(b.cell, ctx.grid_side) != frame.region:
        return False
    if frame.history_ref is not None:
        if ctx.manipulated is None:
            return False
        moved = set(ctx.manipulated)
        if frame.history_ref == JUST_MOVED:
            if not ctx.manipulated or b.id != ctx.manipulated[-1]:
                return False
        elif frame.history_ref == ANOTHER_SAME_COLOR:
            if b.id in moved:
                return False
            by_id = {o.id: o for o in ctx.blocks}
            if not any(m in by_id and by_id[m].color == frame.color for m in moved):
                return False
        elif frame.history_ref == LAST_REMAINING:
            if b.id in moved:
                return False
    return True


def satisfies_object(frame: ObjectFrame, block_id: str, ctx: ResolveCtx) -> bool:
    by_id = {b.id: b for b in ctx.candidates()}
    if block_id not in by_id:
        return False
    b = by_id[block_id]
    if frame.same_color_contrast:
        return (ctx.target is not None and ctx.target_color is not None
                and b.color == ctx.target_color)
    if frame.nearest_to is not None:
        refs = [o.id for o in ctx.candidates()
                if satisfies_object(frame.nearest_to, o.id, ctx)]
        if len(refs) != 1:
            return False
        ref = by_id[refs[0]]
        if b.id == ref.id:
            return False
        d2 = {o.id: (o.cell.col - ref.cell.col) ** 2 + (o.cell.row - ref.cell.row) ** 2
              for o in ctx.candidates() if o.id != ref.id}
        best = min(d2.values())
        return d2[b.id] == best and sum(1 for v in d2.values() if v == best) == 1
    if not _base_pass(frame, b, ctx):
        return False
    if frame.superlative is not None:
        axis, direction = frame.superlative
        peers = [o for o in ctx.candidates() if _base_pass(frame, o, ctx)]
        coords = [getattr(o.cell, axis) for o in peers]
        best = min(coords) if direction == "min" else max(coords)
        winners = [o for o in peers if getattr(o.cell, axis) == best]
        return len(winners) == 1 and winners[0].id == b.id
    return True


def satisfies_position(frame: PositionFrame, cell: Cell, ctx: ResolveCtx) -> bool:
    heights = ctx.heights()
    if frame.region is not None:
        return region_anchor(frame.region, heights, ctx.grid_side) == cell
    refs = [o for o in ctx.candidates() if satisfies_object(frame.ref, o.id, ctx)]
    if len(refs) != 1:
        return False
    ref = refs[0]
    if frame.relation == ON_TOP_OF:
        return (cell == ref.cell and ref.level == heights[ref.cell] - 1
                and heights[ref.cell] < MAX_STACK)
    dcol, drow = RELATION_DELTA[frame.relation]
    return cell == Cell(ref.cell.col + dcol, ref.cell.row + drow)


def _satisfying_cells(frame: PositionFrame, ctx: ResolveCtx) -> list[Cell]:
    """Cells that satisfy a position frame; equivalent to filtering the whole
    grid through satisfies_position but computed directly."""
    heights = ctx.heights()
    if frame.region is not None:
        anchor = region_anchor(frame.region, heights, ctx.grid_side)
        return [anchor] if anchor is not None else []
    refs = [o for o in ctx.candidates() if satisfies_object(frame.ref, o.id, ctx)]
    if len(refs) != 1:
        return []
    ref = refs[0]
    if frame.relation == ON_TOP_OF:
        if ref.level == heights[ref.cell] - 1 and heights[ref.cell] < MAX_STACK:
            return [ref.cell]
        return []
    dcol, drow = RELATION_DELTA[frame.relation]
    cell = Cell(ref.cell.col + dcol, ref.cell.row + drow)
    if 0 <= cell.col < ctx.grid_side and 0 <= cell.row < ctx.grid_side:
        return [cell]
    return []


def is_legal_destination(ws: Workspace, block_id: str, cell: Cell) -> bool:
    stack = ws.stack_at(cell)
    if cell == ws.block(block_id).cell and len(stack) == 1:
        return False
    return len(stack) < MAX_STACK


def legal_destinations(ws: Workspace, block_id: str) -> list[Cell]:
    return [Cell(col, row)
            for row in range(ws.grid_side) for col in range(ws.grid_side)
            if is_legal_destination(ws, block_id, Cell(col, row))]


def unique_grounding(object_frame: ObjectFrame, position_frame: PositionFrame,
                     ws: Workspace, manipulated: tuple[str, ...],
                     target_color: str | None = None) -> tuple[str, Cell] | None:
    """The sole legal (block, destination) pair consistent with the frames,
    or None when zero or several pairs are."""
    base = omniscient_ctx(ws, manipulated)
    found: tuple[str, Cell] | None = None
    for b in ws.blocks:
        if not ws.is_clear(b.id):
            continue
        if not satisfies_object(object_frame, b.id, base):
            continue
        # the position phrase is read with b in the gripper
        ctx = replace(base, target=b.id, target_color=target_color)
        for cell in _satisfying_cells(position_frame, ctx):
            if not is_legal_destination(ws, b.id, cell):
                continue
            if found is not None:
                return None
            found = (b.id, cell)
    return found


# --- frame enumeration -------------------------------------------------------

def _valid_object_frame(frame: ObjectFrame, referent: str,
                        ctx: ResolveCtx) -> bool:
    """Omniscient uniqueness, checked along both routes."""
    sats = [b.id for b in ctx.blocks if satisfies_object(frame, b.id, ctx)]
    if sats != [referent]:
        return False
    try:
        return resolve_object(frame, ctx) == referent
    except (Unresolvable, Ambiguous):
        return False


def enumerate_object_frames(ws: Workspace, history: list[HistoryRecord],
                            target: str, nested: bool = True,
                            exclude: str | None = None,
                            cap: int = FRAME_CAP) -> list[ObjectFrame]:
    """Frames that uniquely denote `target`, simplest first.

    `exclude` names a block outside the candidate pool: when enumerating
    frames for a position reference, the sentence's pick target is already
    in the gripper.
    """
    ctx = omniscient_ctx(ws, tuple(r.block for r in history))
    ctx = replace(ctx, target=exclude)
    b = ws.block(target)
    moved = set(ctx.manipulated)
    candidates: list[ObjectFrame] = [
        ObjectFrame(color=b.color),
        ObjectFrame(color=b.color, region=region_of(b.cell, ws.grid_side)),
        ObjectFrame(region=region_of(b.cell, ws.grid_side)),
    ]
    for sup in SUPERLATIVES:
        candidates.append(ObjectFrame(superlative=sup))
        candidates.append(ObjectFrame(color=b.color, superlative=sup))
    if ctx.manipulated and ctx.manipulated[-1] == target:
        candidates.append(ObjectFrame(history_ref=JUST_MOVED))
    if target not in moved and any(ws.block(m).color == b.color for m in moved):
        candidates.append(ObjectFrame(color=b.color, history_ref=ANOTHER_SAME_COLOR))
    unmanipulated = [o.id for o in ws.blocks if o.id not in moved and o.id != exclude]
    if unmanipulated == [target]:
        candidates.append(ObjectFrame(history_ref=LAST_REMAINING))
    if nested:
        for other in ws.blocks:
            if other.id == target or other.id == exclude:
                continue
            for ref_frame in enumerate_object_frames(ws, history, other.id,
                                                     nested=False, exclude=exclude,
                                                     cap=3):
                candidates.append(ObjectFrame(nearest_to=ref_frame))
    out: list[ObjectFrame] = []
    for frame in candidates:
        if frame not in out and _valid_object_frame(frame, target, ctx):
            out.append(frame)
        if len(out) >= cap:
            break
    return out


def enumerate_position_frames(ws: Workspace, history: list[HistoryRecord],
                              dest: Cell, target: str | None = None,
                              cap: int = FRAME_CAP) -> list[PositionFrame]:
    """Frames that denote exactly the destination cell, read with `target`
    in the gripper. Reference objects may currently be occluded; that is
    what creates implicit dependencies."""
    ctx = omniscient_ctx(ws, tuple(r.block for r in history))
    ctx = replace(ctx, target=target)
    heights = ctx.heights()
    expect = (dest, heights.get(dest, 0))
    candidates: list[PositionFrame] = []
    if heights.get(dest, 0) == 0:
        candidates.append(PositionFrame(region=region_of(dest, ws.grid_side)))
    else:
        top = ws.top_at(dest)
        if top.id != target:
            for ref_frame in enumerate_object_frames(ws, history, top.id,
                                                     exclude=target,
                                                     cap=REF_FRAME_CAP):
                candidates.append(PositionFrame(relation=ON_TOP_OF, ref=ref_frame))
    for relation, (dcol, drow) in RELATION_DELTA.items():
        ref_cell = Cell(dest.col - dcol, dest.row - drow)
        if not (0 <= ref_cell.col < ws.grid_side and 0 <= ref_cell.row < ws.grid_side):
            continue
        for ref_block in ws.stack_at(ref_cell):
            if ref_block.id == target:
                continue
            for ref_frame in enumerate_object_frames(ws, history, ref_block.id,
                                                     exclude=target,
                                                     cap=REF_FRAME_CAP):
                candidates.append(PositionFrame(relation=relation, ref=ref_frame))
    out: list[PositionFrame] = []
    for frame in candidates:
        try:
            resolved = resolve_position(frame, ctx)
        except (Unresolvable, Ambiguous, CellOccupiedConflict):
            continue
        if resolved == expect and frame not in out:
            out.append(frame)
        if len(out) >= cap:
            break
    return out


# --- instruction assembly ----------------------------------------------------

def _contrast_frames(o: ObjectFrame, ws: Workspace, action: Action,
                     manipulated: tuple[str, ...]) -> list[PositionFrame]:
    """Position frames built on "the another same colored block"."""
    if o.color is None:
        return []
    others = [b for b in ws.blocks if b.color == o.color and b.id != action.block]
    if len(others) != 1:
        return []
    ctx = omniscient_ctx(ws, manipulated)
    ctx = replace(ctx, target=action.block, target_color=o.color)
    expect = (action.dest, ctx.heights().get(action.dest, 0))
    out = []
    for relation in RELATIONS:
        frame = PositionFrame(relation=relation,
                              ref=ObjectFrame(same_color_contrast=True))
        try:
            if resolve_position(frame, ctx) == expect:
                out.append(frame)
        except (Unresolvable, Ambiguous, CellOccupiedConflict):
            continue
    return out


def generate_instructions(ws: Workspace, history: list[HistoryRecord],
                          action: Action, k_range: tuple[int, int],
                          rng) -> list[Instruction]:
    """Distinct, uniquely-grounding instructions for one planned action."""
    t = ws.time
    manipulated = tuple(r.block for r in history)
    dest_level = ws.height_at(action.dest)
    if action.dest == ws.block(action.block).cell:
        dest_level -= 1
    expect_pos = (action.dest, dest_level)

    obj_frames = enumerate_object_frames(ws, history, action.block)
    if not obj_frames:
        raise NoDistinguishingFrame(f"no unique phrase for {action.block}")
    obj_entries = [(o, classify_object(o, ws, history, t)) for o in obj_frames]
    pos_entries = [(p, classify_position(p, ws, history, t, action.block, None))
                   for p in enumerate_position_frames(ws, history, action.dest,
                                                      target=action.block)]

    pairs = []
    for o, odep in obj_entries:
        for p, pdep in pos_entries:
            pairs.append((o, odep, p, pdep))
        for p in _contrast_frames(o, ws, action, manipulated):
            pdep = classify_position(p, ws, history, t, action.block, o.color)
            pairs.append((o, odep, p, pdep))

    usable = []
    blind_cache: dict = {}
    for o, odep, p, pdep in pairs:
        key = (o, p)
        if key not in blind_cache:
            blind_cache[key] = blind_outcomes(o, p, ws)
        block, obj_err, pos, pos_err = blind_cache[key]
        # blind consistency: dependency-free phrases must come out right
        # without history, dependent ones must fail rather than guess
        if odep.any:
            if obj_err is None:
                continue
        elif block != action.block:
            continue
        if pdep.any:
            if pos_err is None:
                continue
        elif pos != expect_pos:
            continue
        if unique_grounding(o, p, ws, manipulated, o.color) != (action.block, action.dest):
            continue
        usable.append((o, odep, p, pdep))
    if not usable:
        raise InsufficientUniquePhrasings(f"no unambiguous pair at t={t}")

    # keep dependency-bearing pairs well represented before capping
    dep_pairs = [u for u in usable if u[1].any or u[3].any]
    plain_pairs = [u for u in usable if not (u[1].any or u[3].any)]
    picked = []
    for pool, quota in ((dep_pairs, PAIR_CAP // 2), (plain_pairs, PAIR_CAP)):
        order = rng.permutation(len(pool)) if len(pool) > quota else range(len(pool))
        for i in order:
            if len(picked) >= PAIR_CAP or quota <= 0:
                break
            picked.append(pool[int(i)])
            quota -= 1

    by_text: dict[str, Instruction] = {}
    for o, odep, p, pdep in picked:
        ann = StepAnnotation(pick=odep, place=pdep)
        contrast = p.ref is not None and p.ref.same_color_contrast
        schemas = (SCHEMA_CONJOINED,) if contrast else (SCHEMA_CONJOINED, SCHEMA_SINGLE)
        for schema in schemas:
            text = realize(o, p, schema, rng=rng)
            by_text.setdefault(text, Instruction(text, schema, o, p, ann))

    k_min, k_max = k_range
    if len(by_text) < k_min:
        # second pass: exhaust verb choices before giving up
        for o, odep, p, pdep in picked:
            ann = StepAnnotation(pick=odep, place=pdep)
            contrast = p.ref is not None and p.ref.same_color_contrast
            place_pool = [v for v in LEXICON.place_verbs
                          if v != "stack" or p.relation == ON_TOP_OF]
            for v2 in place_pool:
                if not contrast:
                    text = realize(o, p, SCHEMA_SINGLE, place_verb=v2)
                    by_text.setdefault(text, Instruction(text, SCHEMA_SINGLE, o, p, ann))
                for v1 in LEXICON.pick_verbs:
                    text = realize(o, p, SCHEMA_CONJOINED, pick_verb=v1, place_verb=v2)
                    by_text.setdefault(
                        text, Instruction(text, SCHEMA_CONJOINED, o, p, ann))
    if len(by_text) < k_min:
        raise InsufficientUniquePhrasings(
            f"only {len(by_text)} distinct phrasings at t={t}")

    pool = list(by_text.values())
    k = min(int(rng.integers(k_min, k_max + 1)), len(pool))
    chosen = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in chosen]
