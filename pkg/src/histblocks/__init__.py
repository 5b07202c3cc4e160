"""History-dependent blocks world: simulator, dataset generator, symbolic
grounding engine, and evaluation harness."""

from .annotate import (
    DepInfo,
    HistoryRecord,
    StepAnnotation,
    classify_object,
    classify_position,
    explicit_indices,
    implicit_indices,
    make_record,
)
from .attention import AttentionResult, attention, cosine_score
from .evaluate import BlindSolver, OracleSolver, Report, evaluate, iou, score_step
from .frames import ObjectFrame, PositionFrame
from .generate import GenConfig, Scenario, Step, build_scenario, gen_initial_layout, gen_plan
from .grammar import LEXICON, realize
from .instructions import (
    Instruction,
    enumerate_object_frames,
    enumerate_position_frames,
    generate_instructions,
)
from .parse import ParsedInstruction, parse
from .render import BBox, Raster, block_box, cell_box, render
from .resolve import (
    BLIND,
    OMNISCIENT,
    Resolution,
    ground,
    resolve_object,
    resolve_position,
)
from .world import (
    Action,
    BlockState,
    Cell,
    Region,
    Workspace,
    apply_action,
    is_occluded,
    nearest_block,
    region_of,
    superlative,
    visible_blocks,
)

__version__ = "0.1.0"
