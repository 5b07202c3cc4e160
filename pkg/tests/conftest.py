import numpy as np
import pytest

from histblocks.generate import gen_initial_layout
from histblocks.world import MAX_STACK, Action, Cell, apply_action

# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_workspace(rng: np.random.Generator, n_blocks: int | None = None,
                     n_actions: int | None = None):
    """A random reachable workspace: scatter plus a few legal moves, so it
    typically contains stacks and occluded blocks."""
    n = n_blocks if n_blocks is not None else int(rng.integers(3, 9))
    ws = gen_initial_layout(rng, n)
    k = n_actions if n_actions is not None else int(rng.integers(0, 6))
    for _ in range(k):
        clear = [b for b in ws.blocks if ws.is_clear(b.id)]
        b = clear[int(rng.integers(len(clear)))]
        stackable = [c for c in sorted(ws.occupied_cells())
                     if c != b.cell and ws.height_at(c) < MAX_STACK]
        if stackable and rng.random() < 0.5:
            dest = stackable[int(rng.integers(len(stackable)))]
        else:
            free = ws.free_cells()
            dest = free[int(rng.integers(len(free)))]
        ws = apply_action(ws, Action(b.id, dest))
    return ws


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
