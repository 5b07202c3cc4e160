"""Exception family shared across the simulator, generator, and engine."""


class HistBlocksError(Exception):
    """Base class for all package errors."""


# --- world ---------------------------------------------------------------

class WorldError(HistBlocksError):
    pass


class NoSuchBlock(WorldError):
    pass


class BlockNotClear(WorldError):
    pass


class StackFull(WorldError):
    pass


class SelfTarget(WorldError):
    pass


class EmptyCandidateSet(WorldError):
    pass


class NoUniqueExtreme(WorldError):
    """Superlative tie: the phrase would be ambiguous."""


class NoUniqueNearest(WorldError):
    """Distance tie: "closest to" would be ambiguous."""


# --- generation ----------------------------------------------------------

class GridTooSmall(HistBlocksError):
    pass


class PlanInfeasible(HistBlocksError):
    pass


class GenerationExhausted(HistBlocksError):
    pass


class NoDistinguishingFrame(HistBlocksError):
    """The referent cannot be uniquely described; the step is regenerated."""


class InsufficientUniquePhrasings(HistBlocksError):
    pass


# --- annotation ----------------------------------------------------------

class NotOccluded(HistBlocksError):
    pass


# --- grounding -----------------------------------------------------------

class ParseError(HistBlocksError):
    def __init__(self, message, position, expected=()):
        super().__init__(message)
        self.position = position
        self.expected = tuple(expected)


class GroundingError(HistBlocksError):
    pass


class Unresolvable(GroundingError):
    """No candidate satisfies the frame (or it cannot be evaluated)."""


class Ambiguous(GroundingError):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class CellOccupiedConflict(GroundingError):
    """The denoted placement cannot physically be performed."""


# --- numerics ------------------------------------------------------------

class DimensionMismatch(HistBlocksError):
    pass


# --- dataset / evaluation / service --------------------------------------

class DatasetCorrupt(HistBlocksError):
    pass


class SolverFailure(HistBlocksError):
    pass


class NothingToUndo(HistBlocksError):
    pass
