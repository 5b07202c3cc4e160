"""Cosine-scored attention: a normalized (non-softmax) weighted sum over
projected value vectors.

    f = sum_i A_i (W_v x_i),   A_i = score(q, W_k x_i) / sum_j score(q, W_k x_j)
    score(a, b) = a.b / (|a| |b|)

Scores are signed cosines, so the normalizer can approach zero when they
cancel; a small-sum guard falls back to uniform weights and logs the event.
The guard threshold doubles as a conditioning bound: each score is at most 1
in magnitude, so an untriggered guard caps |A_i| at 1/SCORE_SUM_EPS and
float64 round-off in the weight sum stays several orders below the 1e-9
verification tolerances. A much smaller threshold admits weight magnitudes
whose sums cannot be represented that accurately at all.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch

logger = logging.getLogger(__name__)

ZERO_NORM_EPS = 1e-12
SCORE_SUM_EPS = 1e-3


class AttentionResult(NamedTuple):
    vector: np.ndarray   # weighted sum of values, dim D_qkv
    weights: np.ndarray  # one signed weight per element of X


def cosine_score(a, b) -> float:
    """Cosine of the angle between two vectors; 0 when either is (near) zero
    so padded inputs degrade gracefully."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def attention(q, xs, w_k, w_v) -> AttentionResult:
    """Attend over the N vectors in `xs` with query `q` and projections
    `w_k`, `w_v` (both D_qkv x D_x)."""
    q = np.asarray(q, dtype=np.float64)
    w_k = np.asarray(w_k, dtype=np.float64)
    w_v = np.asarray(w_v, dtype=np.float64)
    xs = [np.asarray(x, dtype=np.float64) for x in xs]
    if not xs:
        raise DimensionMismatch("X must hold at least one vector")
    if q.ndim != 1 or w_k.ndim != 2 or w_v.ndim != 2:
        raise DimensionMismatch("q must be a vector, W_k/W_v matrices")
    d_qkv = q.shape[0]
    d_x = xs[0].shape[0]
    if w_k.shape != (d_qkv, d_x) or w_v.shape != (d_qkv, d_x):
        raise DimensionMismatch(
            f"projections must be {d_qkv}x{d_x}, got {w_k.shape} and {w_v.shape}")
    if any(x.shape != (d_x,) for x in xs):
        raise DimensionMismatch("inconsistent element dimensions in X")

    scores = np.array([cosine_score(q, w_k @ x) for x in xs])
    total = scores.sum()
    if abs(total) < SCORE_SUM_EPS:
        logger.info("attention score sum %.3e below guard; using uniform weights",
                    total)
        weights = np.full(len(xs), 1.0 / len(xs))
    else:
        weights = scores / total
    values = np.stack([w_v @ x for x in xs])
    return AttentionResult(vector=weights @ values, weights=weights)
