# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Sparsity-specific penalized scores.

For a triple (s, v, e) and a grid level t the score is

    sum_i (C_i^2 - nu_{a(t)}) * 1{|C_i| >= a(t)} - penalty(t)

with C_i the CUSUM of series i. The penalized score is its maximum over
the grid; ties go to the smallest t.

cusumBlock() and scoreBlock() evaluate whole blocks of equal-length
intervals at once and are the engine used by the detector and the
calibrator. scoreAt() is the plain per-series loop.

"""

import dataclasses

import numpy as np

from esac import BadIntervalError, BadSparsityError
from esac.core_stats import cusum, checkTriple

# Upper bound on p * intervals * positions held in memory at once.
CHUNK_ELEMENTS = 1 << 22


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class ScoreValue(object):
    """Penalized score at one position.

    'best_t' is the maximizing grid level, i.e. the implicit sparsity
    estimate. 'per_t' maps every grid level to its score when requested.

    """
    value: float
    best_t: int
    per_t: dict = None


# -----------------------------------------------------------------------------
def cusumBlock(X, starts, length, offsets=None):
    """CUSUMs of all series for intervals (s, s + length], s in starts.

    Args:
        X (DataMatrix)      : data matrix
        starts (array_like) : interval starts
        length (int)        : common interval length e - s, >= 2
        offsets (array_like): split positions v - s within (0, length),
                              defaults to all of 1 .. length-1

    Returns:
        (ndarray)           : p x len(starts) x len(offsets) CUSUMs

    """
    starts = np.asarray(starts, dtype=np.intp).reshape(-1)
    if offsets is None:
        offsets = np.arange(1, length, dtype=np.intp)
    offsets = np.asarray(offsets, dtype=np.intp).reshape(-1)

    d = float(length)
    j = offsets.astype(np.float64)
    left_weight = np.sqrt((d - j) / (d * j))
    right_weight = np.sqrt(j / (d * (d - j)))

    prefix = X.prefix
    at_start = prefix[:, starts][:, :, None]
    at_end = prefix[:, starts + length][:, :, None]
    at_split = prefix[:, starts[:, None] + offsets[None, :]]

    return (left_weight * (at_split - at_start)
            - right_weight * (at_end - at_split))


# -----------------------------------------------------------------------------
def scoreBlock(C, table):
    """Scores on every grid level for a block of CUSUMs.

    Args:
        C (ndarray)             : p x ... CUSUMs, e.g. from cusumBlock()
        table (PenaltyTable)    : thresholds and penalties

    Returns:
        (ndarray)               : len(table) x ... scores, first axis
                                  aligned with table.grid

    """
    squared = C * C
    magnitude = np.abs(C)
    out = np.empty((len(table),) + C.shape[1:])
    for k in range(len(table)):
        a = table.a[k]
        centered = squared - table.nu[k]
        if a > 0:
            centered = np.where(magnitude >= a, centered, 0.0)
        out[k] = centered.sum(axis=0) - table.penalty[k]
    return out


# -----------------------------------------------------------------------------
def chunks(count, p, width):
    """Yields slices over 'count' intervals so each chunk of a
    p x chunk x width array stays below CHUNK_ELEMENTS."""
    step = max(1, CHUNK_ELEMENTS // max(1, p * width))
    for lo in range(0, count, step):
        yield slice(lo, min(count, lo + step))


# -----------------------------------------------------------------------------
def scoreAt(X, s, e, v, t, table):
    """Sparsity-specific score at one triple and one grid level.

    Args:
        X (DataMatrix)          : data matrix
        s, e, v (int)           : triple with 0 <= s < v < e <= n
        t (int)                 : grid level
        table (PenaltyTable)    : thresholds and penalties

    Returns:
        (float)

    Raises:
        (BadIntervalError)      : on an invalid triple
        (BadSparsityError)      : if t is not on the grid

    """
    checkTriple(X.n, s, e, v)
    k = table.index(t)
    a = table.a[k]
    nu = table.nu[k]
    total = 0.0
    for i in range(X.p):
        c = cusum(X, i, s, e, v)
        if abs(c) >= a:
            total += c * c - nu
    return total - table.penalty[k]


# -----------------------------------------------------------------------------
def _checkTable(ctx, table):
    if tuple(table.grid) != tuple(ctx.sparsity_grid):
        raise BadSparsityError('Penalty table grid {} does not match the '
                               'sparsity grid {}'
                               .format(table.grid, ctx.sparsity_grid))


# -----------------------------------------------------------------------------
def penalizedScore(X, s, e, v, ctx, table, keepPerT=False):
    """Maximum of the sparsity-specific score over the grid.

    Args:
        X (DataMatrix)          : data matrix
        s, e, v (int)           : triple with 0 <= s < v < e <= n
        ctx (RateContext)       : dimensions and grid
        table (PenaltyTable)    : thresholds and penalties on ctx's grid
        keepPerT (bool)         : also return the score of every level

    Returns:
        (ScoreValue)

    """
    checkTriple(X.n, s, e, v)
    _checkTable(ctx, table)
    scores = scoreBlock(cusumBlock(X, [s], e - s, [v - s]), table)[:, 0, 0]
    k = int(np.argmax(scores))
    per_t = None
    if keepPerT:
        per_t = {t: float(scores[i]) for i, t in enumerate(table.grid)}
    return ScoreValue(float(scores[k]), table.grid[k], per_t)


# -----------------------------------------------------------------------------
def scanInterval(X, s, e, table, midpoint=False):
    """Penalized scores at every split v of (s, e].

    Args:
        X (DataMatrix)          : data matrix
        s, e (int)              : interval with e - s >= 2
        table (PenaltyTable)    : thresholds and penalties
        midpoint (bool)         : only evaluate v = floor((s + e) / 2)

    Returns:
        (tuple)  : (positions, values, best_t) arrays of equal length

    """
    if not (0 <= s and e <= X.n and e - s >= 2):
        raise BadIntervalError('Invalid interval ({}, {}] for n={}'
                               .format(s, e, X.n))
    length = e - s
    offsets = np.array([length // 2]) if midpoint else None
    scores = scoreBlock(cusumBlock(X, [s], length, offsets), table)[:, 0, :]
    best = np.argmax(scores, axis=0)
    values = scores[best, np.arange(scores.shape[1])]
    if offsets is None:
        offsets = np.arange(1, length)
    grid = np.asarray(table.grid)
    return s + offsets, values, grid[best]


# -----------------------------------------------------------------------------
def testInterval(X, s, e, ctx, table, midpoint=False):
    """Tests (s, e] for a changepoint.

    The test fires if the maximum penalized score over s < v < e is
    strictly positive.

    Args:
        X (DataMatrix)          : data matrix
        s, e (int)              : interval with e - s >= 2
        ctx (RateContext)       : dimensions and grid
        table (PenaltyTable)    : testing penalties
        midpoint (bool)         : only evaluate v = floor((s + e) / 2)

    Returns:
        (tuple)   : (detected, argmax_v, score); argmax_v is the smallest
                    maximizing position

    Raises:
        (BadIntervalError)      : on an invalid interval

    """
    _checkTable(ctx, table)
    positions, values, _ = scanInterval(X, s, e, table, midpoint=midpoint)
    k = int(np.argmax(values))
    score = float(values[k])
    return score > 0.0, int(positions[k]), score
