# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Changepoint estimation.

estimateSingle() locates one changepoint on the full sample. esac() runs
the recursive multiple changepoint search: seeded intervals are tested from
the narrowest to the widest, the first length with a detection wins, and
the changepoint is placed where the estimation score peaks among the
detecting intervals of that length. The search then continues on both
flanks.

Three variants control how the flanks are formed:
    - TRIMMING          : (s, s* + 1] and (e* - 1, e]
    - SPLIT_AT_ESTIMATE : (s, v*] and (v*, e]  (default)
    - MIDPOINT_TEST     : like TRIMMING, but the test only looks at the
                          mid-point of every seeded interval

"""

import dataclasses
import enum

import numpy as np

from esac import BadParamsError, MismatchedNError, TooShortError, logger
from esac.core_stats import analyticTable
from esac.score import (
    ScoreValue,
    _checkTable,
    chunks,
    cusumBlock,
    penalizedScore,
    scanInterval,
    scoreBlock,
)


# -----------------------------------------------------------------------------
class Variant(enum.Enum):
    TRIMMING = 'trim'
    SPLIT_AT_ESTIMATE = 'split'
    MIDPOINT_TEST = 'midpoint'


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class EsacConfig(object):
    """Tuning of the recursive detector.

    'gamma' is the testing penalty table and 'lam' the estimation penalty
    table; both default to the analytical penalty when left as None.
    'theoretical' enforces the parameter range under which the coverage
    guarantee of the seeded intervals holds.

    """
    alpha: float = 1.5
    K: int = 4
    variant: Variant = Variant.SPLIT_AT_ESTIMATE
    gamma: object = None
    lam: object = None
    theoretical: bool = False

    # -------------------------------------------------------------------------
    def __post_init__(self):
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, 'variant', Variant(self.variant))
        if self.theoretical and not (1.0 < self.alpha <= 2.0 and self.K >= 2):
            raise BadParamsError('Theoretical mode needs 1 < alpha <= 2 and '
                                 'K >= 2, got alpha={}, K={}'
                                 .format(self.alpha, self.K))

    # -------------------------------------------------------------------------
    @property
    def midpoint_only_test(self):
        return self.variant is Variant.MIDPOINT_TEST

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'alpha': self.alpha,
            'K': self.K,
            'variant': self.variant.value,
            'gamma': self.gamma.label if self.gamma is not None else 'analytic',
            'lambda': self.lam.label if self.lam is not None else 'analytic',
            'theoretical': self.theoretical,
        }


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class ChangepointRecord(object):
    """One detected changepoint, the interval that found it, its estimation
    score and the implicit sparsity level."""
    position: int
    interval: tuple
    score: float
    sparsity: int

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'position': self.position,
            'interval': list(self.interval),
            'score': self.score,
            'sparsity': self.sparsity,
        }


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class DetectionResult(object):
    """Detected changepoints sorted by position."""
    n: int
    records: tuple = ()

    # -------------------------------------------------------------------------
    @property
    def changepoints(self):
        return [record.position for record in self.records]

    # -------------------------------------------------------------------------
    def __len__(self):
        return len(self.records)

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'n': self.n,
            'changepoints': [record.toDict() for record in self.records],
        }


# -----------------------------------------------------------------------------
def estimateSingle(X, ctx, lam=None, keepPerT=False):
    """Estimates the location of a single changepoint on (0, n].

    Args:
        X (DataMatrix)          : data matrix, ideally noise-normalized
        ctx (RateContext)       : dimensions and grid
        lam (PenaltyTable)      : estimation penalties, analytical if None
        keepPerT (bool)         : keep the per-level scores at the estimate

    Returns:
        (tuple)  : (eta_hat, ScoreValue); eta_hat is the smallest maximizer

    Raises:
        (TooShortError)         : if n < 2

    """
    if X.n < 2:
        raise TooShortError('Need at least 2 time points, got {}'.format(X.n))
    if lam is None:
        lam = analyticTable(ctx)
    _checkTable(ctx, lam)

    positions, values, sparsity = scanInterval(X, 0, X.n, lam)
    k = int(np.argmax(values))
    eta_hat = int(positions[k])
    if keepPerT:
        return eta_hat, penalizedScore(X, 0, X.n, eta_hat, ctx, lam,
                                       keepPerT=True)
    return eta_hat, ScoreValue(float(values[k]), int(sparsity[k]))


# -----------------------------------------------------------------------------
class _BlockState(object):
    """Test and estimation results of one length block, filled lazily.

    Whether an interval tests positive does not depend on the enclosing
    search interval, so results are shared by all recursion steps.

    """

    # -------------------------------------------------------------------------
    def __init__(self, block):
        size = len(block)
        self.block = block
        self.tested = np.zeros(size, dtype=bool)
        self.detected = np.zeros(size, dtype=bool)
        self.estimated = np.zeros(size, dtype=bool)
        self.score = np.full(size, -np.inf)
        self.position = np.zeros(size, dtype=np.intp)
        self.sparsity = np.zeros(size, dtype=np.intp)


# -----------------------------------------------------------------------------
class NarrowestScanner(object):
    """Narrowest-over-threshold search over a seeded interval set."""

    # -------------------------------------------------------------------------
    def __init__(self, X, intervalSet, gamma, lam, midpoint=False):
        self.X = X
        self.gamma = gamma
        self.lam = lam
        self.midpoint = midpoint
        self.states = [_BlockState(block) for block in intervalSet.blocks]
        self.evaluations = 0

    # -------------------------------------------------------------------------
    def _ensureTested(self, state, index):
        missing = index[~state.tested[index]]
        if not len(missing):
            return
        block = state.block
        if self.midpoint:
            offsets = np.array([block.length // 2])
        else:
            offsets = np.arange(1, block.length)
        for part in chunks(len(missing), self.X.p, len(offsets)):
            chosen = missing[part]
            scores = scoreBlock(cusumBlock(self.X, block.starts[chosen],
                                           block.length, offsets), self.gamma)
            state.detected[chosen] = scores.max(axis=(0, 2)) > 0.0
            self.evaluations += len(chosen) * len(offsets)
        state.tested[missing] = True

    # -------------------------------------------------------------------------
    def _ensureEstimated(self, state, index):
        missing = index[~state.estimated[index]]
        if not len(missing):
            return
        block = state.block
        offsets = np.arange(1, block.length)
        grid = np.asarray(self.lam.grid)
        for part in chunks(len(missing), self.X.p, len(offsets)):
            chosen = missing[part]
            scores = scoreBlock(cusumBlock(self.X, block.starts[chosen],
                                           block.length, offsets), self.lam)
            best_t = np.argmax(scores, axis=0)
            values = np.max(scores, axis=0)
            best_v = np.argmax(values, axis=1)
            rows = np.arange(len(chosen))
            state.score[chosen] = values[rows, best_v]
            state.position[chosen] = block.starts[chosen] + offsets[best_v]
            state.sparsity[chosen] = grid[best_t[rows, best_v]]
        state.estimated[missing] = True

    # -------------------------------------------------------------------------
    def narrowest(self, s, e):
        """Finds the changepoint estimate from the narrowest detecting
        seeded intervals inside (s, e].

        Returns:
            (ChangepointRecord)  : or None if no contained interval detects

        """
        for state in self.states:
            block = state.block
            if block.length > e - s:
                break
            lo, hi = block.containedIn(s, e)
            if hi <= lo:
                continue
            index = np.arange(lo, hi)
            self._ensureTested(state, index)
            hits = index[state.detected[index]]
            if not len(hits):
                continue
            self._ensureEstimated(state, hits)
            # first maximum, i.e. the smallest start
            best = hits[int(np.argmax(state.score[hits]))]
            start = int(block.starts[best])
            return ChangepointRecord(position=int(state.position[best]),
                                     interval=(start, start + block.length),
                                     score=float(state.score[best]),
                                     sparsity=int(state.sparsity[best]))
        return None


# -----------------------------------------------------------------------------
def esac(X, ctx, cfg, intervalSet):
    """Detects and locates multiple changepoints.

    Args:
        X (DataMatrix)                  : data matrix, ideally normalized
        ctx (RateContext)               : dimensions and grid of X
        cfg (EsacConfig)                : variant and penalty tables
        intervalSet (SeededIntervalSet) : seeded intervals for X.n

    Returns:
        (DetectionResult)

    Raises:
        (MismatchedNError)  : if the interval set or context were built
                              for a different n

    """
    if intervalSet.n != X.n or ctx.n != X.n:
        raise MismatchedNError('Data has n={}, intervals n={}, context n={}'
                               .format(X.n, intervalSet.n, ctx.n))
    if ctx.p != X.p:
        raise BadParamsError('Data has p={}, context p={}'.format(X.p, ctx.p))
    gamma = cfg.gamma if cfg.gamma is not None else analyticTable(ctx)
    lam = cfg.lam if cfg.lam is not None else analyticTable(ctx)
    _checkTable(ctx, gamma)
    _checkTable(ctx, lam)

    scanner = NarrowestScanner(X, intervalSet, gamma, lam,
                               midpoint=cfg.midpoint_only_test)
    found = {}
    pending = [(0, X.n)]
    while pending:
        s, e = pending.pop()
        if e - s <= 1:
            continue
        record = scanner.narrowest(s, e)
        if record is None:
            continue
        logger.debug('({}, {}] -> changepoint {} from {} (score {:.3f}, t={})'
                     .format(s, e, record.position, record.interval,
                             record.score, record.sparsity))
        found.setdefault(record.position, record)
        if cfg.variant is Variant.SPLIT_AT_ESTIMATE:
            left = (s, record.position)
            right = (record.position, e)
        else:
            left = (s, record.interval[0] + 1)
            right = (record.interval[1] - 1, e)
        # right pushed first so the left flank is processed first
        pending.append(right)
        pending.append(left)

    records = tuple(found[position] for position in sorted(found))
    logger.debug('{} changepoint(s) after {} score evaluations'
                 .format(len(records), scanner.evaluations))
    return DetectionResult(n=X.n, records=records)


# -----------------------------------------------------------------------------
def significanceRank(result, topK):
    """Keeps the topK changepoints with the largest estimation scores.

    Args:
        result (DetectionResult)  : detector output
        topK (int)                : number of changepoints to keep

    Returns:
        (DetectionResult)         : kept changepoints, sorted by position

    """
    topK = max(0, min(int(topK), len(result.records)))
    ranked = sorted(result.records, key=lambda record: -record.score)
    kept = sorted(ranked[:topK], key=lambda record: record.position)
    return DetectionResult(n=result.n, records=tuple(kept))
