# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Noise normalization and Monte Carlo penalty calibration.

Every series is rescaled by a robust estimate of its noise level: the median
absolute deviation of the first differences, scaled to be consistent for
Gaussian noise.

Penalties for the test can be calibrated on simulated null data. For every
grid level t the maximum zero-penalty score over all seeded intervals and
split positions is recorded per replicate, and an upper order statistic of
these maxima becomes the empirical penalty. Four rules turn those quantiles
into a penalty table:

    - 'tilde'      : three leading constants, one per segment of the grid
                     (default)
    - 'naive'      : the raw quantiles at level epsilon
    - 'bonferroni' : the raw quantiles at level epsilon / |grid|
    - 'star'       : a single leading constant times r(t)

"""

import concurrent.futures
import dataclasses
import enum
import json
import math
import os

import numpy as np
from scipy import stats

from esac import (
    BadParamsError,
    ConfigMismatchError,
    DegenerateSeriesError,
    MismatchedNError,
    ParseError,
    TooShortError,
    logger,
)
from esac.core_stats import buildMatrix, makeContext, penaltyTableFrom, rateR
from esac.core_stats import zeroTable
from esac.score import chunks, cusumBlock, scoreBlock

RULES = ('tilde', 'naive', 'bonferroni', 'star')

ROLE_NULL_NOISE = 1

# Guards the ceil() in quantile indices against float round-off.
_INDEX_TOLERANCE = 1e-9


# -----------------------------------------------------------------------------
class SigmaMethod(enum.Enum):
    MAD_DIFF = 'MadDiff'
    KNOWN = 'Known'


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class SigmaEstimate(object):
    """Per-series noise levels and how they were obtained."""
    per_series: np.ndarray
    method: SigmaMethod = SigmaMethod.MAD_DIFF

    # -------------------------------------------------------------------------
    @classmethod
    def known(cls, values, p=None):
        """Wraps user supplied noise levels; a scalar is broadcast to p."""
        values = np.atleast_1d(np.asarray(values, dtype=np.float64))
        if p is not None and len(values) == 1:
            values = np.repeat(values, p)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DegenerateSeriesError('Noise levels must be finite and > 0')
        return cls(per_series=values, method=SigmaMethod.KNOWN)

    # -------------------------------------------------------------------------
    def toList(self):
        return [float(value) for value in self.per_series]


# -----------------------------------------------------------------------------
def madSigma(series):
    """Noise level of one series from the MAD of its first differences.

    Args:
        series (array_like)  : observations, at least 3

    Returns:
        (float)              : 1.4826 / sqrt(2) * MAD(diff(series))

    Raises:
        (TooShortError)          : if fewer than 3 observations
        (DegenerateSeriesError)  : if the estimate is zero

    """
    series = np.asarray(series, dtype=np.float64).reshape(-1)
    if len(series) < 3:
        raise TooShortError('MAD needs at least 3 observations, got {}'
                            .format(len(series)))
    differences = np.diff(series)
    sigma = stats.median_abs_deviation(differences, scale='normal')
    sigma /= math.sqrt(2.0)
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise DegenerateSeriesError('Zero noise level estimate; the series '
                                    'has (piecewise) constant differences')
    return float(sigma)


# -----------------------------------------------------------------------------
def estimateSigma(X):
    """Applies madSigma() to every series of X.

    Raises:
        (DegenerateSeriesError)  : naming the first degenerate series

    """
    values = []
    for i in range(X.p):
        try:
            values.append(madSigma(X.values[i]))
        except DegenerateSeriesError:
            raise DegenerateSeriesError('Series {} has a zero noise level '
                                        'estimate'.format(i))
    return SigmaEstimate(per_series=np.array(values))


# -----------------------------------------------------------------------------
def normalize(X, sig):
    """Divides every series by its noise level.

    Args:
        X (DataMatrix)        : data matrix
        sig (SigmaEstimate)   : one level per series

    Returns:
        (DataMatrix)          : rescaled matrix with rebuilt prefix sums

    """
    levels = np.asarray(sig.per_series, dtype=np.float64)
    if levels.shape != (X.p,):
        raise BadParamsError('Expected {} noise levels, got {}'
                             .format(X.p, levels.shape))
    if not np.all(np.isfinite(levels)) or np.any(levels <= 0):
        raise DegenerateSeriesError('Noise levels must be finite and > 0')
    return buildMatrix(X.values / levels[:, None])


# -----------------------------------------------------------------------------
def nullMaxima(X, table, intervalSet, midpoint=False):
    """Largest score on every grid level over all intervals and splits.

    Args:
        X (DataMatrix)                  : data matrix
        table (PenaltyTable)            : usually zeroTable()
        intervalSet (SeededIntervalSet) : intervals to scan
        midpoint (bool)                 : only scan the interval mid-points

    Returns:
        (ndarray)   : one maximum per grid level
    """
    best = np.full(len(table), -np.inf)
    for block in intervalSet.blocks:
        if midpoint:
            offsets = np.array([block.length // 2])
        else:
            offsets = np.arange(1, block.length)
        for part in chunks(len(block), X.p, len(offsets)):
            scores = scoreBlock(cusumBlock(X, block.starts[part],
                                           block.length, offsets), table)
            best = np.maximum(best, scores.max(axis=(1, 2)))
    return best


# -----------------------------------------------------------------------------
def quantileIndex(N, level):
    """1-based rank ceil(N * (1 - level)) of the empirical upper quantile."""
    return min(N, max(1, int(math.ceil(N * (1.0 - level) - _INDEX_TOLERANCE))))


# -----------------------------------------------------------------------------
def orderStatistics(maxima, level):
    """The quantileIndex()-th smallest of each column of maxima."""
    maxima = np.asarray(maxima)
    k = quantileIndex(maxima.shape[0], level)
    return np.sort(maxima, axis=0)[k - 1]


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class CalibratedGamma(object):
    """Monte Carlo calibrated testing penalty.

    'raw_quantiles' maps every grid level to the order statistic the rule
    was built from, at level epsilon / 3 for 'tilde'. 'gamma1' and
    'gamma2' are the leading constants of the sparse segments t <= ln n and
    ln n < t <= sqrt(p ln n) (None when a segment holds no grid level),
    'dense' is the value at t = p. Grid levels between sqrt(p ln n) and p
    keep their own quantile.

    """
    n: int
    p: int
    epsilon: float
    N: int
    table: object
    raw_quantiles: dict
    gamma1: float = None
    gamma2: float = None
    dense: float = None
    rule: str = 'tilde'
    seed: int = 0
    alpha: float = 1.5
    K: int = 4
    scan_mode: str = 'full'
    n_eff_mode: str = 'n4'
    normalize: bool = False
    maxima: np.ndarray = dataclasses.field(default=None, repr=False,
                                           compare=False)

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'n': self.n,
            'p': self.p,
            'epsilon': self.epsilon,
            'N': self.N,
            'alpha': self.alpha,
            'K': self.K,
            'grid': list(self.table.grid),
            'gamma': self.table.penalty.tolist(),
            'raw': [self.raw_quantiles[t] for t in self.table.grid],
            'gamma1': self.gamma1,
            'gamma2': self.gamma2,
            'dense': self.dense,
            'rule': self.rule,
            'seed': self.seed,
            'scan_mode': self.scan_mode,
            'n_eff_mode': self.n_eff_mode,
            'normalize': self.normalize,
        }


# -----------------------------------------------------------------------------
def _segmentConstant(members, quantiles, rates):
    if not members:
        return None
    return max(max(quantiles[k] / rates[k] for k in members), 0.0)


# -----------------------------------------------------------------------------
def penaltiesFromMaxima(maxima, ctx, epsilon, rule='tilde'):
    """Turns per-replicate maxima into penalties on the grid.

    Args:
        maxima (ndarray)    : N x |grid| maxima from nullMaxima()
        ctx (RateContext)   : dimensions and grid
        epsilon (float)     : target false positive probability
        rule (str)          : one of RULES

    Returns:
        (tuple)  : (penalties, raw quantiles, gamma1, gamma2, dense)

    """
    if rule not in RULES:
        raise BadParamsError("Unknown calibration rule '{}', expected one of "
                             "{}".format(rule, RULES))
    grid = ctx.sparsity_grid
    rates = [rateR(t, ctx) for t in grid]

    if rule == 'tilde':
        raw = orderStatistics(maxima, epsilon / 3.0)
        log_n = math.log(ctx.n)
        sparse_end = math.sqrt(ctx.p * log_n)
        first = [k for k, t in enumerate(grid)
                 if t <= min(log_n, sparse_end) and t != ctx.p]
        second = [k for k, t in enumerate(grid)
                  if log_n < t <= sparse_end and t != ctx.p]
        gamma1 = _segmentConstant(first, raw, rates)
        gamma2 = _segmentConstant(second, raw, rates)
        dense = max(float(raw[-1]), 0.0)
        # levels between sqrt(p ln n) and p keep their own quantile
        penalties = np.maximum(np.asarray(raw, dtype=float), 0.0)
        penalties[first] = [gamma1 * rates[k] for k in first]
        penalties[second] = [gamma2 * rates[k] for k in second]
        return penalties, raw, gamma1, gamma2, dense

    level = epsilon / len(grid) if rule == 'bonferroni' else epsilon
    raw = orderStatistics(maxima, level)
    if rule == 'star':
        constant = _segmentConstant(range(len(grid)), raw, rates)
        penalties = np.array([constant * rate for rate in rates])
        return penalties, raw, constant, None, float(penalties[-1])
    penalties = np.maximum(raw, 0.0)
    return penalties, raw, None, None, float(penalties[-1])


# -----------------------------------------------------------------------------
def _nullReplicate(replicate, seed, ctx, intervalSet, table, midpoint,
                   normalizeNull):
    rng = np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(replicate, ROLE_NULL_NOISE)))
    X = buildMatrix(rng.standard_normal((ctx.p, ctx.n)))
    if normalizeNull:
        X = normalize(X, estimateSigma(X))
    return nullMaxima(X, table, intervalSet, midpoint=midpoint)


# -----------------------------------------------------------------------------
def simulateNullMaxima(ctx, intervalSet, N, seed, normalize=False,
                       midpoint=False, threads=None):
    """Runs N null replicates and collects their per-level maxima.

    Replicate j draws its noise from the stream (seed, j, role), so the
    result does not depend on 'threads'.

    Returns:
        (ndarray)   : N x |grid| maxima
    """
    table = zeroTable(ctx)
    maxima = np.empty((N, len(table)))
    workers = threads or os.cpu_count() or 1
    step = max(1, N // 10)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        results = pool.map(
            lambda j: _nullReplicate(j, seed, ctx, intervalSet, table,
                                     midpoint, normalize),
            range(N))
        for j, row in enumerate(results):
            maxima[j] = row
            if (j + 1) % step == 0:
                logger.info('  calibration: {:3d}% ({}/{})'
                            .format(100 * (j + 1) // N, j + 1, N))
    return maxima


# -----------------------------------------------------------------------------
def calibrateGamma(n, p, ctx, intervalSet, N, epsilon, seed,
                   normalize=False, midpoint=False, rule='tilde',
                   threads=None):
    """Calibrates the testing penalty on simulated null data.

    Args:
        n, p (int)                      : data dimensions
        ctx (RateContext)               : context for n and p
        intervalSet (SeededIntervalSet) : intervals the detector will use
        N (int)                         : Monte Carlo size, >= 100
        epsilon (float)                 : false positive target in (0, 1)
        seed (int)                      : master seed
        normalize (bool)                : MAD-normalize the null draws
        midpoint (bool)                 : calibrate the midpoint-only scan
        rule (str)                      : one of RULES
        threads (int)                   : worker threads, all cores if None

    Returns:
        (CalibratedGamma)

    Raises:
        (BadParamsError)    : on invalid N, epsilon or rule
        (MismatchedNError)  : if ctx or intervalSet disagree with n

    """
    if int(N) != N or N < 100:
        raise BadParamsError('Monte Carlo size must be >= 100, got {}'
                             .format(N))
    if not 0.0 < epsilon < 1.0:
        raise BadParamsError('epsilon must be in (0, 1), got {}'
                             .format(epsilon))
    if rule not in RULES:
        raise BadParamsError("Unknown calibration rule '{}', expected one of "
                             "{}".format(rule, RULES))
    if ctx.n != n or intervalSet.n != n:
        raise MismatchedNError('n={} but context has n={} and intervals n={}'
                               .format(n, ctx.n, intervalSet.n))
    if ctx.p != p:
        raise BadParamsError('p={} but context has p={}'.format(p, ctx.p))
    N = int(N)

    logger.info('Calibrating penalties: n={}, p={}, N={}, epsilon={}, '
                'rule={}'.format(n, p, N, epsilon, rule))
    maxima = simulateNullMaxima(ctx, intervalSet, N, seed,
                                normalize=normalize, midpoint=midpoint,
                                threads=threads)
    penalties, raw, gamma1, gamma2, dense = penaltiesFromMaxima(
        maxima, ctx, epsilon, rule=rule)
    table = penaltyTableFrom(ctx, penalties,
                             label='calibrated ({}, eps={})'
                             .format(rule, epsilon))
    return CalibratedGamma(
        n=n, p=p, epsilon=epsilon, N=N, table=table,
        raw_quantiles={t: float(raw[k]) for k, t in enumerate(ctx.sparsity_grid)},
        gamma1=gamma1, gamma2=gamma2, dense=dense, rule=rule, seed=seed,
        alpha=intervalSet.alpha, K=intervalSet.K,
        scan_mode='midpoint' if midpoint else 'full',
        n_eff_mode=ctx.n_eff_mode, normalize=normalize, maxima=maxima)


# -----------------------------------------------------------------------------
def saveCalibration(calibrated, path):
    """Writes a calibrated penalty to a JSON file."""
    with open(path, 'w') as file_handle:
        json.dump(calibrated.toDict(), file_handle, indent=4)
    logger.debug("Saved calibration to '{}'".format(path))


# -----------------------------------------------------------------------------
def loadCalibration(path):
    """Reads a calibrated penalty written by saveCalibration().

    Raises:
        (ParseError)           : if the file is not valid JSON
        (ConfigMismatchError)  : if the stored grid does not match n and p

    """
    try:
        with open(path, 'r') as file_handle:
            content = json.load(file_handle)
    except json.JSONDecodeError as e:
        raise ParseError("Calibration file '{}' is not valid JSON: {}"
                         .format(path, e))
    try:
        ctx = makeContext(content['n'], content['p'],
                          nEffMode=content.get('n_eff_mode', 'n4'))
        grid = tuple(content['grid'])
        gamma = content['gamma']
        raw = content['raw']
    except KeyError as e:
        raise ParseError("Calibration file '{}' lacks the key {}"
                         .format(path, e))
    if grid != ctx.sparsity_grid:
        raise ConfigMismatchError('Stored grid {} does not match the grid {} '
                                  'of n={}, p={}'
                                  .format(list(grid), list(ctx.sparsity_grid),
                                          ctx.n, ctx.p))
    table = penaltyTableFrom(ctx, gamma, label="calibrated ('{}')"
                             .format(os.path.basename(path)))
    return CalibratedGamma(
        n=ctx.n, p=ctx.p, epsilon=content.get('epsilon'), N=content.get('N'),
        table=table, raw_quantiles=dict(zip(grid, raw)),
        gamma1=content.get('gamma1'), gamma2=content.get('gamma2'),
        dense=content.get('dense'), rule=content.get('rule', 'tilde'),
        seed=content.get('seed'), alpha=content.get('alpha'),
        K=content.get('K'), scan_mode=content.get('scan_mode', 'full'),
        n_eff_mode=ctx.n_eff_mode,
        normalize=bool(content.get('normalize', False)))


# -----------------------------------------------------------------------------
def checkCalibration(calibrated, ctx, alpha, K, scanMode):
    """Raises ConfigMismatchError unless a calibrated penalty was made for
    these data and detector settings."""
    expected = {
        'n': ctx.n,
        'p': ctx.p,
        'alpha': alpha,
        'K': K,
        'scan_mode': scanMode,
        'n_eff_mode': ctx.n_eff_mode,
    }
    for key, value in expected.items():
        stored = getattr(calibrated, key)
        if stored != value:
            raise ConfigMismatchError("Calibrated penalty has {}={}, but the "
                                      "detector uses {}".format(key, stored,
                                                                value))
