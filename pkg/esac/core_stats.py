# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Numerical primitives shared by every other module.

Holds the data matrix with its prefix sums, the CUSUM transform, the
truncated second moment of a standard normal, and the family of rate,
threshold and penalty functions evaluated on the sparsity grid.

All logarithms are natural logarithms.

"""

import dataclasses
import math

import numpy as np
from scipy import special

from esac import (
    BadIntervalError,
    BadParamsError,
    BadSparsityError,
    NegativeThresholdError,
    NonFiniteError,
    OutOfRangeError,
    TooShortError,
)

N_EFF_MODES = ('n4', 'n')

# Above this threshold nuTrunc switches to the asymptotic expansion.
_NU_ASYMPTOTIC_FROM = 38.0


# -----------------------------------------------------------------------------
class DataMatrix(object):
    """p series observed at n time points, plus per-series prefix sums.

    Use buildMatrix() to construct one. Both arrays are read-only.

    """

    # -------------------------------------------------------------------------
    def __init__(self, values, prefix):
        self._values = values
        self._prefix = prefix

    # -------------------------------------------------------------------------
    @property
    def values(self):
        """(ndarray) p x n matrix, series i at time v stored in [i, v-1]."""
        return self._values

    # -------------------------------------------------------------------------
    @property
    def prefix(self):
        """(ndarray) p x (n+1) cumulative sums, prefix[:, 0] == 0."""
        return self._prefix

    # -------------------------------------------------------------------------
    @property
    def p(self):
        return self._values.shape[0]

    # -------------------------------------------------------------------------
    @property
    def n(self):
        return self._values.shape[1]

    # -------------------------------------------------------------------------
    def __repr__(self):
        return 'DataMatrix(p={}, n={})'.format(self.p, self.n)


# -----------------------------------------------------------------------------
def buildMatrix(raw):
    """Wraps a p x n array of observations into an immutable DataMatrix.

    A one-dimensional input is read as a single series.

    Args:
        raw (array_like)  : observations, rows are series, columns time points

    Returns:
        (DataMatrix)      : data matrix with populated prefix sums

    Raises:
        (BadParamsError)  : if raw is not one- or two-dimensional
        (TooShortError)   : if there are fewer than 2 time points
        (NonFiniteError)  : if any entry is NaN or infinite

    """
    values = np.array(raw, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(1, -1)
    if values.ndim != 2 or values.shape[0] < 1:
        raise BadParamsError('Expected a p x n matrix, got shape {}'
                             .format(values.shape))
    if values.shape[1] < 2:
        raise TooShortError('Need at least 2 time points, got {}'
                            .format(values.shape[1]))
    if not np.all(np.isfinite(values)):
        raise NonFiniteError('Data matrix contains NaN or infinite entries')

    prefix = np.zeros((values.shape[0], values.shape[1] + 1))
    np.cumsum(values, axis=1, out=prefix[:, 1:])

    values.flags.writeable = False
    prefix.flags.writeable = False
    return DataMatrix(values, prefix)


# -----------------------------------------------------------------------------
def cusum(X, i, s, e, v):
    """CUSUM contrast of series i on (s, e] split at v.

    Evaluated in O(1) from the prefix sums.

    Args:
        X (DataMatrix)  : data matrix
        i (int)         : series index, 0-based
        s, e, v (int)   : interval triple with 0 <= s < v < e <= n

    Returns:
        (float)         : the CUSUM statistic

    Raises:
        (BadIntervalError) : on an invalid triple
        (OutOfRangeError)  : on an invalid series index

    """
    checkTriple(X.n, s, e, v)
    if not 0 <= i < X.p:
        raise OutOfRangeError('Series index {} outside of [0, {})'
                              .format(i, X.p))
    row = X.prefix[i]
    left = row[v] - row[s]
    right = row[e] - row[v]
    d = float(e - s)
    return (math.sqrt((e - v) / (d * (v - s))) * left
            - math.sqrt((v - s) / (d * (e - v))) * right)


# -----------------------------------------------------------------------------
def checkTriple(n, s, e, v):
    """Raises BadIntervalError unless 0 <= s < v < e <= n."""
    if not (0 <= s < v < e <= n):
        raise BadIntervalError('Invalid triple s={}, v={}, e={} for n={}'
                               .format(s, v, e, n))


# -----------------------------------------------------------------------------
def nuTrunc(a):
    """Conditional second moment E(Z^2 | |Z| >= a) of a standard normal Z.

    Equals 1 + a * phi(a) / Q(a). The ratio phi/Q is taken from the scaled
    complementary error function, so nothing underflows. Past a = 38 the
    asymptotic expansion of the Mills ratio is used.

    Args:
        a (float)   : nonnegative threshold

    Returns:
        (float)     : nu_a, within [a^2 + 1, a^2 + 2]

    Raises:
        (NegativeThresholdError) : if a < 0 or a is NaN

    """
    a = float(a)
    if not a >= 0.0:
        raise NegativeThresholdError('Threshold must be >= 0, got {}'
                                     .format(a))
    if a == 0.0:
        return 1.0
    if a > _NU_ASYMPTOTIC_FROM:
        x = 1.0 / (a * a)
        return a * a + 2.0 - 2.0 * x + 10.0 * x * x - 74.0 * x * x * x
    inverse_mills = math.sqrt(2.0 / math.pi) / special.erfcx(a / math.sqrt(2.0))
    return 1.0 + a * inverse_mills


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class RateContext(object):
    """Problem dimensions and the sparsity grid they induce.

    'n_eff' replaces n inside every logarithm of the rate family; by default
    it is n^4 ('n4' mode), or n itself in the theoretical 'n' mode.

    """
    n: int
    p: int
    n_eff: float
    sparsity_grid: tuple = ()
    n_eff_mode: str = 'n4'

    # -------------------------------------------------------------------------
    @property
    def log_n_eff(self):
        if self.n_eff_mode == 'n4':
            return 4.0 * math.log(self.n)
        return math.log(self.n)

    # -------------------------------------------------------------------------
    @property
    def dense_bound(self):
        """sqrt(p log n_eff), the sparse/dense boundary."""
        return math.sqrt(self.p * self.log_n_eff)

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'n': self.n,
            'p': self.p,
            'n_eff_mode': self.n_eff_mode,
            'grid': list(self.sparsity_grid),
        }


# -----------------------------------------------------------------------------
def makeContext(n, p, nEffMode='n4'):
    """Builds a RateContext, including its sparsity grid.

    Args:
        n (int)          : number of time points, >= 2
        p (int)          : number of series, >= 1
        nEffMode (str)   : 'n4' (default) or 'n'

    Returns:
        (RateContext)

    Raises:
        (BadParamsError) : on invalid dimensions or mode

    """
    if nEffMode not in N_EFF_MODES:
        raise BadParamsError("n_eff mode must be one of {}, got '{}'"
                             .format(N_EFF_MODES, nEffMode))
    if int(n) != n or n < 2:
        raise BadParamsError('n must be an integer >= 2, got {}'.format(n))
    if int(p) != p or p < 1:
        raise BadParamsError('p must be an integer >= 1, got {}'.format(p))
    n = int(n)
    p = int(p)
    n_eff = float(n) ** 4 if nEffMode == 'n4' else float(n)
    ctx = RateContext(n=n, p=p, n_eff=n_eff, n_eff_mode=nEffMode)
    return dataclasses.replace(ctx, sparsity_grid=sparsityGrid(ctx))


# -----------------------------------------------------------------------------
def sparsityGrid(ctx):
    """Candidate sparsity levels {1, 2, 4, ..., 2^m} U {p}.

    2^m is the largest power of two not exceeding floor(sqrt(p log n_eff)).
    Values above p are dropped.

    Args:
        ctx (RateContext) : dimensions; its own grid is ignored

    Returns:
        (tuple)           : strictly increasing sparsity levels

    """
    cap = int(math.floor(ctx.dense_bound))
    grid = {1, ctx.p}
    t = 1
    while t <= cap and t <= ctx.p:
        grid.add(t)
        t *= 2
    return tuple(sorted(grid))


# -----------------------------------------------------------------------------
def _checkSparsity(t, ctx):
    if not 1 <= t <= ctx.p:
        raise OutOfRangeError('Sparsity {} outside of [1, {}]'.format(t, ctx.p))


# -----------------------------------------------------------------------------
def rateR(t, ctx):
    """Detection boundary rate r(t).

    Args:
        t (int)            : sparsity level in [1, p]
        ctx (RateContext)  : dimensions

    Returns:
        (float)

    Raises:
        (OutOfRangeError)  : if t is outside of [1, p]

    """
    _checkSparsity(t, ctx)
    bound = ctx.dense_bound
    if t >= bound:
        return bound
    log_n = ctx.log_n_eff
    return max(t * math.log(math.e * ctx.p * log_n / (t * t)), log_n)


# -----------------------------------------------------------------------------
def rateH(t, ctx):
    """Localization rate h(t); differs from r(t) in the dense branch only.

    Raises:
        (OutOfRangeError)  : if t is outside of [1, p]

    """
    _checkSparsity(t, ctx)
    if t >= ctx.dense_bound:
        log_term = max(ctx.log_n_eff, math.log(math.log(math.e * ctx.p)))
        return math.sqrt(ctx.p * log_term)
    return rateR(t, ctx)


# -----------------------------------------------------------------------------
def thresholdA(t, ctx):
    """Truncation threshold a(t); zero in the dense regime.

    Raises:
        (OutOfRangeError)  : if t is outside of [1, p]

    """
    _checkSparsity(t, ctx)
    if t >= ctx.dense_bound:
        return 0.0
    return math.sqrt(4.0 * math.log(math.e * ctx.p * ctx.log_n_eff / (t * t)))


# -----------------------------------------------------------------------------
def lambdaTilde(t, ctx):
    """Recommended analytical estimation penalty.

    The branch values use n^4 in place of n whatever the context's mode;
    the switch to the dense branch happens at sqrt(p log n).

    Raises:
        (OutOfRangeError)  : if t is outside of [1, p]

    """
    _checkSparsity(t, ctx)
    log_n4 = 4.0 * math.log(ctx.n)
    if t >= math.sqrt(ctx.p * math.log(ctx.n)):
        return 1.5 * (math.sqrt(ctx.p * log_n4) + log_n4)
    return t * math.log(math.e * ctx.p * log_n4 / (t * t)) + log_n4


# -----------------------------------------------------------------------------
class PenaltyTable(object):
    """Threshold a(t), centering term nu_{a(t)} and penalty for every t on
    the sparsity grid.

    The three arrays are aligned with 'grid' and read-only.

    """

    # -------------------------------------------------------------------------
    def __init__(self, grid, a, nu, penalty, label=''):
        self._grid = tuple(int(t) for t in grid)
        self._a = _frozen(a)
        self._nu = _frozen(nu)
        self._penalty = _frozen(penalty)
        self.label = label

        sizes = {len(self._grid), len(self._a), len(self._nu),
                 len(self._penalty)}
        if len(sizes) != 1:
            raise BadParamsError('PenaltyTable columns differ in length')
        if np.any(self._penalty < 0) or not np.all(np.isfinite(self._penalty)):
            raise BadParamsError('Penalties must be finite and >= 0')

    # -------------------------------------------------------------------------
    @property
    def grid(self):
        return self._grid

    # -------------------------------------------------------------------------
    @property
    def a(self):
        return self._a

    # -------------------------------------------------------------------------
    @property
    def nu(self):
        return self._nu

    # -------------------------------------------------------------------------
    @property
    def penalty(self):
        return self._penalty

    # -------------------------------------------------------------------------
    def __len__(self):
        return len(self._grid)

    # -------------------------------------------------------------------------
    def index(self, t):
        """Position of sparsity level t in the grid.

        Raises:
            (BadSparsityError)  : if t is not a grid level

        """
        try:
            return self._grid.index(int(t))
        except ValueError:
            raise BadSparsityError('Sparsity {} is not on the grid {}'
                                   .format(t, self._grid))

    # -------------------------------------------------------------------------
    def entries(self):
        """(dict) t -> (a, nu, penalty)"""
        return {t: (float(self._a[k]), float(self._nu[k]),
                    float(self._penalty[k]))
                for k, t in enumerate(self._grid)}

    # -------------------------------------------------------------------------
    def withPenalties(self, penalty, label=''):
        """Returns a copy with the same thresholds and new penalty values."""
        return PenaltyTable(self._grid, self._a, self._nu, penalty, label=label)

    # -------------------------------------------------------------------------
    def toDict(self):
        return {
            'label': self.label,
            'grid': list(self._grid),
            'a': self._a.tolist(),
            'nu': self._nu.tolist(),
            'penalty': self._penalty.tolist(),
        }


# -----------------------------------------------------------------------------
def _frozen(values):
    array = np.array(values, dtype=np.float64).reshape(-1)
    array.flags.writeable = False
    return array


# -----------------------------------------------------------------------------
def penaltyTableFrom(ctx, penalties, label='custom'):
    """Builds a PenaltyTable on the context's grid from explicit penalties.

    Args:
        ctx (RateContext)       : dimensions and grid
        penalties (sequence)    : one penalty per grid level, or a callable
                                  t -> penalty
        label (str)             : free text describing the source

    Returns:
        (PenaltyTable)

    """
    grid = ctx.sparsity_grid
    if callable(penalties):
        penalties = [penalties(t) for t in grid]
    if len(penalties) != len(grid):
        raise BadParamsError('Expected {} penalties, got {}'
                             .format(len(grid), len(penalties)))
    a = [thresholdA(t, ctx) for t in grid]
    nu = [nuTrunc(value) for value in a]
    return PenaltyTable(grid, a, nu, penalties, label=label)


# -----------------------------------------------------------------------------
def analyticTable(ctx):
    """PenaltyTable with the analytical penalty lambdaTilde."""
    return penaltyTableFrom(ctx, lambda t: lambdaTilde(t, ctx),
                            label='analytic')


# -----------------------------------------------------------------------------
def rateTable(ctx, gamma0):
    """PenaltyTable with penalty gamma0 * r(t)."""
    if gamma0 < 0:
        raise BadParamsError('gamma0 must be >= 0, got {}'.format(gamma0))
    return penaltyTableFrom(ctx, lambda t: gamma0 * rateR(t, ctx),
                            label='rate x {}'.format(gamma0))


# -----------------------------------------------------------------------------
def zeroTable(ctx):
    """PenaltyTable with zero penalty, used for calibration."""
    return penaltyTableFrom(ctx, lambda t: 0.0, label='zero')
