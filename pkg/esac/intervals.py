# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Deterministic seeded intervals.

Interval lengths follow the ladder l_1 = 1, l_{j+1} = max(l_j + 1,
floor(alpha * l_j)) with 2 * l <= n. For every length 2l the intervals
(i * s_l, i * s_l + 2l] are laid out with shift s_l = max(1, floor(l / K)),
plus one interval anchored at the right end (n - 2l, n].

"""

import dataclasses
import json
import math

import numpy as np

from esac import BadParamsError, logger


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class SeededInterval(object):
    """Half-open integer interval (s, e]."""
    s: int
    e: int

    # -------------------------------------------------------------------------
    @property
    def length(self):
        return self.e - self.s

    # -------------------------------------------------------------------------
    @property
    def center(self):
        return (self.s + self.e) // 2


# -----------------------------------------------------------------------------
class IntervalBlock(object):
    """All intervals of one length, ordered by start."""

    # -------------------------------------------------------------------------
    def __init__(self, length, starts):
        self.length = int(length)
        self.starts = starts

    # -------------------------------------------------------------------------
    def __len__(self):
        return len(self.starts)

    # -------------------------------------------------------------------------
    def containedIn(self, s, e):
        """Index range of the intervals inside (s, e].

        Returns:
            (tuple)   : (lo, hi) so that starts[lo:hi] are the contained ones

        """
        lo = int(np.searchsorted(self.starts, s, side='left'))
        hi = int(np.searchsorted(self.starts, e - self.length, side='right'))
        return lo, max(lo, hi)


# -----------------------------------------------------------------------------
class SeededIntervalSet(object):
    """Deduplicated seeded intervals, sorted by length, then by start.

    Iterating yields SeededInterval objects in that canonical order;
    'blocks' groups them by length for vectorised scans.

    """

    # -------------------------------------------------------------------------
    def __init__(self, n, alpha, K, blocks):
        self.n = n
        self.alpha = alpha
        self.K = K
        self._blocks = tuple(blocks)

    # -------------------------------------------------------------------------
    @property
    def blocks(self):
        return self._blocks

    # -------------------------------------------------------------------------
    @property
    def lengths(self):
        return [block.length for block in self._blocks]

    # -------------------------------------------------------------------------
    @property
    def intervals(self):
        return list(self)

    # -------------------------------------------------------------------------
    def __len__(self):
        return sum(len(block) for block in self._blocks)

    # -------------------------------------------------------------------------
    def __iter__(self):
        for block in self._blocks:
            for start in block.starts:
                yield SeededInterval(int(start), int(start) + block.length)

    # -------------------------------------------------------------------------
    def __contains__(self, interval):
        for block in self._blocks:
            if block.length == interval.e - interval.s:
                k = np.searchsorted(block.starts, interval.s)
                return k < len(block) and block.starts[k] == interval.s
        return False

    # -------------------------------------------------------------------------
    def toJsonLines(self):
        """Returns one JSON object {"s": .., "e": ..} per interval."""
        return [json.dumps({'s': item.s, 'e': item.e}) for item in self]

    # -------------------------------------------------------------------------
    def __repr__(self):
        return ('SeededIntervalSet(n={}, alpha={}, K={}, size={})'
                .format(self.n, self.alpha, self.K, len(self)))


# -----------------------------------------------------------------------------
def ladder(n, alpha):
    """Half-lengths l of the generated intervals, ascending.

    Args:
        n (int)        : number of time points
        alpha (float)  : growth factor > 1

    Returns:
        (list)         : ladder values l with 2 * l <= n

    """
    values = []
    l = 1
    while 2 * l <= n:
        values.append(l)
        l = max(l + 1, int(math.floor(alpha * l)))
    return values


# -----------------------------------------------------------------------------
def generate(n, alpha=1.5, K=4):
    """Generates the seeded interval set for n time points.

    Args:
        n (int)          : number of time points, >= 2
        alpha (float)    : length growth factor, > 1
        K (int)          : shift divisor, >= 1

    Returns:
        (SeededIntervalSet)

    Raises:
        (BadParamsError) : on invalid parameters

    """
    if int(n) != n or n < 2:
        raise BadParamsError('n must be an integer >= 2, got {}'.format(n))
    if not alpha > 1:
        raise BadParamsError('alpha must be > 1, got {}'.format(alpha))
    if int(K) != K or K < 1:
        raise BadParamsError('K must be an integer >= 1, got {}'.format(K))
    n = int(n)
    K = int(K)

    blocks = []
    for l in ladder(n, alpha):
        shift = max(1, l // K)
        last = n - 2 * l
        starts = np.arange(0, last + 1, shift, dtype=np.intp)
        if starts[-1] != last:
            starts = np.append(starts, np.intp(last))
        starts.flags.writeable = False
        blocks.append(IntervalBlock(2 * l, starts))

    result = SeededIntervalSet(n, alpha, K, blocks)
    logger.debug('Generated {}'.format(result))
    return result


# -----------------------------------------------------------------------------
def tripleCount(intervalSet):
    """Number of (s, v, e) scan triples, sum of (e - s - 1)."""
    return int(sum(len(block) * (block.length - 1)
                   for block in intervalSet.blocks))


# -----------------------------------------------------------------------------
def _qualifyingBlocks(intervalSet, h):
    """Blocks whose half-length l satisfies h/2 <= l <= max(h, 1), widest
    first."""
    upper = max(h, 1.0)
    for block in reversed(intervalSet.blocks):
        l = block.length // 2
        if h / 2.0 <= l <= upper:
            yield block


# -----------------------------------------------------------------------------
def admissibleRange(n, h):
    """First and last changepoint location covered by the witness guarantee.

    Returns:
        (tuple)   : (lo, hi), possibly empty when lo > hi

    """
    margin = max(int(math.ceil(1.5 * h)), 1)
    return margin, n - margin


# -----------------------------------------------------------------------------
def coverageWitness(intervalSet, h, eta):
    """Finds an interval (v - l, v + l] with h/2 <= l <= max(h, 1) whose
    center is within l/K of eta.

    Args:
        intervalSet (SeededIntervalSet) : intervals to search
        h (float)                       : scale in (0, n/2]
        eta (int)                       : location to cover

    Returns:
        (SeededInterval)  : widest witness, leftmost among equal lengths,
                            or None

    """
    for block in _qualifyingBlocks(intervalSet, h):
        l = block.length // 2
        centers = block.starts + l
        hits = np.nonzero(np.abs(centers - eta) * intervalSet.K <= l)[0]
        if len(hits):
            start = int(block.starts[hits[0]])
            return SeededInterval(start, start + block.length)
    return None


# -----------------------------------------------------------------------------
def uncoveredLocations(intervalSet, h):
    """All admissible locations eta for which coverageWitness finds nothing.

    Vectorised over eta, used for exhaustive coverage checks.

    Args:
        intervalSet (SeededIntervalSet) : intervals to search
        h (float)                       : scale in (0, n/2]

    Returns:
        (ndarray)   : uncovered locations, empty if coverage holds

    """
    n = intervalSet.n
    lo, hi = admissibleRange(n, h)
    if lo > hi:
        return np.zeros(0, dtype=np.intp)

    diff = np.zeros(n + 2, dtype=np.intp)
    for block in _qualifyingBlocks(intervalSet, h):
        l = block.length // 2
        radius = l // intervalSet.K
        centers = block.starts + l
        np.add.at(diff, np.maximum(centers - radius, 0), 1)
        np.add.at(diff, np.minimum(centers + radius + 1, n + 1), -1)
    covered = np.cumsum(diff)[:n + 1] > 0

    locations = np.arange(lo, hi + 1)
    return locations[~covered[lo:hi + 1]]
