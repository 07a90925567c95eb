# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""Data generation, evaluation metrics and the experiment harness.

Data follow X_v = mu_v + W_v, v = 1..n, where the mean mu changes at the
changepoints of a SimulationSpec and W is drawn from one of the noise
models in NoiseModel. Change vectors are supported on the first k_j
coordinates and scaled so that Delta_j * |theta_j|^2 = c * sigma^2 * r(k_j).

Randomness:
    All draws of replicate j come from numpy PCG64 streams seeded with
    SeedSequence(seed, spawn_key=(j, role)); role 0 feeds the design
    (locations, sparsities, directions, asynchronous shifts), role 1 the
    noise. Results are therefore reproducible whatever the thread count.

"""

import concurrent.futures
import dataclasses
import enum
import math
import os
import time

import numpy as np
import pandas
from scipy import signal

from esac import SpecInvalidError, intervals, logger
from esac.calibrate import (
    checkCalibration, estimateSigma, loadCalibration, normalize)
from esac.core_stats import analyticTable, buildMatrix, makeContext, rateR
from esac.detect import EsacConfig, Variant, esac, estimateSingle

PRNG = 'PCG64'

ROLE_DESIGN = 0
ROLE_NOISE = 1

HAUSDORFF_COLUMN = 'Hausdorff distance'
J_ERROR_COLUMN = '|J_hat − J|'


# -----------------------------------------------------------------------------
class NoiseModel(enum.Enum):
    M0 = 'M0'
    UNIF = 'Unif'
    STUDENT_T = 'StudentT'
    CS_LOC = 'CsLoc'
    CS = 'Cs'
    TEMP = 'Temp'
    ASYNC = 'Async'
    GRADUAL = 'Gradual'


# -----------------------------------------------------------------------------
def streams(seed, replicate):
    """Design and noise generators of one replicate."""
    return tuple(np.random.default_rng(np.random.SeedSequence(
                     seed, spawn_key=(replicate, role)))
                 for role in (ROLE_DESIGN, ROLE_NOISE))


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class SimulationSpec(object):
    """Ground truth of one simulated data set.

    'norm_constant' is c in Delta_j * |theta_j|^2 = c * sigma^2 * r(k_j).
    'directions' is 'sign' (equal magnitudes, random signs) or 'gaussian'
    (random magnitudes). 'rho' parametrizes CsLoc, Cs and Temp, 'df' the
    StudentT model.

    """
    n: int
    p: int
    changepoints: tuple = ()
    sparsities: tuple = ()
    norm_constant: float = 1.0
    directions: str = 'sign'
    noise: NoiseModel = NoiseModel.M0
    rho: float = 0.0
    df: float = 5.0
    sigma: float = 1.0
    seed: int = 0
    n_eff_mode: str = 'n4'

    # -------------------------------------------------------------------------
    def __post_init__(self):
        object.__setattr__(self, 'changepoints',
                           tuple(int(eta) for eta in self.changepoints))
        object.__setattr__(self, 'sparsities',
                           tuple(int(k) for k in self.sparsities))
        if not isinstance(self.noise, NoiseModel):
            try:
                object.__setattr__(self, 'noise', NoiseModel(self.noise))
            except ValueError:
                raise SpecInvalidError("Unknown noise model '{}'"
                                       .format(self.noise))
        self.validate()

    # -------------------------------------------------------------------------
    def validate(self):
        if self.n < 2 or self.p < 1:
            raise SpecInvalidError('Need n >= 2 and p >= 1, got n={}, p={}'
                                   .format(self.n, self.p))
        etas = self.changepoints
        if any(not 0 < eta < self.n for eta in etas):
            raise SpecInvalidError('Changepoints must lie in (0, {}), got {}'
                                   .format(self.n, list(etas)))
        if any(b <= a for a, b in zip(etas, etas[1:])):
            raise SpecInvalidError('Changepoints must be strictly increasing, '
                                   'got {}'.format(list(etas)))
        if len(self.sparsities) != len(etas):
            raise SpecInvalidError('Got {} sparsities for {} changepoints'
                                   .format(len(self.sparsities), len(etas)))
        if any(not 1 <= k <= self.p for k in self.sparsities):
            raise SpecInvalidError('Sparsities must lie in [1, {}], got {}'
                                   .format(self.p, list(self.sparsities)))
        if self.directions not in ('sign', 'gaussian'):
            raise SpecInvalidError("Directions must be 'sign' or 'gaussian', "
                                   "got '{}'".format(self.directions))
        if not self.sigma > 0 or self.norm_constant < 0:
            raise SpecInvalidError('Need sigma > 0 and norm_constant >= 0')
        if self.noise is NoiseModel.STUDENT_T and not self.df > 2:
            raise SpecInvalidError('StudentT noise needs df > 2, got {}'
                                   .format(self.df))
        if self.noise is NoiseModel.CS_LOC and not 0 <= self.rho < 1:
            raise SpecInvalidError('CsLoc needs 0 <= rho < 1, got {}'
                                   .format(self.rho))
        if self.noise is NoiseModel.CS and not 0 <= self.rho <= 1:
            raise SpecInvalidError('Cs needs 0 <= rho <= 1, got {}'
                                   .format(self.rho))
        if self.noise is NoiseModel.TEMP and not 0 < self.rho <= 1:
            raise SpecInvalidError('Temp needs 0 < rho <= 1, got {}'
                                   .format(self.rho))

    # -------------------------------------------------------------------------
    @property
    def spacings(self):
        """Delta_j = min(eta_j - eta_{j-1}, eta_{j+1} - eta_j)."""
        bounds = (0,) + self.changepoints + (self.n,)
        return tuple(min(bounds[j] - bounds[j - 1], bounds[j + 1] - bounds[j])
                     for j in range(1, len(bounds) - 1))

    # -------------------------------------------------------------------------
    def toDict(self):
        result = dataclasses.asdict(self)
        result['noise'] = self.noise.value
        result['changepoints'] = list(self.changepoints)
        result['sparsities'] = list(self.sparsities)
        return result


# -----------------------------------------------------------------------------
def changeVectors(spec, rng):
    """Change vectors theta_j, each supported on its first k_j coordinates.

    Returns:
        (list)   : one length-p array per changepoint
    """
    ctx = makeContext(spec.n, spec.p, nEffMode=spec.n_eff_mode)
    vectors = []
    for k, delta in zip(spec.sparsities, spec.spacings):
        if spec.directions == 'sign':
            direction = rng.choice(np.array([-1.0, 1.0]), size=k)
        else:
            direction = rng.standard_normal(k)
        norm = spec.sigma * math.sqrt(spec.norm_constant
                                      * rateR(k, ctx) / delta)
        theta = np.zeros(spec.p)
        theta[:k] = norm * direction / np.linalg.norm(direction)
        vectors.append(theta)
    return vectors


# -----------------------------------------------------------------------------
def _profile(spec, j, rng, times):
    """Fraction of change j already applied at every time, drawn afresh per
    coordinate in the asynchronous model."""
    eta = spec.changepoints[j]
    half = spec.spacings[j] // 2
    if spec.noise is NoiseModel.ASYNC:
        eta = int(rng.integers(eta - half, eta + half + 1))
        return (times > eta).astype(np.float64)
    if spec.noise is NoiseModel.GRADUAL and half > 0:
        start = eta - half
        end = eta + half + 1
        return np.clip((times - start) / float(end - start), 0.0, 1.0)
    return (times > eta).astype(np.float64)


# -----------------------------------------------------------------------------
def buildMean(spec, thetas, rng):
    """p x n mean matrix, zero before the first changepoint."""
    times = np.arange(1, spec.n + 1, dtype=np.float64)
    mean = np.zeros((spec.p, spec.n))
    for j, theta in enumerate(thetas):
        support = np.nonzero(theta)[0]
        if spec.noise is NoiseModel.ASYNC:
            for i in support:
                mean[i] += theta[i] * _profile(spec, j, rng, times)
        else:
            mean[support] += (theta[support, None]
                              * _profile(spec, j, rng, times)[None, :])
    return mean


# -----------------------------------------------------------------------------
def buildNoise(spec, rng):
    """p x n noise matrix with unit variance entries, times sigma."""
    shape = (spec.p, spec.n)
    model = spec.noise
    if model is NoiseModel.UNIF:
        noise = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)
    elif model is NoiseModel.STUDENT_T:
        noise = (rng.standard_t(spec.df, size=shape)
                 / math.sqrt(spec.df / (spec.df - 2.0)))
    elif model is NoiseModel.CS_LOC:
        # AR(1) across coordinates: corr(W_i, W_j) = rho^|i-j|
        innovations = rng.standard_normal(shape)
        scale = math.sqrt(1.0 - spec.rho ** 2)
        innovations[0] /= scale
        noise = signal.lfilter([scale], [1.0, -spec.rho], innovations, axis=0)
    elif model is NoiseModel.CS:
        common = rng.standard_normal(spec.n)
        noise = (math.sqrt(1.0 - spec.rho) * rng.standard_normal(shape)
                 + math.sqrt(spec.rho / spec.p) * common[None, :])
    elif model is NoiseModel.TEMP:
        # W_1 = Z_1, W_v = sqrt(rho) Z_v + sqrt(1 - rho) W_{v-1}
        innovations = rng.standard_normal(shape)
        scale = math.sqrt(spec.rho)
        innovations[:, 0] /= scale
        noise = signal.lfilter([scale], [1.0, -math.sqrt(1.0 - spec.rho)],
                               innovations, axis=1)
    else:
        noise = rng.standard_normal(shape)
    return spec.sigma * noise


# -----------------------------------------------------------------------------
def generate(spec, replicate=0, designRng=None):
    """Simulates one data set.

    Args:
        spec (SimulationSpec)   : ground truth
        replicate (int)         : replicate index selecting the streams
        designRng (Generator)   : design stream to continue from, a fresh
                                  one for (spec.seed, replicate) if None

    Returns:
        (tuple)  : (DataMatrix, list of true changepoints)

    """
    design, noise = streams(spec.seed, replicate)
    if designRng is not None:
        design = designRng
    thetas = changeVectors(spec, design)
    mean = buildMean(spec, thetas, design)
    X = buildMatrix(mean + buildNoise(spec, noise))
    return X, list(spec.changepoints)


# -----------------------------------------------------------------------------
def mse(estimates, truth):
    """Mean squared error of changepoint estimates against one truth."""
    estimates = np.asarray(estimates, dtype=np.float64)
    if not len(estimates):
        return 0.0
    return float(np.mean((estimates - truth) ** 2))


# -----------------------------------------------------------------------------
def hausdorff(A, B, n):
    """Hausdorff distance between two changepoint sets.

    Two empty sets are at distance 0, an empty and a non-empty one at
    distance n.

    """
    A = np.asarray(sorted(A), dtype=np.float64)
    B = np.asarray(sorted(B), dtype=np.float64)
    if not len(A) and not len(B):
        return 0.0
    if not len(A) or not len(B):
        return float(n)
    distances = np.abs(A[:, None] - B[None, :])
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


# -----------------------------------------------------------------------------
# Experiments
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class ExperimentDesign(object):
    """Replicate recipe of a simulation study.

    mode 'single' plants one change at 'eta' (ceil(n/5) if None) and scores
    the single changepoint estimator by MSE. mode 'multiple' draws J
    ordered locations without replacement from 1..n-1 and scores the
    recursive detector by Hausdorff distance and |J_hat - J|.

    Sparsities are either fixed by 'k' or drawn from 'regime'
    ('sparse', 'dense' or 'mixed').

    """
    n: int
    p: int
    mode: str = 'multiple'
    J: int = 0
    eta: int = None
    k: int = None
    regime: str = 'sparse'
    norm_constant: float = 12.25
    directions: str = 'sign'
    noise: str = 'M0'
    rho: float = 0.0
    df: float = 5.0
    sigma: float = 1.0
    normalize: bool = True
    alpha: float = 1.5
    K: int = 4
    variant: str = 'split'
    n_eff_mode: str = 'n4'
    penalty: str = 'analytic'

    # -------------------------------------------------------------------------
    def toDict(self):
        return dataclasses.asdict(self)


_REGIMES = ('sparse', 'dense', 'mixed')


# -----------------------------------------------------------------------------
def designFromDict(content):
    """Validates an experiment design given as a dict, e.g. parsed JSON.

    Raises:
        (SpecInvalidError)  : on unknown keys or inconsistent values

    """
    known = {field.name for field in dataclasses.fields(ExperimentDesign)}
    unknown = sorted(set(content) - known)
    if unknown:
        raise SpecInvalidError('Unknown design keys: {}'.format(unknown))
    try:
        design = ExperimentDesign(**content)
    except TypeError as e:
        raise SpecInvalidError('Incomplete design: {}'.format(e))

    if design.mode not in ('single', 'multiple'):
        raise SpecInvalidError("mode must be 'single' or 'multiple', got '{}'"
                               .format(design.mode))
    if design.n < 2 or design.p < 1:
        raise SpecInvalidError('Need n >= 2 and p >= 1')
    if design.k is None and design.regime not in _REGIMES:
        raise SpecInvalidError("regime must be one of {}, got '{}'"
                               .format(_REGIMES, design.regime))
    if design.k is not None and not 1 <= design.k <= design.p:
        raise SpecInvalidError('k must lie in [1, p], got {}'.format(design.k))
    if design.mode == 'multiple' and not 0 <= design.J <= design.n - 1:
        raise SpecInvalidError('J must lie in [0, n-1], got {}'
                               .format(design.J))
    if design.mode == 'single':
        eta = singleLocation(design)
        if not 0 < eta < design.n:
            raise SpecInvalidError('eta must lie in (0, n), got {}'.format(eta))
    return design


# -----------------------------------------------------------------------------
def singleLocation(design):
    return design.eta if design.eta is not None else int(math.ceil(design.n / 5.0))


# -----------------------------------------------------------------------------
def drawSparsity(regime, n, p, rng):
    """Draws k uniformly from the sparse {1..floor(b)} or dense
    {ceil(b)..p} range, b = sqrt(p log n); 'mixed' picks either range with
    probability 1/2."""
    bound = math.sqrt(p * math.log(n))
    if regime == 'mixed':
        regime = 'sparse' if rng.random() < 0.5 else 'dense'
    if regime == 'sparse':
        return int(rng.integers(1, max(1, min(p, int(math.floor(bound)))) + 1))
    low = min(p, max(1, int(math.ceil(bound))))
    return int(rng.integers(low, p + 1))


# -----------------------------------------------------------------------------
def specForReplicate(design, seed, rng):
    """Draws the random parts of one replicate's SimulationSpec."""
    if design.mode == 'single':
        etas = [singleLocation(design)]
    else:
        etas = np.sort(rng.choice(np.arange(1, design.n), size=design.J,
                                  replace=False))
    if design.k is not None:
        sparsities = [design.k] * len(etas)
    else:
        sparsities = [drawSparsity(design.regime, design.n, design.p, rng)
                      for _ in etas]
    return SimulationSpec(n=design.n, p=design.p, changepoints=etas,
                          sparsities=sparsities,
                          norm_constant=design.norm_constant,
                          directions=design.directions, noise=design.noise,
                          rho=design.rho, df=design.df, sigma=design.sigma,
                          seed=seed, n_eff_mode=design.n_eff_mode)


# -----------------------------------------------------------------------------
class _Detector(object):
    """Everything a replicate needs that does not depend on the data."""

    # -------------------------------------------------------------------------
    def __init__(self, design):
        self.design = design
        self.ctx = makeContext(design.n, design.p, nEffMode=design.n_eff_mode)
        self.lam = analyticTable(self.ctx)
        gamma = None
        if design.penalty != 'analytic':
            calibrated = loadCalibration(design.penalty)
            scan_mode = ('midpoint' if design.variant
                         == Variant.MIDPOINT_TEST.value else 'full')
            checkCalibration(calibrated, self.ctx, design.alpha, design.K,
                             scan_mode)
            gamma = calibrated.table
        self.cfg = EsacConfig(alpha=design.alpha, K=design.K,
                              variant=design.variant, gamma=gamma,
                              lam=self.lam)
        self.intervalSet = None
        if design.mode == 'multiple':
            self.intervalSet = intervals.generate(design.n, design.alpha,
                                                  design.K)

    # -------------------------------------------------------------------------
    def run(self, X):
        if self.design.normalize:
            X = normalize(X, estimateSigma(X))
        if self.design.mode == 'single':
            eta_hat, _ = estimateSingle(X, self.ctx, self.lam)
            return [eta_hat]
        return esac(X, self.ctx, self.cfg, self.intervalSet).changepoints


# -----------------------------------------------------------------------------
def _runReplicate(detector, seed, replicate):
    design = detector.design
    rng, _ = streams(seed, replicate)
    spec = specForReplicate(design, seed, rng)
    X, truth = generate(spec, replicate=replicate, designRng=rng)
    started = time.perf_counter()
    estimate = detector.run(X)
    elapsed = time.perf_counter() - started

    record = {'replicate': replicate, 'truth': truth, 'estimate': estimate,
              'sparsities': list(spec.sparsities)}
    if design.mode == 'single':
        record['squared_error'] = float((estimate[0] - truth[0]) ** 2)
    else:
        record['hausdorff'] = hausdorff(estimate, truth, design.n)
        record['abs_J_err'] = abs(len(estimate) - len(truth))
    return record, elapsed


# -----------------------------------------------------------------------------
@dataclasses.dataclass(frozen=True)
class MetricsReport(object):
    """Aggregated metrics of an experiment; None where not applicable."""
    design: ExperimentDesign
    N: int
    seed: int
    mse: float = None
    hausdorff: float = None
    abs_J_err: float = None
    records: tuple = ()
    runtime: dict = None
    prng: str = PRNG

    # -------------------------------------------------------------------------
    def toDict(self, timing=False):
        result = {
            'design': self.design.toDict(),
            'N': self.N,
            'seed': self.seed,
            'prng': self.prng,
            'mse': self.mse,
            'hausdorff': self.hausdorff,
            'abs_J_err': self.abs_J_err,
            'hausdorff_convention': 'one empty set -> n, both empty -> 0',
            'records': list(self.records),
        }
        if timing:
            result['runtime'] = self.runtime
        return result


# -----------------------------------------------------------------------------
def runExperiment(design, N, seed, threads=None):
    """Runs N replicates of a design.

    Args:
        design (ExperimentDesign or dict)   : the recipe
        N (int)                             : number of replicates
        seed (int)                          : master seed
        threads (int)                       : worker threads, all cores if None

    Returns:
        (MetricsReport)

    """
    if isinstance(design, dict):
        design = designFromDict(design)
    if N < 1:
        raise SpecInvalidError('Need at least one replicate, got {}'.format(N))

    detector = _Detector(design)
    workers = threads or os.cpu_count() or 1
    records = [None] * N
    timings = np.zeros(N)
    started = time.perf_counter()
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_runReplicate, detector, seed, j): j
                   for j in range(N)}
        for future in concurrent.futures.as_completed(futures):
            j = futures[future]
            records[j], timings[j] = future.result()
    total = time.perf_counter() - started

    runtime = {'total': total, 'mean': float(timings.mean()),
               'median': float(np.median(timings)), 'threads': workers}
    if design.mode == 'single':
        report = MetricsReport(
            design=design, N=N, seed=seed,
            mse=mse([r['estimate'][0] for r in records], records[0]['truth'][0]),
            records=tuple(records), runtime=runtime)
    else:
        report = MetricsReport(
            design=design, N=N, seed=seed,
            hausdorff=float(np.mean([r['hausdorff'] for r in records])),
            abs_J_err=float(np.mean([r['abs_J_err'] for r in records])),
            records=tuple(records), runtime=runtime)
    logger.info('Experiment n={}, p={}, mode={}: {} replicates in {:.2f}s'
                .format(design.n, design.p, design.mode, N, total))
    return report


# -----------------------------------------------------------------------------
def formatReport(reports):
    """Aligned text table of one or more reports.

    Returns:
        (str)
    """
    rows = []
    for report in reports:
        design = report.design
        row = {
            'n': design.n,
            'p': design.p,
            'noise': design.noise,
        }
        if design.mode == 'single':
            row['k'] = design.k if design.k is not None else design.regime
            row['MSE'] = report.mse
        else:
            row['J'] = design.J
            row['regime'] = design.regime if design.k is None else design.k
            row[HAUSDORFF_COLUMN] = report.hausdorff
            row[J_ERROR_COLUMN] = report.abs_J_err
        rows.append(row)
    frame = pandas.DataFrame(rows)
    return frame.to_string(index=False, float_format=lambda x: '{:.3f}'.format(x),
                           na_rep='-')
