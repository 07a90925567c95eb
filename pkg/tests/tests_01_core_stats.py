# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# -----------------------------------------------------------------------------

import math
import unittest

import numpy as np
from scipy import integrate

import esac
from esac import core_stats


# -----------------------------------------------------------------------------
def _psiCusum(y, s, e, v):
    """CUSUM as the inner product of y with the contrast vector Psi^v."""
    total = 0.0
    for t in range(s + 1, e + 1):
        if t <= v:
            weight = math.sqrt((e - v) / ((e - s) * (v - s)))
        else:
            weight = -math.sqrt((v - s) / ((e - s) * (e - v)))
        total += weight * y[t - 1]
    return total


# -----------------------------------------------------------------------------
def _nuQuadrature(a):
    """E(Z^2 | |Z| >= a), both integrals rescaled by exp(a^2 / 2)."""
    def density(x):
        return math.exp(-(x * x - a * a) / 2.0)
    numerator = integrate.quad(lambda x: x * x * density(x), a, np.inf,
                               epsabs=1e-13, epsrel=1e-12)[0]
    denominator = integrate.quad(density, a, np.inf,
                                 epsabs=1e-13, epsrel=1e-12)[0]
    return numerator / denominator


# -----------------------------------------------------------------------------
class CoreStatsTestCase(unittest.TestCase):

    # -------------------------------------------------------------------------
    def setUp(self):
        self.ctx = core_stats.makeContext(200, 100)

    # -------------------------------------------------------------------------
    def test01_buildMatrix_populates_prefix_sums(self):

        X = core_stats.buildMatrix([[1, 2]])
        self.assertEqual(X.p, 1)
        self.assertEqual(X.n, 2)
        self.assertEqual(X.prefix.tolist(), [[0.0, 1.0, 3.0]])

        Z = core_stats.buildMatrix(np.zeros((2, 4)))
        self.assertEqual(Z.prefix.tolist(), [[0.0] * 5, [0.0] * 5])

    # -------------------------------------------------------------------------
    def test02_buildMatrix_prefix_differences_match_values(self):

        rng = np.random.default_rng(1)
        X = core_stats.buildMatrix(rng.standard_normal((3, 50)))
        np.testing.assert_allclose(np.diff(X.prefix, axis=1), X.values,
                                   atol=1e-12)

    # -------------------------------------------------------------------------
    def test03_buildMatrix_validates_input(self):

        with self.assertRaises(esac.NonFiniteError):
            core_stats.buildMatrix([[1.0, np.nan, 2.0]])
        with self.assertRaises(esac.NonFiniteError):
            core_stats.buildMatrix([[1.0, np.inf, 2.0]])
        with self.assertRaises(esac.TooShortError):
            core_stats.buildMatrix([[1.0]])
        with self.assertRaises(esac.BadParamsError):
            core_stats.buildMatrix(np.zeros((2, 2, 2)))

    # -------------------------------------------------------------------------
    def test04_buildMatrix_is_immutable(self):

        raw = np.ones((2, 5))
        X = core_stats.buildMatrix(raw)
        raw[0, 0] = 100.0
        self.assertEqual(X.values[0, 0], 1.0)
        with self.assertRaises(ValueError):
            X.values[0, 0] = 5.0
        with self.assertRaises(ValueError):
            X.prefix[0, 1] = 5.0

    # -------------------------------------------------------------------------
    def test05_buildMatrix_reads_vector_as_single_series(self):

        X = core_stats.buildMatrix([1.0, 2.0, 3.0])
        self.assertEqual((X.p, X.n), (1, 3))

    # -------------------------------------------------------------------------
    def test06_cusum_known_values(self):

        X = core_stats.buildMatrix([[0, 0, 1, 1]])
        self.assertAlmostEqual(core_stats.cusum(X, 0, 0, 4, 2), -1.0, places=12)

        constant = core_stats.buildMatrix([[3.5] * 7])
        for s, e, v in [(0, 7, 3), (1, 5, 2), (2, 7, 6)]:
            self.assertAlmostEqual(core_stats.cusum(constant, 0, s, e, v), 0.0,
                                   places=12)

    # -------------------------------------------------------------------------
    def test07_cusum_rejects_invalid_triples(self):

        X = core_stats.buildMatrix([[0, 0, 1, 1]])
        for s, e, v in [(0, 4, 0), (0, 4, 4), (2, 1, 1), (-1, 3, 1),
                        (0, 5, 2)]:
            with self.assertRaises(esac.BadIntervalError):
                core_stats.cusum(X, 0, s, e, v)
        with self.assertRaises(esac.OutOfRangeError):
            core_stats.cusum(X, 1, 0, 4, 2)

    # -------------------------------------------------------------------------
    def test08_cusum_equals_inner_product_with_contrast_vector(self):

        rng = np.random.default_rng(7)
        for n in range(2, 21):
            y = rng.standard_normal(n)
            X = core_stats.buildMatrix(y)
            for s in range(0, n - 1):
                for e in range(s + 2, n + 1):
                    for v in range(s + 1, e):
                        self.assertAlmostEqual(core_stats.cusum(X, 0, s, e, v),
                                               _psiCusum(y, s, e, v),
                                               delta=1e-10)

    # -------------------------------------------------------------------------
    def test09_population_cusum_single_change_identity(self):

        theta = 1.7
        for n in range(3, 17):
            for eta in range(1, n):
                mean = np.where(np.arange(1, n + 1) > eta, theta, 0.0)
                X = core_stats.buildMatrix(mean)
                for s in range(0, eta):
                    for e in range(eta + 1, n + 1):
                        at_eta = core_stats.cusum(X, 0, s, e, eta) ** 2
                        for v in range(s + 1, e):
                            rho = abs(v - eta)
                            delta = eta - s if v >= eta else e - eta
                            expected = rho * delta / (rho + delta) * theta ** 2
                            difference = at_eta - core_stats.cusum(X, 0, s, e, v) ** 2
                            self.assertAlmostEqual(difference, expected,
                                                   delta=1e-10)

    # -------------------------------------------------------------------------
    def test10_cusum_is_location_invariant_and_linear(self):

        rng = np.random.default_rng(3)
        y = rng.standard_normal(30)
        X = core_stats.buildMatrix(y)
        shifted = core_stats.buildMatrix(y + 12.5)
        scaled = core_stats.buildMatrix(-3.0 * y)
        for s, e, v in [(0, 30, 10), (4, 22, 5), (10, 30, 29)]:
            base = core_stats.cusum(X, 0, s, e, v)
            self.assertAlmostEqual(core_stats.cusum(shifted, 0, s, e, v), base,
                                   delta=1e-9)
            self.assertAlmostEqual(core_stats.cusum(scaled, 0, s, e, v),
                                   -3.0 * base, delta=1e-9)

    # -------------------------------------------------------------------------
    def test11_nuTrunc_known_values(self):

        self.assertEqual(core_stats.nuTrunc(0.0), 1.0)
        self.assertAlmostEqual(core_stats.nuTrunc(1.0), 2.5251, places=4)
        self.assertTrue(5.0 <= core_stats.nuTrunc(2.0) <= 6.0)

    # -------------------------------------------------------------------------
    def test12_nuTrunc_matches_quadrature_and_bounds(self):

        for a in np.round(np.arange(0.0, 10.01, 0.1), 10):
            nu = core_stats.nuTrunc(a)
            self.assertAlmostEqual(nu, _nuQuadrature(a), delta=1e-8,
                                   msg='a={}'.format(a))
            self.assertTrue(a * a + 1.0 - 1e-12 <= nu <= a * a + 2.0 + 1e-12,
                            msg='a={}'.format(a))

    # -------------------------------------------------------------------------
    def test13_nuTrunc_is_stable_for_large_thresholds(self):

        for a in [20.0, 37.9, 38.1, 40.0, 100.0, 1e4]:
            nu = core_stats.nuTrunc(a)
            self.assertTrue(np.isfinite(nu))
            self.assertTrue(a * a + 1.0 <= nu <= a * a + 2.0)
        self.assertAlmostEqual(core_stats.nuTrunc(38.0),
                               core_stats.nuTrunc(38.0 + 1e-9), delta=1e-6)

    # -------------------------------------------------------------------------
    def test14_nuTrunc_rejects_negative_thresholds(self):

        with self.assertRaises(esac.NegativeThresholdError):
            core_stats.nuTrunc(-0.1)
        with self.assertRaises(esac.NegativeThresholdError):
            core_stats.nuTrunc(float('nan'))

    # -------------------------------------------------------------------------
    def test15_rateR_known_values(self):

        self.assertAlmostEqual(core_stats.rateR(100, self.ctx),
                               math.sqrt(400 * math.log(200)), places=9)
        self.assertAlmostEqual(core_stats.rateR(100, self.ctx), 46.04, places=2)
        self.assertAlmostEqual(core_stats.rateR(1, self.ctx),
                               4 * math.log(200), places=9)
        self.assertAlmostEqual(core_stats.rateR(1, self.ctx), 21.19, places=2)
        for t in range(47, 101):
            self.assertEqual(core_stats.rateR(t, self.ctx),
                             core_stats.rateR(100, self.ctx))

    # -------------------------------------------------------------------------
    def test16_rates_reject_out_of_range_sparsity(self):

        for function in (core_stats.rateR, core_stats.rateH,
                         core_stats.thresholdA, core_stats.lambdaTilde):
            with self.assertRaises(esac.OutOfRangeError):
                function(0, self.ctx)
            with self.assertRaises(esac.OutOfRangeError):
                function(101, self.ctx)

    # -------------------------------------------------------------------------
    def test17_rateH_differs_from_rateR_in_the_dense_branch_only(self):

        for t in [1, 2, 10, 46]:
            self.assertEqual(core_stats.rateH(t, self.ctx),
                             core_stats.rateR(t, self.ctx))
        self.assertAlmostEqual(core_stats.rateH(100, self.ctx), 46.04, places=2)

        huge = core_stats.makeContext(10 ** 6, 3)
        self.assertEqual(core_stats.rateH(3, huge), core_stats.rateR(3, huge))

        theoretical = core_stats.makeContext(3, 10 ** 6, nEffMode='n')
        p = theoretical.p
        expected = math.sqrt(p * math.log(math.log(math.e * p)))
        self.assertAlmostEqual(core_stats.rateH(p, theoretical), expected,
                               places=6)
        self.assertGreater(core_stats.rateH(p, theoretical),
                           core_stats.rateR(p, theoretical))

    # -------------------------------------------------------------------------
    def test18_thresholdA_known_values_and_monotonicity(self):

        self.assertEqual(core_stats.thresholdA(100, self.ctx), 0.0)
        self.assertAlmostEqual(core_stats.thresholdA(1, self.ctx), 5.885,
                               places=3)
        values = [core_stats.thresholdA(t, self.ctx)
                  for t in self.ctx.sparsity_grid]
        self.assertEqual(values, sorted(values, reverse=True))
        for t, a in zip(self.ctx.sparsity_grid, values):
            if t < self.ctx.dense_bound:
                self.assertGreater(a, 0.0)

    # -------------------------------------------------------------------------
    def test19_lambdaTilde_known_values(self):

        self.assertAlmostEqual(core_stats.lambdaTilde(100, self.ctx), 100.85,
                               places=1)
        self.assertAlmostEqual(core_stats.lambdaTilde(1, self.ctx), 29.85,
                               places=1)
        for t in range(1, 101):
            self.assertGreater(core_stats.lambdaTilde(t, self.ctx), 0.0)

        # dense from sqrt(p ln n) = 23.02 on, although the grid runs to 32
        dense = 1.5 * (math.sqrt(100 * 4 * math.log(200)) + 4 * math.log(200))
        self.assertAlmostEqual(dense, 100.84, places=2)
        self.assertAlmostEqual(core_stats.lambdaTilde(24, self.ctx), dense,
                               places=9)
        self.assertAlmostEqual(core_stats.lambdaTilde(32, self.ctx), dense,
                               places=9)
        self.assertLess(core_stats.lambdaTilde(23, self.ctx), 80.0)
        self.assertIn(32, self.ctx.sparsity_grid)

        # branch values always use n^4
        theoretical = core_stats.makeContext(200, 100, nEffMode='n')
        self.assertEqual(core_stats.lambdaTilde(1, theoretical),
                         core_stats.lambdaTilde(1, self.ctx))

    # -------------------------------------------------------------------------
    def test20_sparsityGrid_examples(self):

        self.assertEqual(self.ctx.sparsity_grid, (1, 2, 4, 8, 16, 32, 100))
        self.assertEqual(core_stats.makeContext(200, 1).sparsity_grid, (1,))
        tiny = core_stats.makeContext(2, 2, nEffMode='n')
        self.assertLess(tiny.dense_bound, 2.0)
        self.assertEqual(tiny.sparsity_grid, (1, 2))

    # -------------------------------------------------------------------------
    def test21_sparsityGrid_invariants(self):

        for n in [2, 10, 200, 5000]:
            for p in [1, 2, 3, 7, 64, 100, 1000]:
                for mode in core_stats.N_EFF_MODES:
                    ctx = core_stats.makeContext(n, p, nEffMode=mode)
                    grid = ctx.sparsity_grid
                    self.assertEqual(grid[0], 1)
                    self.assertEqual(grid[-1], p)
                    self.assertEqual(list(grid), sorted(set(grid)))
                    cap = math.floor(ctx.dense_bound)
                    for t in grid[:-1]:
                        self.assertEqual(t & (t - 1), 0)
                        self.assertLessEqual(t, max(cap, 1))

    # -------------------------------------------------------------------------
    def test22_makeContext_validates_input(self):

        with self.assertRaises(esac.BadParamsError):
            core_stats.makeContext(1, 5)
        with self.assertRaises(esac.BadParamsError):
            core_stats.makeContext(10, 0)
        with self.assertRaises(esac.BadParamsError):
            core_stats.makeContext(10, 5, nEffMode='n2')
        ctx = core_stats.makeContext(10, 5, nEffMode='n')
        self.assertEqual(ctx.n_eff, 10.0)
        self.assertEqual(self.ctx.n_eff, 200.0 ** 4)
        self.assertEqual(ctx.toDict()['grid'], list(ctx.sparsity_grid))

    # -------------------------------------------------------------------------
    def test23_analyticTable_entries(self):

        table = core_stats.analyticTable(self.ctx)
        self.assertEqual(table.grid, self.ctx.sparsity_grid)
        self.assertEqual(len(table), 7)
        for t, (a, nu, penalty) in table.entries().items():
            self.assertEqual(a, core_stats.thresholdA(t, self.ctx))
            self.assertTrue(a * a + 1.0 <= nu <= a * a + 2.0)
            self.assertEqual(penalty, core_stats.lambdaTilde(t, self.ctx))
        self.assertEqual(table.entries()[100][:2], (0.0, 1.0))

    # -------------------------------------------------------------------------
    def test24_penalty_tables_validate_penalties(self):

        with self.assertRaises(esac.BadParamsError):
            core_stats.penaltyTableFrom(self.ctx, [1.0] * 3)
        with self.assertRaises(esac.BadParamsError):
            core_stats.penaltyTableFrom(self.ctx, [-1.0] * 7)
        with self.assertRaises(esac.BadParamsError):
            core_stats.rateTable(self.ctx, -2.0)

        table = core_stats.rateTable(self.ctx, 82.0)
        for k, t in enumerate(table.grid):
            self.assertAlmostEqual(table.penalty[k],
                                   82.0 * core_stats.rateR(t, self.ctx))
        self.assertTrue(np.all(core_stats.zeroTable(self.ctx).penalty == 0.0))

    # -------------------------------------------------------------------------
    def test25_penalty_table_index_and_copies(self):

        table = core_stats.analyticTable(self.ctx)
        self.assertEqual(table.index(16), 4)
        with self.assertRaises(esac.BadSparsityError):
            table.index(3)

        copy = table.withPenalties(np.arange(7.0), label='ramp')
        np.testing.assert_array_equal(copy.a, table.a)
        self.assertEqual(copy.penalty.tolist(), list(np.arange(7.0)))
        self.assertEqual(copy.toDict()['label'], 'ramp')


# -----------------------------------------------------------------------------
if __name__ == '__main__':
    unittest.main()
