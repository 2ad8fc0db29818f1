import numpy as np
import pytest

from conftest import basis_realization
from peplift.ledger import (
    STAR,
    GramLedger,
    cocoercivity_ledger,
    ix_dist,
    ix_g,
    ix_s,
    ix_s_star,
    ix_val,
)
from peplift.methods import run_composite
from peplift.problems import ProblemSpec, initial_point, make_problem
from peplift.schedules import cumulative, ogm_stepsize_matrix


@pytest.fixture(scope="module")
def hcum3():
    return cumulative(ogm_stepsize_matrix(3)).entries


class TestSingleInequalities:
    def test_unconstrained_final_vs_optimum(self, hcum3):
        # f_n - f_star - ||g_n||^2 / 2 once the optimal gradient is zeroed out
        n = 3
        led = cocoercivity_ledger(hcum3, n, STAR, "unconstrained")
        expected_f = np.zeros(n + 2)
        expected_f[ix_val(n, n)] = 1.0
        expected_f[ix_val(n, STAR)] = -1.0
        np.testing.assert_array_equal(led.lin_f, expected_f)
        np.testing.assert_array_equal(led.lin_h, 0.0)
        quad = np.zeros_like(led.quad)
        quad[ix_g(n, n), ix_g(n, n)] = -0.5
        np.testing.assert_array_equal(led.quad, quad)

    def test_composite_metric_identity(self, hcum3):
        # smooth + nonsmooth inequality at (n, star) collapses to
        # F_n - F_star - ||g_n + s_star||^2 / 2
        n = 3
        led = cocoercivity_ledger(hcum3, n, STAR, "composite_f")
        led.add(cocoercivity_ledger(hcum3, n, STAR, "composite_h"))
        assert led.lin_f[ix_val(n, n)] == 1.0 and led.lin_f[ix_val(n, STAR)] == -1.0
        assert led.lin_h[ix_val(n, n)] == 1.0 and led.lin_h[ix_val(n, STAR)] == -1.0
        quad = np.zeros_like(led.quad)
        gn, ss = ix_g(n, n), ix_s_star(n)
        quad[gn, gn] = -0.5
        quad[ss, ss] = -0.5
        quad[gn, ss] = -0.5
        quad[ss, gn] = -0.5
        np.testing.assert_allclose(led.quad, quad, atol=1e-14)

    def test_rejects_equal_indices(self, hcum3):
        with pytest.raises(ValueError):
            cocoercivity_ledger(hcum3, 1, 1, "unconstrained")

    def test_rejects_unknown_mode(self, hcum3):
        with pytest.raises(ValueError):
            cocoercivity_ledger(hcum3, 0, 1, "bogus")


class TestNonnegativitySampling:
    def test_composite_cocoercivities_nonnegative(self):
        # 100 seeded l1-regularized least-squares instances
        n = 3
        h = ogm_stepsize_matrix(n)
        hcum = cumulative(h).entries
        pairs = [(i, j) for i in list(range(n + 1)) + [STAR] for j in range(n + 1) if i != j]
        pairs += [(i, j) for i in list(range(1, n + 1)) + [STAR] for j in range(1, n + 1) if i != j]
        worst = 0.0
        for seed in range(100):
            spec = ProblemSpec(kind="lasso", dim=6, rows=9, seed=seed, tau=0.2)
            problem = make_problem(spec)
            trace = run_composite(h, problem, initial_point(spec))
            vectors, f_vals, h_vals = basis_realization(trace, problem)
            for idx, (i, j) in enumerate(pairs):
                mode = "composite_f" if idx < (n + 2) * (n + 1) - (n + 1) else "composite_h"
                led = cocoercivity_ledger(hcum, i, j, mode)
                worst = min(worst, led.evaluate(vectors, f_vals, h_vals))
        assert worst >= -1e-9

    def test_smooth_and_nonsmooth_split(self):
        # same data, explicit mode split: Qf and Qh each nonnegative
        n = 2
        h = ogm_stepsize_matrix(n)
        hcum = cumulative(h).entries
        spec = ProblemSpec(kind="lasso", dim=5, rows=8, seed=11, tau=0.3)
        problem = make_problem(spec)
        trace = run_composite(h, problem, initial_point(spec))
        vectors, f_vals, h_vals = basis_realization(trace, problem)
        for i in list(range(n + 1)) + [STAR]:
            for j in range(n + 1):
                if i == j:
                    continue
                val = cocoercivity_ledger(hcum, i, j, "composite_f").evaluate(vectors, f_vals, h_vals)
                assert val >= -1e-9
        for i in list(range(1, n + 1)) + [STAR]:
            for j in range(1, n + 1):
                if i == j:
                    continue
                val = cocoercivity_ledger(hcum, i, j, "composite_h").evaluate(vectors, f_vals, h_vals)
                assert val >= -1e-9


class TestLedgerArithmetic:
    def test_linearity(self, hcum3):
        a = cocoercivity_ledger(hcum3, 0, 1, "unconstrained")
        b = cocoercivity_ledger(hcum3, 1, 0, "unconstrained")
        combo = GramLedger(3).add(a, 2.0).add(b, -0.5)
        np.testing.assert_allclose(combo.quad, 2.0 * a.quad - 0.5 * b.quad)
        np.testing.assert_allclose(combo.lin_f, 2.0 * a.lin_f - 0.5 * b.lin_f)

    def test_square_accumulator(self):
        led = GramLedger(1)
        c = np.zeros(5)
        c[ix_dist(1)] = 1.0
        c[ix_g(1, 0)] = -2.0
        led.add_square(c, 0.5)
        np.testing.assert_allclose(led.quad, 0.5 * np.outer(c, c))

    def test_block_accumulator_symmetrizes(self):
        led = GramLedger(1)
        idx = np.array([ix_s(1, 1), ix_s_star(1)])
        block = np.array([[1.0, 2.0], [0.0, 3.0]])
        led.add_block(idx, block, 1.0)
        assert led.quad[idx[0], idx[1]] == led.quad[idx[1], idx[0]] == 1.0

    def test_residual_and_scale(self, hcum3):
        a = cocoercivity_ledger(hcum3, 0, 1, "unconstrained")
        b = a.copy()
        b.lin_f[0] += 1e-3
        quad, lin_f, lin_h = a.residual_vs(b)
        assert quad == 0.0 and lin_h == 0.0
        assert abs(lin_f - 1e-3) < 1e-15
        assert a.max_abs() >= 1.0
