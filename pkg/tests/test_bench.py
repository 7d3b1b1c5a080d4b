import itertools
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.stats import spearmanr

from sparsepce.basis import BasisSet
from sparsepce.bench.experiments import (
    PhaseDiagramConfig,
    extract_contour,
    quartiles,
    run_noisy_study,
    run_phase_diagram,
    run_target_study,
    trial_seed,
)
from sparsepce.bench.targets import (
    MASS_SPRING_RANGES,
    exact_coefficients_from_closed_form,
    high_dim_low_order_target,
    low_dim_high_order_target,
    make_target,
    manufactured_expansion,
    mass_spring_physical,
    mass_spring_qoi,
    relative_error,
    rosenbrock,
    rosenbrock_target,
)
from sparsepce.exceptions import NotPolynomialError, ResonanceError


def ode_displacement(m, gamma, omega, f_amp=1.0, t=20.0):
    """Integrate m x'' + gamma x = f sin(omega t) from rest."""
    sol = solve_ivp(
        lambda s, z: [z[1], (f_amp * math.sin(omega * s) - gamma * z[0]) / m],
        (0.0, t),
        [0.0, 0.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-14,
    )
    return sol.y[0, -1]


class TestRosenbrock:
    def test_minimum(self):
        assert rosenbrock(np.ones(6)) == 0.0

    def test_zeros(self):
        assert rosenbrock(np.zeros(6)) == 5.0

    def test_term_by_term(self):
        x = np.random.default_rng(0).uniform(-1, 1, 6)
        expected = 0.0
        for i in range(5):
            expected += 100 * (x[i + 1] - x[i] ** 2) ** 2 + (1 - x[i]) ** 2
        assert rosenbrock(x) == pytest.approx(expected, rel=1e-14)

    def test_vectorized(self):
        X = np.random.default_rng(1).uniform(-1, 1, (4, 6))
        np.testing.assert_allclose(rosenbrock(X), [rosenbrock(x) for x in X], rtol=1e-15)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            rosenbrock(np.zeros(5))

    def test_exact_coefficients_reproduce(self):
        t = rosenbrock_target()
        assert t.basis.K == 210
        X = np.random.default_rng(2).uniform(-1, 1, (50, 6))
        np.testing.assert_allclose(t.basis.evaluate(X) @ t.exact_coefficients, rosenbrock(X), rtol=1e-8, atol=1e-8)


class TestMassSpring:
    def test_nominal_matches_ode(self):
        x = mass_spring_qoi(0.02, 0.04, 1.0, 1.0, 20.0)
        assert abs(x - ode_displacement(0.02, 0.04, 1.0)) < 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_random_draws_match_ode(self, seed):
        m, g, w = (float(v[0]) for v in mass_spring_physical(np.random.default_rng(seed).uniform(-1, 1, (1, 3))))
        assert abs(mass_spring_qoi(m, g, w) - ode_displacement(m, g, w)) < 1e-8

    def test_initial_conditions(self):
        assert mass_spring_qoi(0.02, 0.04, 1.0, t=0.0) == 0.0
        h = 1e-6
        deriv = (mass_spring_qoi(0.02, 0.04, 1.0, t=h) - mass_spring_qoi(0.02, 0.04, 1.0, t=-h)) / (2 * h)
        assert abs(deriv) < 1e-8

    def test_resonance(self):
        with pytest.raises(ResonanceError):
            mass_spring_qoi(1.0, 4.0, 2.0)

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            mass_spring_qoi(0.0, 1.0, 1.0)

    def test_physical_mapping(self):
        lo = mass_spring_physical(-np.ones((1, 3)))
        hi = mass_spring_physical(np.ones((1, 3)))
        for (a, b), l, h in zip(MASS_SPRING_RANGES, lo, hi):
            assert l[0] == pytest.approx(a) and h[0] == pytest.approx(b)

    def test_target_has_no_coefficients(self):
        t = make_target("mass-spring")
        assert t.exact_coefficients is None and t.basis.K == 286
        with pytest.raises(NotPolynomialError):
            exact_coefficients_from_closed_form(BasisSet.total_degree("legendre", 3, 4), t.evaluate)


class TestExactCoefficients:
    def test_square(self):
        b = BasisSet.total_degree("legendre", 1, 2)
        c = exact_coefficients_from_closed_form(b, lambda X: X[:, 0] ** 2)
        np.testing.assert_allclose(c, [1 / 3, 0, 2 / (3 * math.sqrt(5))], atol=1e-14)

    @pytest.mark.parametrize("family", ["legendre", "hermite"])
    def test_single_element(self, family):
        b = BasisSet.total_degree(family, 3, 3)
        for j in (0, 5, b.K - 1):
            c = exact_coefficients_from_closed_form(b, lambda X: b.evaluate(X)[:, j])
            np.testing.assert_allclose(c, np.eye(b.K)[j], atol=1e-12)

    def test_high_dim_low_order_count(self):
        t = high_dim_low_order_target()
        assert t.basis.K == 231
        assert np.count_nonzero(t.exact_coefficients) == 40

    def test_d3_analog_symbolic(self):
        # sum_i x_i x_{i+1} + sum_i x_i^2 with orthonormal Legendre:
        # x_i x_j = psi_i psi_j / 3, x^2 = 1/3 + 2/(3 sqrt 5) psi_2(x)
        b = BasisSet.total_degree("legendre", 3, 2)
        c = exact_coefficients_from_closed_form(
            b, lambda X: np.sum(X[:, :-1] * X[:, 1:], axis=1) + np.sum(X**2, axis=1)
        )
        expected = np.zeros(b.K)
        idx = {tuple(a): j for j, a in enumerate(b.indices)}
        expected[idx[(0, 0, 0)]] = 1.0
        for i in range(3):
            a = [0, 0, 0]
            a[i] = 2
            expected[idx[tuple(a)]] = 2 / (3 * math.sqrt(5))
        for i in range(2):
            a = [0, 0, 0]
            a[i] = a[i + 1] = 1
            expected[idx[tuple(a)]] = 1 / 3
        np.testing.assert_allclose(c, expected, atol=1e-14)
        assert np.count_nonzero(c) == 6  # 2 cross + 3 quadratic + 1 constant

    def test_low_dim_high_order(self):
        t = low_dim_high_order_target()
        assert t.basis.K == 231
        X = np.random.default_rng(3).standard_normal((30, 2))
        fx = t.evaluate(X)
        np.testing.assert_allclose(t.basis.evaluate(X) @ t.exact_coefficients, fx, rtol=1e-8, atol=1e-8 * np.abs(fx).max())

    def test_unknown_target(self):
        with pytest.raises(ValueError):
            make_target("nope")


class TestManufactured:
    def test_sparsity(self):
        b = BasisSet.total_degree("legendre", 3, 3)
        for seed in range(100):
            c, _ = manufactured_expansion(b, 4, seed)
            assert np.count_nonzero(c) == 4

    def test_dense(self):
        b = BasisSet.total_degree("legendre", 2, 2)
        c, _ = manufactured_expansion(b, b.K, 0)
        assert np.count_nonzero(c) == b.K

    def test_evaluator(self):
        b = BasisSet.total_degree("hermite", 2, 3)
        c, ev = manufactured_expansion(b, 3, 1)
        X = np.random.default_rng(0).standard_normal((10, 2))
        np.testing.assert_allclose(ev(X), b.evaluate(X) @ c, rtol=1e-15)

    def test_bad_sparsity(self):
        b = BasisSet.total_degree("legendre", 2, 2)
        for s in (0, b.K + 1):
            with pytest.raises(ValueError):
                manufactured_expansion(b, s)


class TestRelativeError:
    def test_examples(self):
        c = np.array([1.0, -2.0, 0.5])
        assert relative_error(c, c) == 0.0
        assert relative_error(np.zeros(3), c) == 1.0
        assert relative_error(2 * c, c) == 1.0

    def test_zero_reference(self):
        with pytest.raises(ValueError):
            relative_error(np.ones(2), np.zeros(2))


class TestHarnessUtilities:
    def test_quartiles_ordered(self):
        q = quartiles(np.random.default_rng(0).standard_normal(30))
        assert q["q1"] <= q["median"] <= q["q3"]
        assert math.isnan(quartiles([math.nan])["median"])

    def test_trial_seed_distinct(self):
        seeds = {trial_seed(0, a, b, c) for a, b, c in itertools.product(range(3), range(4), range(5))}
        assert len(seeds) == 60
        assert trial_seed(1, 2, 3) == trial_seed(1, 2, 3)

    def test_contour(self):
        cells = [
            {"M_over_K": 0.5, "s_over_M": 0.1, "success_prob": 1.0},
            {"M_over_K": 0.5, "s_over_M": 0.2, "success_prob": 0.0},
            {"M_over_K": 1.0, "s_over_M": 0.1, "success_prob": 1.0},
            {"M_over_K": 1.0, "s_over_M": 0.2, "success_prob": 1.0},
        ]
        out = extract_contour(cells, [0.5, 1.0], [0.1, 0.2])
        assert out == [{"M_over_K": 0.5, "s_over_M": pytest.approx(0.15)}]

    def test_config_validation(self):
        for kw in ({"resolution": 1}, {"trials": 0}, {"threshold": 0.0}, {"sampling": "x"}, {"family": "x"}, {"sparsity": 0}):
            with pytest.raises(ValueError):
                PhaseDiagramConfig(**kw)

    def test_full_scale_warning(self):
        with pytest.warns(UserWarning):
            PhaseDiagramConfig(resolution=50, trials=100)


@pytest.fixture(scope="module")
def small():
    cfg = PhaseDiagramConfig(d=2, k=4, resolution=4, trials=6, seed=3)
    return cfg, run_phase_diagram(cfg)


class TestPhaseDiagram:
    def test_cells(self, small):
        cfg, res = small
        assert len(res.cells) == 16
        for c in res.cells:
            assert 0.0 <= c["success_prob"] <= 1.0
            assert c["M"] >= 1 and c["s"] >= 1
        assert len(res.trials) == 16 * cfg.trials

    def test_monotone_columns(self, small):
        cfg, res = small
        xs, ys = cfg.grid()
        violations = 0
        for x in xs:
            col = [next(c["success_prob"] for c in res.cells if c["M_over_K"] == x and c["s_over_M"] == y) for y in ys]
            violations += sum(b > a for a, b in zip(col, col[1:]))
        assert violations <= len(xs)

    def test_full_sparsity_fails(self, small):
        # with M close to K a vertex of the l1 ball can coincide with the
        # dense truth by chance, so only heavily underdetermined cells count
        _, res = small
        for c in res.cells:
            if c["s_over_M"] == 1.0 and 1 < c["M"] <= 8:
                assert c["success_prob"] <= 0.05

    def test_contour_in_range(self, small):
        _, res = small
        for p in res.contour:
            assert 0 < p["s_over_M"] <= 1

    def test_order_independent(self, small):
        cfg, res = small
        again = run_phase_diagram(PhaseDiagramConfig(d=2, k=4, resolution=4, trials=6, seed=3))
        assert [r["rel_error"] for r in again.trials] == [r["rel_error"] for r in res.trials]

    def test_infeasible_flag(self):
        res = run_phase_diagram(PhaseDiagramConfig(d=2, k=2, trials=1, m_over_k=[1.5], s_over_m=[0.5]))
        assert res.cells[0]["infeasible"] and res.cells[0]["success_prob"] == 0.0 and not res.trials

    def test_fixed_sparsity_sweep(self):
        res = run_phase_diagram(PhaseDiagramConfig(d=2, k=3, trials=2, resolution=2, sparsity=2))
        assert [c["s"] for c in res.cells] == [2, 2]
        assert [c["s_over_M"] for c in res.cells] == [2 / c["M"] for c in res.cells]
        assert res.contour == []

    def test_well_posed_cell(self):
        cfg = PhaseDiagramConfig(d=5, k=5, trials=25, m_over_k=[1.0], s_over_m=[0.1], seed=0)
        assert run_phase_diagram(cfg).cells[0]["success_prob"] >= 0.95

    def test_equality_cell(self):
        cfg = PhaseDiagramConfig(d=5, k=5, trials=25, m_over_k=[0.3], s_over_m=[1.0], seed=0)
        assert run_phase_diagram(cfg).cells[0]["success_prob"] <= 0.05


class TestStudies:
    def test_noise_free_matches_noiseless(self):
        grid = (1e6,)
        a = run_noisy_study(0.0, sample_sizes=(40,), trials=2, seed=5, lambda_grid=grid)
        b = run_target_study("rosenbrock", [40], trials=2, seed=5, lambda_grid=grid)
        assert [r["rel_error"] for r in a.trials] == [r["rel_error"] for r in b.trials]
        for s in a.summary:
            assert s["q1"] <= s["median"] <= s["q3"]

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            run_noisy_study(-1.0)

    def test_error_metrics_agree_in_ordering(self):
        res = run_target_study("high-dim-low-order", [30, 60, 90, 120], trials=3, preconditions=(False,), seed=1)
        rel = [r["rel_error"] for r in res.trials]
        val = [r["val_error"] for r in res.trials]
        assert spearmanr(rel, val).statistic > 0.9
