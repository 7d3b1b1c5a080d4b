import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e, legendre

from sparsepce.basis import (
    BasisSet,
    PolynomialFamily,
    cardinality,
    eval_multivariate,
    eval_univariate,
    local_coherence_B,
    total_degree_indices,
    univariate_table,
)
from sparsepce.exceptions import BasisSizeError, DimensionMismatchError, DomainError


def oracle_univariate(family, n, x):
    """Orthonormal polynomial from numpy's power-series classes, not a recurrence."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    if family == "legendre":
        return legendre.legval(x, coef) * math.sqrt(2 * n + 1)
    return hermite_e.hermeval(x, coef) / math.sqrt(math.factorial(n))


class TestUnivariate:
    def test_spot_values(self):
        assert eval_univariate("legendre", 0, 0.37) == pytest.approx(1.0, abs=1e-15)
        assert eval_univariate("legendre", 1, 1.0) == pytest.approx(math.sqrt(3), rel=1e-14)
        assert eval_univariate("hermite", 2, 0.0) == pytest.approx(-1 / math.sqrt(2), rel=1e-14)

    @pytest.mark.parametrize("family", ["legendre", "hermite"])
    def test_matches_numpy_polynomials(self, family):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, 50) if family == "legendre" else rng.normal(0, 2, 50)
        table = univariate_table(family, 20, x)
        for n in range(21):
            np.testing.assert_allclose(table[:, n], oracle_univariate(family, n, x), rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("family", ["legendre", "hermite"])
    def test_quadrature_orthonormality(self, family):
        # Gauss rule from numpy, independent of the package's own rule
        if family == "legendre":
            x, w = legendre.leggauss(12)
            w = w / 2.0
        else:
            x, w = hermite_e.hermegauss(12)
            w = w / math.sqrt(2 * math.pi)
        V = univariate_table(family, 8, x)
        np.testing.assert_allclose(V.T @ (w[:, None] * V), np.eye(9), atol=1e-10)

    @pytest.mark.parametrize("family", ["legendre", "hermite"])
    def test_family_quadrature_weights(self, family):
        fam = PolynomialFamily(family)
        x, w = fam.gauss_quadrature(10)
        assert w.sum() == pytest.approx(1.0, abs=1e-13)
        V = univariate_table(fam, 8, x)
        np.testing.assert_allclose(V.T @ (w[:, None] * V), np.eye(9), atol=1e-10)

    def test_high_order_hermite_against_mpmath(self):
        for n in (15, 20):
            for x in (-3.5, 0.3, 6.0):
                ref = float(mpmath.hermite(n, x / mpmath.sqrt(2)) / (mpmath.mpf(2) ** (mpmath.mpf(n) / 2)) / mpmath.sqrt(mpmath.factorial(n)))
                assert eval_univariate("hermite", n, x) == pytest.approx(ref, rel=1e-10)

    def test_legendre_domain(self):
        with pytest.raises(DomainError):
            eval_univariate("legendre", 2, 1.01)
        with pytest.raises(ValueError):
            eval_univariate("legendre", -1, 0.0)
        # Hermite accepts any real
        assert np.isfinite(eval_univariate("hermite", 3, 50.0))


class TestIndices:
    @pytest.mark.parametrize("d,k,K", [(2, 20, 231), (20, 2, 231), (3, 10, 286), (6, 4, 210), (1, 0, 1)])
    def test_published_cardinalities(self, d, k, K):
        idx = total_degree_indices(d, k)
        assert len(idx) == K == cardinality(d, k)

    def test_first_is_zero(self):
        assert total_degree_indices(1, 0) == [(0,)]
        assert total_degree_indices(4, 3)[0] == (0, 0, 0, 0)

    @pytest.mark.parametrize("d,k", [(d, k) for d in range(1, 7) for k in range(0, 7)])
    def test_enumeration_oracle(self, d, k):
        brute = {a for a in itertools.product(range(k + 1), repeat=d) if sum(a) <= k}
        idx = total_degree_indices(d, k)
        assert len(idx) == len(set(idx)) == len(brute)
        assert set(idx) == brute

    @given(st.integers(1, 6), st.integers(0, 6))
    def test_graded_lex_sort_is_noop(self, d, k):
        idx = total_degree_indices(d, k)
        assert sorted(idx, key=lambda a: (sum(a), a)) == idx

    @given(st.integers(1, 25), st.integers(0, 25))
    def test_cardinality_formula(self, d, k):
        K = cardinality(d, k)
        assert K == math.factorial(k + d) // (math.factorial(k) * math.factorial(d))
        assert K < 2**53

    def test_size_error(self):
        with pytest.raises(BasisSizeError):
            total_degree_indices(30, 30)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            total_degree_indices(0, 2)
        with pytest.raises(ValueError):
            total_degree_indices(2, -1)


class TestMultivariate:
    def test_constant_entry(self):
        b = BasisSet.total_degree("hermite", 3, 2)
        assert eval_multivariate(b, [0.4, -2.0, 1.3])[0] == 1.0

    def test_product_value(self):
        b = BasisSet.total_degree("legendre", 2, 2)
        v = eval_multivariate(b, [1.0, 1.0])
        assert v[b.index_of((1, 1))] == pytest.approx(3.0, rel=1e-14)

    @pytest.mark.parametrize("family", ["legendre", "hermite"])
    def test_direct_product_oracle(self, family):
        rng = np.random.default_rng(11)
        b = BasisSet.total_degree(family, 3, 4)
        for _ in range(10):
            xi = rng.uniform(-1, 1, 3) if family == "legendre" else rng.standard_normal(3)
            v = eval_multivariate(b, xi)
            ref = [np.prod([oracle_univariate(family, a_i, x_i) for a_i, x_i in zip(a, xi)]) for a in b.indices]
            np.testing.assert_allclose(v, ref, rtol=1e-10, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        b = BasisSet.total_degree("legendre", 4, 3)
        X = rng.uniform(-1, 1, (7, 4))
        A = b.evaluate(X)
        assert A.shape == (7, b.K)
        for i in range(7):
            np.testing.assert_array_equal(A[i], eval_multivariate(b, X[i]))

    def test_dimension_mismatch(self):
        b = BasisSet.total_degree("legendre", 2, 2)
        with pytest.raises(DimensionMismatchError):
            eval_multivariate(b, [0.1, 0.2, 0.3])


class TestLocalCoherence:
    def test_constant_basis(self):
        b = BasisSet.total_degree("hermite", 3, 0)
        assert local_coherence_B(b, [5.0, -1.0, 0.2]) == 1.0

    def test_corner_value(self):
        b = BasisSet.total_degree("legendre", 2, 2)
        assert local_coherence_B(b, [1.0, 1.0]) == pytest.approx(3.0, rel=1e-14)

    def test_matches_max_abs(self):
        rng = np.random.default_rng(1)
        b = BasisSet.total_degree("hermite", 2, 6)
        X = rng.standard_normal((20, 2))
        np.testing.assert_allclose(b.local_coherence(X), np.abs(b.evaluate(X)).max(axis=1))

    @pytest.mark.parametrize("d,k", [(1, 5), (2, 4), (3, 3), (5, 2)])
    def test_legendre_bound(self, d, k):
        b = BasisSet.total_degree("legendre", d, k)
        bound = max(np.prod([math.sqrt(2 * a + 1) for a in alpha]) for alpha in b.indices)
        assert b.legendre_bound() == pytest.approx(bound)
        X = np.random.default_rng(d).uniform(-1, 1, (1000, d))
        assert np.all(b.local_coherence(X) <= bound * (1 + 1e-12))
        assert np.all(b.local_coherence(X) >= 1.0)
