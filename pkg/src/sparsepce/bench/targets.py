"""Benchmark target functions and error metrics."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..basis import BasisSet, PolynomialFamily
from ..exceptions import NotPolynomialError, ResonanceError

# Tensor quadrature is used while the grid has at most this many nodes;
# beyond it coefficients come from an oversampled least-squares fit.
MAX_TENSOR_NODES = 200_000


@dataclass
class TargetFunction:
    """A benchmark function together with its reference PCE coefficients.

    ``evaluate`` maps an ``(n, d)`` array of standardized inputs to ``n``
    outputs. ``exact_coefficients`` is ``None`` when the function is not a
    polynomial in ``basis`` (mass-spring).
    """

    tag: str
    basis: BasisSet
    evaluate: Callable[[np.ndarray], np.ndarray]
    exact_coefficients: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, X):
        return self.evaluate(np.atleast_2d(np.asarray(X, dtype=float)))


def relative_error(c, c_ref) -> float:
    """``||c - c_ref||_2 / ||c_ref||_2``."""
    c = np.asarray(c, dtype=float)
    c_ref = np.asarray(c_ref, dtype=float)
    ref = np.linalg.norm(c_ref)
    if ref == 0:
        raise ValueError("reference vector is zero")
    return float(np.linalg.norm(c - c_ref) / ref)


def manufactured_expansion(basis: BasisSet, s: int, seed=None):
    """Random ``s``-sparse coefficient vector with standard normal entries.

    Returns ``(coefficients, evaluator)``.
    """
    if not 1 <= s <= basis.K:
        raise ValueError(f"sparsity must be in [1, {basis.K}], got {s}")
    rng = np.random.default_rng(seed)
    c = np.zeros(basis.K)
    support = rng.choice(basis.K, size=s, replace=False)
    c[support] = rng.standard_normal(s)

    def evaluator(X):
        return basis.evaluate(np.atleast_2d(X)) @ c

    return c, evaluator


def manufactured_target(basis: BasisSet, s: int, seed=None) -> TargetFunction:
    c, ev = manufactured_expansion(basis, s, seed)
    return TargetFunction("manufactured", basis, ev, c, {"s": s})


def _check_points(basis: BasisSet, n: int, rng) -> np.ndarray:
    if basis.family is PolynomialFamily.LEGENDRE:
        return rng.uniform(-1.0, 1.0, (n, basis.d))
    return rng.standard_normal((n, basis.d))


def exact_coefficients_from_closed_form(basis: BasisSet, f, tol: float = 1e-8, seed=12345) -> np.ndarray:
    """Project a polynomial ``f`` onto ``basis``.

    Uses a tensor Gauss rule with ``k + 1`` nodes per dimension, exact for
    the degree ``<= 2k`` integrands ``f * psi``. For very high dimension that
    grid is replaced by least squares on ``3K`` random points, which is also
    exact when ``f`` lies in the span of the basis.

    The result is checked by re-evaluating the expansion at random points;
    if it does not reproduce ``f`` to relative accuracy ``tol`` the function
    is not a polynomial of the basis and ``NotPolynomialError`` is raised.
    Entries below ``1e-12 * max|c|`` are set to zero.
    """
    rng = np.random.default_rng(seed)
    n = basis.k + 1
    if n**basis.d <= MAX_TENSOR_NODES:
        x1, w1 = basis.family.gauss_quadrature(n)
        nodes = np.array(list(itertools.product(x1, repeat=basis.d)))
        weights = np.prod(np.array(list(itertools.product(w1, repeat=basis.d))), axis=1)
        c = basis.evaluate(nodes).T @ (weights * f(nodes))
    else:
        X = _check_points(basis, 3 * basis.K, rng)
        c = np.linalg.lstsq(basis.evaluate(X), f(X), rcond=None)[0]

    Xc = _check_points(basis, 200, rng)
    fc = f(Xc)
    mismatch = np.max(np.abs(basis.evaluate(Xc) @ c - fc))
    if mismatch > tol * max(1.0, np.max(np.abs(fc))):
        raise NotPolynomialError(
            f"function is not reproduced by the order-{basis.k} basis (max mismatch {mismatch:.3e})"
        )
    c[np.abs(c) < 1e-12 * np.max(np.abs(c))] = 0.0
    return c


def low_dim_high_order_target() -> TargetFunction:
    """``sum_{i=1}^{9} xi_1^i xi_2^(i+2)`` in an order-20 Hermite basis (d=2)."""
    basis = BasisSet.total_degree("hermite", 2, 20)

    def f(X):
        return sum(X[:, 0] ** i * X[:, 1] ** (i + 2) for i in range(1, 10))

    return TargetFunction("low-dim-high-order", basis, f, exact_coefficients_from_closed_form(basis, f))


def high_dim_low_order_target() -> TargetFunction:
    """``sum_i xi_i xi_{i+1} + sum_i xi_i^2`` in an order-2 Legendre basis (d=20)."""
    basis = BasisSet.total_degree("legendre", 20, 2)

    def f(X):
        return np.sum(X[:, :-1] * X[:, 1:], axis=1) + np.sum(X**2, axis=1)

    return TargetFunction("high-dim-low-order", basis, f, exact_coefficients_from_closed_form(basis, f))


def rosenbrock(xi) -> float | np.ndarray:
    """Generalized Rosenbrock function ``sum_{i=1}^{5} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2``."""
    X = np.asarray(xi, dtype=float)
    if X.shape[-1] != 6:
        raise ValueError("rosenbrock takes 6 inputs")
    a, b = X[..., :-1], X[..., 1:]
    out = np.sum(100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def rosenbrock_target() -> TargetFunction:
    basis = BasisSet.total_degree("legendre", 6, 4)
    return TargetFunction("rosenbrock", basis, rosenbrock, exact_coefficients_from_closed_form(basis, rosenbrock))


def mass_spring_qoi(m, gamma, omega, f_amp=1.0, t=20.0):
    """Displacement of the undamped forced oscillator ``m x'' + gamma x = f sin(omega t)``
    started from rest.

    ``x(t) = f / (gamma - m omega^2) * (sin(omega t) - omega / omega0 * sin(omega0 t))``
    with ``omega0 = sqrt(gamma / m)``.
    """
    m, gamma, omega = (np.asarray(v, dtype=float) for v in (m, gamma, omega))
    if np.any(m <= 0) or np.any(gamma <= 0):
        raise ValueError("mass and stiffness must be positive")
    detune = gamma - m * omega**2
    if np.any(np.abs(detune) < 1e-12):
        raise ResonanceError("forcing frequency is at resonance")
    omega0 = np.sqrt(gamma / m)
    x = f_amp / detune * (np.sin(omega * t) - omega / omega0 * np.sin(omega0 * t))
    return float(x) if np.ndim(x) == 0 else x


#: Physical ranges of (mass, stiffness, frequency).
MASS_SPRING_RANGES = ((0.018, 0.022), (0.035, 0.045), (0.99, 1.01))


def mass_spring_physical(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map standardized inputs in ``[-1, 1]^3`` to (m, gamma, omega)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = []
    for j, (lo, hi) in enumerate(MASS_SPRING_RANGES):
        cols.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * X[:, j])
    return tuple(cols)


def mass_spring_target(f_amp: float = 1.0, t: float = 20.0, order: int = 10) -> TargetFunction:
    basis = BasisSet.total_degree("legendre", 3, order)

    def f(X):
        m, g, w = mass_spring_physical(X)
        return mass_spring_qoi(m, g, w, f_amp, t)

    return TargetFunction("mass-spring", basis, f, None, {"f_amp": f_amp, "t": t})


def make_target(tag: str, **kwargs) -> TargetFunction:
    makers = {
        "low-dim-high-order": low_dim_high_order_target,
        "high-dim-low-order": high_dim_low_order_target,
        "rosenbrock": rosenbrock_target,
        "mass-spring": mass_spring_target,
    }
    if tag not in makers:
        raise ValueError(f"unknown target {tag!r}; choose from {sorted(makers)}")
    return makers[tag](**kwargs)
