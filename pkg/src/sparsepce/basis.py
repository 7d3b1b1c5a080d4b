"""Orthonormal polynomial chaos bases under total-degree truncation.

Two families are supported:

* ``legendre`` -- orthonormal w.r.t. the uniform density 1/2 on [-1, 1]
  (``sqrt(2n+1) * P_n``).
* ``hermite`` -- orthonormal w.r.t. the standard normal density
  (probabilists' ``He_n / sqrt(n!)``).

Values are produced by the normalized three-term recurrence, which stays
well scaled up to order 20 and beyond.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .exceptions import BasisSizeError, DimensionMismatchError, DomainError

#: Refuse to enumerate bases with more members than this.
MAX_BASIS_SIZE = 10_000_000

# Tolerance on the Legendre support check, so that points produced by affine
# maps of [a, b] onto [-1, 1] are not rejected for round-off.
_SUPPORT_TOL = 1e-12


class PolynomialFamily(str, enum.Enum):
    LEGENDRE = "legendre"
    HERMITE = "hermite"

    @property
    def support(self) -> tuple[float, float]:
        if self is PolynomialFamily.LEGENDRE:
            return (-1.0, 1.0)
        return (-math.inf, math.inf)

    def density(self, x):
        """Univariate probability density of the family's measure."""
        x = np.asarray(x, dtype=float)
        if self is PolynomialFamily.LEGENDRE:
            return np.where(np.abs(x) <= 1.0, 0.5, 0.0)
        return np.exp(-0.5 * x**2) / math.sqrt(2.0 * math.pi)

    def gauss_quadrature(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n``-point Gauss rule with weights summing to one."""
        if self is PolynomialFamily.LEGENDRE:
            x, w = np.polynomial.legendre.leggauss(n)
        else:
            x, w = np.polynomial.hermite_e.hermegauss(n)
        return x, w / w.sum()


def as_family(family) -> PolynomialFamily:
    if isinstance(family, PolynomialFamily):
        return family
    try:
        return PolynomialFamily(str(family).lower())
    except ValueError:
        raise ValueError(
            f"unknown polynomial family {family!r}; "
            f"expected one of {[f.value for f in PolynomialFamily]}"
        ) from None


def cardinality(d: int, k: int) -> int:
    """Number of multi-indices in ``d`` variables with total degree <= ``k``."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return math.comb(k + d, d)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # Lexicographically ascending tuples of `parts` non-negative ints summing to `total`.
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def total_degree_indices(d: int, k: int, max_size: int = MAX_BASIS_SIZE) -> list[tuple[int, ...]]:
    """Enumerate the total-degree multi-index set in graded lexicographic order.

    Indices are sorted by total degree first and lexicographically within a
    degree, so the first entry is always the zero index and ``sorted`` on the
    returned list is a no-op.

    Raises
    ------
    BasisSizeError
        If the set has more than ``max_size`` members.
    """
    size = cardinality(d, k)
    if size > max_size:
        raise BasisSizeError(
            f"total-degree basis with d={d}, k={k} has {size} members "
            f"(limit {max_size})"
        )
    out = []
    for t in range(k + 1):
        out.extend(_compositions(t, d))
    return out


def _check_support(family: PolynomialFamily, x: np.ndarray) -> None:
    if family is PolynomialFamily.LEGENDRE:
        if np.any(np.abs(x) > 1.0 + _SUPPORT_TOL) or np.any(np.isnan(x)):
            raise DomainError("Legendre polynomials are only defined on [-1, 1]")
    elif not np.all(np.isfinite(x)):
        raise DomainError("Hermite polynomials need finite inputs")


def univariate_table(family, nmax: int, x) -> np.ndarray:
    """Evaluate orthonormal polynomials of degrees ``0..nmax`` at ``x``.

    Returns an array of shape ``x.shape + (nmax + 1,)``.
    """
    family = as_family(family)
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    x = np.asarray(x, dtype=float)
    _check_support(family, x)
    table = np.empty(x.shape + (nmax + 1,))
    table[..., 0] = 1.0
    if nmax == 0:
        return table
    if family is PolynomialFamily.LEGENDRE:
        # p_{n+1} = (x p_n - a_n p_{n-1}) / a_{n+1},  a_n = n / sqrt(4n^2 - 1)
        table[..., 1] = math.sqrt(3.0) * x
        for n in range(1, nmax):
            a_n = n / math.sqrt(4.0 * n * n - 1.0)
            a_next = (n + 1) / math.sqrt(4.0 * (n + 1) ** 2 - 1.0)
            table[..., n + 1] = (x * table[..., n] - a_n * table[..., n - 1]) / a_next
    else:
        # h_{n+1} = (x h_n - sqrt(n) h_{n-1}) / sqrt(n+1)
        table[..., 1] = x
        for n in range(1, nmax):
            table[..., n + 1] = (x * table[..., n] - math.sqrt(n) * table[..., n - 1]) / math.sqrt(n + 1)
    return table


def eval_univariate(family, n: int, x):
    """Orthonormal polynomial of degree ``n`` evaluated at ``x``."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    values = univariate_table(family, n, x)[..., n]
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class BasisSet:
    """Total-degree orthonormal basis in ``d`` variables up to order ``k``.

    Attributes
    ----------
    family : PolynomialFamily
    d, k : int
        Dimension and total order.
    indices : ndarray of shape (K, d)
        Multi-indices in graded lexicographic order.
    """

    family: PolynomialFamily
    d: int
    k: int
    indices: np.ndarray = field(repr=False)

    @classmethod
    def total_degree(cls, family, d: int, k: int) -> "BasisSet":
        idx = np.array(total_degree_indices(d, k), dtype=np.int64).reshape(-1, d)
        idx.setflags(write=False)
        return cls(as_family(family), d, k, idx)

    @property
    def K(self) -> int:
        return self.indices.shape[0]

    def __len__(self) -> int:
        return self.K

    def index_of(self, alpha: Sequence[int]) -> int:
        hits = np.flatnonzero(np.all(self.indices == np.asarray(alpha), axis=1))
        if hits.size == 0:
            raise KeyError(f"multi-index {tuple(alpha)} not in basis")
        return int(hits[0])

    def evaluate(self, X) -> np.ndarray:
        """Evaluate every basis function at every row of ``X``.

        Parameters
        ----------
        X : array_like of shape (n, d) or (d,)

        Returns
        -------
        ndarray of shape (n, K), or (K,) for a single point.
        """
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.d:
            raise DimensionMismatchError(
                f"points have {X2.shape[1]} coordinates, basis has d={self.d}"
            )
        out = np.ones((X2.shape[0], self.K))
        for j in range(self.d):
            degrees = self.indices[:, j]
            top = int(degrees.max())
            if top == 0:
                continue
            table = univariate_table(self.family, top, X2[:, j])
            out *= table[:, degrees]
        return out[0] if single else out

    def local_coherence(self, X) -> np.ndarray | float:
        """``B(xi) = max_alpha |psi_alpha(xi)|`` for each row of ``X``."""
        vals = np.abs(self.evaluate(X))
        return vals.max(axis=-1) if vals.ndim > 1 else float(vals.max())

    def legendre_bound(self) -> float:
        """``max_alpha prod_i sqrt(2 alpha_i + 1)``, an upper bound on B for Legendre."""
        return float(np.sqrt(np.prod(2 * self.indices + 1, axis=1)).max())


def eval_multivariate(basis: BasisSet, xi) -> np.ndarray:
    """Values of all ``K`` basis functions at a single point ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1:
        raise DimensionMismatchError("xi must be a single d-vector")
    return basis.evaluate(xi)


def local_coherence_B(basis: BasisSet, xi) -> float:
    return basis.local_coherence(np.asarray(xi, dtype=float))
