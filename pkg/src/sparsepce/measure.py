"""Measurement matrices, coherence diagnostics and ETF Gram projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis import BasisSet
from .exceptions import DimensionMismatchError, SingularColumnError
from .sampling import SampleSet


@dataclass(frozen=True)
class MeasurementMatrix:
    """An ``M x K`` matrix of basis evaluations.

    ``scale`` records the factors each column has been divided by since
    assembly, so that coefficients solved against ``entries`` map back to the
    assembled scaling through :meth:`to_original`.
    """

    entries: np.ndarray
    scale: np.ndarray = None
    basis_ref: str = ""
    sample_ref: str = ""
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.entries.ndim != 2:
            raise DimensionMismatchError("entries must be a 2-D array")
        if self.scale is None:
            object.__setattr__(self, "scale", np.ones(self.entries.shape[1]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=0)

    def to_original(self, coefficients) -> np.ndarray:
        """Map coefficients of ``entries`` back to the assembled column scaling."""
        return np.asarray(coefficients) / self.scale

    def to_csv(self, path) -> None:
        write_matrix_csv(path, self.entries)


def assemble(basis: BasisSet, samples: SampleSet | np.ndarray) -> MeasurementMatrix:
    """``Psi[i, j] = psi_{alpha_j}(xi_i)``."""
    points = samples.points if isinstance(samples, SampleSet) else np.atleast_2d(np.asarray(samples, float))
    if points.shape[1] != basis.d:
        raise DimensionMismatchError(
            f"samples have d={points.shape[1]}, basis has d={basis.d}"
        )
    ref = f"{basis.family.value}(d={basis.d},k={basis.k})"
    sref = ""
    if isinstance(samples, SampleSet):
        sref = f"{samples.scheme.value}(M={samples.M},seed={samples.seed})"
    return MeasurementMatrix(basis.evaluate(points), basis_ref=ref, sample_ref=sref)


def _safe_norms(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise SingularColumnError(f"zero column(s) at index {bad.tolist()}")
    return norms


def normalize_columns(A) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A / norms, norms)`` for a plain array."""
    A = np.asarray(A, dtype=float)
    norms = _safe_norms(A)
    return A / norms, norms


def column_normalize(m: MeasurementMatrix) -> MeasurementMatrix:
    """Scale every column to unit l2 norm, accumulating the factors in ``scale``."""
    normed, norms = normalize_columns(m.entries)
    return replace(m, entries=normed, scale=m.scale * norms)


def gram(A, normalize: bool = False) -> np.ndarray:
    """``A^T A``, optionally of the column-normalized ``A``."""
    A = np.asarray(A, dtype=float)
    if normalize:
        A, _ = normalize_columns(A)
    G = A.T @ A
    if normalize:
        np.fill_diagonal(G, 1.0)
    return G


def mutual_coherence(A) -> float:
    """Largest absolute normalized inner product between distinct columns."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] < 2:
        raise ValueError("mutual coherence needs a matrix with at least two columns")
    G = np.abs(gram(A, normalize=True))
    np.fill_diagonal(G, 0.0)
    return float(min(1.0, G.max()))


def spark_lower_bound(mu: float) -> float:
    """``1 + 1/mu``; infinite for ``mu == 0`` (orthogonal columns)."""
    if mu < 0:
        raise ValueError("mutual coherence is non-negative")
    if mu == 0:
        return math.inf
    return 1.0 + 1.0 / mu


def welch_bound(M: int, K: int) -> float:
    """Smallest achievable mutual coherence of an ``M x K`` matrix.

    Returns 0 when ``M >= K`` (orthogonal columns are then possible).
    """
    if M < 1 or K < 2:
        raise ValueError("need M >= 1 and K >= 2")
    if M >= K:
        return 0.0
    return math.sqrt((K - M) / (M * (K - 1)))


def etf_project(G_tilde, mu_E: float) -> np.ndarray:
    """Project a Gram matrix onto the set of symmetric, unit-diagonal matrices
    whose off-diagonal magnitudes are at most ``mu_E``.

    Off-diagonal entries are clipped to ``[-mu_E, mu_E]``. Only the upper
    triangle is read; it is mirrored to the lower one.
    """
    G = np.asarray(G_tilde, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionMismatchError("Gram matrix must be square")
    upper = np.triu(np.clip(G, -mu_E, mu_E), 1)
    out = upper + upper.T
    np.fill_diagonal(out, 1.0)
    return out


def write_matrix_csv(path, A) -> None:
    """Row-major CSV with a leading ``rows,cols`` header line."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with Path(path).open("w") as fh:
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        for row in A:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    with Path(path).open() as fh:
        rows, cols = (int(v) for v in fh.readline().split(","))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(rows, cols)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, found {data.shape}")
    return data
