"""Input sample generation: standard and coherence-optimal measures."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import BasisSet, PolynomialFamily, as_family
from .exceptions import ChainStuckError, DimensionMismatchError


class Scheme(str, enum.Enum):
    STANDARD = "standard"
    COHERENCE_OPTIMAL = "coherence-optimal"


@dataclass(frozen=True)
class SampleSet:
    """``M`` input points with per-point weights.

    ``weights`` are all one for standard sampling and ``1 / B(xi)`` for
    coherence-optimal sampling.
    """

    points: np.ndarray
    scheme: Scheme
    weights: np.ndarray
    family: PolynomialFamily
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("points must be an (M, d) array with M >= 1")
        if self.weights.shape != (self.points.shape[0],):
            raise DimensionMismatchError("need one weight per point")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be strictly positive")

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# scheme={self.scheme.value},family={self.family.value},seed={self.seed}\n")
            writer = csv.writer(fh)
            writer.writerow([f"xi_{j + 1}" for j in range(self.d)] + ["weight"])
            for row, w in zip(self.points, self.weights):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        path = Path(path)
        with path.open(newline="") as fh:
            meta_line = fh.readline()
            if not meta_line.startswith("#"):
                raise ValueError(f"{path}: missing '# scheme=...' header line")
            meta = dict(item.split("=", 1) for item in meta_line[1:].strip().split(","))
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
        return cls(
            points=data[:, :-1],
            scheme=Scheme(meta["scheme"]),
            weights=data[:, -1],
            family=as_family(meta["family"]),
            seed=seed,
        )


def _draw_standard(family: PolynomialFamily, rng: np.random.Generator, shape, scale: float = 1.0):
    if family is PolynomialFamily.LEGENDRE:
        return rng.uniform(-1.0, 1.0, size=shape)
    return scale * rng.standard_normal(size=shape)


def standard_samples(basis: BasisSet, M: int, seed=None) -> SampleSet:
    """Draw ``M`` i.i.d. points from the basis family's own measure."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    pts = _draw_standard(basis.family, rng, (M, basis.d))
    return SampleSet(pts, Scheme.STANDARD, np.ones(M), basis.family, seed)


@dataclass(frozen=True)
class ChainConfig:
    """Settings of the independence Metropolis-Hastings chain.

    ``thin=None`` picks ``max(1, chain_length // M)`` with
    ``chain_length = length_factor * M`` post-burn-in steps. ``proposal_scale``
    widens the normal proposal for Hermite bases (``None`` = automatic,
    ``sqrt(max(1, k))``); it has no effect for Legendre.
    """

    burn_in: int = 1000
    thin: int | None = None
    length_factor: int = 10
    proposal_scale: float | None = None

    def thinning(self, M: int) -> int:
        if self.thin is not None:
            return max(1, int(self.thin))
        return max(1, (self.length_factor * M) // M)


def _log_proposal_ratio(family: PolynomialFamily, x: np.ndarray, scale: float) -> np.ndarray:
    # log(rho(x) / q(x)) summed over coordinates; zero when q == rho.
    if family is PolynomialFamily.LEGENDRE or scale == 1.0:
        return np.zeros(x.shape[0])
    return np.sum(-0.5 * x**2 + 0.5 * (x / scale) ** 2, axis=1) + x.shape[1] * math.log(scale)


def coherence_optimal_samples(basis: BasisSet, M: int, seed=None, chain_config: ChainConfig | None = None) -> SampleSet:
    """Approximate draws from the density proportional to ``rho * B**2``.

    Uses an independence Metropolis-Hastings chain whose proposal is the
    family's own measure (a widened normal for Hermite). All proposals are
    independent of the chain state, so they and their ``B`` values are
    computed in one vectorized pass; only the accept/reject scan is serial.

    Raises
    ------
    ChainStuckError
        If no proposal is accepted after burn-in.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    cfg = chain_config or ChainConfig()
    rng = np.random.default_rng(seed)
    thin = cfg.thinning(M)
    n_steps = cfg.burn_in + M * thin
    family = basis.family
    scale = 1.0
    if family is PolynomialFamily.HERMITE:
        scale = cfg.proposal_scale if cfg.proposal_scale is not None else math.sqrt(max(1, basis.k))

    proposals = _draw_standard(family, rng, (n_steps + 1, basis.d), scale)
    B = _local_coherence_batched(basis, proposals)
    log_target = 2.0 * np.log(B) + _log_proposal_ratio(family, proposals, scale)
    log_u = np.log(rng.uniform(size=n_steps))

    current = 0
    chain = np.empty(n_steps, dtype=np.int64)
    accepted_after_burn = 0
    for step in range(n_steps):
        cand = step + 1
        if log_u[step] < log_target[cand] - log_target[current]:
            current = cand
            if step >= cfg.burn_in:
                accepted_after_burn += 1
        chain[step] = current

    if accepted_after_burn == 0 and M * thin > 1:
        raise ChainStuckError(
            f"Metropolis-Hastings chain accepted no moves in {M * thin} post-burn-in steps"
        )
    keep = chain[cfg.burn_in + thin - 1 :: thin][:M]
    pts = proposals[keep]
    weights = 1.0 / B[keep]
    diag = {
        "acceptance_rate": accepted_after_burn / max(1, M * thin),
        "burn_in": cfg.burn_in,
        "thin": thin,
        "proposal_scale": scale,
    }
    return SampleSet(pts, Scheme.COHERENCE_OPTIMAL, weights, family, seed, diag)


def _local_coherence_batched(basis: BasisSet, X: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk):
        out[start : start + chunk] = basis.local_coherence(X[start : start + chunk])
    return out


def draw_samples(basis: BasisSet, M: int, scheme, seed=None, chain_config: ChainConfig | None = None) -> SampleSet:
    scheme = Scheme(scheme)
    if scheme is Scheme.STANDARD:
        return standard_samples(basis, M, seed)
    return coherence_optimal_samples(basis, M, seed, chain_config)


def weight_matrix(samples: SampleSet) -> np.ndarray:
    """Diagonal ``M x M`` weight matrix ``W`` with ``W[i, i] = weights[i]``."""
    return np.diag(samples.weights)
