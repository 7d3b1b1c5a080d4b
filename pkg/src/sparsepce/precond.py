"""Design of dense preconditioners that pull ``Psi^T P^T P Psi`` toward an
equiangular-tight-frame Gram matrix while keeping ``P`` close to identity.

The design objective is

    f(G, P) = ||G - Psi^T P^T P Psi||_F^2 + lam * ||I - P||_F^2

with ``G`` restricted to symmetric unit-diagonal matrices whose off-diagonal
magnitudes do not exceed the Welch bound. It is minimized by alternating
between a closed-form projection for ``G`` and nonlinear conjugate gradient
for ``P``; the weight ``lam`` is chosen by hold-out validation.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .exceptions import DimensionMismatchError, SingularColumnError
from .l1solve import BpdnConfig, RecoveryResult, cross_validate_epsilon, default_epsilon_grid, normalized_bpdn
from .measure import etf_project, normalize_columns, welch_bound, write_matrix_csv

logger = logging.getLogger(__name__)

#: Candidate penalty weights; 1e6 behaves as the identity preconditioner.
DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e6)


@dataclass(frozen=True)
class DesignConfig:
    delta_threshold: float = 1e-2
    max_outer_iterations: int = 50
    gradient_tolerance: float = 1e-5
    max_inner_iterations: int = 200
    max_restarts: int = 3

    def __post_init__(self):
        if self.delta_threshold <= 0:
            raise ValueError("delta_threshold must be positive")
        if self.max_outer_iterations < 1 or self.max_inner_iterations < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass
class PreconditionerDesign:
    """Result of :func:`design_preconditioner`.

    ``objective_history[0]`` is ``f(I, P0)``; entry ``t`` is ``f(G_t, P_t)``.
    ``pre_step_history[t-1]`` holds ``f(G_t, P_{t-1})``, the value before the
    inner solve of outer iteration ``t``.
    """

    P: np.ndarray
    lam: float
    objective_history: list = field(default_factory=list)
    pre_step_history: list = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = False
    restarts: int = 0

    @classmethod
    def identity(cls, M: int) -> "PreconditionerDesign":
        return cls(np.eye(M), math.inf, [0.0], [], 0, True)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["P"] = self.P.tolist()
        out["lam"] = None if math.isinf(self.lam) else self.lam
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PreconditionerDesign":
        data = dict(data)
        data["P"] = np.asarray(data["P"], dtype=float)
        data["lam"] = math.inf if data["lam"] is None else float(data["lam"])
        return cls(**data)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_json(cls, path) -> "PreconditionerDesign":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_csv(self, path) -> None:
        write_matrix_csv(path, self.P)


def _check_shapes(G, P, Psi):
    M, K = Psi.shape
    if P.shape != (M, M):
        raise DimensionMismatchError(f"P must be {M}x{M}, got {P.shape}")
    if G.shape != (K, K):
        raise DimensionMismatchError(f"G must be {K}x{K}, got {G.shape}")


def _value_and_grad(G, P, Psi, lam):
    D = P @ Psi
    E = D.T @ D - G
    R = P - np.eye(P.shape[0])
    f = float(np.sum(E * E) + lam * np.sum(R * R))
    grad = 4.0 * (D @ E) @ Psi.T + 2.0 * lam * R
    return f, grad


def objective(G, P, Psi, lam: float) -> float:
    """``||G - Psi^T P^T P Psi||_F^2 + lam ||I - P||_F^2``."""
    G, P, Psi = (np.asarray(a, dtype=float) for a in (G, P, Psi))
    _check_shapes(G, P, Psi)
    return _value_and_grad(G, P, Psi, lam)[0]


def gradient_P(G, P, Psi, lam: float) -> np.ndarray:
    """Gradient of :func:`objective` w.r.t. ``P``:
    ``4 P Psi (Psi^T P^T P Psi - G) Psi^T + 2 lam (P - I)``.
    """
    G, P, Psi = (np.asarray(a, dtype=float) for a in (G, P, Psi))
    _check_shapes(G, P, Psi)
    return _value_and_grad(G, P, Psi, lam)[1]


def minimize_P(G, Psi, lam: float, P_init, config: DesignConfig | None = None):
    """Minimize the objective over ``P`` for fixed ``G``.

    Polak-Ribiere nonlinear CG with a Wolfe line search, stopped when the
    Frobenius norm of the gradient drops below ``gradient_tolerance`` or after
    ``max_inner_iterations``.

    Returns
    -------
    P : ndarray
        Never has a larger objective than ``P_init``.
    ok : bool
        False when the line search failed.
    """
    cfg = config or DesignConfig()
    G, Psi, P_init = (np.asarray(a, dtype=float) for a in (G, Psi, P_init))
    _check_shapes(G, P_init, Psi)
    M = P_init.shape[0]

    def fun(p):
        f, g = _value_and_grad(G, p.reshape(M, M), Psi, lam)
        return f, g.ravel()

    f0, g0 = fun(P_init.ravel())
    if np.linalg.norm(g0) < cfg.gradient_tolerance:
        return P_init.copy(), True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            fun,
            P_init.ravel(),
            jac=True,
            method="CG",
            options={"gtol": cfg.gradient_tolerance, "norm": 2, "maxiter": cfg.max_inner_iterations},
        )
    if res.fun > f0:
        return P_init.copy(), False
    # status 2 is a line-search failure; 1 is the iteration cap (acceptable).
    return res.x.reshape(M, M), res.status != 2


def _random_start(M: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((M, M)) / math.sqrt(M)


def design_preconditioner(
    Psi,
    lam: float,
    config: DesignConfig | None = None,
    seed=None,
    callback=None,
) -> PreconditionerDesign:
    """Alternating minimization of the design objective for a fixed ``lam``.

    Starting from a random ``P0`` and ``G0 = I``, each outer iteration
    projects the Gram matrix of the column-normalized ``P Psi`` onto the
    Welch-bounded set and then re-optimizes ``P`` from its previous value.
    Stops once the relative objective change falls below
    ``delta_threshold`` in magnitude.

    ``callback(t, G_t, P_t)``, if given, is invoked after every outer
    iteration.
    """
    cfg = config or DesignConfig()
    Psi = np.asarray(Psi, dtype=float)
    M, K = Psi.shape
    if math.isinf(lam):
        return PreconditionerDesign.identity(M)
    mu_E = welch_bound(M, K) if K >= 2 else 0.0
    rng = np.random.default_rng(seed)

    for restart in range(cfg.max_restarts + 1):
        P = _random_start(M, rng)
        G = np.eye(K)
        f_prev = _value_and_grad(G, P, Psi, lam)[0]
        history, pre_history = [f_prev], []
        converged = False
        try:
            for t in range(1, cfg.max_outer_iterations + 1):
                D_tilde, _ = normalize_columns(P @ Psi)
                G = etf_project(D_tilde.T @ D_tilde, mu_E)
                pre_history.append(_value_and_grad(G, P, Psi, lam)[0])
                P, _ = minimize_P(G, Psi, lam, P, cfg)
                f_t = _value_and_grad(G, P, Psi, lam)[0]
                history.append(f_t)
                if callback is not None:
                    callback(t, G, P)
                delta = (f_t - f_prev) / f_prev if f_prev > 0 else 0.0
                f_prev = f_t
                if abs(delta) < cfg.delta_threshold:
                    converged = True
                    break
        except SingularColumnError:
            logger.info("zero column in P @ Psi; restarting design (%d)", restart + 1)
            continue
        return PreconditionerDesign(P, float(lam), history, pre_history, t, converged, restart)
    raise SingularColumnError(
        f"preconditioner design hit a zero column after {cfg.max_restarts} restarts"
    )


def precondition_and_solve(Psi, u, P, epsilon: float = 0.0, config: BpdnConfig | None = None) -> RecoveryResult:
    """Solve ``min ||c||_1`` s.t. ``||P Psi c - P u||_2 <= epsilon``.

    The preconditioned matrix is column-normalized for the solve and the
    coefficients are returned in the scaling of ``Psi``.
    """
    Psi = np.asarray(Psi, dtype=float)
    P = np.asarray(P, dtype=float)
    return normalized_bpdn(P @ Psi, P @ np.asarray(u, dtype=float), epsilon, config)


@dataclass
class LambdaSelection:
    best_lambda: float
    design: PreconditionerDesign
    validation_errors: list
    epsilons: list
    lambdas: list
    train_index: np.ndarray = field(repr=False)
    val_index: np.ndarray = field(repr=False)


def train_val_split(M: int, seed=None, train_fraction: float = 0.75) -> tuple[np.ndarray, np.ndarray]:
    """Random split with ``ceil(train_fraction * M)`` training rows."""
    if M < 4:
        raise ValueError("need at least 4 samples for a train/validation split")
    n_tr = min(M - 1, math.ceil(train_fraction * M))
    perm = np.random.default_rng(seed).permutation(M)
    return np.sort(perm[:n_tr]), np.sort(perm[n_tr:])


def cross_validate_lambda(
    Psi,
    u,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    split_seed=None,
    design_config: DesignConfig | None = None,
    bpdn_config: BpdnConfig | None = None,
    epsilon_grid=None,
    design_seed=None,
) -> LambdaSelection:
    """Select the penalty weight by hold-out validation.

    One random 3:1 split is shared by all candidates. For each ``lam`` a
    preconditioner is designed on all ``M`` rows, the training rows of
    ``P Psi`` and ``P u`` are solved with a cross-validated tolerance, and the
    candidate is scored by ``||Psi_val c - u_val||_2`` on the raw validation
    rows. Ties go to the larger ``lam``. ``lam = inf`` denotes the identity.

    If no candidate produces a converged solve the identity is returned with
    ``best_lambda = inf``.
    """
    Psi = np.asarray(Psi, dtype=float)
    u = np.asarray(u, dtype=float)
    lambdas = [float(v) for v in lambda_grid]
    if not lambdas:
        raise ValueError("lambda grid is empty")
    M = Psi.shape[0]
    if u.shape != (M,):
        raise DimensionMismatchError("u must have one entry per row of Psi")
    tr, val = train_val_split(M, split_seed)
    Psi_n, _ = normalize_columns(Psi)

    designs, errors, epsilons = [], [], []
    for i, lam in enumerate(lambdas):
        seed_i = None if design_seed is None else [design_seed, i]
        try:
            design = design_preconditioner(Psi_n, lam, design_config, seed_i)
        except SingularColumnError:
            designs.append(None)
            errors.append(math.inf)
            epsilons.append(math.nan)
            continue
        D = design.P @ Psi
        uP = design.P @ u
        grid = epsilon_grid if epsilon_grid is not None else default_epsilon_grid(uP[tr])
        eps = cross_validate_epsilon(D[tr], uP[tr], grid=grid, config=bpdn_config, seed=split_seed)
        res = normalized_bpdn(D[tr], uP[tr], eps, bpdn_config)
        err = float(np.linalg.norm(Psi[val] @ res.coefficients - u[val])) if res.converged else math.inf
        designs.append(design)
        errors.append(err)
        epsilons.append(eps)

    finite = [i for i, e in enumerate(errors) if math.isfinite(e)]
    if not finite:
        return LambdaSelection(math.inf, PreconditionerDesign.identity(M), errors, epsilons, lambdas, tr, val)
    best = min(finite, key=lambda i: (errors[i], -lambdas[i]))
    return LambdaSelection(lambdas[best], designs[best], errors, epsilons, lambdas, tr, val)
