"""Basis pursuit (denoising).

``min ||c||_1  s.t.  ||A c - y||_2 <= eps`` is solved, by default, exactly:
as a linear program when ``eps`` is within the feasibility tolerance and as a
second-order cone program otherwise. The alternative ``method="spgl1"`` is a
Pareto-curve root finder: Newton iteration on
``phi(tau) = min {||A c - y||_2 : ||c||_1 <= tau}`` with every LASSO
subproblem handled by a nonmonotone spectral projected gradient method and a
curvilinear projected backtracking line search.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .exceptions import DimensionMismatchError
from .measure import MeasurementMatrix, normalize_columns

logger = logging.getLogger(__name__)

# Exit statuses.
ROOT_FOUND = "root-found"
BPSOL_FOUND = "bp-solution"
SUBOPTIMAL_BP = "suboptimal-bp"
LEAST_SQUARES = "least-squares"
ZERO_SOLUTION = "zero-solution"
ITERATIONS = "max-iterations"
LINE_ERROR = "line-search-error"
LP_SOLUTION = "lp-solution"
SOCP_SOLUTION = "socp-solution"

_CONVERGED = {ROOT_FOUND, BPSOL_FOUND, SUBOPTIMAL_BP, ZERO_SOLUTION, LP_SOLUTION, SOCP_SOLUTION}
METHODS = ("auto", "spgl1")


@dataclass(frozen=True)
class BpdnConfig:
    """Solver settings.

    ``method="auto"`` solves basis pursuit as a linear program and basis
    pursuit denoising as a cone program, both to interior-point accuracy;
    ``method="spgl1"`` uses the spectral projected gradient root finder,
    whose iteration cap (``max_iterations=None`` means ``50 * M``) and
    tolerances are the remaining fields. ``cone_tolerance`` is the gap and
    feasibility tolerance of the cone solver.
    """

    method: str = "auto"

    max_iterations: int | None = None
    bp_tolerance: float = 1e-8
    opt_tolerance: float = 1e-6
    verbose: bool = False
    dec_tolerance: float = 1e-4
    ls_tolerance: float = 1e-6
    n_prev_vals: int = 3
    step_min: float = 1e-16
    step_max: float = 1e5
    max_line_errors: int = 10
    cone_tolerance: float = 1e-10

    def __post_init__(self):
        if self.bp_tolerance <= 0 or self.opt_tolerance <= 0 or self.cone_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    def iteration_limit(self, M: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 50 * M


@dataclass
class RecoveryResult:
    coefficients: np.ndarray
    residual_norm: float
    epsilon_used: float
    iterations: int
    converged: bool
    status: str = ""
    info: dict = field(default_factory=dict, repr=False)


def project_l1_ball(v: np.ndarray, tau: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= tau}``."""
    if tau <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= tau:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - tau
    ks = np.arange(1, u.size + 1)
    # the first entry always qualifies in exact arithmetic; rounding can
    # hide it when tau is negligible against u
    active = np.flatnonzero(u > css / ks)
    rho = active[-1] if active.size else 0
    theta = css[rho] / (rho + 1)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _line_curvy(x, g, fmax, A, b, tau):
    # Projected backtracking along the arc P(x - step * g).
    gamma, max_iters = 1e-4, 10
    step, scale, snorm, nsafe = 1.0, 1.0, 0.0, 0
    n = x.size
    for it in range(max_iters + 1):
        x_new = project_l1_ball(x - step * scale * g, tau)
        r_new = b - A @ x_new
        f_new = 0.5 * (r_new @ r_new)
        s = x_new - x
        gts = scale * (g @ s)
        if gts >= 0:
            return f_new, x_new, r_new, it, False
        if f_new < fmax + gamma * step * gts:
            return f_new, x_new, r_new, it, True
        step /= 2.0
        snorm_old = snorm
        snorm = np.linalg.norm(s) / math.sqrt(n)
        if abs(snorm - snorm_old) <= 1e-6 * snorm:
            scale = snorm / (np.linalg.norm(g) / math.sqrt(n)) / (2.0**nsafe)
            nsafe += 1
    return f_new, x_new, r_new, max_iters, False


def _line_feasible(f, x, d, gtd, fmax, A, b):
    # Nonmonotone backtracking along a feasible direction, quadratic interpolation.
    gamma, max_iters = 1e-4, 10
    step = 1.0
    gtd = -abs(gtd)
    for it in range(max_iters + 1):
        x_new = x + step * d
        r_new = b - A @ x_new
        f_new = 0.5 * (r_new @ r_new)
        if f_new < fmax + gamma * step * gtd:
            return f_new, x_new, r_new, it, True
        if step <= 0.1:
            step /= 2.0
        else:
            tmp = (-gtd * step**2) / (2.0 * (f_new - f - step * gtd))
            if not (0.1 <= tmp <= 0.9 * step) or np.isnan(tmp):
                tmp = step / 2.0
            step = tmp
    return f_new, x_new, r_new, max_iters, False


def _spgl1(A: np.ndarray, b: np.ndarray, sigma: float, cfg: BpdnConfig):
    m, n = A.shape
    iter_lim = cfg.iteration_limit(m)
    opt_tol, bp_tol = cfg.opt_tolerance, cfg.bp_tolerance
    step_max = cfg.step_max
    line_errors_left = cfg.max_line_errors
    b_norm = float(np.linalg.norm(b))

    if b_norm <= sigma:
        return np.zeros(n), b_norm, 0, ZERO_SOLUTION

    tau = 0.0
    x = np.zeros(n)
    r = b.copy()
    g = -(A.T @ r)
    f = 0.5 * (r @ r)
    last_fv = np.full(cfg.n_prev_vals, -np.inf)
    last_fv[0] = f
    f_old = f

    dx = project_l1_ball(x - g, tau) - x
    dx_norm = np.linalg.norm(dx, np.inf)
    g_step = step_max if dx_norm < 1.0 / step_max else min(step_max, max(cfg.step_min, 1.0 / dx_norm))

    status = None
    tau_updated = False
    it = 0
    while True:
        g_norm = np.linalg.norm(g, np.inf)
        r_norm = math.sqrt(2.0 * f)
        gap = r @ (r - b) + tau * g_norm
        rgap = abs(gap) / max(1.0, f)
        a_error1 = r_norm - sigma
        r_error1 = abs(a_error1) / max(1.0, r_norm)
        r_error2 = abs(f - 0.5 * sigma**2) / max(1.0, f)

        if g_norm <= cfg.ls_tolerance * r_norm:
            status = LEAST_SQUARES
        if rgap <= max(opt_tol, r_error2) or r_error1 <= opt_tol:
            if r_norm <= sigma:
                status = SUBOPTIMAL_BP
            # With sigma == 0 only the bp_tol residual test certifies feasibility.
            if r_error1 <= opt_tol and sigma > 0:
                status = ROOT_FOUND
            if r_norm <= bp_tol * b_norm:
                status = BPSOL_FOUND

        f_change = abs(f - f_old)
        rel_change1 = f_change <= cfg.dec_tolerance * f
        rel_change2 = f_change <= 1e-1 * f * abs(r_norm - sigma)
        tau_updated = (
            ((rel_change1 and r_norm > 2 * sigma) or (rel_change2 and r_norm <= 2 * sigma))
            and status is None
            and not tau_updated
        )
        if tau_updated:
            tau_old = tau
            tau = max(0.0, tau + r_norm * a_error1 / g_norm) if g_norm > 0 else tau
            if tau < tau_old:
                x = project_l1_ball(x, tau)
                r = b - A @ x
                g = -(A.T @ r)
                f = 0.5 * (r @ r)
                last_fv = np.full(cfg.n_prev_vals, -np.inf)
                last_fv[0] = f

        if status is None and it + 1 >= iter_lim:
            status = ITERATIONS
        if cfg.verbose and (it % 50 == 0 or status):
            logger.info("iter %5d  rnorm %.6e  rgap %.2e  tau %.6e", it, r_norm, rgap, tau)
        if status is not None:
            break

        it += 1
        x_old, f_old, g_old = x, f, g

        f, x, r, _, ok = _line_curvy(x, g_step * g, last_fv.max(), A, b, tau)
        if not ok:
            x, f = x_old, f_old
            d = project_l1_ball(x - g_step * g, tau) - x
            f, x, r, _, ok = _line_feasible(f, x, d, g @ d, last_fv.max(), A, b)
            if not ok:
                x, f = x_old, f_old
                r = b - A @ x
                if line_errors_left <= 0:
                    status = LINE_ERROR
                    break
                step_max /= 10.0
                line_errors_left -= 1

        g = -(A.T @ r)
        s = x - x_old
        y = g - g_old
        sts = s @ s
        sty = s @ y
        g_step = step_max if sty <= 0 else min(step_max, max(cfg.step_min, sts / sty))
        last_fv[it % cfg.n_prev_vals] = f

    return x, float(np.linalg.norm(b - A @ x)), it, status


def _restore_feasibility(A, b, x, sigma, target):
    # Shrink the residual to sigma along the least-squares correction; the
    # l1 cost grows by O(opt_tol) which is within the solver's own tolerance.
    r = b - A @ x
    r_norm = np.linalg.norm(r)
    delta = np.linalg.lstsq(A, r, rcond=None)[0]
    t = 1.0 - sigma / r_norm
    x_new = x + t * delta
    r_new = np.linalg.norm(b - A @ x_new)
    if r_new <= target:
        return x_new, float(r_new)
    return x, float(r_norm)


def _basis_pursuit_lp(A, b):
    # min 1'(u + v)  s.t.  A (u - v) = b,  u, v >= 0
    K = A.shape[1]
    res = linprog(np.ones(2 * K), A_eq=np.hstack([A, -A]), b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return res.x[:K] - res.x[K:]


def _bpdn_socp(A, b, sigma, tol):
    # x = [c, t]: min sum(t)  s.t.  |c| <= t,  (sigma, b - A c) in the second-order cone
    M, K = A.shape
    eye = sp.identity(K, format="csc")
    G = sp.vstack(
        [
            sp.hstack([eye, -eye]),
            sp.hstack([-eye, -eye]),
            sp.csc_matrix((1, 2 * K)),
            sp.hstack([sp.csc_matrix(A), sp.csc_matrix((M, K))]),
        ]
    ).tocsc()
    h = np.concatenate([np.zeros(2 * K), [sigma], b])
    q = np.concatenate([np.zeros(K), np.ones(K)])
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = tol
    cones = [clarabel.NonnegativeConeT(2 * K), clarabel.SecondOrderConeT(M + 1)]
    sol = clarabel.DefaultSolver(sp.csc_matrix((2 * K, 2 * K)), q, G, h, cones, settings).solve()
    if str(sol.status) != "Solved":
        return None, sol.iterations
    return np.asarray(sol.x[:K]), sol.iterations


def bpdn_solve(A, y, epsilon: float = 0.0, config: BpdnConfig | None = None) -> RecoveryResult:
    """Basis pursuit denoising: ``min ||c||_1`` s.t. ``||A c - y||_2 <= epsilon``.

    ``A`` should be column-normalized; when it is a
    :class:`~sparsepce.measure.MeasurementMatrix` the returned coefficients
    are mapped back to its assembled column scaling. ``epsilon=0`` gives basis
    pursuit. If the exact solvers fail (e.g. an inconsistent system with
    ``epsilon=0``) the gradient method takes over; a run of it that hits the
    iteration limit still returns its last iterate, with ``converged=False``.
    """
    cfg = config or BpdnConfig()
    mm = A if isinstance(A, MeasurementMatrix) else None
    A = np.asarray(mm.entries if mm is not None else A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"incompatible shapes A{A.shape} and y{y.shape}")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")

    x = None
    if cfg.method == "auto":
        if epsilon <= cfg.bp_tolerance * (1.0 + np.linalg.norm(y)):
            x, iters, status = _basis_pursuit_lp(A, y), 0, LP_SOLUTION
        elif np.linalg.norm(y) <= epsilon:
            x, iters, status = np.zeros(A.shape[1]), 0, ZERO_SOLUTION
        else:
            x, iters = _bpdn_socp(A, y, float(epsilon), cfg.cone_tolerance)
            status = SOCP_SOLUTION
        if x is not None:
            r_norm = float(np.linalg.norm(y - A @ x))
    if x is None:
        x, r_norm, iters, status = _spgl1(A, y, float(epsilon), cfg)
    converged = status in _CONVERGED
    target = epsilon + cfg.bp_tolerance * (1.0 + np.linalg.norm(y))
    if converged and r_norm > target:
        x, r_norm = _restore_feasibility(A, y, x, epsilon, target)
    if mm is not None:
        x = mm.to_original(x)
    return RecoveryResult(x, r_norm, float(epsilon), iters, converged, status)


def normalized_bpdn(A, y, epsilon: float = 0.0, config: BpdnConfig | None = None) -> RecoveryResult:
    """Column-normalize ``A``, solve, and return coefficients for the unnormalized ``A``."""
    An, norms = normalize_columns(A)
    res = bpdn_solve(An, y, epsilon, config)
    res.coefficients = res.coefficients / norms
    return res


def default_epsilon_grid(y) -> list[float]:
    y_norm = float(np.linalg.norm(y))
    return [0.0] + [10.0**p * y_norm for p in range(-4, 0)]


def _split_indices(M: int, folds: int | None, rng: np.random.Generator, train_fraction: float = 0.75):
    perm = rng.permutation(M)
    if folds is None or folds < 2:
        n_tr = min(M - 1, max(1, math.ceil(train_fraction * M)))
        return [(np.sort(perm[:n_tr]), np.sort(perm[n_tr:]))]
    chunks = np.array_split(perm, folds)
    return [
        (np.sort(np.concatenate(chunks[:i] + chunks[i + 1 :])), np.sort(chunks[i]))
        for i in range(folds)
    ]


def cross_validate_epsilon(
    A,
    y,
    folds: int | None = None,
    grid=None,
    config: BpdnConfig | None = None,
    seed=0,
    return_scores: bool = False,
):
    """Pick the BPDN tolerance minimizing held-out residual.

    With ``folds=None`` a single 3:1 train/validation split is used; otherwise
    ``folds``-fold cross-validation. Candidate tolerances refer to the full
    system and are scaled by ``sqrt(M_train / M)`` when fitting a training
    subset. Ties go to the smaller tolerance.

    Returns the selected epsilon (and the mean validation residual per
    candidate when ``return_scores``).
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if grid is None:
        grid = default_epsilon_grid(y)
    grid = [float(e) for e in grid]
    if not grid:
        raise ValueError("epsilon grid is empty")
    if A.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"incompatible shapes A{A.shape} and y{y.shape}")
    if len(grid) == 1:
        return (grid[0], [math.nan]) if return_scores else grid[0]

    M = A.shape[0]
    splits = _split_indices(M, folds, np.random.default_rng(seed))
    scores = np.zeros(len(grid))
    for tr, val in splits:
        shrink = math.sqrt(tr.size / M)
        for i, eps in enumerate(grid):
            res = normalized_bpdn(A[tr], y[tr], eps * shrink, config)
            scores[i] += np.linalg.norm(A[val] @ res.coefficients - y[val])
    scores /= len(splits)
    order = sorted(range(len(grid)), key=lambda i: (scores[i], grid[i]))
    best = grid[order[0]]
    return (best, scores.tolist()) if return_scores else best
