"""Monte Carlo experiment harness: phase diagrams and accuracy studies.

Every trial draws its randomness from a ``SeedSequence`` keyed by
``(master_seed, stream, cell, trial)``, so results do not depend on the
execution order or on ``n_jobs``.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..basis import BasisSet, as_family
from ..estimators import SparsePCERegressor
from ..l1solve import BpdnConfig
from ..precond import DEFAULT_LAMBDA_GRID, DesignConfig
from ..sampling import Scheme, draw_samples
from .targets import TargetFunction, make_target, manufactured_target, relative_error

logger = logging.getLogger(__name__)

N_VALIDATION = 1000


def trial_seed(master_seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), *map(int, key)]).generate_state(1)[0])


@dataclass
class PhaseDiagramConfig:
    d: int = 5
    k: int = 5
    family: str = "legendre"
    resolution: int = 10
    trials: int = 25
    threshold: float = 1e-3
    sampling: str = "standard"
    precondition: bool = False
    seed: int = 0
    m_over_k: list | None = None
    s_over_m: list | None = None
    sparsity: int | None = None
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    n_jobs: int = 1

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.sparsity is not None and self.sparsity < 1:
            raise ValueError("sparsity must be >= 1")
        Scheme(self.sampling)
        as_family(self.family)
        if self.resolution * self.resolution * self.trials >= 250_000:
            warnings.warn("full-scale phase diagram requested; this will take a long time", stacklevel=2)

    def grid(self) -> tuple[list, list]:
        """``(M/K values, s/M values)``; with a fixed ``sparsity`` the second
        list is ``[None]`` and each column holds a single cell."""
        xs = self.m_over_k or [(i + 1) / self.resolution for i in range(self.resolution)]
        if self.sparsity is not None:
            return list(xs), [None]
        ys = self.s_over_m or [(j + 1) / self.resolution for j in range(self.resolution)]
        return list(xs), list(ys)


@dataclass
class ExperimentResult:
    """Per-trial records plus aggregate summaries.

    ``trials`` is a list of flat dicts (one per trial and method);
    ``cells`` (phase diagrams only) holds one dict per grid cell and
    ``summary`` the median/quartile statistics per group.
    """

    trials: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    contour: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    config: dict = field(default_factory=dict)


def quartiles(values) -> dict:
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if v.size == 0:
        return {"q1": math.nan, "median": math.nan, "q3": math.nan}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"q1": float(q1), "median": float(med), "q3": float(q3)}


def fit_pipeline(
    target: TargetFunction,
    M: int,
    seed: int,
    sampling: str = "standard",
    precondition: bool = False,
    epsilon="cv",
    noise_sigma: float = 0.0,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    bpdn_config: BpdnConfig | None = None,
    design_config: DesignConfig | None = None,
    n_validation: int = N_VALIDATION,
) -> dict:
    """Draw samples, (optionally) add noise, fit and score one surrogate."""
    basis = target.basis
    s_samples, s_noise, s_fit, s_val = np.random.SeedSequence(seed).generate_state(4)
    samples = draw_samples(basis, M, sampling, int(s_samples))
    u_clean = target.evaluate(samples.points)
    noise = np.random.default_rng(int(s_noise)).standard_normal(M)
    u = u_clean + noise_sigma * noise
    model = SparsePCERegressor(
        family=basis.family.value,
        order=basis.k,
        epsilon=epsilon,
        precondition=precondition,
        lambda_grid=lambda_grid,
        bpdn_config=bpdn_config,
        design_config=design_config,
        random_state=int(s_fit) % (2**31),
    )
    model.fit(samples.points, u, sample_weight=samples.weights)

    rng_val = np.random.default_rng(int(s_val))
    if basis.family.value == "legendre":
        Xv = rng_val.uniform(-1, 1, (n_validation, basis.d))
    else:
        Xv = rng_val.standard_normal((n_validation, basis.d))
    fv = target.evaluate(Xv)
    out = {
        "val_error": float(np.linalg.norm(model.predict(Xv) - fv) / np.linalg.norm(fv)),
        "mutual_coherence": model.mutual_coherence_,
        "lambda": model.lambda_,
        "epsilon": float(model.epsilon_),
        "converged": bool(model.result_.converged),
    }
    out["rel_error"] = (
        relative_error(model.coef_, target.exact_coefficients) if target.exact_coefficients is not None else math.nan
    )
    return out


def _phase_task(cfg: PhaseDiagramConfig, basis: BasisSet, cell: int, M: int, s: int, trial: int) -> dict:
    target = manufactured_target(basis, s, trial_seed(cfg.seed, 0, cell, trial))
    rec = fit_pipeline(
        target,
        M,
        trial_seed(cfg.seed, 1, cell, trial),
        sampling=cfg.sampling,
        precondition=cfg.precondition,
        epsilon=0.0,
        lambda_grid=cfg.lambda_grid,
        n_validation=200,
    )
    rec.update({"cell": cell, "M": M, "s": s, "trial": trial, "success": rec["rel_error"] < cfg.threshold})
    return rec


def extract_contour(cells: list, xs: list, ys: list, level: float = 0.5) -> list:
    """First crossing of ``level`` along each column, scanning ``s/M`` upward.

    Returns a list of ``{"M_over_K": x, "s_over_M": y}`` with linear
    interpolation between neighbouring cells; columns that never cross are
    skipped.
    """
    prob = {(c["M_over_K"], c["s_over_M"]): c["success_prob"] for c in cells}
    out = []
    ys_sorted = sorted(ys)
    for x in sorted(xs):
        col = [prob[(x, y)] for y in ys_sorted]
        for j in range(1, len(col)):
            if col[j - 1] >= level > col[j]:
                y0, y1 = ys_sorted[j - 1], ys_sorted[j]
                frac = (col[j - 1] - level) / (col[j - 1] - col[j])
                out.append({"M_over_K": x, "s_over_M": y0 + frac * (y1 - y0)})
                break
    return out


def run_phase_diagram(cfg: PhaseDiagramConfig) -> ExperimentResult:
    basis = BasisSet.total_degree(cfg.family, cfg.d, cfg.k)
    K = basis.K
    xs, ys = cfg.grid()
    tasks, cells = [], []
    for i, x in enumerate(xs):
        M = max(1, int(round(x * K)))
        for j, y in enumerate(ys):
            if y is None:
                s = cfg.sparsity
                y = s / M
            else:
                s = max(1, int(round(y * M)))
            cell = i * len(ys) + j
            infeasible = s > M or M > K or (cfg.precondition and M < 4)
            cells.append({"cell": cell, "M_over_K": x, "s_over_M": y, "M": M, "s": s, "infeasible": infeasible})
            if not infeasible:
                tasks.extend((cell, M, s, t) for t in range(cfg.trials))

    records = Parallel(n_jobs=cfg.n_jobs)(delayed(_phase_task)(cfg, basis, *task) for task in tasks)
    records.sort(key=lambda r: (r["cell"], r["trial"]))
    for c in cells:
        hits = [r["success"] for r in records if r["cell"] == c["cell"]]
        c["success_prob"] = float(np.mean(hits)) if hits else 0.0
    method = f"{cfg.sampling}-{'precond' if cfg.precondition else 'plain'}"
    for r in records:
        r["method"] = method
    summary = [{"method": method, **quartiles([r["rel_error"] for r in records])}]
    contour = [] if cfg.sparsity is not None else extract_contour(cells, xs, ys)
    return ExperimentResult(records, cells, contour, summary, dataclasses.asdict(cfg))


def run_target_study(
    target: TargetFunction | str,
    sample_sizes,
    trials: int = 25,
    samplings=("standard",),
    preconditions=(False, True),
    noise_sigma: float = 0.0,
    epsilon="cv",
    seed: int = 0,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_jobs: int = 1,
    design_config: DesignConfig | None = None,
) -> ExperimentResult:
    """Compare recovery methods on one target across sample sizes.

    All methods within a trial share the same seed, so for a given sampling
    scheme the plain and preconditioned fits see identical samples and
    identical noise.
    """
    if isinstance(target, str):
        target = make_target(target)
    jobs = []
    for M in sample_sizes:
        for t in range(trials):
            for sampling in samplings:
                for pre in preconditions:
                    jobs.append((int(M), t, sampling, bool(pre)))

    def run(M, t, sampling, pre):
        rec = fit_pipeline(
            target,
            M,
            trial_seed(seed, 2, M, t),
            sampling=sampling,
            precondition=pre,
            epsilon=epsilon,
            noise_sigma=noise_sigma,
            lambda_grid=lambda_grid,
            design_config=design_config,
        )
        rec.update({"M": M, "trial": t, "method": f"{sampling}-{'precond' if pre else 'plain'}", "sigma": noise_sigma})
        return rec

    records = Parallel(n_jobs=n_jobs)(delayed(run)(*j) for j in jobs)
    summary = []
    for M in sample_sizes:
        for sampling in samplings:
            for pre in preconditions:
                method = f"{sampling}-{'precond' if pre else 'plain'}"
                group = [r for r in records if r["M"] == M and r["method"] == method]
                metric = "rel_error" if target.exact_coefficients is not None else "val_error"
                summary.append(
                    {
                        "method": method,
                        "M": int(M),
                        "metric": metric,
                        **quartiles([r[metric] for r in group]),
                        "val_error_median": quartiles([r["val_error"] for r in group])["median"],
                        "mutual_coherence_median": quartiles([r["mutual_coherence"] for r in group])["median"],
                    }
                )
    config = {
        "target": target.tag,
        "target_params": target.params,
        "sample_sizes": [int(m) for m in sample_sizes],
        "trials": trials,
        "samplings": list(samplings),
        "preconditions": list(preconditions),
        "noise_sigma": noise_sigma,
        "epsilon": epsilon,
        "seed": seed,
        "lambda_grid": list(lambda_grid),
    }
    return ExperimentResult(records, [], [], summary, config)


def run_noisy_study(
    sigma: float,
    sample_sizes=(120,),
    trials: int = 25,
    seed: int = 0,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_jobs: int = 1,
) -> ExperimentResult:
    """Rosenbrock with additive ``N(0, sigma^2)`` measurement noise, plain vs
    preconditioned standard sampling."""
    if sigma < 0:
        raise ValueError("sigma is a standard deviation and must be >= 0")
    return run_target_study(
        "rosenbrock",
        sample_sizes,
        trials=trials,
        noise_sigma=sigma,
        seed=seed,
        lambda_grid=lambda_grid,
        n_jobs=n_jobs,
    )
