"""Command-line harness.

Subcommands write CSV/JSON artifacts into ``--out``:

* ``phase-diagram``   -- ``cells.csv``, ``contour.csv``, ``errors.csv``, ``meta.json``
* ``recover``         -- ``errors.csv``, ``summary.csv``, ``meta.json`` (built-in target), or
                         ``coefficients.csv`` + ``meta.json`` (``--data`` file)
* ``mass-spring``     -- mass-spring study, same files as ``recover``
* ``rosenbrock-noise``-- noisy Rosenbrock study, same files as ``recover``
* ``design-precond``  -- ``P.csv``, ``design.json``, ``meta.json``
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSet
from .bench.experiments import ExperimentResult, PhaseDiagramConfig, run_phase_diagram, run_target_study
from .bench.targets import make_target
from .estimators import SparsePCERegressor
from .l1solve import BpdnConfig
from .measure import assemble, column_normalize, mutual_coherence
from .precond import DEFAULT_LAMBDA_GRID, DesignConfig, design_preconditioner
from .sampling import ChainConfig, draw_samples

logger = logging.getLogger("sparsepce")

TRIAL_FIELDS = ["method", "M", "s", "sigma", "trial", "rel_error", "val_error", "mutual_coherence", "lambda", "epsilon", "converged"]


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return v


def _write_rows(path: Path, rows: list, fields: list) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in fields})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_meta(out: Path, args, extra: dict) -> None:
    meta = {
        "software": "sparsepce",
        "version": __version__,
        "command": args.command,
        "arguments": {k: v for k, v in vars(args).items() if k not in ("func", "out")},
        "solver": dataclasses.asdict(BpdnConfig()),
        "design": dataclasses.asdict(DesignConfig()),
        "epsilon_grid": "{0} U {10^p ||y||, p=-4..-1}, 3:1 holdout",
    }
    meta.update(extra)
    (out / "meta.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def _write_study(out: Path, args, result: ExperimentResult, fmt: str) -> None:
    if fmt == "json":
        (out / "errors.json").write_text(json.dumps(_jsonable(result.trials), indent=1) + "\n")
    _write_rows(out / "errors.csv", result.trials, TRIAL_FIELDS)
    sfields = ["method", "M", "metric", "q1", "median", "q3", "val_error_median", "mutual_coherence_median"]
    _write_rows(out / "summary.csv", result.summary, sfields)
    per_trial = [{k: r.get(k) for k in ("method", "M", "trial", "lambda", "epsilon")} for r in result.trials]
    _write_meta(out, args, {"config": result.config, "chosen": per_trial, "summary": result.summary})


def _lambda_grid(text: str | None):
    if not text:
        return DEFAULT_LAMBDA_GRID
    return tuple(float(v) for v in text.split(","))


def _parse_on_off(v: str) -> bool:
    return v == "on"


def cmd_phase_diagram(args) -> int:
    if args.full_scale:
        warnings.warn("full-scale settings (50x50 grid, 100 trials) selected; expect a very long run")
        args.grid_res, args.trials = 50, 100
    cfg = PhaseDiagramConfig(
        d=args.dim,
        k=args.order,
        family=args.family,
        resolution=args.grid_res,
        trials=args.trials,
        sampling=args.sampling,
        precondition=_parse_on_off(args.precondition),
        seed=args.seed,
        sparsity=args.sparsity,
        lambda_grid=_lambda_grid(args.lambda_grid),
        n_jobs=args.jobs,
    )
    res = run_phase_diagram(cfg)
    out = args.out
    _write_rows(out / "cells.csv", res.cells, ["M_over_K", "s_over_M", "success_prob", "M", "s", "infeasible"])
    _write_rows(out / "contour.csv", res.contour, ["M_over_K", "s_over_M"])
    _write_rows(out / "errors.csv", res.trials, ["method", "cell", "M", "s", "trial", "rel_error", "success", "mutual_coherence", "lambda", "epsilon", "converged"])
    if args.format == "json":
        (out / "cells.json").write_text(json.dumps(_jsonable(res.cells), indent=1) + "\n")
    per_trial = [{k: r.get(k) for k in ("cell", "trial", "lambda", "epsilon")} for r in res.trials]
    _write_meta(out, args, {"config": res.config, "chosen": per_trial})
    return 0


def _methods(args):
    pre = {"on": (True,), "off": (False,), "both": (False, True)}[args.precondition]
    return (args.sampling,), pre


def cmd_recover(args) -> int:
    if args.data is not None:
        return _recover_from_data(args)
    samplings, pre = _methods(args)
    target = make_target(args.target)
    if args.samples is None:
        raise SystemExit("--samples is required with a built-in target")
    res = run_target_study(
        target,
        args.samples,
        trials=args.trials,
        samplings=samplings,
        preconditions=pre,
        noise_sigma=args.sigma,
        seed=args.seed,
        lambda_grid=_lambda_grid(args.lambda_grid),
        n_jobs=args.jobs,
    )
    _write_study(args.out, args, res, args.format)
    return 0


def _recover_from_data(args) -> int:
    data = np.loadtxt(args.data, delimiter=",", skiprows=1, ndmin=2)
    X, y = data[:, :-1], data[:, -1]
    model = SparsePCERegressor(
        family=args.family,
        order=args.order,
        precondition=_parse_on_off(args.precondition) if args.precondition != "both" else True,
        lambda_grid=_lambda_grid(args.lambda_grid),
        random_state=args.seed,
    ).fit(X, y)
    rows = [{"index": "_".join(map(str, a)), "coefficient": float(c)} for a, c in zip(model.basis_.indices, model.coef_)]
    _write_rows(args.out / "coefficients.csv", rows, ["index", "coefficient"])
    _write_meta(args.out, args, {"lambda": model.lambda_, "epsilon": model.epsilon_, "K": model.basis_.K, "M": len(y)})
    return 0


def cmd_mass_spring(args) -> int:
    args.target = "mass-spring"
    samplings, pre = _methods(args)
    target = make_target("mass-spring", f_amp=args.f_amp, order=args.order)
    res = run_target_study(
        target,
        args.samples,
        trials=args.trials,
        samplings=samplings,
        preconditions=pre,
        seed=args.seed,
        lambda_grid=_lambda_grid(args.lambda_grid),
        n_jobs=args.jobs,
    )
    _write_study(args.out, args, res, args.format)
    return 0


def cmd_rosenbrock_noise(args) -> int:
    samplings, pre = _methods(args)
    res = run_target_study(
        "rosenbrock",
        args.samples,
        trials=args.trials,
        samplings=samplings,
        preconditions=pre,
        noise_sigma=args.sigma,
        seed=args.seed,
        lambda_grid=_lambda_grid(args.lambda_grid),
        n_jobs=args.jobs,
    )
    _write_study(args.out, args, res, args.format)
    return 0


def cmd_design_precond(args) -> int:
    basis = BasisSet.total_degree(args.family, args.dim, args.order)
    samples = draw_samples(basis, args.samples[0], args.sampling, args.seed, ChainConfig())
    A = column_normalize(assemble(basis, samples))
    Psi = samples.weights[:, None] * A.entries
    design = design_preconditioner(Psi, args.lam, DesignConfig(), seed=args.seed)
    design.to_csv(args.out / "P.csv")
    design.to_json(args.out / "design.json")
    samples.to_csv(args.out / "samples.csv")
    stats = {
        "K": basis.K,
        "M": samples.M,
        "mutual_coherence_before": mutual_coherence(Psi),
        "mutual_coherence_after": mutual_coherence(design.P @ Psi),
        "outer_iterations": design.outer_iterations,
        "converged": design.converged,
    }
    _write_meta(args.out, args, stats)
    print(json.dumps(_jsonable(stats), indent=2))
    return 0


def _common(p: argparse.ArgumentParser, samples_required=False, precondition_default="on"):
    p.add_argument("--family", choices=["legendre", "hermite"], default="legendre")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--samples", type=lambda s: [int(v) for v in s.split(",")], default=None, required=samples_required,
                   help="sample size(s), comma separated")
    p.add_argument("--sparsity", type=int, default=None,
                   help="phase-diagram: fix s and sweep only M/K")
    p.add_argument("--sampling", choices=["standard", "coherence-optimal"], default="standard")
    p.add_argument("--precondition", choices=["on", "off", "both"], default=precondition_default)
    p.add_argument("--lambda-grid", default=None, help="comma-separated penalty weights")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--grid-res", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsepce", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-diagram", help="success-probability map over (M/K, s/M)")
    _common(p, precondition_default="off")
    p.add_argument("--full-scale", action="store_true", help="50x50 grid with 100 trials per cell")
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("recover", help="recovery study on a built-in target or a data file")
    _common(p, precondition_default="both")
    p.add_argument("--target", default="high-dim-low-order",
                   choices=["high-dim-low-order", "low-dim-high-order", "rosenbrock", "mass-spring"])
    p.add_argument("--data", type=Path, default=None, help="CSV with columns xi_1..xi_d,y (header row)")
    p.add_argument("--sigma", type=float, default=0.0, help="noise standard deviation")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("mass-spring", help="mass-spring response surrogate study")
    _common(p, samples_required=True, precondition_default="both")
    p.set_defaults(order=10)
    p.add_argument("--f-amp", type=float, default=1.0, help="forcing amplitude")
    p.set_defaults(func=cmd_mass_spring)

    p = sub.add_parser("rosenbrock-noise", help="noisy Rosenbrock study")
    _common(p, samples_required=True, precondition_default="both")
    p.add_argument("--sigma", type=float, default=1e-3, help="noise standard deviation")
    p.set_defaults(func=cmd_rosenbrock_noise)

    p = sub.add_parser("design-precond", help="design one preconditioner and report coherence")
    _common(p, samples_required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    p.set_defaults(func=cmd_design_precond)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.error("%s: %s", type(exc).__name__, exc)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
