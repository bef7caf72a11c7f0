#!/usr/bin/env python3
# fglab_instrument.py
# Command-line entry point: one subcommand per experiment, one envelope per report.
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import boundary_tensor as bt
from .acceptance import run_suite
from .constraint_lab import (
    ConstraintPair,
    canonical_torus_example,
    check_membership,
    killing_extension_criterion,
    obstruction_projection,
    randomized_identity_batch,
    stokes_check,
    summarize,
    verify_killing_pairing_identity,
)
from .diagnostics import unique_continuation_experiment
from .errors import FGLabError
from .exact_solutions import (
    extract_coefficient,
    schwarzschild_beta_max,
    schwarzschild_fg_curve,
    schwarzschild_g_n,
    schwarzschild_t_plus,
    schwarzschild_v,
)
from .fg_series import expand, residual_slope
from .radial_evolution import constraint_residuals, curve_table, einstein_residual, evolve
from .reporting import envelope, write_csv, write_json
from .run_config import (
    RunConfig,
    build_g_n,
    build_gamma,
    build_model,
    load_config,
    resolve_output_dir,
    schwarzschild_params,
)

__instrument_id__ = "fglab"

log = logging.getLogger("fglab")

COMMANDS = ("fg-expand", "evolve", "constraints", "schwarzschild", "torus-example", "decay", "verify")


def _config_doc(cfg: RunConfig) -> Dict[str, Any]:
    # the output directory is a destination, not an input
    doc = cfg.to_dict()
    doc.pop("output_dir", None)
    return doc


def _report(cfg: RunConfig, outdir: Path, name: str, result: Dict[str, Any]) -> Path:
    tolerances = _config_doc(cfg)["tolerances"]
    return write_json(outdir / name, envelope(cfg.command, _config_doc(cfg), result, tolerances))


def _series_for(cfg: RunConfig):
    model = build_model(cfg)
    gamma = build_gamma(cfg, model)
    g_n = build_g_n(cfg, model, gamma)
    return expand(gamma, g_n, cfg.order, allow_log=cfg.allow_log, tt_tol=cfg.tolerances.tt)


def _t_grid(cfg: RunConfig, t1: Optional[float] = None) -> np.ndarray:
    return np.geomspace(cfg.t0, cfg.t1 if t1 is None else t1, cfg.samples)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fg_expand(cfg: RunConfig, outdir: Path) -> int:
    series = _series_for(cfg)
    write_json(outdir / "series.json", series.to_json())
    slope, residuals = residual_slope(series, np.geomspace(0.05, 0.5, 8) * series.t_max)
    result = {
        "n": series.n,
        "K": series.order,
        "model": series.model.descriptor(),
        "coefficient_max_abs": [c.max_abs() for c in series.coeffs],
        "residual_slope": None if not math.isfinite(slope) else slope,
        "residuals": residuals.tolist(),
        "logObstruction": None if series.log_obstruction is None else series.log_obstruction.magnitude,
        "trace_defect": series.trace_defect,
    }
    _report(cfg, outdir, "report.json", result)
    log.info("fg-expand: n=%d K=%d slope=%s", series.n, series.order, result["residual_slope"])
    return 0


def cmd_evolve(cfg: RunConfig, outdir: Path) -> int:
    series = _series_for(cfg)
    curve = evolve(series, cfg.t0, cfg.t1, cfg.tolerances.ode, t_eval=_t_grid(cfg))
    report = constraint_residuals(curve)
    header, table = curve_table(curve, report)
    write_csv(outdir / "curve.csv", header, table)
    result = {
        "samples": len(curve),
        "breakdown_t": curve.breakdown_t,
        "constraints": {k: report.max(k) for k in sorted(report.residuals)},
        "einstein_residual_max": float(np.max(einstein_residual(curve))),
    }
    _report(cfg, outdir, "report.json", result)
    log.info("evolve: %d samples, breakdown_t=%s", len(curve), curve.breakdown_t)
    return 0


def cmd_constraints(cfg: RunConfig, outdir: Path) -> int:
    model = build_model(cfg)
    gamma = build_gamma(cfg, model)
    g_n = build_g_n(cfg, model, gamma)
    report = check_membership(ConstraintPair(gamma, g_n), tol=cfg.tolerances.tt)
    _report(cfg, outdir, "report.json", report.to_json())
    return 0


def cmd_schwarzschild(cfg: RunConfig, outdir: Path) -> int:
    params = schwarzschild_params(cfg)
    n = params.n
    t_plus = schwarzschild_t_plus(params)
    t1 = min(cfg.t1, 0.9 * t_plus)
    curve = schwarzschild_fg_curve(params, _t_grid(cfg, t1))
    report = constraint_residuals(curve)
    header, table = curve_table(curve, report)
    write_csv(outdir / "curve.csv", header, table)

    gamma = bt.metric_of(params.model)
    lower = expand(gamma, bt.SymTensorField.zeros(params.model), n - 1)
    extracted = extract_coefficient(curve, lower, n, window=cfg.fit_window, rtol=cfg.tolerances.fit)
    closed = schwarzschild_g_n(params) if n % 2 else None

    result: Dict[str, Any] = {
        **params.to_json(),
        "V_at_rPlus": float(schwarzschild_v(n, params.m, params.r_plus)),
        "t_plus": t_plus,
        "beta_max": schwarzschild_beta_max(n).to_json(),
        "g_n_extracted": extracted.values.tolist(),
        "g_n_closed_form": None if closed is None else closed.values.tolist(),
        "g_n_error": None if closed is None else float(np.max(np.abs(extracted.values - closed.values))),
        "constraints": {k: report.max(k) for k in sorted(report.residuals)},
    }
    _report(cfg, outdir, "report.json", result)
    log.info("schwarzschild: rPlus=%.15g beta=%.15g", params.r_plus, params.beta)
    return 0


def cmd_torus_example(cfg: RunConfig, outdir: Path) -> int:
    resolution = int(cfg.model.get("resolution", 32))
    ex = canonical_torus_example(cfg.n, resolution, cfg.data.get("profile", "sin"))
    tol = cfg.tolerances
    identity = verify_killing_pairing_identity(
        ex.gamma, ex.X, ex.tau, ex.h, killing_tol=tol.killing, identity_tol=tol.identity
    )
    model = ex.gamma.model
    criteria = {
        f"d{axis + 1}": killing_extension_criterion(ex.gamma, bt.coordinate_vector(model, axis), ex.tau)
        for axis in range(model.n)
    }
    stokes = stokes_check(ex.gamma, ex.tau, ex.h, ex.X, [-1e-2, -1e-3, 0.0, 1e-3, 1e-2])
    result: Dict[str, Any] = {
        "identity": identity.to_json(),
        "obstruction": obstruction_projection(ex.gamma, ex.tau, ex.h).tolist(),
        "killing_extension": criteria,
        "stokes_max": float(np.max(np.abs(stokes))),
    }
    if cfg.random_count > 0:
        batch = randomized_identity_batch(cfg.n, resolution, cfg.random_count, cfg.seed, identity_tol=tol.identity)
        result["random"] = summarize(batch)
    _report(cfg, outdir, "report.json", result)
    log.info("torus-example: lhs=%.12g rhs=%.12g residual=%.3e", identity.lhs, identity.rhs, identity.residual)
    return 0


def cmd_decay(cfg: RunConfig, outdir: Path) -> int:
    model = build_model(cfg)
    gamma = build_gamma(cfg, model)
    g_n_a = build_g_n(cfg, model, gamma)
    spec_b = cfg.data.get("g_n_b")
    g_n_b = g_n_a if spec_b is None else build_g_n(cfg, model, gamma, dict(spec_b))
    report = unique_continuation_experiment(
        gamma,
        g_n_a,
        g_n_b,
        order=cfg.order,
        t0=cfg.t0,
        t1=cfg.t1,
        tol=cfg.tolerances.ode,
        window=cfg.decay_window,
        trace_window=cfg.trace_window,
        samples=cfg.samples,
    )
    diff = report.difference
    write_csv(
        outdir / "curve.csv",
        ["t", "trace_norm", "trace_free_norm"],
        np.column_stack([diff.t, diff.trace_norm, diff.trace_free_norm]),
    )
    _report(cfg, outdir, "report.json", report.to_json())
    return 0


def cmd_verify(cfg: RunConfig, outdir: Path) -> int:
    resolution = int(cfg.model.get("resolution", 32))
    results = run_suite(seed=cfg.seed, resolution=resolution, random_count=cfg.random_count or 50)
    passed = all(r.passed for r in results)
    _report(cfg, outdir, "verify.json", {"passed": passed, "checks": [r.to_json() for r in results]})
    return 0 if passed else 1


HANDLERS: Dict[str, Callable[[RunConfig, Path], int]] = {
    "fg-expand": cmd_fg_expand,
    "evolve": cmd_evolve,
    "constraints": cmd_constraints,
    "schwarzschild": cmd_schwarzschild,
    "torus-example": cmd_torus_example,
    "decay": cmd_decay,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def parse_args(argv: List[str]) -> argparse.Namespace:
    p = argparse.ArgumentParser(
        prog="fglab_instrument",
        description="Fefferman-Graham expansion and radial Einstein evolution lab.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="TOML profile")
        sp.add_argument("--outdir", default=None, help="Output directory (overrides profile and FGLAB_OUTPUT_DIR)")
        sp.add_argument("--n", type=int, default=None, help="Boundary dimension")
        sp.add_argument("--m", type=float, default=None, help="Schwarzschild mass")
        sp.add_argument("--order", type=int, default=None, help="Series truncation order K")
        sp.add_argument("--tol", type=float, default=None, help="ODE tolerance")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed for randomized batches")
        sp.add_argument("--profile", default=None, help="Profile function name (sin, cos, one, sin2, bump)")
        sp.add_argument("--resolution", type=int, default=None, help="Torus grid points per axis")
        sp.add_argument("--random-count", type=int, default=None, help="Randomized identity batch size")
        sp.add_argument("--allow-log", action="store_true", default=None, help="Record even-n log obstruction instead of failing")
        sp.add_argument("--t0", type=float, default=None)
        sp.add_argument("--t1", type=float, default=None)
        sp.add_argument("--log-level", default="WARNING", help="DEBUG, INFO, WARNING, ERROR")
    return p.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config, args.cmd)
    return cfg.with_overrides(
        model_n=args.n,
        m=args.m,
        order=args.order,
        ode_tol=args.tol,
        seed=args.seed,
        profile=args.profile,
        resolution=args.resolution,
        random_count=args.random_count,
        allow_log=args.allow_log,
        t0=args.t0,
        t1=args.t1,
    )


def _emit_error(doc: Dict[str, Any], outdir: Optional[Path]) -> None:
    from .reporting import dumps

    sys.stderr.write(dumps(doc) + "\n")
    if outdir is not None:
        try:
            write_json(outdir / "error.json", doc)
        except OSError:
            log.warning("could not write error.json to %s", outdir)


def main(argv: List[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    outdir: Optional[Path] = Path(args.outdir) if args.outdir else None
    try:
        cfg = build_config(args)
        outdir = resolve_output_dir(cfg, args.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.cmd](cfg, outdir)
    except FGLabError as exc:
        _emit_error(exc.to_json(), outdir)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure in %s", args.cmd)
        _emit_error({"error": "internal", "message": str(exc), "details": {}, "exit_code": 1}, outdir)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
