"""Command-line entry point: ``vortexring {simulate,study,kernel-probe,limit}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import export
from .config import ExperimentConfig, config_from_dict, manifest_text, preset
from .diagnostics import DiagnosticsSpec
from .dynamics import run
from .errors import ConfigError, KernelDomainError, VortexRingError
from .field import make_system
from .kernels import (
    QuadratureSpec,
    Regularization,
    kernel_H,
    kernel_K,
    kernel_L,
    velocity_kernel_H,
)
from .limits import LimitState, ode_integrate, rotation_period
from .study import STUDY_HEADER, run_study

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_INPUT_CATEGORIES = {"config-parse", "spec", "overlap", "axis-violation"}


class _Fail(Exception):
    def __init__(self, code, category, message):
        super().__init__(message)
        self.code, self.category = code, category


def _load(args, require_rings=True) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.preset:
        d = preset(args.preset)
    elif args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                d = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {args.config} is not valid JSON: {err}") from err
        # a manifest wraps the resolved config; accept it for re-runs
        if isinstance(d, dict) and "config" in d and "command" in d:
            d = d["config"]
    else:
        raise ConfigError("one of --config or --preset is required")
    return config_from_dict(d, require_rings=require_rings)


def _out_dir(args, cfg):
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out, cfg, command, delta=None):
    (out / "manifest.json").write_text(manifest_text(cfg, command, delta), encoding="utf-8")


def _threads(args):
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return args.threads


# --- subcommands -------------------------------------------------------------------------


def cmd_simulate(args):
    cfg = _load(args)
    workers = _threads(args)
    state = make_system(cfg.rings, reg=cfg.regularization, quad=cfg.quad,
                        kernel_mode=cfg.kernel_mode, log_eps_scaling=cfg.log_eps_scaling)
    out = _out_dir(args, cfg)
    _write_manifest(out, cfg, "simulate", state.reg.delta)
    export.write_particles(out / "particles_initial.csv", state)
    failure = None
    try:
        traj = run(state, cfg.integrator, cfg.mode, cutoff_R=cfg.cutoff_R,
                   diag=cfg.diagnostics, workers=workers)
    except VortexRingError as err:
        traj = getattr(err, "trajectory", None)
        if traj is None:
            raise
        failure = err
    for i in range(len(state.rings)):
        export.write_trajectory(out / f"trajectory_ring{i}.csv", traj.ring_series(i))
    if cfg.particle_snapshots:
        for k, snap in enumerate(traj):
            export.write_particles(out / f"particles_{k:05d}.csv", snap.state)
    export.write_particles(out / "particles_final.csv", traj[-1].state)
    if failure is not None:
        raise failure
    last = traj[-1]
    for i, rec in enumerate(last.records):
        print(f"ring {i}: t={export.fmt(rec.time)} B=({export.fmt(rec.B[0])}, {export.fmt(rec.B[1])})")
    return EXIT_OK


def cmd_study(args):
    cfg = _load(args)
    workers = _threads(args)
    if cfg.study is None:
        raise ConfigError("study needs a 'study' section with an epsilon grid")
    out = _out_dir(args, cfg)
    _write_manifest(out, cfg, "study", cfg.delta)
    print(",".join(STUDY_HEADER))

    def show(row):
        print(",".join(export.fmt(v) for v in row.as_tuple()), flush=True)

    diag = DiagnosticsSpec(cfg.diagnostics.radii, cfg.diagnostics.mollifiers, cfg.diagnostics.rho,
                           energy=cfg.diagnostics.energy)
    res = run_study(cfg.rings[0], cfg.study, cfg.integrator, delta=cfg.delta,
                    log_eps_scaling=cfg.log_eps_scaling, diag=diag, workers=workers, on_row=show)
    export.write_table(out / "study.csv", STUDY_HEADER, (r.as_tuple() for r in res.rows))
    summary = {
        "target_velocity": res.target,
        "intercept": res.intercept,
        "slope": res.slope,
        "intercept_rel_error": abs(res.intercept - res.target) / abs(res.target) if res.target else None,
        "failed_rows": [r.eps for r in res.rows if r.status != "ok"],
    }
    (out / "study_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"intercept,{export.fmt(res.intercept)}")
    print(f"target,{export.fmt(res.target)}")
    return EXIT_NUMERIC if summary["failed_rows"] else EXIT_OK


def probe_rows(x, y, quad, reg):
    """Rows (quantity, c1, c2) of the decomposition at one pair of points."""
    H = kernel_H(x, y, quad, reg)
    K = kernel_K(np.subtract(x, y), reg)
    L = kernel_L(x, y, reg)
    R = H - K - L
    # residual against the independent closed-form evaluation of H
    res = velocity_kernel_H(x, y, reg) - (K + L + R)
    return [("H", *H), ("K", *K), ("L", *L), ("R", *R), ("residual", *res)]


def cmd_kernel_probe(args):
    try:
        quad = QuadratureSpec(args.abs_tol, args.rel_tol, args.max_subdivisions)
        reg = Regularization(args.delta)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    try:
        rows = probe_rows(args.x, args.y, quad, reg)
    except KernelDomainError as err:
        raise _Fail(EXIT_CONFIG, err.category, str(err)) from err
    print("quantity,c1,c2")
    for name, a, b in rows:
        print(f"{name},{export.fmt(a)},{export.fmt(b)}")
    if args.out:
        export.write_table(Path(args.out) / "kernel_probe.csv", ("quantity", "c1", "c2"), rows)
    return EXIT_OK


def cmd_limit(args):
    cfg = _load(args, require_rings=False)
    if cfg.limit is None:
        raise ConfigError("limit needs a 'limit' section")
    lm = cfg.limit
    out = _out_dir(args, cfg)
    _write_manifest(out, cfg, "limit")
    s0 = LimitState(np.array(lm.positions), np.array(lm.intensities))
    failure = None
    try:
        traj = ode_integrate(s0, lm.integrator, lm.model)
    except VortexRingError as err:
        if getattr(err, "trajectory", None) is None:
            raise
        traj, failure = err.trajectory, err
    every = lm.integrator.snapshot_every
    kept = [p for k, p in enumerate(traj) if k % every == 0 or k == len(traj) - 1]
    export.write_limit(out / "limit.csv", kept)
    summary = {"model": lm.model, "steps": len(traj) - 1, "final_time": traj[-1][0]}
    if len(lm.intensities) == 2 and lm.model == "point-vortex":
        A = lm.intensities
        d = math.dist(*lm.positions)
        if A[0] + A[1] != 0:
            predicted = 4.0 * math.pi**2 * d * d / abs(A[0] + A[1])
            measured = rotation_period(traj)
            summary["period"] = {
                "measured": measured,
                "predicted": predicted,
                "rel_error": abs(measured - predicted) / predicted if math.isfinite(measured) else None,
            }
    (out / "limit_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if "period" in summary:
        p = summary["period"]
        print(f"period,{export.fmt(p['measured'])},predicted,{export.fmt(p['predicted'])}")
    if failure is not None:
        raise failure
    return EXIT_OK


# --- plumbing ----------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="vortexring", description="Vortex-ring particle simulations")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (or a manifest from an earlier run)")
        p.add_argument("--preset", help="named built-in configuration")
        p.add_argument("--out", help="output directory (defaults to the config's 'output')")
        p.add_argument("--threads", type=int, default=1, help="worker threads for velocity sums")

    common(sub.add_parser("simulate", help="integrate particle rings and write diagnostics"))
    common(sub.add_parser("study", help="translation-speed study over an epsilon grid"))
    common(sub.add_parser("limit", help="integrate a point-vortex limit model"))
    kp = sub.add_parser("kernel-probe", help="print H, K, L, R at one pair of points")
    kp.add_argument("--x", type=float, nargs=2, required=True, metavar=("Z", "R"))
    kp.add_argument("--y", type=float, nargs=2, required=True, metavar=("Z", "R"))
    kp.add_argument("--delta", type=float, default=0.0)
    kp.add_argument("--abs-tol", type=float, default=1e-10)
    kp.add_argument("--rel-tol", type=float, default=1e-8)
    kp.add_argument("--max-subdivisions", type=int, default=200)
    kp.add_argument("--out")
    kp.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    return ap


_COMMANDS = {
    "simulate": cmd_simulate,
    "study": cmd_study,
    "kernel-probe": cmd_kernel_probe,
    "limit": cmd_limit,
}


def _report(category, message):
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _Fail as err:
        _report(err.category, str(err))
        return err.code
    except VortexRingError as err:
        _report(err.category, str(err))
        return EXIT_CONFIG if err.category in _INPUT_CATEGORIES else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
