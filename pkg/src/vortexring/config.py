"""Experiment configuration: JSON parsing, validation, presets and manifests."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

from .diagnostics import DiagnosticsSpec
from .dynamics import RUN_MODES, IntegratorSpec
from .errors import ConfigError, VortexRingError
from .field import KERNEL_MODES, RingSpec
from .kernels import QuadratureSpec, Regularization
from .limits import MODELS

_TOP_KEYS = {
    "rings", "log_eps_scaling", "integrator", "regularization", "quadrature", "kernel_mode",
    "mode", "cutoff_R", "diagnostics", "study", "limit", "particle_snapshots", "seed", "output",
}


@dataclass(frozen=True)
class StudySpec:
    """epsilon grid (strictly decreasing) and optional per-epsilon time steps."""

    epsilons: tuple = (0.1, 0.05, 0.02)
    dts: tuple | None = None

    def dt_for(self, k, default):
        return self.dts[k] if self.dts else default


@dataclass(frozen=True)
class LimitSpec:
    model: str = "point-vortex"
    positions: tuple = ()
    intensities: tuple = ()
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)


@dataclass(frozen=True)
class ExperimentConfig:
    rings: tuple = ()
    log_eps_scaling: bool = True
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    delta: float | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    kernel_mode: str = "exact-H"
    mode: str = "monolithic"
    cutoff_R: float | None = None
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    study: StudySpec | None = None
    limit: LimitSpec | None = None
    particle_snapshots: bool = False
    seed: int = 0
    output: str = "out"

    @property
    def regularization(self):
        return None if self.delta is None else Regularization(self.delta)


# --- parsing ------------------------------------------------------------------------


def _get(d, key, kind, default=None, where="config"):
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
        return v
    if kind is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"{where}.{key} must be true or false, got {v!r}")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"{where}.{key} must be a string, got {v!r}")
        return v
    if not isinstance(v, kind):
        raise ConfigError(f"{where}.{key} has the wrong type")
    return v


def _pair(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{where} must be a pair of numbers, got {v!r}")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{where} must be a pair of finite numbers, got {v!r}")
        out.append(float(x))
    return tuple(out)


def _integrator(d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    kw = dict(
        scheme=_get(d, "scheme", str, "rk4", where),
        dt=_get(d, "dt", float, 1e-3, where),
        t_end=_get(d, "t_end", float, 0.0, where),
        snapshot_every=_get(d, "snapshot_every", int, 1, where),
    )
    try:
        return IntegratorSpec(**kw)
    except VortexRingError as err:
        raise ConfigError(f"{where}: {err}") from err


def _ring(d, k):
    where = f"rings[{k}]"
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    if "center" not in d or "epsilon" not in d or "intensity" not in d:
        raise ConfigError(f"{where} needs center, epsilon and intensity")
    try:
        return RingSpec(
            center=_pair(d["center"], f"{where}.center"),
            epsilon=_get(d, "epsilon", float, where=where),
            intensity=_get(d, "intensity", float, where=where),
            profile=_get(d, "profile", str, "uniform", where),
            particle_count=_get(d, "particle_count", int, 400, where),
        )
    except ConfigError:
        raise
    except VortexRingError as err:
        raise ConfigError(f"{where}: {err}") from err


def config_from_dict(d: dict, require_rings: bool = True) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    rings = d.get("rings", [])
    if not isinstance(rings, list):
        raise ConfigError("rings must be a list")
    rings = tuple(_ring(r, k) for k, r in enumerate(rings))
    if require_rings and not rings:
        raise ConfigError("rings must not be empty")

    reg = d.get("regularization") or {}
    delta = _get(reg, "delta", float, None, "regularization")
    if delta is not None and delta < 0:
        raise ConfigError("regularization.delta must be >= 0")

    q = d.get("quadrature") or {}
    try:
        quad = QuadratureSpec(
            abs_tol=_get(q, "abs_tol", float, 1e-10, "quadrature"),
            rel_tol=_get(q, "rel_tol", float, 1e-8, "quadrature"),
            max_subdivisions=_get(q, "max_subdivisions", int, 200, "quadrature"),
        )
    except ValueError as err:
        raise ConfigError(f"quadrature: {err}") from err

    kernel_mode = _get(d, "kernel_mode", str, "exact-H")
    if kernel_mode not in KERNEL_MODES:
        raise ConfigError(f"kernel_mode must be one of {KERNEL_MODES}")
    mode = _get(d, "mode", str, "monolithic")
    if mode not in RUN_MODES:
        raise ConfigError(f"mode must be one of {RUN_MODES}")
    cutoff_R = _get(d, "cutoff_R", float, None)
    if mode == "reduced-per-ring" and not (cutoff_R and cutoff_R > 0):
        raise ConfigError("reduced-per-ring mode needs a positive cutoff_R")

    dg = d.get("diagnostics") or {}
    radii = tuple(float(r) for r in dg.get("radii", (0.05,)))
    molls = tuple(_pair(m, "diagnostics.mollifiers[]") for m in dg.get("mollifiers", ((0.05, 0.02),)))
    for R, h in molls:
        if not (h > 0 and R >= 2 * h):
            raise ConfigError(f"mollifier (R={R}, h={h}) needs R >= 2h > 0")
    if not radii or not molls:
        raise ConfigError("diagnostics needs at least one radius and one mollifier")
    diag = DiagnosticsSpec(
        radii=radii,
        mollifiers=molls,
        rho=_get(dg, "rho", float, None, "diagnostics"),
        energy=_get(dg, "energy", bool, True, "diagnostics"),
    )

    study = None
    if d.get("study") is not None:
        s = d["study"]
        eps = tuple(float(e) for e in s.get("epsilons", ()))
        if len(eps) < 3:
            raise ConfigError("study.epsilons needs at least three values")
        if any(e <= 0 or e >= 1 for e in eps):
            raise ConfigError("study.epsilons must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("study.epsilons must be strictly decreasing")
        dts = s.get("dts")
        if dts is not None:
            dts = tuple(float(x) for x in dts)
            if len(dts) != len(eps) or any(x <= 0 for x in dts):
                raise ConfigError("study.dts must give one positive dt per epsilon")
        study = StudySpec(epsilons=eps, dts=dts)

    limit = None
    if d.get("limit") is not None:
        lm = d["limit"]
        model = _get(lm, "model", str, "point-vortex", "limit")
        if model not in MODELS:
            raise ConfigError(f"limit.model must be one of {MODELS}")
        pos = tuple(_pair(p, "limit.positions[]") for p in lm.get("positions", ()))
        A = tuple(float(a) for a in lm.get("intensities", ()))
        if not pos or len(pos) != len(A):
            raise ConfigError("limit needs matching, non-empty positions and intensities")
        limit = LimitSpec(model, pos, A, _integrator(lm.get("integrator", {}), "limit.integrator"))

    return ExperimentConfig(
        rings=rings,
        log_eps_scaling=_get(d, "log_eps_scaling", bool, True),
        integrator=_integrator(d.get("integrator", {}), "integrator"),
        delta=delta,
        quad=quad,
        kernel_mode=kernel_mode,
        mode=mode,
        cutoff_R=cutoff_R,
        diagnostics=diag,
        study=study,
        limit=limit,
        particle_snapshots=_get(d, "particle_snapshots", bool, False),
        seed=_get(d, "seed", int, 0),
        output=_get(d, "output", str, "out"),
    )


def load_config(path, require_rings=True) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    return config_from_dict(d, require_rings)


def config_to_dict(cfg: ExperimentConfig, delta=None) -> dict:
    """Fully resolved, JSON-ready form (``delta`` fills in a defaulted blob size)."""
    it = cfg.integrator
    d = {
        "rings": [
            {
                "center": list(r.center),
                "epsilon": r.epsilon,
                "intensity": r.intensity,
                "profile": r.profile,
                "particle_count": r.particle_count,
            }
            for r in cfg.rings
        ],
        "log_eps_scaling": cfg.log_eps_scaling,
        "integrator": _integrator_dict(it),
        "regularization": {"delta": cfg.delta if cfg.delta is not None else delta},
        "quadrature": {
            "abs_tol": cfg.quad.abs_tol,
            "rel_tol": cfg.quad.rel_tol,
            "max_subdivisions": cfg.quad.max_subdivisions,
        },
        "kernel_mode": cfg.kernel_mode,
        "mode": cfg.mode,
        "cutoff_R": cfg.cutoff_R,
        "diagnostics": {
            "radii": list(cfg.diagnostics.radii),
            "mollifiers": [list(m) for m in cfg.diagnostics.mollifiers],
            "rho": cfg.diagnostics.rho,
            "energy": cfg.diagnostics.energy,
        },
        "study": None,
        "limit": None,
        "particle_snapshots": cfg.particle_snapshots,
        "seed": cfg.seed,
        "output": cfg.output,
    }
    if cfg.study is not None:
        d["study"] = {
            "epsilons": list(cfg.study.epsilons),
            "dts": list(cfg.study.dts) if cfg.study.dts else None,
        }
    if cfg.limit is not None:
        d["limit"] = {
            "model": cfg.limit.model,
            "positions": [list(p) for p in cfg.limit.positions],
            "intensities": list(cfg.limit.intensities),
            "integrator": _integrator_dict(cfg.limit.integrator),
        }
    return d


def _integrator_dict(it):
    return {"scheme": it.scheme, "dt": it.dt, "t_end": it.t_end, "snapshot_every": it.snapshot_every}


def manifest_text(cfg: ExperimentConfig, command: str, delta=None) -> str:
    """Manifest: the resolved config plus the subcommand.

    The worker count is deliberately absent (it never changes results), and
    so are timestamps, so the manifest itself is reproducible.
    """
    from . import __version__

    body = {"command": command, "version": __version__, "config": config_to_dict(cfg, delta)}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


# --- presets --------------------------------------------------------------------------

_RING_01 = {"center": [0.0, 1.0], "epsilon": 0.1, "intensity": 1.0, "profile": "uniform", "particle_count": 400}

PRESETS = {
    "single-ring-eps0.1": {
        "rings": [_RING_01],
        "integrator": {"scheme": "rk4", "dt": 0.01, "t_end": 0.1, "snapshot_every": 1},
    },
    "two-rings": {
        "rings": [
            {**_RING_01, "center": [0.0, 1.0], "particle_count": 300},
            {**_RING_01, "center": [1.0, 1.0], "particle_count": 300},
        ],
        "mode": "reduced-per-ring",
        "cutoff_R": 0.5,
        "integrator": {"scheme": "rk4", "dt": 0.01, "t_end": 0.2, "snapshot_every": 2},
    },
    "convergence-study": {
        "rings": [{**_RING_01, "particle_count": 2000}],
        "integrator": {"scheme": "rk4", "dt": 0.01, "t_end": 0.5, "snapshot_every": 1},
        "study": {"epsilons": [0.1, 0.05, 0.02], "dts": [0.02, 0.01, 0.005]},
        "diagnostics": {"energy": False},
    },
    "two-vortex": {
        "rings": [],
        "limit": {
            "model": "point-vortex",
            "positions": [[-0.5, 0.0], [0.5, 0.0]],
            "intensities": [2 * math.pi, 2 * math.pi],
            "integrator": {"scheme": "rk4", "dt": 1e-3, "t_end": 3.5, "snapshot_every": 1},
        },
    },
    "large-ring-single": {
        "rings": [],
        "limit": {
            "model": "large-ring",
            "positions": [[0.0, 0.0]],
            "intensities": [1.0],
            "integrator": {"scheme": "rk4", "dt": 1e-2, "t_end": 1.0, "snapshot_every": 1},
        },
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
