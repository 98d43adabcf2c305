"""Translation-speed study over a decreasing grid of core sizes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import StudySpec
from .diagnostics import DiagnosticsSpec
from .dynamics import IntegratorSpec, run
from .errors import VortexRingError
from .field import RingSpec, make_system
from .kernels import FOUR_PI, Regularization

STUDY_HEADER = ("eps", "log_eps", "v_hat", "v_err", "max_dB2", "sup_I_log2", "status")


def velocity_estimate(times, z, keep=0.8):
    """Least-squares slope of ``z(t)`` over the middle ``keep`` fraction of the window."""
    t = np.asarray(times, dtype=float)
    z = np.asarray(z, dtype=float)
    if len(t) < 2:
        return float("nan")
    t0, t1 = t[0], t[-1]
    margin = 0.5 * (1.0 - keep) * (t1 - t0)
    sel = (t >= t0 + margin - 1e-12 * abs(t1)) & (t <= t1 - margin + 1e-12 * abs(t1))
    if sel.sum() < 2:
        sel = np.ones_like(t, dtype=bool)
    return float(np.polyfit(t[sel], z[sel], 1)[0])


@dataclass
class StudyRow:
    eps: float
    log_eps: float
    v_hat: float = float("nan")
    v_err: float = float("nan")
    max_dB2: float = float("nan")
    sup_I_log2: float = float("nan")
    status: str = "ok"

    def as_tuple(self):
        return (self.eps, self.log_eps, self.v_hat, self.v_err, self.max_dB2, self.sup_I_log2, self.status)


@dataclass
class StudyResult:
    target: float
    rows: list = field(default_factory=list)
    intercept: float = float("nan")
    slope: float = float("nan")

    @property
    def ok_rows(self):
        return [r for r in self.rows if r.status == "ok"]


def fit_intercept(rows):
    """Linear fit of v_hat against 1 / |log eps|; returns (intercept, slope)."""
    ok = [r for r in rows if r.status == "ok" and math.isfinite(r.v_hat)]
    if len(ok) < 2:
        return float("nan"), float("nan")
    x = np.array([1.0 / r.log_eps for r in ok])
    y = np.array([r.v_hat for r in ok])
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept), float(slope)


def run_study(
    ring: RingSpec,
    study: StudySpec,
    integrator: IntegratorSpec,
    *,
    delta: float | None = None,
    log_eps_scaling: bool = True,
    diag: DiagnosticsSpec | None = None,
    workers: int = 1,
    on_row=None,
) -> StudyResult:
    """One single-ring run per epsilon; a failed run is recorded, not raised."""
    diag = diag or DiagnosticsSpec(energy=False)
    r_star = ring.center[1]
    target = ring.intensity / (FOUR_PI * r_star)
    result = StudyResult(target=target)
    for k, eps in enumerate(study.epsilons):
        row = StudyRow(eps=eps, log_eps=abs(math.log(eps)))
        try:
            spec = replace(ring, epsilon=eps)
            reg = Regularization(delta) if delta is not None else None
            state = make_system([spec], reg=reg, log_eps_scaling=log_eps_scaling)
            it = replace(integrator, dt=study.dt_for(k, integrator.dt))
            traj = run(state, it, diag=diag, workers=workers)
            recs = traj.ring_series(0)
            t = traj.times
            B = np.array([rec.B for rec in recs])
            row.v_hat = velocity_estimate(t, B[:, 0])
            row.v_err = abs(row.v_hat - target)
            row.max_dB2 = float(np.max(np.abs(B[:, 1] - r_star)))
            row.sup_I_log2 = max(rec.I for rec in recs) * row.log_eps**2
        except VortexRingError as err:
            row.status = f"failed:{err.category}"
        result.rows.append(row)
        if on_row is not None:
            on_row(row)
    result.intercept, result.slope = fit_intercept(result.rows)
    return result
