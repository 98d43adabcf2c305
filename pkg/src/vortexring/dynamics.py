"""Time integration of particle trajectories.

Two drivers share the same stepping code:

* ``monolithic``: every particle moves in the velocity of all rings.
* ``reduced-per-ring``: each ring moves in its own velocity plus the
  mollified field of the other rings (``interaction_field``), which equals
  the true field wherever the rings are at least ``cutoff_R / 2`` apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import DiagnosticsSpec, smoothstep5, state_records
from .errors import AxisCrossingError, SpecError
from .field import TARGET_BLOCK, SystemState, self_velocity, sum_velocity
from .kernels import velocity_kernel

SCHEMES = ("rk4", "euler")
RUN_MODES = ("monolithic", "reduced-per-ring")


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 0.0
    snapshot_every: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise SpecError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise SpecError("dt must be positive")
        if not self.t_end >= 0:
            raise SpecError("t_end must be >= 0")
        if int(self.snapshot_every) < 1:
            raise SpecError("snapshot_every must be >= 1")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class ExternalField:
    """A velocity field ``eval(points (n, 2), t) -> (n, 2)``.

    ``C_F`` and ``L`` are declared bounds, if known.
    """

    eval: Callable
    C_F: float | None = None
    L: float | None = None

    def __call__(self, points, t=0.0):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.asarray(self.eval(points, t), dtype=float).reshape(-1, 2)

    @classmethod
    def constant(cls, c):
        c = np.asarray(c, dtype=float)
        return cls(lambda x, t: np.broadcast_to(c, x.shape).copy(), C_F=float(np.hypot(*c)), L=0.0)

    @classmethod
    def zero(cls):
        return cls.constant((0.0, 0.0))


# --- mollified inter-ring kernel ---------------------------------------------------


def _blended_block(tz, tr, sz, sr, w, delta2, cutoff_R):
    X1, X2 = tz[None, :], tr[None, :]
    Y1, Y2 = sz[:, None], sr[:, None]
    dz, dr = X1 - Y1, X2 - Y2
    d = np.hypot(dz, dr)
    near = d < 0.5 * cutoff_R
    with np.errstate(divide="ignore", invalid="ignore"):
        h1, h2 = velocity_kernel(X1, X2, Y1, Y2, delta2)
    if near.any():
        yz, yr = np.broadcast_to(Y1, d.shape)[near], np.broadcast_to(Y2, d.shape)[near]
        dn, ez, er = d[near], dz[near], dr[near]
        zero = dn == 0
        # direction x - y; the axis direction where x sits on the source
        ez = np.where(zero, 1.0, ez / np.where(zero, 1.0, dn))
        er = np.where(zero, 0.0, er / np.where(zero, 1.0, dn))
        quarter = 0.25 * cutoff_R
        f1, f2 = velocity_kernel(yz + quarter * ez, yr + quarter * er, yz, yr, delta2)
        s = smoothstep5((dn - quarter) / quarter)
        inner = s == 0
        b1 = np.where(inner, f1, s * h1[near] + (1.0 - s) * f1)
        b2 = np.where(inner, f2, s * h2[near] + (1.0 - s) * f2)
        h1 = h1.copy()
        h2 = h2.copy()
        h1[near] = b1
        h2[near] = b2
    wc = w[:, None]
    return np.column_stack([(h1 * wc).sum(axis=0), (h2 * wc).sum(axis=0)])


def blended_velocity(targets, src_pos, src_w, delta, cutoff_R):
    """Sum of a bounded kernel equal to H for pair distances >= cutoff_R / 2.

    Inside, H is blended (quintic smoothstep on [R/4, R/2]) into its value
    frozen at distance R/4 along the same direction.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    n = len(targets)
    out = np.zeros((n, 2))
    if n == 0 or len(src_w) == 0:
        return out
    sz, sr = src_pos[:, 0].copy(), src_pos[:, 1].copy()
    for i0 in range(0, n, TARGET_BLOCK):
        sl = slice(i0, min(i0 + TARGET_BLOCK, n))
        out[sl] = _blended_block(targets[sl, 0], targets[sl, 1], sz, sr, src_w, float(delta) ** 2, cutoff_R)
    return out


def interaction_field(state: SystemState, ring_index: int, cutoff_R: float) -> ExternalField:
    """Mollified velocity of every ring except ``ring_index`` (frozen at ``state``)."""
    if not cutoff_R > 0:
        raise SpecError("cutoff_R must be positive")
    others = [r for k, r in enumerate(state.rings) if k != ring_index]
    if not others:
        return ExternalField.zero()
    src = np.concatenate([r.pos for r in others])
    w = np.concatenate([r.weight for r in others])
    delta = state.reg.delta
    return ExternalField(lambda x, t: blended_velocity(x, src, w, delta, cutoff_R))


def verify_assumption_F(f: ExternalField, eps: float, sample_box, n_samples: int, t=0.0, seed=0):
    """Monte-Carlo estimates of sup|F| |log eps| and its Lipschitz quotient.

    ``sample_box`` is ``((z_min, z_max), (r_min, r_max))``.  A report, not a proof.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    (z0, z1), (r0, r1) = sample_box
    pts = np.column_stack([rng.uniform(z0, z1, n_samples), rng.uniform(r0, r1, n_samples)])
    F = f(pts, t)
    le = abs(math.log(eps))
    C = float(np.max(np.hypot(F[:, 0], F[:, 1]))) * le
    i, j = np.triu_indices(n_samples, 1)
    dx = np.hypot(*(pts[i] - pts[j]).T)
    dF = np.hypot(*(F[i] - F[j]).T)
    ok = dx > 0
    L = float(np.max(dF[ok] / dx[ok])) * le if ok.any() else 0.0
    return {"C_F_hat": C, "L_hat": L, "n_samples": n_samples}


# --- stepping -----------------------------------------------------------------------


def _own_velocity(state, pos, w, workers):
    if state.kernel_mode == "exact-H":
        return self_velocity(pos, w, state.reg.delta, workers)
    return sum_velocity(pos, pos, w, state.reg.delta, state.kernel_mode, workers)


def _velocity(state, pos, t, f_ext, mode, cutoff_R, workers):
    if mode == "monolithic":
        v = _own_velocity(state, pos, state.weights, workers)
    else:
        v = np.empty_like(pos)
        slices = state.ring_slices()
        w_all = state.weights
        for i, sl in enumerate(slices):
            v[sl] = _own_velocity(state, pos[sl], w_all[sl], workers)
            if len(slices) > 1:
                mask = np.ones(len(pos), dtype=bool)
                mask[sl] = False
                v[sl] += blended_velocity(pos[sl], pos[mask], w_all[mask], state.reg.delta, cutoff_R)
    if f_ext is not None:
        v = v + f_ext(pos, t)
    return v


def _check_axis(state, pos, stage):
    bad = np.nonzero(~(pos[:, 1] > 0))[0]
    if len(bad):
        j = int(bad[0])
        for ring, sl in enumerate(state.ring_slices()):
            if sl.start <= j < sl.stop:
                raise AxisCrossingError(
                    f"particle {j - sl.start} of ring {ring} reached r = {pos[j, 1]:.3g} "
                    f"at t = {state.time:.6g} ({stage})",
                    ring=ring,
                    index=j - sl.start,
                )


def _advance(state, dt, scheme, f_ext, mode, cutoff_R, workers, new_time):
    x0 = state.positions
    t0 = state.time

    def vel(x, t, stage):
        _check_axis(state, x, stage)
        return _velocity(state, x, t, f_ext, mode, cutoff_R, workers)

    if scheme == "euler":
        x1 = x0 + dt * vel(x0, t0, "stage 1")
    else:
        k1 = vel(x0, t0, "stage 1")
        k2 = vel(x0 + 0.5 * dt * k1, t0 + 0.5 * dt, "stage 2")
        k3 = vel(x0 + 0.5 * dt * k2, t0 + 0.5 * dt, "stage 3")
        k4 = vel(x0 + dt * k3, t0 + dt, "stage 4")
        x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_axis(state, x1, "result")
    return state.with_positions(x1, new_time)


def step(
    state: SystemState,
    spec: IntegratorSpec,
    f_ext: ExternalField | None = None,
    *,
    backward: bool = False,
    mode: str = "monolithic",
    cutoff_R: float | None = None,
    workers: int = 1,
) -> SystemState:
    """Advance every particle by one step of ``spec.scheme``.

    The pointwise vorticity is not integrated: ``ParticleField.omega`` is
    recomputed from the transported ratio omega / r.
    """
    if mode not in RUN_MODES:
        raise SpecError(f"unknown run mode {mode!r}")
    if mode == "reduced-per-ring" and not (cutoff_R and cutoff_R > 0):
        raise SpecError("reduced-per-ring mode needs a positive cutoff_R")
    dt = -spec.dt if backward else spec.dt
    return _advance(state, dt, spec.scheme, f_ext, mode, cutoff_R, workers, state.time + dt)


@dataclass
class Snapshot:
    time: float
    state: SystemState
    records: list


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, k):
        return self.snapshots[k]

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    def ring_series(self, ring_index):
        return [s.records[ring_index] for s in self.snapshots]


def run(
    state: SystemState,
    spec: IntegratorSpec,
    mode: str = "monolithic",
    *,
    cutoff_R: float | None = None,
    f_ext: ExternalField | None = None,
    diag: DiagnosticsSpec | None = None,
    workers: int = 1,
    progress: Callable | None = None,
) -> Trajectory:
    """Integrate to ``spec.t_end``, recording every ``snapshot_every`` steps.

    The final state is always recorded.  On an axis crossing the error is
    raised with the snapshots recorded so far in ``err.trajectory``.
    """
    if mode not in RUN_MODES:
        raise SpecError(f"unknown run mode {mode!r}")
    if mode == "reduced-per-ring" and not (cutoff_R and cutoff_R > 0):
        raise SpecError("reduced-per-ring mode needs a positive cutoff_R")
    diag = diag or DiagnosticsSpec()
    traj = Trajectory()
    t0 = state.time
    traj.snapshots.append(Snapshot(state.time, state, state_records(state, diag)))
    n = spec.n_steps
    for k in range(1, n + 1):
        try:
            # times are k * dt, never accumulated, so they do not drift
            state = _advance(state, spec.dt, spec.scheme, f_ext, mode, cutoff_R, workers, t0 + k * spec.dt)
        except AxisCrossingError as err:
            err.trajectory = traj
            raise
        if k % spec.snapshot_every == 0 or k == n:
            traj.snapshots.append(Snapshot(state.time, state, state_records(state, diag)))
        if progress is not None:
            progress(k, n)
    return traj
