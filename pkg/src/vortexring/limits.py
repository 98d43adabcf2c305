"""Point-vortex limits: the planar model and the large-ring variant.

The large-ring model adds a self-induced drift ``A_i (1, 0)`` to each vortex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorSpec
from .errors import CollisionError, SpecError
from .kernels import TWO_PI

MODELS = ("point-vortex", "large-ring")


@dataclass(frozen=True)
class LimitState:
    positions: np.ndarray
    intensities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        A = np.array(self.intensities, dtype=float).reshape(-1)
        if len(pos) != len(A):
            raise SpecError("positions and intensities differ in length")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensities", A)

    def min_distance(self):
        n = len(self.intensities)
        if n < 2:
            return np.inf
        d = self.positions[:, None, :] - self.positions[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        r[np.diag_indices(n)] = np.inf
        return float(r.min())


def _pair_rhs(pos, A, floor):
    n = len(A)
    if n < 2:
        return np.zeros((n, 2))
    d = pos[:, None, :] - pos[None, :, :]
    r2 = d[..., 0] ** 2 + d[..., 1] ** 2
    np.fill_diagonal(r2, np.inf)
    if floor > 0 and r2.min() < floor * floor:
        i, j = np.unravel_index(int(np.argmin(r2)), r2.shape)
        raise CollisionError(
            f"vortices {min(i, j)} and {max(i, j)} came within {np.sqrt(r2[i, j]):.3g} (floor {floor:.3g})",
            pair=(int(min(i, j)), int(max(i, j))),
        )
    if floor <= 0 and not np.all(r2 > 0):
        raise CollisionError("coincident vortices")
    coef = A[None, :] / (TWO_PI * r2)
    return np.column_stack([(-d[..., 1] * coef).sum(axis=1), (d[..., 0] * coef).sum(axis=1)])


def point_vortex_rhs(s: LimitState, floor: float = 0.0):
    """Velocities sum_{j != i} A_j K(z_i - z_j)."""
    return _pair_rhs(s.positions, s.intensities, floor)


def large_ring_rhs(s: LimitState, floor: float = 0.0):
    v = _pair_rhs(s.positions, s.intensities, floor)
    v[:, 0] += s.intensities
    return v


_RHS = {"point-vortex": point_vortex_rhs, "large-ring": large_ring_rhs}


def collision_floor(s: LimitState) -> float:
    """1e-6 times the initial minimum separation."""
    d = s.min_distance()
    return 1e-6 * d if np.isfinite(d) else 0.0


def ode_integrate(s: LimitState, spec: IntegratorSpec, model: str = "point-vortex", floor: float | None = None):
    """RK4 (or Euler) trajectory ``[(t, LimitState), ...]``, every step recorded.

    A collision raises ``CollisionError`` with the partial trajectory attached.
    """
    if model not in MODELS:
        raise SpecError(f"unknown limit model {model!r}")
    rhs = _RHS[model]
    if floor is None:
        floor = collision_floor(s)
    A = s.intensities
    t0 = s.time
    dt = spec.dt
    traj = [(s.time, s)]
    x = s.positions

    def f(p):
        return rhs(LimitState(p, A), floor)

    for k in range(1, spec.n_steps + 1):
        try:
            if spec.scheme == "euler":
                x = x + dt * f(x)
            else:
                k1 = f(x)
                k2 = f(x + 0.5 * dt * k1)
                k3 = f(x + 0.5 * dt * k2)
                k4 = f(x + dt * k3)
                x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except CollisionError as err:
            err.trajectory = traj
            raise
        t = t0 + k * dt
        traj.append((t, LimitState(x, A, t)))
    return traj


def center_of_intensity(s: LimitState):
    return (s.intensities[:, None] * s.positions).sum(axis=0)


def interaction_energy(s: LimitState) -> float:
    """sum_{i<j} A_i A_j log|z_i - z_j|."""
    n = len(s.intensities)
    i, j = np.triu_indices(n, 1)
    d = np.hypot(*(s.positions[i] - s.positions[j]).T)
    return float(np.sum(s.intensities[i] * s.intensities[j] * np.log(d)))


def rotation_period(traj, i=0, j=1):
    """Time for the separation z_j - z_i to turn through one full revolution.

    Interpolates the unwrapped angle linearly between recorded steps.
    """
    t = np.array([p[0] for p in traj])
    sep = np.array([p[1].positions[j] - p[1].positions[i] for p in traj])
    ang = np.unwrap(np.arctan2(sep[:, 1], sep[:, 0]))
    turned = np.abs(ang - ang[0])
    k = np.nonzero(turned >= 2 * np.pi)[0]
    if not len(k):
        return float("nan")
    k = int(k[0])
    a0, a1 = turned[k - 1], turned[k]
    return float(t[k - 1] + (2 * np.pi - a0) / (a1 - a0) * (t[k] - t[k - 1]))
