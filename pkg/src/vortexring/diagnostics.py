"""Functionals of a ring's particle ensemble.

All functions are read-only over snapshots.  Weights are the plane-area
vorticity masses, so ``sum(weight)`` is the ring's total vorticity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import KernelDomainError, ZeroMassError
from .field import TARGET_BLOCK, ParticleField, SystemState
from .kernels import FOUR_PI, as_point, stream_function_kernel


def _mass(ring):
    m = math.fsum(ring.weight)
    if m == 0:
        raise ZeroMassError("ring has zero total weight")
    return m


def center_of_vorticity(ring: ParticleField):
    m = _mass(ring)
    w = ring.weight
    return np.array([math.fsum(w * ring.pos[:, 0]) / m, math.fsum(w * ring.pos[:, 1]) / m])


def moment_of_inertia(ring: ParticleField) -> float:
    B = center_of_vorticity(ring)
    d2 = ((ring.pos - B) ** 2).sum(axis=1)
    return math.fsum(ring.weight * d2)


def mass_outside(ring: ParticleField, R: float) -> float:
    """Weight of particles strictly farther than ``R`` from the centre of vorticity."""
    B = center_of_vorticity(ring)
    d = np.hypot(*(ring.pos - B).T)
    return math.fsum(ring.weight[d > R])


def smoothstep5(s):
    """C^2 quintic ramp from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


@dataclass(frozen=True)
class Mollifier:
    """Radial cut-off equal to 1 on |x| <= R and 0 on |x| >= R + h.

    The profile is ``1 - S((|x| - R) / h)`` with S the quintic smoothstep.
    ``max S' = 15/8`` and ``max |S''| = 10/sqrt(3)``; together with the
    tangential Hessian term ``|W'| / |x| <= 15 / (16 h^2)`` (as R >= 2h) this
    gives the gradient and gradient-Lipschitz bounds with ``C_W`` below.
    """

    R: float
    h: float
    coefficients: tuple = (10.0, -15.0, 6.0)  # S(s) = 10 s^3 - 15 s^4 + 6 s^5

    C_W = 6.0

    def __post_init__(self):
        if not (self.h > 0 and self.R >= 2 * self.h):
            raise ValueError(f"mollifier needs R >= 2h > 0, got R={self.R}, h={self.h}")

    def profile(self, rad):
        """W as a function of the radius."""
        rad = np.asarray(rad, dtype=float)
        W = 1.0 - smoothstep5((rad - self.R) / self.h)
        # pin both plateaus exactly; (R + h - R) / h may round below 1
        return np.where(rad >= self.R + self.h, 0.0, np.where(rad <= self.R, 1.0, W))

    def dprofile(self, rad):
        s = np.clip((np.asarray(rad, dtype=float) - self.R) / self.h, 0.0, 1.0)
        return -30.0 * s * s * (1.0 - s) ** 2 / self.h

    def d2profile(self, rad):
        s = np.clip((np.asarray(rad, dtype=float) - self.R) / self.h, 0.0, 1.0)
        return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / self.h**2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.hypot(x[..., 0], x[..., 1]))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        rad = np.hypot(x[..., 0], x[..., 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rad[..., None] > 0, x / rad[..., None], 0.0)
        return self.dprofile(rad)[..., None] * unit


def mollified_mass(ring: ParticleField, moll: Mollifier) -> float:
    B = center_of_vorticity(ring)
    return math.fsum(ring.weight * (1.0 - moll(ring.pos - B)))


def support_radius(ring: ParticleField) -> float:
    B = center_of_vorticity(ring)
    return float(np.max(np.hypot(*(ring.pos - B).T)))


def concentration_center(ring: ParticleField, rho: float):
    """Particle position whose open rho-disk holds the most weight.

    Ties go to the smallest particle index.
    """
    _mass(ring)
    pos = ring.pos
    w = ring.weight
    n = len(w)
    best_val, best_idx = -math.inf, 0
    for i0 in range(0, n, TARGET_BLOCK):
        c = pos[i0 : i0 + TARGET_BLOCK]
        d2 = ((pos[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        inside = (w[:, None] * (d2 < rho * rho)).sum(axis=0)
        k = int(np.argmax(inside))  # first maximum within the block
        if inside[k] > best_val:
            best_val, best_idx = inside[k], i0 + k
    return pos[best_idx].copy()


def total_energy(state: SystemState) -> float:
    """pi * sum_{j,k} w_j w_k G(x_j, x_k) with the regularised stream function.

    Needs ``delta > 0`` for the diagonal terms.
    """
    delta = state.reg.delta
    if not delta > 0:
        raise KernelDomainError("energy needs a positive blob size for the self terms")
    pos, w = state.positions, state.weights
    n = len(w)
    z, r = pos[:, 0], pos[:, 1]
    starts = list(range(0, n, TARGET_BLOCK))
    parts = []
    # G is symmetric: off-diagonal block pairs are evaluated once and doubled
    for bi, i0 in enumerate(starts):
        a = slice(i0, min(i0 + TARGET_BLOCK, n))
        for j0 in starts[bi:]:
            b = slice(j0, min(j0 + TARGET_BLOCK, n))
            G = stream_function_kernel(z[a][:, None], r[a][:, None], z[b][None, :], r[b][None, :], delta**2)
            row = w[a] * (G * w[b][None, :]).sum(axis=1)
            parts.append(row if j0 == i0 else 2.0 * row)
    return math.pi * math.fsum(np.concatenate(parts)) if parts else 0.0


def conserved_quantities(state: SystemState) -> dict:
    w = state.weights
    r = state.positions[:, 1]
    return {
        "M0": math.fsum(w),
        "M2": math.fsum(w * r * r),
        "E": total_energy(state),
    }


def predicted_center(zeta0, a: float, t: float):
    """Centre translated along the axis at speed a / (4 pi r0)."""
    z = as_point(zeta0, "zeta0")
    if z[1] <= 0:
        raise KernelDomainError("predicted centre needs r0 > 0")
    return np.array([z[0] + a / (FOUR_PI * z[1]) * t, z[1]])


# --- per-snapshot records ---------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsSpec:
    """Which radii the per-snapshot records evaluate.

    ``radii`` feed m_t(R); ``mollifiers`` feed mu_t(R, h); ``rho`` is the
    concentration radius (None means sqrt(epsilon) of each ring).  The first
    entry of each list goes to the trajectory CSV.
    """

    radii: tuple = (0.05,)
    mollifiers: tuple = ((0.05, 0.02),)
    rho: float | None = None
    energy: bool = True


@dataclass
class DiagnosticsRecord:
    time: float
    B: np.ndarray
    I: float
    m_of_R: dict = field(default_factory=dict)
    mu_of_Rh: dict = field(default_factory=dict)
    R_t: float = 0.0
    q: np.ndarray = None
    M0: float = 0.0
    M2: float = 0.0
    E: float = float("nan")


def ring_record(ring: ParticleField, time: float, spec: DiagnosticsSpec, E=float("nan")):
    """Snapshot record for one ring.

    A ring of zero total weight has no centre of vorticity; its record uses
    the plain particle centroid so that trajectories stay well defined.
    """
    w = ring.weight
    M0 = math.fsum(w)
    M2 = math.fsum(w * ring.pos[:, 1] ** 2)
    if M0 == 0:
        B = ring.pos.mean(axis=0)
        R_t = float(np.max(np.hypot(*(ring.pos - B).T)))
        return DiagnosticsRecord(
            time=time, B=B, I=0.0,
            m_of_R={R: 0.0 for R in spec.radii},
            mu_of_Rh={tuple(Rh): 0.0 for Rh in spec.mollifiers},
            R_t=R_t, q=B.copy(), M0=M0, M2=M2, E=E,
        )
    rho = spec.rho if spec.rho is not None else math.sqrt(ring.ring.epsilon)
    return DiagnosticsRecord(
        time=time,
        B=center_of_vorticity(ring),
        I=moment_of_inertia(ring),
        m_of_R={R: mass_outside(ring, R) for R in spec.radii},
        mu_of_Rh={tuple(Rh): mollified_mass(ring, Mollifier(*Rh)) for Rh in spec.mollifiers},
        R_t=support_radius(ring),
        q=concentration_center(ring, rho),
        M0=M0,
        M2=M2,
        E=E,
    )


def state_records(state: SystemState, spec: DiagnosticsSpec):
    """One record per ring; ``E`` is the energy of the whole system."""
    E = total_energy(state) if spec.energy and state.reg.delta > 0 else float("nan")
    return [ring_record(r, state.time, spec, E) for r in state.rings]
