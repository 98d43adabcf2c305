"""Particle discretisation of concentrated vortex rings and velocity summation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import ellipe, ellipkm1

from .errors import AxisViolationError, KernelDomainError, OverlapError, SpecError

from .kernels import (
    DEFAULT_QUAD,
    QuadratureSpec,
    Regularization,
    planar_kernel,
    translation_kernel,
    velocity_kernel,
)

PROFILES = ("uniform", "radial-cosine")
KERNEL_MODES = ("exact-H", "decomposed-KLR")
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
# targets per block in the pair summation; fixed so results never depend on workers
TARGET_BLOCK = 256

# integral of (1 + cos(pi s)) / 2 over the unit disk, divided by pi
_COSINE_AREA_FACTOR = 0.5 - 2.0 / math.pi**2


@dataclass(frozen=True)
class RingSpec:
    center: tuple
    epsilon: float
    intensity: float
    profile: str = "uniform"
    particle_count: int = 400

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 2 or not all(math.isfinite(v) for v in c):
            raise SpecError(f"ring center must be two finite numbers, got {self.center!r}")
        object.__setattr__(self, "center", c)
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise SpecError(f"epsilon must be positive, got {self.epsilon!r}")
        if not math.isfinite(self.intensity):
            raise SpecError("intensity must be finite")
        if self.profile not in PROFILES:
            raise SpecError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if int(self.particle_count) < 1 or int(self.particle_count) != self.particle_count:
            raise SpecError("particle_count must be a positive integer")
        if not c[1] > self.epsilon:
            raise AxisViolationError(
                f"closed disk of radius {self.epsilon} around {c} leaves the half-plane r > 0"
            )


@dataclass(frozen=True)
class Particle:
    pos: np.ndarray
    pos0: np.ndarray
    weight: float
    omega0: float

    @property
    def omega(self):
        return self.omega0 * self.pos[1] / self.pos0[1]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ParticleField:
    """One ring: its spec plus particle arrays (structure of arrays).

    ``weight`` and ``omega0`` are read-only and shared between snapshots.
    ``density_bound_M`` is the smallest M with |omega| <= M / (eps^2 |log eps|).
    """

    ring: RingSpec
    pos: np.ndarray
    pos0: np.ndarray
    weight: np.ndarray
    omega0: np.ndarray
    density_bound_M: float = 0.0
    log_eps_scaling: bool = True

    def __len__(self):
        return len(self.weight)

    @property
    def particles(self):
        return [
            Particle(self.pos[j], self.pos0[j], float(self.weight[j]), float(self.omega0[j]))
            for j in range(len(self))
        ]

    @property
    def omega(self):
        """Pointwise vorticity carried by each particle (omega / r is transported)."""
        return self.omega0 * self.pos[:, 1] / self.pos0[:, 1]

    @property
    def mass(self):
        return math.fsum(self.weight)

    def with_positions(self, pos):
        return replace(self, pos=_frozen(pos))


def _profile_density(profile, s):
    """Unnormalised density as a function of s = distance / epsilon."""
    if profile == "uniform":
        return np.ones_like(s)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def make_ring_blob(spec: RingSpec, log_eps_scaling: bool = True) -> ParticleField:
    """Lay ``spec.particle_count`` particles on a sunflower lattice inside the disk.

    Weights are density times the equal area per particle, rescaled so that
    they sum to ``intensity / |log eps|`` (or ``intensity`` when scaling is
    off).
    """
    P = int(spec.particle_count)
    eps = spec.epsilon
    k = np.arange(P)
    s = np.sqrt((k + 0.5) / P)
    phi = k * GOLDEN_ANGLE
    z0, r0 = spec.center
    pos = np.column_stack([z0 + eps * s * np.cos(phi), r0 + eps * s * np.sin(phi)])

    log_eps = abs(math.log(eps)) if log_eps_scaling else 1.0
    if log_eps == 0:
        raise SpecError("log-epsilon scaling needs epsilon != 1")
    mass = spec.intensity / log_eps
    cell = math.pi * eps**2 / P
    dens = _profile_density(spec.profile, s)
    raw = dens * cell
    total = math.fsum(raw)
    weight = raw * (mass / total)
    omega0 = weight / cell
    # M such that max |omega| = M / (eps^2 |log eps|)
    M = float(np.max(np.abs(omega0))) * eps**2 * log_eps if P else 0.0
    return ParticleField(
        ring=spec,
        pos=_frozen(pos),
        pos0=_frozen(pos),
        weight=_frozen(weight),
        omega0=_frozen(omega0),
        density_bound_M=M,
        log_eps_scaling=log_eps_scaling,
    )


def continuum_density_bound(spec: RingSpec) -> float:
    """M of the continuum profile the lattice samples (uniform: a / pi)."""
    if spec.profile == "uniform":
        return abs(spec.intensity) / math.pi
    return abs(spec.intensity) / (math.pi * _COSINE_AREA_FACTOR)


def mean_spacing(ring: ParticleField) -> float:
    return math.sqrt(math.pi * ring.ring.epsilon**2 / len(ring))


def default_delta(rings) -> float:
    """Twice the mean inter-particle spacing of the finest ring."""
    return 2.0 * min(mean_spacing(r) for r in rings)


@dataclass(frozen=True)
class SystemState:
    rings: tuple
    time: float = 0.0
    reg: Regularization = field(default_factory=Regularization)
    quad: QuadratureSpec = DEFAULT_QUAD
    kernel_mode: str = "exact-H"

    def __post_init__(self):
        object.__setattr__(self, "rings", tuple(self.rings))
        if self.kernel_mode not in KERNEL_MODES:
            raise SpecError(f"unknown kernel mode {self.kernel_mode!r}")

    @property
    def positions(self):
        return np.concatenate([r.pos for r in self.rings]) if self.rings else np.zeros((0, 2))

    @property
    def weights(self):
        return np.concatenate([r.weight for r in self.rings]) if self.rings else np.zeros(0)

    def ring_slices(self):
        out, start = [], 0
        for r in self.rings:
            out.append(slice(start, start + len(r)))
            start += len(r)
        return out

    def with_positions(self, pos, time):
        rings = tuple(r.with_positions(pos[sl]) for r, sl in zip(self.rings, self.ring_slices()))
        return replace(self, rings=rings, time=time)


def _check_layout(specs):
    for i, s in enumerate(specs):
        if s.center[1] - s.epsilon <= 0:
            raise AxisViolationError(f"ring {i}: closed disk leaves the half-plane")
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            a, b = specs[i], specs[j]
            d = math.dist(a.center, b.center)
            if d < a.epsilon + b.epsilon:
                raise OverlapError(f"rings {i} and {j} overlap: distance {d} < {a.epsilon + b.epsilon}")


def make_system(
    specs: Sequence[RingSpec],
    reg: Regularization | None = None,
    quad: QuadratureSpec = DEFAULT_QUAD,
    kernel_mode: str = "exact-H",
    log_eps_scaling: bool = True,
) -> SystemState:
    """Build the time-zero state; ``reg=None`` picks the default blob size."""
    specs = list(specs)
    _check_layout(specs)
    rings = tuple(make_ring_blob(s, log_eps_scaling) for s in specs)
    if reg is None:
        reg = Regularization(default_delta(rings)) if rings else Regularization(0.0)
    return SystemState(rings=rings, time=0.0, reg=reg, quad=quad, kernel_mode=kernel_mode)


# --- pair summation -----------------------------------------------------------


def _block_velocity(tz, tr, sz, sr, w, delta2, kernel_mode):
    # sources on axis 0, targets on axis 1: axis-0 sums add sources in order
    X1, X2 = tz[None, :], tr[None, :]
    Y1, Y2 = sz[:, None], sr[:, None]
    h1, h2 = velocity_kernel(X1, X2, Y1, Y2, delta2)
    if kernel_mode == "decomposed-KLR":
        k1, k2 = planar_kernel(X1 - Y1, X2 - Y2, delta2)
        l1 = translation_kernel(X1, X2, Y1, Y2, delta2)
        h1 = k1 + l1 + (h1 - k1 - l1)
        h2 = k2 + (h2 - k2)
    if delta2 == 0:
        same = (X1 == Y1) & (X2 == Y2)
        if same.any():
            h1 = np.where(same, 0.0, h1)
            h2 = np.where(same, 0.0, h2)
    wc = w[:, None]
    return np.column_stack([(h1 * wc).sum(axis=0), (h2 * wc).sum(axis=0)])


def sum_velocity(targets, src_pos, src_w, delta=0.0, kernel_mode="exact-H", workers=1):
    """Velocity at ``targets`` (n, 2) induced by weighted point sources.

    With ``delta == 0`` a source coinciding with a target is skipped.
    Blocks of targets may run on several threads; the per-target summation
    order is fixed, so output bits do not depend on ``workers``.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    src_pos = np.asarray(src_pos, dtype=float).reshape(-1, 2)
    src_w = np.asarray(src_w, dtype=float).reshape(-1)
    n = len(targets)
    if n and np.any(targets[:, 1] <= 0):
        raise KernelDomainError("velocity targets must lie in the open half-plane r > 0")
    out = np.zeros((n, 2))
    if n == 0 or len(src_w) == 0:
        return out
    delta2 = float(delta) ** 2
    sz, sr = src_pos[:, 0].copy(), src_pos[:, 1].copy()
    starts = range(0, n, TARGET_BLOCK)

    def work(i0):
        sl = slice(i0, min(i0 + TARGET_BLOCK, n))
        out[sl] = _block_velocity(targets[sl, 0], targets[sl, 1], sz, sr, src_w, delta2, kernel_mode)

    if workers > 1 and n > TARGET_BLOCK:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(work, starts))
    else:
        for i0 in starts:
            work(i0)
    if not np.all(np.isfinite(out)):
        raise KernelDomainError("non-finite induced velocity (coincident points with delta = 0?)")
    return out


def _pair_block(za, ra, zb, rb, delta2):
    """Symmetric elliptic factors for one block pair (rows a, columns b).

    Returns (dz, T1, J, g) with dz = za - zb, T1 = (ra - rb) j0, J the
    (1 - cos) integral and g = j0 - J, all scaled by 1 / (2 pi).
    """
    dz = za[:, None] - zb[None, :]
    dr = ra[:, None] - rb[None, :]
    rho2 = dz * dz
    rho2 += dr * dr
    rho2 += delta2
    c4 = np.multiply.outer(4.0 * ra, rb)
    A = rho2 + c4
    with np.errstate(divide="ignore", invalid="ignore"):
        p = rho2 / A
        m = np.divide(c4, A, out=c4)
        E = ellipe(m)
        K = ellipkm1(p)
        s = np.sqrt(A)
        s *= A
        np.divide(1.0 / math.pi, s, out=s)  # 2 / (2 pi A^1.5)
        j0 = E / p
        j0 *= s
        K -= E
        K /= m
        K *= s
        J = np.multiply(K, 2.0, out=K)
        g = j0 - J
        T1 = np.multiply(dr, j0, out=dr)
    if delta2 == 0:
        same = rho2 == 0
        if same.any():
            for arr in (T1, J, g):
                arr[same] = 0.0
    return dz, T1, J, g


def self_velocity(pos, w, delta=0.0, workers=1):
    """Velocity induced by the particles on themselves (exact kernel).

    Uses the symmetry of the elliptic factors to evaluate each pair once.
    Every block pair yields partial sums for both of its blocks; they are
    reduced in a fixed order, so bits do not depend on ``workers``.
    """
    pos = np.asarray(pos, dtype=float).reshape(-1, 2)
    w = np.asarray(w, dtype=float).reshape(-1)
    n = len(w)
    if n == 0:
        return np.zeros((0, 2))
    if np.any(pos[:, 1] <= 0):
        raise KernelDomainError("particles must lie in the open half-plane r > 0")
    delta2 = float(delta) ** 2
    z, r = pos[:, 0].copy(), pos[:, 1].copy()
    wr = w * r
    blocks = [slice(i, min(i + TARGET_BLOCK, n)) for i in range(0, n, TARGET_BLOCK)]
    pairs = [(I, J) for I in range(len(blocks)) for J in range(I, len(blocks))]
    partial = {}

    def work(IJ):
        I, J = IJ
        a, b = blocks[I], blocks[J]
        dz, T1, Jm, g = _pair_block(z[a], r[a], z[b], r[b], delta2)
        ra, rb = r[a][:, None], r[b][None, :]
        dzg = dz * g
        # targets a, sources b:  h1 = rb (ra J - T1),  h2 = rb dz g
        Wb = wr[b][None, :]
        to_a = np.column_stack([((ra * Jm - T1) * Wb).sum(axis=1), (dzg * Wb).sum(axis=1)])
        to_b = None
        if I != J:
            # targets b, sources a:  h1 = ra (T1 + rb J),  h2 = -ra dz g
            Wa = wr[a][:, None]
            to_b = np.column_stack([((T1 + rb * Jm) * Wa).sum(axis=0), -(dzg * Wa).sum(axis=0)])
        partial[IJ] = (to_a, to_b)

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(work, pairs))
    else:
        for IJ in pairs:
            work(IJ)
    out = np.empty((n, 2))
    for I, sl in enumerate(blocks):
        acc = None
        for J in range(len(blocks)):
            part = partial[(I, J)][0] if J >= I else partial[(J, I)][1]
            acc = part.copy() if acc is None else acc + part
        out[sl] = acc
    if not np.all(np.isfinite(out)):
        raise KernelDomainError("non-finite induced velocity")
    return out


def induced_velocity(state: SystemState, targets, workers: int = 1):
    """Velocity of the whole system at ``targets``."""
    return sum_velocity(
        targets, state.positions, state.weights, state.reg.delta, state.kernel_mode, workers
    )


def ring_velocity(state: SystemState, ring_index: int, targets, workers: int = 1):
    """Velocity induced by a single ring of ``state``."""
    r = state.rings[ring_index]
    return sum_velocity(targets, r.pos, r.weight, state.reg.delta, state.kernel_mode, workers)
