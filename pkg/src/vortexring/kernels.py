"""Axisymmetric Biot-Savart kernels on the meridian half-plane.

Points are pairs ``(z, r)`` with ``r > 0``.  The velocity induced at ``x`` by
a unit of vorticity (area measure) at ``y`` is ``kernel_H(x, y)``; it splits
as

    H(x, y) = K(x - y) + L(x, y) + R(x, y)

with ``K`` the planar point-vortex kernel, ``L`` the logarithmic term that
drives the self-induced translation of a thin ring, and ``R`` a bounded
remainder.

Two evaluation paths exist for ``H`` and the Stokes stream function:

* ``kernel_H`` / ``stream_kernel``: adaptive quadrature of the angular
  integrals (the reference).
* ``velocity_kernel`` / ``stream_function_kernel``: vectorised closed forms
  in complete elliptic integrals, used for particle summation and checked
  against the reference in the test-suite.

Blob regularisation replaces ``|x - y|**2`` by ``|x - y|**2 + delta**2``
everywhere, in both paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _quad
from scipy.special import ellipe, ellipkm1

from .errors import KernelDomainError, QuadratureError

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive angular quadrature."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class Regularization:
    """Blob smoothing scale; ``delta == 0`` gives the singular kernels."""

    delta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta!r}")


DEFAULT_QUAD = QuadratureSpec()
EXACT = Regularization(0.0)


def as_point(v, name="point"):
    p = np.asarray(v, dtype=float).reshape(-1)
    if p.shape != (2,):
        raise KernelDomainError(f"{name} must have two components, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise KernelDomainError(f"{name} has non-finite components: {p}")
    return p


def _breakpoints(scale):
    # the integrands peak in a layer of width ~scale at theta = 0
    pts = [0.0]
    b = scale / 64.0
    while b < np.pi:
        if b > 0:
            pts.append(b)
        b *= 4.0
    pts.append(np.pi)
    return pts


def _integrate(f, quad, scale):
    """Integrate ``f`` over [0, pi], piecewise on geometric breakpoints."""
    pts = _breakpoints(scale)
    n = len(pts) - 1
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        res = _quad(
            f,
            lo,
            hi,
            epsabs=quad.abs_tol / n,
            epsrel=quad.rel_tol,
            limit=int(quad.max_subdivisions),
            full_output=1,
        )
        value, abserr = res[0], res[1]
        # QUADPACK may flag roundoff while its error estimate is within tolerance
        if len(res) > 3 and abserr > max(quad.abs_tol / n, quad.rel_tol * abs(value)):
            msg = " ".join(res[3].split())
            raise QuadratureError(f"angular quadrature did not converge on [{lo:.3g}, {hi:.3g}]: {msg}")
        total += value
    if not np.isfinite(total):
        raise QuadratureError("angular quadrature returned a non-finite value")
    return total


def _check_pair(x, y, reg):
    x = as_point(x, "x")
    y = as_point(y, "y")
    if x[1] <= 0:
        raise KernelDomainError(f"target must lie in the open half-plane r > 0, got r = {x[1]}")
    if y[1] < 0:
        raise KernelDomainError(f"source must satisfy r >= 0, got r = {y[1]}")
    if reg.delta == 0 and np.array_equal(x, y):
        raise KernelDomainError("singular kernel evaluated at coincident points (delta = 0)")
    return x, y


def kernel_H(x, y, quad: QuadratureSpec = DEFAULT_QUAD, reg: Regularization = EXACT):
    """Velocity at ``x`` induced by unit vorticity at ``y``, by quadrature."""
    x, y = _check_pair(x, y, reg)
    if y[1] == 0:
        return np.zeros(2)
    x1, x2 = x
    y1, y2 = y
    rho2 = (x1 - y1) ** 2 + (x2 - y2) ** 2 + reg.delta**2
    c4 = 4.0 * x2 * y2
    scale = np.sqrt(rho2 / (x2 * y2))

    # 1 - cos(t) is written as 2 sin(t/2)^2 to keep digits near t = 0
    def h1(t):
        s2 = np.sin(0.5 * t) ** 2
        return y2 * ((y2 - x2) + 2.0 * x2 * s2) / (rho2 + c4 * s2) ** 1.5

    def h2(t):
        s2 = np.sin(0.5 * t) ** 2
        return y2 * (x1 - y1) * np.cos(t) / (rho2 + c4 * s2) ** 1.5

    H1 = _integrate(h1, quad, scale) / TWO_PI
    # the integrand vanishes identically on x1 == y1; keep that zero exact
    H2 = 0.0 if x1 == y1 else _integrate(h2, quad, scale) / TWO_PI
    return np.array([H1, H2])


def kernel_K(d, reg: Regularization = EXACT):
    """Planar kernel ``(-d2, d1) / (2 pi (|d|^2 + delta^2))``."""
    d = as_point(d, "d")
    if reg.delta == 0:
        n = np.hypot(d[0], d[1])
        if n == 0:
            raise KernelDomainError("planar kernel evaluated at d = 0 with delta = 0")
        # divide by |d| twice so tiny separations do not underflow |d|^2
        return np.array([-d[1], d[0]]) / n / (TWO_PI * n)
    s = d[0] ** 2 + d[1] ** 2 + reg.delta**2
    return np.array([-d[1], d[0]]) / (TWO_PI * s)


def kernel_L(x, y, reg: Regularization = EXACT):
    x = as_point(x, "x")
    y = as_point(y, "y")
    if x[1] <= 0:
        raise KernelDomainError(f"target must lie in the open half-plane r > 0, got r = {x[1]}")
    rho = np.sqrt((x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 + reg.delta**2)
    if rho == 0:
        raise KernelDomainError("translation kernel evaluated at coincident points (delta = 0)")
    return np.array([np.log1p(1.0 / rho) / (FOUR_PI * x[1]), 0.0])


def kernel_remainder(x, y, quad: QuadratureSpec = DEFAULT_QUAD):
    """Bounded part ``H - K - L`` of the exact kernel."""
    x, y = _check_pair(x, y, EXACT)
    if y[1] <= 0:
        raise KernelDomainError("remainder requires a source with r > 0")
    return kernel_H(x, y, quad) - kernel_K(x - y) - kernel_L(x, y)


def stream_kernel(x, y, quad: QuadratureSpec = DEFAULT_QUAD, reg: Regularization = EXACT):
    """Stokes stream function at ``x`` of unit vorticity at ``y``.

    ``H = ((1/x2) dG/dx2, -(1/x2) dG/dx1)``.
    """
    x = as_point(x, "x")
    y = as_point(y, "y")
    if x[1] <= 0:
        raise KernelDomainError(f"target must lie in the open half-plane r > 0, got r = {x[1]}")
    if y[1] < 0:
        raise KernelDomainError(f"source must satisfy r >= 0, got r = {y[1]}")
    if y[1] == 0:
        return 0.0
    rho2 = (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 + reg.delta**2
    if rho2 == 0:
        raise KernelDomainError("stream kernel evaluated at coincident points (delta = 0)")
    c4 = 4.0 * x[1] * y[1]
    scale = np.sqrt(rho2 / (x[1] * y[1]))
    val = _integrate(lambda t: np.cos(t) / np.sqrt(rho2 + c4 * np.sin(0.5 * t) ** 2), quad, scale)
    return x[1] * y[1] * val / TWO_PI


# --- vectorised closed forms ---------------------------------------------------
#
# With A = rho^2 + 4 x2 y2, m = 4 x2 y2 / A and p = 1 - m = rho^2 / A the angular
# integrals reduce to complete elliptic integrals K(m), E(m):
#   int_0^pi D^-3/2           = 2 A^-3/2 E / p
#   int_0^pi (1-cos) D^-3/2   = 4 A^-3/2 (K - E) / m
#   int_0^pi cos D^-1/2       = 2 A^-1/2 ((2 - m) K - 2 E) / m
# p is formed directly from rho^2 so that K stays accurate as x -> y.


def velocity_kernel(x1, x2, y1, y2, delta2=0.0):
    """Elementwise ``H(x, y)`` as a pair of arrays (broadcasting).

    Entries with ``y2 == 0`` are zero.  Coincident points with ``delta2 == 0``
    give non-finite values; callers mask them.
    """
    x1, x2, y1, y2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, x2, y1, y2)))
    dz = x1 - y1
    rho2 = dz * dz + (x2 - y2) ** 2 + delta2
    c4 = 4.0 * x2 * y2
    A = rho2 + c4
    with np.errstate(divide="ignore", invalid="ignore"):
        p = rho2 / A
        m = c4 / A
        K = ellipkm1(p)
        E = ellipe(m)
        s = A ** -1.5
        j0 = 2.0 * s * E / p
        j0_minus_j1 = np.where(m > 0, 4.0 * s * (K - E) / m, 0.0)
        h1 = y2 * ((y2 - x2) * j0 + x2 * j0_minus_j1) / TWO_PI
        h2 = y2 * dz * (j0 - j0_minus_j1) / TWO_PI
    zero = y2 == 0
    if np.any(zero):
        h1 = np.where(zero, 0.0, h1)
        h2 = np.where(zero, 0.0, h2)
    return h1, h2


def stream_function_kernel(x1, x2, y1, y2, delta2=0.0):
    """Elementwise Stokes stream function ``G(x, y)`` (broadcasting)."""
    x1, x2, y1, y2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, x2, y1, y2)))
    rho2 = (x1 - y1) ** 2 + (x2 - y2) ** 2 + delta2
    c4 = 4.0 * x2 * y2
    A = rho2 + c4
    with np.errstate(divide="ignore", invalid="ignore"):
        p = rho2 / A
        m = c4 / A
        K = ellipkm1(p)
        E = ellipe(m)
        g = x2 * y2 * 2.0 / np.sqrt(A) * ((2.0 - m) * K - 2.0 * E) / m / TWO_PI
    return np.where(y2 == 0, 0.0, g)


def planar_kernel(d1, d2, delta2=0.0):
    with np.errstate(divide="ignore", invalid="ignore"):
        s = TWO_PI * (d1 * d1 + d2 * d2 + delta2)
        return -d2 / s, d1 / s


def translation_kernel(x1, x2, y1, y2, delta2=0.0):
    """z-component of ``L``; the r-component is identically zero."""
    with np.errstate(divide="ignore"):
        rho = np.sqrt((x1 - y1) ** 2 + (x2 - y2) ** 2 + delta2)
        return np.log1p(1.0 / rho) / (FOUR_PI * x2)


def velocity_kernel_H(x, y, reg: Regularization = EXACT):
    """Closed-form ``H`` for a single pair, with the same checks as ``kernel_H``."""
    x, y = _check_pair(x, y, reg)
    h1, h2 = velocity_kernel(x[0], x[1], y[0], y[1], reg.delta**2)
    return np.array([float(h1), float(h2)])
