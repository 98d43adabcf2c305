import math

import mpmath
import numpy as np
import pytest

from vortexring.errors import AxisViolationError, KernelDomainError, OverlapError, SpecError
from vortexring.field import (
    RingSpec,
    SystemState,
    continuum_density_bound,
    default_delta,
    induced_velocity,
    make_ring_blob,
    make_system,
    mean_spacing,
    ring_velocity,
    self_velocity,
    sum_velocity,
)
from vortexring.kernels import Regularization, kernel_H


def test_weights_sum_to_scaled_intensity():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, 1.0, "uniform", 400))
    assert math.fsum(blob.weight) == pytest.approx(1 / math.log(10), rel=1e-15)
    assert math.fsum(blob.weight) == pytest.approx(0.43429, abs=5e-6)


def test_weights_without_scaling():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, 2.5, "radial-cosine", 300), log_eps_scaling=False)
    assert math.fsum(blob.weight) == pytest.approx(2.5, rel=1e-15)


def test_zero_intensity_gives_zero_weights():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, 0.0, "uniform", 400))
    assert np.all(blob.weight == 0)


def test_negative_intensity_sign():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, -1.0, "radial-cosine", 100))
    assert np.all(blob.weight < 0)


@pytest.mark.parametrize("profile", ["uniform", "radial-cosine"])
def test_particles_inside_disk(profile):
    spec = RingSpec((0.3, 1.2), 0.05, 1.0, profile, 1000)
    blob = make_ring_blob(spec)
    d = np.hypot(*(blob.pos - np.array(spec.center)).T)
    assert d.max() < spec.epsilon
    assert len(blob) == 1000 and len(blob.particles) == 1000


def test_uniform_density_bound():
    spec = RingSpec((0, 1), 0.1, 1.0, "uniform", 500)
    blob = make_ring_blob(spec)
    # implied density a / (|log eps| pi eps^2) needs M >= a / pi
    assert blob.density_bound_M == pytest.approx(1 / math.pi, rel=1e-12)
    assert continuum_density_bound(spec) == pytest.approx(1 / math.pi)
    omega_max = np.abs(blob.omega0).max()
    assert omega_max <= blob.density_bound_M / (spec.epsilon**2 * math.log(10)) * (1 + 1e-12)


def test_cosine_profile_bound_near_continuum():
    spec = RingSpec((0, 1), 0.1, 1.0, "radial-cosine", 4000)
    blob = make_ring_blob(spec)
    assert blob.density_bound_M == pytest.approx(continuum_density_bound(spec), rel=1e-2)


def test_ringspec_validation():
    with pytest.raises(SpecError):
        RingSpec((0, 1), -0.1, 1.0)
    with pytest.raises(SpecError):
        RingSpec((0, 1), 0.1, 1.0, "gaussian")
    with pytest.raises(SpecError):
        RingSpec((0, 1), 0.1, 1.0, "uniform", 0)
    with pytest.raises(AxisViolationError):
        RingSpec((0, 0.05), 0.1, 1.0)


def test_make_system_geometry():
    s = make_system([RingSpec((0, 1), 0.1, 1.0, particle_count=10), RingSpec((0.5, 1), 0.1, 1.0, particle_count=10)])
    assert isinstance(s, SystemState) and s.time == 0.0
    with pytest.raises(OverlapError):
        make_system([RingSpec((0, 1), 0.1, 1.0, particle_count=10), RingSpec((0.15, 1), 0.1, 1.0, particle_count=10)])


def test_default_delta_is_twice_spacing():
    s = make_system([RingSpec((0, 1), 0.1, 1.0, particle_count=400), RingSpec((1, 1), 0.05, 1.0, particle_count=100)])
    assert s.reg.delta == pytest.approx(2 * min(mean_spacing(r) for r in s.rings))
    assert s.reg.delta == default_delta(s.rings)


def test_weights_are_read_only():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, 1.0, particle_count=10))
    with pytest.raises(ValueError):
        blob.weight[0] = 1.0


def test_vorticity_attribute_transport():
    blob = make_ring_blob(RingSpec((0, 1), 0.1, 1.0, particle_count=10))
    moved = blob.with_positions(blob.pos * [1.0, 2.0])
    np.testing.assert_allclose(moved.omega, 2 * blob.omega0, rtol=1e-15)
    assert moved.particles[3].omega == pytest.approx(blob.omega0[3] * 2)


# --- velocity sums ------------------------------------------------------------------


def _state(n_rings=1, P=50, delta=None, mode="exact-H", a=1.0):
    specs = [RingSpec((1.0 * k, 1.0), 0.1, a, "uniform", P) for k in range(n_rings)]
    return make_system(specs, reg=None if delta is None else Regularization(delta), kernel_mode=mode)


def test_zero_weights_give_zero_velocity():
    s = _state(a=0.0)
    v = induced_velocity(s, [[0.0, 0.5], [2.0, 1.0]])
    assert np.array_equal(v, np.zeros((2, 2)))


def test_single_particle_far_target():
    y, w = np.array([[0.1, 1.2]]), np.array([0.7])
    x = np.array([[3.0, 2.0]])
    v = sum_velocity(x, y, w)
    np.testing.assert_allclose(v[0], 0.7 * kernel_H(x[0], y[0]), rtol=1e-9)


def _mp_H(x, y, delta=0):
    mpmath.mp.dps = 30
    x1, x2, y1, y2 = (mpmath.mpf(float(v)) for v in (*x, *y))
    D = lambda t: (x1 - y1) ** 2 + (x2 - y2) ** 2 + delta**2 + 2 * x2 * y2 * (1 - mpmath.cos(t))
    h1 = mpmath.quad(lambda t: y2 * (y2 - x2 * mpmath.cos(t)) / D(t) ** 1.5, [0, mpmath.pi / 8, mpmath.pi])
    h2 = mpmath.quad(lambda t: y2 * (x1 - y1) * mpmath.cos(t) / D(t) ** 1.5, [0, mpmath.pi / 8, mpmath.pi])
    return h1 / (2 * mpmath.pi), h2 / (2 * mpmath.pi)


def test_three_particles_match_extended_precision_double_loop():
    src = np.array([[0.0, 1.0], [0.05, 1.02], [-0.03, 0.97]])
    w = np.array([0.2, -0.1, 0.35])
    tgt = np.array([[0.1, 1.1], [-0.2, 0.8]])
    got = sum_velocity(tgt, src, w)
    for i, x in enumerate(tgt):
        acc = [mpmath.mpf(0), mpmath.mpf(0)]
        for y, wj in zip(src, w):
            h = _mp_H(x, y)
            acc[0] += wj * h[0]
            acc[1] += wj * h[1]
        np.testing.assert_allclose(got[i], [float(acc[0]), float(acc[1])], rtol=1e-11, atol=1e-14)


def test_self_term_skipped_without_delta():
    src = np.array([[0.0, 1.0], [0.1, 1.0]])
    w = np.array([1.0, 1.0])
    v = sum_velocity(src, src, w)
    np.testing.assert_allclose(v[0], kernel_H(src[0], src[1]), rtol=1e-9)
    with pytest.raises(KernelDomainError):
        sum_velocity([[0.0, 0.0]], src, w)


def test_additive_over_rings():
    s = _state(n_rings=3, P=40)
    tgt = np.array([[0.5, 1.3], [1.5, 0.7], [0.0, 1.0]])
    total = induced_velocity(s, tgt)
    parts = sum(ring_velocity(s, i, tgt) for i in range(3))
    np.testing.assert_allclose(total, parts, rtol=1e-12, atol=1e-15)


def test_exact_and_decomposed_modes_agree():
    for delta in (0.0, 0.02):
        a = _state(n_rings=2, P=60, delta=delta)
        b = _state(n_rings=2, P=60, delta=delta, mode="decomposed-KLR")
        tgt = np.vstack([a.positions[::7], [[0.5, 1.0]]])
        np.testing.assert_allclose(induced_velocity(a, tgt), induced_velocity(b, tgt), rtol=1e-9, atol=1e-9)


def test_worker_count_does_not_change_bits():
    s = _state(n_rings=2, P=400)
    tgt = s.positions
    one = induced_velocity(s, tgt, workers=1)
    many = induced_velocity(s, tgt, workers=8)
    assert np.array_equal(one, many)
    a = self_velocity(s.positions, s.weights, s.reg.delta, workers=1)
    b = self_velocity(s.positions, s.weights, s.reg.delta, workers=5)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("delta", [0.0, 0.01])
def test_self_velocity_matches_direct_sum(delta):
    s = _state(n_rings=2, P=300)
    pos, w = s.positions, s.weights
    direct = sum_velocity(pos, pos, w, delta)
    sym = self_velocity(pos, w, delta)
    np.testing.assert_allclose(sym, direct, rtol=1e-11, atol=1e-13 * np.abs(direct).max())
