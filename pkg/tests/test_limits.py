import math

import numpy as np
import pytest

from vortexring.dynamics import IntegratorSpec
from vortexring.errors import CollisionError, SpecError
from vortexring.limits import (
    LimitState,
    center_of_intensity,
    collision_floor,
    interaction_energy,
    large_ring_rhs,
    ode_integrate,
    point_vortex_rhs,
    rotation_period,
)

TWO_PI = 2 * math.pi


def test_single_vortex_has_no_velocity():
    np.testing.assert_array_equal(point_vortex_rhs(LimitState([[0.3, -1.0]], [5.0])), [[0, 0]])


def test_two_vortices_hand_values():
    s = LimitState([[0, 0], [1, 0]], [TWO_PI, TWO_PI])
    v = point_vortex_rhs(s)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), [1, 1])
    np.testing.assert_allclose(v @ np.array([1.0, 0.0]), [0, 0], atol=1e-16)
    np.testing.assert_allclose(v[0], -v[1])
    np.testing.assert_allclose(v[0], [0, -1])


def test_momentum_cancels():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(2, 9)
        s = LimitState(rng.normal(size=(n, 2)), rng.normal(size=n))
        v = point_vortex_rhs(s)
        scale = np.abs(s.intensities[:, None] * v).max()
        assert np.abs((s.intensities[:, None] * v).sum(axis=0)).max() < 1e-13 * max(scale, 1)


def test_large_ring_rhs():
    np.testing.assert_array_equal(large_ring_rhs(LimitState([[0, 0]], [3.0])), [[3, 0]])
    s = LimitState([[0, 0], [1, 1], [2, -1]], [0, 0, 0])
    np.testing.assert_array_equal(large_ring_rhs(s), np.zeros((3, 2)))
    s = LimitState([[0, 0], [0.5, 0.2]], [1.5, -0.4])
    np.testing.assert_allclose(large_ring_rhs(s), point_vortex_rhs(s) + [[1.5, 0], [-0.4, 0]])


def test_limit_state_validation():
    with pytest.raises(SpecError):
        LimitState([[0, 0], [1, 1]], [1.0])
    assert LimitState([[0, 0]], [1]).min_distance() == np.inf


def test_stationary_single_vortex():
    traj = ode_integrate(LimitState([[0.2, 0.4]], [1.0]), IntegratorSpec(dt=0.1, t_end=1.0))
    for _, s in traj:
        np.testing.assert_array_equal(s.positions, [[0.2, 0.4]])


def test_single_large_ring_translates():
    traj = ode_integrate(LimitState([[0.0, 0.5]], [1.0]), IntegratorSpec(dt=0.01, t_end=2.0), "large-ring")
    for t, s in traj:
        assert abs(s.positions[0, 0] - t) < 1e-12
        assert s.positions[0, 1] == 0.5


def test_two_vortex_period():
    s = LimitState([[-0.5, 0], [0.5, 0]], [TWO_PI, TWO_PI])
    traj = ode_integrate(s, IntegratorSpec(dt=1e-3, t_end=3.3))
    assert abs(rotation_period(traj) - math.pi) / math.pi < 1e-6


def test_center_of_intensity_and_energy_conserved():
    s = LimitState([[0, 0], [1, 0.2], [0.3, 0.9]], [1.0, 0.5, 2.0])
    drifts = []
    for dt in (0.02, 0.01):
        traj = ode_integrate(s, IntegratorSpec(dt=dt, t_end=1.0))
        c0, e0 = center_of_intensity(s), interaction_energy(s)
        for _, st in traj:
            np.testing.assert_allclose(center_of_intensity(st), c0, atol=1e-13)
            rhs = point_vortex_rhs(st)
            assert np.abs((st.intensities[:, None] * rhs).sum(axis=0)).max() < 1e-13
        drifts.append(abs(interaction_energy(traj[-1][1]) - e0))
    assert drifts[1] < drifts[0] / 8


def test_equal_intensity_large_ring_is_shifted_point_vortex():
    pos = [[0, 0], [0.8, 0.3], [0.2, 1.0]]
    A = 0.7
    spec = IntegratorSpec(dt=0.01, t_end=1.0)
    pv = ode_integrate(LimitState(pos, [A] * 3), spec)
    lr = ode_integrate(LimitState(pos, [A] * 3), spec, "large-ring")
    for (t, a), (_, b) in zip(pv, lr):
        np.testing.assert_allclose(b.positions - [A * t, 0], a.positions, atol=1e-12)


def test_collision_detected_with_partial_trajectory():
    # a pair already closer than the floor aborts at the first evaluation
    s = LimitState([[0, 0], [1e-3, 0]], [1.0, 1.0])
    with pytest.raises(CollisionError) as info:
        ode_integrate(s, IntegratorSpec(dt=1.0, t_end=10.0), floor=1e-2)
    assert info.value.pair == (0, 1)
    assert info.value.trajectory is not None and len(info.value.trajectory) >= 1
    assert collision_floor(LimitState([[0, 0], [2, 0]], [1, 1])) == pytest.approx(2e-6)


def test_unknown_model():
    with pytest.raises(SpecError):
        ode_integrate(LimitState([[0, 0]], [1]), IntegratorSpec(dt=0.1, t_end=0.1), "vortex-wave")
