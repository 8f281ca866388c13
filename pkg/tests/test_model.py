from __future__ import annotations

import math

import numpy as np
import pytest

from sclerasim.model import (
    FirstOrderLag,
    PlantState,
    ScleraForce,
    ScleraModel,
    TwistLimits,
    VesselProfile,
    force_magnitude,
    saturate_twist,
    sclera_force,
    step_plant,
)


def test_sclera_force_zero_displacement():
    model = ScleraModel(kx=200.0, ky=200.0, rest_x=0.1, rest_y=-0.2)
    state = PlantState(dx=0.1, dy=-0.2)
    f = sclera_force(state, model)
    assert f.fx == 0.0
    assert f.fy == 0.0


def test_sclera_force_direct_product():
    model = ScleraModel(kx=200.0, ky=200.0)
    f = sclera_force(PlantState(dx=0.5, dy=0.0), model)
    assert f.fx == pytest.approx(100.0)
    assert f.fy == 0.0


def test_sclera_force_componentwise():
    model = ScleraModel(kx=200.0, ky=200.0)
    f = sclera_force(PlantState(dx=0.3, dy=-0.4), model)
    assert f.fx == pytest.approx(60.0)
    assert f.fy == pytest.approx(-80.0)
    assert force_magnitude(f) == pytest.approx(100.0)


def test_sclera_model_rejects_nonpositive_stiffness():
    with pytest.raises(ValueError):
        ScleraModel(kx=0.0)
    with pytest.raises(ValueError):
        ScleraModel(ky=-5.0)


def test_force_magnitude_pythagorean():
    assert force_magnitude(ScleraForce(3.0, 4.0)) == 5.0
    assert force_magnitude(ScleraForce(0.0, 0.0)) == 0.0
    assert force_magnitude(ScleraForce(60.0, -80.0)) == 100.0


def test_force_magnitude_rotation_invariant():
    rng = np.random.default_rng(7)
    for _ in range(50):
        fx, fy = rng.uniform(-200.0, 200.0, 2)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(theta), math.sin(theta)
        rotated = ScleraForce(c * fx - s * fy, s * fx + c * fy)
        original = force_magnitude(ScleraForce(fx, fy))
        assert force_magnitude(rotated) == pytest.approx(original, rel=1e-12)


def test_sclera_force_linearity():
    model = ScleraModel(kx=175.0, ky=120.0)
    rng = np.random.default_rng(11)
    for _ in range(20):
        dx, dy = rng.uniform(-1.0, 1.0, 2)
        base = sclera_force(PlantState(dx=dx, dy=dy), model)
        # powers of two scale exactly in binary floating point
        doubled = sclera_force(PlantState(dx=2.0 * dx, dy=2.0 * dy), model)
        assert doubled.fx == 2.0 * base.fx
        assert doubled.fy == 2.0 * base.fy
        alpha = rng.uniform(0.1, 3.0)
        scaled = sclera_force(PlantState(dx=alpha * dx, dy=alpha * dy), model)
        assert scaled.fx == pytest.approx(alpha * base.fx, rel=1e-12, abs=1e-12)
        assert scaled.fy == pytest.approx(alpha * base.fy, rel=1e-12, abs=1e-12)


def test_step_plant_single_euler_step():
    twist = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    out = step_plant(PlantState(), twist, dt=0.001)
    assert out.dx == pytest.approx(0.001, abs=1e-18)
    assert out.dy == 0.0
    assert out.t == 0.001


def test_step_plant_zero_twist_identity():
    state = PlantState(dx=0.3, dy=-0.1, progress=0.5, t=2.0)
    out = step_plant(state, np.zeros(6), dt=0.01, progress_rate=1.0)
    assert (out.dx, out.dy, out.progress) == (state.dx, state.dy, state.progress)
    assert out.t == pytest.approx(2.01)


def test_step_plant_500_steps_accumulate():
    # 0.5 s of -2 mm/s in 1 ms steps: 500 exact Euler increments
    state = PlantState()
    twist = np.array([-2.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    for _ in range(500):
        state = step_plant(state, twist, dt=0.001)
    assert state.dx == pytest.approx(-1.0, abs=1e-12)


def test_step_plant_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        step_plant(PlantState(), np.zeros(6), dt=0.0)
    with pytest.raises(ValueError):
        step_plant(PlantState(), np.zeros(6), dt=-0.001)


def test_step_plant_n_steps_equal_one_big_step():
    # binary-exact dt so repeated addition incurs no rounding
    dt = 1.0 / 1024.0
    n = 512
    twist = np.array([1.5, -0.25, 0.5, 0.0, 0.0, 0.0])
    stepped = PlantState()
    for _ in range(n):
        stepped = step_plant(stepped, twist, dt, progress_rate=0.25)
    big = step_plant(PlantState(), twist, n * dt, progress_rate=0.25)
    assert stepped.dx == big.dx
    assert stepped.dy == big.dy
    assert stepped.progress == pytest.approx(big.progress, abs=1e-12)


def test_step_plant_progress_clamped():
    twist = np.array([0.0, 0.0, 10.0, 0.0, 0.0, 0.0])
    state = PlantState(progress=0.999)
    out = step_plant(state, twist, dt=1.0, progress_rate=1.0)
    assert out.progress == 1.0


def test_zero_twist_force_constant_over_steps():
    model = ScleraModel()
    state = PlantState(dx=0.4, dy=-0.2)
    f0 = sclera_force(state, model)
    for _ in range(100):
        state = step_plant(state, np.zeros(6), dt=0.001)
    f1 = sclera_force(state, model)
    assert (f1.fx, f1.fy) == (f0.fx, f0.fy)


def test_saturate_twist_channel_bounds():
    twist = np.array([50.0, -50.0, 5.0, 3.0, -3.0, 0.5])
    out = saturate_twist(twist)
    assert list(out) == [10.0, -10.0, 5.0, 1.0, -1.0, 0.5]
    unclipped = saturate_twist(twist, limits=None)
    assert list(unclipped) == list(twist)
    custom = saturate_twist(twist, TwistLimits(linear=100.0, angular=10.0))
    assert list(custom) == list(twist)


def test_saturate_twist_rejects_wrong_shape():
    with pytest.raises(ValueError):
        saturate_twist(np.zeros(5))


def test_first_order_lag_passthrough_and_convergence():
    ideal = FirstOrderLag(tau=0.0)
    cmd = np.array([1.0, 2.0, 3.0, 0.0, 0.0, 0.0])
    assert np.array_equal(ideal.apply(cmd, 0.001), cmd)

    lag = FirstOrderLag(tau=0.1)
    step = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    outputs = [lag.apply(step, 0.001)[0] for _ in range(2000)]
    assert all(b > a for a, b in zip(outputs, outputs[1:]))
    assert outputs[0] < 0.05
    assert outputs[-1] > 0.99

    with pytest.raises(ValueError):
        FirstOrderLag(tau=-0.1)


def test_vessel_profile_flat_demands_nothing():
    flat = VesselProfile(name="flat", amplitude=0.8)
    for p in np.linspace(0.0, 1.0, 21):
        assert flat.demand(float(p)) == (0.0, 0.0)


def test_vessel_profile_four_vessels_shape():
    vessel = VesselProfile(amplitude=0.8)
    assert vessel.demand(0.0) == (0.0, 0.0)
    dx1, dy1 = vessel.demand(1.0)
    assert math.hypot(dx1, dy1) == pytest.approx(0.0, abs=1e-12)
    # segment boundaries unload; segment midpoints load at full amplitude
    for boundary in (0.25, 0.5, 0.75):
        dx, dy = vessel.demand(boundary)
        assert math.hypot(dx, dy) == pytest.approx(0.0, abs=1e-9)
    magnitudes = [math.hypot(*vessel.demand(p)) for p in (0.125, 0.375, 0.625, 0.875)]
    for m in magnitudes:
        assert m == pytest.approx(0.8, rel=1e-12)


def test_vessel_profile_seed_reordering():
    vessel = VesselProfile()
    orders = {vessel.reordered_for_seed(100 + i).order for i in range(10)}
    assert len(orders) == 10
    assert vessel.reordered_for_seed(5).order == vessel.reordered_for_seed(5).order
    for order in orders:
        assert sorted(order) == [0, 1, 2, 3]


def test_vessel_profile_validation():
    with pytest.raises(ValueError):
        VesselProfile(name="zigzag")
    with pytest.raises(ValueError):
        VesselProfile(amplitude=-1.0)
    with pytest.raises(ValueError):
        VesselProfile(order=(0, 0, 1, 2))
