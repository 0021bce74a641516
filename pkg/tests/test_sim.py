import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapd import (ControlSchedule, DeltaPolicy, NldiModel, SimScenario, SimulationAbort, TrimSpec,
                  ValidationError, check_truncated_l2, compare_responses, discretize, integrate_nonlinear,
                  linearize_trim, simulate_discrete_ldi, trim)
from hapd.sim import ActuatorState, clamp_position, iterate_linear, rate_limit

DEG = np.pi / 180


@pytest.fixture(scope="module")
def mid(model):
    return trim(TrimSpec(20.0, 500.0), model)


def test_position_clamp():
    np.testing.assert_array_equal(np.degrees(clamp_position(np.radians([30.0, -40.0, 10.0]), 25 * DEG)),
                                  [25.0, -25.0, 10.0])


@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rate_limit_step(prev, cmd):
    out = rate_limit(prev, cmd, 200 * DEG, 0.02)
    assert abs(out - prev) <= 4 * DEG + 1e-15
    assert min(prev, cmd) - 1e-15 <= out <= max(prev, cmd) + 1e-15


def test_rate_limit_exact_slew(model):
    act = ActuatorState.at(np.zeros(12), model.params)
    steps = [act.update(np.full(12, 25 * DEG), 0.02)[0] for _ in range(8)]
    np.testing.assert_allclose(np.degrees(steps), [4, 8, 12, 16, 20, 24, 25, 25], atol=1e-12)


@given(st.lists(st.floats(-2.0, 2.0), min_size=12, max_size=12))
def test_clamp_idempotent(values):
    once = clamp_position(np.array(values), 25 * DEG)
    np.testing.assert_array_equal(clamp_position(once, 25 * DEG), once)
    assert np.all(np.abs(once) <= 25 * DEG)


def test_schedule_piecewise_constant():
    a, b = np.zeros(13), np.ones(13)
    s = ControlSchedule((0.0, 1.0), (a, b))
    np.testing.assert_array_equal(s(0.999), a)
    np.testing.assert_array_equal(s(1.0), b)
    with pytest.raises(ValidationError):
        ControlSchedule((1.0, 0.5), (a, b))


def test_trim_hold(mid, model):
    sc = SimScenario(np.array(mid.x_trim), ControlSchedule.constant(mid.u_trim), 500.0, 10.0)
    traj = integrate_nonlinear(sc, model)
    assert np.max(np.abs(traj.x - mid.x_trim)) < 1e-6
    assert len(traj.t) == 2001


def _perturbed(mid):
    x0 = np.array(mid.x_trim)
    x0[[0, 1, 3]] += [1.0, 0.03, 0.2]
    return x0


def test_rk4_order(mid, model):
    def end(h):
        sc = SimScenario(_perturbed(mid), ControlSchedule.constant(mid.u_trim), 500.0, 1.0, h)
        return integrate_nonlinear(sc, model).x[-1]
    ref = end(0.02 / 32)
    ratio = np.max(np.abs(end(0.02) - ref)) / np.max(np.abs(end(0.01) - ref))
    assert 8.0 <= ratio <= 32.0


def test_step_bounds(mid):
    with pytest.raises(ValidationError):
        SimScenario(np.array(mid.x_trim), ControlSchedule.constant(mid.u_trim), 500.0, 1.0, 0.1)


def test_elevator_doublet_pitches(mid, model):
    up = np.array(mid.u_trim)
    up[:6] += 2 * DEG
    sc = SimScenario(np.array(mid.x_trim), ControlSchedule((0.0, 0.5), (up, np.array(mid.u_trim))), 500.0, 1.0)
    traj = integrate_nonlinear(sc, model)
    # positive deflection with C_m.delta < 0 pitches the nose down
    assert model.coeffs["C_m.delta[1]"] < 0
    assert traj.x[20, 4] < 0
    assert np.all(np.abs(traj.delta) <= 25 * DEG)


def test_abort_carries_partial_trajectory(mid, model):
    x0 = np.array(mid.x_trim)
    x0[7] = np.pi / 2 - 1e-3
    x0[4] = 5.0
    sc = SimScenario(x0, ControlSchedule.constant(mid.u_trim), 500.0, 2.0)
    with pytest.raises(SimulationAbort) as info:
        integrate_nonlinear(sc, model)
    assert info.value.time <= 2.0
    assert info.value.trajectory is not None


def test_zero_policy_zero_response(nldi):
    tr = simulate_discrete_ldi(nldi, DeltaPolicy.random_contraction(3), np.zeros(13), 50)
    np.testing.assert_array_equal(tr.x, 0.0)
    np.testing.assert_array_equal(tr.w, 0.0)


def test_zero_delta_is_nominal_model(nldi, rng):
    U = rng.standard_normal((100, 13)) * 0.01
    tr = simulate_discrete_ldi(nldi, DeltaPolicy.zero(), U, 100)
    X = np.empty_like(tr.x)
    X[0] = 0
    for k in range(100):
        X[k + 1] = nldi.Phi0 @ X[k] + nldi.G0 @ U[k]
    np.testing.assert_allclose(tr.x, X, atol=1e-14)


def test_vertex_replay_matches_reconstructed_vertex(nldi, coverage, rng):
    x0 = rng.standard_normal(12) * 0.1
    u = np.concatenate([np.full(12, DEG), [5.0]])
    for i in (0, 13, 29):
        tr = simulate_discrete_ldi(nldi, DeltaPolicy.vertex_replay(i, coverage), u, 250, x0)
        Phi, G = nldi.vertex_matrices(coverage.vertices[i].delta)
        np.testing.assert_allclose(tr.x, iterate_linear(Phi, G, u, 250, x0), rtol=0, atol=1e-8)


def test_random_policy_is_reproducible_and_contractive(nldi, rng):
    x0 = rng.standard_normal(12)
    a = simulate_discrete_ldi(nldi, DeltaPolicy.random_contraction(11), np.zeros(13), 40, x0)
    b = simulate_discrete_ldi(nldi, DeltaPolicy.random_contraction(11), np.zeros(13), 40, x0)
    np.testing.assert_array_equal(a.x, b.x)
    assert np.all(np.linalg.norm(a.w, axis=1) <= np.linalg.norm(a.z, axis=1) * (1 + 1e-12))
    assert check_truncated_l2(a.w, a.z)


def test_oversized_delta_is_refused(nldi):
    with pytest.raises(ValidationError, match="spectral norm"):
        simulate_discrete_ldi(nldi, DeltaPolicy.constant(1.1 * np.eye(nldi.rank)), np.zeros(13), 5,
                              np.ones(12))


def test_l2_check_examples(rng):
    z = rng.standard_normal((20, 3))
    bad = check_truncated_l2(1.1 * z, z)
    assert not bad and bad.first_violation == 0
    delayed = np.vstack([np.zeros((1, 3)), z[:-1]])
    assert check_truncated_l2(delayed, z)
    assert check_truncated_l2(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(ValidationError):
        check_truncated_l2(z[:5], z)


def test_compare_is_second_order(mid, model):
    disc = discretize(linearize_trim(mid, model))
    local = NldiModel.nominal(disc)

    def worst(eps):
        dx = np.zeros(12)
        dx[[0, 1, 4]] = eps * np.array([1.0, 0.02, 0.05])
        sc = SimScenario(np.array(mid.x_trim) + dx, ControlSchedule.constant(mid.u_trim), 500.0, 1.0)
        lin = simulate_discrete_ldi(local, DeltaPolicy.zero(), np.zeros(13), 50, dx)
        return compare_responses(integrate_nonlinear(sc, model), lin, mid.x_trim).worst
    assert 3.0 <= worst(1.0) / worst(0.5) <= 5.0


def test_compare_rejects_horizon_mismatch(mid, model, nldi):
    sc = SimScenario(np.array(mid.x_trim), ControlSchedule.constant(mid.u_trim), 500.0, 0.5)
    lin = simulate_discrete_ldi(nldi, DeltaPolicy.zero(), np.zeros(13), 50)
    with pytest.raises(ValidationError, match="horizons"):
        compare_responses(integrate_nonlinear(sc, model), lin, mid.x_trim)
