"""Time stepping: fixed points, invariant maintenance, convergence, blow-up paths."""

import math

import numpy as np
import pytest

from nematicflow import (BlowUpError, FieldState, ParameterError,
                         RegularizationConfig, RegimeError, Stepper,
                         TimeStepperConfig, from_alpha, reconstruct_pressure,
                         run, step)
from nematicflow.config import taylor_green_velocity
from nematicflow.spectral import random_band_limited

from conftest import smooth_state


def quiescent(grid, coeffs):
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.0
    return FieldState(grid=grid, coeffs=coeffs, time=0.0,
                      u=np.zeros((grid.dim,) + grid.shape), d=d)


def test_config_validation():
    with pytest.raises(ParameterError):
        TimeStepperConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ParameterError):
        TimeStepperConfig(dt=2.0, t_end=1.0)
    with pytest.raises(ParameterError):
        TimeStepperConfig(dt=1e-3, t_end=1.0, scheme="rk4")
    with pytest.raises(ParameterError):
        TimeStepperConfig(dt=1e-3, t_end=1.0, max_vorticity_sup=0.0)


def test_quiescent_is_bitwise_fixed_point(grid2d, alpha_one):
    st = quiescent(grid2d, alpha_one)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.05)
    stepper = Stepper(grid2d, alpha_one, cfg)
    cur = st
    for _ in range(50):
        cur, _ = stepper.step_pair(cur)
    assert np.array_equal(cur.u, st.u)
    assert np.array_equal(cur.d, st.d)


def test_stepper_rejects_bad_regime(grid2d):
    from nematicflow import LeslieCoefficients
    bad = LeslieCoefficients(lambda1=-1.0, lambda2=0.0, mu1=0.0, mu2=-0.5,
                             mu3=0.5, mu4=0.0, mu5=0.0, mu6=0.0)
    with pytest.raises(RegimeError):
        Stepper(grid2d, bad, TimeStepperConfig(dt=1e-3, t_end=0.01))


def test_step_preserves_mean_velocity_and_divergence(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=1)
    mean0 = [grid2d.mean(st.u[i]) for i in range(2)]
    cfg = TimeStepperConfig(dt=5e-4, t_end=0.02)
    traj = run(st, cfg, cadence=10)
    fin = traj.final_state
    for i in range(2):
        assert grid2d.mean(fin.u[i]) == pytest.approx(mean0[i], abs=1e-13)
    assert grid2d.sup_norm(grid2d.divergence(fin.u)) < 1e-10
    # fields stay band-limited
    uhat = grid2d.fft(fin.u)
    assert np.max(np.abs(uhat[:, ~grid2d.dealias_mask])) < 1e-10


@pytest.mark.parametrize("scheme,lo,hi", [
    ("semi-implicit-euler", 0.9, 1.4),
    ("imex-bdf2", 1.7, 2.3),
])
def test_temporal_order(grid2d, scheme, lo, hi):
    c = from_alpha(1.0, 1.0)
    rng = np.random.default_rng(2)
    u0 = taylor_green_velocity(grid2d, 0.1)
    d0 = np.zeros((3,) + grid2d.shape)
    d0[2] = 1.0
    d0 += 0.05 * random_band_limited(grid2d, 3, 2, rng)
    T = 0.04

    def final(dt):
        st = FieldState(grid=grid2d, coeffs=c, time=0.0, u=u0, d=d0)
        tr = run(st, TimeStepperConfig(dt=dt, t_end=T, scheme=scheme), cadence=10 ** 9)
        return tr.final_state

    ref = final(T / 1024)
    dts = [T / 16, T / 32, T / 64]
    errs = [grid2d.l2_norm(final(dt).u - ref.u) + grid2d.l2_norm(final(dt).d - ref.d)
            for dt in dts]
    order = np.polyfit([math.log(d) for d in dts], [math.log(e) for e in errs], 1)[0]
    assert lo < order < hi


def test_bdf2_history_chains_through_run(grid2d, alpha_one):
    """run() must produce the same trajectory as manual step_pair chaining."""
    st = smooth_state(grid2d, alpha_one, seed=3)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01, scheme="imex-bdf2")
    traj = run(st, cfg, cadence=10 ** 9)
    stepper = Stepper(grid2d, alpha_one, cfg)
    cur = st
    for _ in range(10):
        cur, _ = stepper.step_pair(cur)
    assert np.array_equal(cur.u, traj.final_state.u)
    assert np.array_equal(cur.d, traj.final_state.d)


def test_bdf2_reboots_on_time_mismatch(grid2d, alpha_one):
    """Feeding a state that does not chain from the previous output falls
    back to the one-step scheme instead of using stale history."""
    st = smooth_state(grid2d, alpha_one, seed=3)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01, scheme="imex-bdf2")
    stepper = Stepper(grid2d, alpha_one, cfg)
    a, _ = stepper.step_pair(st)
    stepper.step_pair(a)
    # restart from t=0: history keyed on time no longer matches
    b, _ = stepper.step_pair(st)
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.d, b.d)


def test_one_shot_step_matches_stepper(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=5)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01)
    a = step(st, cfg)
    b, _ = Stepper(grid2d, alpha_one, cfg).step_pair(st)
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.d, b.d)
    assert a.time == st.time + cfg.dt


def test_regularized_step_from_rest_matches_plain(grid2d, alpha_one):
    """At u = 0 the advective terms and the r-term all vanish, so one step of
    the regularized scheme equals one plain step.  (They diverge afterwards:
    the generated velocity feeds different convective forms.)"""
    st = smooth_state(grid2d, alpha_one, seed=7, u_amp=0.0)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01)
    reg = RegularizationConfig(M=8, r=4.0)
    plain = step(st, cfg)
    regd = step(st, cfg, reg=reg)
    assert grid2d.sup_norm(plain.u - regd.u) < 1e-13
    assert grid2d.sup_norm(plain.d - regd.d) < 1e-13


def test_n_modes_truncates_velocity(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=8, kmax=6)
    reg = RegularizationConfig(M=2, r=4.0, N_modes=2)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01)
    fin = run(st, cfg, reg=reg, cadence=10 ** 9).final_state
    uhat = grid2d.fft(fin.u)
    outside = ~np.all(np.abs(grid2d.k) <= 2, axis=0)
    assert np.max(np.abs(uhat[:, outside])) < 1e-10
    # the director band is untouched by N_modes
    dhat = grid2d.fft(fin.d)
    assert np.max(np.abs(dhat[:, outside & grid2d.dealias_mask])) > 1e-6


def test_vorticity_threshold_raises(grid2d, alpha_one):
    u0 = taylor_green_velocity(grid2d, 1.0)
    d = np.zeros((3,) + grid2d.shape)
    d[2] = 1.0
    st = FieldState(grid=grid2d, coeffs=alpha_one, time=0.0, u=u0, d=d)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.01, max_vorticity_sup=1e-6)
    stepper = Stepper(grid2d, alpha_one, cfg)
    with pytest.raises(BlowUpError) as exc:
        stepper.step_pair(st)
    # the carried state is the last finite one
    assert exc.value.state is st
    assert exc.value.time == 0.0


def test_run_returns_flagged_partial_trajectory(grid2d, alpha_one):
    u0 = taylor_green_velocity(grid2d, 1.0)
    d = np.zeros((3,) + grid2d.shape)
    d[2] = 1.0
    st = FieldState(grid=grid2d, coeffs=alpha_one, time=0.0, u=u0, d=d)
    cfg = TimeStepperConfig(dt=1e-3, t_end=0.05, max_vorticity_sup=1e-6)
    traj = run(st, cfg)
    assert traj.blown_up
    assert traj.blowup_step == 0
    assert traj.blowup_time == 0.0
    assert len(traj.reports) == 1  # only the initial sample
    assert np.isfinite(traj.final_state.u).all()


def test_run_sampling_times(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=9)
    traj = run(st, TimeStepperConfig(dt=1e-3, t_end=0.01), cadence=3)
    # samples at step 0, every 3rd step, and the final step
    assert traj.sample_steps == [0, 3, 6, 9, 10]
    times = [r.time for r in traj.reports]
    assert times == pytest.approx([0.0, 0.003, 0.006, 0.009, 0.010])
    assert traj.n_steps == 10
    with pytest.raises(ParameterError):
        run(st, TimeStepperConfig(dt=1e-3, t_end=0.01), cadence=0)


def test_run_rejects_non_multiple_horizon(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=9)
    with pytest.raises(ParameterError):
        run(st, TimeStepperConfig(dt=3e-3, t_end=0.01))


def test_run_collect_states(grid2d, alpha_one):
    st = smooth_state(grid2d, alpha_one, seed=10)
    traj = run(st, TimeStepperConfig(dt=1e-3, t_end=0.005), cadence=1,
               collect_states=True)
    assert len(traj.states) == len(traj.reports) == 6
    assert traj.states[0].time == 0.0
    hook_calls = []
    run(st, TimeStepperConfig(dt=1e-3, t_end=0.005),
        hooks=(lambda s, i: hook_calls.append(i),), cadence=2)
    assert hook_calls == [0, 2, 4, 5]


def test_reconstruct_pressure_quiescent(grid2d, alpha_one):
    st = quiescent(grid2d, alpha_one)
    p = reconstruct_pressure(st)
    assert grid2d.sup_norm(p) < 1e-14


def test_reconstruct_pressure_taylor_green(grid2d):
    """For Taylor-Green with uniform director the nonlinearity is a pure
    gradient: P = (amp^2/4)(cos 4 pi x + cos 4 pi y)."""
    c = from_alpha(0.5, 1.0)
    amp = 1.0
    u0 = taylor_green_velocity(grid2d, amp)
    d = np.zeros((3,) + grid2d.shape)
    d[2] = 1.0
    st = FieldState(grid=grid2d, coeffs=c, time=0.0, u=u0, d=d)
    p = reconstruct_pressure(st)
    x = grid2d.coords()
    expect = 0.25 * amp ** 2 * (np.cos(2.0 * 2.0 * np.pi * x[0])
                                + np.cos(2.0 * 2.0 * np.pi * x[1]))
    assert grid2d.sup_norm(p - expect) < 1e-12
    assert abs(grid2d.mean(p)) < 1e-15
