import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmaflow.regularization import (TimeProfile, default_width, from_trajectory,
                                    inf_convolution, shifted_data,
                                    sup_convolution, time_lipschitz_bound)


def brute_sup_conv(times, values, k):
    """Independent loop-based oracle for the discrete sup-convolution."""
    S, m = values.shape
    out = np.empty_like(values)
    for i in range(S):
        for j in range(m):
            out[i, j] = max(values[s, j] - k * abs(times[s] - times[i])
                            for s in range(S))
    return out


profiles = st.integers(min_value=2, max_value=9).flatmap(
    lambda S: st.tuples(
        st.just(S),
        st.lists(st.floats(-10.0, 10.0), min_size=S * 2, max_size=S * 2),
        st.lists(st.floats(0.01, 2.0), min_size=S, max_size=S),
    ))


def make_profile(drawn):
    S, vals, gaps = drawn
    times = np.cumsum(np.asarray(gaps))
    values = np.asarray(vals).reshape(S, 2)
    return TimeProfile(times=times, values=values)


@settings(max_examples=100, deadline=None)
@given(profiles, st.floats(0.5, 50.0))
def test_sup_convolution_matches_bruteforce(drawn, k):
    u = make_profile(drawn)
    got = sup_convolution(u, k).values
    want = brute_sup_conv(u.times, u.values, k)
    assert np.allclose(got, want, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(profiles, st.floats(0.5, 50.0))
def test_convolution_contracts(drawn, k):
    u = make_profile(drawn)
    up = sup_convolution(u, k)
    lo = inf_convolution(u, k)
    # sandwich
    assert np.all(up.values >= u.values - 1e-12)
    assert np.all(lo.values <= u.values + 1e-12)
    # k-Lipschitz in t on the profile grid
    for conv in (up, lo):
        dv = np.abs(np.diff(conv.values, axis=0))
        dt = np.diff(conv.times)[:, None]
        assert np.all(dv <= k * dt + 1e-9)
    # duality: inf conv of -u equals -(sup conv of u)
    neg = TimeProfile(times=u.times, values=-u.values)
    assert np.allclose(inf_convolution(neg, k).values, -up.values, atol=1e-12)
    # attainment: each output touches some shifted input value
    gap = np.abs(u.times[:, None] - u.times[None, :])
    cand = u.values[None, :, :] - k * gap[:, :, None]
    assert np.allclose(np.max(cand, axis=1), up.values, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(profiles, st.floats(0.5, 20.0), st.floats(1.01, 3.0))
def test_convolution_monotone_in_k(drawn, k, factor):
    u = make_profile(drawn)
    up1 = sup_convolution(u, k).values
    up2 = sup_convolution(u, k * factor).values
    assert np.all(up2 <= up1 + 1e-12)
    lo1 = inf_convolution(u, k).values
    lo2 = inf_convolution(u, k * factor).values
    assert np.all(lo2 >= lo1 - 1e-12)


def test_large_k_recovers_profile():
    times = np.array([0.0, 0.5, 1.0])
    values = np.array([[0.0], [3.0], [-1.0]])
    u = TimeProfile(times=times, values=values)
    k = 100.0  # slope larger than any profile variation
    assert np.allclose(sup_convolution(u, k).values, values)
    assert np.allclose(inf_convolution(u, k).values, values)


def test_default_width_exceeds_twice_oscillation():
    u = TimeProfile(times=np.array([0.0, 1.0]),
                    values=np.array([[0.0, 2.0], [1.0, -3.0]]))
    assert u.osc == 5.0
    assert default_width(u) == 11.0


def test_shifted_data_window_and_penalty():
    from cmaflow.problems import manufactured_linear
    data, _ = manufactured_linear(1)
    import dataclasses
    ramp = dataclasses.replace(
        data, f=lambda t, pts: np.full(np.atleast_2d(pts).shape[0], 1.0 + t))
    ts = np.linspace(0.0, 1.0, 11)
    k, A = 10.0, 1.0
    sd = shifted_data(ramp, k, A, ts)
    pts = np.array([[0.1, 0.2]])
    # f_k at t = 0.5 with window 0.1: min over s in {0.4, 0.5, 0.6} of 1 + s
    assert sd.f(0.5, pts)[0] == pytest.approx(1.4)
    # F = 0 everywhere, so F_k is the pure distance penalty min = 0
    assert sd.F(0.5, pts, np.array([0.0]))[0] == pytest.approx(0.0)


def test_time_lipschitz_bound_on_flat_profile(disc_scheme_coarse):
    import cmaflow as cf
    from cmaflow.parabolic import solve
    from cmaflow.problems import stationary
    data, _ = stationary(1)
    traj = solve(data, disc_scheme_coarse,
                 cf.SolverConfig(T=1.0, snapshot_dt=0.1))
    rep = time_lipschitz_bound(traj, data, n=1, tol=10 * disc_scheme_coarse.h)
    assert rep["n_pairs"] > 0
    assert rep["violations"] == 0


def test_from_trajectory_roundtrip(disc_scheme_coarse):
    import cmaflow as cf
    from cmaflow.parabolic import solve
    from cmaflow.problems import manufactured_linear
    data, _ = manufactured_linear(1)
    traj = solve(data, disc_scheme_coarse,
                 cf.SolverConfig(T=0.5, snapshot_dt=0.25))
    prof = from_trajectory(traj)
    assert prof.values.shape == (len(traj.snapshots),
                                 disc_scheme_coarse.grid.n_nodes)
    assert np.allclose(prof.times, traj.times)
