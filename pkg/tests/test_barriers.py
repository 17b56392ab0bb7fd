import numpy as np
import pytest

import cmaflow as cf
from cmaflow.barriers import (data_extremes, extend_sub, extend_super,
                              linfty_bounds, make_barrier_pair, subbarrier,
                              superbarrier)
from cmaflow.errors import NoWitness, UnboundedData
from cmaflow.parabolic import solve
from cmaflow.problems import manufactured_linear, stationary, tilted
from cmaflow.verify import subsolution_sweep, supersolution_sweep


def test_data_extremes_manufactured(disc_scheme_coarse):
    data, _ = manufactured_linear(1)
    ex = data_extremes(data, disc_scheme_coarse, T=1.0)
    # phi = |z|^2 + t on the boundary: values in [1, 2], slope 1 in t
    assert ex["max_phi"] == pytest.approx(2.0, abs=1e-9)
    assert ex["min_phi"] == pytest.approx(1.0, abs=1e-9)
    assert ex["lip_t_phi"] == pytest.approx(1.0, abs=1e-9)
    assert ex["min_u0"] == pytest.approx(0.0, abs=1e-6)
    assert ex["sup_f"] == pytest.approx(np.exp(-1.0), abs=1e-12)
    assert ex["F_at_max_phi"] == 0.0


def test_data_extremes_unbounded(disc_scheme_coarse):
    import dataclasses
    data, _ = stationary(1)
    bad = dataclasses.replace(
        data, u0=lambda pts: np.where(np.atleast_2d(pts)[:, 0] > 0.5,
                                      np.inf, 0.0))
    with pytest.raises(UnboundedData):
        data_extremes(bad, disc_scheme_coarse, T=1.0)


def test_linfty_bounds_sandwich_solver(disc_scheme_coarse):
    data, ex = manufactured_linear(1)
    sch = disc_scheme_coarse
    lower, upper, consts = linfty_bounds(data, sch, T=1.0)
    traj = solve(data, sch, cf.SolverConfig(T=1.0, snapshot_dt=0.25))
    tol = 10.0 * sch.h
    g = sch.grid
    for snap in traj.snapshots:
        lo = np.asarray(lower(snap.t, g.pos), float)
        hi = np.asarray(upper(snap.t, g.pos), float)
        assert np.all(snap.values >= lo - tol)
        assert np.all(snap.values <= hi + tol)


def test_subbarrier_passes_sweep_and_bracket(disc_scheme_coarse):
    data, _ = manufactured_linear(1)
    sch = disc_scheme_coarse
    eps = 0.4
    w, consts = subbarrier(data, sch, eps, T=1.0)
    rep = subsolution_sweep(w, data, sch, np.linspace(0.05, 0.95, 7))
    assert rep.ok
    # definition bracket at t = 0
    g = sch.grid
    u0 = data.u0(g.pos)
    w0 = w(0.0, g.pos)
    assert np.all(w0 <= u0 + 1e-9)
    assert np.all(w0 >= u0 - eps - 1e-9)


def test_subbarrier_below_solution(disc_scheme_coarse):
    data, ex = manufactured_linear(1)
    sch = disc_scheme_coarse
    w, _ = subbarrier(data, sch, 0.4, T=1.0)
    g = sch.grid
    for t in (0.2, 0.6, 0.9):
        assert np.all(np.asarray(w(t, g.pos), float)
                      <= ex["exact"](t, g.pos) + 10.0 * sch.h)


def test_superbarrier_requires_tight_witness(disc_scheme_coarse):
    data, _ = stationary(1)
    sch = disc_scheme_coarse
    from cmaflow.admissibility import find_witness
    u0 = sch.sample(data.u0)
    loose = find_witness(u0, lambda pts: data.f(0.0, pts), 0.5, sch)
    with pytest.raises(NoWitness):
        superbarrier(data, sch, 0.1, 1.0, loose)
    with pytest.raises(NoWitness):
        superbarrier(data, sch, 0.1, 1.0, None)


def test_superbarrier_passes_sweep_and_dominates(disc_scheme_coarse):
    data, ex = stationary(1)
    sch = disc_scheme_coarse
    from cmaflow.admissibility import find_witness
    eps = 0.4
    u0 = sch.sample(data.u0)
    wit = find_witness(u0, lambda pts: data.f(0.0, pts), 0.5 * eps, sch)
    w, consts = superbarrier(data, sch, eps, 1.0, wit)
    rep = supersolution_sweep(w, data, sch, np.linspace(0.05, 0.95, 7))
    assert rep.ok
    g = sch.grid
    for t in (0.2, 0.6, 0.9):
        assert np.all(np.asarray(w(t, g.pos), float)
                      >= ex["exact"](t, g.pos) - 10.0 * sch.h)


def test_make_barrier_pair_orders_solution(disc_scheme_coarse):
    data, ex = manufactured_linear(1)
    sch = disc_scheme_coarse
    pair = make_barrier_pair(data, sch, 0.4, T=1.0)
    g = sch.grid
    tol = 10.0 * sch.h
    for t in (0.1, 0.5, 0.9):
        u = ex["exact"](t, g.pos)
        assert np.all(np.asarray(pair.sub(t, g.pos), float) <= u + tol)
        assert np.all(np.asarray(pair.super_(t, g.pos), float) >= u - tol)


def test_extend_identity_when_interval_covers(disc_scheme_coarse):
    data, _ = stationary(1)
    w = lambda t, pts: np.zeros(np.atleast_2d(pts).shape[0])
    assert extend_sub(w, data, disc_scheme_coarse, 2.0, 1.0, 1.5) is w
    assert extend_super(w, data, disc_scheme_coarse, 2.0, 1.0, 1.5) is w


def test_extend_super_freezes_and_dominates_cap(disc_scheme_coarse):
    data, _ = stationary(1)
    sch = disc_scheme_coarse
    g = sch.grid
    w = lambda t, pts: np.asarray(data.u0(pts), float)
    wt = extend_super(w, data, sch, eps0=0.5, eps=0.25, T=1.0)
    # before eps the extension equals w, past eps0 it is the frozen max
    assert np.allclose(wt(0.1, g.pos), w(0.1, g.pos))
    frozen = wt(0.9, g.pos)
    assert np.allclose(frozen, frozen[0])
    assert frozen[0] >= float(np.max(w(0.49, g.pos))) - 1e-9
    # monotone nondecreasing in t pointwise
    a, b = wt(0.3, g.pos), wt(0.45, g.pos)
    assert np.all(b >= a - 1e-9)


def test_extend_sub_freezes_to_tail(disc_scheme_coarse):
    data, _ = stationary(1)
    sch = disc_scheme_coarse
    g = sch.grid
    w = lambda t, pts: np.asarray(data.u0(pts), float) - 1.0
    wt = extend_sub(w, data, sch, eps0=0.5, eps=0.25, T=1.0)
    assert np.allclose(wt(0.1, g.pos), w(0.1, g.pos))
    tail = wt(0.9, g.pos)
    assert np.all(tail <= w(0.9, g.pos) + 1e-9)
    a, b = wt(0.3, g.pos), wt(0.45, g.pos)
    assert np.all(b <= a + 1e-9)
