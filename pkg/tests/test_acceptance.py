"""Acceptance gate: twelve pinned criteria, one PASS/FAIL line each.

Every tolerance is fixed here.  Heavy runs are shared through module-scoped
fixtures so the gate stays inside its runtime budget.
"""

import math
import time

import numpy as np
import pytest
from scipy.spatial import cKDTree

import cmaflow as cf
from cmaflow import elliptic as el
from cmaflow.admissibility import (AdmissibilityWitness, eps_prime_bound,
                                   find_witness, glue_local_witnesses,
                                   verify_witness, zero_set_mass)
from cmaflow.analysis import (comparison_test, holder_modulus,
                              removability_test)
from cmaflow.barriers import make_barrier_pair
from cmaflow.domain import GridFunction, abs2, ball
from cmaflow.parabolic import SolverConfig, solve
from cmaflow.problems import (decaying_to_elliptic, holder_ramp, kinked_log,
                              kinked_log_witness, linear_density,
                              manufactured_linear, monotone_forcing,
                              stationary, tilted)
from cmaflow.regularization import (TimeProfile, inf_convolution,
                                    sup_convolution, time_lipschitz_bound)
from cmaflow.scheme import make_scheme
from cmaflow.verify import supersolution_sweep


def report(capsys, k, ok, detail):
    line = f"CRITERION {k:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
    with capsys.disabled():
        print(line)
    assert ok, line


@pytest.fixture(scope="module")
def sch1():
    return make_scheme(ball(1), 0.05, K=1)


@pytest.fixture(scope="module")
def sch1c():
    return make_scheme(ball(1), 0.1, K=1)


@pytest.fixture(scope="module")
def sch2c():
    return make_scheme(ball(2), 0.1, K=1)


@pytest.fixture(scope="module")
def manufactured_runs():
    """Timed manufactured-flow runs for n in {1, 2}, h in {0.1, 0.05}."""
    out = {}
    for n in (1, 2):
        data, ex = manufactured_linear(n)
        for h in (0.1, 0.05):
            sch = make_scheme(ball(n), h, K=1)
            # n = 2 runs use a fixed step below the monotonicity bound h^2/n
            # to stay inside the per-run time budget
            dt = 0.45 * h * h if n == 2 else None
            cfg = SolverConfig(T=1.0, dt=dt, snapshot_dt=0.25)
            t0 = time.perf_counter()
            traj = solve(data, sch, cfg)
            elapsed = time.perf_counter() - t0
            err = float(np.max(np.abs(
                traj.final.values - ex["exact"](1.0, sch.grid.pos))))
            out[(n, h)] = {"err": err, "elapsed": elapsed, "traj": traj,
                           "scheme": sch}
    return out


LIPSCHITZ_PROBLEMS = {
    "manufactured": manufactured_linear,
    "stationary": stationary,
    "tilted": tilted,
    "monotone_forcing": monotone_forcing,
}


@pytest.fixture(scope="module")
def corpus_trajs(sch1c, sch1):
    """Solved trajectories for the corpus, keyed by problem name."""
    out = {}
    for name, mk in LIPSCHITZ_PROBLEMS.items():
        data, ex = mk(1)
        traj = solve(data, sch1c, SolverConfig(T=1.0, snapshot_dt=0.1))
        out[name] = {"data": data, "extras": ex, "traj": traj,
                     "scheme": sch1c}
    ddata, dex = decaying_to_elliptic(1)
    out["decaying"] = {
        "data": ddata, "extras": dex, "scheme": sch1c,
        "traj": solve(ddata, sch1c, SolverConfig(T=1.0, snapshot_dt=0.1)),
    }
    kdata, kex = kinked_log(1)
    out["kinked_log"] = {
        "data": kdata, "extras": kex, "scheme": sch1,
        "traj": solve(kdata, sch1,
                      SolverConfig(T=1.0, snapshot_dt=0.1, eps_f=1e-8)),
    }
    return out


@pytest.fixture(scope="module")
def barrier_pairs(sch1c, sch1, corpus_trajs):
    """Barrier pairs: two gaps per Lipschitz problem plus the special cases."""
    pairs = {}
    for name, mk in LIPSCHITZ_PROBLEMS.items():
        data, _ = mk(1)
        pairs[name] = {eps: make_barrier_pair(data, sch1c, eps, T=1.0)
                       for eps in (0.3, 0.5)}
    ddata = corpus_trajs["decaying"]["data"]
    pairs["decaying"] = {0.4: make_barrier_pair(ddata, sch1c, 0.4, T=1.0)}
    kdata = corpus_trajs["kinked_log"]["data"]
    kw = kinked_log_witness(0.4, sch1)
    pairs["kinked_log"] = {0.8: make_barrier_pair(kdata, sch1, 0.8, T=1.0,
                                                  witness=kw)}
    return pairs


def grid_callable(traj, scheme):
    """(t, pts) sampler backed by a solved trajectory (nearest node off-grid)."""
    g = scheme.grid
    tree = cKDTree(g.pos)

    def fn(t, pts):
        pts2 = np.atleast_2d(pts)
        if pts2.shape[0] == g.n_nodes:
            return traj.at(t).values
        _, j = tree.query(pts2)
        return traj.at(t).values[j]

    return fn


def test_criterion_01_manufactured_convergence(manufactured_runs, capsys):
    details = []
    ok = True
    for n in (1, 2):
        errs = {}
        for h in (0.1, 0.05):
            r = manufactured_runs[(n, h)]
            errs[h] = r["err"]
            ok &= r["err"] <= 5.0 * h
            ok &= r["elapsed"] <= 120.0
            details.append(f"n={n} h={h}: err={r['err']:.4f} "
                           f"(tol {5.0 * h:g}) {r['elapsed']:.0f}s")
        ratio = errs[0.1] / max(errs[0.05], 1e-300)
        ok &= ratio >= 1.5
        details.append(f"n={n} ratio={ratio:.2f} (>=1.5)")
    report(capsys, 1, ok, "; ".join(details))


def test_criterion_02_elliptic_radial(sch1, capsys):
    prob = el.EllipticProblem(
        F=lambda pts, r: np.zeros(len(pts)),
        f=lambda pts: np.ones(len(pts)),
        phi=lambda pts: np.ones(len(pts)),
        name="radial",
    )
    cfg = el.EllipticConfig(residual_target=1e-6)
    u_fix = el.solve_dirichlet_ma(prob, sch1, cfg)
    u_per = el.perron_envelope(prob, sch1, cfg,
                               el.elliptic_lower_bound(prob, sch1))
    ref = abs2(sch1.grid.pos)
    e_fix = float(np.max(np.abs(u_fix.values - ref)))
    e_per = float(np.max(np.abs(u_per.values - ref)))
    gap = float(np.max(np.abs(u_fix.values - u_per.values)))
    tol = 5.0 * sch1.h
    ok = e_fix <= tol and e_per <= tol and gap <= 2.0 * cfg.residual_target
    report(capsys, 2, ok,
           f"fixed-point err={e_fix:.2e}, envelope err={e_per:.2e} "
           f"(tol {tol:g}); cross gap={gap:.2e} (tol {2 * cfg.residual_target:g})")


def test_criterion_03_comparison_corpus(barrier_pairs, corpus_trajs, sch1c,
                                        capsys):
    tol = 10.0 * sch1c.h
    n_pairs = 0
    violations = 0
    for name in LIPSCHITZ_PROBLEMS:
        data = corpus_trajs[name]["data"]
        bp = barrier_pairs[name]
        for ea in (0.3, 0.5):
            for eb in (0.3, 0.5):
                rep = comparison_test(bp[ea].sub, bp[eb].super_, data,
                                      sch1c, T=1.0, tol=tol)
                n_pairs += 1
                violations += int(not rep["ok"])
    # solver output as subsolution and as supersolution against barriers
    mdata = corpus_trajs["manufactured"]["data"]
    sol = grid_callable(corpus_trajs["manufactured"]["traj"], sch1c)
    mb = barrier_pairs["manufactured"][0.5]
    for u_sub, v_super in ((sol, mb.super_), (mb.sub, sol)):
        rep = comparison_test(u_sub, v_super, mdata, sch1c, T=1.0, tol=tol)
        n_pairs += 1
        violations += int(not rep["ok"])
    ok = n_pairs >= 12 and violations == 0
    report(capsys, 3, ok,
           f"{violations} violations over {n_pairs} (sub, super) pairs, "
           f"tol {tol:g}")


def test_criterion_04_barrier_sandwich(barrier_pairs, corpus_trajs, capsys):
    details = []
    ok = True
    for name, entry in corpus_trajs.items():
        sch = entry["scheme"]
        tol = 10.0 * sch.h
        pair = max(barrier_pairs[name].items())[1]
        g = sch.grid
        worst = -np.inf
        for snap in entry["traj"].snapshots:
            sub = np.asarray(pair.sub(snap.t, g.pos), float)
            sup = np.asarray(pair.super_(snap.t, g.pos), float)
            worst = max(worst,
                        float(np.max(sub - snap.values)),
                        float(np.max(snap.values - sup)))
        ok &= worst <= tol
        details.append(f"{name}: defect {worst:+.3f} (tol {tol:g})")
    report(capsys, 4, ok, "; ".join(details))


def _brute_sup_conv(profile, k):
    S, m = profile.values.shape
    out = np.empty((S, m))
    for i in range(S):
        best = np.full(m, -np.inf)
        for s in range(S):
            best = np.maximum(
                best,
                profile.values[s] - k * abs(profile.times[s]
                                            - profile.times[i]))
        out[i] = best
    return out


def test_criterion_05_convolution_contracts(capsys):
    rng = np.random.default_rng(42)
    failures = 0
    for _ in range(100):
        S = int(rng.integers(5, 21))
        m = int(rng.integers(3, 7))
        ts = np.sort(rng.uniform(0.0, 2.0, S))
        ts += np.arange(S) * 1e-6  # strictly increasing
        vals = rng.uniform(-1.0, 1.0, (S, m))
        u = TimeProfile(times=ts, values=vals)
        k = float(rng.choice([0.5, 2.0, 10.0]))
        up = sup_convolution(u, k)
        lo = inf_convolution(u, k)
        ok = np.array_equal(up.values, _brute_sup_conv(u, k))
        ok &= np.all(up.values >= u.values) and np.all(lo.values <= u.values)
        gap = np.abs(ts[:, None] - ts[None, :])
        dup = np.abs(up.values[:, None, :] - up.values[None, :, :])
        ok &= bool(np.all(dup <= k * gap[:, :, None] + 1e-12))
        ok &= bool(np.all(up.values >= sup_convolution(u, 2.0 * k).values
                          - 1e-15))
        ok &= np.array_equal(
            sup_convolution(TimeProfile(ts, -vals), k).values, -lo.values)
        failures += int(not ok)
    report(capsys, 5, failures == 0,
           f"{failures} failures over 100 random profiles "
           "(oracle equality, sandwich, Lipschitz, monotone, duality)")


TIME_INDEPENDENT = ("stationary", "tilted", "monotone_forcing", "kinked_log")


def test_criterion_06_time_lipschitz(corpus_trajs, manufactured_runs, capsys):
    details = []
    ok = True
    for name in TIME_INDEPENDENT:
        entry = corpus_trajs[name]
        sch = entry["scheme"]
        ipts = sch.grid.pos[sch.grid.interior]
        CF = max(float(np.max(np.abs(np.asarray(
            entry["data"].F(0.0, ipts, s.values[sch.grid.interior]), float))))
            for s in entry["traj"].snapshots)
        rep = time_lipschitz_bound(entry["traj"], entry["data"], C0=CF, CM=CF,
                                   n=sch.n, tol=10.0 * sch.h)
        ok &= rep["violations"] == 0
        details.append(f"{name}: {rep['violations']}/{rep['n_pairs']}")
    traj = manufactured_runs[(1, 0.05)]["traj"]
    vals = np.stack([s.values for s in traj.snapshots])
    ts = traj.times
    q = max(float(np.max(np.abs(vals[i + 1] - vals[i]))) / (ts[i + 1] - ts[i])
            for i in range(ts.size - 1))
    ok &= abs(q - 1.0) <= 0.05
    details.append(f"manufactured quotient {q:.4f} (1.0 +- 0.05)")
    report(capsys, 6, ok, "; ".join(details))


def test_criterion_07_holder_moduli(sch1, capsys):
    data, ex = holder_ramp(1)
    traj = solve(data, sch1, SolverConfig(T=1.0, snapshot_dt=0.02))
    h = sch1.h
    diam = float(np.max(sch1.grid.dom.box[:, 1] - sch1.grid.dom.box[:, 0]))
    window = (4.0 * h, diam / 4.0)
    rt = holder_modulus(traj, "time", target=ex["alpha"], slack=0.15,
                        window=window)
    rs = holder_modulus(traj, "space", target=ex["beta"], slack=0.15,
                        window=window)
    ok = rt.passed and rs.passed
    report(capsys, 7, ok,
           f"time exponent {rt.exponent:.3f} (>= {0.85 * ex['alpha']:.3f}), "
           f"space exponent {rs.exponent:.3f} (>= {0.85 * ex['beta']:.3f}) "
           f"on window [{window[0]:g}, {window[1]:g}]")


def test_criterion_08_admissibility(sch1, sch1c, corpus_trajs, capsys):
    details = []
    ok = True
    # (a) zero mass on the density zero set always yields a witness
    for name in ("manufactured", "stationary", "tilted"):
        data, _ = LIPSCHITZ_PROBLEMS[name](1)
        u0 = sch1c.sample(data.u0)
        f0 = lambda pts, d=data: d.f(0.0, pts)
        mass = zero_set_mass(u0, f0, sch1c)
        witnessed = False
        if mass == 0.0:
            w = find_witness(u0, f0, 0.5, sch1c)
            witnessed = verify_witness(w, u0, f0, sch1c)["ok"]
        ok &= (mass == 0.0 and witnessed)
    details.append("zero-mass problems witnessed: 3/3")
    # (b) kinked log via the shifted family
    kdata, kex = kinked_log(1)
    kw = kinked_log_witness(0.4, sch1)
    krep = verify_witness(kw, sch1.sample(kdata.u0), kex["f0"], sch1)
    ok &= krep["ok"] and kw.C_eps > 0.0
    details.append(f"kinked-log shifted witness C={kw.C_eps:.2f}")
    # (c) necessity: solved snapshots of time-independent problems stay
    # admissible against their own density
    n_nec = 0
    for name in ("stationary", "tilted", "monotone_forcing"):
        entry = corpus_trajs[name]
        sch = entry["scheme"]
        f0 = lambda pts, d=entry["data"]: d.f(0.0, pts)
        for t in (0.5, 1.0):
            ut = entry["traj"].at(t)
            w = find_witness(ut, f0, 0.5, sch)
            ok &= verify_witness(w, ut, f0, sch)["ok"]
            n_nec += 1
    details.append(f"necessity on {n_nec} snapshots")
    # (d) gluing two local witnesses verifies with the widened gap
    u0 = sch1.sample(abs2)
    f1 = lambda pts: np.ones(np.atleast_2d(pts).shape[0])
    base = find_witness(u0, f1, 0.4, sch1)
    centers = np.array([[-0.3, 0.0], [0.3, 0.0]])
    radii = [0.85, 0.85]
    locs = [AdmissibilityWitness(base.eps, base.u_eps.copy(), base.C_eps)
            for _ in range(2)]
    glued = glue_local_witnesses(u0, lambda p: abs2(p), f1, locs, centers,
                                 radii, sch1, 0.4, collar_r=0.25)
    grep = verify_witness(glued, u0, f1, sch1, tol_bracket=1e-6)
    bound = eps_prime_bound(locs, radii, sch1, 0.4)
    ok &= (grep["bracket_low"] >= -1e-6
           and grep["ma_excess"] <= grep["tol_adm"]
           and glued.eps <= bound)
    details.append(f"glued eps'={glued.eps:.3f} <= bound {bound:.3f}")
    report(capsys, 8, ok, "; ".join(details))


def test_criterion_09_gkz_ladder(sch1, sch2c, capsys):
    details = []
    ok = True
    for sch in (sch1, sch2c):
        rep = el.gkz_stability_probe(sch, [1.0, 0.1, 0.01])
        tol = 10.0 * sch.h
        devs = [abs(a - b) for a, b in zip(rep["sup_u"], rep["radial_ref"])]
        ok &= max(devs) <= tol and rep["monotone_decreasing"]
        details.append(f"n={sch.n}: max dev {max(devs):.2e} (tol {tol:g}), "
                       f"monotone={rep['monotone_decreasing']}")
    report(capsys, 9, ok, "; ".join(details))


def test_criterion_10_long_time_convergence(sch1c, capsys):
    data, ex = decaying_to_elliptic(1, T=8.0)
    t0 = time.perf_counter()
    rep = el.long_time_convergence(data, ex["limit"], sch1c,
                                   SolverConfig(T=8.0, snapshot_dt=0.25),
                                   el.EllipticConfig(), burn_in=1.0)
    elapsed = time.perf_counter() - t0
    target = math.exp(-8.0) + 10.0 * sch1c.h
    ok = (rep["e_final"] <= target and rep["monotone_after_burn_in"]
          and elapsed <= 300.0)
    report(capsys, 10, ok,
           f"e(8)={rep['e_final']:.2e} (target {target:.4f}), "
           f"monotone after t>=1: {rep['monotone_after_burn_in']}, "
           f"{elapsed:.0f}s (<=300s)")


def test_criterion_11_removability(sch1c, capsys):
    details = []
    ok = True
    cfg = SolverConfig(T=1.0, snapshot_dt=0.25)
    for name in ("manufactured", "stationary", "monotone_forcing"):
        data, _ = LIPSCHITZ_PROBLEMS[name](1)
        rep = removability_test(data, S=0.5, T=1.0, scheme=sch1c, cfg=cfg)
        ok &= rep["ok"]
        details.append(f"{name}: seam {rep['seam_diff']:.2e} "
                       f"(tol {rep['tol_seam']:g})")
    report(capsys, 11, ok, "; ".join(details))


def test_criterion_12_density_superbarrier(sch1c, capsys):
    data, ex = linear_density(1, T=1.0)
    ts = np.linspace(0.05, 0.95, 9)
    rep = supersolution_sweep(ex["superbarrier"], data, sch1c, ts,
                              tol_visc=10.0 * sch1c.h)
    report(capsys, 12, rep.ok,
           f"supersolution sweep defect {rep.max_defect:+.3f} "
           f"(tol {rep.tol:g}) over {rep.n_times} times")
