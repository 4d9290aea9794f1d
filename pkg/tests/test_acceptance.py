"""End-to-end acceptance criteria.

Each test prints a single PASS/FAIL line with the measured quantity so a
full run doubles as a quick scoreboard: pytest -v -s tests/test_acceptance.py
"""

import math
import time

import numpy as np
import pytest

from fracstab import (
    AdaptiveScenario,
    Signal,
    SystemSpec,
    asymptotic_verdict,
    build_error_model_2,
    c_of_alpha_A,
    destabilizing_benchmark,
    lp_fixed_point,
    ml_scalar,
    ml_series_reference,
    pe_estimate,
    q_certificate,
    run_scenario,
    sector_classify,
    small_gain,
    solve_ivp,
)


def report(crit, ok, detail):
    print(f"criterion {crit}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_01_ml_identities():
    t0 = time.perf_counter()
    xs = np.linspace(-5.0, 5.0, 100)
    err_exp = max(
        abs(ml_scalar(1.0, 1.0, x) - math.exp(x)) / math.exp(x) for x in xs
    )
    err_cos = max(
        abs(ml_scalar(2.0, 1.0, -x * x) - math.cos(x))
        for x in np.linspace(0.0, 10.0, 100)
    )
    dt = time.perf_counter() - t0
    ok = err_exp <= 1e-10 and err_cos <= 1e-8 and dt < 1.0
    report(1, ok, f"exp rel {err_exp:.2e}, cos abs {err_cos:.2e}, {dt:.2f}s")


def test_criterion_02_golden_oracle():
    triples = [
        (0.3, 1.0, -3.0), (0.3, 0.3, -3.0), (0.3, 2.0, -4.0), (0.3, 0.8, -2.0 + 1.0j),
        (0.5, 1.0, -10.0), (0.5, 0.5, 4.0), (0.5, 1.5, -10.0 + 3.0j), (0.5, 1.0, -16.0),
        (0.8, 0.8, -50.0 + 3.0j), (0.8, 1.0, -50.0), (0.8, 1.3, 20.0), (0.8, 0.5, -30.0),
        (1.2, 1.0, -100.0), (1.2, 1.2, -100.0 + 10.0j), (1.2, 0.9, 30.0), (1.2, 2.2, -60.0),
        (1.7, 1.7, -500.0), (1.7, 1.0, -500.0 + 50.0j), (1.7, 2.5, 100.0), (1.7, 1.4, -200.0),
    ]
    t0 = time.perf_counter()
    worst = 0.0
    for a, b, z in triples:
        ref = ml_series_reference(a, b, z)
        got = ml_scalar(a, b, z)
        worst = max(worst, abs(got - ref) / abs(ref))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 10.0
    report(2, ok, f"{len(triples)} triples, worst rel {worst:.2e}, {dt:.2f}s")


def test_criterion_03_solver_order():
    alpha = 0.6
    spec = SystemSpec(orders=[alpha], A=[[-1.0]], x0=[1.0])
    exact = ml_scalar(alpha, 1.0, -(5.0**alpha)).real
    errs = []
    for h in (1e-2, 5e-3):
        traj = solve_ivp(spec, t_end=5.0, step=h)
        errs.append(abs(traj.values[-1, 0] - exact))
    ratio = errs[0] / errs[1]
    target = 2.0 ** (1.0 + alpha)
    ok = 0.8 * target <= ratio <= 1.2 * target
    report(3, ok, f"error ratio {ratio:.3f} vs 2^1.6 = {target:.3f}")


def test_criterion_04_closed_form_c():
    worst = 0.0
    for a in (0.3, 0.6, 0.9, 1.0):
        worst = max(worst, abs(c_of_alpha_A(a, [[-1.0]]).value - 1.0))
    ok1 = worst <= 1e-4
    err2 = abs(c_of_alpha_A(1.0, [[-2.0]]).value - 0.5)
    ok = ok1 and err2 <= 1e-6
    report(4, ok, f"C(a,-1) worst err {worst:.2e}, C(1,-2) err {err2:.2e}")


def _certified_2x2_spec(nu):
    return SystemSpec(
        orders=[0.7, 0.7],
        A=-np.eye(2),
        Q=Signal.closed_form("sin", coeff=0.3 * np.eye(2)),
        nu=nu,
        x0=[0.4, 0.4],
    )


def test_criterion_05_certified_perturbed_system():
    t0 = time.perf_counter()
    qres = q_certificate(
        0.7, -np.eye(2), Signal.closed_form("sin", coeff=0.3 * np.eye(2)),
        horizon=100.0,
    )
    nu_decay = Signal.closed_form("exp", coeff=np.ones(2), rate=-1.0)
    v1 = asymptotic_verdict(
        solve_ivp(_certified_2x2_spec(nu_decay), t_end=200.0, step=1e-2),
        tol_zero=1e-2,
    )
    v2 = asymptotic_verdict(
        solve_ivp(_certified_2x2_spec(Signal.constant(np.full(2, 0.5))),
                  t_end=200.0, step=1e-2)
    )
    dt = time.perf_counter() - t0
    ok = qres.satisfied and v1 == "converges_to_zero" and v2 == "bounded" and dt < 30.0
    report(5, ok, f"q {qres.q:.3f}, decaying-nu {v1}, constant-nu {v2}, {dt:.1f}s")


def test_criterion_06_high_order_representation():
    x0, xd0 = 1.0, 0.1
    spec = SystemSpec(orders=[1.5], A=[[-1.0]], x0=[x0], xdot0=[xd0])
    traj = solve_ivp(spec, t_end=20.0, step=5e-3)
    want = np.array(
        [
            x0 * ml_scalar(1.5, 1.0, -(t**1.5)).real
            + xd0 * t * ml_scalar(1.5, 2.0, -(t**1.5)).real
            for t in traj.grid
        ]
    )
    sup = float(np.max(np.abs(traj.values[:, 0] - want)))
    verdict = asymptotic_verdict(
        solve_ivp(spec, t_end=200.0, step=2e-2)
    )
    ok = sup <= 1e-3 and verdict == "converges_to_zero"
    report(6, ok, f"sup err {sup:.2e} on [0,20], verdict {verdict}")


def test_criterion_07_instability():
    f = lambda x: 0.1 * x**2
    unstable = SystemSpec(
        orders=[0.5], A=[[1.0]], f=f, lipschitz=(1.0, 0.2), x0=[1e-3]
    )
    traj = solve_ivp(unstable, t_end=50.0, step=1e-2)
    diverged_early = traj.diverged and traj.grid[-1] < 50.0
    stable = SystemSpec(
        orders=[0.5], A=[[-1.0]], f=f, lipschitz=(1.0, 0.2), x0=[1e-3]
    )
    v = asymptotic_verdict(
        solve_ivp(stable, t_end=50.0, step=1e-2), tol_zero=1e-3
    )
    ok = diverged_early and v == "converges_to_zero"
    report(
        7, ok,
        f"diverged at t = {traj.grid[-1]:.2f}, stable twin {v}",
    )


def test_criterion_08_switching():
    segs = []
    for k in range(24):
        val = 0.2 if k % 2 == 0 else -0.2
        segs.append((5.0 * k, 5.0 * (k + 1), Signal.constant(val)))
    Q = Signal.piecewise(segs)
    qres = q_certificate(0.7, [[-1.0]], Q, horizon=120.0)
    spec = SystemSpec(orders=[0.7], A=[[-1.0]], Q=Q, x0=[0.25])
    traj = solve_ivp(spec, t_end=120.0, step=1e-2)
    # no jump at a switch: the increment straddling it stays within 10x
    # the local increments produced by the new dynamics just after it
    jumps = np.abs(np.diff(traj.values[:, 0]))
    cont = True
    for s in range(5, 120, 5):
        i = int(np.argmin(np.abs(traj.grid - s)))
        local = np.median(jumps[i + 1 : i + 20]) + 1e-15
        cont = cont and np.max(jumps[i - 1 : i + 1]) < 10.0 * local
    verdict = asymptotic_verdict(traj)
    ok = qres.satisfied and cont and verdict == "converges_to_zero"
    report(8, ok, f"q {qres.q:.3f}, continuous {cont}, verdict {verdict}")


def test_criterion_09_mixed_orders():
    spec = SystemSpec(
        orders=[0.6, 1.2],
        A=[[-1.0, 0.1], [0.0, -2.0]],
        x0=[1.0, 1.0],
        xdot0=[0.0, 0.0],
    )
    verdict = asymptotic_verdict(solve_ivp(spec, t_end=1000.0, step=5e-2))
    diag = SystemSpec(
        orders=[0.6, 1.2],
        A=np.diag([-1.0, -2.0]),
        x0=[1.0, 1.0],
        xdot0=[0.0, 0.0],
    )
    traj = solve_ivp(diag, t_end=10.0, step=2e-3)
    worst = 0.0
    for i, (a, lam) in enumerate([(0.6, -1.0), (1.2, -2.0)]):
        want = np.array(
            [ml_scalar(a, 1.0, lam * t**a).real for t in traj.grid]
        )
        worst = max(worst, float(np.max(np.abs(traj.component(i) - want))))
    ok = verdict == "converges_to_zero" and worst <= 1e-3
    report(9, ok, f"verdict {verdict}, diagonal vs ml err {worst:.2e}")


def test_criterion_10_oracle_equivalence():
    Q = Signal.closed_form("sin", coeff=0.3 * np.eye(2))
    spec = SystemSpec(
        orders=[0.7, 0.7], A=-np.eye(2), Q=Q,
        nu=Signal.closed_form("exp", coeff=np.ones(2), rate=-1.0),
        x0=[0.4, 0.4],
    )
    lp, mu = lp_fixed_point(spec, t_end=10.0, grid_n=2000)
    abm = solve_ivp(spec, t_end=10.0, step=2e-3)
    diff = 0.0
    for c in range(2):
        interp = np.interp(lp.grid, abm.grid, abm.values[:, c])
        diff = max(diff, float(np.max(np.abs(lp.values[:, c] - interp))))
    q = q_certificate(0.7, -np.eye(2), Q, horizon=100.0).q
    ok = diff <= 5e-3 and mu < 1.0 and mu <= q + 0.05
    report(10, ok, f"sup diff {diff:.2e}, mu {mu:.3f} vs q {q:.3f}")


def test_criterion_11_adaptive_type1():
    scn = AdaptiveScenario(
        model="type-I", w=Signal.closed_form("sin"), alpha=(0.8,),
        phi0=1.0, horizon=200.0, step=2e-2,
    )
    rep = run_scenario(scn)
    e1 = abs(rep.e_values[-1])
    p1 = float(np.linalg.norm(rep.trajectory.values[-1]))
    w2 = Signal.from_callable(
        lambda t: np.array([math.sin(t), math.cos(t)]),
        shape=(2,),
        declared_bound=1.0,
    )
    scn2 = AdaptiveScenario(
        model="type-I", w=w2, alpha=(0.7, 1.2), phi0=0.5,
        horizon=200.0, step=2e-2,
    )
    rep2 = run_scenario(scn2)
    e2 = abs(rep2.e_values[-1])
    p2 = float(np.linalg.norm(rep2.trajectory.values[-1]))
    ok = max(e1, p1, e2, p2) < 1e-2
    report(
        11, ok,
        f"scalar |e| {e1:.2e} ||phi|| {p1:.2e}; mixed |e| {e2:.2e} ||phi|| {p2:.2e}",
    )


def test_criterion_12_destabilizing_benchmark():
    res = destabilizing_benchmark(1.0, phi0=0.0, t_end=9.0, step=1e-3)
    err_phi = float(np.max(np.abs(res.trajectory.values[:, 0] - res.exact)))
    err_e = abs(res.e_values[-1] - 28.0 ** (-1.0 / 3.0))
    res06 = destabilizing_benchmark(0.6, phi0=0.0, t_end=8e4, step=2.0)
    phi = res06.trajectory.values[:, 0]
    frac_ok = (
        bool(np.all(np.diff(phi) < 0.0))
        and phi[-1] < -10.0
        and abs(res06.e_values[-1]) < 1e-1
    )
    ok = err_phi <= 1e-4 and err_e <= 1e-4 and frac_ok
    report(
        12, ok,
        f"phi err {err_phi:.2e}, e(9) err {err_e:.2e}; "
        f"alpha=0.6 phi(end) {phi[-1]:.2f}, |e| {abs(res06.e_values[-1]):.3f}",
    )


def test_criterion_13_error_model_2():
    scn = AdaptiveScenario(
        model="type-II", w=Signal.constant(2.0), alpha=(0.9,), beta=(0.9,),
        A=[[-1.0]], phi0=0.5, e0=0.5, horizon=100.0, step=1e-2,
    )
    spec = build_error_model_2(scn)
    lam = np.linalg.eigvals(spec.split["Lambda"])
    roots = np.roots([1.0, 1.0, 4.0])
    sector = sector_classify(0.9, spec.split["Lambda"])
    rep = run_scenario(scn)
    scn2 = AdaptiveScenario(
        model="type-II",
        w=Signal.closed_form("sin", coeff=0.05, offset=2.0),
        alpha=(0.9,), beta=(0.9,), A=[[-1.0]], phi0=0.5, e0=0.5,
        horizon=100.0, step=1e-2,
    )
    rep2 = run_scenario(scn2)
    ok = (
        np.allclose(sorted(lam.real), sorted(roots.real), atol=1e-12)
        and sector.stable
        and rep.verdict_phi == "converges_to_zero"
        and rep2.small_gain is not None
        and rep2.small_gain.satisfied
        and rep2.verdict_phi == "converges_to_zero"
    )
    report(
        13, ok,
        f"sector {sector.overall}, nominal {rep.verdict_phi}, "
        f"perturbed small-gain {rep2.small_gain.satisfied} {rep2.verdict_phi}",
    )


def test_criterion_14_non_flow_property():
    def restart_diff(alpha):
        s, t_end, h = 1.0, 2.0, 5e-3
        spec = SystemSpec(orders=[alpha], A=[[-1.0]], x0=[1.0])
        full = solve_ivp(spec, t_end, h, corrector_iters=4)
        i = int(np.searchsorted(full.grid, s))
        xs = full.values[i, 0]
        re = solve_ivp(
            SystemSpec(orders=[alpha], A=[[-1.0]], x0=[xs]),
            t_end - s, h, corrector_iters=4,
        )
        return abs(full.values[-1, 0] - re.values[-1, 0])

    d_half = restart_diff(0.5)
    d_one = restart_diff(1.0)
    ok = d_half > 1e-3 and d_one < 1e-8
    report(14, ok, f"restart diff alpha=0.5: {d_half:.3f}, alpha=1: {d_one:.2e}")


def test_criterion_15_pe_estimator():
    w = Signal.from_callable(
        lambda t: np.array([math.sin(t), math.cos(t)]),
        shape=(2,),
        declared_bound=1.0,
    )
    res = pe_estimate(w, [2.0 * math.pi], horizon=30.0)
    err = abs(res.epsilon - 0.5)
    dec = pe_estimate(
        Signal.closed_form("exp", rate=-1.0), [math.pi, 5.0], horizon=40.0
    )
    ok = res.pe and err <= 1e-3 and not dec.pe
    report(15, ok, f"epsilon {res.epsilon:.5f} (err {err:.1e}), decaying pe {dec.pe}")
