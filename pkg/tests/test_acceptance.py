"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in a summary section at the end of the pytest run.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from conftest import record_criterion

from cocycle_lab import scenarios
from cocycle_lab.attractor import GridSpec, check_invariance, levinson_center
from cocycle_lab.base_flow import GOLDEN_MEAN, TWO_PI, advance, golden_rotation
from cocycle_lab.cli import main, run
from cocycle_lab.cocycle import CocycleDef, evolve, evolve_rows
from cocycle_lab.contraction import (
    UNIFORM, birkhoff_cauchy, birkhoff_mu, product_condition, solve_section, verify_contraction,
)
from cocycle_lab.discretize import IntegratorConfig, integrate_unit
from cocycle_lab.recurrence import almost_periods, sampled_trajectory, sup_displacement

SEED = 20240611


def test_criterion_01_cocycle_identity():
    sc = scenarios.build("linear-ode")
    c, flow = sc.cocycle(IntegratorConfig(64)), sc.base
    rng = np.random.default_rng(SEED)
    n = 500
    Y = rng.random((n, 1))
    U = rng.uniform(-5, 5, (n, 1))
    s = rng.integers(0, 21, n)
    t = rng.integers(0, 21, n)
    t0 = time.perf_counter()
    whole = evolve_rows(c, flow, Y, U, 40)
    lhs = whole[s + t, np.arange(n)]
    mid = whole[t, np.arange(n)]
    # sigma(t, y) recomputed in one jump, not read off the stepped orbit
    Yt = np.array([advance(flow, y, k) for y, k in zip(Y, t)])
    rest = evolve_rows(c, flow, Yt, mid, 20)
    rhs = rest[s, np.arange(n)]
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(lhs - rhs)))
    ok = err <= 1e-9 and elapsed < 5.0
    record_criterion(1, "cocycle identity, 500 samples, s,t <= 20", ok, f"max error {err:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_02_separation_decay():
    lc = scenarios.build("linear-contraction", alpha=0.5, forcing="cos")
    rng = np.random.default_rng(SEED)
    lin_err = 0.0
    for _ in range(20):
        y = rng.random(1)
        u1, u2 = rng.uniform(-5, 5, 2)
        a = evolve(lc.cocycle(), lc.base, y, [u1], 40).states[:, 0]
        b = evolve(lc.cocycle(), lc.base, y, [u2], 40).states[:, 0]
        lin_err = max(lin_err, float(np.max(np.abs(np.abs(a - b) - 0.5 ** np.arange(41) * abs(u1 - u2)))))
    lin_ok = lin_err <= 1e-12

    tanh = scenarios.build("tanh-saturating", alpha=0.6, amplitude=1.0)
    planar = CocycleDef(fiber_dim=2, name="planar-sine",
                        fmap=lambda y, u: 0.45 * np.sin(u) + np.stack(
                            [np.cos(TWO_PI * np.asarray(y)[..., 0]), np.full(np.shape(y)[:-1], 0.5)], -1))
    worst = 0.0
    kinds = []
    for c, flow, n in ((tanh.cocycle(), tanh.base, 1), (planar, golden_rotation(), 2)):
        cert = verify_contraction(c, flow, GridSpec(5.0, 11), [[0.0], [0.25], [0.5], [0.75]], 200, seed=SEED)
        kinds.append(cert.kind)
        for _ in range(25):
            y = rng.random(1)
            u1, u2 = rng.uniform(-5, 5, n), rng.uniform(-5, 5, n)
            a = evolve(c, flow, y, u1, 60).states
            b = evolve(c, flow, y, u2, 60).states
            d = np.linalg.norm(a - b, axis=1)
            bound = cert.alpha_hat ** np.arange(61) * d[0] * (1 + 1e-9)
            worst = max(worst, float(np.max(d / bound)))
    nl_ok = all(k == UNIFORM for k in kinds) and worst <= 1.0
    record_criterion(2, "separation decay", lin_ok and nl_ok,
                     f"linear |d_n - 0.5^n d_0| max {lin_err:.1e}; nonlinear certificates {kinds}, "
                     f"max d_n / (alpha_hat^n d_0 (1+1e-9)) = {worst:.3f}")
    assert lin_ok and nl_ok


def _series(y, terms=60):
    return math.fsum(0.5 ** (k - 1) * math.cos(TWO_PI * (y - k * GOLDEN_MEAN)) for k in range(1, terms + 1))


def test_criterion_03_section_solver():
    lc = scenarios.build("linear-contraction", alpha=0.5, forcing="cos")
    c, flow = lc.cocycle(), lc.base
    t0 = time.perf_counter()
    cert = verify_contraction(c, flow, GridSpec(5.0), [[0.1], [0.6]], 64, seed=SEED)
    est = solve_section(c, flow, [0.0], 200, 1e-11, certificate=cert)
    elapsed = time.perf_counter() - t0
    oracle = np.array([_series(y[0]) for y in est.orbit])
    err = float(np.max(np.abs(est.values[:, 0] - oracle)))
    ok = err <= 1e-8 and est.residual <= 1e-10 and est.iterations <= 60 and elapsed < 2.0
    record_criterion(3, "invariant section on 200 orbit points", ok,
                     f"oracle error {err:.1e}, residual {est.residual:.1e}, {est.iterations} iterations, "
                     f"{elapsed:.2f} s")
    assert ok


def test_criterion_04_forward_convergence():
    lc = scenarios.build("linear-contraction", alpha=0.5, forcing="cos")
    c, flow = lc.cocycle(), lc.base
    rng = np.random.default_rng(SEED)
    worst, worst_t, worst_gap, ulps = 0.0, 0, 0.0, 0.0
    for u in rng.uniform(-10, 10, 100):
        y = rng.random(1)
        g = lc.reference_solution(y)
        on = evolve(c, flow, y, g, 40).states[:, 0]
        off = evolve(c, flow, y, [u], 40).states[:, 0]
        d = np.abs(off - on)
        bound = 0.5 ** np.arange(41) * abs(u - g[0])
        ratio = d / (bound * (1 + 1e-9))
        k = int(np.argmax(ratio))
        if ratio[k] > worst:
            worst, worst_t = float(ratio[k]), k
            worst_gap = float(d[k] - bound[k])
            ulps = worst_gap / np.spacing(max(abs(on[k]), abs(off[k])))
    ok = worst <= 1.0
    record_criterion(4, "forward convergence to the section, t <= 40", ok,
                     f"max d_t / (0.5^t |u - gamma| (1+1e-9)) = {worst:.6f} at t={worst_t} "
                     f"(excess {worst_gap:.1e} = {ulps:.1f} ulps of the state)")
    assert ok


def test_criterion_05_discretizer_accuracy():
    sc = scenarios.build("linear-ode")
    rng = np.random.default_rng(SEED)

    def exact(t0, x0):
        p = lambda t: (math.cos(t) + math.sin(t)) / 2
        return (x0 - p(t0)) * math.exp(-1.0) + p(t0 + 1.0)

    err = {16: 0.0, 32: 0.0, 64: 0.0}
    for t0, x0 in zip(rng.uniform(0, TWO_PI, 30), rng.uniform(-3, 3, 30)):
        y = np.array([t0 / TWO_PI])
        for k in err:
            got = integrate_unit(sc.definition, sc.base, y, [x0], IntegratorConfig(k))[0]
            err[k] = max(err[k], abs(got - exact(t0, x0)))
    ratio = err[32] / err[64]
    ok = err[64] <= 1e-8 and ratio >= 8
    record_criterion(5, "RK4 unit map vs variation of constants", ok,
                     f"error {err[64]:.1e} at 64 steps, halving 32 -> 64 reduces error {ratio:.1f}x")
    assert ok


def test_criterion_06_pullback_attractor():
    lc = scenarios.build("linear-contraction", alpha=0.5, forcing="cos")
    c, flow = lc.cocycle(), lc.base
    est = levinson_center(c, flow, [0.0], 6, GridSpec(5.0), [40, 80])
    sizes = [len(f.points) for f in est.fibers]
    oracle_err = max(abs(f.points[0, 0] - lc.reference_solution(f.y)[0]) for f in est.fibers)
    cauchy = max(f.cauchy_residual for f in est.fibers)
    inv = check_invariance(est, c, flow).max_residual
    ok = set(sizes) == {1} and oracle_err <= 1e-6 and cauchy <= 1e-9 and inv <= 1e-6
    record_criterion(6, "pullback attractor of the linear contraction", ok,
                     f"fiber sizes {sizes}, oracle error {oracle_err:.1e}, Cauchy residual {cauchy:.1e}, "
                     f"invariance {inv:.1e}")
    assert ok


def test_criterion_07_almost_periods():
    flow = golden_rotation()
    traj = sampled_trajectory(flow, [0.0], lambda y: np.cos(TWO_PI * y), -2000, 2000)
    rep = almost_periods(traj, 0.35, (1, 1000))
    detected = 13 in rep.periods and 21 in rep.periods
    rng = np.random.default_rng(SEED)
    mono = sub = True
    for _ in range(50):
        N = int(rng.integers(150, 500))
        y0 = rng.random()
        eps = float(rng.uniform(0.05, 0.6))
        w = sampled_trajectory(flow, [y0], lambda y: np.cos(TWO_PI * y), -N, N)
        big = almost_periods(w, eps, (1, N // 2))
        small = almost_periods(w, eps * float(rng.uniform(0.3, 1.0)), (1, N // 2))
        mono &= set(small.periods) <= set(big.periods)
        ps = [p for p in big.periods if p <= N // 4][:5]
        for a in ps:
            for b in ps:
                sub &= sup_displacement(w, a + b) < 2 * eps
    ok = detected and mono and sub
    record_criterion(7, "golden-mean almost periods at eps=0.35, N=2000", ok,
                     f"first periods {rep.periods[:6]}, max gap {rep.max_gap}; monotone {mono}, "
                     f"subadditive {sub} on 50 windows")
    assert ok


def test_criterion_08_birkhoff_and_product_condition():
    flow = golden_rotation()

    def omega(y):
        return np.exp(0.2 * np.cos(TWO_PI * y[..., 0]) - 0.3)

    def omega_up(y):
        return np.exp(0.2 * np.cos(TWO_PI * y[..., 0]) + 0.3)

    mu = birkhoff_mu(omega, flow, [0.0], 10 ** 4)
    gap = birkhoff_cauchy(omega, flow, [0.0], 10 ** 4)["gap"]
    pc = product_condition(omega, flow, [0.0], 2000, math.exp(0.5), math.exp(-0.25))
    mu_up = birkhoff_mu(omega_up, flow, [0.0], 10 ** 4)
    pc_up = product_condition(omega_up, flow, [0.0], 2000, math.exp(0.5), math.exp(-0.25))
    consistent = (pc.verdict == (mu < 0)) and (pc_up.verdict == (mu_up < 0))
    ok = abs(mu + 0.3) <= 1e-3 and gap <= 5e-4 and consistent
    record_criterion(8, "Birkhoff average and product condition", ok,
                     f"mu = {mu:.6f}, Cauchy gap {gap:.1e}, product condition {pc.verdict} "
                     f"(worst ratio {pc.worst_ratio:.3f}); control mu = {mu_up:.3f} -> {pc_up.verdict}")
    assert ok


@pytest.fixture(scope="module")
def wc2_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("wc2")
    t0 = time.perf_counter()
    status, result = run({"scenario": "wc2", "analysis": "wc2-report", "seed": 0}, out)
    return status, result, time.perf_counter() - t0


def test_criterion_09_wc2_report(wc2_result):
    status, result, elapsed = wc2_result
    rep = result["report"]
    ev = rep["almost_periodic_solution"]["evidence"]
    repro, ap = ev["reproduction"], ev["almost_periods"]
    parts = {
        "dissipative": rep["dissipative"]["status"] == "pass",
        "weak_convergent": rep["weak_convergent"]["status"] == "pass",
        "nontrivial_fiber": rep["nontrivial_fiber"]["status"] == "pass",
        "reproduced_100_steps": repro["verdict"],
        "almost_periods_dense_L55": ap["dense_at_L"],
    }
    ok = all(parts.values()) and elapsed < 60
    detail = (f"{', '.join(f'{k}={v}' for k, v in parts.items())}; "
              f"r={rep['dissipative']['evidence']['radius']:.2f}, "
              f"weak spread {rep['weak_convergent']['evidence']['max_distance']:.2f} at T=200, "
              f"fiber diameters {[round(d, 2) for d in rep['nontrivial_fiber']['evidence']['diameters']]}, "
              f"defect/estimate <= {repro['max_defect_ratio']:.2f}, drift {repro['max_drift_from_solution']:.2f}, "
              f"eps-periods {ap['periods']} (max gap {ap['max_gap']}), {elapsed:.1f} s")
    record_criterion(9, "planar weak-convergent example report", ok, detail)
    assert ok


def test_criterion_10_negative_control(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "expanding", "params": {"alpha": 2}}))
    status = main(["attractor", "--config", str(cfg), "--out", str(tmp_path / "out")])
    verdict = json.loads((tmp_path / "out" / "result.json").read_text())["verdict"]
    ok = status == 1 and verdict == "NOT-DISSIPATIVE"
    record_criterion(10, "expanding control through the attractor pipeline", ok,
                     f"verdict {verdict}, exit {status}")
    assert ok
