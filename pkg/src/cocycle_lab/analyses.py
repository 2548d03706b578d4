"""Analysis runners behind the command line; each returns a verdict, a result dict and CSV tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import attractor as att
from . import contraction as con
from . import recurrence as rec
from .base_flow import BaseFlow, advance, orbit_array, wrap
from .cocycle import CocycleDef, Trajectory, evolve, step
from .discretize import IntegratorConfig, integrate_unit
from .errors import CocycleLabError, DiagnosticError, DomainError, NotDissipativeError, NumericOverflowError
from .scenarios import Scenario

ANALYSES = ("simulate", "discretize-check", "attractor", "almost-period", "section", "convergence", "wc2-report")


@dataclass
class Outcome:
    verdict: bool
    result: dict
    tables: dict = field(default_factory=dict)


@dataclass
class Context:
    scenario: Scenario
    cocycle: CocycleDef
    flow: BaseFlow
    y0: np.ndarray
    options: dict
    seed: int
    integrator: IntegratorConfig

    def opt(self, key, default=None):
        return self.options.get(key, default)

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# ---------------------------------------------------------------------------
# shared pieces


def reproduction_check(ctx: Context, steps: int, factor: float) -> dict:
    """Per-step defect of the known solution against ``factor`` times the integrator error.

    For explicit maps the integrator error is zero and a floor of 1e-12
    absorbs rounding. The multi-step drift of an evolution started on the
    solution is reported alongside, since an unstable solution can be
    reproduced step by step yet drift away over many steps.
    """
    ref = ctx.scenario.reference_solution
    if ref is None:
        raise DomainError(f"scenario {ctx.scenario.name!r} has no known reference solution")
    orbit = orbit_array(ctx.flow, ctx.y0, 0, steps)
    g = np.array([np.atleast_1d(ref(y)) for y in orbit])
    continuous = ctx.cocycle.kind != "explicit-map"
    fine_cfg = IntegratorConfig(ctx.integrator.probe_steps) if continuous else None
    ratio = (ctx.integrator.probe_steps / ctx.integrator.steps_per_unit) ** 4 if continuous else 0.0
    defects, estimates = np.empty(steps), np.empty(steps)
    for j in range(steps):
        coarse = step(ctx.cocycle, orbit[j], g[j])
        defects[j] = np.linalg.norm(coarse - g[j + 1])
        if continuous:
            fine = integrate_unit(ctx.cocycle.flow_field, ctx.flow, orbit[j], g[j], fine_cfg)
            estimates[j] = np.linalg.norm(coarse - fine) * ratio / (ratio - 1.0)
        else:
            estimates[j] = 0.0
    allowed = factor * estimates + 1e-12
    ok = defects <= allowed
    traj = evolve(ctx.cocycle, ctx.flow, ctx.y0, g[0], steps)
    drift = np.linalg.norm(traj.states - g, axis=1)
    first_bad = int(np.nonzero(~ok)[0][0]) if not ok.all() else None
    return {
        "verdict": bool(ok.all()), "steps": steps, "factor": factor,
        "max_defect": float(defects.max()), "max_error_estimate": float(estimates.max()),
        "max_defect_ratio": float(np.max(defects / np.maximum(estimates, 1e-300))) if continuous else None,
        "first_failing_step": first_bad, "max_drift_from_solution": float(drift.max()),
        "_table": (["j", "defect", "error_estimate", "drift"],
                   [[j, float(defects[j]), float(estimates[j]), float(drift[j + 1])] for j in range(steps)]),
    }


def _probe(ctx: Context, init_radii=None, horizon=None, burn_in=None) -> att.DissipativityReport:
    samples = ctx.opt("fiber_samples") or [ctx.y0]
    return att.dissipativity_probe(ctx.cocycle, ctx.flow, samples,
                                   init_radii or ctx.opt("init_radii", [5.0]),
                                   horizon or ctx.opt("horizon", 200), burn_in if burn_in is not None
                                   else ctx.opt("burn_in", 50),
                                   points_per_axis=ctx.opt("probe_points_per_axis", 5))


def _grid(ctx: Context, radius: float) -> att.GridSpec:
    center = None
    if ctx.opt("grid_center", "origin") == "reference":
        if ctx.scenario.reference_solution is None:
            raise DomainError("grid_center='reference' needs a scenario with a reference solution")
        center = ctx.scenario.reference_solution
    return att.GridSpec(float(ctx.opt("grid_radius", radius)), ctx.opt("grid_points_per_axis", 11), center)


def _trajectory_table(traj: Trajectory):
    return traj.to_rows()


# ---------------------------------------------------------------------------
# analyses


def run_simulate(ctx: Context) -> Outcome:
    u0 = np.asarray(ctx.opt("u0", [0.0] * ctx.cocycle.fiber_dim), dtype=float)
    steps = ctx.opt("steps", 100)
    try:
        traj = evolve(ctx.cocycle, ctx.flow, ctx.y0, u0, steps)
    except NumericOverflowError as err:
        return Outcome(False, {"status": "overflow", "t": err.t, "message": str(err)})
    return Outcome(True, {"status": "ok", "steps": steps, "final_state": traj.last,
                          "final_base": traj.base_orbit[-1], "max_norm": float(np.max(np.linalg.norm(traj.states, axis=1)))},
                   {"trajectory.csv": _trajectory_table(traj)})


def run_discretize_check(ctx: Context) -> Outcome:
    rep = reproduction_check(ctx, ctx.opt("defect_steps", 100), ctx.opt("defect_factor", 10.0))
    table = rep.pop("_table")
    ok = rep["verdict"]
    rep["verdict"] = "PASS" if ok else "FAIL"
    rep["integrator"] = ctx.integrator.to_dict()
    return Outcome(ok, rep, {"defects.csv": table})


def run_attractor(ctx: Context) -> Outcome:
    probe = _probe(ctx)
    result = {"dissipativity": probe.to_dict()}
    if not probe.dissipative:
        result["verdict"] = "NOT-DISSIPATIVE"
        return Outcome(False, result)
    try:
        est = att.levinson_center(ctx.cocycle, ctx.flow, ctx.y0, ctx.opt("fiber_count", 2),
                                  _grid(ctx, probe.radius), ctx.opt("T_list", [40, 80]),
                                  ctx.opt("merge_tol", att.DEFAULT_MERGE_TOL), radius_bound=probe.radius)
    except NotDissipativeError as err:
        result.update(verdict="NOT-DISSIPATIVE", failure=str(err))
        return Outcome(False, result)
    result["attractor"] = est.to_dict()
    verdict = True
    if len(est.fibers) >= 2:
        inv = att.check_invariance(est, ctx.cocycle, ctx.flow)
        tol = ctx.opt("invariance_tol", 1e-6)
        result["invariance"] = {**inv.to_dict(), "tol": tol}
        verdict = inv.max_residual <= tol
    result["verdict"] = "PASS" if verdict else "FAIL"
    return Outcome(verdict, result, {"attractor.csv": est.csv_rows()})


def _ap_trajectory(ctx: Context, N: int) -> Trajectory:
    if ctx.opt("source", "reference") == "reference":
        ref = ctx.scenario.reference_solution
        if ref is None:
            raise DomainError(f"scenario {ctx.scenario.name!r} has no reference solution; use source='simulate'")
        return rec.sampled_trajectory(ctx.flow, ctx.y0, ref, -N, N)
    burn = ctx.opt("burn_in", 0)
    start = advance(ctx.flow, ctx.y0, -(N + burn))
    u0 = np.asarray(ctx.opt("u0", [0.0] * ctx.cocycle.fiber_dim), dtype=float)
    traj = evolve(ctx.cocycle, ctx.flow, start, u0, 2 * N + burn)
    return Trajectory(-N, traj.states[burn:], traj.base_orbit[burn:], meta={"source": "simulated"})


def run_almost_period(ctx: Context) -> Outcome:
    N = ctx.opt("N", 2000)
    traj = _ap_trajectory(ctx, N)
    rep = rec.almost_periods(traj, ctx.opt("eps", 0.35), (1, ctx.opt("scan_max", N // 2)))
    result = rep.to_dict()
    result["minimal_density_scale"] = rec.minimal_density_scale(rep)
    verdict = rep.relatively_dense
    if "L" in ctx.options:
        verdict = rec.relative_density(rep, ctx.opt("L"))
        result["L"] = ctx.opt("L")
        result["dense_at_L"] = verdict
    return Outcome(bool(verdict), result, {"periods.csv": rep.csv_rows()})


def _certificate(ctx: Context) -> con.ContractionCertificate:
    rng = ctx.rng
    samples = [ctx.y0] + [wrap(rng.random(ctx.flow.dim)) for _ in range(ctx.opt("base_samples", 8) - 1)]
    grid = att.GridSpec(ctx.opt("contraction_grid_radius", 5.0), ctx.opt("grid_points_per_axis", 11))
    return con.verify_contraction(ctx.cocycle, ctx.flow, grid, samples, ctx.opt("pairs", 64),
                                  seed=ctx.seed, margin=ctx.opt("margin", con.DEFAULT_MARGIN))


def run_section(ctx: Context) -> Outcome:
    cert = _certificate(ctx)
    tol = ctx.opt("tol", 1e-11)
    result = {"certificate": cert.to_dict()}
    if cert.kind != con.UNIFORM:
        result["verdict"] = "FAIL"
        result["reason"] = f"no uniform contraction certificate (kind {cert.kind})"
        return Outcome(False, result)
    est = con.solve_section(ctx.cocycle, ctx.flow, ctx.y0, ctx.opt("m", 200), tol,
                            ctx.opt("max_iter", 1000), certificate=cert)
    bound = tol * (1 + cert.alpha_hat) / (1 - cert.alpha_hat)
    verdict = est.residual <= bound
    result["section"] = est.to_dict()
    result["residual_bound"] = bound
    result["verdict"] = "PASS" if verdict else "FAIL"
    return Outcome(verdict, result, {"section.csv": est.csv_rows()})


def run_convergence(ctx: Context) -> Outcome:
    cert = _certificate(ctx)
    result = {"certificate": cert.to_dict()}
    verdict = cert.kind != con.VIOLATED
    rng = np.random.default_rng([ctx.seed, 1])
    steps = ctx.opt("separation_steps", 60)
    radius = ctx.opt("contraction_grid_radius", 5.0)
    seps = []
    for _ in range(ctx.opt("pairs", 8)):
        y = wrap(rng.random(ctx.flow.dim))
        u1 = rng.uniform(-radius, radius, ctx.cocycle.fiber_dim)
        u2 = rng.uniform(-radius, radius, ctx.cocycle.fiber_dim)
        entry = {"y": y, "u1": u1, "u2": u2}
        try:
            d = con.separation_decay(ctx.cocycle, ctx.flow, y, u1, u2, steps,
                                     certificate=cert if cert.kind != con.VIOLATED else None)
            entry.update(ok=True, d0=float(d[0]), d_final=float(d[-1]))
        except CocycleLabError as err:
            entry.update(ok=False, error=str(err))
            verdict = False
        seps.append(entry)
    result["separation"] = {"steps": steps, "pairs": seps}
    if "birkhoff_n" in ctx.options or "calN" in ctx.options:
        grid = att.GridSpec(radius, ctx.opt("grid_points_per_axis", 11)).points(ctx.cocycle.fiber_dim)

        def omega(y):
            return con.lipschitz_profile(ctx.cocycle, y, grid)

        n = ctx.opt("birkhoff_n", 1000)
        result["birkhoff"] = con.birkhoff_cauchy(omega, ctx.flow, ctx.y0, n)
        if "calN" in ctx.options and "nu" in ctx.options:
            pc = con.product_condition(omega, ctx.flow, ctx.y0, n, ctx.opt("calN"), ctx.opt("nu"))
            result["product_condition"] = pc.to_dict()
            verdict = verdict and pc.verdict
    result["verdict"] = "PASS" if verdict else "FAIL"
    return Outcome(verdict, result)


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NotDissipativeError:
        raise
    except CocycleLabError as err:
        raise DiagnosticError(f"stage '{name}' failed: {err}") from err


def wc2_report(ctx: Context) -> Outcome:
    """Composite check of the four properties claimed for the planar counterexample.

    dissipative:               absorbing radius from a |u|,|v| <= 5 grid, horizon 500
    weak_convergent:           attractor fibers contract to < tol after T steps
    nontrivial_fiber:          some fiber diameter > 10 * merge_tol
    almost_periodic_solution:  the distinguished solution is reproduced per step within
                               10x integrator error and its eps-almost periods are
                               relatively dense at scale L
    """
    lines, evidence, tables = {}, {}, {}
    probe = _stage("dissipativity_probe", _probe, ctx, ctx.opt("init_radii", [5.0]),
                   ctx.opt("horizon", 500), ctx.opt("burn_in", 100))
    lines["dissipative"] = probe.dissipative
    evidence["dissipative"] = probe.to_dict()
    if not probe.dissipative:
        for k in ("weak_convergent", "nontrivial_fiber", "almost_periodic_solution"):
            lines[k] = False
            evidence[k] = {"skipped": "system is not dissipative"}
        return _wc2_outcome(lines, evidence, tables)

    merge_tol = ctx.opt("merge_tol", att.DEFAULT_MERGE_TOL)
    try:
        est = _stage("levinson_center", att.levinson_center, ctx.cocycle, ctx.flow, ctx.y0,
                     ctx.opt("fiber_count", 2), _grid(ctx, probe.radius), ctx.opt("T_list", [50, 100]),
                     merge_tol, probe.radius)
    except NotDissipativeError as err:
        raise DiagnosticError(f"stage 'levinson_center' failed: {err}") from err
    tables["attractor.csv"] = est.csv_rows()

    try:
        weak = _stage("weak_convergence_probe", con.weak_convergence_probe, ctx.cocycle, ctx.flow, est,
                      ctx.opt("weak_horizon", 200), ctx.opt("weak_tol", 1e-2))
    except NotDissipativeError as err:
        raise DiagnosticError(f"stage 'weak_convergence_probe' failed: {err}") from err
    lines["weak_convergent"] = weak.verdict
    evidence["weak_convergent"] = weak.to_dict()

    diams = [f.diameter for f in est.fibers]
    lines["nontrivial_fiber"] = max(diams) > att.NONTRIVIAL_FACTOR * merge_tol
    evidence["nontrivial_fiber"] = {"diameters": diams, "threshold": att.NONTRIVIAL_FACTOR * merge_tol,
                                    "points": [len(f.points) for f in est.fibers],
                                    "cauchy_residuals": [f.cauchy_residual for f in est.fibers],
                                    "radius_bound": probe.radius}

    repro = _stage("reproduction", reproduction_check, ctx, ctx.opt("defect_steps", 100),
                   ctx.opt("defect_factor", 10.0))
    tables["defects.csv"] = repro.pop("_table")
    N = ctx.opt("N", 2000)
    traj = _stage("almost_periods", rec.sampled_trajectory, ctx.flow, ctx.y0,
                  ctx.scenario.reference_solution, -N, N)
    ap = _stage("almost_periods", rec.almost_periods, traj, ctx.opt("eps", 0.35), (1, ctx.opt("scan_max", N // 2)))
    L = ctx.opt("L", 55)
    dense = rec.relative_density(ap, L)
    tables["periods.csv"] = ap.csv_rows()
    lines["almost_periodic_solution"] = repro["verdict"] and dense
    evidence["almost_periodic_solution"] = {
        "reproduction": repro,
        "almost_periods": {**ap.to_dict(), "L": L, "dense_at_L": dense,
                           "minimal_density_scale": rec.minimal_density_scale(ap)},
    }
    return _wc2_outcome(lines, evidence, tables)


def _wc2_outcome(lines: dict, evidence: dict, tables: dict) -> Outcome:
    report = {k: {"status": "pass" if v else "fail", "evidence": evidence[k]} for k, v in lines.items()}
    verdict = all(lines.values())
    return Outcome(verdict, {"report": report, "verdict": "PASS" if verdict else "FAIL"}, tables)


RUNNERS = {
    "simulate": run_simulate,
    "discretize-check": run_discretize_check,
    "attractor": run_attractor,
    "almost-period": run_almost_period,
    "section": run_section,
    "convergence": run_convergence,
    "wc2-report": wc2_report,
}
