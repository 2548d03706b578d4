"""Contraction certificates, invariant sections and convergence probes.

A uniformly contracting fiber map has a unique bounded entire solution,
the orbit of an invariant section ``gamma`` with
``gamma(sigma(1, y)) = f(y, gamma(y))``. On a finite anchor orbit
``y_j = sigma(j, y0)`` it is found as the fixed point of the pullback
operator ``(S eta)_j = f(y_{j-1}, eta_{j-1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .attractor import AttractorEstimate, GridSpec, _grid_at
from .base_flow import BaseFlow, as_base_point, orbit_array, orbit_distances
from .cocycle import CocycleDef, as_state, evolve, evolve_points, step
from .errors import BoundViolation, DomainError, NonConvergenceError, PreconditionError

UNIFORM = "uniform"
STRICT = "strict"
VIOLATED = "violated"

DEFAULT_MARGIN = 0.05
# quotients this close to 1 are indistinguishable from isometry in double precision
STRICT_SLACK = 1e-9
LOCAL_STEP = 1e-3
DECAY_SLACK = 1e-9
# separations below a few ulps of the states are rounding noise
ULP_FACTOR = 8.0
PRODUCT_READING = "product-form: |f(y,u1)-f(y,u2)| <= omega(y)|u1-u2|"


@dataclass
class ContractionCertificate:
    kind: str
    alpha_hat: float
    witness: dict
    sample_spec: dict
    margin: float = DEFAULT_MARGIN

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha_hat": self.alpha_hat, "witness": self.witness,
                "sample_spec": self.sample_spec, "margin": self.margin}


def _norm(X: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis without underflow for subnormal inputs."""
    m = np.max(np.abs(X), axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.linalg.norm(X / safe[..., None], axis=-1)


def _quotients(c: CocycleDef, y, U1: np.ndarray, U2: np.ndarray) -> np.ndarray:
    return _norm(step(c, y, U1) - step(c, y, U2)) / _norm(U1 - U2)


def _refine_local(c: CocycleDef, y, center: np.ndarray, step0: float, levels: int = 3):
    """Zoom in on the largest local quotient near ``center`` along each axis.

    Each level scans 21 centers within one previous step and pairs each with
    a point one tenth of that step away; the finest step is ``step0 / 10**levels``.
    """
    best, pair = -1.0, None
    for axis in range(c.fiber_dim):
        e = np.zeros(c.fiber_dim)
        e[axis] = 1.0
        mid, h = center.copy(), step0
        for _ in range(levels):
            mids = mid + np.outer(np.linspace(-h, h, 21), e)
            h /= 10.0
            U1, U2 = mids - 0.5 * h * e, mids + 0.5 * h * e
            q = _quotients(c, y, U1, U2)
            k = int(np.argmax(q))
            mid = mids[k]
            if q[k] > best:
                best, pair = float(q[k]), (U1[k], U2[k])
    return best, pair


def verify_contraction(c: CocycleDef, flow: BaseFlow, fiber_grid, base_samples, pair_count: int,
                       seed: int = 0, margin: float = DEFAULT_MARGIN,
                       local_step: float = LOCAL_STEP) -> ContractionCertificate:
    """Empirical Lipschitz constant of the fiber map over sampled pairs.

    At each base sample, ``pair_count`` random pairs of distinct grid points
    are drawn (numpy PCG64 seeded with ``seed``), and every grid point is
    also paired with its neighbours at distance ``local_step`` along each
    axis, which catches a sup approached only infinitesimally. The best
    local pair per base sample is then refined down to ``local_step / 1000``
    so a smooth sup is undershot by roughly ``1e-12`` instead of ``h**2``.
    The verdict is ``uniform`` if ``alpha_hat < 1 - margin``, ``strict``
    if every unrefined quotient stays below ``1 - 1e-9``, and ``violated``
    otherwise. Refined quotients near 1 sit within rounding of an isometry,
    so they sharpen ``alpha_hat`` but do not decide strictness.
    """
    if pair_count < 1:
        raise DomainError("pair_count must be at least 1")
    rng = np.random.default_rng(seed)
    best, coarse, witness = -1.0, -1.0, {}
    n_pairs = 0
    for y in base_samples:
        y = as_base_point(flow, y)
        G = _grid_at(fiber_grid, c.fiber_dim, y)
        if len(G) < 2 and local_step <= 0:
            raise DomainError("degenerate fiber grid: need at least two points")
        firsts, seconds = [], []
        if len(G) >= 2:
            i = rng.integers(0, len(G), size=pair_count)
            j = (i + rng.integers(1, len(G), size=pair_count)) % len(G)
            firsts.append(G[i])
            seconds.append(G[j])
        if local_step > 0:
            for axis in range(c.fiber_dim):
                e = np.zeros(c.fiber_dim)
                e[axis] = local_step
                firsts.append(G)
                seconds.append(G + e)
        U1, U2 = np.vstack(firsts), np.vstack(seconds)
        q = _quotients(c, y, U1, U2)
        n_pairs += len(q)
        k = int(np.argmax(q))
        qk, u1, u2 = float(q[k]), U1[k], U2[k]
        coarse = max(coarse, qk)
        if local_step > 0:
            rq, rpair = _refine_local(c, y, 0.5 * (U1[k] + U2[k]), local_step)
            n_pairs += 21 * 3 * c.fiber_dim
            if rq > qk:
                qk, (u1, u2) = rq, rpair
        if qk > best:
            best = qk
            witness = {"y": y.tolist(), "u1": u1.tolist(), "u2": u2.tolist(), "quotient": best}
    if best < 1.0 - margin:
        kind = UNIFORM
    elif coarse < 1.0 - STRICT_SLACK:
        kind = STRICT
    else:
        kind = VIOLATED
    spec = {"grid": fiber_grid.describe() if isinstance(fiber_grid, GridSpec) else "explicit",
            "base_samples": len(list(base_samples)), "pairs": n_pairs, "seed": seed,
            "local_step": local_step, "refined_to": local_step / 1000.0, "coarse_sup": coarse,
            "rng": "numpy PCG64"}
    return ContractionCertificate(kind, best, witness, spec, margin)


def witness_quotient(c: CocycleDef, cert: ContractionCertificate) -> float:
    """Re-evaluate the certificate's witness pair."""
    w = cert.witness
    return float(_quotients(c, np.asarray(w["y"]), np.asarray(w["u1"])[None], np.asarray(w["u2"])[None])[0])


def lipschitz_profile(c: CocycleDef, y, points, local_step: float = LOCAL_STEP) -> float:
    """Largest local difference quotient of ``f(y, .)`` over ``points``: an estimate of ``omega(y)``."""
    P = as_state(c, np.atleast_2d(points))
    qs = []
    for axis in range(c.fiber_dim):
        e = np.zeros(c.fiber_dim)
        e[axis] = local_step
        qs.append(_quotients(c, y, P, P + e))
    return float(np.max(qs))


def separation_decay(c: CocycleDef, flow: BaseFlow, y, u1, u2, N: int,
                     certificate: Optional[ContractionCertificate] = None) -> np.ndarray:
    """Separations ``d_n = |phi(n, u1, y) - phi(n, u2, y)|`` for ``n = 0..N``.

    With a uniform certificate the bound ``d_n <= alpha_hat^n d_0 (1 + 1e-9)``
    is enforced up to a rounding floor of ``8 (n + 1)`` ulps of the state
    magnitude; with a strict one, ``d_n`` must not grow beyond rounding
    while it is above that floor. Violations raise :class:`BoundViolation`.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    u1, u2 = as_state(c, u1), as_state(c, u2)
    if np.array_equal(u1, u2):
        raise DomainError("separation needs u1 != u2")
    a = evolve(c, flow, y, u1, N).states
    b = evolve(c, flow, y, u2, N).states
    d = _norm(a - b)
    scale = np.maximum(_norm(a), _norm(b))
    # subnormal spacing is absolute, so the floor never drops below it
    scale = np.maximum(scale, np.finfo(float).tiny)
    floor = ULP_FACTOR * np.finfo(float).eps * np.arange(1, N + 2) * scale
    if certificate is not None and certificate.kind == UNIFORM:
        bound = certificate.alpha_hat ** np.arange(N + 1) * d[0] * (1.0 + DECAY_SLACK) + floor
        bad = np.nonzero(d > bound)[0]
        if len(bad):
            n = int(bad[0])
            raise BoundViolation(f"d_{n} = {d[n]:.6g} exceeds alpha_hat^n d_0 = {bound[n]:.6g}")
    elif certificate is not None and certificate.kind == STRICT:
        for n in range(N):
            # tanh(u) == u below |u| ~ 1e-8, so equality is the finest decrease doubles can show
            if d[n] > floor[n] and d[n + 1] > d[n] * (1.0 + 4.0 * np.finfo(float).eps):
                raise BoundViolation(f"separation did not decrease at n={n}: {d[n]:.6g} -> {d[n + 1]:.6g}")
    return d


@dataclass
class SectionEstimate:
    y0: np.ndarray
    omega: np.ndarray
    orbit: np.ndarray
    values: np.ndarray
    residual: float
    iterations: int
    last_change: float
    tol: float
    alpha_hat: float
    extension: int
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.values)

    def evaluate(self, y) -> tuple[np.ndarray, float]:
        """Value at the nearest anchor-orbit point and the base distance to it."""
        d = orbit_distances(None, self.orbit, np.asarray(y, dtype=float))
        j = int(np.argmin(d))
        return self.values[j].copy(), float(d[j])

    def to_dict(self) -> dict:
        return {"y0": self.y0, "omega": self.omega, "values": self.values, "residual": self.residual,
                "iterations": self.iterations, "last_change": self.last_change, "tol": self.tol,
                "alpha_hat": self.alpha_hat, "extension": self.extension, **self.meta}

    def csv_rows(self):
        d = self.orbit.shape[1]
        n = self.values.shape[1]
        header = ["j"] + [f"y_{i + 1}" for i in range(d)] + [f"gamma_{i + 1}" for i in range(n)]
        rows = [[j, *map(float, y), *map(float, g)] for j, (y, g) in enumerate(zip(self.orbit, self.values))]
        return header, rows


def _step_along(c: CocycleDef, orbit: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.array([step(c, y, u) for y, u in zip(orbit, values)])


def pullback_operator(c: CocycleDef, flow: BaseFlow, orbit: np.ndarray, values: np.ndarray, k: int = 1) -> np.ndarray:
    """``(S^k eta)_j = phi(k, eta_{j-k}, y_{j-k})`` for ``j = k..L-1`` on a sampled orbit."""
    k = int(k)
    if not 1 <= k < len(values):
        raise DomainError(f"k must satisfy 1 <= k < {len(values)}")
    out = np.asarray(values[:-k], dtype=float)
    for i in range(k):
        out = _step_along(c, orbit[i:len(orbit) - k + i], out)
    return out


def section_residuals(c: CocycleDef, est: SectionEstimate) -> np.ndarray:
    """``|gamma_{j+1} - phi(1, gamma_j, y_j)|`` for ``j = 0..m-2``."""
    img = _step_along(c, est.orbit[:-1], est.values[:-1])
    return np.linalg.norm(est.values[1:] - img, axis=1)


def solve_section(c: CocycleDef, flow: BaseFlow, y0, m: int, tol: float = 1e-11,
                  max_iter: int = 1000, certificate: Optional[ContractionCertificate] = None) -> SectionEstimate:
    """Invariant section on ``y_j = sigma(j, y0)``, ``j = 0..m-1``, by iterating ``S`` from ``eta = 0``.

    The orbit is extended ``E = max(m, ceil(log tol / log alpha_hat))``
    steps into the past so that the frozen seed at the left edge is
    forgotten before the kept window. Iteration stops once the sup-change on
    the kept window is at most ``tol``.
    """
    if certificate is None or certificate.kind != UNIFORM or not certificate.alpha_hat < 1:
        raise PreconditionError("solve_section needs a uniform contraction certificate")
    if m < 2:
        raise DomainError("orbit length m must be at least 2")
    if not tol > 0:
        raise DomainError("tol must be positive")
    alpha = certificate.alpha_hat
    margin = math.ceil(math.log(tol) / math.log(alpha)) if alpha > 0 else 1
    E = max(int(m), margin)
    y0 = as_base_point(flow, y0)
    orbit = orbit_array(flow, y0, -E, m - 1)
    eta = np.zeros((len(orbit), c.fiber_dim))
    change = math.inf
    it = 0
    while it < max_iter:
        new = eta.copy()
        new[1:] = _step_along(c, orbit[:-1], eta[:-1])
        change = float(np.max(np.linalg.norm(new[E:] - eta[E:], axis=1)))
        eta = new
        it += 1
        if change <= tol:
            break
    else:
        raise NonConvergenceError(f"section iteration did not reach tol={tol:g} in {max_iter} sweeps "
                                  f"(last sup-change {change:.3g})", last_change=change, iterations=it)
    est = SectionEstimate(y0, flow.omega_array.copy(), orbit[E:].copy(), eta[E:].copy(), 0.0, it, change,
                          float(tol), alpha, E)
    est.residual = float(section_residuals(c, est).max())
    return est


@dataclass
class ProductConditionReport:
    verdict: bool
    worst_ratio: float
    worst_n: int
    N: int
    calN: float
    nu: float
    log_worst_ratio: float = 0.0
    reading: str = PRODUCT_READING

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "worst_ratio": self.worst_ratio,
                "log_worst_ratio": self.log_worst_ratio, "worst_n": self.worst_n,
                "N": self.N, "calN": self.calN, "nu": self.nu, "reading": self.reading}


def _omega_along(omega_fn: Callable, flow: BaseFlow, y, n: int) -> np.ndarray:
    orbit = orbit_array(flow, as_base_point(flow, y), 0, n - 1)
    vals = None
    try:
        trial = np.asarray(omega_fn(orbit), dtype=float)
        if trial.shape == (n,):
            vals = trial
    except Exception:
        vals = None
    if vals is None:
        vals = np.array([float(omega_fn(p)) for p in orbit])
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        k = int(np.nonzero(~(vals > 0))[0][0]) if np.any(~(vals > 0)) else 0
        raise DomainError(f"omega must be positive and finite along the orbit (k={k}, value {vals[k]})")
    return vals


def product_condition(omega_fn: Callable, flow: BaseFlow, y, N: int, calN: float, nu: float) -> ProductConditionReport:
    """Check ``prod_{k<n} omega(sigma(k, y)) <= calN * nu^n`` for ``n = 1..N`` in log space."""
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    if not calN > 0:
        raise DomainError("calN must be positive")
    if N < 1:
        raise DomainError("N must be at least 1")
    logs = np.log(_omega_along(omega_fn, flow, y, int(N)))
    logP = np.cumsum(logs)
    n = np.arange(1, int(N) + 1)
    excess = logP - (math.log(calN) + n * math.log(nu))
    k = int(np.argmax(excess))
    ratio = math.exp(excess[k]) if excess[k] < 700 else math.inf
    return ProductConditionReport(bool(np.all(excess <= 1e-9)), ratio, int(n[k]),
                                  int(N), float(calN), float(nu), log_worst_ratio=float(excess[k]))


def birkhoff_mu(omega_fn: Callable, flow: BaseFlow, y, n: int) -> float:
    """Orbit average ``(1/n) sum_{k<n} ln omega(sigma(k, y))``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return math.fsum(np.log(_omega_along(omega_fn, flow, y, int(n)))) / int(n)


def birkhoff_cauchy(omega_fn: Callable, flow: BaseFlow, y, n: int) -> dict:
    """Averages at ``n`` and ``2n`` and their gap."""
    logs = np.log(_omega_along(omega_fn, flow, y, 2 * int(n)))
    mu_n = math.fsum(logs[:n]) / n
    mu_2n = math.fsum(logs) / (2 * n)
    return {"n": int(n), "mu_n": mu_n, "mu_2n": mu_2n, "gap": abs(mu_2n - mu_n)}


@dataclass
class WeakConvergenceReport:
    fibers: list
    horizon: int
    tol: float

    @property
    def verdict(self) -> bool:
        return all(f["verdict"] for f in self.fibers)

    @property
    def max_distance(self) -> float:
        return max(f["max_pairwise"] for f in self.fibers)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "max_distance": self.max_distance, "horizon": self.horizon,
                "tol": self.tol, "fibers": self.fibers}


def weak_convergence_probe(c: CocycleDef, flow: BaseFlow, est: AttractorEstimate, horizon: int,
                           tol: float) -> WeakConvergenceReport:
    """Forward spread of each fiber after ``horizon`` steps from its own base point."""
    if not est.fibers:
        raise DomainError("attractor estimate has no fibers")
    out = []
    for i, f in enumerate(est.fibers):
        if len(f.points) < 2:
            spread = 0.0
        else:
            P = evolve_points(c, flow, f.y, f.points, int(horizon))
            spread = float(np.max(np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)))
        out.append({"index": i, "y": f.y.tolist(), "points": int(len(f.points)),
                    "max_pairwise": spread, "verdict": spread < tol})
    return WeakConvergenceReport(out, int(horizon), float(tol))
