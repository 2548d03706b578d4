"""Pullback attractors of dissipative cocycles, sampled fiber by fiber.

The fiber ``I_y`` of the attractor is approximated by the pullback image

    phi(T, K, sigma(-T, y))

of a finite grid ``K`` for a short list of increasing horizons ``T``; the
Hausdorff distance between the clouds of the last two horizons is reported
as a Cauchy residual. Fiber norms are Euclidean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .base_flow import BaseFlow, advance, as_base_point, base_distance
from .cocycle import CocycleDef, as_state, evolve_points
from .errors import DiagnosticError, DomainError, NotDissipativeError, NumericOverflowError

DEFAULT_MERGE_TOL = 1e-6
NONTRIVIAL_FACTOR = 10.0
DISSIPATIVITY_MARGIN = 1.1


def _as_cloud(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A[:, None]
    return A


def hausdorff_semidist(A, B) -> float:
    """``beta(A, B) = sup_{a in A} min_{b in B} |a - b|`` (not symmetric).

    A one-dimensional input is read as a set of scalars.
    """
    A, B = _as_cloud(A), _as_cloud(B)
    if len(A) == 0 or len(B) == 0:
        raise DomainError("Hausdorff semi-distance of an empty set")
    if A.shape[1] != B.shape[1]:
        raise DomainError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    best = np.empty(len(A))
    for start in range(0, len(A), 512):
        chunk = A[start:start + 512]
        d = np.linalg.norm(chunk[:, None, :] - B[None, :, :], axis=-1)
        best[start:start + 512] = d.min(axis=1)
    return float(best.max())


def hausdorff(A, B) -> float:
    return max(hausdorff_semidist(A, B), hausdorff_semidist(B, A))


def merge_points(P, tol: float) -> np.ndarray:
    """Greedy de-duplication: keep a point only if it is farther than ``tol`` from all kept ones."""
    P = _as_cloud(P)
    kept = [P[0]]
    for p in P[1:]:
        if np.min(np.linalg.norm(np.asarray(kept) - p, axis=1)) > tol:
            kept.append(p)
    return np.asarray(kept)


def diameter(P) -> float:
    P = _as_cloud(P)
    if len(P) < 2:
        return 0.0
    return float(np.max(np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``center + [-radius, radius]^n``.

    ``center`` may be ``None`` (the origin), a fixed vector, or a callable
    evaluated at the base point where the grid is laid down; the last form
    lets a pullback start its grid around a known solution.
    """

    radius: float
    points_per_axis: int = 11
    center: Union[None, Sequence[float], Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise DomainError(f"grid radius must be finite and nonnegative, got {self.radius}")
        if self.points_per_axis < 1:
            raise DomainError("points_per_axis must be positive")

    def points(self, n: int, y: Optional[np.ndarray] = None) -> np.ndarray:
        axis = np.linspace(-self.radius, self.radius, self.points_per_axis) if self.points_per_axis > 1 \
            else np.zeros(1)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        if self.center is None:
            return pts
        c = self.center(y) if callable(self.center) else self.center
        return pts + np.asarray(c, dtype=float)[None, :]

    def describe(self) -> dict:
        kind = "origin" if self.center is None else ("moving" if callable(self.center) else "fixed")
        out = {"radius": self.radius, "points_per_axis": self.points_per_axis, "center": kind}
        if kind == "fixed":
            out["center_value"] = list(map(float, self.center))
        return out


GridLike = Union[GridSpec, np.ndarray, Sequence]


def _grid_at(K: GridLike, n: int, y) -> np.ndarray:
    if isinstance(K, GridSpec):
        return K.points(n, y)
    K = _as_cloud(K)
    if K.shape[1] != n:
        raise DomainError(f"grid points have dimension {K.shape[1]}, expected {n}")
    if len(K) == 0:
        raise DomainError("empty grid")
    return K


def _describe(K: GridLike) -> dict:
    if isinstance(K, GridSpec):
        return K.describe()
    return {"explicit_points": int(len(_as_cloud(K)))}


@dataclass
class FiberSet:
    y: np.ndarray
    points: np.ndarray
    generation_meta: dict = field(default_factory=dict)

    @property
    def cauchy_residual(self) -> Optional[float]:
        return self.generation_meta.get("cauchy_residual")

    @property
    def diameter(self) -> float:
        return diameter(self.points)


@dataclass
class AttractorEstimate:
    fibers: list
    radius_bound: Optional[float] = None

    @property
    def union_cloud(self) -> np.ndarray:
        return np.vstack([f.points for f in self.fibers])

    def fiber_at(self, y, flow: BaseFlow, tol: float = 1e-9) -> Optional[FiberSet]:
        for f in self.fibers:
            if base_distance(flow, f.y, y) <= tol:
                return f
        return None

    def to_dict(self) -> dict:
        return {
            "fibers": [{"y": f.y, "points": f.points, "cauchy_residual": f.cauchy_residual,
                        "diameter": f.diameter, "meta": f.generation_meta} for f in self.fibers],
            "radius_bound": self.radius_bound,
        }

    def csv_rows(self):
        n = self.fibers[0].points.shape[1] if self.fibers else 0
        header = ["fiber_index", "point_index"] + [f"u_{i + 1}" for i in range(n)]
        rows = [[i, j, *map(float, p)] for i, f in enumerate(self.fibers) for j, p in enumerate(f.points)]
        return header, rows


@dataclass
class DissipativityReport:
    dissipative: bool
    radius: Optional[float]
    max_norm: Optional[float]
    horizon: int
    burn_in: int
    samples: int
    failure: Optional[dict] = None

    @property
    def verdict(self) -> str:
        return "DISSIPATIVE" if self.dissipative else "NOT-DISSIPATIVE"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "radius": self.radius, "max_norm": self.max_norm,
                "horizon": self.horizon, "burn_in": self.burn_in, "samples": self.samples,
                "failure": self.failure}


def dissipativity_probe(c: CocycleDef, flow: BaseFlow, fiber_samples, init_radii,
                        horizon: int, burn_in: int, points_per_axis: int = 5) -> DissipativityReport:
    """Estimate an absorbing radius from forward orbits.

    For every base point in ``fiber_samples`` and every radius ``R`` in
    ``init_radii`` a ``points_per_axis``-grid on ``[-R, R]^n`` is evolved for
    ``horizon`` steps. The returned radius is 1.1 times the largest norm seen
    at times ``burn_in..horizon``. An overflow-guard trip yields a
    NOT-DISSIPATIVE report instead of a radius.
    """
    if not horizon > burn_in >= 0:
        raise DomainError(f"need horizon > burn_in >= 0, got horizon={horizon}, burn_in={burn_in}")
    radii = [float(r) for r in init_radii]
    if not radii:
        raise DomainError("no initial radii")
    worst = 0.0
    samples = 0
    for fi, y in enumerate(fiber_samples):
        y = as_base_point(flow, y)
        U = np.vstack([GridSpec(R, points_per_axis).points(c.fiber_dim) for R in radii])
        samples += len(U)
        yt = y
        for t in range(1, int(horizon) + 1):
            try:
                U = as_state(c, U)
                U = evolve_points(c, flow, yt, U, 1)
            except NumericOverflowError as err:
                return DissipativityReport(False, None, None, int(horizon), int(burn_in), samples,
                                           failure={"fiber_index": fi, "y": y, "t": t, "reason": str(err)})
            yt = advance(flow, yt, 1)
            if t >= burn_in:
                worst = max(worst, float(np.max(np.linalg.norm(U, axis=1))))
    return DissipativityReport(True, DISSIPATIVITY_MARGIN * worst, worst, int(horizon), int(burn_in), samples)


def pullback_omega(c: CocycleDef, flow: BaseFlow, y, K: GridLike, T_list: Sequence[int],
                   merge_tol: float = DEFAULT_MERGE_TOL) -> FiberSet:
    """Pullback cloud ``phi(T, K, sigma(-T, y))`` at the largest horizon in ``T_list``.

    Each horizon is computed from scratch. ``generation_meta`` records the
    Hausdorff distance between consecutive horizons (``residuals``), the last
    of which is the ``cauchy_residual``, and the first horizon from which all
    later residuals stay below ``merge_tol`` (``stabilized_at``).
    """
    T_list = [int(T) for T in T_list]
    if not T_list or any(T < 0 for T in T_list) or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise DomainError(f"T_list must be a nonempty increasing list of nonnegative integers: {T_list}")
    if not merge_tol > 0:
        raise DomainError("merge_tol must be positive")
    y = as_base_point(flow, y)
    clouds = []
    for T in T_list:
        start = advance(flow, y, -T)
        K0 = _grid_at(K, c.fiber_dim, start)
        try:
            U = evolve_points(c, flow, start, K0, T)
        except NumericOverflowError as err:
            raise NotDissipativeError(f"pullback from horizon {T} overflowed at step {err.t}: {err}",
                                      y=y) from err
        clouds.append(merge_points(U, merge_tol))
    residuals = [hausdorff(a, b) for a, b in zip(clouds, clouds[1:])]
    stabilized_at = None
    for i in range(len(residuals)):
        if all(r <= merge_tol for r in residuals[i:]):
            stabilized_at = T_list[i]
            break
    meta = {
        "T_list": T_list, "merge_tol": merge_tol, "grid": _describe(K),
        "residuals": residuals, "cauchy_residual": residuals[-1] if residuals else None,
        "stabilized_at": stabilized_at, "raw_points": int(len(_grid_at(K, c.fiber_dim, y))),
    }
    return FiberSet(y, clouds[-1], meta)


def levinson_center(c: CocycleDef, flow: BaseFlow, y0, fiber_count: int, K: GridLike,
                    T_list: Sequence[int], merge_tol: float = DEFAULT_MERGE_TOL,
                    radius_bound: Optional[float] = None) -> AttractorEstimate:
    """Fibers of the pullback attractor at ``sigma(j, y0)``, ``j = 0..fiber_count-1``."""
    if fiber_count < 1:
        raise DomainError("fiber_count must be at least 1")
    y0 = as_base_point(flow, y0)
    fibers = []
    for j in range(int(fiber_count)):
        yj = advance(flow, y0, j)
        try:
            fibers.append(pullback_omega(c, flow, yj, K, T_list, merge_tol))
        except NotDissipativeError as err:
            raise NotDissipativeError(f"fiber {j}: {err}", fiber_index=j, y=yj) from err
    return AttractorEstimate(fibers, radius_bound)


@dataclass
class InvarianceReport:
    pairs: list
    max_forward: float
    max_reverse: float

    @property
    def max_residual(self) -> float:
        return max(self.max_forward, self.max_reverse)

    def to_dict(self) -> dict:
        return {"pairs": self.pairs, "max_forward": self.max_forward,
                "max_reverse": self.max_reverse, "max_residual": self.max_residual}


def check_invariance(est: AttractorEstimate, c: CocycleDef, flow: BaseFlow,
                     match_tol: float = 1e-9) -> InvarianceReport:
    """Compare ``phi(1, I_y, y)`` with ``I_{sigma(1, y)}`` for every sampled adjacent pair."""
    pairs = []
    for i, f in enumerate(est.fibers):
        target = advance(flow, f.y, 1)
        for j, g in enumerate(est.fibers):
            if base_distance(flow, target, g.y) <= match_tol:
                image = evolve_points(c, flow, f.y, f.points, 1)
                pairs.append({"from": i, "to": j,
                              "forward": hausdorff_semidist(image, g.points),
                              "reverse": hausdorff_semidist(g.points, image)})
                break
    if not pairs:
        raise DiagnosticError("no sampled fiber has its image fiber sigma(1, y) in the estimate")
    return InvarianceReport(pairs, max(p["forward"] for p in pairs), max(p["reverse"] for p in pairs))


def default_grid(radius: float, points_per_axis: int = 11) -> GridSpec:
    return GridSpec(float(radius), points_per_axis)


def is_nontrivial(fiber: FiberSet, merge_tol: float = DEFAULT_MERGE_TOL) -> bool:
    return fiber.diameter > NONTRIVIAL_FACTOR * merge_tol
