"""Finite-window recurrence diagnostics for trajectories of a skew product.

Distances between states ``x_t = (u_t, sigma(t, y))`` use the product metric

    rho(x, x') = max(|u - u'|, max_i circ(y_i, y'_i))

with Euclidean fiber norm and circular base distance. Every report carries
its window and tolerances, since nothing here can see beyond the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .base_flow import BaseFlow, as_base_point, circular_distance, orbit_array
from .cocycle import Trajectory
from .errors import DiagnosticError, DomainError, WindowError


def sampled_trajectory(flow: BaseFlow, y0, fn: Callable[[np.ndarray], np.ndarray],
                       t_lo: int, t_hi: int) -> Trajectory:
    """Trajectory ``u_t = fn(sigma(t, y0))`` for ``t = t_lo..t_hi`` (e.g. a known section)."""
    orbit = orbit_array(flow, as_base_point(flow, y0), t_lo, t_hi)
    states = np.array([np.atleast_1d(fn(y)) for y in orbit], dtype=float)
    return Trajectory(t_lo, states, orbit, meta={"source": "sampled"})


def _displacements(traj: Trajectory, taus, use_base: bool) -> np.ndarray:
    S, B = traj.states, traj.base_orbit
    out = np.empty(len(taus))
    for i, tau in enumerate(taus):
        fib = np.linalg.norm(S[tau:] - S[:-tau], axis=1)
        if use_base:
            fib = np.maximum(fib, np.max(circular_distance(B[tau:], B[:-tau]), axis=1))
        out[i] = fib.max()
    return out


def sup_displacement(traj: Trajectory, tau: int, use_base: bool = True) -> float:
    """``max_t rho(x_{t+tau}, x_t)`` over all ``t`` with both times inside the window."""
    tau = int(tau)
    if not 1 <= tau < len(traj):
        raise WindowError(f"shift {tau} does not fit a window of {len(traj)} samples")
    return float(_displacements(traj, [tau], use_base)[0])


@dataclass
class AlmostPeriodReport:
    epsilon: float
    window: tuple
    scan_range: tuple
    periods: list
    max_gap: int
    relatively_dense: bool
    edge_margin: int
    displacements: np.ndarray = field(repr=False, default=None)
    use_base: bool = True

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "window": list(self.window), "scan_range": list(self.scan_range),
                "periods": self.periods, "max_gap": self.max_gap,
                "relatively_dense": self.relatively_dense, "edge_margin": self.edge_margin,
                "metric": "max(fiber euclidean, base circular)" if self.use_base else "fiber euclidean"}

    def csv_rows(self):
        lo = self.scan_range[0]
        return ["tau", "sup_displacement"], [[lo + i, float(d)] for i, d in enumerate(self.displacements)]


def _gaps(periods: Sequence[int], lo: int, hi: int) -> list[int]:
    marks = [lo - 1, *periods, hi + 1]
    return [b - a for a, b in zip(marks, marks[1:])]


def almost_periods(traj: Trajectory, eps: float, scan_range=None, use_base: bool = True) -> AlmostPeriodReport:
    """Shifts ``tau`` in ``scan_range`` whose sup displacement over the window is below ``eps``.

    The trajectory window ``[t0, t_end]`` must be at least four times the
    largest shift scanned. ``max_gap`` counts the distance between
    consecutive periods with sentinels just outside the scan range, so
    ``max_gap <= L`` is exactly relative density at scale ``L``.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"epsilon must be positive, got {eps}")
    width = len(traj) - 1
    lo, hi = (1, width // 4) if scan_range is None else (int(scan_range[0]), int(scan_range[1]))
    if lo < 1 or hi < lo:
        raise DomainError(f"scan range must satisfy 1 <= lo <= hi, got [{lo}, {hi}]")
    if width < 4 * hi:
        raise WindowError(f"window of width {width} is too small to scan shifts up to {hi}; "
                          f"need N >= {2 * hi} (window [-N, N])")
    taus = np.arange(lo, hi + 1)
    disp = _displacements(traj, taus, use_base)
    periods = [int(t) for t in taus[disp < eps]]
    gaps = _gaps(periods, lo, hi)
    max_gap = max(gaps)
    # density is only claimed at a scale that fits three times into the scan
    dense = bool(periods) and 3 * max_gap <= hi - lo + 1
    return AlmostPeriodReport(float(eps), (traj.t0, traj.t_end), (lo, hi), periods, int(max_gap), dense,
                              edge_margin=hi, displacements=disp, use_base=use_base)


def relative_density(report: AlmostPeriodReport, L: int) -> bool:
    """True iff every run of ``L`` consecutive integers in the scan range holds a period."""
    L = int(L)
    if L < 1:
        raise DomainError("segment length must be positive")
    lo, hi = report.scan_range
    if hi - lo + 1 < 3 * L:
        raise WindowError(f"scan range [{lo}, {hi}] is shorter than 3L = {3 * L}")
    return max(_gaps(report.periods, lo, hi)) <= L


def minimal_density_scale(report: AlmostPeriodReport) -> Optional[int]:
    """Smallest ``L`` at which the detected periods are relatively dense, if any fits the scan."""
    lo, hi = report.scan_range
    return report.max_gap if report.periods and 3 * report.max_gap <= hi - lo + 1 else None


@dataclass
class MatchReport:
    times: np.ndarray
    distances: np.ndarray
    tail_max: float
    tol: float
    verdict: bool
    settled_from: Optional[int]

    def to_dict(self) -> dict:
        return {"tail_max": self.tail_max, "tol": self.tol, "verdict": self.verdict,
                "settled_from": self.settled_from, "t_first": int(self.times[0]),
                "t_last": int(self.times[-1])}


def asymptotic_match(traj: Trajectory, ref: Trajectory, tail_start: int, tol: float = 1e-6) -> MatchReport:
    """Distances ``d_t = |u_t - ref_t|`` for ``t >= tail_start`` on the common window.

    The verdict compares the maximum over the last quarter of that window
    with ``tol``; ``settled_from`` is the first time after which ``d_t``
    stays below ``tol``.
    """
    lo = max(int(tail_start), traj.t0, ref.t0)
    hi = min(traj.t_end, ref.t_end)
    if hi < lo:
        raise DiagnosticError(f"no overlap beyond t={tail_start}: windows [{traj.t0}, {traj.t_end}] "
                              f"and [{ref.t0}, {ref.t_end}]")
    if traj.states.shape[1] != ref.states.shape[1]:
        raise DomainError("trajectories have different fiber dimensions")
    times = np.arange(lo, hi + 1)
    a = traj.states[lo - traj.t0:hi - traj.t0 + 1]
    b = ref.states[lo - ref.t0:hi - ref.t0 + 1]
    d = np.linalg.norm(a - b, axis=1)
    q = max(1, len(d) // 4)
    tail_max = float(d[-q:].max())
    above = np.nonzero(d >= tol)[0]
    if len(above) == 0:
        settled = int(times[0])
    elif above[-1] + 1 < len(d):
        settled = int(times[above[-1] + 1])
    else:
        settled = None
    return MatchReport(times, d, tail_max, float(tol), tail_max < tol, settled)


def _cloud_diameter(P: np.ndarray, circular: bool) -> float:
    if len(P) < 2:
        return 0.0
    if circular:
        return float(np.max(circular_distance(P[:, None, :], P[None, :, :])))
    return float(np.max(np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)))


def compatibility_probe(traj: Trajectory, sequences: Sequence[Sequence[int]], base_delta: float,
                        fiber_delta: float) -> list[dict]:
    """Check "base returns imply fiber returns" along candidate time sequences.

    For each increasing sequence the second half (at least two terms) is the
    tail under test. The base tail is Cauchy at scale ``base_delta`` when its
    diameter is below it, and likewise for the fiber tail; the verdict is the
    implication. Sequences leaving the window are skipped with a note.
    """
    out = []
    for idx, seq in enumerate(sequences):
        seq = [int(t) for t in seq]
        entry = {"index": idx, "sequence": seq}
        if len(seq) < 2:
            entry.update(skipped=True, note="sequence needs at least two terms")
        elif min(seq) < traj.t0 or max(seq) > traj.t_end:
            entry.update(skipped=True, note=f"outside window [{traj.t0}, {traj.t_end}]")
        else:
            tail = seq[len(seq) // 2:] if len(seq) >= 4 else seq
            rows = [t - traj.t0 for t in tail]
            bd = _cloud_diameter(traj.base_orbit[rows], circular=True)
            fd = _cloud_diameter(traj.states[rows], circular=False)
            base_ok, fiber_ok = bd < base_delta, fd < fiber_delta
            entry.update(skipped=False, tail=tail, base_diameter=bd, fiber_diameter=fd,
                         base_cauchy=base_ok, fiber_cauchy=fiber_ok, verdict=(not base_ok) or fiber_ok)
        out.append(entry)
    return out
