"""Driving systems: rotations of the torus T^d in continuous or discrete time.

Points of the torus are numpy arrays of shape ``(d,)`` with every coordinate
in ``[0, 1)``. Frequencies are measured in revolutions per unit time and are
not reduced modulo 1, so a continuous flow can be evaluated at fractional
times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0
TWO_PI = 2.0 * math.pi

CONTINUOUS = "continuous"
DISCRETE = "discrete"

METRIC_NAME = "max-circular"


def wrap(x) -> np.ndarray:
    """Reduce coordinates to ``[0, 1)``.

    ``np.mod`` returns exactly 1.0 for tiny negative inputs; those are folded
    back to 0.
    """
    r = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class BaseFlow:
    """A rotation ``y -> y + t * omega (mod 1)`` of the ``dim``-torus."""

    dim: int
    omega: tuple[float, ...]
    time_kind: str = DISCRETE
    metric: str = field(default=METRIC_NAME)

    def __post_init__(self):
        omega = tuple(float(w) for w in np.atleast_1d(np.asarray(self.omega, dtype=float)))
        object.__setattr__(self, "omega", omega)
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"torus dimension must be a positive integer, got {self.dim!r}")
        if len(omega) != self.dim:
            raise DomainError(f"omega has {len(omega)} entries, expected {self.dim}")
        if not all(math.isfinite(w) for w in omega):
            raise DomainError("rotation frequencies must be finite")
        if self.time_kind not in (CONTINUOUS, DISCRETE):
            raise DomainError(f"time_kind must be 'continuous' or 'discrete', got {self.time_kind!r}")
        if self.metric != METRIC_NAME:
            raise DomainError(f"unsupported base metric {self.metric!r}")

    @property
    def omega_array(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=float)

    def point(self, coords) -> np.ndarray:
        return as_base_point(self, coords)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "omega": list(self.omega), "time_kind": self.time_kind}

    @classmethod
    def from_dict(cls, data: dict) -> "BaseFlow":
        return cls(dim=int(data["dim"]), omega=tuple(data["omega"]),
                   time_kind=data.get("time_kind", DISCRETE))


def golden_rotation(time_kind: str = DISCRETE) -> BaseFlow:
    return BaseFlow(1, (GOLDEN_MEAN,), time_kind)


def as_base_point(flow: BaseFlow, coords) -> np.ndarray:
    y = np.atleast_1d(np.asarray(coords, dtype=float))
    if y.shape != (flow.dim,):
        raise DomainError(f"base point has shape {y.shape}, expected ({flow.dim},)")
    if not np.all(np.isfinite(y)):
        raise DomainError("base point coordinates must be finite")
    return wrap(y)


def _check_time(flow: BaseFlow, t) -> float:
    try:
        t = float(t)
    except (TypeError, ValueError):
        raise DomainError(f"time must be a real number, got {t!r}") from None
    if not math.isfinite(t):
        raise DomainError(f"time must be finite, got {t!r}")
    if flow.time_kind == DISCRETE and not t.is_integer():
        raise DomainError(f"discrete flow cannot be advanced by non-integer time {t}")
    return t


def advance(flow: BaseFlow, y, t) -> np.ndarray:
    """Move ``y`` along the rotation for time ``t``: ``(y + t*omega) mod 1``."""
    t = _check_time(flow, t)
    y = as_base_point(flow, y)
    if t == 0.0:
        return y
    return wrap(y + t * flow.omega_array)


def hull_orbit(flow: BaseFlow, y0, n_lo: int, n_hi: int) -> list[np.ndarray]:
    """Orbit sample ``sigma(n, y0)`` for ``n = n_lo..n_hi`` (inclusive)."""
    if n_lo > n_hi:
        raise DomainError(f"empty orbit window [{n_lo}, {n_hi}]")
    return [advance(flow, y0, n) for n in range(int(n_lo), int(n_hi) + 1)]


def orbit_array(flow: BaseFlow, y0, n_lo: int, n_hi: int) -> np.ndarray:
    """Same points as :func:`hull_orbit`, stacked into an ``(m, d)`` array."""
    y0 = as_base_point(flow, y0)
    if n_lo > n_hi:
        raise DomainError(f"empty orbit window [{n_lo}, {n_hi}]")
    n = np.arange(int(n_lo), int(n_hi) + 1, dtype=float)[:, None]
    return wrap(y0[None, :] + n * flow.omega_array[None, :])


def circular_distance(a, b) -> np.ndarray:
    """Coordinatewise distance on the circle R/Z (broadcasts)."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def base_distance(flow: BaseFlow, y1, y2) -> float:
    """Max over coordinates of the circular distance."""
    a = np.atleast_1d(np.asarray(y1, dtype=float))
    b = np.atleast_1d(np.asarray(y2, dtype=float))
    if a.shape != (flow.dim,) or b.shape != (flow.dim,):
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape} on a {flow.dim}-torus")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("base point coordinates must be finite")
    return float(np.max(circular_distance(a, b)))


def orbit_distances(flow: BaseFlow, orbit: np.ndarray, y) -> np.ndarray:
    """Base distance from every row of ``orbit`` to ``y``."""
    return np.max(circular_distance(orbit, np.asarray(y, dtype=float)[None, :]), axis=1)


def covering_radius(points: np.ndarray, resolution: int = 4096) -> float:
    """Largest distance from a test grid on the circle to the nearest sample.

    One-dimensional only; used to measure how densely an orbit fills T^1.
    """
    pts = np.sort(wrap(np.asarray(points, dtype=float).ravel()))
    if pts.size == 0:
        raise DomainError("no points")
    gaps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
    return float(np.max(gaps) / 2.0)


def continued_fraction(x: float, terms: int) -> list[int]:
    """Leading partial quotients of ``x`` (exact arithmetic on the float value)."""
    q = Fraction(x)
    out = []
    for _ in range(terms):
        a = math.floor(q)
        out.append(a)
        frac = q - a
        if frac == 0:
            break
        q = 1 / frac
    return out


def convergent_denominators(x: float, count: int) -> list[int]:
    """Denominators ``q_k`` of the continued-fraction convergents of ``x``.

    For a rotation by ``x`` these are the closest-return times of the orbit.
    """
    a = continued_fraction(x, count + 1)
    q_prev, q = 0, 1
    out = []
    for ak in a[1:]:
        q_prev, q = q, ak * q + q_prev
        out.append(q)
    return out[:count]


def nearest_return_times(flow: BaseFlow, tol: float, n_max: int) -> list[int]:
    """All ``n`` in ``1..n_max`` with ``distance(sigma(n, y), y) < tol``."""
    n = np.arange(1, int(n_max) + 1, dtype=float)[:, None]
    d = np.max(circular_distance(n * flow.omega_array[None, :], 0.0), axis=1)
    return [int(k) for k in np.nonzero(d < tol)[0] + 1]


def parse_points(flow: BaseFlow, pts: Sequence) -> list[np.ndarray]:
    return [as_base_point(flow, p) for p in pts]
