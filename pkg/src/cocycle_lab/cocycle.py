"""Difference-equation cocycles ``u(t+1) = f(sigma(t, y), u(t))`` and their skew products.

A fiber map takes a base point ``y`` of shape ``(d,)`` and a fiber state of
shape ``(..., n)``; it must broadcast over leading axes so that a whole cloud
of states sharing one base point is advanced in a single call.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .base_flow import BaseFlow, advance, as_base_point, wrap
from .errors import DomainError, NumericOverflowError

EXPLICIT = "explicit-map"
DISCRETIZED = "discretized-flow"

DEFAULT_OVERFLOW_BOUND = 1e8

FiberMap = Callable[[np.ndarray, np.ndarray], np.ndarray]

_ids = itertools.count()


@dataclass(frozen=True)
class CocycleDef:
    """A unit-time fiber map over a base flow.

    ``kind`` is ``"explicit-map"`` (``fmap`` is used directly) or
    ``"discretized-flow"`` (``flow_field``/``integrator``/``flow`` describe an ODE
    whose unit-time solution map is the fiber map).
    """

    fiber_dim: int
    kind: str = EXPLICIT
    fmap: Optional[FiberMap] = None
    flow_field: Any = None
    integrator: Any = None
    flow: Optional[BaseFlow] = None
    name: str = ""
    params: dict = field(default_factory=dict)
    overflow_bound: float = DEFAULT_OVERFLOW_BOUND
    uid: int = field(default_factory=lambda: next(_ids), compare=False)

    def __post_init__(self):
        if int(self.fiber_dim) != self.fiber_dim or self.fiber_dim < 1:
            raise DomainError(f"fiber_dim must be a positive integer, got {self.fiber_dim!r}")
        if self.kind == EXPLICIT:
            if self.fmap is None:
                raise DomainError("explicit-map cocycle needs a fiber map")
        elif self.kind == DISCRETIZED:
            if self.flow_field is None or self.integrator is None or self.flow is None:
                raise DomainError("discretized-flow cocycle needs flow_field, integrator and flow")
        else:
            raise DomainError(f"unknown cocycle kind {self.kind!r}")
        if not self.overflow_bound > 0:
            raise DomainError("overflow_bound must be positive")

    @property
    def ident(self) -> str:
        return self.name or f"cocycle-{self.uid}"


@dataclass(frozen=True)
class FiberedPoint:
    """A point ``x = (u, y)`` of the product space ``R^n x T^d``."""

    u: np.ndarray
    y: np.ndarray


@dataclass
class Trajectory:
    """States ``u_t`` and base points ``sigma(t, y)`` for ``t = t0 .. t0 + len - 1``."""

    t0: int
    states: np.ndarray
    base_orbit: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        self.base_orbit = np.asarray(self.base_orbit, dtype=float)
        if self.base_orbit.ndim == 1:
            self.base_orbit = self.base_orbit[:, None]
        if len(self.states) != len(self.base_orbit):
            raise DomainError(
                f"trajectory has {len(self.states)} states but {len(self.base_orbit)} base points")
        self.t0 = int(self.t0)

    def __len__(self):
        return len(self.states)

    @property
    def t_end(self) -> int:
        return self.t0 + len(self) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t_end + 1)

    @property
    def last(self) -> np.ndarray:
        return self.states[-1]

    def index(self, t: int) -> int:
        if not self.t0 <= t <= self.t_end:
            raise DomainError(f"time {t} outside window [{self.t0}, {self.t_end}]")
        return int(t) - self.t0

    def state(self, t: int) -> np.ndarray:
        return self.states[self.index(t)]

    def base(self, t: int) -> np.ndarray:
        return self.base_orbit[self.index(t)]

    def to_rows(self):
        d = self.base_orbit.shape[1]
        n = self.states.shape[1]
        header = ["t"] + [f"y_{i + 1}" for i in range(d)] + [f"u_{i + 1}" for i in range(n)]
        rows = [[int(t), *map(float, y), *map(float, u)]
                for t, y, u in zip(self.times, self.base_orbit, self.states)]
        return header, rows

    def to_csv(self, path) -> Path:
        path = Path(path)
        header, rows = self.to_rows()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([r[0]] + [repr(v) for v in r[1:]])
        return path


def _guard(c: CocycleDef, y, u, out):
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericOverflowError(f"{c.ident}: non-finite fiber state", y=y, u=u)
    if np.max(np.linalg.norm(np.atleast_1d(out).reshape(-1, c.fiber_dim), axis=-1)) > c.overflow_bound:
        raise NumericOverflowError(
            f"{c.ident}: |u| exceeded overflow bound {c.overflow_bound:g}", y=y, u=u)
    return out


def as_state(c: CocycleDef, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    if u.shape[-1] != c.fiber_dim:
        raise DomainError(f"fiber state has trailing size {u.shape[-1]}, expected {c.fiber_dim}")
    if not np.all(np.isfinite(u)):
        raise DomainError("fiber state must be finite")
    return u


def step(c: CocycleDef, y, u) -> np.ndarray:
    """One application of the fiber map, ``f(y, u)``.

    ``u`` may be a single state ``(n,)`` or a batch ``(m, n)`` over the same
    base point. Raises :class:`NumericOverflowError` when the result is
    non-finite or larger than the overflow bound.
    """
    u = as_state(c, u)
    y = np.asarray(y, dtype=float)
    if c.kind == EXPLICIT:
        out = c.fmap(y, u)
    else:
        from .discretize import integrate_unit
        out = integrate_unit(c.flow_field, c.flow, y, u, c.integrator)
    return _guard(c, y, u, np.broadcast_to(out, u.shape).copy() if np.ndim(out) < u.ndim else out)


def step_rows(c: CocycleDef, Y, U) -> np.ndarray:
    """Unit step for a batch where row ``i`` of ``U`` sits over base point ``Y[i]``.

    Needs a fiber map that broadcasts over a leading axis of ``y`` (all
    registered scenarios do).
    """
    U = as_state(c, U)
    Y = np.asarray(Y, dtype=float)
    if U.ndim != 2 or Y.ndim != 2 or len(Y) != len(U):
        raise DomainError(f"row batch needs matching (m, d) and (m, n) arrays, got {Y.shape} and {U.shape}")
    if c.kind == EXPLICIT:
        out = np.broadcast_to(c.fmap(Y, U), U.shape).copy()
    else:
        from .discretize import integrate_unit_rows
        out = integrate_unit_rows(c.flow_field, c.flow, Y, U, c.integrator)
    return _guard(c, Y, U, out)


def evolve_rows(c: CocycleDef, flow: BaseFlow, Y, U, t: int) -> np.ndarray:
    """States ``phi(k, U[i], Y[i])`` for ``k = 0..t``, shape ``(t + 1, m, n)``."""
    if int(t) != t or t < 0:
        raise DomainError(f"evolution time must be a nonnegative integer, got {t!r}")
    Y = np.array([as_base_point(flow, y) for y in np.atleast_2d(Y)])
    U = as_state(c, U)
    out = np.empty((int(t) + 1,) + U.shape)
    out[0] = U
    for k in range(int(t)):
        try:
            out[k + 1] = step_rows(c, Y, out[k])
        except NumericOverflowError as err:
            err.t = k
            raise
        Y = wrap(Y + flow.omega_array[None, :])
    return out


def evolve(c: CocycleDef, flow: BaseFlow, y, u, t: int) -> Trajectory:
    """Trajectory ``phi(0..t, u, y)`` computed by composing unit steps."""
    if int(t) != t or t < 0:
        raise DomainError(f"evolution time must be a nonnegative integer, got {t!r}")
    y = as_base_point(flow, y)
    u = as_state(c, u)
    if u.ndim != 1:
        raise DomainError("evolve takes a single fiber state; use evolve_points for clouds")
    states = np.empty((int(t) + 1, c.fiber_dim))
    bases = np.empty((int(t) + 1, flow.dim))
    states[0], bases[0] = u, y
    for k in range(int(t)):
        try:
            states[k + 1] = step(c, bases[k], states[k])
        except NumericOverflowError as err:
            err.t = k
            raise
        bases[k + 1] = advance(flow, bases[k], 1)
    return Trajectory(0, states, bases, meta={"cocycle": c.ident})


def evolve_points(c: CocycleDef, flow: BaseFlow, y, U, t: int) -> np.ndarray:
    """Advance a cloud ``U`` of shape ``(m, n)`` sharing base point ``y`` by ``t`` steps.

    Returns ``phi(t, U, y)``. Overflow errors carry the failing step in ``.t``.
    """
    if int(t) != t or t < 0:
        raise DomainError(f"evolution time must be a nonnegative integer, got {t!r}")
    y = as_base_point(flow, y)
    U = as_state(c, U)
    for k in range(int(t)):
        try:
            U = step(c, y, U)
        except NumericOverflowError as err:
            err.t = k
            raise
        y = advance(flow, y, 1)
    return U


def skew_step(c: CocycleDef, flow: BaseFlow, x: FiberedPoint) -> FiberedPoint:
    """The skew-product map ``(u, y) -> (f(y, u), sigma(1, y))``."""
    return FiberedPoint(step(c, x.y, x.u), advance(flow, x.y, 1))


def pullback_start(flow: BaseFlow, y, T: int) -> np.ndarray:
    """Base point ``sigma(-T, y)`` from which a pullback of horizon ``T`` starts."""
    return advance(flow, y, -int(T))
