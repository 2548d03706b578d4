"""Unit-time discretization of ODEs ``x' = f(sigma~(t, y), x)`` over a torus flow.

The continuous solution map over one time unit,

    F(y, u) = u + int_0^1 f(sigma~(tau, y), phi~(tau, u, y)) dtau,

is realized with the classical fixed-step fourth-order Runge-Kutta scheme.
Fixed steps keep every run bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .base_flow import CONTINUOUS, BaseFlow, as_base_point, wrap
from .cocycle import DISCRETIZED, CocycleDef, Trajectory
from .errors import DomainError, IntegrationBlowupError, WindowError

RK4 = "rk4"


@dataclass(frozen=True)
class FlowField:
    """Right-hand side ``rhs(y, u)`` evaluated at the current base point.

    ``u`` has shape ``(..., fiber_dim)`` and the result must match it.
    """

    fiber_dim: int
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = ""


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_unit: int = 64
    tolerance_probe: Optional[int] = None
    method: str = RK4

    def __post_init__(self):
        if int(self.steps_per_unit) != self.steps_per_unit or self.steps_per_unit < 1:
            raise DomainError(f"steps_per_unit must be a positive integer, got {self.steps_per_unit!r}")
        if self.tolerance_probe is not None and self.tolerance_probe < 1:
            raise DomainError("tolerance_probe must be a positive step count")
        if self.method != RK4:
            raise DomainError(f"unsupported integrator {self.method!r}")

    @property
    def probe_steps(self) -> int:
        return int(self.tolerance_probe or 2 * self.steps_per_unit)

    def to_dict(self) -> dict:
        return {"steps_per_unit": self.steps_per_unit, "tolerance_probe": self.tolerance_probe}


def _require_continuous(flow: BaseFlow):
    if flow.time_kind != CONTINUOUS:
        raise DomainError("discretizing an ODE needs a continuous-time base flow")


def _rk4(field: FlowField, omega: np.ndarray, y: np.ndarray, u: np.ndarray,
         duration: float, nsteps: int) -> np.ndarray:
    h = duration / nsteps
    rhs = field.rhs
    for i in range(nsteps):
        tau = i * h
        ya = wrap(y + tau * omega)
        ym = wrap(y + (tau + 0.5 * h) * omega)
        yb = wrap(y + (tau + h) * omega)
        # overflow surfaces as a non-finite state, reported below
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(ya, u)
            k2 = rhs(ym, u + 0.5 * h * k1)
            k3 = rhs(ym, u + 0.5 * h * k2)
            k4 = rhs(yb, u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise IntegrationBlowupError(
                f"{field.name or 'flow field'}: non-finite state at sub-step {i + 1}/{nsteps}",
                y=y, u=u, substep=i + 1)
    return u


def integrate(field: FlowField, flow: BaseFlow, y, u, duration: float,
              cfg: IntegratorConfig) -> np.ndarray:
    """Continuous solution map ``phi~(duration, u, y)`` for ``duration >= 0``.

    Uses ``ceil(duration * steps_per_unit)`` equal sub-steps, so a unit
    duration is bitwise identical to :func:`integrate_unit`.
    """
    _require_continuous(flow)
    duration = float(duration)
    if not math.isfinite(duration) or duration < 0:
        raise DomainError(f"integration time must be finite and nonnegative, got {duration}")
    u = np.asarray(u, dtype=float)
    if duration == 0.0:
        return u.copy()
    nsteps = max(1, math.ceil(duration * cfg.steps_per_unit - 1e-9))
    return _rk4(field, flow.omega_array, as_base_point(flow, y), u, duration, nsteps)


def integrate_unit(field: FlowField, flow: BaseFlow, y, u, cfg: IntegratorConfig) -> np.ndarray:
    """Numerical unit-time map ``F(y, u)``; accepts a batch of states."""
    _require_continuous(flow)
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("fiber state must be finite")
    return _rk4(field, flow.omega_array, as_base_point(flow, y), u, 1.0, cfg.steps_per_unit)


def integrate_unit_rows(field: FlowField, flow: BaseFlow, Y, U, cfg: IntegratorConfig) -> np.ndarray:
    """Unit-time map for a batch where row ``i`` of ``U`` sits over base point ``Y[i]``.

    The right-hand side must broadcast over a leading axis of ``y``.
    """
    _require_continuous(flow)
    Y = wrap(np.asarray(Y, dtype=float))
    U = np.asarray(U, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != flow.dim or len(Y) != len(U):
        raise DomainError(f"need base points of shape ({len(U)}, {flow.dim}), got {Y.shape}")
    return _rk4(field, flow.omega_array, Y, U, 1.0, cfg.steps_per_unit)


def unit_error_estimate(field: FlowField, flow: BaseFlow, y, u, cfg: IntegratorConfig) -> float:
    """Step-doubling estimate of the error of :func:`integrate_unit` at ``(y, u)``."""
    coarse = integrate_unit(field, flow, y, u, cfg)
    fine = integrate_unit(field, flow, y, u, IntegratorConfig(cfg.probe_steps))
    ratio = (cfg.probe_steps / cfg.steps_per_unit) ** 4
    return float(np.max(np.linalg.norm(np.atleast_2d(coarse - fine), axis=-1)) * ratio / (ratio - 1.0))


def discretize_flow(field: FlowField, flow: BaseFlow, cfg: IntegratorConfig,
                    name: str = "", params: Optional[dict] = None) -> CocycleDef:
    """Cocycle whose unit step is the numerical time-one map of ``field``."""
    _require_continuous(flow)
    return CocycleDef(fiber_dim=field.fiber_dim, kind=DISCRETIZED, flow_field=field,
                      integrator=cfg, flow=flow, name=name or field.name,
                      params=dict(params or {}))


def interpolate_trajectory(gamma: Trajectory, field: FlowField, flow: BaseFlow, t: float,
                           cfg: IntegratorConfig) -> np.ndarray:
    """Continuous-time state ``phi~({t}, gamma([t]))`` of a discrete trajectory.

    At integer ``t`` the stored state is returned unchanged.
    """
    t = float(t)
    if not math.isfinite(t):
        raise DomainError("interpolation time must be finite")
    n = math.floor(t)
    if not gamma.t0 <= n <= gamma.t_end:
        raise WindowError(f"[t] = {n} outside trajectory window [{gamma.t0}, {gamma.t_end}]")
    frac = t - n
    state = gamma.state(n)
    if frac == 0.0:
        return state.copy()
    return integrate(field, flow, gamma.base(n), state, frac, cfg)


__all__ = [
    "FlowField", "IntegratorConfig", "integrate", "integrate_unit", "integrate_unit_rows", "unit_error_estimate",
    "discretize_flow", "interpolate_trajectory",
]
