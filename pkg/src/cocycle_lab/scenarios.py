"""Registry of named systems, one per dynamical regime the laboratory distinguishes.

=====================  ===========================================  ==================
name                   system                                       regime
=====================  ===========================================  ==================
linear-contraction     u -> alpha*u + g(y), golden-mean rotation    uniform contraction
tanh-saturating        u -> alpha*tanh(u) + a*cos(2 pi y1)          strict, not uniform
expanding              u -> alpha*u, alpha > 1                      not dissipative
linear-ode             x' = -lam*x + sum a_i cos(nu_i t)            discretized flow
wc2                    planar field with a Vinograd-type singular   weak convergent,
                       point riding on (sin t, sin sqrt2 t)         non-trivial fibers
=====================  ===========================================  ==================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .base_flow import CONTINUOUS, DISCRETE, GOLDEN_MEAN, TWO_PI, BaseFlow, as_base_point
from .cocycle import EXPLICIT, CocycleDef
from .discretize import FlowField, IntegratorConfig, discretize_flow
from .errors import DomainError, RegistryError

CONTINUOUS_FLOW = "continuous-flow"
SQRT2 = math.sqrt(2.0)
SINGULAR_R2 = 1e-24


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    base: BaseFlow
    definition: Any
    params: dict
    reference_facts: tuple = ()
    reference_solution: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smoke_points: tuple = ()
    y0: tuple = ()

    @property
    def fiber_dim(self) -> int:
        return self.definition.fiber_dim if self.kind == CONTINUOUS_FLOW else self.params["fiber_dim"]

    @property
    def default_y0(self) -> np.ndarray:
        return as_base_point(self.base, self.y0 or np.zeros(self.base.dim))

    def cocycle(self, cfg: Optional[IntegratorConfig] = None) -> CocycleDef:
        if self.kind == CONTINUOUS_FLOW:
            return discretize_flow(self.definition, self.base, cfg or IntegratorConfig(),
                                   name=self.name, params=self.params)
        return CocycleDef(fiber_dim=self.fiber_dim, kind=EXPLICIT, fmap=self.definition,
                          name=self.name, params=self.params)

    def evaluate(self, y, u) -> np.ndarray:
        """Fiber map (explicit) or right-hand side (flow) at one point."""
        y = as_base_point(self.base, y)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        fn = self.definition.rhs if self.kind == CONTINUOUS_FLOW else self.definition
        return np.asarray(fn(y, u), dtype=float)

    def smoke(self) -> list[np.ndarray]:
        return [self.evaluate(y, u) for y, u in self.smoke_points]


# ---------------------------------------------------------------------------
# Field and map definitions


def wc2_field(y, U, raw_signs: bool = False) -> np.ndarray:
    """Planar almost periodic field driven by the phases ``t = 2 pi y1``, ``sqrt2 t = 2 pi y2``.

    With ``a = u - sin t`` and ``b = v - sin sqrt2 t`` and
    ``D = (a^2 + b^2)(1 + (a^2 + b^2)^2)`` the field is::

        u' = (a^2 (2b - a) + 2 b^5) / D + cos t
        v' = 8 b^2 (b - a) / D + sqrt2 cos sqrt2 t

    The rational parts are O(|(a, b)|) and are set to their limit 0 on the
    singular set a = b = 0. ``raw_signs=True`` substitutes the literal
    numerators ``a^2 (2v - u + 2 sin sqrt2 t - sin t)`` and
    ``8 b^2 (v - u + sin sqrt2 t - sin t)``, which are not continuous there.
    """
    y = np.asarray(y, dtype=float)
    U = np.asarray(U, dtype=float)
    u, v = U[..., 0], U[..., 1]
    th1, th2 = TWO_PI * y[..., 0], TWO_PI * y[..., 1]
    s1, s2 = np.sin(th1), np.sin(th2)
    a = u - s1
    b = v - s2
    r2 = a * a + b * b
    singular = r2 < SINGULAR_R2
    D = np.where(singular, 1.0, r2 * (1.0 + r2 * r2))
    b2 = b * b
    if raw_signs:
        num_u = a * a * (2.0 * v - u + 2.0 * s2 - s1) + 2.0 * b2 * b2 * b
        num_v = 8.0 * b2 * (v - u + s2 - s1)
    else:
        num_u = a * a * (2.0 * b - a) + 2.0 * b2 * b2 * b
        num_v = 8.0 * b2 * (b - a)
    pu = np.where(singular, 0.0, num_u / D)
    pv = np.where(singular, 0.0, num_v / D)
    return np.stack([pu + np.cos(th1), pv + SQRT2 * np.cos(th2)], axis=-1)


def _forcing(kind: str, amplitude: float) -> Callable[[np.ndarray], Any]:
    if kind == "cos":
        return lambda y: amplitude * np.cos(TWO_PI * y[..., 0])
    if kind == "const":
        return lambda y: amplitude * np.ones(np.shape(y)[:-1])
    if kind == "none":
        return lambda y: np.zeros(np.shape(y)[:-1])
    raise DomainError(f"unknown forcing {kind!r}; expected 'cos', 'const' or 'none'")


def _omega_param(omega, default) -> tuple:
    if omega is None:
        return tuple(default)
    return tuple(float(w) for w in np.atleast_1d(omega))


# ---------------------------------------------------------------------------
# Builders


def _linear_contraction(alpha=0.5, forcing="cos", amplitude=1.0, omega=None) -> Scenario:
    alpha, amplitude = float(alpha), float(amplitude)
    om = _omega_param(omega, (GOLDEN_MEAN,))
    g = _forcing(forcing, amplitude)
    base = BaseFlow(len(om), om, DISCRETE)

    def fmap(y, u):
        return alpha * u + np.expand_dims(g(y), -1)

    reference = None
    if abs(alpha) < 1.0:
        if forcing == "cos":
            # sum_{k>=1} alpha^(k-1) cos(2 pi (y1 - k w)) in closed form
            z = np.exp(-2j * math.pi * om[0])
            factor = amplitude * z / (1.0 - alpha * z)

            def reference(y):
                return np.atleast_1d(np.real(factor * np.exp(2j * math.pi * np.asarray(y)[..., 0])))
        elif forcing == "const":
            def reference(y):
                return np.array([amplitude / (1.0 - alpha)])
        else:
            def reference(y):
                return np.zeros(1)

    return Scenario(
        name="linear-contraction", kind=EXPLICIT, base=base, definition=fmap,
        params={"alpha": alpha, "forcing": forcing, "amplitude": amplitude,
                "omega": list(om), "fiber_dim": 1},
        reference_facts=("uniform contraction with Lipschitz constant |alpha|",
                         "singleton attractor fibers given by the geometric series of the forcing"),
        reference_solution=reference,
        smoke_points=(((0.0,) * base.dim, (0.0,)), ((0.25,) * base.dim, (2.0,)),
                      ((0.7,) * base.dim, (-1.5,))),
    )


def _tanh_saturating(alpha=1.0, amplitude=0.0, omega=None) -> Scenario:
    alpha, amplitude = float(alpha), float(amplitude)
    om = _omega_param(omega, (GOLDEN_MEAN,))
    g = _forcing("cos", amplitude)
    base = BaseFlow(len(om), om, DISCRETE)

    def fmap(y, u):
        return alpha * np.tanh(u) + np.expand_dims(g(y), -1)

    return Scenario(
        name="tanh-saturating", kind=EXPLICIT, base=base, definition=fmap,
        params={"alpha": alpha, "amplitude": amplitude, "omega": list(om), "fiber_dim": 1},
        reference_facts=("strictly contracting for alpha <= 1; uniform only for alpha < 1",),
        smoke_points=(((0.0,) * base.dim, (0.0,)), ((0.1,) * base.dim, (1.0,)),
                      ((0.5,) * base.dim, (-3.0,))),
    )


def _expanding(alpha=2.0, omega=None) -> Scenario:
    alpha = float(alpha)
    om = _omega_param(omega, (GOLDEN_MEAN,))
    base = BaseFlow(len(om), om, DISCRETE)

    def fmap(y, u):
        return alpha * u

    return Scenario(
        name="expanding", kind=EXPLICIT, base=base, definition=fmap,
        params={"alpha": alpha, "omega": list(om), "fiber_dim": 1},
        reference_facts=("orbits leave every ball: not dissipative",),
        smoke_points=(((0.0,) * base.dim, (1.0,)), ((0.3,) * base.dim, (-2.5,))),
    )


def _linear_ode(decay=1.0, frequencies=(1.0,), amplitudes=None) -> Scenario:
    lam = float(decay)
    nus = tuple(float(v) for v in np.atleast_1d(frequencies))
    amps = tuple(float(a) for a in np.atleast_1d(amplitudes)) if amplitudes is not None else (1.0,) * len(nus)
    if len(amps) != len(nus):
        raise DomainError("amplitudes and frequencies must have equal length")
    base = BaseFlow(len(nus), tuple(v / TWO_PI for v in nus), CONTINUOUS)
    amp_arr = np.asarray(amps)

    def rhs(y, u):
        forcing = np.sum(amp_arr * np.cos(TWO_PI * np.asarray(y)), axis=-1)
        return -lam * u + np.expand_dims(forcing, -1)

    reference = None
    if lam > 0:
        nu_arr = np.asarray(nus)

        def reference(y):
            th = TWO_PI * np.asarray(y, dtype=float)
            return np.atleast_1d(np.sum(amp_arr * (lam * np.cos(th) + nu_arr * np.sin(th))
                                        / (lam * lam + nu_arr * nu_arr), axis=-1))

    return Scenario(
        name="linear-ode", kind=CONTINUOUS_FLOW, base=base,
        definition=FlowField(1, rhs, name="linear-ode"),
        params={"decay": lam, "frequencies": list(nus), "amplitudes": list(amps), "fiber_dim": 1},
        reference_facts=("time-one map contracts by exp(-decay)",
                         "unique almost periodic solution sum a_i (lam cos + nu sin)/(lam^2+nu^2)"),
        reference_solution=reference,
        smoke_points=(((0.0,) * base.dim, (0.0,)), ((0.125,) * base.dim, (1.0,))),
    )


def _wc2(raw_signs=False) -> Scenario:
    raw = bool(raw_signs)
    base = BaseFlow(2, (1.0 / TWO_PI, SQRT2 / TWO_PI), CONTINUOUS)

    def rhs(y, u):
        return wc2_field(y, u, raw_signs=raw)

    def distinguished(y):
        y = np.asarray(y, dtype=float)
        return np.array([math.sin(TWO_PI * y[0]), math.sin(TWO_PI * y[1])])

    return Scenario(
        name="wc2", kind=CONTINUOUS_FLOW, base=base,
        definition=FlowField(2, rhs, name="wc2-raw" if raw else "wc2"),
        params={"raw_signs": raw, "fiber_dim": 2},
        reference_facts=("dissipative", "weak convergent", "unique almost periodic solution",
                         "more than one solution bounded on the whole line"),
        reference_solution=distinguished,
        smoke_points=(((0.0, 0.0), (0.0, 0.0)), ((0.1, 0.2), (1.0, -0.5)),
                      ((0.75, 0.3), (0.2, 0.4))),
    )


REGISTRY: dict[str, Callable[..., Scenario]] = {
    "linear-contraction": _linear_contraction,
    "tanh-saturating": _tanh_saturating,
    "expanding": _expanding,
    "linear-ode": _linear_ode,
    "wc2": _wc2,
}


def available() -> list[str]:
    return sorted(REGISTRY)


def build(name: str, params: Optional[dict] = None, **kwargs) -> Scenario:
    """Instantiate a registered scenario; keyword arguments override ``params``."""
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise RegistryError(f"unknown scenario {name!r}; available: {', '.join(available())}") from None
    merged = dict(params or {})
    merged.update(kwargs)
    try:
        return builder(**merged)
    except TypeError as err:
        raise DomainError(f"bad parameters for scenario {name!r}: {err}") from None
