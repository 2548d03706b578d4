from __future__ import annotations

import math

import numpy as np
import pytest

from cocycle_lab.base_flow import (
    CONTINUOUS, GOLDEN_MEAN, BaseFlow, advance, base_distance, continued_fraction,
    convergent_denominators, covering_radius, golden_rotation, hull_orbit, nearest_return_times,
    orbit_array, wrap,
)
from cocycle_lab.errors import DomainError


def test_wrap_folds_tiny_negative_to_zero():
    assert wrap(-1e-18) == 0.0
    assert wrap(1.25) == 0.25


def test_advance_matches_definition():
    flow = golden_rotation()
    y = advance(flow, [0.1], 3)
    assert y[0] == pytest.approx((0.1 + 3 * GOLDEN_MEAN) % 1.0, abs=1e-15)
    assert advance(flow, [0.3], 0)[0] == 0.3


def test_advance_rejects_fractional_time_on_discrete_flow():
    with pytest.raises(DomainError):
        advance(golden_rotation(), [0.0], 0.5)
    with pytest.raises(DomainError):
        advance(golden_rotation(), [0.0], math.inf)


def test_continuous_flow_accepts_real_time():
    flow = BaseFlow(2, (0.1, 0.2), CONTINUOUS)
    assert np.allclose(advance(flow, [0.0, 0.0], 2.5), [0.25, 0.5])


def test_group_property_backwards():
    flow = golden_rotation()
    y = advance(flow, advance(flow, [0.42], -17), 17)
    assert base_distance(flow, y, [0.42]) < 1e-14


def test_base_distance_is_circular_max():
    flow = BaseFlow(2, (0.1, 0.3))
    assert base_distance(flow, [0.05, 0.5], [0.95, 0.45]) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        base_distance(flow, [0.1], [0.2, 0.3])


def test_bad_flow_specs():
    with pytest.raises(DomainError):
        BaseFlow(2, (0.1,))
    with pytest.raises(DomainError):
        BaseFlow(1, (math.nan,))


def test_orbit_array_agrees_with_hull_orbit():
    flow = golden_rotation()
    arr = orbit_array(flow, [0.2], -5, 5)
    lst = np.array(hull_orbit(flow, [0.2], -5, 5))
    assert np.max(np.abs(arr - lst)) < 1e-12


def test_golden_mean_partial_quotients_are_ones():
    assert continued_fraction(GOLDEN_MEAN, 12) == [0] + [1] * 11
    assert convergent_denominators(GOLDEN_MEAN, 10) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_closest_returns_are_fibonacci():
    # |q w mod 1| < 1/q for convergent denominators q
    returns = nearest_return_times(golden_rotation(), 0.02, 400)
    assert {34, 55, 89, 144, 233, 377}.issubset(returns)
    assert 13 not in returns


def test_orbit_fills_circle():
    pts = orbit_array(golden_rotation(), [0.0], 0, 999)
    assert covering_radius(pts) < 2e-3


def test_flow_round_trip():
    flow = BaseFlow(2, (0.1, 0.2), CONTINUOUS)
    assert BaseFlow.from_dict(flow.to_dict()) == flow
