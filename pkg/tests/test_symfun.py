import math

import pytest

from calc.exceptions import NonIntegrable
from calc.symfun import (
    ZERO,
    SymExpr,
    bump,
    constant,
    heaviside_convolve,
    polynomial,
    restrict,
    smooth_step,
    step_down,
    variable,
)

BUMP_MASS = 0.4439938161680794


def test_polynomial_evaluates_and_differentiates():
    p = polynomial([1, 2, 3])
    assert p(2.0) == pytest.approx(17.0)
    assert p.diff()(2.0) == pytest.approx(14.0)
    assert p.diff(3).is_zero


def test_constant_zero_is_zero():
    assert constant(0) is ZERO
    assert polynomial([0, 0]).is_zero


def test_bump_support_and_peak():
    b = bump(0.5, 1.0)
    assert b.bounds() == (-0.5, 1.5)
    assert b(0.5) == pytest.approx(math.exp(-1))
    assert b(2.0) == 0.0
    assert b(-0.5) == 0.0


def test_bump_rejects_nonpositive_radius():
    with pytest.raises(ValueError, match="半径"):
        bump(0, 0)


def test_negative_derivative_order_rejected():
    with pytest.raises(ValueError):
        variable().diff(-1)


def test_bump_integral():
    assert bump(0, 1).integrate() == pytest.approx(BUMP_MASS, rel=1e-10)
    assert bump(2.0, 1.0).integrate() == pytest.approx(BUMP_MASS, rel=1e-10)


def test_unbounded_support_is_not_integrable():
    with pytest.raises(NonIntegrable):
        polynomial([1.0]).integrate()
    with pytest.raises(NonIntegrable):
        heaviside_convolve(variable())


def test_product_support_is_intersection():
    f = bump(0, 1) * bump(3, 1)
    assert f.is_zero
    g = bump(0, 1) * polynomial([0, 1])
    assert g.is_compact


def test_heaviside_convolution_limits():
    b = bump(0, 1)
    conv = heaviside_convolve(b)
    assert conv(-2.0) == 0.0
    assert conv(0.0) == pytest.approx(BUMP_MASS / 2, rel=1e-8)
    assert conv(2.5) == pytest.approx(BUMP_MASS, rel=1e-8)


def test_heaviside_convolution_differentiates_back():
    f = bump(0.2, 0.8) * polynomial([1, -1])
    conv = heaviside_convolve(f)
    for x0 in (-0.3, 0.1, 0.6):
        assert conv.diff()(x0) == pytest.approx(f(x0), abs=1e-8)


def test_smooth_step_values():
    step = smooth_step()
    assert step(-1.5) == 0.0
    assert step(0.0) == pytest.approx(0.5, abs=1e-10)
    assert step(1.5) == pytest.approx(1.0, abs=1e-10)
    assert step.diff()(3.0) == pytest.approx(0.0, abs=1e-12)


def test_compose_affine_moves_support():
    b = bump(0, 1).compose_affine(1, 3)
    assert b.bounds() == (-4.0, -2.0)
    assert b(-3.0) == pytest.approx(math.exp(-1))
    flipped = bump(1, 0.5).compose_affine(-1, 0)
    assert flipped.bounds() == (-1.5, -0.5)


def test_compose_affine_rejects_zero_scale():
    with pytest.raises(ValueError):
        bump().compose_affine(0, 1)


def test_step_down_and_restrict():
    s = step_down(0.5)
    assert s(0.0) == 1.0
    assert s(1.0) == 0.0
    assert not s.smooth
    r = restrict(polynomial([1.0]), -1, 2)
    assert r.integrate() == pytest.approx(3.0)
    assert not r.smooth


def test_json_round_trip_keeps_values():
    f = heaviside_convolve(bump(0, 1)) * polynomial([0.5, 1.0]) + bump(1, 0.5)
    g = SymExpr.from_json(f.to_json())
    for x0 in (-1.5, 0.0, 0.7, 2.0):
        assert g(x0) == pytest.approx(f(x0), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("x0", [-0.7, 0.0, 0.35, 0.9])
def test_derivative_matches_finite_difference(x0):
    f = bump(0.1, 1.2) * polynomial([1.0, -0.5, 0.25])
    h = 1e-5
    estimate = (f(x0 + h) - f(x0 - h)) / (2 * h)
    assert f.diff()(x0) == pytest.approx(estimate, abs=1e-7)


def test_integration_by_parts():
    f = bump(0.2, 1.0) * polynomial([0.0, 1.0])
    g = bump(-0.3, 1.5) * polynomial([1.0, 0.0, -2.0])
    assert (f.diff() * g).integrate() == pytest.approx(-(f * g.diff()).integrate(), abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_integral_of_a_derivative_vanishes(k):
    f = bump(0.4, 0.9) * polynomial([2.0, 1.0])
    assert f.diff(k).integrate() == pytest.approx(0.0, abs=1e-10)
