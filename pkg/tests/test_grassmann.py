from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calc.exceptions import NotUnitForm, TruncationMismatch
from calc.grassmann import (
    DeformRing,
    SuperFun,
    canonical_thetas,
    cochain_grassmann_parity,
    epsilon_of,
    merge_thetas,
    parity_of,
    ring_inverse_unit,
    substitute_generators,
    superfun_product,
    xi_integral,
    MIXED,
)
from calc.symfun import bump, evaluation_grid, polynomial

K, N = 4, 3

monomials = st.tuples(
    st.integers(min_value=0, max_value=2),
    st.lists(st.integers(min_value=1, max_value=N), max_size=3, unique=True),
    st.integers(min_value=-3, max_value=3),
)
rings = st.lists(monomials, max_size=4).map(lambda ts: DeformRing.from_triples(ts, K, N))


def theta(i):
    return DeformRing.theta(i, K, N)


def hbar(p=1):
    return DeformRing.hbar(p, K, N)


@pytest.mark.parametrize(
    "indices, expected",
    [((1, 2), (1, (1, 2))), ((2, 1), (-1, (1, 2))), ((3, 1, 2), (1, (1, 2, 3))), ((1, 1), (0, ()))],
)
def test_canonical_thetas(indices, expected):
    assert canonical_thetas(indices) == expected


def test_merge_thetas_sign():
    assert merge_thetas((2,), (1,)) == (-1, (1, 2))
    assert merge_thetas((1, 3), (2,)) == (-1, (1, 2, 3))
    assert merge_thetas((1,), (1, 2))[0] == 0


def test_odd_generators_anticommute_and_square_to_zero():
    assert (theta(1) * theta(1)).is_zero
    assert (theta(1) * theta(2) + theta(2) * theta(1)).is_zero


def test_truncation_drops_high_orders():
    assert (hbar(3) * hbar(2)).is_zero
    assert (hbar(2) * hbar(2)).coefficient(4) == 1.0


def test_mismatched_truncation_raises():
    other = DeformRing.hbar(1, K + 1, N)
    with pytest.raises(TruncationMismatch):
        hbar() + other


@settings(max_examples=40, deadline=None)
@given(rings, rings, rings)
def test_ring_multiplication_is_associative(a, b, c):
    assert ((a * b) * c).coeffs == (a * (b * c)).coeffs


@settings(max_examples=40, deadline=None)
@given(rings, rings, rings)
def test_ring_multiplication_distributes(a, b, c):
    assert (a * (b + c)).coeffs == (a * b + a * c).coeffs


@settings(max_examples=40, deadline=None)
@given(rings, rings)
def test_homogeneous_elements_supercommute(a, b):
    pa, pb = a.parity(), b.parity()
    if pa is None or pb is None:
        return
    sign = -1.0 if pa * pb else 1.0
    assert (a * b - (b * a).scale(sign)).is_zero


@settings(max_examples=40, deadline=None)
@given(rings)
def test_inverse_of_unit_form(a):
    eps = DeformRing.from_dict({k: v for k, v in a.terms if k[0] > 0}, K, N)
    u = DeformRing.one(K, N) + eps
    inv = ring_inverse_unit(u)
    product = u * inv - DeformRing.one(K, N)
    assert product.max_abs() < 1e-9


def test_inverse_requires_unit_form():
    with pytest.raises(NotUnitForm):
        ring_inverse_unit(hbar())
    with pytest.raises(NotUnitForm):
        ring_inverse_unit(DeformRing.one(K, N) + theta(1))


def test_parity_and_filtration():
    assert theta(1).parity() == 1
    assert hbar().parity() == 0
    assert (hbar() + theta(1)).parity() is None
    assert (hbar() * theta(1)).respects_filtration()
    assert not theta(1).respects_filtration()
    assert not (hbar() * theta(1) * theta(2)).respects_filtration()


def test_augmentation_ideal():
    assert (hbar() * theta(1)).in_augmentation_ideal()
    assert not theta(1).in_augmentation_ideal()
    assert not DeformRing.one(K, N).in_augmentation_ideal()


def test_restrict_and_chop():
    a = hbar() + hbar(2).scale(3.0) + DeformRing.monomial(2, (1, 2), 1e-14, K, N)
    assert a.restrict(1).coeffs == {(1, ()): 1.0}
    assert a.chop().coeffs == {(1, ()): 1.0, (2, ()): 3.0}


def test_substitute_generators_swaps_basis():
    a = hbar() * theta(1) * theta(2)
    swapped = substitute_generators(a, [theta(2), theta(1), theta(3)])
    assert swapped.coeffs == {(1, (1, 2)): -1.0}


def test_ring_json_round_trip():
    a = hbar() * theta(1) + hbar(2).scale(-0.5) + hbar(3) * theta(1) * theta(3)
    assert DeformRing.from_json(a.to_json(), K, N) == a


def test_superfun_parities():
    odd_fun = SuperFun.pure(xi=bump(0, 1), order=K, thetas=N)
    even_fun = SuperFun.pure(body=polynomial([1, 1]), order=K, thetas=N)
    # ξ 部分 ε=1，ϵ=0；体部分 ε=0，ϵ=1
    assert epsilon_of(odd_fun) == 0
    assert epsilon_of(even_fun) == 1
    assert parity_of(odd_fun + even_fun) is MIXED
    with pytest.raises(ValueError):
        epsilon_of(odd_fun + even_fun)
    colored = odd_fun.ring_scale(hbar() * theta(1))
    assert epsilon_of(colored) == 1


def test_superfun_product_sign_with_odd_coefficient():
    f = SuperFun.pure(xi=bump(0, 1), order=K, thetas=N)
    g = SuperFun.pure(body=polynomial([2.0]), order=K, thetas=N).ring_scale(theta(1))
    product = superfun_product(f, g)
    component = product.comps[(0, (1,))]
    # ξf₀ 越过 θ₁ 变号
    assert component.xi(0.0) == pytest.approx(-2.0 * bump(0, 1)(0.0))


def test_xi_integral_weights():
    f = SuperFun.pure(xi=bump(0, 1), body=polynomial([0, 1]), order=K, thetas=N)
    assert xi_integral(f, "1").pure_part().body(0.0) == pytest.approx(bump(0, 1)(0.0))
    assert xi_integral(f, "xi").pure_part().body(2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        xi_integral(f, "x")


@pytest.mark.parametrize("epsilon, arity, expected", [(0, 1, 0), (1, 1, 1), (0, 2, 1), (1, 2, 0)])
def test_cochain_grassmann_parity(epsilon, arity, expected):
    assert cochain_grassmann_parity(epsilon, arity) == expected


def _product_elements():
    a = bump(0, 1) * polynomial([1, 0.5])
    return [
        SuperFun.pure(xi=a, order=K, thetas=N),
        SuperFun.pure(body=polynomial([1, 2]), order=K, thetas=N),
        SuperFun.pure(xi=bump(0.3, 1.2), order=K, thetas=N).ring_scale(theta(1)),
        SuperFun.pure(body=bump(-0.2, 1.0), order=K, thetas=N).ring_scale(hbar() * theta(2)),
    ]


@pytest.mark.parametrize("i, j", [(i, j) for i in range(4) for j in range(4)])
def test_superfun_product_supercommutes(i, j):
    f, g = _product_elements()[i], _product_elements()[j]
    sign = -1.0 if parity_of(f).eps * parity_of(g).eps else 1.0
    diff = superfun_product(f, g) - superfun_product(g, f).scale(sign)
    assert diff.max_abs(evaluation_grid()) < 1e-12


def test_superfun_product_is_associative():
    elements = _product_elements()
    mixed = SuperFun.pure(xi=bump(0.1, 0.8), body=polynomial([0, 1]), order=K, thetas=N).ring_scale(hbar())
    elements.append(mixed + elements[2])
    for f, g, h in product(elements, repeat=3):
        left = superfun_product(superfun_product(f, g), h)
        right = superfun_product(f, superfun_product(g, h))
        assert (left - right).max_abs(evaluation_grid()) < 1e-12
