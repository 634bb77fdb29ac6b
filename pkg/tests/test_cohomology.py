import pytest

from calc.antibracket import Distribution, FormId, ProductForm, canonical_distributions
from calc.cohomology import (
    CALIBRATION_ORDER,
    M0,
    Calibration,
    Cochain1,
    Cochain2,
    check_bridge,
    check_lemma_coboundary,
    check_nilpotency,
    check_undeformed_jacobi,
    d2_adjoint,
    expected_table,
    jacobiator,
    jacobiator_table,
    lemma_pairs,
    random_cochains1,
    random_two_forms,
    single_jacobiator,
    verify_cocycle,
    verify_exactness_m7,
)
from calc.exceptions import NotInEPrime, ParityViolation
from calc.grassmann import DeformRing
from calc.utils import residual


def test_cochain_parity_must_be_homogeneous():
    mixed = Cochain2(((1.0, FormId(0)), (1.0, FormId(1))))
    with pytest.raises(ParityViolation):
        mixed.epsilon
    odd_coefficient = Cochain2.single(FormId(1), DeformRing.theta(1, 4, 3) * DeformRing.hbar(1, 4, 3))
    assert odd_coefficient.epsilon == 0


def test_without_drops_every_term_with_that_key():
    form = Cochain2(((1.0, FormId(0)), (0.5, FormId(4)), (2.0, FormId(4))))
    assert [f.key for _, f in form.without("m2_4").terms] == ["m2_0"]


def test_expected_table_shape():
    table = expected_table()
    assert table[(8, 2)] == "a"
    assert table[(9, 7)] == "−a"
    assert table[(6, 7)] == 8
    assert table[(2, 6)] == 9
    assert table[(2, 7)] == 10
    assert table[(8, 9)] == 11
    for j in (1, 5, 6, 7, 8):
        assert table[(11, j)] == "0"


def test_default_calibration_signs():
    calibration = Calibration()
    assert calibration.form(8, Distribution.delta()).sign == 1.0
    assert calibration.form(9).distribution is None
    assert [target for target, _ in CALIBRATION_ORDER] == [8, 9, 10, 11]


def test_exactness_requires_compact_distribution(small_tests):
    with pytest.raises(NotInEPrime):
        verify_exactness_m7(canonical_distributions()[2], small_tests)


def test_random_inputs_are_deterministic():
    assert [c.name for c in random_cochains1(3)] == [c.name for c in random_cochains1(3)]
    forms = random_two_forms(3, 6)
    assert [f.label() for f in forms] == [f.label() for f in random_two_forms(3, 6)]
    assert [f.epsilon for f in forms] == [0, 1, 0, 1, 0, 1]


def test_odd_form_has_no_single_jacobiator(witness_set):
    f, g, h = witness_set.witnesses["pattern_ooo"]
    assert single_jacobiator(FormId(1), f, g, h).is_zero


@pytest.mark.slow
def test_antibracket_satisfies_jacobi(small_tests):
    assert check_undeformed_jacobi(small_tests).passed


@pytest.mark.slow
@pytest.mark.parametrize("index", [1, 2, 3, 4, 5, 6])
def test_cocycles(index, small_tests):
    report = verify_cocycle(FormId(index), small_tests)
    assert report.passed, report.residual


@pytest.mark.slow
def test_m2_is_a_cocycle_on_xi_triples(witness_set):
    for name in ("pattern_ooo", "disjoint_xi"):
        t = witness_set.witnesses[name]
        assert residual(d2_adjoint(FormId(2), *t), t) < 1e-8, name


@pytest.mark.slow
def test_cocycle_check_covers_witnesses(witness_set):
    # witness_set 没有随机三元组，只能靠见证三元组判出乘积不是上闭链
    report = verify_cocycle(ProductForm(), witness_set)
    assert not report.passed
    assert verify_cocycle(FormId(2), witness_set).passed


@pytest.mark.slow
@pytest.mark.parametrize("M", canonical_distributions(), ids=["delta", "delta_prime", "kernel_one"])
def test_m7_is_a_cocycle(M, small_tests):
    assert verify_cocycle(FormId(7, M), small_tests).passed


@pytest.mark.slow
@pytest.mark.parametrize("M", canonical_distributions()[:2], ids=["delta", "delta_prime"])
def test_m7_is_exact_on_compact_distributions(M, small_tests):
    report = verify_exactness_m7(M, small_tests)
    assert report.passed
    assert report.details["cochain_sign"] == -1


@pytest.mark.slow
def test_product_is_not_a_cocycle(witness_set):
    report = verify_cocycle(ProductForm(), witness_set, expect="nonzero")
    assert report.passed
    assert report.residual > 1e-4


@pytest.mark.slow
def test_cocycle_jacobiator_with_m0_vanishes(small_tests):
    f, g, h = small_tests.triples[0]
    assert residual(jacobiator(M0, FormId(3), f, g, h), (f, g, h)) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("pair", lemma_pairs()[:4], ids=lambda p: f"{p[0].key}-{p[1].name}")
def test_lemma_coboundary(pair, small_tests):
    m, M = pair
    assert check_lemma_coboundary(m, M, small_tests.subset(4)).passed


@pytest.mark.slow
@pytest.mark.parametrize("M", random_cochains1(11, 5), ids=lambda c: c.name)
def test_d2_after_d1_vanishes(M, small_tests):
    assert check_nilpotency(M, small_tests.subset(4)).passed


@pytest.mark.slow
@pytest.mark.parametrize("m", random_two_forms(11, 4), ids=lambda m: m.label())
def test_bridge_identity(m, small_tests):
    assert check_bridge(m, small_tests.subset(4)).passed


@pytest.mark.slow
def test_nilpotency_for_distribution_cochain(small_tests):
    M = Cochain1.from_distribution(Distribution.delta(0.3, 1), sign=1.0)
    assert check_nilpotency(M, small_tests.subset(4)).passed


@pytest.mark.slow
def test_jacobiator_table(small_tests):
    report = jacobiator_table(small_tests.subset(4))
    assert report.sum_identity.passed
    assert not report.failures(), [(c.i, c.j, c.verdict) for c in report.failures()]
    assert report.cells[(11, 2)].verdict == "UNCHECKED"
    assert report.cells[(9, 7)].expected == "−a"
    assert report.calibration.signs == {8: -1.0, 9: 1.0, 10: -1.0, 11: -1.0}
