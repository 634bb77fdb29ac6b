import numpy as np
import pytest

from calc.antibracket import Distribution, EulerPower, FormId
from calc.cohomology import Calibration
from calc.deformation import (
    FAMILIES,
    RELATIONS,
    BasisChange,
    DeformParams,
    apply_basis_change,
    build_deformation,
    check_constraints,
    check_family,
    check_normalization_invariance,
    check_term_necessity,
    check_violation,
    classify_family,
    compare_normalization,
    distribution_from_spec,
    family_params,
    is_c4_preserving,
    normalization_sets,
    normalize_c4,
    params_from_dict,
    resolvent_terms,
    verify_jacobi_orderwise,
    violation_params,
)
from calc.exceptions import AugmentationViolation, ConfigError, NotNormalizable, ParityViolation
from calc.grassmann import DeformRing

K, N = 4, 3


def test_odd_parameter_must_be_odd():
    with pytest.raises(ParityViolation, match="c1"):
        DeformParams.build(K, N, c1=[(1, [], 1.0)]).validate()
    with pytest.raises(ParityViolation, match="c5"):
        DeformParams.build(K, N, c5=[(1, [1], 1.0)]).validate()


def test_parameters_live_in_the_augmentation_ideal():
    with pytest.raises(AugmentationViolation, match="c4"):
        DeformParams.build(K, N, c4=[(0, [], 1.0)]).validate()
    with pytest.raises(AugmentationViolation):
        DeformParams.build(K, N, M=[([(0, [], 1.0)], Distribution.delta())]).validate()


def test_unknown_parameter_rejected():
    with pytest.raises(ConfigError, match="c7"):
        DeformParams.build(K, N, c7=[(1, [], 1.0)])


def test_distribution_specs():
    assert distribution_from_spec({"type": "delta", "order": 1}) == Distribution.delta(0.0, 1)
    kernel = distribution_from_spec({"type": "kernel", "bump": [0.0, 1.0]})
    assert kernel.in_E_prime
    assert not distribution_from_spec({"type": "kernel", "polynomial": [1.0]}).in_E_prime
    with pytest.raises(ConfigError):
        distribution_from_spec({"type": "kernel"})
    with pytest.raises(ConfigError):
        distribution_from_spec({"type": "gauss"})


def test_params_document_round_trip():
    params = family_params("shared_theta")
    again = params_from_dict(params.to_dict())
    assert again.to_dict() == params.to_dict()


def test_params_document_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="未知字段"):
        params_from_dict({"order": 4, "thetas": 3, "c9": []})
    with pytest.raises(ConfigError):
        params_from_dict({"M": [{"coefficient": [[1, [], 1.0]]}]})


@pytest.mark.parametrize("name", FAMILIES)
def test_families_satisfy_the_constraints(name):
    report = check_constraints(family_params(name))
    assert report.passed
    assert report.family == name
    assert not report.filtration_warnings


def test_zero_parameters_are_undeformed():
    assert classify_family(DeformParams.zero(K, N)) == "undeformed"


@pytest.mark.parametrize("relation", RELATIONS)
def test_single_violation_is_reported(relation):
    report = check_constraints(violation_params(relation))
    violated = report.violations()
    assert [r["relation"] for r in violated] == [f"{relation} = 0"]
    assert violated[0]["hbar_order"] == 2
    assert report.family == "general"


def test_filtration_warning():
    params = DeformParams.build(K, N, c5=[(1, [1, 2], 1.0)])
    report = check_constraints(params)
    assert report.passed
    assert report.filtration_warnings == ["c5 的 θ 次数超过 ℏ 次数"]


def test_resolvent_terms_alternate():
    c4 = DeformRing.hbar(1, K, N)
    terms = resolvent_terms(c4)
    assert [t[1] for t in terms] == [EulerPower(j) for j in range(4)]
    assert [t[0].coefficient(j + 1) for j, t in enumerate(terms)] == [1.0, -0.5, 0.25, -0.125]


def test_build_resolvent_family():
    C = build_deformation(family_params("resolvent"))
    assert [form.key for _, form in C.form.terms] == ["m2_0", "b_0", "b_1", "b_2", "b_3"]
    assert C.at_order(0).terms == ((1.0, FormId(0)),)
    first = C.at_order(1).terms
    assert len(first) == 1
    assert first[0][0].coeffs == {(1, ()): 1.0}


def test_build_even_shift_family_has_correction_terms():
    C = build_deformation(family_params("even_shift"), Calibration())
    keys = [form.key for _, form in C.form.terms]
    for key in ("m2_2", "m2_6", "m2_7", "m2_8", "m2_9", "m2_10", "m2_11"):
        assert key in keys
    assert "m2_9" not in [form.key for _, form in C.without("m2_9").form.terms]


def test_normalize_c4_keeps_an_already_normal_c4():
    params = DeformParams.build(K, N, c4=[(2, [1, 2], 1.0), (3, [1, 2], -0.5)])
    normalized, change = normalize_c4(params)
    assert np.allclose(change.forward[:, :, 0], np.eye(3))
    assert np.allclose(change.forward[:, :, 1:], 0.0)
    assert normalized.to_dict() == params.to_dict()


def test_normalize_c4_permutes_a_single_pair():
    params = DeformParams.build(K, N, c4=[(2, [2, 3], 1.0)])
    normalized, change = normalize_c4(params)
    assert change.forward.shape == (3, 3, K + 1)
    # θ′₁ = θ₂，θ′₂ = θ₃，θ′₃ = θ₁
    assert np.allclose(change.forward[:, :, 0], [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert np.allclose(change.forward[:, :, 1:], 0.0)
    assert normalized.c4.coeffs == {(2, (1, 2)): pytest.approx(1.0)}


def test_normalize_c4_permutes_theta1_theta3():
    params = DeformParams.build(K, N, c4=[(2, [1, 3], 0.5)])
    normalized, change = normalize_c4(params)
    matrix = change.forward[:, :, 0]
    assert sorted(np.abs(matrix).sum(axis=0)) == [1.0, 1.0, 1.0]
    assert set(np.unique(matrix)) <= {0.0, 1.0}
    # θ₁θ₃ 的系数 0.5 对应 v₂ = −¼，新系数 2v₂
    assert normalized.c4.coeffs == {(2, (1, 2)): pytest.approx(-0.5)}


def test_normalize_c4_cyclic_sum():
    params = DeformParams.build(K, N, c4=[(2, [2, 3], 1.0), (2, [3, 1], 1.0), (2, [1, 2], 1.0)])
    normalized, _ = normalize_c4(params)
    others = {k: v for k, v in normalized.c4.coeffs.items() if k != (2, (1, 2))}
    assert all(abs(v) < 1e-9 for v in others.values())
    assert abs(normalized.c4.coefficient(2, (1, 2))) == pytest.approx(1.0)


def test_normalize_c4_with_hbar_dependent_direction():
    params = DeformParams.build(K, N, c4=[(2, [2, 3], 1.0), (2, [1, 2], 0.5), (3, [3, 1], 0.25)])
    normalized, _ = normalize_c4(params)
    # 首项里 θ₂θ₃ 的系数最大，新系数取它
    assert normalized.c4.coefficient(2, (1, 2)) == pytest.approx(1.0)
    others = {k: v for k, v in normalized.c4.coeffs.items() if k != (2, (1, 2))}
    assert all(abs(v) < 1e-9 for v in others.values())


@pytest.mark.parametrize(
    "c4, thetas",
    [
        ([], 3),
        ([(1, [], 1.0)], 3),
        ([(1, [1], 1.0)], 3),
        ([(0, [1, 2], 1.0)], 3),
        ([(1, [1, 2], 1.0)], 3),
        ([(2, [2, 3], 1.0), (1, [1, 2], 0.5)], 3),
        ([(2, [1, 2], 1.0)], 4),
    ],
)
def test_normalize_c4_rejects(c4, thetas):
    with pytest.raises(NotNormalizable):
        normalize_c4(DeformParams.build(K, thetas, c4=c4))


def test_normalization_sets_are_normalizable():
    sets = normalization_sets()
    assert len(sets) == 5
    for name, params in sets.items():
        normalized, _ = normalize_c4(params)
        assert all(idx == (1, 2) for (_, idx), v in normalized.c4.coeffs.items() if abs(v) > 1e-9), name
    assert check_constraints(sets["violating"]).family == "general"

def test_basis_change_helpers():
    identity = BasisChange.identity(N, K)
    assert is_c4_preserving(identity)
    assert identity.images()[1] == DeformRing.theta(2, K, N)
    params = family_params("normalized_c4")
    assert apply_basis_change(params, identity).to_dict() == params.to_dict()
    mixing = BasisChange.from_constant([[1, 1, 0], [0, 1, 0], [0, 0, 1]], K)
    assert is_c4_preserving(mixing)
    swap = BasisChange.from_constant([[0, 0, 1], [0, 1, 0], [1, 0, 0]], K)
    assert not is_c4_preserving(swap)
    assert np.allclose(swap.inverse[:, :, 0], swap.forward[:, :, 0])


def test_c4_preserving_change_keeps_normalized_c4():
    params = DeformParams.build(K, N, c4=[(2, [1, 2], 2.0)])
    change = BasisChange.from_constant([[2, 1, 0], [1, 1, 0], [0, 0, 1]], K)
    moved = apply_basis_change(params, change)
    # θ₁θ₂ = det(A⁻¹)·θ′₁θ′₂，这里 det A = 1
    assert moved.c4.coefficient(2, (1, 2)) == pytest.approx(2.0)


@pytest.mark.slow
def test_undeformed_bracket_passes_every_order(witness_set):
    C = build_deformation(DeformParams.zero(K, N))
    report = verify_jacobi_orderwise(C, witness_set)
    assert report.passed
    assert all(v == 0.0 for p, v in report.residuals.items() if p > 0)


@pytest.mark.slow
@pytest.mark.parametrize("name", FAMILIES)
def test_families_satisfy_jacobi(name, witness_set):
    assert check_family(name, witness_set).passed


@pytest.mark.slow
@pytest.mark.parametrize("relation", RELATIONS)
def test_violation_shows_up_at_second_order(relation, witness_set):
    report = check_violation(relation, witness_set)
    assert report.passed, report.details
    assert report.details["residuals"]["1"] < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("key", ["m2_9", "m2_10", "m2_11"])
def test_correction_terms_are_needed(key, witness_set):
    assert check_term_necessity(key, witness_set).passed


@pytest.mark.slow
def test_normalization_keeps_verdicts(witness_set):
    params = DeformParams.build(K, N, c4=[(2, [2, 3], 1.0), (2, [1, 2], 0.5)])
    _, _, verdicts = compare_normalization(params, witness_set.with_witnesses(["pattern_ooo", "pattern_eoo"]))
    assert verdicts["consistent"]


@pytest.mark.slow
def test_normalization_invariance_on_all_sets(witness_set):
    checks = check_normalization_invariance(witness_set.with_witnesses(["pattern_ooo", "pattern_eoo"]))
    assert len(checks) == 5
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]
    violating = [c for c in checks if c.name.startswith("violating")][0]
    assert violating.details["before"]["passed"] is False
