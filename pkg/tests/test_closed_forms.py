import pytest

from calc.antibracket import Distribution
from calc.closed_forms import CLOSED_FORMS, check_closed_form, closed_form_jacobiator
from calc.testfns import disjoint_witness, parity_witnesses


def test_closed_forms_cover_the_pairs():
    assert set(CLOSED_FORMS) == {
        (1, 3), (1, 4), (2, 3), (2, 4), (3, 4), (3, 5), (3, 6), (3, 7), (4, 5), (4, 6), (4, 7),
    }


def test_closed_form_has_only_a_body():
    f, g, h = parity_witnesses()["pattern_oee"]
    value = closed_form_jacobiator(3, 4, f, g, h)
    assert value.pure_part().xi.is_zero


@pytest.mark.slow
@pytest.mark.parametrize("pair", sorted(CLOSED_FORMS), ids=lambda p: f"J{p[0]}{p[1]}")
def test_closed_form_matches_definition(pair):
    triples = tuple(parity_witnesses().values()) + (disjoint_witness(),)
    report = check_closed_form(*pair, triples)
    assert report.passed, report.residual


@pytest.mark.slow
@pytest.mark.parametrize("pair", [(3, 7), (4, 7)], ids=["J37", "J47"])
def test_closed_form_with_delta_prime(pair):
    triples = tuple(parity_witnesses().values())[:4]
    assert check_closed_form(*pair, triples, M=Distribution.delta(0.0, 1)).passed
