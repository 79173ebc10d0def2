import csv
import io
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from bdivtools.asymdim import (
    UNKNOWN,
    WeightIndex,
    asymptotic_table,
    closed_forms,
    degree_pipeline,
    parse_piscalar,
    siegel_volume,
    table_to_csv,
    trivial_dims,
)
from bdivtools.exactnum import PiScalar


def test_siegel_volumes():
    assert siegel_volume(1) == PiScalar(Fraction(1, 3), 1)
    assert siegel_volume(2) == PiScalar(Fraction(1, 270), 3)
    for g in range(1, 7):
        assert siegel_volume(g).pi_pow == g * (g + 1) // 2
    with pytest.raises(ValueError):
        siegel_volume(0)


def test_spot_values():
    assert closed_forms(WeightIndex(1, 1, 1)).value == Fraction(1, 6)
    assert str(closed_forms(WeightIndex(1, 1, 1)).form_a) == "1/6"
    assert closed_forms(WeightIndex(2, 1, 1)).value == Fraction(1, 36)
    assert closed_forms(WeightIndex(1, 2, 3)).value == 1
    assert degree_pipeline(WeightIndex(1, 1, 1)).rational() == Fraction(1, 6)
    assert closed_forms(WeightIndex(1, 1, 1, index=24)).value == 4
    assert closed_forms(WeightIndex(1, 1, 1, minus_id=True)).value == Fraction(1, 3)


def test_grid_agreement_and_positivity():
    for g, k, m, idx, mid in product(range(1, 7), (1, 2, 3), (1, 2, 3), (1, 2), (False, True)):
        rep = closed_forms(WeightIndex(g, k, m, idx, mid))
        assert rep.agree
        assert rep.form_c.pi_pow == 0
        assert rep.value > 0


def test_volume_form_c_consistency():
    rep = closed_forms(WeightIndex(1, 1, 1))
    assert (siegel_volume(1) * PiScalar(Fraction(2, 4)) / PiScalar(Fraction(1), 1)).rational() == Fraction(1, 6)
    assert rep.volume == siegel_volume(1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_homogeneity(g, k, m, l):
    base = closed_forms(WeightIndex(g, k, m)).value
    scaled = closed_forms(WeightIndex(g, l * k, l * m)).value
    assert scaled == base * l ** WeightIndex(g, k, m).n


def test_invalid_input():
    for bad in [(0, 1, 1), (1, 0, 1), (1, 1, -1), (1, 1, 1, 0)]:
        with pytest.raises(ValueError):
            WeightIndex(*bad)


def test_trivial_dimensions():
    assert trivial_dims(0, 0) == 1
    assert trivial_dims(-2, 5) == 0
    assert trivial_dims(0, 3) == 0
    assert trivial_dims(3, -1) == 0
    assert trivial_dims(4, 1) == UNKNOWN


def test_prediction_table():
    wi = WeightIndex(1, 1, 1)
    rows = asymptotic_table(wi, [0, 12, 24])
    assert rows[0]["predicted"] == 0
    assert rows[1]["predicted"] == 12
    assert rows[2]["predicted"] == 4 * rows[1]["predicted"]
    assert rows[1]["weight"] == 12 and rows[1]["index"] == 12
    with pytest.raises(ValueError):
        asymptotic_table(wi, [-1])
    parsed = list(csv.DictReader(io.StringIO(table_to_csv(rows))))
    assert [r["l"] for r in parsed] == ["0", "12", "24"]
    assert Fraction(parsed[1]["predicted"]) == 12
    assert float(parsed[2]["predicted_float"]) == 48


def test_json_forms_parse_back():
    for g in range(1, 5):
        rep = closed_forms(WeightIndex(g, 2, 1, 2))
        js = rep.to_json()
        assert parse_piscalar(js["formA"]) == rep.form_a
        assert parse_piscalar(js["V_g"]) == rep.volume
    assert parse_piscalar("1/3*pi^1") == PiScalar(Fraction(1, 3), 1)
