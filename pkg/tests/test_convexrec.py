import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from bdivtools.convexrec import (
    DomainError,
    ToleranceUnreachable,
    lelong_number,
    recession_gap_check,
    make_linear_oracle,
    make_logdet_oracle,
    make_oracle,
    make_qol_oracle,
    make_table_oracle,
    oracle_from_json,
    recession,
    to_mpf,
    sum_oracles,
)
from bdivtools.exactnum import RatMatrix

ONE = RatMatrix.of([[1]])
E11, E22 = RatMatrix.diag([1, 0]), RatMatrix.diag([0, 1])


def qol_g1():
    return make_qol_oracle([ONE, ONE], [(0,), (1,)])


def exp_oracle():
    # -u + e^-u on u >= 0, gradient bounded by 2
    return make_oracle(lambda u: -to_mpf(u[0]) + mpmath.exp(-to_mpf(u[0])), 1, [0], 2,
                       bounded_above=True, exact=False)


def test_logdet_values():
    g = make_logdet_oracle([ONE])
    assert g((1,)) == 0
    assert float(g((3,))) == pytest.approx(-math.log(3))
    h = make_logdet_oracle([E11, E22])
    assert h((1, 1)) == 0
    assert h((2, 2)) < h((1, 1))
    assert h.bounded_above
    with pytest.raises(ValueError):
        make_logdet_oracle([E11, E11])
    with pytest.raises(DomainError):
        g((Fraction(1, 2),))


def test_qol_values():
    g = qol_g1()
    assert g((1, 1)) == Fraction(1, 2)
    assert g((2, 2)) == 1
    assert g((3, 1)) == Fraction(1, 4)
    z = make_qol_oracle([ONE, ONE], [(0,), (0,)])
    assert z((5, 7)) == 0
    assert g.convexity_defects() == []


def test_recession_examples():
    assert abs(float(recession(make_logdet_oracle([ONE]), None, (1,)).value)) <= 1e-6
    assert float(recession(exp_oracle(), (0,), (1,)).value) == pytest.approx(-1, abs=1e-6)
    r = recession(qol_g1(), None, (1, 1))
    assert r.value == Fraction(1, 2) and r.error_bound <= 1e-6
    assert r.scaled(3).value == Fraction(3, 2)


def test_recession_errors():
    with pytest.raises(DomainError):
        recession(qol_g1(), None, (-1, 1))
    no_lip = make_oracle(lambda u: -u[0], 1, [0])
    with pytest.raises(ToleranceUnreachable):
        recession(no_lip, None, (1,))
    slow = make_oracle(lambda u: -mpmath.sqrt(to_mpf(u[0])), 1, [1], 1, exact=False)
    with pytest.raises(ToleranceUnreachable):
        recession(slow, None, (1,), tol=1e-30)


def test_lelong_examples():
    bounded = make_table_oracle([(0,)], [5])
    assert lelong_number(bounded, (1,)) == 0
    assert lelong_number(make_linear_oracle([-1]), (1,)) == 1


def test_gap_examples():
    # conical and convex, hence subadditive: the gap vanishes along x's ray
    assert recession_gap_check(qol_g1(), samples=30).max_gap <= 1e-6
    assert recession_gap_check(qol_g1(), samples=[(2, 2), (5, 5)]).max_gap == 0
    rep = recession_gap_check(make_logdet_oracle([ONE]), samples=30)
    assert rep.passed and rep.max_gap <= 1e-6
    assert recession_gap_check(exp_oracle(), x=(0,), samples=30).passed


def test_json_round_trip():
    for o in (qol_g1(), make_logdet_oracle([E11, E22]), make_linear_oracle([1, -2], 3),
              make_table_oracle([(1, 0), (0, 1)], [0, 1]), sum_oracles([qol_g1(), make_logdet_oracle([ONE, ONE])], [2, 1])):
        p = oracle_from_json(o.to_json())
        for u in ((1, 1), (2, 5), (Fraction(7, 2), 3)):
            if o.dim == 2:
                assert float(p(u)) == pytest.approx(float(o(u)), rel=1e-30, abs=1e-30)


ORACLES = [
    qol_g1(),
    make_logdet_oracle([ONE, ONE]),
    make_qol_oracle([RatMatrix.of([[2, 1], [1, 1]]), RatMatrix.of([[1, 0], [0, 3]])], [(1, 0), (0, 1)]),
    make_logdet_oracle([RatMatrix.of([[2, 1], [1, 1]]), RatMatrix.of([[1, 0], [0, 3]])]),
]
direction = st.tuples(st.fractions(0, 4, max_denominator=3), st.fractions(0, 4, max_denominator=3))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(range(len(ORACLES))), direction, st.sampled_from((2, 3, Fraction(1, 2))))
def test_positive_homogeneity(i, y, lam):
    g = ORACLES[i]
    a = recession(g, None, y).value
    b = recession(g, None, tuple(lam * t for t in y)).value
    assert abs(float(b) - float(lam * a)) <= 1e-5


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(range(len(ORACLES))), direction, st.tuples(st.integers(0, 20), st.integers(0, 20)))
def test_basepoint_independence(i, y, shift):
    g = ORACLES[i]
    x2 = tuple(c + s for c, s in zip(g.corner, shift))
    assert abs(float(recession(g, None, y).value) - float(recession(g, x2, y).value)) <= 2e-6


@settings(max_examples=25, deadline=None)
@given(direction, direction)
def test_lipschitz_preserved(y1, y2):
    for g in ORACLES:
        d = math.dist([float(t) for t in y1], [float(t) for t in y2])
        diff = abs(float(recession(g, None, y1).value) - float(recession(g, None, y2).value))
        assert diff <= float(g.lipschitz) * d + 2e-6


def test_bounded_above_gives_nonnegative_lelong():
    rng = random.Random(5)
    for g in ORACLES:
        if not g.bounded_above:
            continue
        for _ in range(50):
            v = (rng.randint(0, 6), rng.randint(0, 6))
            assert float(lelong_number(g, v)) >= -1e-6


def test_conical_fixed_point():
    g = qol_g1()
    for y in ((1, 2), (3, 1), (Fraction(5, 2), 1)):
        assert abs(float(recession(g, None, y).value - g(y))) <= 1e-6
