import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bdivtools.convexrec import lelong_number
from bdivtools.exactnum import NotPSDError, RatMatrix
from bdivtools.siegelcones import (
    AdmissibleDecomposition,
    DivisorialFunction,
    GroupElement,
    PreconditionError,
    SiegelPoint,
    act,
    admissibility_check,
    cartier_diagnostic,
    chart_model,
    decomposition_from_json,
    descended_function,
    divisorial_check,
    divisorial_from_ray_values,
    lelong_at_ray,
    quadratic_term,
    reduce_point,
    standard_decomposition_g1,
    sufficiently_negative_builder,
    tilde_membership,
    transformation_defect,
)

DEC = standard_decomposition_g1()
PHI = sufficiently_negative_builder(DEC)
T = GroupElement.translation


def pt(*v):
    return SiegelPoint.from_vector(v)


def scaled_dec():
    return AdmissibleDecomposition(1, ((), ((1,),)), ((), ((1, 0),), ((1, 2),), ((1, 0), (1, 2))), (), ((1,),))


def test_membership():
    out = tilde_membership([[0]], [1])
    assert out.kind == "OUT" and out.kernel_vector == (1,)
    inside = tilde_membership([[2]], [1])
    assert inside.kind == "IN" and inside.alpha == (Fraction(1, 2),)
    assert tilde_membership([[1, 0], [0, 0]], [3, 0]).alpha == (3, 0)
    assert not tilde_membership([[1, 0], [0, 0]], [0, 1]).inside
    with pytest.raises(NotPSDError):
        tilde_membership([[-1]], [0])


def test_quadratic_term_matches_pseudoinverse():
    assert quadratic_term(pt(2, 1)) == Fraction(1, 2)
    assert quadratic_term(pt(1, 1)) == 1
    p = SiegelPoint(RatMatrix.of([[1, 0], [0, 0]]), (3, 0))
    assert quadratic_term(p) == 9
    with pytest.raises(ValueError):
        quadratic_term(pt(0, 1))


def test_vector_coordinates_round_trip():
    p = SiegelPoint(RatMatrix.of([[2, Fraction(1, 2)], [Fraction(1, 2), 1]]), (1, -1))
    assert p.to_vector() == (2, 1, 1, 1, -1)
    assert SiegelPoint.from_vector(p.to_vector()) == p


def test_action_examples():
    assert act(GroupElement.identity(1), pt(3, 2)) == pt(3, 2)
    assert act(T((1,)), pt(1, 0)) == pt(1, 1)
    assert act(T((-1,)), pt(2, 1)) == pt(2, -1)
    with pytest.raises(ValueError):
        GroupElement(((2,),), (0,))


def _random_element(rng, g):
    while True:
        a = [[rng.randint(-2, 2) for _ in range(g)] for _ in range(g)]
        if abs(RatMatrix.of(a).det()) == 1:
            return GroupElement(tuple(map(tuple, a)), tuple(rng.randint(-3, 3) for _ in range(g)))


def _random_point(rng, g):
    m = RatMatrix.of([[rng.randint(-2, 2) for _ in range(g)] for _ in range(g)])
    om = m @ m.T
    return SiegelPoint(om, om.rvecmul(tuple(Fraction(rng.randint(-4, 4), 2) for _ in range(g))))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(0, 10 ** 6))
def test_action_is_a_group_action(g, seed):
    rng = random.Random(seed)
    a, b, p = _random_element(rng, g), _random_element(rng, g), _random_point(rng, g)
    assert act(a, act(b, p)) == act(a * b, p)
    assert act(a.inverse(), act(a, p)) == p
    assert a * a.inverse() == GroupElement.identity(g)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.integers(0, 10 ** 6))
def test_group_matrix_matches_action(g, seed):
    rng = random.Random(seed)
    e, p = _random_element(rng, g), _random_point(rng, g)
    mat = e.matrix()
    v = p.to_vector()
    if g == 1:
        assert all(x.denominator == 1 for row in mat for x in row)
    image = tuple(sum(mat[r][c] * v[c] for c in range(len(v))) for r in range(len(v)))
    assert image == act(e, p).to_vector()


def test_reduce_point():
    gamma, q, idx = reduce_point(DEC, pt(1, Fraction(5, 2)))
    assert gamma.lam == (2,)
    assert q == pt(1, Fraction(1, 2))
    assert act(gamma, q) == pt(1, Fraction(5, 2))
    assert DEC.pi_cones[idx] == ((1, 0), (1, 1))
    assert reduce_point(DEC, pt(0, 1)) is None


def test_admissibility_reports():
    assert admissibility_check(DEC).passed
    bad = admissibility_check(scaled_dec())
    assert not bad.passed
    assert {"pi-3"} <= {i.item for i in bad.failures()}
    missing = AdmissibleDecomposition(1, ((), ((1,),)), ((), ((1, 0),), ((1, 0), (1, 1))), (), ((1,),))
    rep = admissibility_check(missing)
    assert "pi-2" in {i.item for i in rep.failures()}
    assert rep["pi-2"].witness is not None


def test_translate_rays_follow_transformation_law():
    assert PHI.values == {(1, 0): 0, (1, 1): -1}
    for j in range(-4, 5):
        assert PHI(pt(1, j)) == -j * j
    rep = divisorial_check(PHI)
    assert rep.passed, rep.to_json()


def test_exact_quadratic_satisfies_law():
    rng = random.Random(3)
    for _ in range(30):
        q = _random_point(rng, 1)
        if q.zeta is None:
            continue
        lam = (rng.randint(-3, 3),)
        lhs = -quadratic_term(q) - (-quadratic_term(act(T(lam), q)))
        assert lhs == transformation_defect(q, lam)


def test_zero_function_fails_law():
    zero = divisorial_from_ray_values(DEC, {(1, 0): 0, (1, 1): 0})
    rep = divisorial_check(zero)
    assert not rep.passed
    assert rep["div-4"].passed is False
    assert transformation_defect(pt(1, 0), (1,)) == 1


def test_denominator_bound_item():
    phi = divisorial_from_ray_values(DEC, {(1, 0): 0, (1, 1): Fraction(-1, 7)}, denominator_bound=3)
    assert not divisorial_check(phi)["div-2"].passed


def test_builder_flags_and_values():
    assert PHI.has("admissible") and PHI.has("sufficiently_negative")
    assert PHI.has("concave") and PHI.has("polarization")
    assert not PHI.has("strictly_anti_effective")
    assert PHI(pt(2, 1)) == -1 <= -quadratic_term(pt(2, 1))
    for r in [(1, 0), (1, 1)]:
        assert PHI(pt(*r)) == -quadratic_term(pt(*r))
    for j in range(-3, 4):
        for omega in range(1, 5):
            p = pt(omega, j)
            assert PHI(p) <= -quadratic_term(p)


def test_builder_on_scaled_cone():
    rep = sufficiently_negative_builder(scaled_dec(), return_report=True)
    phi = rep.function
    assert phi.values[(1, 2)] == -4
    assert rep.sufficiently_negative
    assert phi.fundamental_value((2, 2), 3) == -4
    assert -quadratic_term(pt(2, 2)) == -2


def test_descended_function():
    g = descended_function(1, PHI)
    assert g(pt(2, 1)) == Fraction(1, 2)
    assert g(pt(1, 0)) == 0 and g(pt(1, 1)) == 0
    assert g(pt(1, Fraction(3, 2))) == g(act(T((-1,)), pt(1, Fraction(3, 2)))) == g(pt(1, Fraction(1, 2)))
    assert g(pt(1, Fraction(1, 2))) == Fraction(1, 4)
    with pytest.raises(PreconditionError):
        descended_function(1, lambda p: -quadratic_term(p))
    half = divisorial_from_ray_values(DEC, {(1, 0): 0, (1, 1): Fraction(-1, 2)})
    with pytest.raises(PreconditionError):
        descended_function(1, half)
    assert descended_function(2, half)(pt(3, 1)) == Fraction(1, 3)


def test_descended_function_is_invariant():
    g = descended_function(2, PHI)
    rng = random.Random(11)
    for _ in range(50):
        p = pt(Fraction(rng.randint(1, 12), rng.randint(1, 3)), Fraction(rng.randint(-20, 20), rng.randint(1, 4)))
        e = T((rng.randint(-4, 4),))
        assert g(p) == g(act(e, p))


def test_lelong_numbers():
    assert lelong_at_ray(1, PHI, (2, 1)) == Fraction(1, 2)
    assert lelong_at_ray(3, PHI, (2, 1)) == Fraction(3, 2)
    assert lelong_at_ray(1, PHI, (1, 0), require_interior=False) == 0
    with pytest.raises(ValueError):
        lelong_at_ray(1, PHI, (1, 0))
    with pytest.raises(ValueError):
        lelong_at_ray(1, PHI, (4, 2))
    g = descended_function(1, PHI)
    for a in range(1, 6):
        for b in range(1, 6):
            u = (a + b, b)
            if math.gcd(a, b) == 1:
                assert lelong_at_ray(1, PHI, u) == g(u) == Fraction(a * b, a + b)


def test_chart_model_recession_gives_lelong():
    for m in (1, 2):
        chart = chart_model(m, PHI)
        nu = lelong_number(chart, (1, 1))
        assert abs(float(nu) - float(lelong_at_ray(m, PHI, (2, 1)))) < 1e-6


def test_cartier_diagnostic():
    one = cartier_diagnostic(1, PHI)
    assert one.kind == "NOT_CARTIER"
    w = one.witness
    assert (w.x, w.y, w.z) == ((1, 0), (1, 1), (2, 1))
    assert tuple(w.values) == (0, 0, Fraction(1, 2))
    assert w.verify()
    two = cartier_diagnostic(2, PHI)
    assert (two.witness.x, two.witness.y, two.witness.z) == (w.x, w.y, w.z)
    assert tuple(two.witness.values) == tuple(2 * v for v in w.values)
    assert DEC.cone_objects[3].contains((2, 1))
    with pytest.raises(PreconditionError):
        cartier_diagnostic(1, lambda p: -quadratic_term(p))


def test_json_round_trips():
    d = decomposition_from_json(json.dumps(DEC.to_json()))
    assert d == DEC
    payload = json.dumps(PHI.to_json())
    back = json.loads(payload)
    phi = divisorial_from_ray_values(DEC, {tuple(r): Fraction(v) for r, v in back["ray_values"]})
    assert isinstance(phi, DivisorialFunction) and phi.values == PHI.values
    json.dumps(cartier_diagnostic(1, PHI).to_json())
    json.dumps(admissibility_check(scaled_dec()).to_json())
