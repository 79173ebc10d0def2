from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from bdivtools.polytopes import Polytope, UnboundedPolytopeError


def test_unit_square_hrep():
    p = Polytope.from_hrep([((1, 0), 0), ((0, 1), 0), ((-1, 0), -1), ((0, -1), -1)])
    assert sorted(p.vertices) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert p.volume == 1 and p.normalized_volume() == 2
    assert p.count_lattice_points(3) == 16


def test_simplex_and_cube():
    tri = Polytope.from_vertices([(0, 0), (1, 0), (0, 1)])
    assert tri.volume == Fraction(1, 2)
    assert [tri.count_lattice_points(l) for l in (1, 2, 5)] == [3, 6, 21]
    cube = Polytope.from_vertices(list(product((0, 1), repeat=3)))
    assert cube.volume == 1 and cube.count_lattice_points(2) == 27
    tet = Polytope.from_vertices([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert tet.volume == Fraction(1, 6)
    assert tet.count_lattice_points(4) == 35


def test_lower_dimensional():
    seg = Polytope.from_vertices([(0, 0), (2, 2), (1, 1)])
    assert seg.dim == 1 and seg.volume == 0
    assert seg.count_lattice_points(1) == 3
    pt = Polytope.from_vertices([(Fraction(1, 2), 0)])
    assert pt.count_lattice_points(1) == 0 and pt.count_lattice_points(2) == 1


def test_unbounded_rejected():
    with pytest.raises(UnboundedPolytopeError):
        Polytope.from_hrep([((1, 0), 0), ((0, 1), 0)])


def test_empty_hrep():
    p = Polytope.from_hrep([((1, 0), 1), ((-1, 0), 0), ((0, 1), 0), ((0, -1), -1)])
    assert p.is_empty and p.volume == 0


coords = st.integers(-4, 4)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=8))
def test_hull_contains_points_and_pick(points):
    p = Polytope.from_vertices(points)
    assert all(p.contains(q) for q in points)
    if p.dim == 2:
        # Pick's theorem: A = I + B/2 - 1 -> 2A = 2 * count - B - 2
        pts = {tuple(q) for q in p.lattice_points(1).tolist()}
        boundary = sum(1 for q in pts if any(sum(a * x for a, x in zip(ai, q)) == b for ai, b in p.ineqs))
        assert 2 * p.volume == 2 * len(pts) - boundary - 2
        assert p.scaled(2).volume == 4 * p.volume
