"""Exact rational polytopes: H/V conversion, volume, lattice points, hulls."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np

from .exactnum import as_rational, nullspace, rank, solve_linear

__all__ = ["Polytope", "UnboundedPolytopeError"]


class UnboundedPolytopeError(ValueError):
    pass


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _affine_rank(points) -> int:
    if not points:
        return -1
    p0 = points[0]
    diffs = [[a - b for a, b in zip(p, p0)] for p in points[1:]]
    return rank(diffs) if diffs else 0


def _clip(poly, a, b):
    """Clip a convex polygon (ccw vertex list) to the half-plane a.x >= b."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        vp, vq = _dot(a, p) - b, _dot(a, q) - b
        if vp >= 0:
            out.append(p)
        if (vp > 0 > vq) or (vp < 0 < vq):
            t = vp / (vp - vq)
            out.append(tuple(x + t * (y - x) for x, y in zip(p, q)))
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def _hull_2d(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class Polytope:
    """Bounded rational polytope with both descriptions.

    ``ineqs`` are pairs (a, b) meaning a.x >= b; ``eqs`` pairs (a, b)
    meaning a.x == b (empty when full-dimensional).
    """

    dim_ambient: int
    vertices: tuple
    ineqs: tuple
    eqs: tuple = ()

    # ---- constructors

    @classmethod
    def from_hrep(cls, ineqs: Sequence, eqs: Sequence = (), dim: int | None = None) -> "Polytope":
        ineqs = [(tuple(map(as_rational, a)), as_rational(b)) for a, b in ineqs]
        eqs = [(tuple(map(as_rational, a)), as_rational(b)) for a, b in eqs]
        n = dim if dim is not None else len((ineqs or eqs)[0][0])
        rows = [list(a) for a, _ in ineqs] + [list(a) for a, _ in eqs] + [[-x for x in a] for a, _ in eqs]
        if (rank(rows) if rows else 0) < n and n > 0:
            raise UnboundedPolytopeError("constraint normals do not span; region is unbounded")
        if _recession_nonzero(ineqs, eqs, n):
            raise UnboundedPolytopeError("region is unbounded")
        if n == 2 and not eqs:
            verts = _vertices_2d(ineqs)
        else:
            verts = _vertices_brute(ineqs, eqs, n)
        if not verts:
            return cls(n, (), tuple(ineqs), tuple(eqs))
        return cls.from_vertices(verts, n)

    @classmethod
    def from_vertices(cls, points: Sequence, dim: int | None = None) -> "Polytope":
        pts = [tuple(map(as_rational, p)) for p in points]
        if not pts:
            raise ValueError("empty point set")
        n = dim if dim is not None else len(pts[0])
        pts = sorted(set(pts))
        if n == 0:
            return cls(0, ((),), (), ())
        p0 = pts[0]
        diffs = [[a - b for a, b in zip(p, p0)] for p in pts[1:]]
        eq_normals = nullspace(diffs, n) if diffs else nullspace([], n)
        eqs = tuple((tuple(a), _dot(a, p0)) for a in eq_normals)
        k = n - len(eq_normals)
        if k == 0:
            return cls(n, (p0,), (), eqs)
        if k == 1:
            # segment: project on a direction inside the affine hull
            d = [a - b for a, b in zip(next(p for p in pts if p != p0), p0)]
            vals = [_dot(d, p) for p in pts]
            lo, hi = pts[vals.index(min(vals))], pts[vals.index(max(vals))]
            ineqs = ((tuple(d), min(vals)), (tuple(-x for x in d), -max(vals)))
            return cls(n, tuple(sorted({lo, hi})), ineqs, eqs)
        if n == 2:
            hull = _hull_2d(pts)
            ineqs = []
            for i in range(len(hull)):
                p, q = hull[i], hull[(i + 1) % len(hull)]
                a = (-(q[1] - p[1]), q[0] - p[0])  # inward normal for ccw order
                ineqs.append((a, _dot(a, p)))
            return cls(2, tuple(hull), tuple(ineqs), eqs)
        verts, ineqs = _hull_general(pts, n, eqs)
        return cls(n, tuple(verts), tuple(ineqs), eqs)

    # ---- queries

    @cached_property
    def dim(self) -> int:
        return _affine_rank(list(self.vertices))

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def contains(self, x) -> bool:
        x = [as_rational(t) for t in x]
        return all(_dot(a, x) >= b for a, b in self.ineqs) and all(_dot(a, x) == b for a, b in self.eqs)

    def support_max(self, v) -> Fraction:
        v = [as_rational(t) for t in v]
        return max(_dot(v, p) for p in self.vertices)

    def support_min(self, v) -> Fraction:
        v = [as_rational(t) for t in v]
        return min(_dot(v, p) for p in self.vertices)

    def scaled(self, c) -> "Polytope":
        c = as_rational(c)
        if c <= 0:
            raise ValueError("scale must be positive")
        return Polytope(
            self.dim_ambient,
            tuple(tuple(c * x for x in p) for p in self.vertices),
            tuple((a, c * b) for a, b in self.ineqs),
            tuple((a, c * b) for a, b in self.eqs),
        )

    @cached_property
    def volume(self) -> Fraction:
        """Euclidean volume in the ambient space (0 unless full-dimensional)."""
        n = self.dim_ambient
        if self.is_empty or self.dim < n:
            return Fraction(0)
        if n == 1:
            return max(p[0] for p in self.vertices) - min(p[0] for p in self.vertices)
        if n == 2:
            v = self.vertices
            s = sum(v[i][0] * v[(i + 1) % len(v)][1] - v[(i + 1) % len(v)][0] * v[i][1] for i in range(len(v)))
            return abs(s) / 2
        total = Fraction(0)
        for simplex in self.triangulate():
            base = simplex[0]
            m = [[a - b for a, b in zip(p, base)] for p in simplex[1:]]
            total += abs(_det(m))
        return total / factorial(n)

    def normalized_volume(self) -> Fraction:
        return factorial(self.dim_ambient) * self.volume

    def triangulate(self) -> list[list[tuple]]:
        """Simplices (vertex lists) covering a full-dimensional polytope."""
        verts = list(self.vertices)
        faces = [frozenset(i for i, p in enumerate(verts) if _dot(a, p) == b) for a, b in self.ineqs]
        return _triangulate(verts, frozenset(range(len(verts))), faces, self.dim)

    def lattice_points(self, scale: int = 1) -> np.ndarray:
        """Integer points of scale*P as an (N, d) array, lexicographically sorted."""
        n = self.dim_ambient
        if self.is_empty:
            return np.zeros((0, n), dtype=np.int64)
        lo = [math.floor(min(p[i] for p in self.vertices) * scale) for i in range(n)]
        hi = [math.ceil(max(p[i] for p in self.vertices) * scale) for i in range(n)]
        grids = np.meshgrid(*[np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1) if n else np.zeros((1, 0), dtype=np.int64)
        mask = np.ones(len(pts), dtype=bool)
        for a, b in self.ineqs:
            mask &= _int_halfspace(pts, a, b * scale, strict_eq=False)
        for a, b in self.eqs:
            mask &= _int_halfspace(pts, a, b * scale, strict_eq=True)
        return pts[mask]

    def count_lattice_points(self, scale: int = 1) -> int:
        return int(len(self.lattice_points(scale)))

    def to_json(self) -> list:
        return [[f"{x.numerator}/{x.denominator}" for x in p] for p in self.vertices]


def _int_halfspace(pts: np.ndarray, a, b, strict_eq: bool) -> np.ndarray:
    # clear denominators so the test is exact in integer arithmetic
    den = 1
    for x in list(a) + [b]:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ai = [int(x * den) for x in a]
    bi = int(b * den)
    if not len(pts):
        return np.zeros(0, dtype=bool)
    bound = (int(np.abs(pts).max()) + 1) * (sum(abs(t) for t in ai) + 1) + abs(bi)
    if bound < 2 ** 62:
        vals = pts @ np.array(ai, dtype=np.int64)
        return vals == bi if strict_eq else vals >= bi
    vals = pts.astype(object) @ np.array(ai, dtype=object)
    return np.array([v == bi if strict_eq else v >= bi for v in vals], dtype=bool)


def _det(m) -> Fraction:
    m = [list(r) for r in m]
    n = len(m)
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            d = -d
        d *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return d


def _recession_nonzero(ineqs, eqs, n) -> bool:
    """True when {A x >= 0, E x = 0} contains a nonzero vector."""
    from .complexes import cone_rays_from_hrep

    rows = [list(a) for a, _ in ineqs]
    erows = [list(a) for a, _ in eqs]
    ker = nullspace(rows + erows, n) if rows or erows else nullspace([], n)
    if ker:
        return True
    return bool(cone_rays_from_hrep(rows, erows, n))


def _vertices_brute(ineqs, eqs, n):
    eq_rows = [list(a) for a, _ in eqs]
    eq_rhs = [b for _, b in eqs]
    need = n - (rank(eq_rows) if eq_rows else 0)
    found = set()
    for subset in combinations(range(len(ineqs)), need):
        rows = eq_rows + [list(ineqs[i][0]) for i in subset]
        if rank(rows) != n:
            continue
        x = solve_linear(rows, eq_rhs + [ineqs[i][1] for i in subset])
        if x is None:
            continue
        if all(_dot(a, x) >= b for a, b in ineqs) and all(_dot(a, x) == b for a, b in eqs):
            found.add(tuple(x))
    return sorted(found)


def _vertices_2d(ineqs):
    # clip a growing box until no vertex touches the box boundary
    r = Fraction(1 + max(abs(b) for _, b in ineqs))
    for a, _ in ineqs:
        for x in a:
            if x != 0:
                r = max(r, Fraction(1 + max(abs(b) for _, b in ineqs)) / abs(x))
    while True:
        poly = [(-r, -r), (r, -r), (r, r), (-r, r)]
        for a, b in ineqs:
            poly = _clip(poly, a, b)
            if not poly:
                return []
        if all(abs(p[0]) < r and abs(p[1]) < r for p in poly):
            return poly
        r *= 4


def _hull_general(pts, n, eqs):
    """Exact hull of full- or lower-dimensional point sets via qhull candidates."""
    from scipy.spatial import ConvexHull

    k = n - len(eqs)
    if k < n:
        # work in coordinates of the affine hull, then map back
        p0 = pts[0]
        basis = _affine_basis(pts)
        local = [tuple(solve_linear([list(c) for c in zip(*basis)], [a - b for a, b in zip(p, p0)])) for p in pts]
        sub = Polytope.from_vertices(local, k)
        verts = [tuple(b0 + sum(c * v[i] for c, v in zip(loc, basis)) for i, b0 in enumerate(p0)) for loc in sub.vertices]
        # lift inequalities: a_loc . t >= b with t the local coordinates of x
        ineqs = []
        pinv = _left_inverse(basis, n)
        for a_loc, b in sub.ineqs:
            a = [sum(a_loc[j] * pinv[j][i] for j in range(k)) for i in range(n)]
            ineqs.append((tuple(a), b + _dot(a, p0)))
        return sorted(verts), ineqs
    arr = np.array([[float(x) for x in p] for p in pts])
    hull = ConvexHull(arr)
    cand = {}
    for simplex in hull.simplices:
        sub = [pts[i] for i in simplex]
        diffs = [[a - b for a, b in zip(p, sub[0])] for p in sub[1:]]
        ns = nullspace(diffs, n)
        if len(ns) != 1:
            continue
        a = ns[0]
        vals = [_dot(a, p) for p in pts]
        b = _dot(a, sub[0])
        if all(v >= b for v in vals):
            pass
        elif all(v <= b for v in vals):
            a = [-x for x in a]
            b = -b
        else:
            raise ArithmeticError("numerical hull facet failed exact verification")
        key = _normalize_halfspace(a, b)
        cand[key] = True
    ineqs = [(k_[0], k_[1]) for k_ in cand]
    # vertices: points that are not convex combinations, i.e. lie on >= n independent facets
    verts = []
    for p in pts:
        tight = [list(a) for a, b in ineqs if _dot(a, p) == b]
        if tight and rank(tight) == n:
            verts.append(p)
    return sorted(set(verts)), ineqs


def _normalize_halfspace(a, b):
    scale = next(abs(x) for x in a if x != 0)
    return tuple(x / scale for x in a), b / scale


def _affine_basis(pts):
    p0 = pts[0]
    basis = []
    for p in pts[1:]:
        d = [a - b for a, b in zip(p, p0)]
        if rank(basis + [d]) > len(basis):
            basis.append(d)
    return basis


def _left_inverse(basis, n):
    # rows L with L @ B = I where B has the basis vectors as columns
    k = len(basis)
    gram = [[_dot(basis[i], basis[j]) for j in range(k)] for i in range(k)]
    from .exactnum import RatMatrix

    ginv = RatMatrix.of(gram).inverse()
    return [[sum(ginv[i, j] * basis[j][c] for j in range(k)) for c in range(n)] for i in range(k)]


def _triangulate(verts, vset: frozenset, faces, dim: int) -> list[list[tuple]]:
    """Triangulate the face with vertex indices vset by pulling its lowest vertex."""
    if dim == 0:
        return [[verts[next(iter(vset))]]]
    if len(vset) == dim + 1:
        return [[verts[i] for i in sorted(vset)]]
    apex = min(vset)
    out = []
    seen = set()
    for f in faces:
        sub = f & vset
        if apex in sub or sub in seen or not sub:
            continue
        if _affine_rank([verts[i] for i in sorted(sub)]) != dim - 1:
            continue
        seen.add(sub)
        for simplex in _triangulate(verts, sub, faces, dim - 1):
            out.append([verts[apex]] + simplex)
    return out
