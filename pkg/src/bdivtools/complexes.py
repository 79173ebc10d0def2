"""Finite rational conical polyhedral complexes with integral structure.

Cones are given by primitive integer generators. A complex stores its rays once
and refers to them by index; every face of a listed cone is listed too. The
contraction maps between a subdivision and the complex below it are
:class:`ComplexMap` objects, linear on every cone of the source.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from itertools import combinations, product
from math import gcd
from typing import Iterable, Sequence

from .exactnum import as_rational, nullspace, rank, solve_linear

__all__ = [
    "LatticeCone",
    "ConicalComplex",
    "ComplexMap",
    "ComplexValidationError",
    "OutsideSupportError",
    "build_complex",
    "subdivide_at",
    "compose_maps",
    "identity_map",
    "map_to_point",
    "point_complex",
    "direct_map",
    "locate",
    "locate_cone",
    "maps_agree_on_rays",
    "complex_from_maximal",
    "subdivide_many",
    "map_to_json",
    "smooth_complex",
    "primitive",
    "cone_rays_from_hrep",
    "fan_to_json",
    "fan_from_json",
]


class ComplexValidationError(ValueError):
    """A violated complex invariant; ``code`` names it, ``witness`` shows it."""

    def __init__(self, code: str, message: str, witness=None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.witness = witness


class OutsideSupportError(ValueError):
    pass


def primitive(v: Sequence) -> tuple[int, ...]:
    """Primitive integer vector on the ray through the rational vector v."""
    fr = [as_rational(x) for x in v]
    if not any(fr):
        raise ValueError("zero vector has no primitive generator")
    den = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(gcd, (abs(x) for x in ints))
    return tuple(x // g for x in ints)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _exact(x) -> list:
    # ints stay ints so cone membership tests avoid Fraction overhead
    return [t if type(t) is int else as_rational(t) for t in x]


def cone_rays_from_hrep(ineqs: Sequence[Sequence], eqs: Sequence[Sequence], n: int) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone {x : eqs.x = 0, ineqs.x >= 0} in Q^n."""
    eqs = [list(map(as_rational, e)) for e in eqs]
    ineqs = [list(map(as_rational, a)) for a in ineqs]
    r_eq = rank(eqs) if eqs else 0
    need = n - 1 - r_eq
    if need < 0:
        return []
    rays = []
    seen = set()
    for subset in combinations(range(len(ineqs)), need):
        rows = eqs + [ineqs[i] for i in subset]
        if (rank(rows) if rows else 0) != n - 1:
            continue
        ns = nullspace(rows, n) if rows else nullspace([], n)
        if len(ns) != 1:
            continue
        x = ns[0]
        vals = [_dot(a, x) for a in ineqs]
        if all(v >= 0 for v in vals):
            cand = x
        elif all(v <= 0 for v in vals):
            cand = [-t for t in x]
        else:
            continue
        p = primitive(cand)
        if p not in seen:
            seen.add(p)
            rays.append(p)
    if not ineqs and need == 0:
        # a line given only by equations is not pointed
        return []
    return rays


@dataclass(frozen=True)
class LatticeCone:
    """Rational polyhedral cone spanned by primitive integer generators."""

    generators: tuple
    dim_ambient: int

    def __post_init__(self):
        gens = tuple(tuple(int(x) for x in g) for g in self.generators)
        object.__setattr__(self, "generators", gens)

    @cached_property
    def dim(self) -> int:
        return rank(self.generators) if self.generators else 0

    @cached_property
    def equations(self) -> list[list[Fraction]]:
        """Linear functionals vanishing on the span."""
        if not self.generators:
            return [tuple(int(i == j) for i in range(self.dim_ambient)) for j in range(self.dim_ambient)]
        return [primitive(e) for e in nullspace(self.generators, self.dim_ambient)]

    @cached_property
    def facet_data(self) -> list[tuple[tuple, frozenset]]:
        """(inward normal, indices of generators on the facet) pairs."""
        gens = self.generators
        k = self.dim
        if k == 0:
            return []
        facets = {}
        for subset in combinations(range(len(gens)), k - 1):
            sub = [gens[i] for i in subset]
            if sub and rank(sub) != k - 1:
                continue
            cands = nullspace(sub, self.dim_ambient) if sub else nullspace([], self.dim_ambient)
            normal = next((c for c in cands if any(_dot(c, g) != 0 for g in gens)), None)
            if normal is None:
                continue
            vals = [_dot(normal, g) for g in gens]
            if all(v >= 0 for v in vals):
                pass
            elif all(v <= 0 for v in vals):
                normal = [-c for c in normal]
                vals = [-v for v in vals]
            else:
                continue
            on = frozenset(i for i, v in enumerate(vals) if v == 0)
            if on not in facets:
                facets[on] = primitive(normal)
        return [(nrm, on) for on, nrm in facets.items()]

    @cached_property
    def is_strictly_convex(self) -> bool:
        if self.dim == 0:
            return True
        normals = [n for n, _ in self.facet_data]
        if not normals:
            return False
        # the facet normals must separate the whole span
        return rank(normals + self.equations) == self.dim_ambient

    @cached_property
    def face_index_sets(self) -> list[frozenset]:
        """All faces as sets of generator indices (including the empty face)."""
        full = frozenset(range(len(self.generators)))
        faces = {full}
        frontier = [full]
        facet_sets = [on for _, on in self.facet_data]
        while frontier:
            nxt = []
            for f in frontier:
                for fs in facet_sets:
                    g = f & fs
                    if g not in faces:
                        faces.add(g)
                        nxt.append(g)
            frontier = nxt
        return sorted(faces, key=lambda s: (len(s), sorted(s)))

    def contains(self, x: Sequence) -> bool:
        x = _exact(x)
        if any(_dot(e, x) != 0 for e in self.equations):
            return False
        return all(_dot(n, x) >= 0 for n, _ in self.facet_data)

    def in_relative_interior(self, x: Sequence) -> bool:
        x = _exact(x)
        if any(_dot(e, x) != 0 for e in self.equations):
            return False
        return all(_dot(n, x) > 0 for n, _ in self.facet_data)

    @cached_property
    def is_simplicial(self) -> bool:
        return self.dim == len(self.generators)

    @cached_property
    def multiplicity(self) -> int:
        """Index of the generated sublattice in the saturated lattice of the span
        (gcd of maximal minors; 1 iff smooth). Only meaningful for simplicial cones."""
        gens = self.generators
        if not gens:
            return 1
        k = len(gens)
        g = 0
        for cols in combinations(range(self.dim_ambient), k):
            minor = _int_det([[v[c] for c in cols] for v in gens])
            g = gcd(g, abs(minor))
        return g

    @cached_property
    def is_smooth(self) -> bool:
        return self.is_simplicial and self.multiplicity == 1

    def coefficients(self, x: Sequence) -> list[Fraction] | None:
        """Coefficients of x in the generators, for simplicial cones."""
        if not self.generators:
            return [] if not any(as_rational(t) for t in x) else None
        cols = [list(col) for col in zip(*self.generators)]
        return solve_linear(cols, x)


@lru_cache(maxsize=65536)
def _cone(gens: tuple, n: int) -> LatticeCone:
    # cones recur across successive subdivisions; share their cached geometry
    return LatticeCone(gens, n)


def _int_det(m):
    n = len(m)
    if n == 0:
        return 1
    fr = [[Fraction(x) for x in r] for r in m]
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if fr[i][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            fr[c], fr[p] = fr[p], fr[c]
            d = -d
        d *= fr[c][c]
        for i in range(c + 1, n):
            f = fr[i][c] / fr[c][c]
            if f:
                fr[i] = [a - f * b for a, b in zip(fr[i], fr[c])]
    return int(d)


@dataclass(frozen=True)
class ConicalComplex:
    """A validated finite conical complex; build with :func:`build_complex`."""

    rank: int
    rays: tuple
    cones: tuple  # tuple of frozensets of ray indices, sorted by (dim, indices)

    def cone(self, i: int) -> LatticeCone:
        return self._cone_objs[i]

    @cached_property
    def _cone_objs(self) -> list[LatticeCone]:
        return [_cone(tuple(self.rays[j] for j in sorted(c)), self.rank) for c in self.cones]

    @cached_property
    def cone_lookup(self) -> dict:
        return {c: i for i, c in enumerate(self.cones)}

    @cached_property
    def ray_lookup(self) -> dict:
        return {r: i for i, r in enumerate(self.rays)}

    @cached_property
    def maximal_cones(self) -> list[int]:
        return [
            i for i, c in enumerate(self.cones)
            if not any(c < d for d in self.cones)
        ]

    @cached_property
    def dim(self) -> int:
        return max((self.cone(i).dim for i in range(len(self.cones))), default=0)

    def cone_generators(self, i: int) -> list[tuple[int, ...]]:
        return [self.rays[j] for j in sorted(self.cones[i])]

    @cached_property
    def is_smooth(self) -> bool:
        return all(self.cone(i).is_smooth for i in range(len(self.cones)))

    @cached_property
    def is_simplicial(self) -> bool:
        return all(self.cone(i).is_simplicial for i in range(len(self.cones)))

    def in_support(self, x) -> bool:
        return any(self.cone(i).contains(x) for i in self.maximal_cones)

    def to_json(self) -> dict:
        return fan_to_json(self)

    def __eq__(self, other):
        if not isinstance(other, ConicalComplex):
            return NotImplemented
        return self.rank == other.rank and self._canon == other._canon

    def __hash__(self):
        return hash((self.rank, self._canon))

    @cached_property
    def _canon(self):
        return frozenset(frozenset(self.rays[j] for j in c) for c in self.cones)


def _validate_and_make(rank_: int, rays: list, cone_sets: list) -> ConicalComplex:
    for i, r in enumerate(rays):
        if len(r) != rank_:
            raise ComplexValidationError("BAD_DIMENSION", f"ray {i} has length {len(r)}", r)
        if not any(r):
            raise ComplexValidationError("NON_PRIMITIVE_RAY", f"ray {i} is zero", r)
        if reduce(gcd, (abs(x) for x in r)) != 1:
            raise ComplexValidationError("NON_PRIMITIVE_RAY", f"ray {i} = {r} is not primitive", r)
    if len(set(rays)) != len(rays):
        dup = next(r for r in rays if rays.count(r) > 1)
        raise ComplexValidationError("DUPLICATE_RAY", f"ray {dup} listed twice", dup)
    cones = set()
    for c in cone_sets:
        s = frozenset(c)
        if any(j < 0 or j >= len(rays) for j in s):
            raise ComplexValidationError("BAD_INDEX", f"cone {sorted(s)} refers to a missing ray", sorted(s))
        cones.add(s)
    cones.add(frozenset())
    objs = {}
    for s in cones:
        idx = sorted(s)
        cone = LatticeCone(tuple(rays[j] for j in idx), rank_)
        if not cone.is_strictly_convex:
            raise ComplexValidationError("NOT_STRICTLY_CONVEX", f"cone {idx} contains a line", idx)
        # every listed generator must be an extreme ray
        ray_faces = [f for f in cone.face_index_sets if len(f) == 1]
        if len(ray_faces) != len(idx):
            extreme = {idx[next(iter(f))] for f in ray_faces}
            bad = next(j for j in idx if j not in extreme)
            raise ComplexValidationError(
                "NON_EXTREMAL_GENERATOR", f"ray {bad} is not an extreme ray of cone {idx}", (idx, bad)
            )
        objs[s] = cone
    for s, cone in objs.items():
        idx = sorted(s)
        for f in cone.face_index_sets:
            face = frozenset(idx[i] for i in f)
            if face not in cones:
                raise ComplexValidationError(
                    "NOT_FACE_CLOSED", f"face {sorted(face)} of cone {idx} is missing", (idx, sorted(face))
                )
    cone_list = sorted(cones, key=lambda s: (len(s), sorted(s)))
    maximal = [s for s in cone_list if not any(s < t for t in cone_list)]
    for a, b in combinations(maximal, 2):
        if not _intersection_is_common_face(objs[a], objs[b], sorted(a), sorted(b), rays):
            raise ComplexValidationError(
                "BAD_INTERSECTION", f"cones {sorted(a)} and {sorted(b)} meet outside a common face",
                (sorted(a), sorted(b)),
            )
    return ConicalComplex(rank_, tuple(rays), tuple(cone_list))


def _intersection_is_common_face(ca: LatticeCone, cb: LatticeCone, ia, ib, rays) -> bool:
    n = ca.dim_ambient
    ineqs = [list(nrm) for nrm, _ in ca.facet_data] + [list(nrm) for nrm, _ in cb.facet_data]
    eqs = ca.equations + cb.equations
    inter_rays = cone_rays_from_hrep(ineqs, eqs, n)
    shared = sorted(set(ia) & set(ib))
    shared_cone = LatticeCone(tuple(rays[j] for j in shared), n)
    # the shared generators must form a face of each cone
    for cone, idx in ((ca, ia), (cb, ib)):
        local = frozenset(idx.index(j) for j in shared)
        if local not in cone.face_index_sets:
            return False
    return all(shared_cone.contains(r) for r in inter_rays)


def build_complex(rays: Iterable[Sequence[int]], cones: Iterable[Iterable[int]], rank_: int | None = None) -> ConicalComplex:
    """Validate ray/cone data and return the complex.

    Raises :class:`ComplexValidationError` naming the first violated
    invariant (NON_PRIMITIVE_RAY, NOT_STRICTLY_CONVEX, NOT_FACE_CLOSED,
    BAD_INTERSECTION, ...).
    """
    rays = [tuple(int(x) for x in r) for r in rays]
    if rank_ is None:
        if not rays:
            raise ValueError("rank must be given for a complex without rays")
        rank_ = len(rays[0])
    return _validate_and_make(rank_, rays, [list(c) for c in cones])


def _complex_unchecked(rank_: int, rays: list, cone_sets: Iterable) -> ConicalComplex:
    cones = {frozenset(c) for c in cone_sets} | {frozenset()}
    return ConicalComplex(rank_, tuple(rays), tuple(sorted(cones, key=lambda s: (len(s), sorted(s)))))


def complex_from_maximal(rank_: int, cone_gens: Iterable[Sequence[Sequence[int]]], validate: bool = True) -> ConicalComplex:
    """Complex generated by the given cones and all their faces."""
    rays: list = []
    lookup: dict = {}
    sets = []
    for gens in cone_gens:
        idx = []
        for g in gens:
            g = primitive(g)
            if g not in lookup:
                lookup[g] = len(rays)
                rays.append(g)
            idx.append(lookup[g])
        cone = LatticeCone(tuple(rays[j] for j in idx), rank_)
        for f in cone.face_index_sets:
            sets.append(frozenset(idx[i] for i in f))
    if validate:
        return _validate_and_make(rank_, rays, sets)
    return _complex_unchecked(rank_, rays, sets)


def point_complex() -> ConicalComplex:
    return ConicalComplex(0, (), (frozenset(),))


def locate(complex_: ConicalComplex, x: Sequence) -> int:
    """Index of the minimal cone containing x."""
    x = _exact(x)
    best = None
    for i in range(len(complex_.cones)):
        c = complex_.cone(i)
        if c.contains(x) and (best is None or c.dim < complex_.cone(best).dim):
            best = i
    if best is None:
        raise OutsideSupportError(f"{[str(t) for t in x]} is outside the support")
    return best


def locate_cone(complex_: ConicalComplex, x: Sequence) -> LatticeCone:
    return complex_.cone(locate(complex_, x))


# --------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class ComplexMap:
    """Map of complexes, linear on each source cone.

    ``matrices[i]`` is the integer matrix (target rank x source rank) used on
    source cone i; ``targets[i]`` is the minimal target cone containing the
    image of that cone.
    """

    source: ConicalComplex
    target: ConicalComplex
    matrices: tuple
    targets: tuple

    def matrix_for(self, cone_index: int):
        return self.matrices[cone_index]

    def apply(self, x: Sequence) -> tuple:
        i = locate(self.source, x)
        m = self.matrices[i]
        return tuple(sum(as_rational(a) * as_rational(b) for a, b in zip(row, x)) for row in m)

    def image_of_ray(self, j: int) -> tuple:
        return self.apply(self.source.rays[j])

    def ray_coefficients(self, j: int) -> tuple[int, list[Fraction]]:
        """(target cone, coefficients over its generators) for source ray j.

        These are the multiplicities r(v'_j) = sum_i a_i v_i of the contraction.
        """
        img = self.image_of_ray(j)
        if not any(img):
            return 0, []
        t = locate(self.target, img)
        cone = self.target.cone(t)
        coeffs = cone.coefficients(img)
        return t, coeffs


def identity_map(c: ConicalComplex) -> ComplexMap:
    eye = tuple(tuple(int(i == j) for j in range(c.rank)) for i in range(c.rank))
    return ComplexMap(c, c, tuple(eye for _ in c.cones), tuple(range(len(c.cones))))


def map_to_point(c: ConicalComplex) -> ComplexMap:
    p = point_complex()
    return ComplexMap(c, p, tuple(() for _ in c.cones), tuple(0 for _ in c.cones))


def _relint_point(cone: LatticeCone) -> tuple:
    if not cone.generators:
        return tuple(0 for _ in range(cone.dim_ambient))
    return tuple(sum(col) for col in zip(*cone.generators))


def direct_map(source: ConicalComplex, target: ConicalComplex) -> ComplexMap:
    """Contraction from a subdivision to the complex it refines (identity on points)."""
    if source.rank != target.rank:
        raise ValueError("rank mismatch")
    eye = tuple(tuple(int(i == j) for j in range(source.rank)) for i in range(source.rank))
    targets = []
    for i in range(len(source.cones)):
        p = _relint_point(source.cone(i))
        try:
            targets.append(locate(target, p))
        except OutsideSupportError as e:
            raise ValueError("source is not a subdivision of target") from e
    return ComplexMap(source, target, tuple(eye for _ in source.cones), tuple(targets))


def _matmul_int(a, b, inner: int):
    if not a:
        return ()
    ncols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(ncols))
        for i in range(len(a))
    )


def compose_maps(f: ComplexMap, g: ComplexMap) -> ComplexMap:
    """f o g, assuming target(g) == source(f)."""
    if g.target != f.source:
        raise ValueError("mismatched complexes: target(g) != source(f)")
    mats = []
    targets = []
    for i in range(len(g.source.cones)):
        mid = g.targets[i]
        # g.targets index refers to g.target's ordering; map to f.source's
        mid_key = frozenset(g.target.rays[j] for j in g.target.cones[mid])
        mid_idx = next(k for k, c in enumerate(f.source.cones)
                       if frozenset(f.source.rays[j] for j in c) == mid_key)
        mats.append(_matmul_int(f.matrices[mid_idx], g.matrices[i], g.target.rank))
        targets.append(f.targets[mid_idx])
    return ComplexMap(g.source, f.target, tuple(mats), tuple(targets))


def maps_agree_on_rays(f: ComplexMap, g: ComplexMap) -> bool:
    if f.source != g.source or f.target != g.target:
        return False
    for j in range(len(f.source.rays)):
        a, b = f.image_of_ray(j), g.image_of_ray(j)
        if a != b:
            return False
        if any(a) and locate(f.target, a) != locate(g.target, b):
            return False
    return True


# --------------------------------------------------------------------------
# subdivision


def subdivide_at(complex_: ConicalComplex, v: Sequence[int]) -> tuple[ConicalComplex, ComplexMap]:
    """Stellar subdivision at the primitive lattice vector v.

    Returns the finer complex and the contraction back to ``complex_``.
    """
    v = tuple(int(x) for x in v)
    if len(v) != complex_.rank:
        raise ValueError("dimension mismatch")
    if not complex_.in_support(v):
        raise OutsideSupportError(f"{v} is outside the support")
    v = primitive(v)
    if v in complex_.ray_lookup:
        return complex_, identity_map(complex_)
    finer = _stellar(complex_, v)
    return finer, direct_map(finer, complex_)


def _stellar(complex_: ConicalComplex, v: tuple) -> ConicalComplex:
    """Stellar subdivision without building the contraction map."""
    if v in complex_.ray_lookup:
        return complex_
    rays = list(complex_.rays)
    vi = len(rays)
    rays.append(v)
    new = []
    for i, s in enumerate(complex_.cones):
        cone = complex_.cone(i)
        if not cone.contains(v):
            new.append(s)
            continue
        idx = sorted(s)
        for f in cone.face_index_sets:
            face = frozenset(idx[k] for k in f)
            face_cone = LatticeCone(tuple(rays[j] for j in sorted(face)), complex_.rank)
            if not face_cone.contains(v):
                new.append(face)
                new.append(face | {vi})
    return _complex_unchecked(complex_.rank, rays, new)


def subdivide_many(complex_: ConicalComplex, vectors: Iterable[Sequence[int]]) -> tuple[ConicalComplex, ComplexMap]:
    cur = complex_
    for v in vectors:
        v = tuple(int(x) for x in v)
        if not cur.in_support(v):
            raise OutsideSupportError(f"{v} is outside the support")
        cur = _stellar(cur, primitive(v))
    return cur, direct_map(cur, complex_)


def _parallelepiped_points(cone: LatticeCone) -> list[tuple[int, ...]]:
    """Nonzero lattice points sum t_i g_i with 0 <= t_i < 1."""
    gens = cone.generators
    n = cone.dim_ambient
    lo = [sum(min(0, g[c]) for g in gens) for c in range(n)]
    hi = [sum(max(0, g[c]) for g in gens) for c in range(n)]
    pts = []
    for p in product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        if not any(p):
            continue
        t = cone.coefficients(p)
        if t is None:
            continue
        if all(0 <= x < 1 for x in t):
            pts.append((sum(t), p))
    pts.sort()
    return [p for _, p in pts]


def smooth_complex(complex_: ConicalComplex) -> tuple[ConicalComplex, ComplexMap]:
    """Refine to a smooth complex by repeated stellar subdivision.

    Non-simplicial cones are first split at the sum of their generators
    (lowest dimension first). Then each non-smooth cone is subdivided at the
    parallelepiped lattice point with the smallest coefficient sum, ties
    broken lexicographically, until every cone is smooth.
    """
    cur = complex_
    while True:
        bad = [i for i in range(len(cur.cones)) if not cur.cone(i).is_simplicial]
        if not bad:
            break
        i = min(bad, key=lambda k: (cur.cone(k).dim, sorted(cur.cones[k])))
        cur = _stellar(cur, primitive(_relint_point(cur.cone(i))))
    while True:
        bad = [i for i in range(len(cur.cones)) if not cur.cone(i).is_smooth]
        if not bad:
            break
        i = min(bad, key=lambda k: (cur.cone(k).dim, sorted(cur.cones[k])))
        pts = _parallelepiped_points(cur.cone(i))
        cur = _stellar(cur, primitive(pts[0]))
    return cur, direct_map(cur, complex_)


# --------------------------------------------------------------------------
# serialization


def fan_to_json(c: ConicalComplex) -> dict:
    return {
        "rank": c.rank,
        "rays": [list(r) for r in c.rays],
        "cones": [sorted(s) for s in c.cones if s],
    }


def fan_from_json(d) -> ConicalComplex:
    if isinstance(d, str):
        d = json.loads(d)
    return build_complex(d["rays"], d["cones"], d.get("rank"))


def map_to_json(m: ComplexMap) -> dict:
    return {
        "source": fan_to_json(m.source),
        "target": fan_to_json(m.target),
        "matrices": [[list(r) for r in mat] for mat in m.matrices],
        "targets": list(m.targets),
    }
