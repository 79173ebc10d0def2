"""Monomial graded linear series: dimensions, volumes, Okounkov bodies, bdiv.

A series either takes all lattice points of lP in degree l, or is the
subalgebra generated by finitely many monomials with positive degrees.
Monomial valuations are ord_v(x^u) = <v, u>.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import factorial, gcd
from typing import Sequence

import numpy as np

from .complexes import (
    ConicalComplex,
    complex_from_maximal,
    cone_rays_from_hrep,
    primitive,
)
from .exactnum import RatMatrix, as_rational, rank, rational_to_str
from .plconical import PLConicalFunction, concavity_test, is_complete, section_polytope
from .polytopes import Polytope

__all__ = [
    "MonomialGradedSeries",
    "VolumeReport",
    "OkounkovBody",
    "NonConvergedError",
    "BidegreeSemigroup",
    "RatioFilterResult",
    "dim_component",
    "volume",
    "okounkov_body",
    "bdiv_values",
    "default_sample_vectors",
    "verify_bdiv_recovers_divisor",
    "fg_to_cartier",
    "ratio_filter",
]


class NonConvergedError(ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class MonomialGradedSeries:
    rank: int
    polytope: Polytope | None = None
    generators: tuple = ()  # ((exponent tuple, degree), ...)

    @classmethod
    def of_polytope(cls, p: Polytope) -> "MonomialGradedSeries":
        return cls(p.dim_ambient, polytope=p)

    @classmethod
    def of_generators(cls, gens: Sequence, rank: int | None = None) -> "MonomialGradedSeries":
        gl = []
        for e, d in gens:
            e = tuple(int(x) for x in e)
            d = int(d)
            if d <= 0:
                raise ValueError(f"generator {e} has non-positive degree {d}")
            gl.append((e, d))
        if rank is None:
            if not gl:
                raise ValueError("rank required for an empty generator list")
            rank = len(gl[0][0])
        if any(len(e) != rank for e, _ in gl):
            raise ValueError("exponent length mismatch")
        return cls(rank, generators=tuple(gl))

    @property
    def is_polytope(self) -> bool:
        return self.polytope is not None

    def component(self, l: int) -> set:
        """Exponent vectors of the monomials in degree l."""
        if l < 0:
            raise ValueError("degree must be non-negative")
        if self.is_polytope:
            return {tuple(int(t) for t in p) for p in self.polytope.lattice_points(l)} if l else {tuple([0] * self.rank)}
        return self._closure(l)[l]

    def _closure(self, l_max: int) -> list:
        cache = self.__dict__.setdefault("_levels", [{tuple([0] * self.rank)}])
        while len(cache) <= l_max:
            l = len(cache)
            level = set()
            for e, d in self.generators:
                if d <= l:
                    for f in cache[l - d]:
                        level.add(tuple(a + b for a, b in zip(e, f)))
            cache.append(level)
        return cache

    def check_multiplicative(self, l_max: int = 4) -> bool:
        for a in range(l_max + 1):
            for b in range(l_max + 1 - a):
                ca, cb, cab = self.component(a), self.component(b), self.component(a + b)
                for x in ca:
                    for y in cb:
                        if tuple(s + t for s, t in zip(x, y)) not in cab:
                            return False
        return True


def dim_component(a: MonomialGradedSeries, l: int) -> int:
    if a.is_polytope:
        return a.polytope.count_lattice_points(l) if l else 1
    return len(a.component(l))


@dataclass(frozen=True)
class VolumeReport:
    sequence: tuple          # ((l, dim * d! / l^d), ...)
    extrapolated: float
    exact: Fraction | None

    def to_json(self) -> dict:
        return {
            "sequence": [[l, float(v)] for l, v in self.sequence],
            "extrapolated": self.extrapolated,
            "exact": None if self.exact is None else rational_to_str(self.exact),
        }


def volume(a: MonomialGradedSeries, l_max: int = 50) -> VolumeReport:
    """Normalized counts dim A_l * d!/l^d, Richardson limit, exact value for polytopes."""
    d = a.rank
    seq = []
    for l in range(1, l_max + 1):
        seq.append((l, Fraction(dim_component(a, l) * factorial(d), l ** d)))
    vals = dict(seq)

    def rich(l):
        # one Richardson step removes the 1/l term of the expansion
        return 2 * vals[2 * l] - vals[l]

    l0 = l_max // 4
    if l0 >= 1:
        est = float((4 * rich(2 * l0) - rich(l0)) / 3)
    elif l_max >= 2:
        est = float(rich(l_max // 2))
    else:
        est = float(vals[l_max]) if vals else 0.0
    exact = factorial(d) * a.polytope.volume if a.is_polytope else None
    return VolumeReport(tuple(seq), est, exact)


@dataclass(frozen=True)
class OkounkovBody:
    polytope: Polytope
    flag: tuple
    l_max: int
    inner_approximation: bool = True

    @property
    def volume(self) -> Fraction:
        return self.polytope.volume

    def to_json(self) -> dict:
        return {"vertices": self.polytope.to_json(), "flag": [list(b) for b in self.flag],
                "l_max": self.l_max, "inner_approximation": self.inner_approximation}


def _flag_matrix(flag, d) -> RatMatrix:
    flag = [tuple(int(t) for t in b) for b in flag]
    if len(flag) != d or any(len(b) != d for b in flag):
        raise ValueError("flag must be d vectors of length d")
    m = RatMatrix.of([list(col) for col in zip(*flag)])  # basis vectors as columns
    if abs(m.det()) != 1:
        raise ValueError("flag must be a lattice basis")
    return m


def okounkov_body(a: MonomialGradedSeries, flag=None, l_max: int = 12) -> OkounkovBody:
    """Hull of nu(f)/l over degrees 1..l_max; nu = coordinates in the flag basis."""
    d = a.rank
    flag = tuple(tuple(int(i == j) for j in range(d)) for i in range(d)) if flag is None else tuple(map(tuple, flag))
    inv = _flag_matrix(flag, d).inverse()
    pts = set()
    for l in range(1, l_max + 1):
        for u in a.component(l):
            c = inv.vecmul(u)
            pts.add(tuple(x / l for x in c))
    if not pts:
        raise ValueError("series has no sections in positive degree up to l_max")
    return OkounkovBody(Polytope.from_vertices(sorted(pts), d), flag, l_max)


def bdiv_values(a: MonomialGradedSeries, vectors: Sequence, l_max: int = 50, tol: float = 1e-9) -> list[Fraction]:
    """ord_v bdiv(A) = sup_{l, f in A_l} -<v, f>/l at each query vector v."""
    vectors = [tuple(as_rational(t) for t in v) for v in vectors]
    if a.is_polytope:
        return [a.polytope.support_max(tuple(-t for t in v)) for v in vectors]
    levels = a._closure(l_max)
    out = []
    for i, v in enumerate(vectors):
        best_half, best = None, None
        for l in range(1, l_max + 1):
            for f in levels[l]:
                val = Fraction(-_dot(v, f), l)
                if best is None or val > best:
                    best = val
            if l == l_max // 2:
                best_half = best
        if best is None:
            raise NonConvergedError("series is empty in positive degrees", i)
        if best_half is not None and abs(best - best_half) > tol * max(1, abs(best)):
            raise NonConvergedError(f"sup for vector {i} still moving at l_max={l_max}", i)
        out.append(best)
    return out


def default_sample_vectors(d: int, count: int = 20) -> list[tuple[int, ...]]:
    """First ``count`` primitive vectors by max-norm, then lexicographically."""
    out = []
    r = 1
    while len(out) < count:
        layer = [v for v in product(range(-r, r + 1), repeat=d)
                 if max(abs(t) for t in v) == r and _is_primitive(v)]
        out.extend(sorted(layer))
        r += 1
    return out[:count]


def _is_primitive(v) -> bool:
    g = 0
    for t in v:
        g = gcd(g, abs(t))
    return g == 1


@dataclass(frozen=True)
class BdivRecoveryReport:
    vectors: tuple
    bdiv: tuple
    expected: tuple
    enumerated: tuple
    passed: bool

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "rows": [
                {"v": list(v), "bdiv": rational_to_str(b), "expected": rational_to_str(e),
                 "enumerated": rational_to_str(n), "residual": rational_to_str(b - e)}
                for v, b, e, n in zip(self.vectors, self.bdiv, self.expected, self.enumerated)
            ],
        }


def verify_bdiv_recovers_divisor(phi: PLConicalFunction, l_max: int = 12, sample_vectors=None) -> BdivRecoveryReport:
    """Check bdiv(R(D)) = D for a nef toric divisor D given by concave phi.

    R(D) is the polytope series of P_phi. Both the closed support-function
    value and the enumerated sup over degrees up to ``l_max`` are compared
    with -phi(v).
    """
    if not is_complete(phi.complex):
        raise ValueError("fan is not complete")
    if not concavity_test(phi):
        raise ValueError("function is not concave")
    d = phi.complex.rank
    vecs = default_sample_vectors(d) if sample_vectors is None else [tuple(v) for v in sample_vectors]
    a = MonomialGradedSeries.of_polytope(section_polytope(phi))
    closed = bdiv_values(a, vecs)
    enum = []
    for v in vecs:
        best = None
        for l in range(1, l_max + 1):
            pts = a.polytope.lattice_points(l)
            if len(pts):
                val = Fraction(int(-(pts @ np.array(v, dtype=np.int64)).min()), l)
                best = val if best is None or val > best else best
        enum.append(best)
    expected = [-phi(v) for v in vecs]
    ok = all(b == e for b, e in zip(closed, expected)) and all(n == e for n, e in zip(enum, expected))
    return BdivRecoveryReport(tuple(vecs), tuple(closed), tuple(expected), tuple(enum), ok)


def fg_to_cartier(a: MonomialGradedSeries, complex_: ConicalComplex) -> PLConicalFunction:
    """v -> max_i -<v, f_i>/d_i as PL data on a refinement of ``complex_``.

    The max is linear exactly on the normal cones of Q = conv(f_i/d_i); the
    returned complex is the common refinement of ``complex_`` with them.
    """
    if a.is_polytope or not a.generators:
        raise ValueError("need a non-empty generator-presented series")
    n = complex_.rank
    q = Polytope.from_vertices([tuple(Fraction(x, deg) for x in e) for e, deg in a.generators], n)
    verts = list(q.vertices)
    pieces = []
    forms = []
    for ci in complex_.maximal_cones:
        cone = complex_.cone(ci)
        c_ineqs = [list(nrm) for nrm, _ in cone.facet_data]
        c_eqs = [list(e) for e in cone.equations]
        for qv in verts:
            # region where qv attains min <v, q>
            ineqs = c_ineqs + [[b - a_ for a_, b in zip(qv, other)] for other in verts if other != qv]
            rays = cone_rays_from_hrep(ineqs, c_eqs, n)
            if rays and rank(rays) == cone.dim:
                pieces.append(rays)
                forms.append(tuple(-t for t in qv))
            elif cone.dim == 0:
                pieces.append([])
                forms.append(tuple(-t for t in qv))
    refined = complex_from_maximal(n, pieces)
    by_cone = {}
    for rays, f in zip(pieces, forms):
        by_cone[frozenset(primitive(r) for r in rays)] = f
    mf = []
    for ci in refined.maximal_cones:
        key = frozenset(refined.rays[j] for j in refined.cones[ci])
        mf.append(by_cone[key])
    return PLConicalFunction.from_forms(refined, mf)


# --------------------------------------------------------------------------
# bidegree slices


@dataclass(frozen=True)
class BidegreeSemigroup:
    generators: tuple

    def __post_init__(self):
        gens = tuple((int(k), int(m)) for k, m in self.generators)
        for k, m in gens:
            if k == 0 and m != 0:
                raise ValueError(f"generator ({k},{m}): weight 0 with nonzero index forces the zero form")
            if k == 0 and m == 0:
                raise ValueError("zero generator")
            if k < 0 or m < 0:
                raise ValueError(f"generator ({k},{m}) has a negative entry")
        object.__setattr__(self, "generators", gens)

    def reachable(self, k_max: int, m_max: int) -> np.ndarray:
        """Boolean table of bidegrees (k, m) in the semigroup (with (0, 0))."""
        tab = np.zeros((k_max + 1, m_max + 1), dtype=bool)
        tab[0, 0] = True
        for k in range(1, k_max + 1):
            for gk, gm in self.generators:
                if gk <= k:
                    shifted = np.zeros(m_max + 1, dtype=bool)
                    if gm <= m_max:
                        shifted[gm:] = tab[k - gk, : m_max + 1 - gm]
                    tab[k] |= shifted
        return tab

    def contains(self, k: int, m: int) -> bool:
        if k < 0 or m < 0:
            return False
        return bool(self.reachable(k, m)[k, m])


@dataclass(frozen=True)
class RatioFilterResult:
    n: Fraction
    face_generators: tuple     # generators with m/k = n
    slice_generators: tuple    # minimal generators of S restricted to m = n k
    bounded_ratio: bool
    max_ratio: Fraction
    min_ratio: Fraction
    semigroup: BidegreeSemigroup

    def in_slice(self, k: int, m: int) -> bool:
        return Fraction(m) == self.n * k and self.semigroup.contains(k, m)

    def to_json(self) -> dict:
        return {
            "n": rational_to_str(self.n),
            "face_generators": [list(g) for g in self.face_generators],
            "slice_generators": [list(g) for g in self.slice_generators],
            "bounded_ratio": self.bounded_ratio,
            "max_ratio": rational_to_str(self.max_ratio),
            "min_ratio": rational_to_str(self.min_ratio),
        }


def ratio_filter(s: BidegreeSemigroup | Sequence, n) -> RatioFilterResult:
    """Slice of a bidegree semigroup along the ray m = n k.

    Since min r(a_i) <= r(prod a_i) <= max r(a_i) for the ratio r = m/k,
    the slice is spanned by the generators of ratio n alone whenever n is
    an extreme ratio, and is empty outside [min, max]. In general the
    minimal slice generators are sums of at most 2R generators, R the
    largest |m_i - n k_i| after clearing denominators; they are found
    exactly within that bound.
    """
    if not isinstance(s, BidegreeSemigroup):
        s = BidegreeSemigroup(tuple(s))
    n = as_rational(n)
    gens = s.generators
    if not gens:
        raise ValueError("empty generator list")
    ratios = [Fraction(m, k) for k, m in gens]
    face = tuple(g for g, r in zip(gens, ratios) if r == n)
    # weights r_i = q*m_i - p*k_i vanish exactly on the slice
    p, q = n.numerator, n.denominator
    weights = [q * m - p * k for k, m in gens]
    big = max(abs(w) for w in weights)
    length = max(1, 2 * big)
    k_max = length * max(k for k, _ in gens)
    candidates = []
    if min(ratios) <= n <= max(ratios):
        m_max = int(n * k_max)
        tab = s.reachable(k_max, m_max)
        for k in range(1, k_max + 1):
            m = n * k
            if m.denominator == 1 and tab[k, int(m)]:
                candidates.append((k, int(m)))
    slice_gens = []
    cset = set(candidates)
    for k, m in candidates:
        # minimal iff not a sum of two nonzero slice elements
        if not any(k2 < k and (k - k2, m - m2) in cset for k2, m2 in candidates):
            slice_gens.append((k, m))
    return RatioFilterResult(n, face, tuple(slice_gens), True, max(ratios), min(ratios), s)
