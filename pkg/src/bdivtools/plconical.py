"""Conical functions on complexes: piecewise-linear data and evaluation oracles.

A PL conical function is the combinatorial shadow of a Cartier toroidal
b-divisor; an arbitrary conical function (given by an oracle) is a Weil one.
The value at the primitive vector of a ray is minus the order of the
corresponding boundary divisor.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Sequence

from .complexes import (
    ConicalComplex,
    LatticeCone,
    OutsideSupportError,
    build_complex,
    fan_to_json,
    fan_from_json,
    locate,
    primitive,
    subdivide_at,
    _stellar,
)
from .exactnum import as_rational, rational_from_str, rational_to_str, solve_linear
from .polytopes import Polytope

__all__ = [
    "PLConicalFunction",
    "ConicalOracle",
    "PLWitness",
    "PLTestResult",
    "ConcavityReport",
    "ConcavityError",
    "evaluate",
    "divisor_from_function",
    "iota_order",
    "pl_test",
    "concavity_test",
    "toric_degree",
    "section_polytope",
    "decreasing_degree_limit",
    "refine_round",
    "is_complete",
]


class ConcavityError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _vec(x) -> tuple:
    return tuple(as_rational(t) for t in x)


@dataclass(frozen=True)
class PLConicalFunction:
    """Linear form per cone of ``complex`` (indexed like ``complex.cones``)."""

    complex: ConicalComplex
    forms: tuple

    @classmethod
    def from_ray_values(cls, complex_: ConicalComplex, values: Sequence) -> "PLConicalFunction":
        """Interpolate ray values linearly on every (simplicial) cone."""
        values = [as_rational(v) for v in values]
        if len(values) != len(complex_.rays):
            raise ValueError("one value per ray required")
        forms = []
        for i, s in enumerate(complex_.cones):
            idx = sorted(s)
            if not idx:
                forms.append(tuple(Fraction(0) for _ in range(complex_.rank)))
                continue
            form = solve_linear([list(complex_.rays[j]) for j in idx], [values[j] for j in idx])
            if form is None:
                raise ValueError(f"ray values are not linear on cone {idx}")
            forms.append(tuple(form))
        return cls(complex_, tuple(forms))

    @classmethod
    def from_forms(cls, complex_: ConicalComplex, maximal_forms: Sequence) -> "PLConicalFunction":
        """Forms given for the maximal cones (in ``complex_.maximal_cones`` order)."""
        maxi = complex_.maximal_cones
        if len(maximal_forms) != len(maxi):
            raise ValueError("one form per maximal cone required")
        mf = {c: _vec(f) for c, f in zip(maxi, maximal_forms)}
        forms = []
        for i, s in enumerate(complex_.cones):
            owners = [c for c in maxi if s <= complex_.cones[c]]
            f0 = mf[owners[0]]
            for c in owners[1:]:
                for j in s:
                    r = complex_.rays[j]
                    if _dot(mf[c], r) != _dot(f0, r):
                        raise ValueError(f"forms disagree on shared face {sorted(s)} at ray {r}")
            forms.append(f0)
        return cls(complex_, tuple(forms))

    @classmethod
    def linear(cls, complex_: ConicalComplex, form: Sequence) -> "PLConicalFunction":
        f = _vec(form)
        return cls(complex_, tuple(f for _ in complex_.cones))

    def __call__(self, x) -> Fraction:
        x = _vec(x)
        return _dot(self.forms[locate(self.complex, x)], x)

    @property
    def ray_values(self) -> list[Fraction]:
        return [self(r) for r in self.complex.rays]

    def scale(self, c) -> "PLConicalFunction":
        c = as_rational(c)
        return PLConicalFunction(self.complex, tuple(tuple(c * t for t in f) for f in self.forms))

    def __add__(self, other: "PLConicalFunction") -> "PLConicalFunction":
        if other.complex != self.complex:
            raise ValueError("functions live on different complexes")
        return PLConicalFunction(
            self.complex, tuple(tuple(a + b for a, b in zip(f, g)) for f, g in zip(self.forms, other.forms))
        )

    def __neg__(self):
        return self.scale(-1)

    def maximal_forms(self) -> list[tuple]:
        return [self.forms[i] for i in self.complex.maximal_cones]

    def as_oracle(self) -> "ConicalOracle":
        return ConicalOracle(self.complex, self)

    def to_json(self) -> dict:
        return {
            "fan": fan_to_json(self.complex),
            "forms": [[rational_to_str(t) for t in f] for f in self.maximal_forms()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PLConicalFunction":
        c = fan_from_json(d["fan"])
        if "forms" in d:
            return cls.from_forms(c, [[rational_from_str(t) for t in f] for f in d["forms"]])
        return cls.from_ray_values(c, [rational_from_str(t) for t in d["ray_values"]])


@dataclass(frozen=True)
class ConicalOracle:
    """A conical function given by evaluation on rational points of the support."""

    complex: ConicalComplex
    fn: Callable
    name: str = ""

    def __call__(self, x) -> Fraction:
        x = _vec(x)
        if not self.complex.in_support(x):
            raise OutsideSupportError(f"{[str(t) for t in x]} is outside the support")
        return as_rational(self.fn(x))

    def homogeneity_defect(self, points: Sequence, scalars=(2, 3, Fraction(1, 2))) -> list:
        """Points p and scalars c where f(c p) != c f(p)."""
        bad = []
        for p in points:
            fp = self(p)
            for c in scalars:
                c = as_rational(c)
                if self(tuple(c * t for t in _vec(p))) != c * fp:
                    bad.append((p, c))
        return bad


def evaluate(f, x) -> Fraction:
    return f(x)


def divisor_from_function(phi: PLConicalFunction) -> list[tuple[tuple, Fraction]]:
    """Coefficient -phi(v) at every ray v."""
    return [(r, -phi(r)) for r in phi.complex.rays]


def iota_order(phi, v) -> Fraction:
    """Order along the exceptional divisor with primitive vector v of the induced b-divisor."""
    return -phi(v)


# --------------------------------------------------------------------------
# PL detection


@dataclass(frozen=True)
class PLWitness:
    x: tuple
    y: tuple
    z: tuple
    values: tuple  # (f(x), f(y), f(z))
    cone: tuple    # generators of the ambient cone

    def verify(self, f=None) -> bool:
        if tuple(a + b for a, b in zip(self.x, self.y)) != self.z:
            return False
        cone = LatticeCone(self.cone, len(self.x))
        if not all(cone.contains(p) for p in (self.x, self.y, self.z)):
            return False
        vals = self.values if f is None else tuple(f(p) for p in (self.x, self.y, self.z))
        return vals[2] != vals[0] + vals[1]

    def to_json(self) -> dict:
        return {
            "x": [rational_to_str(t) for t in self.x],
            "y": [rational_to_str(t) for t in self.y],
            "z": [rational_to_str(t) for t in self.z],
            "values": [rational_to_str(t) for t in self.values],
            "cone": [list(g) for g in self.cone],
        }


@dataclass(frozen=True)
class PLTestResult:
    kind: str  # "PL" or "NOT_PL"
    function: PLConicalFunction | None = None
    witness: PLWitness | None = None
    depth_explored: int = 0

    @property
    def is_pl(self) -> bool:
        return self.kind == "PL"

    def to_json(self) -> dict:
        out = {"result": self.kind, "depth_explored": self.depth_explored}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.function is not None:
            out["function"] = self.function.to_json()
        return out


def _make_simplicial(c: ConicalComplex) -> ConicalComplex:
    cur = c
    while True:
        bad = [i for i in range(len(cur.cones)) if not cur.cone(i).is_simplicial]
        if not bad:
            return cur
        i = min(bad, key=lambda k: (cur.cone(k).dim, sorted(cur.cones[k])))
        gens = cur.cone(i).generators
        cur = _stellar(cur, primitive([sum(col) for col in zip(*gens)]))


def _cone_check(f, gens: list, rng: random.Random, samples: int):
    """First failing triple on the cone, or a telescoped witness from samples.

    Returns (witness, subdivision vector) or (None, None) when f looks linear.
    """
    vals = {g: f(g) for g in gens}
    for i, j in sorted(combinations_idx(len(gens))):
        a, b = gens[i], gens[j]
        s = tuple(x + y for x, y in zip(a, b))
        fs = f(s)
        if fs != vals[a] + vals[b]:
            w = PLWitness(_vec(a), _vec(b), _vec(s), (vals[a], vals[b], fs), tuple(gens))
            return w, primitive(s)
    for _ in range(samples):
        t = [Fraction(rng.randint(1, 9)) for _ in gens]
        partial = tuple(Fraction(0) for _ in gens[0])
        fpart = Fraction(0)
        for tk, g in zip(t, gens):
            step = tuple(tk * x for x in g)
            nxt = tuple(x + y for x, y in zip(partial, step))
            fn = f(nxt)
            fstep = tk * vals[g]
            if any(partial) and fn != fpart + fstep:
                w = PLWitness(partial, step, nxt, (fpart, fstep, fn), tuple(gens))
                return w, primitive(nxt)
            partial, fpart = nxt, fn
    return None, None


def combinations_idx(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def pl_test(f, complex_: ConicalComplex | None = None, depth: int = 3, samples: int = 8, seed: int = 0) -> PLTestResult:
    """Decide piecewise linearity of a conical function up to a refinement depth.

    Every maximal cone is probed on the additive triples (g_i, g_j, g_i+g_j)
    of its generators and on random interior combinations. Cones that fail
    are stellar-subdivided at the first failing sum and probed again, at
    most ``depth`` times. NOT_PL is exact; PL means no violation was found.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    complex_ = complex_ if complex_ is not None else f.complex
    rng = random.Random(seed)
    cur = _make_simplicial(complex_)
    first_witness = None
    level = 0
    while True:
        failing = []
        for ci in cur.maximal_cones:
            gens = cur.cone_generators(ci)
            w, v = _cone_check(f, gens, rng, samples)
            if w is not None:
                failing.append(v)
                if first_witness is None:
                    first_witness = w
        if not failing:
            fn = PLConicalFunction.from_ray_values(cur, [f(r) for r in cur.rays])
            return PLTestResult("PL", function=fn, depth_explored=level)
        if level >= depth:
            return PLTestResult("NOT_PL", witness=first_witness, depth_explored=level)
        for v in failing:
            cur = _stellar(cur, v)
        level += 1


# --------------------------------------------------------------------------
# concavity and degrees


@dataclass(frozen=True)
class ConcavityReport:
    concave: bool
    wall: tuple | None = None        # generators of the violating wall
    cones: tuple | None = None       # the two maximal cones meeting there

    def __bool__(self):
        return self.concave


def _walls(c: ConicalComplex):
    """(wall index, [maximal cones containing it]) for codimension-one cones."""
    n = c.rank
    maxi = [i for i in c.maximal_cones if c.cone(i).dim == n]
    out = []
    for w, s in enumerate(c.cones):
        if c.cone(w).dim != n - 1:
            continue
        owners = [i for i in maxi if s < c.cones[i]]
        out.append((w, owners))
    return out


def _support_is_convex(c: ConicalComplex) -> bool:
    n = c.rank
    if any(c.cone(i).dim != n for i in c.maximal_cones):
        return False
    for w, owners in _walls(c):
        if len(owners) == 1:
            cone = c.cone(owners[0])
            normal = next(nrm for nrm, on in cone.facet_data
                          if frozenset(sorted(c.cones[owners[0]])[k] for k in on) == c.cones[w])
            if any(_dot(normal, r) < 0 for r in c.rays):
                return False
    return True


def is_complete(c: ConicalComplex) -> bool:
    n = c.rank
    if any(c.cone(i).dim != n for i in c.maximal_cones):
        return False
    return all(len(owners) == 2 for _, owners in _walls(c))


def concavity_test(phi: PLConicalFunction) -> ConcavityReport:
    """Local concavity across every wall: the neighbour's form dominates.

    On a complex with convex support this is equivalent to global
    concavity phi(x+y) >= phi(x)+phi(y).
    """
    c = phi.complex
    if not _support_is_convex(c):
        raise ValueError("support of the complex is not convex")
    for w, owners in _walls(c):
        if len(owners) != 2:
            continue
        a, b = owners
        for p, q in ((a, b), (b, a)):
            gens_q = [c.rays[j] for j in c.cones[q] - c.cones[w]]
            for g in gens_q:
                if _dot(phi.forms[p], g) < _dot(phi.forms[q], g):
                    return ConcavityReport(
                        False,
                        tuple(c.rays[j] for j in sorted(c.cones[w])),
                        (tuple(c.cone_generators(a)), tuple(c.cone_generators(b))),
                    )
    return ConcavityReport(True)


def section_polytope(phi) -> Polytope:
    """P_phi = {u : <u, v> >= phi(v) for every ray v}."""
    c = phi.complex
    return Polytope.from_hrep([(r, phi(r)) for r in c.rays], dim=c.rank)


def toric_degree(phi: PLConicalFunction, n: int | None = None) -> Fraction:
    """Top self-intersection of a nef toric divisor: n! vol(P_phi)."""
    c = phi.complex
    n = c.rank if n is None else n
    if n != c.rank:
        raise ValueError("dimension does not match the fan")
    if not is_complete(c):
        raise ValueError("fan is not complete")
    rep = concavity_test(phi)
    if not rep:
        raise ConcavityError("function is not concave; degree via the section polytope is undefined", rep.wall)
    return factorial(n) * section_polytope(phi).volume


def refine_round(c: ConicalComplex) -> ConicalComplex:
    """Stellar subdivision at the sum of generators of every 2-dimensional cone."""
    targets = [primitive([sum(col) for col in zip(*c.cone_generators(i))])
               for i in range(len(c.cones)) if c.cone(i).dim == 2]
    cur = c
    for v in targets:
        cur = _stellar(cur, v)
    return cur


def decreasing_degree_limit(phi, complex_: ConicalComplex, n: int, depths: Sequence[int]) -> list[Fraction]:
    """Degrees of the nef Cartier approximations of a concave conical function.

    At depth d the complex is refined d times (see :func:`refine_round`) and
    the approximant is the support function of
    P_d = {u : <u, v> >= phi(v) for every ray v of the refinement}.
    It is the smallest concave PL function agreeing with phi on those rays,
    lies above phi, and decreases in d, so the returned degrees
    n! vol(P_d) are non-increasing.
    """
    if not is_complete(complex_):
        raise ValueError("fan is not complete")
    if n != complex_.rank:
        raise ValueError("dimension does not match the fan")
    out = []
    cur = complex_
    done = 0
    for d in sorted(depths):
        while done < d:
            cur = refine_round(cur)
            done += 1
        cons = [(r, as_rational(phi(_vec(r)))) for r in cur.rays]
        poly = Polytope.from_hrep(cons, dim=n)
        for r, val in cons:
            if poly.is_empty or poly.support_min(r) != val:
                raise ConcavityError(f"function is not concave along ray {r}", r)
        out.append(factorial(n) * poly.volume)
    order = sorted(range(len(depths)), key=lambda i: depths[i])
    result = [None] * len(depths)
    for pos, i in enumerate(order):
        result[i] = out[pos]
    return result
