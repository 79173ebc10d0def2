"""Siegel cones, their group actions and cone decompositions.

A point of the tilde cone is a pair (Omega, beta): Omega a symmetric
positive semidefinite g x g matrix with rational kernel and beta = zeta
Omega a row vector in its row span. Points are stored as vectors in lattice
coordinates

    (Omega_11, 2 Omega_12, ..., 2 Omega_1g, Omega_22, ..., Omega_gg, beta_1, ..., beta_g)

in which half-integral Omega and integral beta are exactly the integer
vectors. The group elements (A, lambda) with A in GL(g, Z) and lambda an
integer row vector act by

    (A, lambda) . (Omega, beta) = (A Omega A^t, (beta + lambda Omega) A^t).

Infinite decompositions are described by finitely many fundamental cones
and group generators; checks run on the fundamental cones and one shell of
translates.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Sequence

from .complexes import (
    ConicalComplex,
    LatticeCone,
    _parallelepiped_points,
    complex_from_maximal,
    cone_rays_from_hrep,
    primitive,
)
from .convexrec import ConvexOracle, make_linear_oracle, make_logdet_oracle, make_qol_oracle, sum_oracles
from .exactnum import NotPSDError, RatMatrix, as_rational, psd_certify, rational_from_str, rational_to_str, solve_linear
from .plconical import ConicalOracle, PLConicalFunction, PLTestResult, PLWitness, pl_test

__all__ = [
    "SiegelPoint",
    "GroupElement",
    "Membership",
    "AdmissibleDecomposition",
    "CheckItem",
    "CheckReport",
    "DivisorialFunction",
    "DescendedFunction",
    "CartierDiagnostic",
    "PreconditionError",
    "tilde_membership",
    "act",
    "standard_decomposition_g1",
    "reduce_point",
    "admissibility_check",
    "divisorial_check",
    "sufficiently_negative_builder",
    "divisorial_from_ray_values",
    "descended_function",
    "lelong_at_ray",
    "cartier_diagnostic",
    "chart_model",
    "decomposition_from_json",
    "quadratic_term",
]


class PreconditionError(ValueError):
    pass


def sym_dim(g: int) -> int:
    return g * (g + 1) // 2


def _pairs(g: int):
    return [(i, j) for i in range(g) for j in range(i, g)]


@dataclass(frozen=True)
class SiegelPoint:
    omega: RatMatrix
    beta: tuple

    def __post_init__(self):
        om = self.omega if isinstance(self.omega, RatMatrix) else RatMatrix.of(self.omega)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "beta", tuple(as_rational(t) for t in self.beta))
        if not om.is_symmetric() or len(self.beta) != om.rows:
            raise ValueError("Omega must be symmetric with len(beta) = g")

    @property
    def g(self) -> int:
        return self.omega.rows

    @classmethod
    def from_vector(cls, v: Sequence, g: int | None = None) -> "SiegelPoint":
        v = [as_rational(t) for t in v]
        if g is None:
            g = next(k for k in range(1, 20) if sym_dim(k) + k == len(v))
        rows = [[Fraction(0)] * g for _ in range(g)]
        for (i, j), t in zip(_pairs(g), v):
            if i == j:
                rows[i][i] = t
            else:
                rows[i][j] = rows[j][i] = t / 2
        return cls(RatMatrix.of(rows), tuple(v[sym_dim(g):]))

    def to_vector(self) -> tuple:
        g = self.g
        out = []
        for i, j in _pairs(g):
            out.append(self.omega[i, j] if i == j else 2 * self.omega[i, j])
        return tuple(out) + self.beta

    @property
    def is_definite(self) -> bool:
        return psd_certify(self.omega).is_pd

    @cached_property
    def zeta(self) -> tuple | None:
        m = tilde_membership(self.omega, self.beta)
        return m.alpha if m.inside else None


@dataclass(frozen=True)
class Membership:
    inside: bool
    alpha: tuple | None = None
    kernel_vector: tuple | None = None

    @property
    def kind(self) -> str:
        return "IN" if self.inside else "OUT"


def tilde_membership(omega, beta) -> Membership:
    """Whether (Omega, beta) lies in the tilde cone: beta = alpha Omega solvable."""
    om = omega if isinstance(omega, RatMatrix) else RatMatrix.of(omega)
    beta = tuple(as_rational(t) for t in beta)
    cert = psd_certify(om)
    if not cert.is_psd:
        raise NotPSDError("Omega is not positive semidefinite", cert.witness)
    alpha = solve_linear([list(r) for r in om.entries], list(beta))
    if alpha is not None:
        return Membership(True, tuple(alpha))
    for k in cert.vectors:
        if sum(a * b for a, b in zip(beta, k)) != 0:
            return Membership(False, kernel_vector=primitive(k))
    raise AssertionError("inconsistent system without a separating kernel vector")


def quadratic_term(p: SiegelPoint) -> Fraction:
    """zeta Omega zeta^t = beta Omega^+ beta^t, for any witness zeta."""
    z = p.zeta
    if z is None:
        raise ValueError("point is outside the tilde cone")
    return sum(a * b for a, b in zip(z, p.beta))


# --------------------------------------------------------------------------
# group


def _int_matrix(a) -> tuple:
    return tuple(tuple(int(x) for x in row) for row in a)


@dataclass(frozen=True)
class GroupElement:
    A: tuple
    lam: tuple

    def __post_init__(self):
        a = _int_matrix(self.A)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "lam", tuple(int(x) for x in self.lam))
        if len(a) != len(self.lam) or any(len(r) != len(a) for r in a):
            raise ValueError("A must be g x g and lambda of length g")
        if abs(RatMatrix.of(a).det()) != 1:
            raise ValueError("A must have determinant +-1")

    @classmethod
    def identity(cls, g: int) -> "GroupElement":
        return cls(tuple(tuple(int(i == j) for j in range(g)) for i in range(g)), (0,) * g)

    @classmethod
    def translation(cls, lam) -> "GroupElement":
        g = len(lam)
        return cls(tuple(tuple(int(i == j) for j in range(g)) for i in range(g)), tuple(lam))

    @property
    def g(self) -> int:
        return len(self.lam)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        # matrices [[A, 0], [lambda, 1]] multiply in this order
        a1, a2 = RatMatrix.of(self.A), RatMatrix.of(other.A)
        lam = tuple(x + y for x, y in zip(other.lam, a2.rvecmul(self.lam)))
        return GroupElement(_int_matrix((a1 @ a2).entries), lam)

    def inverse(self) -> "GroupElement":
        ainv = RatMatrix.of(self.A).inverse()
        return GroupElement(_int_matrix(ainv.entries), tuple(-x for x in ainv.rvecmul(self.lam)))

    def matrix(self) -> tuple:
        """Matrix of the action on lattice coordinates (column vectors).

        Entries are rational: for g >= 2 a translation sends the
        off-diagonal coordinate (Omega_ij = 1/2) to half-integral beta.
        """
        g = self.g
        n = sym_dim(g) + g
        cols = []
        for k in range(n):
            e = [0] * n
            e[k] = 1
            cols.append(act(self, SiegelPoint.from_vector(e, g)).to_vector())
        return tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))

    def to_json(self) -> dict:
        return {"A": [list(r) for r in self.A], "lambda": list(self.lam)}


def act(gelem: GroupElement, p) -> SiegelPoint:
    if not isinstance(p, SiegelPoint):
        p = SiegelPoint.from_vector(p, gelem.g)
    a = RatMatrix.of(gelem.A)
    om = a @ p.omega @ a.T
    shifted = tuple(b + c for b, c in zip(p.beta, p.omega.rvecmul(gelem.lam)))
    return SiegelPoint(om, a.vecmul(shifted))


def _act_vec(gelem: GroupElement, v) -> tuple:
    return act(gelem, SiegelPoint.from_vector(v, gelem.g)).to_vector()


# --------------------------------------------------------------------------
# decompositions


@dataclass(frozen=True)
class AdmissibleDecomposition:
    g: int
    sigma_cones: tuple      # cones of the base cone, generators in Sym lattice coordinates
    pi_cones: tuple         # cones of the tilde cone, generators in lattice coordinates
    A_gens: tuple = ()
    lambda_gens: tuple = ()
    shell_radius: int = 1

    def __post_init__(self):
        norm = lambda cones: tuple(tuple(tuple(int(x) for x in r) for r in c) for c in cones)
        object.__setattr__(self, "sigma_cones", norm(self.sigma_cones))
        object.__setattr__(self, "pi_cones", norm(self.pi_cones))
        object.__setattr__(self, "A_gens", tuple(_int_matrix(a) for a in self.A_gens))
        object.__setattr__(self, "lambda_gens", tuple(tuple(int(x) for x in l) for l in self.lambda_gens))

    @property
    def dim(self) -> int:
        return sym_dim(self.g) + self.g

    @cached_property
    def generators(self) -> list[GroupElement]:
        g = self.g
        eye = tuple(tuple(int(i == j) for j in range(g)) for i in range(g))
        gens = [GroupElement(a, (0,) * g) for a in self.A_gens]
        gens += [GroupElement(eye, l) for l in self.lambda_gens]
        return gens

    def shell(self, radius: int | None = None) -> list[GroupElement]:
        """Group words of length <= radius in the generators and their inverses."""
        radius = self.shell_radius if radius is None else radius
        letters = []
        for x in self.generators:
            letters += [x, x.inverse()]
        seen = {GroupElement.identity(self.g)}
        frontier = list(seen)
        for _ in range(radius):
            nxt = []
            for w in frontier:
                for l in letters:
                    c = w * l
                    if c not in seen:
                        seen.add(c)
                        nxt.append(c)
            frontier = nxt
        return sorted(seen, key=lambda e: (sum(abs(x) for x in e.lam) + sum(abs(x) for r in e.A for x in r), e.lam, e.A))

    @cached_property
    def cone_objects(self) -> list[LatticeCone]:
        return [LatticeCone(c, self.dim) for c in self.pi_cones]

    @cached_property
    def maximal_pi(self) -> list[int]:
        sets = [frozenset(c) for c in self.pi_cones]
        return [i for i, s in enumerate(sets) if not any(s < t for t in sets)]

    @cached_property
    def fundamental_complex(self) -> ConicalComplex:
        return complex_from_maximal(self.dim, [self.pi_cones[i] for i in self.maximal_pi if self.pi_cones[i]],
                                    validate=False)

    def locate_fundamental(self, v) -> int | None:
        """Index of the smallest fundamental cone containing v, if any."""
        best = None
        for i, c in enumerate(self.cone_objects):
            if c.contains(v) and (best is None or c.dim < self.cone_objects[best].dim):
                best = i
        return best

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "sigma_cones": [[list(r) for r in c] for c in self.sigma_cones],
            "pi_cones": [[list(r) for r in c] for c in self.pi_cones],
            "group": {"A_gens": [[list(r) for r in a] for a in self.A_gens],
                      "lambda_gens": [list(l) for l in self.lambda_gens]},
        }


def decomposition_from_json(d) -> AdmissibleDecomposition:
    if isinstance(d, str):
        d = json.loads(d)
    grp = d.get("group", {})
    return AdmissibleDecomposition(
        int(d["g"]), d.get("sigma_cones", ()), d["pi_cones"],
        grp.get("A_gens", ()), grp.get("lambda_gens", ()), d.get("shell_radius", 1),
    )


def standard_decomposition_g1() -> AdmissibleDecomposition:
    """Fundamental 2-cone <(1,0),(1,1)> with faces; translations by lambda."""
    return AdmissibleDecomposition(
        1,
        sigma_cones=((), ((1,),)),
        pi_cones=((), ((1, 0),), ((1, 1),), ((1, 0), (1, 1))),
        A_gens=(),
        lambda_gens=((1,),),
    )


def reduce_point(dec: AdmissibleDecomposition, p, radius: int | None = None):
    """(gamma, q, cone index) with p = gamma . q and q in a fundamental cone.

    Returns None when no such representation is found in the search shell.
    """
    if not isinstance(p, SiegelPoint):
        p = SiegelPoint.from_vector(p, dec.g)
    if p.zeta is None:
        return None
    g = dec.g
    a_words = [e for e in dec.shell(radius) if not any(e.lam)] if dec.A_gens else [GroupElement.identity(g)]
    a_words = a_words or [GroupElement.identity(g)]
    for aw in a_words:
        p1 = act(aw.inverse(), p)
        z = p1.zeta
        base = [-math.floor(t) for t in z]
        for e in product((0, -1, 1), repeat=g):
            lam0 = tuple(b + x for b, x in zip(base, e))
            q = act(GroupElement.translation(lam0), p1)
            idx = dec.locate_fundamental(q.to_vector())
            if idx is not None:
                gamma = aw * GroupElement.translation(tuple(-x for x in lam0))
                return gamma, q, idx
    # general fallback: search the full shell
    for w in dec.shell(radius):
        q = act(w.inverse(), p)
        idx = dec.locate_fundamental(q.to_vector())
        if idx is not None:
            return w, q, idx
    return None


# --------------------------------------------------------------------------
# checkers


@dataclass(frozen=True)
class CheckItem:
    item: str
    passed: bool
    detail: str = ""
    witness: object = None

    def to_json(self) -> dict:
        return {"item": self.item, "passed": self.passed, "detail": self.detail,
                "witness": _jsonable(self.witness)}


def _jsonable(w):
    if w is None or isinstance(w, (bool, int, str)):
        return w
    if isinstance(w, Fraction):
        return rational_to_str(w)
    if isinstance(w, (list, tuple)):
        return [_jsonable(x) for x in w]
    if isinstance(w, SiegelPoint):
        return _jsonable(w.to_vector())
    if isinstance(w, GroupElement):
        return w.to_json()
    return str(w)


@dataclass(frozen=True)
class CheckReport:
    items: tuple

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def failures(self) -> list[CheckItem]:
        return [i for i in self.items if not i.passed]

    def __getitem__(self, name: str) -> CheckItem:
        return next(i for i in self.items if i.item == name)

    def to_json(self) -> dict:
        return {"passed": self.passed, "items": [i.to_json() for i in self.items]}


def _common_face(a: LatticeCone, b: LatticeCone) -> bool:
    n = a.dim_ambient
    ineqs = [list(x) for x, _ in a.facet_data] + [list(x) for x, _ in b.facet_data]
    inter = cone_rays_from_hrep(ineqs, [list(e) for e in a.equations] + [list(e) for e in b.equations], n)
    for c, other in ((a, b), (b, a)):
        inside = frozenset(i for i, gen in enumerate(c.generators) if other.contains(gen))
        if inside not in c.face_index_sets:
            return False
        sub = LatticeCone(tuple(c.generators[i] for i in sorted(inside)), n)
        if not all(sub.contains(r) for r in inter):
            return False
    return True


def _face_closure_missing(cones: list[tuple], n: int):
    present = {frozenset(c) for c in cones} | {frozenset()}
    for c in cones:
        cone = LatticeCone(c, n)
        for f in cone.face_index_sets:
            face = frozenset(c[i] for i in f)
            if face not in present:
                return c, tuple(sorted(face))
    return None


def _cone_basics(cones, n, member):
    """Primitive rays inside the ambient cone, strict convexity."""
    for c in cones:
        for r in c:
            if not any(r) or math.gcd(*[abs(x) for x in r]) != 1:
                return False, f"generator {r} is not a primitive lattice vector", r
            if not member(r):
                return False, f"generator {r} lies outside the ambient cone", r
        cone = LatticeCone(c, n)
        if not cone.is_strictly_convex:
            return False, f"cone {c} contains a line", c
    return True, "", None


def _sigma_member(g):
    def member(v):
        p = SiegelPoint.from_vector(tuple(v) + (0,) * g, g)
        return psd_certify(p.omega).is_psd
    return member


def _pi_member(g):
    def member(v):
        p = SiegelPoint.from_vector(v, g)
        return psd_certify(p.omega).is_psd and p.zeta is not None
    return member


def _sample_tilde_points(g: int, height: int, count: int, rng: random.Random) -> list[SiegelPoint]:
    pts = []
    if g == 1:
        for om in range(0, height + 1):
            for num in range(-height * max(om, 1), height * max(om, 1) + 1):
                if om == 0 and num != 0:
                    continue
                pts.append(SiegelPoint(RatMatrix.of([[om]]), (Fraction(num, 2),)))
        return pts
    while len(pts) < count:
        m = [[rng.randint(-height, height) for _ in range(g)] for _ in range(g)]
        om = RatMatrix.of(m) @ RatMatrix.of(m).T
        if not psd_certify(om).is_pd:
            continue
        z = tuple(Fraction(rng.randint(-height, height), rng.randint(1, 3)) for _ in range(g))
        pts.append(SiegelPoint(om, om.rvecmul(z)))
    return pts


def admissibility_check(dec: AdmissibleDecomposition, height: int = 4, samples: int = 40, seed: int = 0) -> CheckReport:
    """Check the cone-decomposition conditions on fundamental data plus one shell.

    Items ``sigma-1..5`` concern the base decomposition and ``pi-1..6`` the
    decomposition of the tilde cone: lattice/strict convexity, face
    closure, common-face intersections, covering, group invariance with
    finitely many orbits, and projection into base cones.
    """
    g = dec.g
    gs = sym_dim(g)
    n = dec.dim
    items = []
    rng = random.Random(seed)
    sig = [c for c in dec.sigma_cones if c]
    pic = [c for c in dec.pi_cones if c]

    ok, msg, w = _cone_basics(sig, gs, _sigma_member(g))
    items.append(CheckItem("sigma-1", ok, msg, w))
    miss = _face_closure_missing(sig, gs)
    items.append(CheckItem("sigma-2", miss is None, "" if miss is None else "missing face", miss))
    a_elems = [e for e in dec.shell() if not any(e.lam)]
    sig_shell = _sigma_shell(dec, sig, a_elems)
    bad = _first_bad_intersection(sig, sig_shell, gs)
    items.append(CheckItem("sigma-3", bad is None, "" if bad is None else "cones meet outside a common face", bad))
    # covering of the base cone, tested on Omega parts of the sample points
    sample = _sample_tilde_points(g, height, samples, rng)
    uncovered = None
    for p in sample:
        v = SiegelPoint(p.omega, (0,) * g).to_vector()[:gs]
        if not any(LatticeCone(c, gs).contains(v) for c in sig_shell) and any(v):
            uncovered = v
            break
    items.append(CheckItem("sigma-4", uncovered is None, "" if uncovered is None else "point not covered", uncovered))
    items.append(_invariance_item("sigma-5", sig, sig_shell, [e for e in dec.generators if not any(e.lam)], gs, base=True))

    ok, msg, w = _cone_basics(pic, n, _pi_member(g))
    items.append(CheckItem("pi-1", ok, msg, w))
    miss = _face_closure_missing(pic, n)
    items.append(CheckItem("pi-2", miss is None, "" if miss is None else "missing face", miss))
    shell_cones = []
    for e in dec.shell():
        for c in pic:
            shell_cones.append(tuple(_act_vec(e, r) for r in c))
    bad = _first_bad_intersection(pic, shell_cones, n)
    items.append(CheckItem("pi-3", bad is None, "" if bad is None else "cones meet outside a common face", bad))
    uncovered = None
    for p in sample:
        if reduce_point(dec, p) is None:
            uncovered = p
            break
    items.append(CheckItem("pi-4", uncovered is None, "" if uncovered is None else "point not covered", uncovered))
    items.append(_invariance_item("pi-5", pic, shell_cones, dec.generators, n, base=False))
    proj_bad = None
    for c in pic:
        proj = [tuple(r[:gs]) for r in c if any(r[:gs])]
        if not proj:
            continue
        if not any(all(LatticeCone(s, gs).contains(v) for v in proj) for s in sig_shell):
            proj_bad = c
            break
    items.append(CheckItem("pi-6", proj_bad is None, "" if proj_bad is None else "projection not inside a base cone", proj_bad))
    return CheckReport(tuple(items))


def _sigma_shell(dec, sig, a_elems):
    g = dec.g
    gs = sym_dim(g)
    out = []
    for e in a_elems:
        for c in sig:
            out.append(tuple(_act_vec(e, tuple(r) + (0,) * g)[:gs] for r in c))
    return out or list(sig)


def _first_bad_intersection(fund, shell_cones, n):
    fobjs = [LatticeCone(c, n) for c in fund]
    seen = set()
    for c in shell_cones:
        key = frozenset(c)
        if key in seen:
            continue
        seen.add(key)
        co = LatticeCone(tuple(primitive(r) for r in c), n)
        for f, fo in zip(fund, fobjs):
            if frozenset(f) == key:
                continue
            if not _common_face(fo, co):
                return (f, c)
    return None


def _invariance_item(name, fund, shell_cones, gens, n, base: bool) -> CheckItem:
    """Generators send fundamental cones to cones of the same dimension with
    primitive lattice generators; finitely many orbits is built in."""
    for e in gens:
        for c in fund:
            if base:
                g = e.g
                img = [_act_vec(e, tuple(r) + (0,) * g)[:n] for r in c]
            else:
                img = [_act_vec(e, r) for r in c]
            if any(any(x.denominator != 1 for x in r) for r in img):
                return CheckItem(name, False, "image leaves the lattice", (e, c))
            if LatticeCone(tuple(tuple(int(x) for x in r) for r in img), n).dim != LatticeCone(c, n).dim:
                return CheckItem(name, False, "image has the wrong dimension", (e, c))
    return CheckItem(name, True, f"{len(fund)} fundamental cones")


# --------------------------------------------------------------------------
# divisorial functions


@dataclass(frozen=True)
class DivisorialFunction:
    """Cone-wise linear function on the fundamental cones, extended by the
    transformation law to every translate."""

    dec: AdmissibleDecomposition
    ray_values: tuple                 # ((ray vector, value), ...)
    denominator_bound: int = 60
    flags: tuple = ()                 # names of checks that passed

    @cached_property
    def values(self) -> dict:
        return {tuple(r): as_rational(v) for r, v in self.ray_values}

    @cached_property
    def forms(self) -> dict:
        out = {}
        for i, c in enumerate(self.dec.pi_cones):
            if not c:
                out[i] = tuple(Fraction(0) for _ in range(self.dec.dim))
                continue
            f = solve_linear([list(r) for r in c], [self.values[r] for r in c])
            if f is None:
                raise ValueError(f"ray values are not linear on cone {c}")
            out[i] = tuple(f)
        return out

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def fundamental_value(self, v, idx: int) -> Fraction:
        return sum(a * as_rational(b) for a, b in zip(self.forms[idx], v))

    def __call__(self, p) -> Fraction:
        if not isinstance(p, SiegelPoint):
            p = SiegelPoint.from_vector(p, self.dec.g)
        red = reduce_point(self.dec, p)
        if red is None:
            raise ValueError("point is not covered by the decomposition")
        gamma, q, idx = red
        return self.fundamental_value(q.to_vector(), idx) - transformation_defect(q, gamma.lam)

    def with_flags(self, *names) -> "DivisorialFunction":
        return DivisorialFunction(self.dec, self.ray_values, self.denominator_bound,
                                  tuple(sorted(set(self.flags) | set(names))))

    def to_json(self) -> dict:
        return {"ray_values": [[list(r), rational_to_str(as_rational(v))] for r, v in self.ray_values],
                "denominator_bound": self.denominator_bound, "flags": list(self.flags)}


def transformation_defect(q: SiegelPoint, lam) -> Fraction:
    """phi(q) - phi(lambda . q) = lambda Omega lambda^t + 2 beta lambda^t."""
    lam = tuple(as_rational(t) for t in lam)
    return q.omega.quad(lam) + 2 * sum(a * b for a, b in zip(q.beta, lam))


def divisorial_from_ray_values(dec: AdmissibleDecomposition, values, denominator_bound: int = 60) -> DivisorialFunction:
    """Values given as a mapping ray -> value or a list aligned with the fundamental rays."""
    rays = sorted({r for c in dec.pi_cones for r in c})
    if isinstance(values, dict):
        pairs = tuple((tuple(int(x) for x in r), as_rational(v)) for r, v in values.items())
    else:
        pairs = tuple((r, as_rational(v)) for r, v in zip(rays, values))
    return DivisorialFunction(dec, pairs, denominator_bound)


def _lattice_points_of_cone(c: tuple, n: int, box: int = 2) -> list[tuple]:
    cone = LatticeCone(c, n)
    pts = set(tuple(r) for r in c)
    if c and cone.is_simplicial:
        pts.update(_parallelepiped_points(cone))
    for coeffs in product(range(box + 1), repeat=len(c)):
        if any(coeffs):
            pts.add(tuple(sum(k * r[i] for k, r in zip(coeffs, c)) for i in range(n)))
    return sorted(pts)


def divisorial_check(phi: DivisorialFunction, dec: AdmissibleDecomposition | None = None,
                     lam_range: int = 2) -> CheckReport:
    """Items ``div-1..4``: conical, bounded denominators, linear per cone,
    transformation law (including consistency of its extension on a shell)."""
    dec = phi.dec if dec is None else dec
    n = dec.dim
    items = []
    try:
        forms = phi.forms
    except ValueError as e:
        return CheckReport((CheckItem("div-3", False, str(e)),))
    # conical: forms are linear by construction; value at the apex is 0
    items.append(CheckItem("div-1", True, "cone-wise linear forms are conical"))
    denom = 1
    worst = None
    for i, c in enumerate(dec.pi_cones):
        for v in _lattice_points_of_cone(c, n):
            val = phi.fundamental_value(v, i)
            if val.denominator > denom:
                denom, worst = val.denominator, v
    items.append(CheckItem("div-2", denom <= phi.denominator_bound,
                           f"largest denominator {denom}, bound {phi.denominator_bound}", worst))
    # linearity: forms of overlapping fundamental cones agree on shared faces
    bad = None
    objs = dec.cone_objects
    for i, c in enumerate(dec.pi_cones):
        for j in range(i + 1, len(dec.pi_cones)):
            shared = [r for r in c if objs[j].contains(r)]
            for r in shared:
                if phi.fundamental_value(r, i) != phi.fundamental_value(r, j):
                    bad = (c, dec.pi_cones[j], r)
    items.append(CheckItem("div-3", bad is None, "" if bad is None else "forms disagree on a shared face", bad))
    # transformation law: wherever a translate of a fundamental ray lands in
    # a fundamental cone, the law must predict the value found there
    bad = None
    rays = sorted({r for c in dec.pi_cones for r in c})
    g = dec.g
    lams = [l for l in product(range(-lam_range, lam_range + 1), repeat=g) if any(l)]
    elements = [GroupElement.translation(l) for l in lams] + [e for e in dec.shell() if any(e.lam) or dec.A_gens]
    for e in elements:
        for r in rays:
            q = SiegelPoint.from_vector(r, g)
            img = act(e, q)
            idx = dec.locate_fundamental(img.to_vector())
            if idx is None:
                continue
            base_idx = dec.locate_fundamental(r)
            predicted = phi.fundamental_value(r, base_idx) - transformation_defect(q, e.lam)
            found = phi.fundamental_value(img.to_vector(), idx)
            if predicted != found:
                bad = (e, r, predicted, found)
                break
        if bad:
            break
    items.append(CheckItem("div-4", bad is None, "" if bad is None else "transformation law violated", bad))
    return CheckReport(tuple(items))


def _interior_samples(c: tuple, n: int, count: int, rng: random.Random) -> list[tuple]:
    out = [tuple(sum(r[i] for r in c) for i in range(n))]
    for _ in range(count):
        coeffs = [rng.randint(1, 6) for _ in c]
        out.append(tuple(sum(k * r[i] for k, r in zip(coeffs, c)) for i in range(n)))
    return out


@dataclass(frozen=True)
class BuilderReport:
    function: DivisorialFunction
    checks: CheckReport
    inequality_failures: tuple

    @property
    def sufficiently_negative(self) -> bool:
        return not self.inequality_failures


def sufficiently_negative_builder(dec: AdmissibleDecomposition, samples: int = 20, seed: int = 0,
                                  return_report: bool = False):
    """Interpolate -zeta Omega zeta^t linearly at the fundamental rays.

    The function is flagged ``sufficiently_negative`` only after
    phi <= -zeta Omega zeta^t has been confirmed at interior samples of
    every fundamental cone; failures are reported with the offending point.
    """
    rays = sorted({r for c in dec.pi_cones for r in c})
    vals = {}
    for r in rays:
        vals[r] = -quadratic_term(SiegelPoint.from_vector(r, dec.g))
    phi = divisorial_from_ray_values(dec, vals)
    rng = random.Random(seed)
    fails = []
    for i, c in enumerate(dec.pi_cones):
        if not c:
            continue
        for v in _interior_samples(c, dec.dim, samples, rng):
            lhs = phi.fundamental_value(v, i)
            rhs = -quadratic_term(SiegelPoint.from_vector(v, dec.g))
            if lhs > rhs:
                fails.append((v, lhs, rhs))
    checks = divisorial_check(phi, dec)
    flags = []
    if checks.passed:
        flags.append("admissible")
    if not fails:
        flags.append("sufficiently_negative")
    if _wall_concave(phi, dec, strict=False):
        flags.append("concave")
        if _wall_concave(phi, dec, strict=True) and checks.passed:
            flags.append("polarization")
    if all(v > 0 for v in vals.values()):
        flags.append("strictly_anti_effective")
    phi = phi.with_flags(*flags)
    if return_report:
        return BuilderReport(phi, checks, tuple(fails))
    return phi


def _wall_concave(phi: DivisorialFunction, dec: AdmissibleDecomposition, strict: bool) -> bool:
    """Across each wall between neighbouring maximal cones (fundamental
    plus translates), the far side lies strictly/weakly below the near form."""
    n = dec.dim
    maxi = [dec.pi_cones[i] for i in dec.maximal_pi if len(dec.pi_cones[i]) == n]
    cells = []
    for e in dec.shell():
        for c in maxi:
            q_rays = [SiegelPoint.from_vector(r, dec.g) for r in c]
            img = tuple(tuple(int(x) for x in act(e, q).to_vector()) for q in q_rays)
            cells.append(img)
    cells = list(dict.fromkeys(cells))

    def form_of(cell):
        vals = [phi(r) for r in cell]
        return tuple(solve_linear([list(r) for r in cell], vals))

    forms = {c: form_of(c) for c in cells}
    for a in cells:
        for b in cells:
            if a == b:
                continue
            shared = set(a) & set(b)
            if len(shared) != n - 1:
                continue
            for r in set(b) - shared:
                near = sum(x * y for x, y in zip(forms[a], r))
                far = sum(x * y for x, y in zip(forms[b], r))
                if near < far or (strict and near == far):
                    return False
    return True


# --------------------------------------------------------------------------
# descended function, Lelong numbers, the non-Cartier diagnostic


@dataclass(frozen=True)
class DescendedFunction:
    """g = -m phi - m zeta Omega zeta^t, invariant under the full group."""

    m: int
    phi: DivisorialFunction

    def __call__(self, p) -> Fraction:
        if not isinstance(p, SiegelPoint):
            p = SiegelPoint.from_vector(p, self.phi.dec.g)
        return -self.m * self.phi(p) - self.m * quadratic_term(p)

    def oracle(self) -> ConicalOracle:
        return ConicalOracle(self.phi.dec.fundamental_complex, self, name=f"descended(m={self.m})")


def _require_divisorial(phi):
    if not isinstance(phi, DivisorialFunction):
        raise PreconditionError("expected a cone-wise linear divisorial function")


def descended_function(m: int, phi: DivisorialFunction) -> DescendedFunction:
    _require_divisorial(phi)
    if m <= 0:
        raise ValueError("index m must be positive")
    dec = phi.dec
    for i, c in enumerate(dec.pi_cones):
        for v in _lattice_points_of_cone(c, dec.dim, box=1):
            if (m * phi.fundamental_value(v, i)).denominator != 1:
                raise PreconditionError(f"m * phi is not integral at lattice point {v}")
    return DescendedFunction(int(m), phi)


def lelong_at_ray(m: int, phi: DivisorialFunction, u, require_interior: bool = True) -> Fraction:
    """-m phi(u) - m zeta Omega zeta^t at a primitive lattice point u.

    u must have definite Omega and lie in the interior of a maximal
    fundamental cone unless ``require_interior`` is off, in which case face
    points are evaluated by the same (continuous) expression.
    """
    _require_divisorial(phi)
    dec = phi.dec
    p = u if isinstance(u, SiegelPoint) else SiegelPoint.from_vector(u, dec.g)
    v = p.to_vector()
    if any(t.denominator != 1 for t in v) or math.gcd(*[int(abs(t)) for t in v]) != 1:
        raise ValueError("u must be a primitive lattice point")
    if not p.is_definite:
        raise ValueError("Omega must be positive definite")
    if require_interior:
        interior = any(dec.cone_objects[i].dim == dec.dim and dec.cone_objects[i].in_relative_interior(v)
                       for i in dec.maximal_pi)
        if not interior:
            raise ValueError("u is not interior to a maximal fundamental cone")
    return -m * phi(p) - m * quadratic_term(p)


@dataclass(frozen=True)
class CartierDiagnostic:
    kind: str  # NOT_CARTIER or INCONCLUSIVE
    witness: PLWitness | None
    pl_result: PLTestResult

    def to_json(self) -> dict:
        out = {"result": self.kind, "depth_explored": self.pl_result.depth_explored}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def cartier_diagnostic(m: int, phi, dec: AdmissibleDecomposition | None = None, depth: int = 1) -> CartierDiagnostic:
    """Probe the descended function for piecewise linearity on the fundamental cones."""
    _require_divisorial(phi)
    dec = phi.dec if dec is None else dec
    gfun = descended_function(m, phi)
    res = pl_test(gfun.oracle(), dec.fundamental_complex, depth)
    if res.kind == "NOT_PL":
        return CartierDiagnostic("NOT_CARTIER", res.witness, res)
    return CartierDiagnostic("INCONCLUSIVE", None, res)


def chart_model(m: int, phi: DivisorialFunction, cone_index: int | None = None, k=0) -> ConvexOracle:
    """Convex potential of the invariant metric in the toric chart of a fundamental cone.

    In the coefficients u of the cone generators r_i it reads
    m phi(sum u_i r_i) + m zeta Omega zeta^t(sum u_i r_i) - (k/2) log det Omega(sum u_i r_i),
    so minus its recession function at u is the Lelong number.
    """
    _require_divisorial(phi)
    dec = phi.dec
    if cone_index is None:
        cone_index = next(i for i in dec.maximal_pi if len(dec.pi_cones[i]) == dec.dim)
    c = dec.pi_cones[cone_index]
    pts = [SiegelPoint.from_vector(r, dec.g) for r in c]
    lin = make_linear_oracle([phi.fundamental_value(r, cone_index) for r in c], lower=[1] * len(c))
    zetas = [p.zeta for p in pts]
    qol = make_qol_oracle([p.omega for p in pts], zetas)
    terms, weights = [lin, qol], [m, m]
    if as_rational(k):
        terms.append(make_logdet_oracle([p.omega for p in pts]))
        weights.append(as_rational(k) / 2)
    return sum_oracles(terms, weights)
