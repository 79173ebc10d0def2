"""Closed convex functions on orthant-like domains and their recession functions.

Domains are products of half-lines [c_i, oo) and full lines, so the
recession cone is the matching product of [0, oo) and R. Rational-valued
oracles are evaluated exactly; the others in binary floating point at
``BDIVTOOLS_PREC`` bits (default 200) through mpmath.
"""
from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from .exactnum import RatMatrix, as_rational, psd_certify, rational_to_str

__all__ = [
    "ConvexOracle",
    "RecessionResult",
    "ToleranceUnreachable",
    "DomainError",
    "GapReport",
    "make_oracle",
    "make_logdet_oracle",
    "make_qol_oracle",
    "make_linear_oracle",
    "make_table_oracle",
    "sum_oracles",
    "recession",
    "lelong_number",
    "recession_gap_check",
    "oracle_from_json",
    "DEFAULT_TOL",
    "to_mpf",
]

DEFAULT_TOL = 1e-6
_LAMBDA_START_EXP = 10
_LAMBDA_CAP_EXP = 60


def precision_bits() -> int:
    return int(os.environ.get("BDIVTOOLS_PREC", "200"))


class ToleranceUnreachable(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


def to_mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    if isinstance(v, int):
        return mpmath.mpf(v)
    return v


def _add(a, b):
    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        return Fraction(a) + Fraction(b)
    return to_mpf(a) + to_mpf(b)


def _scale(c, a):
    c = as_rational(c)
    if isinstance(a, (Fraction, int)):
        return c * a
    return to_mpf(c) * a


@dataclass(frozen=True)
class ConvexOracle:
    """Convex function on prod_i [lower_i, oo) (``None`` marks a full line)."""

    dim: int
    fn: Callable
    lower: tuple
    lipschitz: Fraction | None = None
    bounded_above: bool = False
    upper_bound: object = None
    exact: bool = True
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        x = tuple(as_rational(t) for t in x)
        if len(x) != self.dim:
            raise DomainError(f"expected {self.dim} coordinates, got {len(x)}")
        for t, c in zip(x, self.lower):
            if c is not None and t < c:
                raise DomainError(f"point {[str(s) for s in x]} is outside the domain")
        with mpmath.workprec(precision_bits()):
            return self.fn(x)

    @property
    def corner(self) -> tuple:
        return tuple(Fraction(0) if c is None else Fraction(c) for c in self.lower)

    def in_recession_cone(self, y) -> bool:
        return all(c is None or as_rational(t) >= 0 for t, c in zip(y, self.lower))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    def convexity_defects(self, count: int = 50, seed: int = 0, spread: int = 8) -> list:
        """Random segments where the midpoint value exceeds the chord."""
        rng = random.Random(seed)
        bad = []
        base = self.corner
        for _ in range(count):
            a = tuple(b + Fraction(rng.randint(0, 4 * spread), 4) for b in base)
            b = tuple(b + Fraction(rng.randint(0, 4 * spread), 4) for b in base)
            mid = tuple((p + q) / 2 for p, q in zip(a, b))
            fa, fb, fm = self(a), self(b), self(mid)
            lhs = to_mpf(fm) if not isinstance(fm, Fraction) else fm
            rhs = _scale(Fraction(1, 2), _add(fa, fb))
            slack = 0 if isinstance(lhs, Fraction) and isinstance(rhs, Fraction) else mpmath.mpf(2) ** (-precision_bits() // 2)
            if lhs - rhs > slack:
                bad.append((a, b))
        return bad


def make_oracle(fn: Callable, dim: int, lower=None, lipschitz=None, bounded_above=False,
                upper_bound=None, exact=True, kind="custom", params=None) -> ConvexOracle:
    if lower is None:
        lower = tuple(Fraction(1) for _ in range(dim))
    lower = tuple(None if c is None else as_rational(c) for c in lower)
    lip = None if lipschitz is None else as_rational(lipschitz)
    return ConvexOracle(dim, fn, lower, lip, bounded_above, upper_bound, exact, kind, params or {})


def _rational_sqrt_upper(q: Fraction) -> Fraction:
    """A rational r >= sqrt(q), within about 2^-64 relative."""
    if q <= 0:
        return Fraction(0)
    with mpmath.workprec(128):
        r = mpmath.sqrt(to_mpf(q))
        cand = Fraction(int(mpmath.ceil(r * 2 ** 64)), 2 ** 64)
    while cand * cand < q:
        cand += Fraction(1, 2 ** 64)
    return cand


def _weighted_sum(mats: Sequence[RatMatrix], u) -> RatMatrix:
    n = mats[0].rows
    acc = RatMatrix.zeros(n)
    for m, c in zip(mats, u):
        acc = acc + m.scale(c)
    return acc


def _matrices(omegas) -> list[RatMatrix]:
    mats = [m if isinstance(m, RatMatrix) else RatMatrix.of(m) for m in omegas]
    if not mats:
        raise ValueError("need at least one matrix")
    for m in mats:
        if not m.is_symmetric:
            raise ValueError("matrices must be symmetric")
        if not psd_certify(m).is_psd:
            raise ValueError("matrices must be positive semidefinite")
    return mats


def make_logdet_oracle(omegas, corner=1) -> ConvexOracle:
    """u -> -log det(sum u_i Omega_i) on u_i >= corner.

    Bounded above by its corner value. The gradient entries
    -tr(S(u)^-1 Omega_i) shrink in absolute value as u grows, so the corner
    gradient norm is a Lipschitz constant.
    """
    mats = _matrices(omegas)
    c = as_rational(corner)
    if c <= 0:
        raise ValueError("corner must be positive")
    base = _weighted_sum(mats, [c] * len(mats))
    if not psd_certify(base).is_pd:
        raise ValueError("sum of the matrices is degenerate")
    inv = base.inverse()
    grad_sq = sum((inv @ m).trace() ** 2 for m in mats)
    lip = _rational_sqrt_upper(grad_sq)
    top = -mpmath.log(to_mpf(base.det()))

    def fn(u):
        d = _weighted_sum(mats, u).det()
        return -mpmath.log(to_mpf(d))

    return make_oracle(
        fn, len(mats), [c] * len(mats), lip, True, top, exact=False, kind="logdet",
        params={"omegas": [m.to_json() for m in mats], "corner": rational_to_str(c)},
    )


def _qol_value(mats, zetas, u):
    a = _weighted_sum(mats, u)
    b = [Fraction(0)] * a.rows
    for m, z, t in zip(mats, zetas, u):
        row = m.rvecmul(z)
        b = [x + t * y for x, y in zip(b, row)]
    w = a.inverse().vecmul(b)
    return sum(x * y for x, y in zip(b, w)), a, b, w


def _qol_gradient(mats, zetas, u):
    _, a, b, w = _qol_value(mats, zetas, u)
    out = []
    for m, z in zip(mats, zetas):
        d = [x - y for x, y in zip(w, z)]
        out.append(m.quad(z) - m.quad(d))
    return out


def _simplex_grid(r: int, n: int):
    if r == 1:
        yield (Fraction(1),)
        return

    def rec(k, left):
        if k == 1:
            yield (left,)
            return
        for i in range(left + 1):
            for rest in rec(k - 1, left - i):
                yield (i,) + rest

    for p in rec(r, n):
        yield tuple(Fraction(t, n) for t in p)


def make_qol_oracle(omegas, zetas, corner=1, grid: int = 12) -> ConvexOracle:
    """Quadratic-over-linear u -> b(u) S(u)^-1 b(u)^t with
    S(u) = sum u_i Omega_i and b(u) = sum u_i zeta_i Omega_i.

    Homogeneous of degree one. The gradient is homogeneous of degree zero,
    so its supremum is taken over a grid on the closed simplex (where S
    stays invertible); the declared Lipschitz constant is that maximum
    times 1.1.
    """
    mats = _matrices(omegas)
    zs = [tuple(as_rational(t) for t in z) for z in zetas]
    if len(zs) != len(mats) or any(len(z) != mats[0].rows for z in zs):
        raise ValueError("one zeta row vector of matching length per matrix")
    c = as_rational(corner)
    base = _weighted_sum(mats, [c] * len(mats))
    if not psd_certify(base).is_pd:
        raise ValueError("denominator matrix is degenerate")
    best = Fraction(0)
    for u in _simplex_grid(len(mats), grid):
        if not psd_certify(_weighted_sum(mats, u)).is_pd:
            continue
        g = _qol_gradient(mats, zs, u)
        best = max(best, sum(t * t for t in g))
    lip = _rational_sqrt_upper(best) * Fraction(11, 10)

    def fn(u):
        return _qol_value(mats, zs, u)[0]

    return make_oracle(
        fn, len(mats), [c] * len(mats), lip, False, None, exact=True, kind="qol",
        params={
            "omegas": [m.to_json() for m in mats],
            "zetas": [[rational_to_str(t) for t in z] for z in zs],
            "corner": rational_to_str(c),
        },
    )


def make_linear_oracle(coeffs, constant=0, lower=None) -> ConvexOracle:
    cs = tuple(as_rational(t) for t in coeffs)
    k = as_rational(constant)
    lower = tuple(Fraction(0) for _ in cs) if lower is None else lower

    def fn(u):
        return k + sum(a * b for a, b in zip(cs, u))

    lip = _rational_sqrt_upper(sum(t * t for t in cs))
    bounded = all(t <= 0 for t, c in zip(cs, lower) if c is not None) and all(
        t == 0 for t, c in zip(cs, lower) if c is None
    )
    return make_oracle(fn, len(cs), lower, lip, bounded, None, True, "linear",
                       {"coeffs": [rational_to_str(t) for t in cs], "constant": rational_to_str(k)})


def make_table_oracle(slopes, intercepts, lower=None) -> ConvexOracle:
    """Maximum of finitely many affine functions."""
    sl = [tuple(as_rational(t) for t in s) for s in slopes]
    ic = [as_rational(t) for t in intercepts]
    if not sl or len(sl) != len(ic):
        raise ValueError("slopes and intercepts must be non-empty and of equal length")
    dim = len(sl[0])
    lower = tuple(Fraction(0) for _ in range(dim)) if lower is None else lower

    def fn(u):
        return max(b + sum(a * x for a, x in zip(s, u)) for s, b in zip(sl, ic))

    lip = _rational_sqrt_upper(max(sum(t * t for t in s) for s in sl))
    bounded = all(all(t <= 0 for t in s) for s in sl)
    return make_oracle(fn, dim, lower, lip, bounded, None, True, "table",
                       {"slopes": [[rational_to_str(t) for t in s] for s in sl],
                        "intercepts": [rational_to_str(t) for t in ic]})


def sum_oracles(oracles: Sequence[ConvexOracle], weights=None) -> ConvexOracle:
    """Non-negative combination of oracles on the intersection of their domains."""
    weights = [Fraction(1)] * len(oracles) if weights is None else [as_rational(w) for w in weights]
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    dim = oracles[0].dim
    if any(o.dim != dim for o in oracles):
        raise ValueError("dimension mismatch")
    lower = []
    for i in range(dim):
        cs = [o.lower[i] for o in oracles if o.lower[i] is not None]
        lower.append(max(cs) if cs else None)

    def fn(u):
        acc = Fraction(0)
        for w, o in zip(weights, oracles):
            if w:
                acc = _add(acc, _scale(w, o.fn(u)))
        return acc

    lips = [o.lipschitz for w, o in zip(weights, oracles) if w]
    lip = None if any(l is None for l in lips) else sum(w * o.lipschitz for w, o in zip(weights, oracles) if w)
    return make_oracle(
        fn, dim, lower, lip, all(o.bounded_above for w, o in zip(weights, oracles) if w), None,
        all(o.exact for o in oracles), "sum",
        {"weights": [rational_to_str(w) for w in weights], "terms": [o.to_json() for o in oracles]},
    )


def oracle_from_json(d: dict) -> ConvexOracle:
    from .exactnum import rational_from_str as q

    kind, p = d["kind"], d.get("params", {})
    if kind == "logdet":
        return make_logdet_oracle([RatMatrix.from_json(m) for m in p["omegas"]], q(p.get("corner", "1")))
    if kind == "qol":
        return make_qol_oracle([RatMatrix.from_json(m) for m in p["omegas"]],
                               [[q(t) for t in z] for z in p["zetas"]], q(p.get("corner", "1")))
    if kind == "linear":
        return make_linear_oracle([q(t) for t in p["coeffs"]], q(p.get("constant", "0")))
    if kind == "table":
        return make_table_oracle([[q(t) for t in s] for s in p["slopes"]], [q(t) for t in p["intercepts"]])
    if kind == "sum":
        return sum_oracles([oracle_from_json(t) for t in p["terms"]], [q(w) for w in p["weights"]])
    raise ValueError(f"unknown oracle kind {kind!r}")


# --------------------------------------------------------------------------
# recession


@dataclass(frozen=True)
class RecessionResult:
    direction: tuple
    value: object           # Fraction when the oracle is exact, else mpf
    lam: int                # largest lambda evaluated
    error_bound: float

    def __float__(self):
        return float(self.value)

    def scaled(self, c) -> "RecessionResult":
        """Result for direction c*y (positive homogeneity)."""
        c = as_rational(c)
        return RecessionResult(tuple(c * t for t in self.direction), _scale(c, self.value), self.lam,
                               self.error_bound * float(c))

    def to_json(self) -> dict:
        v = rational_to_str(self.value) if isinstance(self.value, Fraction) else mpmath.nstr(self.value, 30)
        return {"direction": [rational_to_str(t) for t in self.direction], "value": v,
                "lambda": self.lam, "error_bound": self.error_bound}


def _norm(y) -> float:
    return math.sqrt(sum(float(t) ** 2 for t in y))


def recession(g: ConvexOracle, x=None, y=None, tol: float = DEFAULT_TOL) -> RecessionResult:
    """rec(g)(y) = lim (g(x + lam y) - g(x)) / lam.

    The slopes of g over [2^k, 2^(k+1)] along y are non-decreasing in k
    and converge to the limit; lambda doubles from 2^10 until two
    consecutive slopes differ by at most ``tol`` (their difference is
    reported as the error bound). Gives up at 2^60.
    """
    if y is None:
        raise ValueError("direction y is required")
    y = tuple(as_rational(t) for t in y)
    x = g.corner if x is None else tuple(as_rational(t) for t in x)
    if len(y) != g.dim or len(x) != g.dim:
        raise DomainError("dimension mismatch")
    if not g.in_recession_cone(y):
        raise DomainError(f"{[str(t) for t in y]} is not in the recession cone")
    if g.lipschitz is None:
        raise ToleranceUnreachable("no Lipschitz constant declared; the limit cannot be bracketed")
    if not any(y):
        return RecessionResult(y, Fraction(0), 1, 0.0)

    def at(lam: int):
        return g(tuple(a + lam * b for a, b in zip(x, y)))

    with mpmath.workprec(precision_bits()):
        k = _LAMBDA_START_EXP
        lo_val = at(2 ** k)
        hi_val = at(2 ** (k + 1))
        prev = _scale(Fraction(1, 2 ** k), _add(hi_val, _neg(lo_val)))
        while True:
            k += 1
            if k >= _LAMBDA_CAP_EXP:
                raise ToleranceUnreachable(f"no convergence to {tol} before lambda = 2^{_LAMBDA_CAP_EXP}")
            lo_val, hi_val = hi_val, at(2 ** (k + 1))
            cur = _scale(Fraction(1, 2 ** k), _add(hi_val, _neg(lo_val)))
            err = abs(float(_add(cur, _neg(prev))))
            if err <= tol:
                break
            prev = cur
        bound = float(g.lipschitz) * _norm(y)
        if abs(float(cur)) > bound + tol:
            raise ValueError(f"recession value {float(cur)} exceeds the declared Lipschitz bound {bound}")
        return RecessionResult(y, cur, 2 ** (k + 1), err)


def _neg(v):
    return -v


def lelong_number(g: ConvexOracle, v, x0=None, tol: float = DEFAULT_TOL):
    """Lelong number -rec(g)(v) of the toroidal metric with potential g."""
    r = recession(g, x0, v, tol)
    return -r.value


@dataclass(frozen=True)
class GapReport:
    max_gap: float
    worst_y: tuple
    passed: bool
    samples: int

    def to_json(self) -> dict:
        return {"max_gap": self.max_gap, "worst_y": [rational_to_str(t) for t in self.worst_y],
                "passed": self.passed, "samples": self.samples}


def recession_gap_check(g: ConvexOracle, x=None, samples=100, tol: float = DEFAULT_TOL, seed: int = 0,
                      spread: int = 20) -> GapReport:
    """Check g(x + y) - rec(g)(y) <= g(x) + tol over sampled directions y.

    ``samples`` is either a count of random directions in the recession
    cone or an explicit list of them.
    """
    x = g.corner if x is None else tuple(as_rational(t) for t in x)
    if isinstance(samples, int):
        rng = random.Random(seed)
        ys = []
        for _ in range(samples):
            ys.append(tuple(
                Fraction(rng.randint(0, spread * 4), 4) if c is not None else Fraction(rng.randint(-spread * 4, spread * 4), 4)
                for c in g.lower
            ))
    else:
        ys = [tuple(as_rational(t) for t in y) for y in samples]
    gx = float(g(x))
    worst, worst_y = -math.inf, None
    for y in ys:
        rec = recession(g, x, y, tol).value if any(y) else Fraction(0)
        gap = float(_add(g(tuple(a + b for a, b in zip(x, y))), _neg(rec))) - gx
        if gap > worst:
            worst, worst_y = gap, y
    return GapReport(worst, worst_y, worst <= tol, len(ys))
