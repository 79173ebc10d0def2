"""Leading asymptotics of dimensions of Siegel-Jacobi forms.

For genus g put G = g(g+1)/2 and n = G + g. The leading constant D of
dim J_{lk,lm} ~ D l^n / n! is computed three ways from Bernoulli and zeta
data, once more from intersection numbers, and compared exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb, factorial

from .exactnum import PI, PiScalar, bernoulli, double_factorial, zeta_negative

__all__ = [
    "WeightIndex",
    "AsymptoticsReport",
    "InconsistentFormsError",
    "UNKNOWN",
    "siegel_volume",
    "closed_forms",
    "degree_pipeline",
    "trivial_dims",
    "asymptotic_table",
    "table_to_csv",
    "parse_piscalar",
]

UNKNOWN = "UNKNOWN"


class InconsistentFormsError(AssertionError):
    pass


@dataclass(frozen=True)
class WeightIndex:
    g: int
    k: int
    m: int
    index: int = 1
    minus_id: bool = False

    def __post_init__(self):
        for name in ("g", "k", "m", "index"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @cached_property
    def G(self) -> int:
        return self.g * (self.g + 1) // 2

    @cached_property
    def n(self) -> int:
        return self.G + self.g

    @property
    def group_factor(self) -> int:
        return 2 if self.minus_id else 1


def _bernoulli_product(g: int) -> Fraction:
    out = Fraction(1)
    for j in range(1, g + 1):
        out *= factorial(j - 1) * bernoulli(2 * j) / factorial(2 * j)
    return out


def _zeta_product(g: int) -> Fraction:
    out = Fraction(1)
    for j in range(1, g + 1):
        out *= zeta_negative(j) / double_factorial(2 * j - 1)
    return out


def siegel_volume(g: int) -> PiScalar:
    """Symplectic volume V_g of A_g, a rational multiple of pi^G."""
    if g < 1:
        raise ValueError("g must be positive")
    big_g = g * (g + 1) // 2
    n = big_g + g
    return PiScalar((-1) ** n * 2 ** (g * g + 1) * _bernoulli_product(g), big_g)


@dataclass(frozen=True)
class AsymptoticsReport:
    wi: WeightIndex
    form_a: PiScalar
    form_b: PiScalar
    form_c: PiScalar
    pipeline: PiScalar
    volume: PiScalar

    @property
    def value(self) -> Fraction:
        return self.form_a.rational()

    @property
    def agree(self) -> bool:
        return self.form_a == self.form_b == self.form_c == self.pipeline

    def to_json(self) -> dict:
        w = self.wi
        return {
            "g": w.g, "k": w.k, "m": w.m, "index": w.index, "minus_id": w.minus_id,
            "formA": str(self.form_a), "formB": str(self.form_b), "formC": str(self.form_c),
            "pipeline": str(self.pipeline), "V_g": str(self.volume),
        }


def parse_piscalar(s: str) -> PiScalar:
    """Inverse of ``str(PiScalar)``."""
    if "*pi^" in s:
        c, p = s.split("*pi^")
        return PiScalar(Fraction(c), int(p))
    return PiScalar(Fraction(s), 0)


def _common(wi: WeightIndex) -> Fraction:
    return factorial(wi.n) * Fraction(wi.m) ** wi.g * Fraction(wi.k) ** wi.G * wi.index * wi.group_factor


def degree_pipeline(wi: WeightIndex) -> PiScalar:
    """Top self-intersection of k M + m B on the universal abelian variety.

    Expanding multilinearly, pulling back along multiplication by 2
    multiplies the term with c_1(B)^r by 4^r and also by the degree 4^g, so
    only r = g survives. Then deg(B|_A) = 2^g g! and the base integral of
    c_1(M)^G is taken in closed form.
    """
    g, big_g, n = wi.g, wi.G, wi.n
    fiber = 2 ** g * factorial(g)
    base = (-1) ** big_g * Fraction(factorial(big_g), 2 ** g) * _zeta_product(g)
    val = comb(n, g) * Fraction(wi.m) ** g * Fraction(wi.k) ** big_g * fiber * base
    return PiScalar(val * wi.index * wi.group_factor, 0)


def closed_forms(wi: WeightIndex) -> AsymptoticsReport:
    g, big_g, n = wi.g, wi.G, wi.n
    c = _common(wi)
    form_a = PiScalar((-1) ** big_g * c * _zeta_product(g))
    form_b = PiScalar((-1) ** n * c * Fraction(2) ** (big_g - g) * _bernoulli_product(g))
    vol = siegel_volume(g)
    form_c = vol * PiScalar(c / 2 ** (big_g + 1)) / PI ** big_g
    pipe = degree_pipeline(wi)
    rep = AsymptoticsReport(wi, form_a, form_b, form_c, pipe, vol)
    if not rep.agree:
        raise InconsistentFormsError(f"closed forms disagree: {rep.to_json()}")
    return rep


def trivial_dims(k: int, m: int):
    """dim J_{k,m} when it is forced: constants in weight 0, nothing in
    negative weight or index, nothing in weight 0 and nonzero index."""
    if k < 0 or m < 0:
        return 0
    if k == 0:
        return 1 if m == 0 else 0
    return UNKNOWN


def asymptotic_table(wi: WeightIndex, ells) -> list[dict]:
    rep = closed_forms(wi)
    d = rep.value
    rows = []
    for ell in ells:
        if ell < 0:
            raise ValueError("l must be non-negative")
        pred = Fraction(ell) ** wi.n / factorial(wi.n) * d
        rows.append({"l": ell, "weight": ell * wi.k, "index": ell * wi.m,
                     "predicted": pred, "leading_constant": d})
    return rows


def table_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "weight", "index", "predicted", "predicted_float", "leading_constant"])
    for r in rows:
        w.writerow([r["l"], r["weight"], r["index"], str(r["predicted"]),
                    f"{float(r['predicted']):.6g}", str(r["leading_constant"])])
    return buf.getvalue()
