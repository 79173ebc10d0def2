"""Exact arithmetic: rationals, pi-graded scalars, Bernoulli/zeta tables and
small rational matrix kernels (inverse, determinant, PSD certification)."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

__all__ = [
    "Rational",
    "as_rational",
    "rational_to_str",
    "rational_from_str",
    "PiScalar",
    "bernoulli",
    "zeta_negative",
    "double_factorial",
    "RatMatrix",
    "PSDResult",
    "psd_certify",
    "trace_dominance",
    "NotPSDError",
    "DimensionMismatchError",
    "solve_linear",
    "nullspace",
    "rank",
]

Rational = Fraction


def as_rational(x) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError(f"refusing to coerce float {x!r}; pass an exact value")
    return Fraction(x)


def rational_to_str(q: Fraction) -> str:
    q = as_rational(q)
    return f"{q.numerator}/{q.denominator}"


def rational_from_str(s) -> Fraction:
    return as_rational(s)


# --------------------------------------------------------------------------
# pi-graded scalars


@dataclass(frozen=True)
class PiScalar:
    """``coeff * pi**pi_pow`` with an exact rational coefficient."""

    coeff: Fraction
    pi_pow: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", as_rational(self.coeff))
        if self.coeff == 0:
            object.__setattr__(self, "pi_pow", 0)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def __add__(self, other):
        other = _pi(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pi_pow != other.pi_pow:
            raise ValueError(
                f"cannot add pi^{self.pi_pow} and pi^{other.pi_pow} terms"
            )
        return PiScalar(self.coeff + other.coeff, self.pi_pow)

    __radd__ = __add__

    def __neg__(self):
        return PiScalar(-self.coeff, self.pi_pow)

    def __sub__(self, other):
        return self + (-_pi(other))

    def __rsub__(self, other):
        return _pi(other) - self

    def __mul__(self, other):
        other = _pi(other)
        return PiScalar(self.coeff * other.coeff, self.pi_pow + other.pi_pow)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _pi(other)
        if other.is_zero:
            raise ZeroDivisionError("PiScalar division by zero")
        return PiScalar(self.coeff / other.coeff, self.pi_pow - other.pi_pow)

    def __rtruediv__(self, other):
        return _pi(other) / self

    def __pow__(self, e: int):
        if not isinstance(e, int):
            raise TypeError("PiScalar powers must be integers")
        return PiScalar(self.coeff**e, self.pi_pow * e)

    def rational(self) -> Fraction:
        """The coefficient, provided pi has cancelled."""
        if self.pi_pow != 0:
            raise ValueError(f"value still carries pi^{self.pi_pow}")
        return self.coeff

    def to_json(self) -> dict:
        return {"coeff": rational_to_str(self.coeff), "pi_pow": self.pi_pow}

    @classmethod
    def from_json(cls, d: dict) -> "PiScalar":
        return cls(as_rational(d["coeff"]), int(d["pi_pow"]))

    def __str__(self):
        if self.pi_pow == 0:
            return str(self.coeff)
        return f"{self.coeff}*pi^{self.pi_pow}"


def _pi(x) -> PiScalar:
    if isinstance(x, PiScalar):
        return x
    return PiScalar(as_rational(x), 0)


PI = PiScalar(Fraction(1), 1)


# --------------------------------------------------------------------------
# Bernoulli numbers and zeta at negative odd integers

_bern_lock = threading.Lock()
_bern_table: list[Fraction] = [Fraction(1)]


def bernoulli(n: int) -> Fraction:
    """B_n with B_1 = -1/2, from sum_{k=0}^{n} C(n+1, k) B_k = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n < len(_bern_table):
        return _bern_table[n]
    with _bern_lock:
        table = list(_bern_table)
        for m in range(len(table), n + 1):
            s = sum(comb(m + 1, k) * table[k] for k in range(m))
            table.append(-s / (m + 1))
        _bern_table[len(_bern_table):] = table[len(_bern_table):]
    return _bern_table[n]


def zeta_negative(k: int) -> Fraction:
    """zeta(1 - 2k) = -B_{2k} / (2k) for k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return -bernoulli(2 * k) / (2 * k)


def double_factorial(n: int) -> int:
    if n < -1:
        raise ValueError("n must be >= -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# --------------------------------------------------------------------------
# exact linear algebra on lists of Fractions


class DimensionMismatchError(ValueError):
    pass


class NotPSDError(ValueError):
    """Precondition failure: a matrix required to be PSD/PD is not."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _rref(rows: list[list[Fraction]]):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    rows = [[as_rational(x) for x in r] for r in rows]
    if not rows:
        return 0
    return len(_rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of {x : rows . x = 0} (exact)."""
    rows = [[as_rational(x) for x in r] for r in rows]
    if ncols is None:
        if not rows:
            raise ValueError("ncols required for an empty system")
        ncols = len(rows[0])
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    red, pivots = _rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -red[i][f]
        basis.append(v)
    return basis


def solve_linear(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Some exact solution of a x = b (free variables set to 0), or None."""
    a = [[as_rational(x) for x in r] for r in a]
    b = [as_rational(x) for x in b]
    if not a:
        return None if any(b) else []
    n = len(a[0])
    aug = [r + [bi] for r, bi in zip(a, b)]
    red, pivots = _rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for i, p in enumerate(pivots):
        x[p] = red[i][n]
    return x


# --------------------------------------------------------------------------
# rational matrices


@dataclass(frozen=True)
class RatMatrix:
    """Immutable dense rational matrix."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_rational(x) for x in r) for r in self.entries)
        if rows and len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def of(cls, rows) -> "RatMatrix":
        return cls(tuple(tuple(r) for r in rows))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls.of([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int, m: int | None = None) -> "RatMatrix":
        return cls.of([[0] * (n if m is None else m) for _ in range(n)])

    @classmethod
    def diag(cls, values) -> "RatMatrix":
        values = list(values)
        n = len(values)
        return cls.of([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def T(self) -> "RatMatrix":
        return RatMatrix(tuple(zip(*self.entries)))

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        return self.is_square() and all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i)
        )

    def __add__(self, other: "RatMatrix") -> "RatMatrix":
        if self.shape != other.shape:
            raise DimensionMismatchError(f"{self.shape} vs {other.shape}")
        return RatMatrix(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def __sub__(self, other: "RatMatrix") -> "RatMatrix":
        return self + other.scale(-1)

    def scale(self, c) -> "RatMatrix":
        c = as_rational(c)
        return RatMatrix(tuple(tuple(c * a for a in r) for r in self.entries))

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise DimensionMismatchError(f"{self.shape} @ {other.shape}")
        cols = list(zip(*other.entries))
        return RatMatrix(
            tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.entries)
        )

    def vecmul(self, v: Sequence) -> tuple:
        """Matrix times column vector."""
        return tuple(sum(a * as_rational(b) for a, b in zip(r, v)) for r in self.entries)

    def rvecmul(self, v: Sequence) -> tuple:
        """Row vector times matrix."""
        v = [as_rational(x) for x in v]
        return tuple(sum(v[i] * self.entries[i][j] for i in range(self.rows)) for j in range(self.cols))

    def quad(self, v: Sequence) -> Fraction:
        """v M v^t."""
        v = [as_rational(x) for x in v]
        return sum(a * b for a, b in zip(v, self.vecmul(v)))

    def trace(self) -> Fraction:
        if not self.is_square():
            raise DimensionMismatchError("trace of a non-square matrix")
        return sum(self.entries[i][i] for i in range(self.rows))

    def det(self) -> Fraction:
        if not self.is_square():
            raise DimensionMismatchError("det of a non-square matrix")
        m = [list(r) for r in self.entries]
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
                if m[i][c] != 0:
                    f = m[i][c] / m[c][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[c])]
        return d

    def inverse(self) -> "RatMatrix":
        if not self.is_square():
            raise DimensionMismatchError("inverse of a non-square matrix")
        n = self.rows
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.entries)]
        red, pivots = _rref(aug)
        if pivots[:n] != list(range(n)):
            raise ZeroDivisionError("singular matrix")
        return RatMatrix(tuple(tuple(r[n:]) for r in red))

    def to_json(self) -> list:
        return [[rational_to_str(x) for x in r] for r in self.entries]

    @classmethod
    def from_json(cls, rows) -> "RatMatrix":
        return cls.of([[as_rational(x) for x in r] for r in rows])


# --------------------------------------------------------------------------
# PSD certification


@dataclass(frozen=True)
class PSDResult:
    """Outcome of :func:`psd_certify`.

    ``kind`` is ``"POSITIVE_DEFINITE"``, ``"PSD_WITH_KERNEL"`` or ``"NOT_PSD"``.
    For kernels, ``vectors`` is a rational basis of ker M; for NOT_PSD it holds
    one witness v with v M v^t < 0.
    """

    kind: str
    vectors: tuple = ()

    @property
    def is_psd(self) -> bool:
        return self.kind != "NOT_PSD"

    @property
    def is_pd(self) -> bool:
        return self.kind == "POSITIVE_DEFINITE"

    @property
    def witness(self):
        return self.vectors[0] if self.kind == "NOT_PSD" else None


def psd_certify(m: RatMatrix) -> PSDResult:
    """Classify a symmetric rational matrix by symmetric Gaussian elimination.

    Pivots are taken at the lowest admissible index. Each remaining index j
    carries a vector w_j with (Schur complement)_{ij} = w_i M w_j^t, so any
    negative diagonal or off-diagonal entry against a zero diagonal turns
    directly into a witness in the original coordinates.
    """
    if not m.is_symmetric():
        raise ValueError("psd_certify needs a symmetric matrix")
    n = m.rows
    s = [list(r) for r in m.entries]
    w = {j: [Fraction(int(i == j)) for i in range(n)] for j in range(n)}
    remaining = list(range(n))
    while remaining:
        neg = next((j for j in remaining if s[j][j] < 0), None)
        if neg is not None:
            return PSDResult("NOT_PSD", (tuple(w[neg]),))
        piv = next((j for j in remaining if s[j][j] > 0), None)
        if piv is None:
            for a in remaining:
                for b in remaining:
                    if b > a and s[a][b] != 0:
                        t = -1 if s[a][b] > 0 else 1
                        v = tuple(x + t * y for x, y in zip(w[a], w[b]))
                        return PSDResult("NOT_PSD", (v,))
            return PSDResult("PSD_WITH_KERNEL", tuple(tuple(w[j]) for j in remaining))
        remaining.remove(piv)
        d = s[piv][piv]
        for j in remaining:
            f = s[piv][j] / d
            if f:
                w[j] = [a - f * b for a, b in zip(w[j], w[piv])]
        for i in remaining:
            for j in remaining:
                s[i][j] = s[i][j] - s[i][piv] * s[piv][j] / d
    return PSDResult("POSITIVE_DEFINITE")


def trace_dominance(a: RatMatrix, b: RatMatrix, c: RatMatrix) -> bool:
    """Check 0 <= tr((A+B)^{-1} C) <= tr(A^{-1} C) exactly."""
    if not (a.shape == b.shape == c.shape and a.is_square()):
        raise DimensionMismatchError("A, B, C must be square of the same size")
    for name, mat, need_pd in (("A", a, True), ("B", b, False), ("C", c, False)):
        if not mat.is_symmetric():
            raise NotPSDError(f"{name} is not symmetric")
        res = psd_certify(mat)
        if not res.is_psd or (need_pd and not res.is_pd):
            raise NotPSDError(
                f"{name} is not {'positive definite' if need_pd else 'PSD'}",
                res.witness,
            )
    lhs = ((a + b).inverse() @ c).trace()
    rhs = (a.inverse() @ c).trace()
    return 0 <= lhs <= rhs


def vec(xs: Iterable) -> tuple:
    return tuple(as_rational(x) for x in xs)
