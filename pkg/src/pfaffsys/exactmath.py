"""Exact multivariate arithmetic over the rationals.

Everything downstream (arrangement combinatorics, connection matrices, gauge
transforms) runs on the types in this module, so the rules here are strict:

* no floats anywhere; coefficients are ``fractions.Fraction``;
* every polynomial lives in a declared symbol ``Pool`` tagged BASE (geometry
  variables), WEIGHT (exponent parameters) or MIXED; arithmetic across
  distinct pools raises ``MIXED_POOL_ERROR`` instead of guessing an embedding;
* rational functions are always stored normalized (gcd 1, denominator
  integer-primitive with positive leading coefficient), so syntactic equality
  is semantic equality.

Monomials are exponent tuples keyed against the pool's symbol tuple.  Term
order is graded by nothing: plain lexicographic with the *last* pool symbol
most significant, which is also the order used by the canonical text form.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _intgcd
from typing import Iterable, Mapping, Sequence

from .errors import (
    InconsistentSystemError,
    MixedPoolError,
    UndeclaredFactorError,
    ZeroDenominatorError,
)

BASE = "BASE"
WEIGHT = "WEIGHT"
MIXED = "MIXED"

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class Pool:
    """A named, ordered set of symbols with a provenance tag."""

    tag: str
    symbols: tuple[str, ...]

    def __post_init__(self):
        if self.tag not in (BASE, WEIGHT, MIXED):
            raise ValueError(f"unknown pool tag {self.tag!r}")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols in pool")

    @staticmethod
    def base(symbols: Iterable[str]) -> "Pool":
        return Pool(BASE, tuple(symbols))

    @staticmethod
    def weight(symbols: Iterable[str]) -> "Pool":
        return Pool(WEIGHT, tuple(symbols))

    @staticmethod
    def mixed(base: "Pool", weight: "Pool") -> "Pool":
        if base.tag != BASE or weight.tag != WEIGHT:
            raise MixedPoolError("mixed pool needs one BASE and one WEIGHT pool")
        return Pool(MIXED, base.symbols + weight.symbols)

    @property
    def arity(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def var(self, symbol: str) -> "MultiPoly":
        exp = [0] * self.arity
        exp[self.index(symbol)] = 1
        return MultiPoly(self, {tuple(exp): _ONE})

    def vars(self) -> tuple["MultiPoly", ...]:
        return tuple(self.var(s) for s in self.symbols)

    def const(self, value) -> "MultiPoly":
        c = Fraction(value)
        return MultiPoly(self, {} if c == 0 else {(0,) * self.arity: c})

    def zero(self) -> "MultiPoly":
        return MultiPoly(self, {})

    def one(self) -> "MultiPoly":
        return self.const(1)


def _revkey(exp: tuple[int, ...]) -> tuple[int, ...]:
    # last symbol most significant
    return exp[::-1]


class MultiPoly:
    """Multivariate polynomial with Fraction coefficients in a fixed pool."""

    __slots__ = ("pool", "terms", "_hash")

    def __init__(self, pool: Pool, terms: Mapping[tuple[int, ...], Fraction]):
        self.pool = pool
        clean = {}
        for exp, c in terms.items():
            if c:
                if len(exp) != pool.arity:
                    raise ValueError("exponent arity does not match pool")
                clean[exp] = c
        self.terms = clean
        self._hash = None

    # -- basic queries --------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("not a constant polynomial")
        return next(iter(self.terms.values()), _ZERO)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, symbol: str) -> int:
        i = self.pool.index(symbol)
        return max((e[i] for e in self.terms), default=0)

    def leading_exponent(self) -> tuple[int, ...]:
        if self.is_zero:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms, key=_revkey)

    def leading_coefficient(self) -> Fraction:
        return self.terms[self.leading_exponent()]

    # -- arithmetic ------------------------------------------------------

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.pool != self.pool:
                raise MixedPoolError(
                    "operands live in different pools",
                    left=self.pool.tag,
                    right=other.pool.tag,
                )
            return other
        if isinstance(other, (int, Fraction)):
            return self.pool.const(other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for exp, c in other.terms.items():
            s = out.get(exp, _ZERO) + c
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return MultiPoly(self.pool, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.pool, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(exp, _ZERO) + c1 * c2
                if s:
                    out[exp] = s
                else:
                    out.pop(exp, None)
        return MultiPoly(self.pool, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial; use RationalFunction")
        out = self.pool.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        return RationalFunction.of(self) / other

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.pool.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.pool == other.pool and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.pool, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"MultiPoly({self.text()!r})"

    # -- calculus / evaluation -------------------------------------------

    def diff(self, symbol: str) -> "MultiPoly":
        i = self.pool.index(symbol)
        out = {}
        for exp, c in self.terms.items():
            if exp[i]:
                e = list(exp)
                k = e[i]
                e[i] = k - 1
                key = tuple(e)
                s = out.get(key, _ZERO) + c * k
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return MultiPoly(self.pool, out)

    def evaluate(self, values: Mapping[str, Fraction | int]) -> Fraction:
        acc = _ZERO
        vals = [Fraction(values[s]) if s in values else None for s in self.pool.symbols]
        for exp, c in self.terms.items():
            term = c
            for i, k in enumerate(exp):
                if k:
                    if vals[i] is None:
                        raise KeyError(f"no value for symbol {self.pool.symbols[i]!r}")
                    term *= vals[i] ** k
            acc += term
        return acc

    def evaluate_numeric(self, values: Mapping[str, complex | float]) -> complex:
        acc = 0.0 + 0.0j
        for exp, c in self.terms.items():
            term = complex(c)
            for i, k in enumerate(exp):
                if k:
                    term *= complex(values[self.pool.symbols[i]]) ** k
            acc += term
        return acc

    def lift(self, pool: Pool) -> "MultiPoly":
        """Re-express in a larger pool containing this pool's symbols."""
        idx = [pool.index(s) for s in self.pool.symbols]
        out = {}
        for exp, c in self.terms.items():
            e = [0] * pool.arity
            for i, k in zip(idx, exp):
                e[i] = k
            out[tuple(e)] = c
        return MultiPoly(pool, out)

    # -- content and canonical text --------------------------------------

    def content(self) -> Fraction:
        """Signed rational c with self/c integer-primitive, positive leading."""
        if self.is_zero:
            return _ONE
        num = 0
        den = 1
        for c in self.terms.values():
            num = _intgcd(num, c.numerator)
            den = den * c.denominator // _intgcd(den, c.denominator)
        c = Fraction(num, den)
        if self.leading_coefficient() < 0:
            c = -c
        return c

    def scaled(self, factor: Fraction) -> "MultiPoly":
        f = Fraction(factor)
        return MultiPoly(self.pool, {e: c * f for e, c in self.terms.items()})

    def primitive(self) -> "MultiPoly":
        return self.scaled(1 / self.content())

    def text(self) -> str:
        if self.is_zero:
            return "0"
        out = []
        for exp in sorted(self.terms, key=_revkey, reverse=True):
            c = self.terms[exp]
            mono = "*".join(
                s if k == 1 else f"{s}^{k}"
                for s, k in zip(self.pool.symbols, exp)
                if k
            )
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{_frac_text(mag)}*{mono}"
            else:
                body = _frac_text(mag)
            if not out:
                out.append(body if c > 0 else f"-{body}")
            else:
                out.append(f" + {body}" if c > 0 else f" - {body}")
        return "".join(out)


def _frac_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# gcd machinery (primitive pseudo-remainder sequences)
# ---------------------------------------------------------------------------


def _main_symbol(p: MultiPoly) -> str | None:
    """Most significant pool symbol actually appearing in p."""
    best = -1
    for exp in p.terms:
        for i in range(p.pool.arity - 1, best, -1):
            if exp[i]:
                best = max(best, i)
                break
    return None if best < 0 else p.pool.symbols[best]


def _as_univariate(p: MultiPoly, symbol: str) -> dict[int, MultiPoly]:
    i = p.pool.index(symbol)
    out: dict[int, dict] = {}
    for exp, c in p.terms.items():
        e = list(exp)
        d = e[i]
        e[i] = 0
        out.setdefault(d, {})[tuple(e)] = c
    return {d: MultiPoly(p.pool, t) for d, t in out.items()}


def _from_univariate(coeffs: dict[int, MultiPoly], pool: Pool, symbol: str) -> MultiPoly:
    i = pool.index(symbol)
    out: dict[tuple[int, ...], Fraction] = {}
    for d, poly in coeffs.items():
        for exp, c in poly.terms.items():
            e = list(exp)
            e[i] += d
            out[tuple(e)] = out.get(tuple(e), _ZERO) + c
    return MultiPoly(pool, out)


def _uni_mul_scalar(u: dict[int, MultiPoly], s: MultiPoly) -> dict[int, MultiPoly]:
    return {d: c * s for d, c in u.items()}


def _uni_sub(a: dict[int, MultiPoly], b: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
    out = dict(a)
    for d, c in b.items():
        s = out.get(d)
        s = (-c) if s is None else s - c
        if s.is_zero:
            out.pop(d, None)
        else:
            out[d] = s
    return out


def _uni_shift(u: dict[int, MultiPoly], k: int) -> dict[int, MultiPoly]:
    return {d + k: c for d, c in u.items()}


def _pseudo_rem(a: dict[int, MultiPoly], b: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
    da, db = max(a), max(b)
    lcb = b[db]
    r = dict(a)
    while r and max(r) >= db:
        dr = max(r)
        lead = r[dr]
        r = _uni_sub(_uni_mul_scalar(r, lcb), _uni_shift(_uni_mul_scalar(b, lead), dr - db))
    return r


def _poly_content_in(u: dict[int, MultiPoly]) -> MultiPoly:
    it = iter(u.values())
    g = next(it)
    for c in it:
        g = poly_gcd(g, c)
        if g.is_constant:
            break
    return g


def poly_gcd(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    """gcd over Q[pool], normalized integer-primitive with positive lead."""
    if p.pool != q.pool:
        raise MixedPoolError("gcd across pools")
    if p.is_zero:
        return q.primitive() if not q.is_zero else p.pool.zero()
    if q.is_zero:
        return p.primitive()
    if p.is_constant or q.is_constant:
        return p.pool.one()
    # work integer-primitive throughout: fraction growth in the remainder
    # sequence is what kills performance otherwise
    p = p.primitive()
    q = q.primitive()
    if p == q:
        return p
    sym = _main_symbol(p)
    sym_q = _main_symbol(q)
    assert sym is not None and sym_q is not None
    if p.pool.index(sym_q) > p.pool.index(sym):
        sym = sym_q
    ua, ub = _as_univariate(p, sym), _as_univariate(q, sym)
    if max(ua) == 0 or max(ub) == 0:
        # one side does not involve the chosen symbol: gcd divides contents
        ca = _poly_content_in(ua)
        cb = _poly_content_in(ub)
        return poly_gcd(ca, cb) if not (ca.is_constant or cb.is_constant) else p.pool.one()
    conta, contb = _poly_content_in(ua), _poly_content_in(ub)
    cont = poly_gcd(conta, contb)
    A = _as_univariate(divexact(p, conta).primitive(), sym)
    B = _as_univariate(divexact(q, contb).primitive(), sym)
    if max(A) < max(B):
        A, B = B, A
    while True:
        if max(B) == 0:
            g = p.pool.one()
            break
        R = _pseudo_rem(A, B)
        if not R:
            g = _from_univariate(B, p.pool, sym)
            break
        Rp = _from_univariate(R, p.pool, sym).primitive()
        cr = _poly_content_in(_as_univariate(Rp, sym))
        if not cr.is_constant:
            Rp = divexact(Rp, cr).primitive()
        A, B = B, _as_univariate(Rp, sym)
    g = g.primitive()
    if not g.is_constant:
        gc = _poly_content_in(_as_univariate(g, sym))
        if not gc.is_constant:
            g = divexact(g, gc).primitive()
    return (cont * g).primitive()


def divexact(p: MultiPoly, d: MultiPoly) -> MultiPoly | None:
    """Exact division p/d, or None when d does not divide p."""
    if p.pool != d.pool:
        raise MixedPoolError("division across pools")
    if d.is_zero:
        raise ZeroDivisionError("division by zero polynomial")
    if p.is_zero:
        return p
    if d.is_constant:
        return p.scaled(1 / d.constant_value())
    rem = p
    lead_d = d.leading_exponent()
    lc_d = d.terms[lead_d]
    quo: dict[tuple[int, ...], Fraction] = {}
    while not rem.is_zero:
        lead = rem.leading_exponent()
        diff = tuple(a - b for a, b in zip(lead, lead_d))
        if any(e < 0 for e in diff):
            return None
        c = rem.terms[lead] / lc_d
        quo[diff] = c
        rem = rem - MultiPoly(p.pool, {diff: c}) * d
    return MultiPoly(p.pool, quo)


def poly_lcm(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    if p.is_zero or q.is_zero:
        return p.pool.zero()
    g = poly_gcd(p, q)
    out = divexact(p * q, g)
    assert out is not None
    return out.primitive()


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------


class RationalFunction:
    """Quotient of MultiPolys, always held in canonical form.

    Canonical means: gcd(num, den) = 1 and the denominator is
    integer-primitive with positive leading coefficient (last pool symbol most
    significant), the numerator absorbing the scale.  Construction normalizes,
    so `normalize` is idempotent by inspection and equality is structural.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: MultiPoly, den: MultiPoly, _normalized=False):
        if num.pool != den.pool:
            raise MixedPoolError("numerator and denominator pools differ")
        if den.is_zero:
            raise ZeroDenominatorError("zero denominator", numerator=num.text())
        if not _normalized:
            num, den = _normalize_pair(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @staticmethod
    def of(value, pool: Pool | None = None) -> "RationalFunction":
        if isinstance(value, RationalFunction):
            return value
        if isinstance(value, MultiPoly):
            return RationalFunction(value, value.pool.one())
        if pool is None:
            raise ValueError("pool required to lift a scalar")
        return RationalFunction(pool.const(value), pool.one())

    @property
    def pool(self) -> Pool:
        return self.num.pool

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_constant(self) -> bool:
        return self.num.is_constant and self.den.is_constant

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            if other.pool != self.pool:
                raise MixedPoolError("operands live in different pools")
            return other
        if isinstance(other, MultiPoly):
            return RationalFunction(other, other.pool.one())
        if isinstance(other, (int, Fraction)):
            return RationalFunction.of(other, self.pool)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.num.is_zero:
            raise ZeroDenominatorError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        if n == 0:
            return RationalFunction.of(1, self.pool)
        if n < 0:
            return (RationalFunction.of(1, self.pool) / self) ** (-n)
        return RationalFunction(self.num**n, self.den**n)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, MultiPoly)):
            try:
                other = self._coerce(other)
            except MixedPoolError:
                return False
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self):
        return f"RationalFunction({self.text()!r})"

    def evaluate(self, values: Mapping[str, Fraction | int]) -> Fraction:
        d = self.den.evaluate(values)
        if d == 0:
            raise ZeroDenominatorError("denominator vanishes at evaluation point")
        return self.num.evaluate(values) / d

    def evaluate_numeric(self, values: Mapping[str, complex | float]) -> complex:
        return self.num.evaluate_numeric(values) / self.den.evaluate_numeric(values)

    def text(self) -> str:
        if self.den == self.pool.one():
            return self.num.text()
        return f"({self.num.text()})/({self.den.text()})"


def _normalize_pair(num: MultiPoly, den: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    if num.is_zero:
        return num, den.pool.one()
    if den.is_constant:
        s = den.constant_value()
        return num.scaled(1 / s), den.pool.one()
    q = divexact(num, den)  # den | num is the common case in practice
    if q is not None:
        return q, den.pool.one()
    g = poly_gcd(num, den)
    if not g.is_constant:
        num = divexact(num, g)
        den = divexact(den, g)
    s = den.content()
    if s != 1:
        num = num.scaled(1 / s)
        den = den.scaled(1 / s)
    return num, den


def normalize(rf: RationalFunction) -> RationalFunction:
    """Re-normalize (idempotent: construction already normalizes)."""
    return RationalFunction(rf.num, rf.den)


# ---------------------------------------------------------------------------
# linear algebra over the rational-function field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldMatrix:
    """Dense matrix of RationalFunctions sharing one pool."""

    entries: tuple[tuple[RationalFunction, ...], ...]

    def __post_init__(self):
        widths = {len(r) for r in self.entries}
        if len(widths) > 1:
            raise ValueError("ragged rows")

    @staticmethod
    def from_rows(rows: Sequence[Sequence]) -> "FieldMatrix":
        pool = None
        for r in rows:
            for e in r:
                if isinstance(e, (RationalFunction, MultiPoly)):
                    pool = e.pool if isinstance(e, RationalFunction) else e.pool
                    break
            if pool:
                break
        if pool is None:
            raise ValueError("cannot infer pool from scalar-only matrix")
        return FieldMatrix(
            tuple(tuple(RationalFunction.of(e, pool) for e in r) for r in rows)
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    @property
    def pool(self) -> Pool:
        return self.entries[0][0].pool

    def __getitem__(self, ij: tuple[int, int]) -> RationalFunction:
        return self.entries[ij[0]][ij[1]]

    def row(self, i: int) -> tuple[RationalFunction, ...]:
        return self.entries[i]

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        return FieldMatrix(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __sub__(self, other: "FieldMatrix") -> "FieldMatrix":
        return FieldMatrix(
            tuple(
                tuple(a - b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __mul__(self, other):
        if isinstance(other, FieldMatrix):
            n, k = self.shape
            k2, m = other.shape
            if k != k2:
                raise ValueError("shape mismatch")
            cols = list(zip(*other.entries))
            return FieldMatrix(
                tuple(
                    tuple(
                        sum((a * b for a, b in zip(row, col)), _rf_zero(self.pool))
                        for col in cols
                    )
                    for row in self.entries
                )
            )
        return FieldMatrix(
            tuple(tuple(e * other for e in row) for row in self.entries)
        )

    def matvec(self, vec: Sequence[RationalFunction]) -> list[RationalFunction]:
        return [
            sum((a * b for a, b in zip(row, vec)), _rf_zero(self.pool))
            for row in self.entries
        ]

    @staticmethod
    def identity(n: int, pool: Pool) -> "FieldMatrix":
        one = RationalFunction.of(1, pool)
        zero = _rf_zero(pool)
        return FieldMatrix(
            tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))
        )

    def det(self) -> RationalFunction:
        n, m = self.shape
        if n != m:
            raise ValueError("determinant of non-square matrix")
        pool = self.pool
        rows = []
        scale = pool.one()
        for i in range(n):
            cleared, s = _clear_denominators(self.row(i), pool)
            rows.append(cleared)
            scale = scale * s
        sign = 1
        prev = pool.one()
        for k in range(n):
            piv = next((r for r in range(k, n) if not rows[r][k].is_zero), None)
            if piv is None:
                return _rf_zero(pool)
            if piv != k:
                rows[k], rows[piv] = rows[piv], rows[k]
                sign = -sign
            for r in range(k + 1, n):
                new_row = []
                for c in range(n):
                    val = rows[k][k] * rows[r][c] - rows[r][k] * rows[k][c]
                    q = divexact(val, prev)
                    assert q is not None
                    new_row.append(q)
                rows[r] = new_row
            prev = rows[k][k]
        d = RationalFunction(prev, scale)
        return d if sign > 0 else -d

    def text_rows(self) -> list[list[str]]:
        return [[e.text() for e in row] for row in self.entries]


def _rf_zero(pool: Pool) -> RationalFunction:
    return RationalFunction.of(0, pool)


@dataclass
class LinearSolution:
    solution: tuple[RationalFunction, ...]
    kernel_dim: int
    pivot_columns: tuple[int, ...]
    kernel_basis: tuple[tuple[RationalFunction, ...], ...]

    def unique_on(self, coordinates: Iterable[int]) -> bool:
        """True when the listed coordinates agree across all solutions."""
        coords = list(coordinates)
        return all(vec[c].is_zero for vec in self.kernel_basis for c in coords)


def _clear_denominators(
    entries: Sequence[RationalFunction], pool: Pool
) -> tuple[list[MultiPoly], MultiPoly]:
    """Scale a row of rational functions to polynomials; return (row, scale)."""
    scale = pool.one()
    for e in entries:
        if e.den != pool.one():
            scale = poly_lcm(scale, e.den)
    out = []
    for e in entries:
        q = divexact(scale, e.den)
        assert q is not None
        out.append(e.num * q)
    return out, scale


def poly_gauss_jordan(
    rows: list[list[MultiPoly]],
    pool: Pool,
    pivot_cols_limit: int | None = None,
    with_transform: bool = False,
):
    """Fraction-free Gauss-Jordan (Bareiss/Montante) over a polynomial matrix.

    Pivoting is deterministic: leftmost eligible column, first row with a
    nonzero entry.  After elimination every pivot entry equals the returned
    ``denom`` (the running minor), so field-level results are entry/denom.
    Row scalings never change the zero pattern, so pivot choices agree with
    naive field elimination.
    """
    n = len(rows)
    m = len(rows[0]) if n else 0
    limit = m if pivot_cols_limit is None else pivot_cols_limit
    work = [list(r) for r in rows]
    one = pool.one()
    zero = pool.zero()
    trans = (
        [[one if i == j else zero for j in range(n)] for i in range(n)]
        if with_transform
        else None
    )
    pivots: list[tuple[int, int]] = []
    prev = one
    for col in range(limit):
        at = len(pivots)
        piv = next((r for r in range(at, n) if not work[r][col].is_zero), None)
        if piv is None:
            continue
        if piv != at:
            work[at], work[piv] = work[piv], work[at]
            if trans is not None:
                trans[at], trans[piv] = trans[piv], trans[at]
        lead = work[at][col]

        def _update(row, pivot_row, factor):
            out = []
            for a, b in zip(row, pivot_row):
                val = lead * a - factor * b
                q = divexact(val, prev)
                assert q is not None, "Bareiss division must be exact"
                out.append(q)
            return out

        for r in range(n):
            if r == at:
                continue
            f = work[r][col]
            work[r] = _update(work[r], work[at], f)
            if trans is not None:
                trans[r] = _update(trans[r], trans[at], f)
        pivots.append((at, col))
        prev = lead
    return work, trans, pivots, prev


def solve_linear(matrix: FieldMatrix, rhs: Sequence[RationalFunction]) -> LinearSolution:
    """Solve M x = v over the rational-function field.

    Pivoting is deterministic: leftmost unpivoted column, first row with a
    nonzero entry.  Free variables are set to zero; the kernel basis is
    returned so callers can check uniqueness of any coordinate block.
    Elimination runs fraction-free; normalization happens once per output.
    """
    n, m = matrix.shape
    pool = matrix.pool
    aug = []
    for i in range(n):
        cleared, _ = _clear_denominators(list(matrix.row(i)) + [rhs[i]], pool)
        aug.append(cleared)
    work, _, pivots, denom = poly_gauss_jordan(aug, pool, pivot_cols_limit=m)
    pivot_rows = {r for r, _ in pivots}
    for i in range(n):
        if i not in pivot_rows and not work[i][m].is_zero:
            raise InconsistentSystemError(
                "right-hand side outside the column span", row=i
            )
    zero = _rf_zero(pool)
    sol = [zero] * m
    for r, c in pivots:
        sol[c] = RationalFunction(work[r][m], denom)
    pivot_cols = [c for _, c in pivots]
    free_cols = [c for c in range(m) if c not in pivot_cols]
    kernel = []
    one = RationalFunction.of(1, pool)
    for fc in free_cols:
        vec = [zero] * m
        vec[fc] = one
        for r, c in pivots:
            vec[c] = -RationalFunction(work[r][fc], denom)
        kernel.append(tuple(vec))
    return LinearSolution(
        solution=tuple(sol),
        kernel_dim=len(free_cols),
        pivot_columns=tuple(pivot_cols),
        kernel_basis=tuple(kernel),
    )


def fraction_free_solve(
    matrix: FieldMatrix, rhs: Sequence[RationalFunction]
) -> tuple[RationalFunction, ...]:
    """Bareiss elimination for square nonsingular systems (oracle path).

    Independent of solve_linear's Gauss-Jordan: forward elimination only,
    then explicit back-substitution over the field.
    """
    n, m = matrix.shape
    if n != m:
        raise ValueError("fraction-free solve expects a square system")
    pool = matrix.pool
    rows = []
    for i in range(n):
        cleared, _ = _clear_denominators(list(matrix.row(i)) + [rhs[i]], pool)
        rows.append(cleared)
    prev = pool.one()
    for k in range(n):
        piv = next((r for r in range(k, n) if not rows[r][k].is_zero), None)
        if piv is None:
            raise InconsistentSystemError("singular matrix in fraction-free solve")
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
        for r in range(k + 1, n):
            new_row = []
            for c in range(n + 1):
                val = rows[k][k] * rows[r][c] - rows[r][k] * rows[k][c]
                q = divexact(val, prev)
                assert q is not None, "Bareiss division must be exact"
                new_row.append(q)
            rows[r] = new_row
        prev = rows[k][k]
    sol: list[RationalFunction] = [None] * n  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        acc = RationalFunction(rows[i][n], pool.one())
        for j in range(i + 1, n):
            acc = acc - RationalFunction.of(rows[i][j]) * sol[j]
        sol[i] = acc / RationalFunction.of(rows[i][i])
    return tuple(sol)


# ---------------------------------------------------------------------------
# declared-linear factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorDecomposition:
    constant: Fraction
    multiplicities: tuple[tuple[int, int], ...]  # (declared index, power)

    def as_dict(self) -> dict[int, int]:
        return dict(self.multiplicities)


def factor_into_declared_linears(
    p: MultiPoly, declared: Sequence[MultiPoly]
) -> FactorDecomposition:
    """Write p as constant * product of declared factors, or raise.

    The declared list is required to be pairwise non-proportional, which makes
    greedy per-factor exhaustion canonical.  A zero input is returned as
    constant 0 with no factors.
    """
    if p.is_zero:
        return FactorDecomposition(_ZERO, ())
    work = p
    mults = []
    for idx, d in enumerate(declared):
        power = 0
        while True:
            q = divexact(work, d)
            if q is None:
                break
            work = q
            power += 1
        if power:
            mults.append((idx, power))
    if not work.is_constant:
        raise UndeclaredFactorError(
            "polynomial has a factor outside the declared list",
            polynomial=p.text(),
            remainder=work.text(),
        )
    return FactorDecomposition(work.constant_value(), tuple(mults))


# ---------------------------------------------------------------------------
# canonical text parsing
# ---------------------------------------------------------------------------


def parse_rational(text: str, pool: Pool) -> RationalFunction:
    """Parse the canonical text form (also accepts general +-*/^ input)."""
    tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
    return _from_ast(tree.body, pool)


def parse_poly(text: str, pool: Pool) -> MultiPoly:
    rf = parse_rational(text, pool)
    if rf.den != pool.one():
        raise ValueError(f"not a polynomial: {text!r}")
    return rf.num


def _from_ast(node, pool: Pool) -> RationalFunction:
    if isinstance(node, ast.BinOp):
        left = _from_ast(node.left, pool)
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                raise ValueError("exponent must be an integer literal")
            return left ** node.right.value
        right = _from_ast(node.right, pool)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        raise ValueError(f"unsupported operator {node.op!r}")
    if isinstance(node, ast.UnaryOp):
        val = _from_ast(node.operand, pool)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
        raise ValueError("unsupported unary operator")
    if isinstance(node, ast.Constant):
        if isinstance(node.value, int):
            return RationalFunction.of(node.value, pool)
        raise ValueError(f"non-integer literal {node.value!r}")
    if isinstance(node, ast.Name):
        return RationalFunction.of(pool.var(node.id))
    raise ValueError(f"unsupported syntax node {type(node).__name__}")
