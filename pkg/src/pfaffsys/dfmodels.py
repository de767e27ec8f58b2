"""Concrete arrangement families and the differential systems built on them.

Three families are provided.  The seven-line planar family couples two
projective-line triples through one diagonal; the grid family puts n+1
vertical and n+1 horizontal lines (two of them pinned at 0 and 1) plus the
diagonal; the third generalizes the seven-line family to n fiber variables
with one diagonal per variable pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import mpmath

from .arrangement import AffineFormFamily, ArrangementFamily
from .errors import DegenerateGaugeError, NTooSmallError, SingularPointError
from .exactmath import FieldMatrix, MultiPoly, Pool, RationalFunction


def build_j2() -> ArrangementFamily:
    """Seven lines in the (t, s) plane over the base (x, y).

    Order: t, t-1, t-x, s, s-1, s-y, t-s with weights a, b, c, a, b, c, g.
    """
    base = Pool.base(("x", "y"))
    weight = Pool.weight(("a", "b", "c", "g"))
    x, y = base.var("x"), base.var("y")
    zero, one = base.zero(), base.one()
    a, b, c, g = (weight.var(s) for s in "abcg")
    hyps = (
        AffineFormFamily("t", zero, (one, zero)),
        AffineFormFamily("t-1", -one, (one, zero)),
        AffineFormFamily("t-x", -x, (one, zero)),
        AffineFormFamily("s", zero, (zero, one)),
        AffineFormFamily("s-1", -one, (zero, one)),
        AffineFormFamily("s-y", -y, (zero, one)),
        AffineFormFamily("t-s", zero, (one, -one)),
    )
    return ArrangementFamily(
        name="j2",
        base_pool=base,
        weight_pool=weight,
        fiber_symbols=("t", "s"),
        hyperplanes=hyps,
        weights=(a, b, c, a, b, c, g),
        declared_factors=(x, y, x - one, y - one, x - y),
        basis_order=((2, 4), (1, 5), (2, 6), (5, 6), (2, 5), (1, 6), (1, 4)),
    )


def build_in(n: int) -> ArrangementFamily:
    """Grid-plus-diagonal family with n+1 verticals and horizontals.

    Hyperplane order: V0, H0, V1..Vn, H1..Hn, D where Vi: t - x_i,
    Hi: s - x_i, D: t - s, with x_0 = 0 and x_1 = 1 pinned.  Weight a_i
    sits on both Vi and Hi; the diagonal carries g.
    """
    if n < 2:
        raise NTooSmallError("the grid family needs n >= 2", n=n)
    base = Pool.base(tuple(f"x{i}" for i in range(2, n + 1)))
    weight = Pool.weight(tuple(f"a{i}" for i in range(n + 1)) + ("g",))
    zero, one = base.zero(), base.one()
    g = weight.var("g")

    def xval(i: int) -> MultiPoly:
        if i == 0:
            return zero
        if i == 1:
            return one
        return base.var(f"x{i}")

    hyps = [
        AffineFormFamily("V0", zero, (one, zero)),
        AffineFormFamily("H0", zero, (zero, one)),
    ]
    weights = [weight.var("a0"), weight.var("a0")]
    for i in range(1, n + 1):
        hyps.append(AffineFormFamily(f"V{i}", -xval(i), (one, zero)))
        weights.append(weight.var(f"a{i}"))
    for i in range(1, n + 1):
        hyps.append(AffineFormFamily(f"H{i}", -xval(i), (zero, one)))
        weights.append(weight.var(f"a{i}"))
    hyps.append(AffineFormFamily("D", zero, (one, -one)))
    weights.append(g)

    declared = []
    for i in range(2, n + 1):
        declared.append(xval(i))
        declared.append(xval(i) - one)
    for i in range(2, n + 1):
        for j in range(i + 1, n + 1):
            declared.append(xval(i) - xval(j))

    # basis order f_11..f_1n, ..., f_n1..f_nn, f_1..f_n where
    # f_ij pairs Vi with Hj and f_k pairs Vk with the diagonal
    vidx = lambda i: i + 1
    hidx = lambda j: n + 1 + j
    didx = 2 * n + 2
    order = [(vidx(i), hidx(j)) for i in range(1, n + 1) for j in range(1, n + 1)]
    order += [(vidx(k), didx) for k in range(1, n + 1)]

    return ArrangementFamily(
        name=f"i{n}",
        base_pool=base,
        weight_pool=weight,
        fiber_symbols=("t", "s"),
        hyperplanes=tuple(hyps),
        weights=tuple(weights),
        declared_factors=tuple(declared),
        basis_order=tuple(order),
    )


def build_jn(n: int) -> ArrangementFamily:
    """n-variable version of the seven-line family.

    Per fiber variable t_i the three parallel hyperplanes t_i, t_i - 1,
    t_i - x_i (weights a, b, c), then the diagonals t_i - t_j in lex
    order, each with weight g.
    """
    if n < 2:
        raise NTooSmallError("the diagonal family needs n >= 2", n=n)
    base = Pool.base(tuple(f"x{i}" for i in range(1, n + 1)))
    weight = Pool.weight(("a", "b", "c", "g"))
    one = base.one()
    a, b, c, g = (weight.var(s) for s in "abcg")

    def unit(i: int) -> tuple[MultiPoly, ...]:
        return tuple(one if j == i else base.zero() for j in range(n))

    hyps = []
    weights = []
    for i in range(1, n + 1):
        ti = unit(i - 1)
        hyps.append(AffineFormFamily(f"t{i}", base.zero(), ti))
        weights.append(a)
        hyps.append(AffineFormFamily(f"t{i}-1", -one, ti))
        weights.append(b)
        hyps.append(AffineFormFamily(f"t{i}-x{i}", -base.var(f"x{i}"), ti))
        weights.append(c)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            coeffs = tuple(
                one if k == i - 1 else (-one if k == j - 1 else base.zero())
                for k in range(n)
            )
            hyps.append(AffineFormFamily(f"t{i}-t{j}", base.zero(), coeffs))
            weights.append(g)

    declared = []
    for i in range(1, n + 1):
        xi = base.var(f"x{i}")
        declared.append(xi)
        declared.append(xi - one)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            declared.append(base.var(f"x{i}") - base.var(f"x{j}"))

    return ArrangementFamily(
        name=f"j{n}",
        base_pool=base,
        weight_pool=weight,
        fiber_symbols=tuple(f"t{i}" for i in range(1, n + 1)),
        hyperplanes=tuple(hyps),
        weights=tuple(weights),
        declared_factors=tuple(declared),
    )


# ---------------------------------------------------------------------------
# scalar differential operators


def _operator_pool(n: int) -> Pool:
    base = Pool.base(tuple(f"x{i}" for i in range(1, n + 1)))
    return Pool.mixed(base, Pool.weight(("a", "b", "c", "g")))


class PdeOperator:
    """A scalar differential operator with polynomial coefficients.

    ``terms`` maps a differentiation multi-index (one entry per base
    variable, ``alpha[i]`` = order in ``x_{i+1}``) to its coefficient.
    Zero coefficients are dropped on construction.
    """

    __slots__ = ("pool", "n", "terms")

    def __init__(self, pool: Pool, n: int, terms: Mapping[tuple[int, ...], MultiPoly]):
        cleaned = {}
        for key, coeff in terms.items():
            key = tuple(int(k) for k in key)
            if len(key) != n or any(k < 0 for k in key):
                raise ValueError(f"bad multi-index {key!r} for {n} variables")
            if not coeff.is_zero:
                cleaned[key] = coeff
        self.pool = pool
        self.n = n
        self.terms = cleaned

    @staticmethod
    def zero(pool: Pool, n: int) -> "PdeOperator":
        return PdeOperator(pool, n, {})

    @staticmethod
    def constant(pool: Pool, n: int, value) -> "PdeOperator":
        coeff = value if isinstance(value, MultiPoly) else pool.const(value)
        return PdeOperator(pool, n, {(0,) * n: coeff})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def orders(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.terms))

    def coefficient(self, alpha) -> MultiPoly:
        return self.terms.get(tuple(alpha), self.pool.zero())

    def __add__(self, other: "PdeOperator") -> "PdeOperator":
        if other.n != self.n:
            raise ValueError("operator arity mismatch")
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            prev = out.get(key)
            out[key] = coeff if prev is None else prev + coeff
        return PdeOperator(self.pool, self.n, out)

    def __sub__(self, other: "PdeOperator") -> "PdeOperator":
        return self + other.scaled(-1)

    def scaled(self, factor) -> "PdeOperator":
        if isinstance(factor, MultiPoly):
            return PdeOperator(
                self.pool, self.n, {k: factor * c for k, c in self.terms.items()}
            )
        f = Fraction(factor)
        return PdeOperator(
            self.pool, self.n, {k: c.scaled(f) for k, c in self.terms.items()}
        )

    def compose(self, other: "PdeOperator") -> "PdeOperator":
        """Operator product self . other (other acts first).

        Derivatives in the left factor distribute over the right factor's
        coefficients by the product rule.
        """
        if other.n != self.n:
            raise ValueError("operator arity mismatch")
        syms = [f"x{i}" for i in range(1, self.n + 1)]
        out: dict[tuple[int, ...], MultiPoly] = {}
        for alpha, left in self.terms.items():
            for beta, right in other.terms.items():
                for gamma in itertools.product(*(range(k + 1) for k in alpha)):
                    shifted = right
                    ways = 1
                    for i, gi in enumerate(gamma):
                        if not gi:
                            continue
                        ways *= math.comb(alpha[i], gi)
                        for _ in range(gi):
                            shifted = shifted.diff(syms[i])
                        if shifted.is_zero:
                            break
                    if shifted.is_zero:
                        continue
                    key = tuple(a - g + b for a, g, b in zip(alpha, gamma, beta))
                    piece = left * shifted
                    if ways != 1:
                        piece = piece * ways
                    prev = out.get(key)
                    out[key] = piece if prev is None else prev + piece
        return PdeOperator(self.pool, self.n, out)

    def evaluate(self, values: Mapping[str, complex], derivatives: Mapping[tuple[int, ...], complex]) -> complex:
        """Pair the operator with a table of derivative samples.

        ``values`` must cover every pool symbol that appears in a
        coefficient; ``derivatives`` must cover every multi-index of the
        operator (raises KeyError otherwise).
        """
        total = 0j
        for alpha, coeff in self.terms.items():
            total += coeff.evaluate_numeric(values) * complex(derivatives[alpha])
        return total

    def __eq__(self, other):
        if not isinstance(other, PdeOperator):
            return NotImplemented
        return self.pool == other.pool and self.n == other.n and self.terms == other.terms

    def __repr__(self):
        return f"PdeOperator({self.text()})"

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha in sorted(self.terms, key=lambda k: (sum(k), k), reverse=True):
            mono = "*".join(
                f"D{i + 1}" + (f"^{p}" if p > 1 else "")
                for i, p in enumerate(alpha)
                if p
            )
            coeff = f"({self.terms[alpha].text()})"
            parts.append(f"{coeff}*{mono}" if mono else coeff)
        return " + ".join(parts)


def pde_operators(n: int) -> tuple[PdeOperator, ...]:
    """The n commuting-family annihilators of the diagonal-family periods.

    The k-th operator is a sum over base directions of products of
    first-order shear factors applied to a one-variable second-order
    piece, plus coupling corrections proportional to the diagonal weight.
    """
    if n < 2:
        raise NTooSmallError("the operator family needs n >= 2", n=n)
    pool = _operator_pool(n)
    a, b, c, g = (pool.var(s) for s in "abcg")
    x = {i: pool.var(f"x{i}") for i in range(1, n + 1)}
    one = pool.one()
    zero_idx = (0,) * n

    def e(i: int) -> tuple[int, ...]:
        return tuple(1 if j == i else 0 for j in range(1, n + 1))

    def e2(i: int, j: int) -> tuple[int, ...]:
        return tuple(
            (1 if k == i else 0) + (1 if k == j else 0) for k in range(1, n + 1)
        )

    def shear(j: int, k: int) -> PdeOperator:
        # collapses to the constant c when j == k
        return PdeOperator(pool, n, {zero_idx: c, e(j): -(x[j] - x[k])})

    def single_bracket(i: int) -> PdeOperator:
        return PdeOperator(
            pool,
            n,
            {
                zero_idx: (one + a + b + c) * c,
                e(i): -((a + b + c * 2) * x[i] - (a + c)),
                e2(i, i): x[i] * (x[i] - one),
            },
        )

    def pair_bracket(i: int, j: int, k: int) -> PdeOperator:
        return PdeOperator(
            pool,
            n,
            {
                zero_idx: c * c,
                e(i): -c * (x[i] - x[k]),
                e(j): -c * (x[j] - x[k]),
                e2(i, j): x[i] * x[j] - (x[i] + x[j] - one) * x[k],
            },
        )

    ops = []
    for k in range(1, n + 1):
        total = PdeOperator.zero(pool, n)
        for i in range(1, n + 1):
            left = PdeOperator.constant(pool, n, one)
            for j in range(1, n + 1):
                if j != i:
                    left = left.compose(shear(j, k))
            total = total + left.compose(single_bracket(i))
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                left = PdeOperator.constant(pool, n, g)
                for s in range(1, n + 1):
                    if s not in (i, j):
                        left = left.compose(shear(s, k))
                total = total + left.compose(pair_bracket(i, j, k))
        ops.append(total)
    return tuple(ops)


def reference_pde_system_n2() -> tuple[PdeOperator, PdeOperator]:
    """Hand-tabulated third-order pair for two base variables.

    Written out term by term, independently of the product construction
    in :func:`pde_operators`; the two routes agree up to an overall sign
    and that agreement is part of the test suite.
    """
    pool = _operator_pool(2)
    a, b, c, g = (pool.var(s) for s in "abcg")
    x, y = pool.var("x1"), pool.var("x2")
    one = pool.one()
    s = a + b + c * 2
    r = one + a + b + c
    first = PdeOperator(
        pool,
        2,
        {
            (2, 1): x * (one - x) * (x - y),
            (2, 0): c * x * (one - x),
            (0, 2): c * y * (one - y),
            (1, 1): (x - y) * (s * x - (a + c)) - g * x * (one - x),
            (1, 0): (s * x - (a + c)) * c,
            (0, 1): -((x - y) * (r + g) - s * y + (a + c)) * c,
            (0, 0): -(r * 2 + g) * c * c,
        },
    )
    second = PdeOperator(
        pool,
        2,
        {
            (1, 2): y * (one - y) * (y - x),
            (0, 2): c * y * (one - y),
            (2, 0): c * x * (one - x),
            (1, 1): (y - x) * (s * y - (a + c)) - g * y * (one - y),
            (0, 1): (s * y - (a + c)) * c,
            (1, 0): -((y - x) * (r + g) - s * x + (a + c)) * c,
            (0, 0): -(r * 2 + g) * c * c,
        },
    )
    return first, second


def operator_ratio(left: PdeOperator, right: PdeOperator) -> Fraction | None:
    """The constant r with left == r*right, or None if none exists."""
    if left.n != right.n or set(left.terms) != set(right.terms):
        return None
    if not left.terms:
        return Fraction(1)
    ratio = None
    for alpha, num in left.terms.items():
        quot = RationalFunction(num, right.terms[alpha])
        if not quot.is_constant:
            return None
        value = quot.constant_value()
        if ratio is None:
            ratio = value
        elif ratio != value:
            return None
    return ratio


# ---------------------------------------------------------------------------
# the single ordinary equation in the diagonal direction


@dataclass(frozen=True)
class OdeCoefficients:
    """Weight polynomials of the third-order equation on the diagonal line."""

    pool: Pool
    k1: MultiPoly
    k2: MultiPoly
    l1: MultiPoly
    l2: MultiPoly
    l3: MultiPoly
    m1: MultiPoly
    m2: MultiPoly

    _NAMES = ("k1", "k2", "l1", "l2", "l3", "m1", "m2")

    def evaluate(self, values: Mapping[str, Fraction | int]) -> dict[str, Fraction]:
        return {name: getattr(self, name).evaluate(values) for name in self._NAMES}


def ode_coefficients() -> OdeCoefficients:
    pool = Pool.weight(("a", "b", "c", "g"))
    a, b, c, g = (pool.var(s) for s in "abcg")
    one = pool.one()
    two = one * 2
    k1 = -(b * 3 + c * 3 + g)
    k2 = -(a * 3 + c * 3 + g)
    l1 = (b + c) * (one + b * 2 + c * 2 + g)
    l2 = (a + c) * (one + a * 2 + c * 2 + g)
    l3 = (
        (b + c) * (one + a * 2 + c * 2 + g)
        + (a + c) * (one + b * 2 + c * 2 + g)
        + (c - one) * (a + b + c)
        + (c * 3 + g) * (one + a + b + c + g)
    )
    swell = two + a * 2 + b * 2 + c * 2 + g
    m1 = -c * swell * (one + b * 2 + c * 2 + g)
    m2 = -c * swell * (one + a * 2 + c * 2 + g)
    return OdeCoefficients(pool, k1, k2, l1, l2, l3, m1, m2)


def companion_system(coeffs: Mapping[str, Fraction], z):
    """Companion matrix for the state (y, y', y'') at the point z.

    Works for exact Fractions and for complex floats alike; the matrix
    has poles at 0 and 1 so those points are rejected.
    """
    if z == 0 or z == 1:
        raise SingularPointError("companion matrix has a pole here", z=repr(z))
    k1, k2 = coeffs["k1"], coeffs["k2"]
    l1, l2, l3 = coeffs["l1"], coeffs["l2"], coeffs["l3"]
    m1, m2 = coeffs["m1"], coeffs["m2"]
    w = z - 1
    bottom = (
        -(m1 / (z * w * w)) - m2 / (z * z * w),
        -(l1 / (w * w)) - l2 / (z * z) - l3 / (z * w),
        -(k1 / w) - k2 / z,
    )
    return ((0, 1, 0), (0, 0, 1), bottom)


# ---------------------------------------------------------------------------
# shear gauge bringing the equation to first-order Fuchsian form

_IV_PREC = 240
_BRANCHES = ("principal", "secondary")


def _to_interval(q: Fraction):
    return mpmath.iv.mpf(q.numerator) / q.denominator


def _to_interval_c(q: Fraction):
    return mpmath.iv.mpc(_to_interval(q), 0)


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def _quadratic_roots(k2: Fraction, l2: Fraction):
    """Roots of z^2 + (k2-1)z + l2, exactly when possible.

    Returns (exact, (principal, secondary)): Fractions when the
    discriminant is a rational square, interval enclosures at 240 bits
    otherwise.  The principal root has the larger real part; a conjugate
    pair breaks the tie toward the larger imaginary part.
    """
    disc = (k2 - 1) ** 2 - 4 * l2
    root = _rational_sqrt(disc)
    if root is not None:
        hi = Fraction(1 - k2 + root, 2)
        lo = Fraction(1 - k2 - root, 2)
        return True, (hi, lo)
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = _IV_PREC
    try:
        mid = _to_interval(Fraction(1 - k2, 2))
        if disc > 0:
            half_gap = iv.sqrt(_to_interval(disc)) / 2
            hi = iv.mpc(mid + half_gap, 0)
            lo = iv.mpc(mid - half_gap, 0)
        else:
            half_gap = iv.sqrt(_to_interval(-disc)) / 2
            hi = iv.mpc(mid, half_gap)
            lo = iv.mpc(mid, -half_gap)
        return False, (hi, lo)
    finally:
        iv.prec = saved


def zeta_branches(values: Mapping[str, Fraction | int]):
    """Both admissible shear parameters for the given weights.

    For rational weights the discriminant is the square of
    1 + a + c + g, so this always lands on the exact arm; the interval
    arm of the solver exists for completeness and is reached only with
    coefficients that do not come from weights.
    """
    co = ode_coefficients().evaluate(values)
    return _quadratic_roots(co["k2"], co["l2"])


@dataclass(frozen=True)
class GaugeData:
    """Shear parameters and the two residue matrices of one branch."""

    branch: str
    exact: bool
    coefficients: Mapping[str, Fraction]
    zeta: object
    eta: object
    residue_zero: tuple
    residue_one: tuple

    def zeta_numeric(self) -> complex:
        return _midpoint(self.zeta)

    def eta_numeric(self) -> complex:
        return _midpoint(self.eta)

    def residues_numeric(self) -> tuple[list[list[complex]], list[list[complex]]]:
        conv = _midpoint
        return (
            [[conv(e) for e in row] for row in self.residue_zero],
            [[conv(e) for e in row] for row in self.residue_one],
        )

    def defining_residual_bounds(self) -> tuple[float, float]:
        """Upper bounds on |quadratic(zeta)| and |linear relation(eta)|.

        Exactly zero in the exact branch; in interval mode the bound is
        the top of the enclosure of the absolute value.
        """
        co = self.coefficients
        if self.exact:
            zres = self.zeta**2 + (co["k2"] - 1) * self.zeta + co["l2"]
            eres = co["m2"] + self.eta * (self.zeta + co["k2"] - 1)
            return float(abs(zres)), float(abs(eres))
        iv = mpmath.iv
        saved = iv.prec
        iv.prec = _IV_PREC
        try:
            k2 = _to_interval_c(co["k2"])
            l2 = _to_interval_c(co["l2"])
            m2 = _to_interval_c(co["m2"])
            one = _to_interval_c(Fraction(1))
            zres = self.zeta * self.zeta + (k2 - one) * self.zeta + l2
            eres = m2 + self.eta * (self.zeta + k2 - one)
            return float(abs(zres).b), float(abs(eres).b)
        finally:
            iv.prec = saved


def _midpoint(value) -> complex:
    if isinstance(value, (int, Fraction)):
        return complex(value)
    if isinstance(value, mpmath.iv.mpc):
        return complex(float(value.real.mid), float(value.imag.mid))
    return complex(value)


def gauge_pipeline(values: Mapping[str, Fraction | int], branch: str = "principal") -> GaugeData:
    """Resolve the shear parameters and assemble both residue matrices.

    The lower-triangular gauge needs eta = -M2/(zeta + K2 - 1); when that
    denominator vanishes the gauge degenerates and we refuse rather than
    guess (unless M2 also vanishes, in which case eta = 0 works).
    """
    if branch not in _BRANCHES:
        raise ValueError(f"unknown branch {branch!r}; pick one of {_BRANCHES}")
    co = ode_coefficients().evaluate(values)
    exact, roots = _quadratic_roots(co["k2"], co["l2"])
    return _assemble_gauge(co, exact, roots, branch)


def _assemble_gauge(co: Mapping[str, Fraction], exact: bool, roots, branch: str) -> GaugeData:
    zeta = roots[0 if branch == "principal" else 1]
    if exact:
        denom = zeta + co["k2"] - 1
        if denom == 0:
            if co["m2"] != 0:
                raise DegenerateGaugeError(
                    "shear denominator vanishes", branch=branch, zeta=str(zeta)
                )
            eta = Fraction(0)
        else:
            eta = -co["m2"] / denom
        conv = Fraction
    else:
        iv = mpmath.iv
        saved = iv.prec
        iv.prec = _IV_PREC
        try:
            denom = zeta + _to_interval_c(co["k2"] - 1)
            if 0 in denom.real and 0 in denom.imag:
                raise DegenerateGaugeError(
                    "shear denominator enclosure straddles zero", branch=branch
                )
            eta = -_to_interval_c(co["m2"]) / denom
        finally:
            iv.prec = saved
        conv = _to_interval_c
    a_mat, b_mat = _residue_matrices(co, zeta, eta, conv, exact)
    return GaugeData(
        branch=branch,
        exact=exact,
        coefficients=co,
        zeta=zeta,
        eta=eta,
        residue_zero=a_mat,
        residue_one=b_mat,
    )


def _residue_matrices(co, zeta, eta, conv, exact):
    iv = mpmath.iv
    saved = iv.prec
    if not exact:
        iv.prec = _IV_PREC
    try:
        k1 = conv(co["k1"])
        k2 = conv(co["k2"])
        l1 = conv(co["l1"])
        l2 = conv(co["l2"])
        l3 = conv(co["l3"])
        m1 = conv(co["m1"])
        m2 = conv(co["m2"])
        one = conv(1)
        two = conv(2)
        zero = conv(0)
        a_mat = (
            (zero, zero, zero),
            (eta, zeta, zero),
            (
                -m1 - m2 + (zeta + two - k1) * eta,
                -eta - l2 - l3 + zeta * zeta + (one - k1) * zeta,
                -zeta - k2,
            ),
        )
        b_mat = (
            (zero, one, zero),
            (-eta, one - zeta, one),
            (
                (k1 - zeta - two) * eta,
                eta - l1 - zeta * zeta - (one - k1) * zeta,
                two + zeta - k1,
            ),
        )
        return a_mat, b_mat
    finally:
        iv.prec = saved


def gauge_factors_symbolic():
    """The diagonal and shear gauge factors with symbolic entries.

    Entries live over the three symbols (eta, zeta, z); the determinant
    of their product is (z-1)^3 whatever the shear parameters are.
    """
    pool = Pool.base(("eta", "zeta", "z"))
    eta, zeta, z = pool.var("eta"), pool.var("zeta"), pool.var("z")
    one = pool.one()
    w = z - one
    diag = FieldMatrix.from_rows(
        [
            [one, pool.zero(), pool.zero()],
            [pool.zero(), w, pool.zero()],
            [pool.zero(), pool.zero(), w * w],
        ]
    )
    shear = FieldMatrix.from_rows(
        [
            [one, pool.zero(), pool.zero()],
            [pool.zero(), one, pool.zero()],
            [eta / z, zeta / z, one],
        ]
    )
    return diag, shear
