"""Connection matrices for the weighted period pairing of a fiber family.

The pipeline: flag elements attached to the distinguished top simplices,
a covariant derivative acting through determinant ratios of the extended
coefficient matrix, and a reduction of arbitrary top-degree elements to the
distinguished basis modulo the image of the weighted boundary map.  The
output is one coefficient matrix per declared singular factor of the base.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .arrangement import (
    ArrangementFamily,
    Fiber,
    OSElement,
    beta_nbc,
    contains_intersection,
    family_from_dict,
    family_to_dict,
    instantiate_fiber,
    nbc_simplices,
    os_straighten,
    random_admissible_point,
)
from .errors import (
    InconsistentSystemError,
    NotBetaNbcError,
    NotFlatError,
    ResonantWeightsError,
)
from .exactmath import (
    FieldMatrix,
    MultiPoly,
    Pool,
    RationalFunction,
    divexact,
    factor_into_declared_linears,
    parse_rational,
    poly_gauss_jordan,
    poly_lcm,
)


def theta(fiber: Fiber, simplex: Sequence[int]) -> OSElement:
    """Flag element of a distinguished top simplex.

    The p-th wedge factor sums weight * generator over every hyperplane
    containing the intersection of the last m-p+1 members of the simplex.
    """
    return _theta(fiber, tuple(simplex))


@lru_cache(maxsize=256)
def _theta(fiber: Fiber, simplex: tuple[int, ...]) -> OSElement:
    if simplex not in beta_nbc(fiber):
        raise NotBetaNbcError(
            "flag elements are attached to distinguished simplices only",
            simplex=list(simplex),
        )
    pool = fiber.weight_pool
    result: OSElement | None = None
    for p in range(fiber.fiber_dim):
        flag = simplex[p:]
        summand = OSElement.zero(pool)
        for h in range(fiber.size):
            if contains_intersection(fiber, flag, h):
                summand = summand + OSElement.generator(pool, h).scaled(
                    fiber.weights[h]
                )
        result = summand if result is None else result.wedge(summand)
    assert result is not None
    return result


# ---------------------------------------------------------------------------
# determinants of the extended coefficient matrix
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def t_matrix(fam: ArrangementFamily) -> tuple[tuple[MultiPoly, ...], ...]:
    """Columns: one per hyperplane (constant; fiber coefficients), then the
    extra unit column selecting the constant row."""
    m = fam.fiber_dim
    base = fam.base_pool
    cols = []
    for h in fam.hyperplanes:
        cols.append((h.constant,) + tuple(h.coefficients))
    cols.append((base.one(),) + tuple(base.zero() for _ in range(m)))
    return tuple(zip(*cols))


def _poly_det(rows: list[list[MultiPoly]]) -> MultiPoly:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = None
    for j in range(n):
        if rows[0][j].is_zero:
            continue
        minor = [[rows[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = rows[0][j] * _poly_det(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    if acc is None:
        pool = rows[0][0].pool
        return pool.zero()
    return acc


@lru_cache(maxsize=None)
def delta(fam: ArrangementFamily, columns: tuple[int, ...]) -> MultiPoly:
    """Determinant of the selected columns; index ``fam.size`` is the extra
    unit column.  The column order carries the orientation sign."""
    rows = t_matrix(fam)
    if len(columns) != len(rows):
        raise ValueError("need fiber_dim + 1 columns")
    return _poly_det([[row[c] for c in columns] for row in rows])


def ext_column(fam: ArrangementFamily) -> int:
    return fam.size


@lru_cache(maxsize=None)
def _dlog_multiplicities(fam: ArrangementFamily, poly: MultiPoly) -> dict[int, int]:
    """Multiplicity of each declared factor in poly; constants drop out."""
    if poly.is_zero or poly.is_constant:
        return {}
    dec = factor_into_declared_linears(poly, fam.declared_factors)
    return dec.as_dict()


# ---------------------------------------------------------------------------
# covariant derivative
# ---------------------------------------------------------------------------


def nabla_prime(
    fam: ArrangementFamily, fiber: Fiber, simplex: tuple[int, ...]
) -> dict[int, OSElement]:
    """Covariant derivative of the log form of an independent top simplex.

    Returns the coefficient element per declared factor index.  Appending a
    hyperplane j to the simplex and deleting the k-th member contributes
    (-1)^m (-1)^(k+1) lambda_j (dlog D_U - dlog D_(U_k, ext)) tensor the
    deleted-tuple form, where D denotes the column determinants.  dlog of a
    constant or identically zero determinant contributes nothing; a zero
    deleted-tuple determinant means that form dies and the term is skipped.
    """
    m = fiber.fiber_dim
    if len(simplex) != m:
        raise ValueError("covariant derivative acts on top simplices")
    pool = fiber.weight_pool
    ext = fam.size
    sign_m = (-1) ** m
    out: dict[int, OSElement] = {}
    for j in range(fam.size):
        if j in simplex:
            continue
        u = simplex + (j,)
        lam = RationalFunction.of(fam.weights[j])
        mult_u = _dlog_multiplicities(fam, delta(fam, u))
        for k in range(m + 1):
            uk = u[:k] + u[k + 1 :]
            d_uk = delta(fam, uk + (ext,))
            if d_uk.is_zero:
                assert os_straighten(
                    OSElement.monomial(pool, uk), fiber
                ).is_zero, "degenerate deleted tuple must vanish"
                continue
            mult_uk = _dlog_multiplicities(fam, d_uk)
            sgn = sign_m * (-1) ** k
            for f in set(mult_u) | set(mult_uk):
                d = mult_u.get(f, 0) - mult_uk.get(f, 0)
                if d == 0:
                    continue
                term = OSElement.monomial(pool, uk, lam * Fraction(sgn * d))
                acc = out.get(f)
                out[f] = term if acc is None else acc + term
    return {f: e for f, e in out.items() if not e.is_zero}


# ---------------------------------------------------------------------------
# reduction to the distinguished basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ReductionEngine:
    nbc_index: Mapping[tuple[int, ...], int]
    transform: tuple[tuple[MultiPoly, ...], ...]
    pivots: tuple[tuple[int, int], ...]
    denom: MultiPoly
    n_image_cols: int
    basis_size: int

    def coordinates(self, element: OSElement) -> tuple[RationalFunction, ...]:
        pool = element.pool
        n = len(self.nbc_index)
        if element.is_zero:
            return tuple(RationalFunction.of(0, pool) for _ in range(self.basis_size))
        vec = [pool.zero() for _ in range(n)]
        scale = pool.one()
        # clear coefficient denominators with one common scale
        for coeff in element.terms.values():
            if coeff.den != pool.one():
                scale = poly_lcm(scale, coeff.den)
        for t, coeff in element.terms.items():
            if t not in self.nbc_index:
                raise ValueError(f"element not straightened: tuple {t}")
            q = divexact(scale, coeff.den)
            assert q is not None
            vec[self.nbc_index[t]] = coeff.num * q
        w = [
            sum((trow[i] * vec[i] for i in range(n) if not vec[i].is_zero), pool.zero())
            for trow in self.transform
        ]
        pivot_rows = {r: c for r, c in self.pivots}
        for r in range(n):
            if r not in pivot_rows and not w[r].is_zero:
                raise InconsistentSystemError(
                    "element does not reduce to the basis", row=r
                )
        coords = [RationalFunction.of(0, pool) for _ in range(self.basis_size)]
        den = self.denom * scale
        for r, c in self.pivots:
            if c >= self.n_image_cols:
                coords[c - self.n_image_cols] = RationalFunction(w[r], den)
        return tuple(coords)


@lru_cache(maxsize=16)
def _reduction_engine(
    fiber: Fiber, basis: tuple[tuple[int, ...], ...]
) -> _ReductionEngine:
    pool = fiber.weight_pool
    m = fiber.fiber_dim
    nbc = nbc_simplices(fiber, m)
    index = {t: i for i, t in enumerate(nbc)}
    a_lambda = OSElement.zero(pool)
    for h in range(fiber.size):
        a_lambda = a_lambda + OSElement.generator(pool, h).scaled(fiber.weights[h])
    columns: list[list[MultiPoly]] = []
    # image columns first so the one expected free column lands among them
    for t in nbc_simplices(fiber, m - 1):
        elt = os_straighten(a_lambda.wedge(OSElement.monomial(pool, t)), fiber)
        columns.append(_poly_column(elt, index, pool))
    n_image = len(columns)
    for simplex in basis:
        elt = os_straighten(theta(fiber, simplex), fiber)
        columns.append(_poly_column(elt, index, pool))
    rows = [[col[i] for col in columns] for i in range(len(nbc))]
    work, trans, pivots, denom = poly_gauss_jordan(rows, pool, with_transform=True)
    if len(pivots) != len(nbc):
        raise ResonantWeightsError(
            "top degree not spanned at these weights",
            rank=len(pivots),
            expected=len(nbc),
        )
    free = [c for c in range(len(columns)) if c not in {c for _, c in pivots}]
    if any(c >= n_image for c in free):
        raise ResonantWeightsError(
            "distinguished flag elements are dependent modulo the image",
            free_columns=free,
        )
    # solution columns live in work; keep the transform for repeated use
    for r, c in pivots:
        assert work[r][c] == denom
    return _ReductionEngine(
        nbc_index=index,
        transform=tuple(tuple(r) for r in trans),
        pivots=tuple(pivots),
        denom=denom,
        n_image_cols=n_image,
        basis_size=len(basis),
    )


def reduce_to_basis(
    fiber: Fiber,
    element: OSElement,
    basis: tuple[tuple[int, ...], ...],
) -> tuple[RationalFunction, ...]:
    """Coordinates of a top-degree element in the distinguished basis, modulo
    the image of the weighted boundary map.  The element is straightened
    first, so arbitrary wedge monomials are accepted."""
    engine = _reduction_engine(fiber, tuple(basis))
    return engine.coordinates(os_straighten(element, fiber))


def _poly_column(elt: OSElement, index, pool: Pool) -> list[MultiPoly]:
    col = [pool.zero() for _ in range(len(index))]
    for t, coeff in elt.terms.items():
        assert coeff.den.is_constant, "flag coefficients stay polynomial"
        col[index[t]] = coeff.num.scaled(1 / coeff.den.constant_value())
    return col


# ---------------------------------------------------------------------------
# the connection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionForm:
    """One coefficient matrix per declared factor: d f = sum_k A_k dlog L_k f
    where f collects the pairings against the distinguished basis."""

    family: ArrangementFamily
    basis: tuple[tuple[int, ...], ...]
    matrices: tuple[tuple[tuple[RationalFunction, ...], ...], ...]

    @property
    def size(self) -> int:
        return len(self.basis)

    def factor_polys(self) -> tuple[MultiPoly, ...]:
        return self.family.declared_factors

    def field_matrix(self, k: int) -> FieldMatrix:
        return FieldMatrix(self.matrices[k])

    def evaluate_weights(self, values: Mapping[str, Fraction]):
        """Numeric matrices (nested lists of Fraction) at given weights."""
        out = []
        for mat in self.matrices:
            out.append([[e.evaluate(values) for e in row] for row in mat])
        return out


def connection_matrix(
    fam: ArrangementFamily,
    point: Mapping[str, Fraction] | None = None,
    seed: int = 7,
) -> ConnectionForm:
    """Connection of the family in its distinguished basis.

    The combinatorial scaffolding is computed at one admissible base point;
    every matrix entry is a pure weight function, so the choice of point
    cannot leak into the result.
    """
    if point is None:
        point = random_admissible_point(fam, seed=seed)
    fiber = instantiate_fiber(fam, point)
    basis = fam.basis_order or beta_nbc(fiber)
    # building the engine up front validates that the flag elements span
    # the quotient at these weights
    _reduction_engine(fiber, tuple(basis))
    pool = fam.weight_pool
    zero_rf = RationalFunction.of(0, pool)
    mats = [
        [[zero_rf for _ in basis] for _ in basis] for _ in fam.declared_factors
    ]
    for i, simplex in enumerate(basis):
        rep = os_straighten(theta(fiber, simplex), fiber)
        per_factor: dict[int, OSElement] = {}
        for t, coeff in rep.terms.items():
            for f, elt in nabla_prime(fam, fiber, t).items():
                scaled = elt.scaled(coeff)
                acc = per_factor.get(f)
                per_factor[f] = scaled if acc is None else acc + scaled
        for f, elt in per_factor.items():
            row = reduce_to_basis(fiber, elt, tuple(basis))
            for j, entry in enumerate(row):
                mats[f][i][j] = entry
    return ConnectionForm(
        family=fam,
        basis=tuple(tuple(s) for s in basis),
        matrices=tuple(tuple(tuple(r) for r in mat) for mat in mats),
    )


# ---------------------------------------------------------------------------
# flatness
# ---------------------------------------------------------------------------


def _affine_parts(fam: ArrangementFamily):
    """Declared factors as (constant, gradient) pairs; they are affine."""
    base = fam.base_pool
    syms = base.symbols
    out = []
    for f in fam.declared_factors:
        grads = tuple(f.diff(s) for s in syms)
        if any(not g.is_constant for g in grads):
            raise ValueError("declared factors must be affine for flatness checks")
        const = f.evaluate({s: Fraction(0) for s in syms})
        out.append((const, tuple(g.constant_value() for g in grads)))
    return out


def _codim2_strata(fam: ArrangementFamily) -> list[tuple[int, ...]]:
    """Groups of declared factors meeting along a common codimension-2 set."""
    parts = _affine_parts(fam)
    n = len(fam.base_pool.symbols)
    if n < 2:
        return []
    strata: dict[tuple, tuple[int, ...]] = {}
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            sol = _solve_two(parts[i], parts[j], n)
            if sol is None:
                continue
            group = tuple(
                k
                for k, (c, grad) in enumerate(parts)
                if _vanishes_on(c, grad, sol)
            )
            strata[sol] = group
    return sorted(set(strata.values()))


def _solve_two(p1, p2, n):
    """Intersection data of two affine hyperplanes in the base, as a canonical
    hashable description (particular point plus kernel basis), or None."""
    c1, g1 = p1
    c2, g2 = p2
    rows = [list(g1) + [-c1], list(g2) + [-c2]]
    lead = 0
    piv_cols = []
    for col in range(n):
        piv = next((r for r in range(lead, 2) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[lead], rows[piv] = rows[piv], rows[lead]
        rows[lead] = [v / rows[lead][col] for v in rows[lead]]
        for r in range(2):
            if r != lead and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[lead])]
        piv_cols.append(col)
        lead += 1
        if lead == 2:
            break
    if lead < 2:
        # parallel or identical: no transverse codim-2 stratum
        return None
    point = [Fraction(0)] * n
    for r, c in enumerate(piv_cols):
        point[c] = rows[r][n]
    kernel = []
    for free in range(n):
        if free in piv_cols:
            continue
        v = [Fraction(0)] * n
        v[free] = Fraction(1)
        for r, c in enumerate(piv_cols):
            v[c] = -rows[r][free]
        kernel.append(tuple(v))
    return (tuple(point), tuple(kernel))


def _vanishes_on(const: Fraction, grad, sol) -> bool:
    point, kernel = sol
    if const + sum(g * x for g, x in zip(grad, point)) != 0:
        return False
    return all(sum(g * v for g, v in zip(grad, vec)) == 0 for vec in kernel)


def flatness_check(
    conn: ConnectionForm, seeds: Sequence[int] = (101, 102, 103, 104, 105)
) -> dict:
    """Exact integrability check of the connection form.

    The curvature two-form coefficient is evaluated at seeded rational base
    points through the exact log-gradients of the declared factors; every
    commutator combination must vanish identically in the weights.  A
    structural pass additionally checks that around each codimension-2
    stratum the residue sum commutes with each member.
    """
    fam = conn.family
    syms = fam.base_pool.symbols
    mats = [conn.field_matrix(k) for k in range(len(fam.declared_factors))]
    pairs = [
        (k, l) for k in range(len(mats)) for l in range(k + 1, len(mats))
    ]
    commutators = {(k, l): mats[k] * mats[l] - mats[l] * mats[k] for k, l in pairs}
    points = []
    for s in seeds:
        pt = random_admissible_point(fam, seed=s)
        points.append(pt)
        grads = []
        for f in fam.declared_factors:
            val = f.evaluate(pt)
            grads.append([f.diff(sym).evaluate(pt) / val for sym in syms])
        for i in range(len(syms)):
            for j in range(i + 1, len(syms)):
                total: FieldMatrix | None = None
                for k, l in pairs:
                    coeff = grads[k][i] * grads[l][j] - grads[k][j] * grads[l][i]
                    if coeff == 0:
                        continue
                    term = commutators[(k, l)] * RationalFunction.of(
                        coeff, fam.weight_pool
                    )
                    total = term if total is None else total + term
                if total is None:
                    continue
                bad = _first_nonzero(total)
                if bad is not None:
                    raise NotFlatError(
                        "curvature does not vanish",
                        point={k: str(v) for k, v in pt.items()},
                        base_pair=(syms[i], syms[j]),
                        entry=bad,
                    )
    strata = _codim2_strata(fam)
    for group in strata:
        total = None
        for k in group:
            total = mats[k] if total is None else total + mats[k]
        for k in group:
            comm = mats[k] * total - total * mats[k]
            bad = _first_nonzero(comm)
            if bad is not None:
                raise NotFlatError(
                    "residue sum fails to commute around a stratum",
                    stratum=[fam.declared_factors[k].text() for k in group],
                    entry=bad,
                )
    return {
        "points": [{k: str(v) for k, v in pt.items()} for pt in points],
        "base_pairs_checked": len(syms) * (len(syms) - 1) // 2,
        "strata_checked": [
            [fam.declared_factors[k].text() for k in group] for group in strata
        ],
        "flat": True,
    }


def _first_nonzero(mat: FieldMatrix):
    n, m = mat.shape
    for i in range(n):
        for j in range(m):
            if not mat[i, j].is_zero:
                return {"row": i, "col": j, "value": mat[i, j].text()}
    return None


# ---------------------------------------------------------------------------
# integrand data and serialization
# ---------------------------------------------------------------------------


def basis_integrand_terms(
    fam: ArrangementFamily,
    fiber: Fiber,
    basis: tuple[tuple[int, ...], ...] | None = None,
):
    """Per basis element: ((coeff, simplex, determinant), ...) where the log
    form of the simplex integrates as determinant / product of member forms."""
    if basis is None:
        basis = fam.basis_order or beta_nbc(fiber)
    ext = ext_column(fam)
    out = []
    for simplex in basis:
        elt = os_straighten(theta(fiber, simplex), fiber)
        terms = []
        for t, coeff in sorted(elt.terms.items()):
            terms.append((coeff, t, delta(fam, t + (ext,))))
        out.append(tuple(terms))
    return tuple(out)


def connection_to_dict(conn: ConnectionForm) -> dict:
    return {
        "family": family_to_dict(conn.family),
        "basis": [list(t) for t in conn.basis],
        "factors": [f.text() for f in conn.family.declared_factors],
        "matrices": [
            [[e.text() for e in row] for row in mat] for mat in conn.matrices
        ],
    }


def connection_from_dict(data: dict) -> ConnectionForm:
    fam = family_from_dict(data["family"])
    pool = fam.weight_pool
    mats = tuple(
        tuple(tuple(parse_rational(e, pool) for e in row) for row in mat)
        for mat in data["matrices"]
    )
    basis = tuple(tuple(t) for t in data["basis"])
    conn = ConnectionForm(family=fam, basis=basis, matrices=mats)
    factors = [f.text() for f in fam.declared_factors]
    if data.get("factors") != factors:
        raise ValueError("factor list does not match the family")
    if len(mats) != len(factors) or any(
        len(mat) != len(basis) or any(len(row) != len(basis) for row in mat)
        for mat in mats
    ):
        raise ValueError("matrix shapes do not match the basis")
    return conn


def save_connection(conn: ConnectionForm, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(connection_to_dict(conn), fh, indent=2)
        fh.write("\n")


def load_connection(path: str) -> ConnectionForm:
    with open(path) as fh:
        return connection_from_dict(json.load(fh))
