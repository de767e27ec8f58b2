"""Parametrized affine hyperplane arrangements and their fiber combinatorics.

A family is a list of affine forms in fiber variables (t_1..t_m) whose
coefficients are exact polynomials in base variables.  Instantiating at an
admissible base point gives a concrete rational arrangement whose circuit,
broken-circuit and nbc data drive everything downstream.

Dependence here is the affine notion: a set S of hyperplanes is dependent
when the common intersection is nonempty *and* its codimension is smaller
than |S|.  Sets with empty intersection are not circuits; they die inside
``os_straighten`` instead.
"""

from __future__ import annotations

import functools
import itertools
import json
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .errors import (
    NbcDimMismatchError,
    NonTerminationGuardError,
    SingularBasepointError,
    UnsupportedDimensionError,
)
from .exactmath import (
    BASE,
    WEIGHT,
    MultiPoly,
    Pool,
    RationalFunction,
    parse_poly,
)

_STRAIGHTEN_STEP_LIMIT = 200_000


@dataclass(frozen=True)
class AffineFormFamily:
    """One hyperplane of the family: constant(x) + sum_j coeff_j(x) * t_j."""

    label: str
    constant: MultiPoly
    coefficients: tuple[MultiPoly, ...]

    def instantiate(self, point: Mapping[str, Fraction]) -> "AffineForm":
        return AffineForm(
            self.label,
            self.constant.evaluate(point),
            tuple(c.evaluate(point) for c in self.coefficients),
        )

    def text(self, fiber_symbols: Sequence[str]) -> str:
        parts = [self.constant.text()] if not self.constant.is_zero else []
        for c, s in zip(self.coefficients, fiber_symbols):
            if c.is_zero:
                continue
            parts.append(f"({c.text()})*{s}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class AffineForm:
    label: str
    constant: Fraction
    coefficients: tuple[Fraction, ...]

    def value(self, t: Sequence[Fraction]) -> Fraction:
        return self.constant + sum(a * v for a, v in zip(self.coefficients, t))


@dataclass(frozen=True)
class ArrangementFamily:
    name: str
    base_pool: Pool
    weight_pool: Pool
    fiber_symbols: tuple[str, ...]
    hyperplanes: tuple[AffineFormFamily, ...]
    weights: tuple[MultiPoly, ...]
    declared_factors: tuple[MultiPoly, ...]
    basis_order: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.base_pool.tag != BASE or self.weight_pool.tag != WEIGHT:
            raise ValueError("pool tags must be BASE and WEIGHT")
        if len(self.weights) != len(self.hyperplanes):
            raise ValueError("one weight per hyperplane required")
        for i, p in enumerate(self.declared_factors):
            for q in self.declared_factors[i + 1 :]:
                if _proportional(p, q):
                    raise ValueError(
                        f"declared factors {p.text()} and {q.text()} are proportional"
                    )

    @property
    def fiber_dim(self) -> int:
        return len(self.fiber_symbols)

    @property
    def size(self) -> int:
        return len(self.hyperplanes)

    def labels(self) -> tuple[str, ...]:
        return tuple(h.label for h in self.hyperplanes)

    def specialize_weights(self, values: Mapping[str, Fraction]) -> "ArrangementFamily":
        """Freeze the weights to rational numbers (empty WEIGHT pool)."""
        cpool = Pool.weight(())
        consts = tuple(cpool.const(w.evaluate(values)) for w in self.weights)
        return replace(self, weight_pool=cpool, weights=consts)


def _proportional(p: MultiPoly, q: MultiPoly) -> bool:
    if p.is_zero or q.is_zero:
        return p.is_zero and q.is_zero
    ratio = None
    if set(p.terms) != set(q.terms):
        return False
    for exp, c in p.terms.items():
        r = c / q.terms[exp]
        if ratio is None:
            ratio = r
        elif r != ratio:
            return False
    return True


@dataclass(frozen=True)
class Fiber:
    """A concrete arrangement over Q^m obtained at an admissible base point."""

    base_point: tuple[tuple[str, Fraction], ...]
    forms: tuple[AffineForm, ...]
    weights: tuple[MultiPoly, ...]
    weight_pool: Pool
    fiber_dim: int

    @property
    def size(self) -> int:
        return len(self.forms)

    def point_map(self) -> dict[str, Fraction]:
        return dict(self.base_point)


def instantiate_fiber(fam: ArrangementFamily, point: Mapping[str, Fraction]) -> Fiber:
    pt = {s: Fraction(point[s]) for s in fam.base_pool.symbols}
    for f in fam.declared_factors:
        if f.evaluate(pt) == 0:
            raise SingularBasepointError(
                "base point lies on a declared singular factor",
                factor=f.text(),
                point={k: str(v) for k, v in pt.items()},
            )
    return Fiber(
        base_point=tuple(sorted(pt.items())),
        forms=tuple(h.instantiate(pt) for h in fam.hyperplanes),
        weights=fam.weights,
        weight_pool=fam.weight_pool,
        fiber_dim=fam.fiber_dim,
    )


def random_admissible_point(
    fam: ArrangementFamily, seed: int, max_height: int = 10_000
) -> dict[str, Fraction]:
    rng = random.Random(seed)
    bound = min(max_height, 60)
    while True:
        pt = {
            s: Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
            for s in fam.base_pool.symbols
        }
        if all(f.evaluate(pt) != 0 for f in fam.declared_factors):
            return pt


# ---------------------------------------------------------------------------
# matroid data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Matroid:
    ground_size: int
    rank: int
    circuits: tuple[tuple[int, ...], ...]

    def broken_circuits(self) -> tuple[tuple[int, ...], ...]:
        out = sorted({c[1:] for c in self.circuits})
        return tuple(out)


def _rank_and_consistent(fiber: Fiber, subset: Sequence[int]) -> tuple[int, bool]:
    """Rank of the coefficient rows and solvability of alpha_i = 0 over Q."""
    rows = [
        list(fiber.forms[i].coefficients) + [-fiber.forms[i].constant] for i in subset
    ]
    m = fiber.fiber_dim
    rank = 0
    aug_rank = 0
    work = [r[:] for r in rows]
    col = 0
    lead_rows = 0
    for col in range(m):
        piv = next((r for r in range(lead_rows, len(work)) if work[r][col] != 0), None)
        if piv is None:
            continue
        work[lead_rows], work[piv] = work[piv], work[lead_rows]
        lead = work[lead_rows][col]
        for r in range(len(work)):
            if r != lead_rows and work[r][col] != 0:
                f = work[r][col] / lead
                work[r] = [a - f * b for a, b in zip(work[r], work[lead_rows])]
        lead_rows += 1
    rank = lead_rows
    consistent = all(
        any(work[r][c] != 0 for c in range(m)) or work[r][m] == 0
        for r in range(len(work))
    )
    return rank, consistent


def subset_rank(fiber: Fiber, subset: Sequence[int]) -> tuple[int, bool]:
    return _rank_and_consistent(fiber, tuple(subset))


def _is_dependent(fiber: Fiber, subset: Sequence[int]) -> bool:
    rank, consistent = _rank_and_consistent(fiber, subset)
    return consistent and rank < len(subset)


def _is_independent(fiber: Fiber, subset: Sequence[int]) -> bool:
    rank, consistent = _rank_and_consistent(fiber, subset)
    return consistent and rank == len(subset)


is_dependent = _is_dependent
is_independent = _is_independent


def contains_intersection(fiber: Fiber, subset: Sequence[int], h: int) -> bool:
    """Whether hyperplane h contains the (nonempty) intersection of subset.

    For a consistent system the augmented rank equals the coefficient rank,
    so the intersection sits inside h exactly when appending h keeps the
    system consistent without raising the rank.
    """
    base_rank, consistent = _rank_and_consistent(fiber, subset)
    if not consistent:
        raise ValueError("subset has empty intersection")
    if h in subset:
        return True
    new_rank, new_consistent = _rank_and_consistent(fiber, tuple(subset) + (h,))
    return new_consistent and new_rank == base_rank


@lru_cache(maxsize=64)
def circuits(fiber: Fiber) -> Matroid:
    """Minimal dependent-with-nonempty-intersection sets."""
    n = fiber.size
    m = fiber.fiber_dim
    found: list[tuple[int, ...]] = []
    for size in range(2, m + 2):
        for subset in itertools.combinations(range(n), size):
            if any(set(c) <= set(subset) for c in found):
                continue
            if _is_dependent(fiber, subset):
                found.append(subset)
    rank = 0
    for size in range(m, 0, -1):
        if any(
            _is_independent(fiber, s)
            for s in itertools.combinations(range(n), size)
        ):
            rank = size
            break
    return Matroid(ground_size=n, rank=rank, circuits=tuple(sorted(found)))


def broken_circuits(fiber: Fiber) -> tuple[tuple[int, ...], ...]:
    return circuits(fiber).broken_circuits()


def _contains_broken(subset: tuple[int, ...], broken: Sequence[tuple[int, ...]]):
    sset = set(subset)
    for b in broken:
        if set(b) <= sset:
            return b
    return None


@lru_cache(maxsize=64)
def nbc_simplices(fiber: Fiber, degree: int) -> tuple[tuple[int, ...], ...]:
    """nbc tuples of the given size, lexicographically sorted."""
    broken = broken_circuits(fiber)
    out = []
    for subset in itertools.combinations(range(fiber.size), degree):
        rank, consistent = _rank_and_consistent(fiber, subset)
        if not consistent:
            continue
        if _contains_broken(subset, broken) is not None:
            continue
        # nbc implies independent for this dependence notion
        assert rank == len(subset), "nbc simplex must be independent"
        out.append(subset)
    if degree == fiber.fiber_dim and not out:
        raise NbcDimMismatchError(
            "no nbc simplex of top degree", degree=degree, fiber_dim=fiber.fiber_dim
        )
    return tuple(out)


@lru_cache(maxsize=64)
def beta_nbc(fiber: Fiber) -> tuple[tuple[int, ...], ...]:
    """Top nbc simplices S such that every H in S can be replaced by some
    smaller H' keeping a maximal independent set (nonempty intersection)."""
    m = fiber.fiber_dim
    out = []
    for simplex in nbc_simplices(fiber, m):
        ok = True
        for h in simplex:
            rest = tuple(i for i in simplex if i != h)
            if not any(
                h2 not in rest and _is_independent(fiber, tuple(sorted(rest + (h2,))))
                for h2 in range(h)
            ):
                ok = False
                break
        if ok:
            out.append(simplex)
    return tuple(out)


# ---------------------------------------------------------------------------
# Orlik-Solomon elements and straightening
# ---------------------------------------------------------------------------


class OSElement:
    """Formal sum of wedge monomials e_S with rational-function coefficients.

    Tuples may arrive unsorted or degenerate; ``os_straighten`` produces the
    canonical representative supported on nbc tuples.
    """

    __slots__ = ("pool", "terms")

    def __init__(self, pool: Pool, terms: Mapping[tuple[int, ...], RationalFunction]):
        self.pool = pool
        self.terms = {t: c for t, c in terms.items() if not c.is_zero}

    @staticmethod
    def zero(pool: Pool) -> "OSElement":
        return OSElement(pool, {})

    @staticmethod
    def generator(pool: Pool, index: int) -> "OSElement":
        return OSElement(pool, {(index,): RationalFunction.of(1, pool)})

    @staticmethod
    def monomial(pool: Pool, indices: Sequence[int], coeff=1) -> "OSElement":
        return OSElement(pool, {tuple(indices): _as_rf(coeff, pool)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        degs = {len(t) for t in self.terms}
        if len(degs) > 1:
            raise ValueError("mixed-degree element")
        return degs.pop() if degs else 0

    def __add__(self, other: "OSElement") -> "OSElement":
        out = dict(self.terms)
        for t, c in other.terms.items():
            s = out.get(t)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(t, None)
            else:
                out[t] = s
        return OSElement(self.pool, out)

    def __sub__(self, other: "OSElement") -> "OSElement":
        return self + other.scaled(-1)

    def scaled(self, coeff) -> "OSElement":
        c = _as_rf(coeff, self.pool)
        return OSElement(self.pool, {t: v * c for t, v in self.terms.items()})

    def wedge(self, other: "OSElement") -> "OSElement":
        out: dict[tuple[int, ...], RationalFunction] = {}
        for t1, c1 in self.terms.items():
            for t2, c2 in other.terms.items():
                key = t1 + t2
                if len(set(key)) != len(key):
                    continue
                c = c1 * c2
                s = out.get(key)
                s = c if s is None else s + c
                if s.is_zero:
                    out.pop(key, None)
                else:
                    out[key] = s
        return OSElement(self.pool, out)

    def __eq__(self, other):
        return (
            isinstance(other, OSElement)
            and self.pool == other.pool
            and self.terms == other.terms
        )

    def __repr__(self):
        if self.is_zero:
            return "OSElement(0)"
        bits = [f"({c.text()})*e{list(t)}" for t, c in sorted(self.terms.items())]
        return "OSElement(" + " + ".join(bits) + ")"


def _as_rf(coeff, pool: Pool) -> RationalFunction:
    if isinstance(coeff, RationalFunction):
        return coeff
    if isinstance(coeff, MultiPoly):
        return RationalFunction.of(coeff)
    return RationalFunction.of(coeff, pool)


def _sort_with_sign(t: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    # insertion sort, counting transpositions
    lst = list(t)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    return tuple(lst), sign


def os_straighten(element: OSElement, fiber: Fiber) -> OSElement:
    """Canonical form on the nbc basis.

    Kills tuples with repeats, with empty intersection, or dependent; rewrites
    broken circuits through the circuit boundary relations.  Rewriting always
    replaces an index by a strictly smaller one, so it terminates; a step
    counter guards against regressions all the same.
    """
    broken = broken_circuits(fiber)
    circuit_of = {c[1:]: c for c in circuits(fiber).circuits}
    out: dict[tuple[int, ...], RationalFunction] = {}
    work = list(element.terms.items())
    steps = 0
    while work:
        steps += 1
        if steps > _STRAIGHTEN_STEP_LIMIT:
            raise NonTerminationGuardError(
                "straightening exceeded the step limit", limit=_STRAIGHTEN_STEP_LIMIT
            )
        t, coeff = work.pop()
        if coeff.is_zero:
            continue
        if len(set(t)) != len(t):
            continue
        t_sorted, sign = _sort_with_sign(t)
        if sign < 0:
            coeff = -coeff
        if len(t_sorted) >= 1:
            rank, consistent = _rank_and_consistent(fiber, t_sorted)
            if not consistent:
                continue
            if rank < len(t_sorted):
                continue
        b = _contains_broken(t_sorted, broken)
        if b is None:
            s = out.get(t_sorted)
            s = coeff if s is None else s + coeff
            if s.is_zero:
                out.pop(t_sorted, None)
            else:
                out[t_sorted] = s
            continue
        circuit = circuit_of[b]
        rest = tuple(i for i in t_sorted if i not in b)
        # e_{t_sorted} = merge_sign * e_b ^ e_rest
        merged = b + rest
        _, merge_sign = _sort_with_sign(merged)
        # e_b = sum_{k>=2} (-1)^k e_{circuit minus its k-th element}
        for k in range(1, len(circuit)):
            sub = circuit[:k] + circuit[k + 1 :]
            sgn = 1 if (k + 1) % 2 == 0 else -1
            work.append((sub + rest, coeff * (sgn * merge_sign)))
    return OSElement(element.pool, out)


# ---------------------------------------------------------------------------
# bounded chambers (fiber dimension 2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chamber2D:
    """A bounded chamber: CCW vertex cycle with supporting line indices."""

    vertices: tuple[tuple[Fraction, Fraction], ...]
    edge_lines: tuple[int, ...]
    sign_vector: tuple[int, ...]
    interior_point: tuple[Fraction, Fraction]

    def area(self) -> Fraction:
        return _shoelace(self.vertices)

    def bounding_lines(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.edge_lines)))


def _shoelace(pts: Sequence[tuple[Fraction, Fraction]]) -> Fraction:
    acc = Fraction(0)
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return acc / 2


def _ccw_order(dirs: list[tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]]):
    """Order (neighbor, direction) pairs CCW from the positive x-axis."""

    def half(d):
        dx, dy = d
        return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1

    def compare(i1, i2):
        h1, h2 = half(i1[1]), half(i2[1])
        if h1 != h2:
            return -1 if h1 < h2 else 1
        c = i1[1][0] * i2[1][1] - i1[1][1] * i2[1][0]
        if c > 0:
            return -1
        if c < 0:
            return 1
        return 0

    return sorted(dirs, key=functools.cmp_to_key(compare))


def bounded_chambers(fiber: Fiber) -> tuple[Chamber2D, ...]:
    """All bounded chambers of a 2D fiber, ordered by sign vector.

    Faces are traced through the exact rotation system of the line
    arrangement; bounded faces are the cycles with positive shoelace area.
    """
    if fiber.fiber_dim != 2:
        raise UnsupportedDimensionError(
            "bounded chambers implemented for 2D fibers only", dim=fiber.fiber_dim
        )
    lines = [(f.constant, f.coefficients[0], f.coefficients[1]) for f in fiber.forms]
    # intersection points per line
    points: dict[tuple[Fraction, Fraction], int] = {}
    on_line: list[list[tuple[Fraction, Fraction]]] = [[] for _ in lines]
    for i, j in itertools.combinations(range(len(lines)), 2):
        ci, ai, bi = lines[i]
        cj, aj, bj = lines[j]
        det = ai * bj - aj * bi
        if det == 0:
            continue
        x = (-ci * bj + cj * bi) / det
        y = (-ai * cj + aj * ci) / det
        pt = (x, y)
        points.setdefault(pt, len(points))
        on_line[i].append(pt)
        on_line[j].append(pt)
    # half-edges between consecutive points along each line
    adjacency: dict[tuple[Fraction, Fraction], list] = {p: [] for p in points}
    segments = []
    for idx, pts in enumerate(on_line):
        if len(pts) < 2:
            continue
        uniq = sorted(set(pts))
        for a, b in zip(uniq, uniq[1:]):
            segments.append((a, b, idx))
    half_edges = {}
    for a, b, idx in segments:
        half_edges[(a, b)] = idx
        half_edges[(b, a)] = idx
        adjacency[a].append(b)
        adjacency[b].append(a)
    # rotation system: neighbors of each vertex ordered CCW
    rotation: dict[tuple[Fraction, Fraction], list[tuple[Fraction, Fraction]]] = {}
    for v, nbrs in adjacency.items():
        dirs = [(n, (n[0] - v[0], n[1] - v[1])) for n in nbrs]
        rotation[v] = [n for n, _ in _ccw_order(dirs)]
    # trace faces: next edge after (u -> v) leaves v one step clockwise from
    # the reversed edge, which walks each face with its interior on the left
    visited: set[tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]] = set()
    chambers = []
    for start in list(half_edges):
        if start in visited:
            continue
        cycle = []
        edge = start
        ok = True
        while True:
            visited.add(edge)
            cycle.append(edge)
            u, v = edge
            ring = rotation[v]
            k = ring.index(u)
            w = ring[(k - 1) % len(ring)]
            edge = (v, w)
            if edge == start:
                break
            if edge in visited:
                ok = False
                break
            if len(cycle) > len(half_edges):
                ok = False
                break
        if not ok:
            continue
        verts = tuple(e[0] for e in cycle)
        if len(verts) < 3 or _shoelace(verts) <= 0:
            continue
        chambers.append(_finish_chamber(verts, cycle, half_edges, fiber))
    chambers.sort(key=lambda c: c.sign_vector)
    return tuple(chambers)


def _finish_chamber(verts, cycle, half_edges, fiber: Fiber) -> Chamber2D:
    n = len(verts)
    # convexity check: bounded arrangement faces are convex
    for i in range(n):
        a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cr < 0:
            raise AssertionError("traced a non-convex bounded face")
    cx = sum(v[0] for v in verts) / n
    cy = sum(v[1] for v in verts) / n
    signs = []
    for f in fiber.forms:
        val = f.value((cx, cy))
        # no line may cross a bounded face, so the centroid is off every line
        assert val != 0, "line through the interior of a traced face"
        signs.append(1 if val > 0 else -1)
    # canonical starting vertex for determinism
    shift = min(range(n), key=lambda i: verts[i])
    verts_c = tuple(verts[(shift + i) % n] for i in range(n))
    edges_c = tuple(
        half_edges[(verts[(shift + i) % n], verts[(shift + i + 1) % n])]
        for i in range(n)
    )
    return Chamber2D(
        vertices=verts_c,
        edge_lines=edges_c,
        sign_vector=tuple(signs),
        interior_point=(cx, cy),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def family_to_dict(fam: ArrangementFamily) -> dict:
    return {
        "name": fam.name,
        "base_symbols": list(fam.base_pool.symbols),
        "weight_symbols": list(fam.weight_pool.symbols),
        "fiber_symbols": list(fam.fiber_symbols),
        "hyperplanes": [
            {
                "label": h.label,
                "constant": h.constant.text(),
                "coefficients": [c.text() for c in h.coefficients],
                "weight": w.text(),
            }
            for h, w in zip(fam.hyperplanes, fam.weights)
        ],
        "declared_singular_factors": [f.text() for f in fam.declared_factors],
        "order": list(range(len(fam.hyperplanes))),
        "basis_order": (
            [list(t) for t in fam.basis_order] if fam.basis_order else None
        ),
    }


def family_from_dict(data: dict) -> ArrangementFamily:
    base = Pool.base(tuple(data["base_symbols"]))
    weight = Pool.weight(tuple(data["weight_symbols"]))
    hyps = []
    weights = []
    for h in data["hyperplanes"]:
        hyps.append(
            AffineFormFamily(
                label=h["label"],
                constant=parse_poly(h["constant"], base),
                coefficients=tuple(parse_poly(c, base) for c in h["coefficients"]),
            )
        )
        weights.append(parse_poly(h["weight"], weight))
    return ArrangementFamily(
        name=data["name"],
        base_pool=base,
        weight_pool=weight,
        fiber_symbols=tuple(data["fiber_symbols"]),
        hyperplanes=tuple(hyps),
        weights=tuple(weights),
        declared_factors=tuple(
            parse_poly(f, base) for f in data["declared_singular_factors"]
        ),
        basis_order=(
            tuple(tuple(t) for t in data["basis_order"])
            if data.get("basis_order")
            else None
        ),
    )


def save_family(fam: ArrangementFamily, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(family_to_dict(fam), fh, indent=2)
        fh.write("\n")


def load_family(path: str) -> ArrangementFamily:
    with open(path) as fh:
        return family_from_dict(json.load(fh))
