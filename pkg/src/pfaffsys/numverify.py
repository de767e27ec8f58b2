"""Floating-point verification layer.

Everything upstream is exact; this module is where numbers happen.  It
builds solution vectors by quadrature over bounded chambers, checks the
connection against central finite differences, transports vectors along
paths in the base, and measures residuals for the scalar third-order
equation and the generated second-order system.

Conventions.  A solution vector collects the pairings of the integrand
with the distinguished basis over one bounded chamber; the integrand
uses absolute values of the linear forms, so each chamber gives a real
vector and every chamber vector solves the same system d'f = Omega f.
Chambers are identified across nearby base points by their sign
vectors, which a small step never changes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .arrangement import (
    ArrangementFamily,
    Chamber2D,
    Fiber,
    bounded_chambers,
    instantiate_fiber,
)
from .dfmodels import (
    GaugeData,
    PdeOperator,
    build_j2,
    companion_system,
    operator_ratio,
    pde_operators,
    reference_pde_system_n2,
)
from .errors import (
    PathHitsSingularityError,
    SingularBasepointError,
    ToleranceNotMetError,
)
from .gaussmanin import ConnectionForm, basis_integrand_terms
from .quadrature import chamber_pair_integrals, chamber_weighted_volume


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ResidualReport:
    """One verification run: what was asked, what was used, what came out."""

    kind: str
    inputs: dict
    results: dict
    max_rel_residual: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "inputs": _jsonable(self.inputs),
            "results": _jsonable(self.results),
            "max_rel_residual": self.max_rel_residual,
        }

    def to_json(self, path: str | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


# ---------------------------------------------------------------------------
# solution vectors by quadrature


@dataclass(frozen=True)
class IntegrandPlan:
    """Basis integrands flattened to quadrature work items.

    pairs lists the distinct form pairs that need integrating; per basis
    element, terms hold (rational coefficient, numerator polynomial in
    the base variables, index into pairs).
    """

    family: ArrangementFamily
    exponents: tuple[Fraction, ...]
    pairs: tuple[tuple[int, int], ...]
    terms: tuple[tuple[tuple[Fraction, object, int], ...], ...]


def integrand_plan(
    fam: ArrangementFamily, fiber: Fiber, params: Mapping[str, Fraction]
) -> IntegrandPlan:
    exps = tuple(w.evaluate(params) for w in fam.weights)
    raw = basis_integrand_terms(fam, fiber)
    pair_index: dict[tuple[int, int], int] = {}
    compiled = []
    for element in raw:
        flat = []
        for coeff, simplex, det in element:
            key = tuple(simplex)
            if key not in pair_index:
                pair_index[key] = len(pair_index)
            flat.append((coeff.evaluate(params), det, pair_index[key]))
        compiled.append(tuple(flat))
    pairs = tuple(sorted(pair_index, key=pair_index.get))
    return IntegrandPlan(fam, exps, pairs, tuple(compiled))


def solution_vector(
    plan: IntegrandPlan,
    fiber: Fiber,
    chamber: Chamber2D,
    point: Mapping[str, Fraction],
    tol: float = 1e-9,
    use_compiled=None,
):
    """Pairings of the weighted integrand with every basis element.

    Returns (values, error_estimates) as float arrays of basis length.
    """
    raw, raw_err = chamber_pair_integrals(
        chamber, fiber.forms, plan.exponents, plan.pairs,
        tol=tol, use_compiled=use_compiled,
    )
    sign = chamber.sign_vector
    values = np.zeros(len(plan.terms))
    errors = np.zeros(len(plan.terms))
    for i, flat in enumerate(plan.terms):
        for coeff, det, k in flat:
            p, q = plan.pairs[k]
            factor = float(coeff * det.evaluate(point)) * sign[p] * sign[q]
            values[i] += factor * raw[k]
            errors[i] += abs(factor) * raw_err[k]
    return values, errors


def solution_matrix(
    fam: ArrangementFamily,
    params: Mapping[str, Fraction],
    point: Mapping[str, Fraction],
    tol: float = 1e-9,
    use_compiled=None,
    plan: IntegrandPlan | None = None,
):
    """One solution column per bounded chamber, rows in the basis order.

    Columns are sorted by chamber sign vector so the layout is stable.
    Returns (matrix, error_matrix, chambers).
    """
    fiber = instantiate_fiber(fam, point)
    if plan is None:
        plan = integrand_plan(fam, fiber, params)
    chambers = sorted(bounded_chambers(fiber), key=lambda c: c.sign_vector)
    cols = []
    errs = []
    for ch in chambers:
        v, e = solution_vector(plan, fiber, ch, point, tol, use_compiled)
        cols.append(v)
        errs.append(e)
    return np.array(cols).T, np.array(errs).T, tuple(chambers)


def numerical_rank(matrix, threshold: float = 1e-6) -> int:
    """Singular values above threshold * largest."""
    svals = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > threshold * svals[0]))


def integrate_chamber(
    fam: ArrangementFamily,
    params: Mapping[str, Fraction],
    point: Mapping[str, Fraction],
    chamber_index: int,
    basis_index: int,
    tol: float = 1e-9,
    use_compiled=None,
):
    """Single entry of the solution matrix, with its error estimate."""
    fiber = instantiate_fiber(fam, point)
    plan = integrand_plan(fam, fiber, params)
    chambers = sorted(bounded_chambers(fiber), key=lambda c: c.sign_vector)
    values, errors = solution_vector(
        plan, fiber, chambers[chamber_index], point, tol, use_compiled
    )
    return float(values[basis_index]), float(errors[basis_index])


# ---------------------------------------------------------------------------
# connection vs finite differences


def direction_matrices(
    conn: ConnectionForm,
    params: Mapping[str, Fraction],
    point: Mapping[str, Fraction],
) -> dict[str, np.ndarray]:
    """The coefficient of dx_i in Omega at one base point, per symbol.

    Assembled exactly in rationals before converting to floats.
    """
    mats = conn.evaluate_weights(params)
    syms = conn.family.base_pool.symbols
    m = conn.size
    out = {}
    for s in syms:
        acc = [[Fraction(0)] * m for _ in range(m)]
        for k, poly in enumerate(conn.factor_polys()):
            ratio = poly.diff(s).evaluate(point) / poly.evaluate(point)
            if ratio == 0:
                continue
            for i in range(m):
                for j in range(m):
                    acc[i][j] += mats[k][i][j] * ratio
        out[s] = np.array([[float(e) for e in row] for row in acc])
    return out


def _matched_matrix(fam, params, point, tol, use_compiled, plan, order):
    """Solution matrix with columns arranged to match ``order`` sign vectors."""
    mat, err, chambers = solution_matrix(
        fam, params, point, tol, use_compiled, plan=plan
    )
    have = {c.sign_vector: k for k, c in enumerate(chambers)}
    try:
        perm = [have[sv] for sv in order]
    except KeyError as missing:
        raise SingularBasepointError(
            "chamber lost between stencil points; reduce h", sign_vector=missing.args
        )
    return mat[:, perm], err[:, perm]


def pfaffian_residual(
    conn: ConnectionForm,
    params: Mapping[str, Fraction],
    point: Mapping[str, Fraction],
    h: Fraction = Fraction(1, 1000),
    tol: float = 1e-9,
    use_compiled=None,
    richardson: bool = True,
) -> ResidualReport:
    """Central finite differences of the chamber solutions vs the system.

    For every base direction i the residual matrix is
    (F(x + h e_i) - F(x - h e_i)) / 2h - M_i F(x) over all chambers at
    once; the relative size uses the larger of the two compared terms.
    The quadrature tolerance is tightened to h^2 * 1e-3 * |F| when the
    requested one is too loose for the difference to be meaningful, and
    the effective value is echoed in the report.  With richardson=True
    the whole computation repeats at h/2 and the per-direction residual
    ratios are reported (an O(h^2) scheme should sit near 4).
    """
    fam = conn.family
    h = Fraction(h)
    syms = fam.base_pool.symbols
    fiber = instantiate_fiber(fam, point)
    plan = integrand_plan(fam, fiber, params)

    base_mat, base_err, chambers = solution_matrix(
        fam, params, point, tol, use_compiled, plan=plan
    )
    fnorm = float(np.max(np.abs(base_mat)))
    bound = float(h * h) * 1e-3 * fnorm
    eff_tol = min(tol, bound)
    if eff_tol < tol:
        base_mat, base_err, chambers = solution_matrix(
            fam, params, point, eff_tol, use_compiled, plan=plan
        )
    order = tuple(c.sign_vector for c in chambers)
    mdir = direction_matrices(conn, params, point)

    def residuals(step: Fraction):
        rels = {}
        norms = {}
        for s in syms:
            shifted = []
            for delta in (step, -step):
                pt = dict(point)
                pt[s] = pt[s] + delta
                mat, _ = _matched_matrix(
                    fam, params, pt, eff_tol, use_compiled, plan, order
                )
                shifted.append(mat)
            fd = (shifted[0] - shifted[1]) / (2.0 * float(step))
            model = mdir[s] @ base_mat
            resid = fd - model
            scale = max(np.max(np.abs(fd)), np.max(np.abs(model)), 1e-300)
            rels[s] = float(np.max(np.abs(resid)) / scale)
            norms[s] = float(np.linalg.norm(resid))
        return rels, norms

    rels_h, norms_h = residuals(h)
    results = {
        "per_direction": rels_h,
        "chambers": len(chambers),
        "solution_norm": fnorm,
        "tol_effective": eff_tol,
    }
    if richardson:
        rels_half, norms_half = residuals(h / 2)
        ratios = {
            s: (norms_h[s] / norms_half[s] if norms_half[s] > 0 else float("inf"))
            for s in syms
        }
        results["per_direction_half_h"] = rels_half
        results["richardson_ratio"] = ratios
    return ResidualReport(
        kind="pfaffian",
        inputs={
            "model": fam.name,
            "params": dict(params),
            "point": dict(point),
            "h": h,
            "tol": tol,
        },
        results=results,
        max_rel_residual=max(rels_h.values()),
    )


# ---------------------------------------------------------------------------
# transport along base paths


def _segment_log_data(conn, params, start, direction):
    """Per declared factor: (value at start, derivative along the segment)."""
    syms = conn.family.base_pool.symbols
    data = []
    for poly in conn.factor_polys():
        c0 = complex(poly.evaluate_numeric({s: start[i] for i, s in enumerate(syms)}))
        c1 = complex(0)
        for i, s in enumerate(syms):
            grad = poly.diff(s)
            if not grad.is_constant:
                raise ValueError("transport needs affine declared factors")
            c1 += complex(grad.constant_value()) * direction[i]
        data.append((c0, c1))
    return data


def _check_segment(data, label: str):
    for c0, c1 in data:
        if c1 == 0:
            if c0 == 0:
                raise PathHitsSingularityError(
                    "segment lies inside a singular locus", segment=label
                )
            continue
        root = -c0 / c1
        if abs(root.imag) <= 1e-12 and -1e-12 <= root.real <= 1 + 1e-12:
            raise PathHitsSingularityError(
                "segment crosses a singular locus", segment=label, s=root.real
            )


def transport(
    conn: ConnectionForm,
    params: Mapping[str, Fraction],
    f0: Sequence[complex],
    path: Sequence[Sequence[complex]],
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Integrate d f = Omega f along a polyline in the (complexified) base.

    Each waypoint lists coordinates in the base symbol order.  Raises
    when a segment meets the zero set of any declared factor.
    """
    m = conn.size
    mats = conn.evaluate_weights(params)
    a_stack = np.array(
        [[[float(e) for e in row] for row in mat] for mat in mats]
    ).astype(complex)
    y = np.asarray(f0, dtype=complex)
    if y.shape != (m,):
        raise ValueError("initial vector has the wrong length")
    pts = [np.asarray([complex(c) for c in p]) for p in path]
    for leg, (p, q) in enumerate(zip(pts, pts[1:])):
        d = q - p
        if not np.any(d != 0):
            continue
        data = _segment_log_data(conn, params, p, d)
        _check_segment(data, f"{leg}")
        c0 = np.array([v[0] for v in data])
        c1 = np.array([v[1] for v in data])

        def rhs(s, stacked):
            vec = stacked[:m] + 1j * stacked[m:]
            coef = c1 / (c0 + s * c1)
            mat = np.tensordot(coef, a_stack, axes=1)
            dv = mat @ vec
            return np.concatenate([dv.real, dv.imag])

        sol = solve_ivp(
            rhs,
            (0.0, 1.0),
            np.concatenate([y.real, y.imag]),
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise ToleranceNotMetError("transport step control failed", leg=leg)
        y = sol.y[:m, -1] + 1j * sol.y[m:, -1]
    return y


# ---------------------------------------------------------------------------
# scalar third-order equation vs its first-order form


def _gauge_matrix(gauge: GaugeData, z: complex) -> np.ndarray:
    zeta = gauge.zeta_numeric()
    eta = gauge.eta_numeric()
    w = z - 1.0
    return np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, w, 0.0],
            [eta / z, zeta * w / z, w * w],
        ],
        dtype=complex,
    )


def gauge_transport_residual(
    gauge: GaugeData,
    path: Sequence[complex] = (0.5, 0.5 + 0.3j),
    v0: Sequence[complex] = (1.0, 0.3, -0.2),
    rtol: float = 1e-12,
    atol: float = 1e-14,
    samples: int = 65,
) -> ResidualReport:
    """Transport the scalar equation and its first-order form side by side.

    The companion system for (y, y', y'') and the two-residue system for
    f are integrated together along the path; at sample points the gauge
    image of the first must match the second, which checks d f =
    (A dz/z + B dz/(z-1)) f without reusing the algebra that defined A
    and B.  y = 0 initial data short-circuits to a zero residual.
    """
    res_a, res_b = gauge.residues_numeric()
    a_mat = np.array(res_a, dtype=complex)
    b_mat = np.array(res_b, dtype=complex)
    co = gauge.coefficients
    v = np.asarray(v0, dtype=complex)
    g = _gauge_matrix(gauge, complex(path[0])) @ v
    worst = 0.0
    if np.all(v == 0):
        worst = 0.0
    else:
        for p, q in zip(path, path[1:]):
            p = complex(p)
            q = complex(q)
            dz = q - p

            def zat(s: float) -> complex:
                return p + s * dz

            for zbad in (0.0, 1.0):
                if dz != 0:
                    root = (zbad - p) / dz
                    hits = abs(root.imag) <= 1e-12 and -1e-12 <= root.real <= 1 + 1e-12
                else:
                    hits = p == zbad
                if hits:
                    raise PathHitsSingularityError(
                        "path crosses an equation singularity", z=zbad
                    )

            def rhs(s, stacked):
                z = zat(s)
                vec = stacked[:6]
                gec = stacked[6:]
                vv = vec[:3] + 1j * vec[3:]
                gg = gec[:3] + 1j * gec[3:]
                omega = np.array(companion_system(co, z), dtype=complex)
                dv = dz * (omega @ vv)
                dg = dz * ((a_mat / z + b_mat / (z - 1.0)) @ gg)
                return np.concatenate([dv.real, dv.imag, dg.real, dg.imag])

            state = np.concatenate([v.real, v.imag, g.real, g.imag])
            sol = solve_ivp(
                rhs,
                (0.0, 1.0),
                state,
                method="DOP853",
                rtol=rtol,
                atol=atol,
                dense_output=True,
            )
            if not sol.success:
                raise ToleranceNotMetError("transport step control failed")
            for s in np.linspace(0.0, 1.0, samples):
                st = sol.sol(s)
                vv = st[:3] + 1j * st[3:6]
                gg = st[6:9] + 1j * st[9:]
                img = _gauge_matrix(gauge, zat(s)) @ vv
                scale = max(float(np.max(np.abs(gg))), 1e-300)
                worst = max(worst, float(np.max(np.abs(img - gg))) / scale)
            st = sol.y[:, -1]
            v = st[:3] + 1j * st[3:6]
            g = st[6:9] + 1j * st[9:]
    zres, eres = gauge.defining_residual_bounds()
    return ResidualReport(
        kind="gauge-transport",
        inputs={
            "branch": gauge.branch,
            "path": list(map(complex, path)),
            "v0": list(map(complex, v0)),
            "rtol": rtol,
        },
        results={
            "defining_residuals": [zres, eres],
            "exact_arithmetic": gauge.exact,
            "endpoint": v,
        },
        max_rel_residual=worst,
    )


# ---------------------------------------------------------------------------
# second-order system residuals


_STENCILS = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
}


def _stencil_derivatives(grid, orders, h: float):
    """Tensor central differences on a 3x3 grid of samples."""
    out = {}
    for alpha in orders:
        total = 0.0
        for ox, wx in _STENCILS[alpha[0]]:
            for oy, wy in _STENCILS[alpha[1]]:
                total += wx * wy * grid[(ox, oy)]
        out[alpha] = total / h ** sum(alpha)
    return out


def _operator_residual(op: PdeOperator, values, derivs) -> tuple[float, float]:
    total = 0.0
    scale = 0.0
    for alpha in op.orders():
        coeff = op.coefficient(alpha).evaluate_numeric(values).real
        term = coeff * derivs[alpha]
        total += term
        scale = max(scale, abs(term))
    return total, max(scale, 1e-300)


def pde_residual(
    params: Mapping[str, Fraction],
    point: Mapping[str, Fraction],
    h: Fraction = Fraction(1, 100),
    tol: float = 1e-9,
    use_compiled=None,
    routes: Mapping[str, Sequence[PdeOperator]] | None = None,
) -> ResidualReport:
    """Apply the two-variable operators to quadrature values of the integral.

    Both the generated operators and the hand-tabulated pair run on the
    same O(h^2) stencil: the integral over the area-largest bounded
    chamber is sampled on the 3x3 grid around the base point and each
    operator's terms are combined; the residual is relative to the
    largest single term, so it measures cancellation.  The report
    records the proportionality scalar between the two operator routes.
    ``routes`` substitutes the operator sets under test (negative
    controls); per-variable derivative orders above 2 are not supported
    by the stencil.
    """
    fam = build_j2()
    h = Fraction(h)
    generated = pde_operators(2)
    displayed = reference_pde_system_n2()
    if routes is None:
        routes = {"generated": generated, "tabulated": displayed}
    orders = set()
    for ops in routes.values():
        for op in ops:
            orders |= set(op.orders())
    if any(a > 2 for alpha in orders for a in alpha):
        raise ValueError("stencil covers per-variable orders up to 2")

    fiber0 = instantiate_fiber(fam, point)
    chambers0 = sorted(bounded_chambers(fiber0), key=lambda c: c.sign_vector)
    target = max(chambers0, key=lambda c: (c.area(), c.sign_vector))
    exps = tuple(w.evaluate(params) for w in fam.weights)

    xsym, ysym = fam.base_pool.symbols

    def sample(dx: int, dy: int, eff_tol: float) -> float:
        pt = {xsym: point[xsym] + dx * h, ysym: point[ysym] + dy * h}
        fiber = instantiate_fiber(fam, pt)
        match = [
            c for c in bounded_chambers(fiber) if c.sign_vector == target.sign_vector
        ]
        if len(match) != 1:
            raise ToleranceNotMetError(
                "chamber lost between stencil points; reduce h", offset=(dx, dy)
            )
        val, _ = chamber_weighted_volume(
            match[0], fiber.forms, exps, tol=eff_tol, use_compiled=use_compiled
        )
        return val

    center = sample(0, 0, tol)
    bound = float(h) ** 3 * 1e-3 * max(abs(center), 1e-300)
    eff_tol = min(tol, bound)
    grid = {}
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            grid[(dx, dy)] = sample(dx, dy, eff_tol)
    derivs = _stencil_derivatives(grid, orders, float(h))

    values = {
        "x1": float(point[xsym]),
        "x2": float(point[ysym]),
        **{k: float(v) for k, v in params.items()},
    }
    results = {"routes": {}, "tol_effective": eff_tol, "volume": grid[(0, 0)]}
    worst = 0.0
    for label, ops in routes.items():
        rels = []
        for op in ops:
            total, scale = _operator_residual(op, values, derivs)
            rels.append(abs(total) / scale)
        results["routes"][label] = rels
        worst = max(worst, max(rels))
    results["route_scalars"] = [
        str(operator_ratio(g, d)) for g, d in zip(generated, displayed)
    ]
    return ResidualReport(
        kind="pde",
        inputs={
            "model": fam.name,
            "params": dict(params),
            "point": dict(point),
            "h": h,
            "tol": tol,
        },
        results=results,
        max_rel_residual=worst,
    )
