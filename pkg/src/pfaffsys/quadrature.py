"""Doubly-exponential quadrature over chambers of a planar arrangement.

The weight function is a product of powers of the defining affine forms,
so it is smooth inside a chamber and algebraically singular on the
boundary.  Nodes follow the tanh-sinh rule, which crushes endpoint
singularities; chambers are fanned into triangles from their centroid
and each triangle is mapped to the unit square with a collapsing map
whose Jacobian is linear in u.

Two interchangeable kernels evaluate the tensor grid: a Cython extension
(built opportunistically at install time) and a chunked numpy fallback.
Import picks the compiled one when present; every public entry point
accepts ``use_compiled`` to force a choice, and the benchmark script
compares the two.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .arrangement import AffineForm, Chamber2D
from .errors import NonconvergentExponentError, ToleranceNotMetError

try:
    from . import _quadcore as _compiled
except ImportError:  # pragma: no cover - depends on build toolchain
    _compiled = None

HAVE_COMPILED = _compiled is not None

# nodes with smaller weight contribute nothing representable
WEIGHT_CUTOFF = 1e-280

_MIN_LEVEL = 3


def kernel_name() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


def tanh_sinh_rule(level: int):
    """Nodes and weights on (-1, 1) at step h = 2**-level.

    x_k = tanh(pi/2 * sinh(kh)), w_k = pi/2 * h * cosh(kh) / cosh^2(pi/2 * sinh(kh)),
    truncated once the weight drops below the representable cutoff.
    Nodes come back sorted.
    """
    h = 2.0 ** (-level)
    xs = [0.0]
    ws = [math.pi / 2 * h]
    k = 1
    while True:
        kh = k * h
        s = math.pi / 2 * math.sinh(kh)
        wk = math.pi / 2 * h * math.cosh(kh) * _sech_sq(s)
        if wk < WEIGHT_CUTOFF:
            break
        xk = math.tanh(s)
        xs.extend([xk, -xk])
        ws.extend([wk, wk])
        k += 1
    order = np.argsort(xs)
    return np.asarray(xs)[order], np.asarray(ws)[order]


def _sech_sq(s: float) -> float:
    # 1/cosh^2 without overflowing at large arguments
    ex = math.exp(-abs(s))
    return (2.0 * ex / (1.0 + ex * ex)) ** 2


@lru_cache(maxsize=None)
def _rule01(level: int):
    """The same rule shifted to (0, 1), with stable complements.

    Returns (u, 1-u, w).  The complement is computed from the exponential
    form directly, so a node pinned against 1.0 in double precision still
    carries its true distance to the endpoint.
    """
    h = 2.0 ** (-level)
    us = [0.5]
    eus = [0.5]
    ws = [math.pi / 4 * h]
    k = 1
    while True:
        kh = k * h
        s = math.pi / 2 * math.sinh(kh)
        wk = math.pi / 2 * h * math.cosh(kh) * _sech_sq(s)
        if wk < WEIGHT_CUTOFF:
            break
        ex = math.exp(-2.0 * s)
        d = ex / (1.0 + ex)  # (1 - tanh s) / 2
        hi = 1.0 - d
        us.extend([hi, d])
        eus.extend([d, hi])
        ws.extend([wk / 2, wk / 2])
        k += 1
    u = np.asarray(us)
    eu = np.asarray(eus)
    w = np.asarray(ws)
    u.setflags(write=False)
    eu.setflags(write=False)
    w.setflags(write=False)
    return u, eu, w


def integrate_01(f: Callable[[float], float], tol: float = 1e-12, max_level: int = 10):
    """Adaptive one-dimensional integral of f over (0, 1).

    Doubles the node density until two consecutive levels agree to tol
    (absolute).  Returns (value, error_estimate).
    """
    prev = None
    for level in range(_MIN_LEVEL, max_level + 1):
        u, _, w = _rule01(level)
        cur = float(np.dot(w, np.array([f(x) for x in u])))
        if prev is not None and abs(cur - prev) <= tol:
            return cur, abs(cur - prev)
        prev = cur
    raise ToleranceNotMetError(
        "interval quadrature did not settle",
        tol=tol,
        max_level=max_level,
        last_delta=abs(cur - prev) if prev is not None else None,
    )


# ---------------------------------------------------------------------------
# tensor kernels


def _pairs_level_numpy(corner_vals, exps, pairs, u, eu, w, jac):
    """Chunked numpy twin of the compiled kernel.

    corner_vals[i] holds the i-th form at (apex, v1, v2); the form value
    at a node is the bilinear blend eu*apex + u*(ev*v1 + v*v2).
    """
    nf = corner_vals.shape[0]
    nn = u.shape[0]
    out = np.zeros(len(pairs))
    cc = corner_vals[:, 0][:, None, None]
    ca = corner_vals[:, 1][:, None, None]
    cb = corner_vals[:, 2][:, None, None]
    ev = eu[None, None, :]
    vv = u[None, None, :]
    wv = w[None, :]
    # bound the scratch arrays at ~32 MB however dense the rule gets
    block = max(1, int(4.0e6 // max(1, nf * nn)))
    for start in range(0, nn, block):
        ub = u[start : start + block][None, :, None]
        eub = eu[start : start + block][None, :, None]
        wub = w[start : start + block][:, None]
        lv = np.abs(eub * cc + ub * (ev * ca + vv * cb))
        phi = np.prod(lv ** exps[:, None, None], axis=0)
        base = phi * (wub * wv) * ub[0] * jac
        for idx in range(len(pairs)):
            p, q = pairs[idx]
            den = lv[p] * lv[q]
            # the deepest tail nodes can underflow the denominator; their
            # true contribution is far below double precision
            good = den > 0.0
            out[idx] += float(np.sum(base[good] / den[good]))
    return out


def _select_kernel(use_compiled):
    if use_compiled is None:
        use_compiled = HAVE_COMPILED
    if use_compiled:
        if not HAVE_COMPILED:
            raise ValueError("compiled kernel requested but not built")
        return _compiled.pairs_level
    return _pairs_level_numpy


def _refine_triangle(corner_vals, exps, pairs_arr, jac, tol, max_level, kernel):
    prev = None
    for level in range(_MIN_LEVEL, max_level + 1):
        u, eu, w = _rule01(level)
        cur = np.asarray(kernel(corner_vals, exps, pairs_arr, u, eu, w, jac))
        if prev is not None:
            deltas = np.abs(cur - prev)
            if float(deltas.max(initial=0.0)) <= tol:
                return cur, deltas, level
        prev = cur
    raise ToleranceNotMetError(
        "triangle quadrature did not settle",
        tol=tol,
        max_level=max_level,
        last_delta=float(np.abs(cur - prev).max(initial=0.0)),
    )


# ---------------------------------------------------------------------------
# chamber driver


def _as_exponent(e) -> Fraction | float:
    return e if isinstance(e, Fraction) else float(e)


def check_exponents(
    chamber: Chamber2D,
    forms: Sequence[AffineForm],
    exponents: Sequence,
    pairs: Sequence[tuple[int, int]],
):
    """Reject integrals that diverge on the chamber boundary.

    For the pair (p, q) the integrand carries form exponents lowered by
    one on p and q.  An edge needs its exponent > -1; a vertex needs the
    exponent sum over every form vanishing there > -2 (more than two
    lines may pass through a vertex).
    """
    exps = [_as_exponent(e) for e in exponents]
    vanishing = []
    for v in chamber.vertices:
        vanishing.append(tuple(j for j, f in enumerate(forms) if f.value(v) == 0))
    for p, q in pairs:
        def eff(j: int):
            return exps[j] - (1 if j == p else 0) - (1 if j == q else 0)

        for j in set(chamber.edge_lines):
            if eff(j) <= -1:
                raise NonconvergentExponentError(
                    "divergent along a chamber edge",
                    line=j,
                    exponent=str(eff(j)),
                    pair=(p, q),
                )
        for v, lines in zip(chamber.vertices, vanishing):
            total = sum(eff(j) for j in lines)
            if total <= -2:
                raise NonconvergentExponentError(
                    "divergent at a chamber vertex",
                    vertex=tuple(map(str, v)),
                    lines=lines,
                    pair=(p, q),
                )


def chamber_pair_integrals(
    chamber: Chamber2D,
    forms: Sequence[AffineForm],
    exponents: Sequence,
    pairs: Sequence[tuple[int, int]],
    tol: float = 1e-9,
    max_level: int = 10,
    use_compiled=None,
):
    """Integrals of phi / (|L_p| |L_q|) over one chamber, one per pair.

    phi is the product of |L_i| ** exponents[i] over every form.  The
    chamber is fanned into triangles from its vertex centroid; each
    triangle refines until consecutive levels agree to tol / n_triangles,
    so the summed error estimate stays below tol.  Returns (values,
    error_estimates) as arrays aligned with ``pairs``.
    """
    if len(forms) != len(exponents):
        raise ValueError("one exponent per form")
    check_exponents(chamber, forms, exponents, pairs)
    pairs_arr = np.array(pairs, dtype=np.intp).reshape(len(pairs), 2)
    exps = np.array([float(e) for e in exponents])
    verts = chamber.vertices
    n = len(verts)
    cx = sum(v[0] for v in verts) / n
    cy = sum(v[1] for v in verts) / n
    kernel = _select_kernel(use_compiled)
    totals = np.zeros(len(pairs))
    errors = np.zeros(len(pairs))
    for k in range(n):
        vk = verts[k]
        vk1 = verts[(k + 1) % n]
        corner_vals = np.array(
            [
                [
                    float(f.value((cx, cy))),
                    float(f.value(vk)),
                    float(f.value(vk1)),
                ]
                for f in forms
            ]
        )
        # CCW fan from an interior point keeps the Jacobian positive
        jac = float((vk[0] - cx) * (vk1[1] - cy) - (vk[1] - cy) * (vk1[0] - cx))
        assert jac > 0
        vals, deltas, _ = _refine_triangle(
            corner_vals, exps, pairs_arr, jac, tol / n, max_level, kernel
        )
        totals += vals
        errors += deltas
    return totals, errors


def triangle_weighted_integral(
    p0,
    p1,
    p2,
    forms: Sequence[AffineForm],
    exponents: Sequence,
    tol: float = 1e-10,
    max_level: int = 10,
    use_compiled=None,
):
    """Integral of phi over a single explicit triangle (no pair division).

    Mostly a test and benchmark surface: routes through the same kernels
    using a unit dummy pair.
    """
    nf = len(forms)
    corner_vals = np.empty((nf + 1, 3))
    for i, f in enumerate(forms):
        corner_vals[i] = [float(f.value(p0)), float(f.value(p1)), float(f.value(p2))]
    corner_vals[nf] = [1.0, 1.0, 1.0]
    exps = np.array([float(e) for e in exponents] + [0.0])
    pairs_arr = np.array([[nf, nf]], dtype=np.intp)
    jac = abs(
        float(
            (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        )
    )
    kernel = _select_kernel(use_compiled)
    vals, deltas, _ = _refine_triangle(
        corner_vals, exps, pairs_arr, jac, tol, max_level, kernel
    )
    return float(vals[0]), float(deltas[0])


def chamber_weighted_volume(
    chamber: Chamber2D,
    forms: Sequence[AffineForm],
    exponents: Sequence,
    tol: float = 1e-10,
    max_level: int = 10,
    use_compiled=None,
) -> tuple[float, float]:
    """Integral of phi alone over a chamber."""
    verts = chamber.vertices
    n = len(verts)
    cx = sum(v[0] for v in verts) / n
    cy = sum(v[1] for v in verts) / n
    total = 0.0
    err = 0.0
    for k in range(n):
        val, delta = triangle_weighted_integral(
            (cx, cy),
            verts[k],
            verts[(k + 1) % n],
            forms,
            exponents,
            tol=tol / n,
            max_level=max_level,
            use_compiled=use_compiled,
        )
        total += val
        err += delta
    return total, err
