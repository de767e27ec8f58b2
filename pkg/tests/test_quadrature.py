"""Quadrature: rule construction, closed-form oracles, kernel agreement."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from pfaffsys import quadrature as quad
from pfaffsys.arrangement import AffineForm, Chamber2D, bounded_chambers, instantiate_fiber
from pfaffsys.dfmodels import build_j2
from pfaffsys.errors import NonconvergentExponentError, ToleranceNotMetError

HALF = {"a": F(1, 2), "b": F(1, 2), "c": F(1, 2), "g": F(1, 2)}


def unit_square_chamber():
    return Chamber2D(
        vertices=((F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))),
        edge_lines=(2, 1, 3, 0),
        sign_vector=(1, -1, 1, -1),
        interior_point=(F(1, 2), F(1, 2)),
    )


def unit_square_forms():
    return [
        AffineForm("x", F(0), (F(1), F(0))),
        AffineForm("x-1", F(-1), (F(1), F(0))),
        AffineForm("y", F(0), (F(0), F(1))),
        AffineForm("y-1", F(-1), (F(0), F(1))),
    ]


# ---------------------------------------------------------------------------
# the rule itself


def test_rule_is_symmetric_with_positive_weights():
    x, w = quad.tanh_sinh_rule(4)
    # deep tail nodes saturate to +-1.0 in double precision, so the node
    # sequence is non-decreasing rather than strict
    assert np.all(np.diff(x) >= 0)
    assert np.all(np.abs(x) <= 1)
    assert np.all(w > 0)
    assert np.all(w >= quad.WEIGHT_CUTOFF)
    # the set of (node, weight) pairs is mirror symmetric; saturated tail
    # nodes tie at +-1.0 so compare as multisets rather than positionally
    i1 = np.lexsort((w, x))
    i2 = np.lexsort((w, -x))
    assert np.array_equal(x[i1], -x[i2])
    assert np.array_equal(w[i1], w[i2])
    assert abs(float(w.sum()) - 2.0) < 1e-12
    # center node carries pi/2 * h
    mid = np.argmin(np.abs(x))
    assert x[mid] == 0.0
    assert w[mid] == pytest.approx(math.pi / 2 * 2.0**-4, rel=1e-15)


def test_rule_density_doubles_per_level():
    x4, _ = quad.tanh_sinh_rule(4)
    x5, _ = quad.tanh_sinh_rule(5)
    assert 1.8 < len(x5) / len(x4) < 2.2


def test_shifted_rule_complements_are_consistent():
    u, eu, w = quad._rule01(5)
    assert np.max(np.abs(u + eu - 1.0)) < 1e-15
    # tail nodes round to exactly 1.0 in doubles; the complement array keeps
    # the true distance to the endpoint, which is what the kernels consume
    assert np.all((u > 0) & (u <= 1))
    assert np.all(eu > 0)
    assert np.all(eu[u == 1.0] > 0)
    # weights integrate the constant 1 over (0, 1)
    assert float(w.sum()) == pytest.approx(1.0, abs=1e-12)


def test_interval_quadrature_beta_value():
    val, err = quad.integrate_01(lambda t: math.sqrt(t * (1 - t)), tol=1e-13)
    assert abs(val - math.pi / 8) < 1e-13
    assert err < 1e-12


def test_interval_quadrature_against_gauss_legendre():
    # independent route: t = sin(theta)^2 removes both endpoint
    # singularities, then a plain Gauss-Legendre rule converges fast
    from scipy.special import roots_legendre

    nodes, weights = roots_legendre(60)
    theta = (nodes + 1) * (math.pi / 4)
    smooth = 2.0 * np.sin(theta) ** 2 * np.cos(theta) ** 2 * (math.pi / 4)
    reference = float(np.dot(weights, smooth))
    val, _ = quad.integrate_01(lambda t: math.sqrt(t * (1 - t)), tol=1e-13)
    assert abs(val - reference) < 1e-12


def test_interval_quadrature_tolerance_guard():
    # a single level leaves nothing to compare against
    with pytest.raises(ToleranceNotMetError):
        quad.integrate_01(lambda t: math.sqrt(t), tol=0.0, max_level=quad._MIN_LEVEL)
    # consecutive levels genuinely differ for an oscillatory integrand
    with pytest.raises(ToleranceNotMetError):
        quad.integrate_01(lambda t: math.cos(40.0 * t), tol=0.0, max_level=4)


# ---------------------------------------------------------------------------
# triangles and chambers against closed forms


def dirichlet_forms():
    return [
        AffineForm("x", F(0), (F(1), F(0))),
        AffineForm("y", F(0), (F(0), F(1))),
        AffineForm("1-x-y", F(1), (F(-1), F(-1))),
    ]


def test_triangle_dirichlet_closed_form():
    # integral of x^p y^q (1-x-y)^r over the standard simplex
    expect = math.gamma(1.5) ** 3 / math.gamma(4.5)
    val, err = quad.triangle_weighted_integral(
        (F(0), F(0)),
        (F(1), F(0)),
        (F(0), F(1)),
        dirichlet_forms(),
        [F(1, 2)] * 3,
        tol=1e-12,
    )
    assert abs(val - expect) < 1e-11
    assert err < 1e-11


def test_triangle_orientation_independent():
    args = (dirichlet_forms(), [F(1, 2)] * 3)
    a, _ = quad.triangle_weighted_integral((F(0), F(0)), (F(1), F(0)), (F(0), F(1)), *args)
    b, _ = quad.triangle_weighted_integral((F(0), F(1)), (F(1), F(0)), (F(0), F(0)), *args)
    assert abs(a - b) < 1e-12


def test_square_chamber_phi_volume():
    vol, err = quad.chamber_weighted_volume(
        unit_square_chamber(), unit_square_forms(), [F(1, 2)] * 4, tol=1e-11
    )
    assert abs(vol - (math.pi / 8) ** 2) < 1e-11


def test_square_chamber_pair_integrals():
    vals, errs = quad.chamber_pair_integrals(
        unit_square_chamber(),
        unit_square_forms(),
        [F(1, 2)] * 4,
        [(0, 2), (1, 3), (0, 3)],
        tol=1e-10,
    )
    expect = (math.pi / 2) ** 2
    assert abs(vals[0] - expect) < 1e-10
    assert abs(vals[1] - expect) < 1e-10
    assert abs(vals[2] - expect) < 1e-10
    assert np.all(errs < 1e-9)


def test_divergent_edge_exponent_rejected():
    exps = [F(0), F(1, 2), F(1, 2), F(1, 2)]
    with pytest.raises(NonconvergentExponentError):
        quad.chamber_pair_integrals(
            unit_square_chamber(), unit_square_forms(), exps, [(0, 2)], tol=1e-8
        )


def test_divergent_vertex_exponent_rejected():
    # three concurrent lines at the origin; each edge alone converges but
    # the exponent sum at the vertex does not
    forms = [
        AffineForm("x", F(0), (F(1), F(0))),
        AffineForm("y", F(0), (F(0), F(1))),
        AffineForm("x-y", F(0), (F(1), F(-1))),
        AffineForm("x+y-1", F(-1), (F(1), F(1))),
    ]
    chamber = Chamber2D(
        vertices=((F(0), F(0)), (F(1), F(0)), (F(1, 2), F(1, 2))),
        edge_lines=(1, 3, 2),
        sign_vector=(1, 1, 1, -1),
        interior_point=(F(1, 2), F(1, 5)),
    )
    exps = [F(2, 5), F(2, 5), F(-9, 10), F(1, 2)]
    with pytest.raises(NonconvergentExponentError) as info:
        quad.chamber_pair_integrals(chamber, forms, exps, [(0, 1)], tol=1e-8)
    assert "vertex" in str(info.value)


def test_triangle_tolerance_guard():
    with pytest.raises(ToleranceNotMetError):
        quad.triangle_weighted_integral(
            (F(0), F(0)),
            (F(1), F(0)),
            (F(0), F(1)),
            dirichlet_forms(),
            [F(1, 2)] * 3,
            tol=0.0,
            max_level=4,
        )


# ---------------------------------------------------------------------------
# kernels


@pytest.mark.skipif(not quad.HAVE_COMPILED, reason="compiled kernel not built")
def test_kernels_agree_on_raw_level():
    import pfaffsys._quadcore as qc

    u, eu, w = quad._rule01(5)
    corner_vals = np.array(
        [[0.4, 0.9, 0.1], [1.3, 0.2, 0.8], [0.7, 0.5, 0.6], [0.9, 1.4, 0.3]]
    )
    exps = np.array([0.5, 0.25, 0.5, 1.5])
    pairs = np.array([[0, 1], [1, 2], [0, 3]], dtype=np.intp)
    mine = quad._pairs_level_numpy(corner_vals, exps, pairs, u, eu, w, 1.7)
    theirs = np.asarray(qc.pairs_level(corner_vals, exps, pairs, u, eu, w, 1.7))
    assert np.max(np.abs(mine - theirs) / np.abs(mine)) < 1e-12


@pytest.mark.skipif(not quad.HAVE_COMPILED, reason="compiled kernel not built")
def test_kernels_agree_on_arrangement_workload():
    fam = build_j2()
    fiber = instantiate_fiber(fam, {"x": F(3, 10), "y": F(7, 10)})
    chamber = bounded_chambers(fiber)[0]
    exps = [wp.evaluate(HALF) for wp in fam.weights]
    pairs = list(fam.basis_order)
    fast, _ = quad.chamber_pair_integrals(
        chamber, fiber.forms, exps, pairs, tol=1e-9, use_compiled=True
    )
    slow, _ = quad.chamber_pair_integrals(
        chamber, fiber.forms, exps, pairs, tol=1e-9, use_compiled=False
    )
    assert np.max(np.abs(fast - slow)) < 1e-11


def test_compiled_request_without_build_errors():
    if quad.HAVE_COMPILED:
        pytest.skip("compiled kernel present")
    with pytest.raises(ValueError):
        quad._select_kernel(True)


def test_kernel_name_consistent():
    assert quad.kernel_name() in ("compiled", "numpy")
    assert (quad.kernel_name() == "compiled") == quad.HAVE_COMPILED
