import json
from fractions import Fraction as F

import pytest

from pfaffsys.arrangement import (
    OSElement,
    beta_nbc,
    instantiate_fiber,
    nbc_simplices,
    os_straighten,
)
from pfaffsys.dfmodels import build_in, build_j2
from pfaffsys.errors import (
    NotBetaNbcError,
    NotFlatError,
    ResonantWeightsError,
)
from pfaffsys.exactmath import MultiPoly, RationalFunction
from pfaffsys.gaussmanin import (
    ConnectionForm,
    basis_integrand_terms,
    connection_from_dict,
    connection_matrix,
    connection_to_dict,
    delta,
    ext_column,
    flatness_check,
    load_connection,
    nabla_prime,
    reduce_to_basis,
    save_connection,
    t_matrix,
    theta,
)

import reference_tables as tables
from reference_tables import grid_indices

J2_POINT = {"x": F(3, 10), "y": F(7, 10)}


@pytest.fixture(scope="module")
def j2():
    fam = build_j2()
    return fam, instantiate_fiber(fam, J2_POINT)


@pytest.fixture(scope="module")
def i2():
    fam = build_in(2)
    return fam, instantiate_fiber(fam, {"x2": F(2, 5)})


@pytest.fixture(scope="module")
def i3():
    fam = build_in(3)
    return fam, instantiate_fiber(fam, {"x2": F(2, 5), "x3": F(7, 10)})


@pytest.fixture(scope="module")
def j2_conn(j2):
    fam, _ = j2
    return connection_matrix(fam, J2_POINT)


def wvars(fam):
    return [fam.weight_pool.var(s) for s in fam.weight_pool.symbols]


# ---------------------------------------------------------------------------
# flag elements
# ---------------------------------------------------------------------------


def test_seven_line_flag_elements(j2):
    """All seven basis flag elements against their closed forms."""
    fam, fiber = j2
    for simplex, want in tables.seven_line_flag_table(fam).items():
        assert theta(fiber, simplex) == want, simplex


def test_grid_flag_elements(i3):
    fam, fiber = i3
    for simplex, want in tables.grid_flag_cases(fam, 3):
        assert theta(fiber, simplex) == want, simplex


def test_flag_requires_distinguished_simplex(j2):
    _, fiber = j2
    with pytest.raises(NotBetaNbcError):
        theta(fiber, (0, 3))


# ---------------------------------------------------------------------------
# column determinants
# ---------------------------------------------------------------------------


def test_seven_line_t_matrix(j2):
    fam, _ = j2
    base = fam.base_pool
    x, y = base.var("x"), base.var("y")
    one, zero = base.one(), base.zero()
    rows = t_matrix(fam)
    assert rows[0] == (zero, -one, -x, zero, -one, -y, zero, one)
    assert rows[1] == (one, one, one, zero, zero, zero, one, zero)
    assert rows[2] == (zero, zero, zero, one, one, one, -one, zero)


def test_grid_determinant_formulas(i3):
    """Pairwise determinants with one repeated direction reduce to
    coordinate differences, with positive orientation throughout."""
    fam, _ = i3
    for columns, want in tables.grid_determinant_cases(fam, 3):
        assert delta(fam, columns) == want, columns


def test_determinant_orientation(j2):
    fam, _ = j2
    ext = ext_column(fam)
    d1 = delta(fam, (0, 3, ext))
    d2 = delta(fam, (3, 0, ext))
    assert d1 == -d2
    assert d1 == fam.base_pool.one()


# ---------------------------------------------------------------------------
# covariant derivative
# ---------------------------------------------------------------------------


def test_grid_covariant_derivative_of_diagonal_pair(i3):
    """Derivative of the (vertical, diagonal) pair: for each other index k
    the x_i - x_k factor carries a_k (DV_k + DH_k + 2 V_iD - V_iH_k)."""
    fam, fiber = i3
    n = 3
    pool = fam.weight_pool
    i = 2
    vidx, hidx, didx = grid_indices(n)
    simplex = (vidx(i), didx)
    got = nabla_prime(fam, fiber, simplex)

    def factor_index(p, q):
        # declared factor proportional to x_p - x_q
        def xv(r):
            if r == 0:
                return fam.base_pool.zero()
            if r == 1:
                return fam.base_pool.one()
            return fam.base_pool.var(f"x{r}")

        target = xv(p) - xv(q)
        for idx, f in enumerate(fam.declared_factors):
            if f == target or f == -target:
                return idx
        raise AssertionError((p, q))

    expected_keys = set()
    for k in range(n + 1):
        if k == i:
            continue
        fidx = factor_index(i, k)
        expected_keys.add(fidx)
        ak = RationalFunction.of(pool.var(f"a{k}"))
        want = (
            OSElement.monomial(pool, (didx, vidx(k)), ak)
            + OSElement.monomial(pool, (didx, hidx(k)), ak)
            + OSElement.monomial(pool, simplex, ak * 2)
            + OSElement.monomial(pool, (vidx(i), hidx(k)), -ak)
        )
        assert got[fidx] == want, k
    assert set(got) == expected_keys


# ---------------------------------------------------------------------------
# reduction to the basis
# ---------------------------------------------------------------------------


def test_reduce_basis_elements_to_unit_vectors(j2, i2):
    for fam, fiber in (j2, i2):
        basis = fam.basis_order
        for i, simplex in enumerate(basis):
            coords = reduce_to_basis(fiber, theta(fiber, simplex), basis)
            for j, c in enumerate(coords):
                assert c == (1 if i == j else 0)


def test_reduce_kills_boundary_image(j2):
    fam, fiber = j2
    pool = fam.weight_pool
    a_lam = OSElement.zero(pool)
    for h in range(fam.size):
        a_lam = a_lam + OSElement.generator(pool, h).scaled(fam.weights[h])
    for h in range(fam.size):
        elt = a_lam.wedge(OSElement.generator(pool, h))
        coords = reduce_to_basis(fiber, elt, fam.basis_order)
        assert all(c.is_zero for c in coords)


def test_seven_line_log_form_expansions(j2):
    """Ten two-factor log forms against their closed basis expansions."""
    fam, fiber = j2
    pool = fam.weight_pool
    for (p, q), want in tables.seven_line_log_cases(fam).items():
        coords = reduce_to_basis(
            fiber, OSElement.monomial(pool, (p, q)), fam.basis_order
        )
        for j, w in enumerate(want):
            assert coords[j] == w, ((p, q), j)


def test_grid_log_form_expansions(i2):
    """Eight classes of log-form expansions in the grid family (n = 2)."""
    fam, fiber = i2
    pool = fam.weight_pool
    for (p, q), want in tables.grid_log_cases(fam, 2):
        coords = reduce_to_basis(
            fiber, OSElement.monomial(pool, (p, q)), fam.basis_order
        )
        assert list(coords) == want, (p, q)


# ---------------------------------------------------------------------------
# connection matrices
# ---------------------------------------------------------------------------


def test_seven_line_connection_matches_closed_form(j2_conn):
    fam = j2_conn.family
    expected = tables.seven_line_connection_matrices(fam)
    assert len(j2_conn.matrices) == 5
    for k, mat in enumerate(expected):
        for i in range(7):
            for j in range(7):
                assert j2_conn.matrices[k][i][j] == mat[i][j], (k, i, j)


@pytest.mark.parametrize("n", [2, 3])
def test_grid_connection_matches_closed_form(n, i2, i3):
    fam, fiber = i2 if n == 2 else i3
    conn = connection_matrix(fam, dict(fiber.base_point))
    _, expected = tables.grid_connection_matrices(n)
    size = n * n + n
    assert len(conn.matrices) == len(fam.declared_factors)
    for k in range(len(fam.declared_factors)):
        for i in range(size):
            for j in range(size):
                assert conn.matrices[k][i][j] == expected[k][i][j], (k, i, j)


def test_connection_entries_are_linear_weights(j2_conn):
    for mat in j2_conn.matrices:
        for row in mat:
            for e in row:
                assert e.den.is_constant
                assert e.num.total_degree() <= 1


def test_connection_point_independence(j2):
    fam, _ = j2
    conn1 = connection_matrix(fam, J2_POINT)
    conn2 = connection_matrix(fam, {"x": F(-2, 7), "y": F(5, 3)})
    assert conn1.matrices == conn2.matrices


def test_connection_specialized_weight_reruns(j2, j2_conn):
    """Numeric rerun of the whole pipeline at frozen weights."""
    fam, _ = j2
    tuples = [
        {"a": F(1, 2), "b": F(1, 3), "c": F(1, 5), "g": F(1, 7)},
        {"a": F(2, 3), "b": F(1, 5), "c": F(3, 7), "g": F(1, 11)},
        {"a": F(1, 4), "b": F(2, 5), "c": F(1, 6), "g": F(5, 7)},
    ]
    for values in tuples:
        frozen = connection_matrix(fam.specialize_weights(values), J2_POINT)
        for k, mat in enumerate(j2_conn.matrices):
            for i, row in enumerate(mat):
                for j, e in enumerate(row):
                    got = frozen.matrices[k][i][j]
                    assert got.is_constant
                    assert got.constant_value() == e.evaluate(values)


def test_resonant_weights_detected(j2):
    fam, _ = j2
    zeros = {s: F(0) for s in "abcg"}
    with pytest.raises(ResonantWeightsError):
        connection_matrix(fam.specialize_weights(zeros), J2_POINT)


# ---------------------------------------------------------------------------
# flatness
# ---------------------------------------------------------------------------


def test_seven_line_connection_is_flat(j2_conn):
    report = flatness_check(j2_conn)
    assert report["flat"] is True
    assert len(report["points"]) == 5
    assert report["base_pairs_checked"] == 1
    # the two triple points of the base locus show up as strata
    strata = {tuple(s) for s in report["strata_checked"]}
    assert ("x", "y", "x - y") in strata or ("x", "y", "-y + x") in strata


def test_grid_connections_are_flat(i2, i3):
    for fam, fiber in (i2, i3):
        conn = connection_matrix(fam, dict(fiber.base_point))
        assert flatness_check(conn)["flat"] is True


def test_flatness_detects_single_entry_mutation(j2_conn):
    fam = j2_conn.family
    one = RationalFunction.of(1, fam.weight_pool)
    mats = [list(map(list, m)) for m in j2_conn.matrices]
    mats[0][0][1] = mats[0][0][1] + one
    bad = ConnectionForm(
        family=fam,
        basis=j2_conn.basis,
        matrices=tuple(tuple(tuple(r) for r in m) for m in mats),
    )
    with pytest.raises(NotFlatError):
        flatness_check(bad)


# ---------------------------------------------------------------------------
# serialization and integrand data
# ---------------------------------------------------------------------------


def test_connection_round_trip(j2_conn, tmp_path):
    data = connection_to_dict(j2_conn)
    again = connection_from_dict(json.loads(json.dumps(data)))
    assert again == j2_conn
    path = tmp_path / "conn.json"
    save_connection(j2_conn, str(path))
    assert load_connection(str(path)) == j2_conn


def test_corrupted_connection_rejected(j2_conn):
    data = connection_to_dict(j2_conn)
    data["matrices"][0][0] = data["matrices"][0][0][:-1]
    with pytest.raises(ValueError):
        connection_from_dict(data)


def test_integrand_terms_shape(j2):
    fam, fiber = j2
    terms = basis_integrand_terms(fam, fiber)
    assert len(terms) == 7
    # first basis element integrates c^2 J / (form product) with J = 1
    ((coeff, simplex, det),) = terms[0]
    assert simplex == (2, 4)
    c = fam.weight_pool.var("c")
    assert coeff == RationalFunction.of(fam.weight_pool.var("b") * c)
    assert det == fam.base_pool.one()
