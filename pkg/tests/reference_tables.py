"""Closed-form expectation tables shared by the unit and acceptance suites.

Everything here is data: the flag elements, log-form expansions, connection
matrices, and determinant identities written out exactly as the package is
required to reproduce them.  Builders take the family so all symbols come
from its pools.
"""
from pfaffsys.arrangement import OSElement
from pfaffsys.dfmodels import build_in
from pfaffsys.exactmath import RationalFunction


def grid_indices(n):
    """Hyperplane indices of the grid family: V0 H0 V1..Vn H1..Hn D."""
    vidx = lambda i: 0 if i == 0 else i + 1
    hidx = lambda j: 1 if j == 0 else n + 1 + j
    return vidx, hidx, 2 * n + 2


def grid_columns(n):
    """Basis column of the (i, j) crossing pair and of the k-th diagonal pair."""
    col_ij = lambda i, j: (i - 1) * n + (j - 1)
    col_k = lambda k: n * n + (k - 1)
    return col_ij, col_k


def _xv(base, i):
    if i == 0:
        return base.zero()
    if i == 1:
        return base.one()
    return base.var(f"x{i}")


# ---------------------------------------------------------------------------
# flag elements


def seven_line_flag_table(fam):
    """The seven basis flag elements of the seven-line family."""
    pool = fam.weight_pool
    a, b, c, g = (pool.var(s) for s in "abcg")
    mono = lambda t, co: OSElement.monomial(pool, t, RationalFunction.of(co))
    return {
        (2, 4): mono((2, 4), b * c),
        (1, 5): mono((1, 5), b * c),
        (2, 6): mono((2, 6), c * g),
        (5, 6): mono((5, 6), c * g),
        (2, 5): mono((2, 5), c * c),
        (1, 6): mono((1, 6), b * g) + mono((4, 6), b * g),
        (1, 4): mono((1, 4), b * b) + mono((6, 4), b * g),
    }


def grid_flag_cases(fam, n):
    """Flag elements of the grid family, one entry per basis simplex."""
    pool = fam.weight_pool
    a = {i: pool.var(f"a{i}") for i in range(n + 1)}
    g = pool.var("g")
    vidx, hidx, didx = grid_indices(n)
    mono = lambda t, co: OSElement.monomial(pool, t, RationalFunction.of(co))
    cases = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                want = mono((vidx(i), hidx(j)), a[i] * a[j])
            else:
                want = mono((vidx(i), hidx(i)), a[i] * a[i]) + mono(
                    (didx, hidx(i)), a[i] * g
                )
            cases.append(((vidx(i), hidx(j)), want))
        want = mono((vidx(i), didx), a[i] * g) + mono((hidx(i), didx), a[i] * g)
        cases.append(((vidx(i), didx), want))
    return cases


# ---------------------------------------------------------------------------
# log-form expansions in the distinguished basis


def seven_line_log_cases(fam):
    """Ten two-factor log forms with their closed basis expansions."""
    pool = fam.weight_pool
    a, b, c, g = (pool.var(s) for s in "abcg")
    one = pool.one()
    rf = RationalFunction
    return {
        # (p, q): coefficients on the seven basis elements
        (2, 3): [rf(-one, a * c), 0, rf(-one, a * c), 0, rf(-one, a * c), 0, 0],
        (0, 5): [0, rf(-one, a * c), 0, rf(one, a * c), rf(-one, a * c), 0, 0],
        (1, 3): [0, rf(-one, a * b), 0, 0, 0, rf(-one, a * b), rf(-one, a * b)],
        (0, 4): [rf(-one, a * b), 0, 0, 0, 0, 0, rf(-one, a * b)],
        (1, 4): [
            0,
            0,
            0,
            0,
            0,
            rf(one, b * (b + b + g)),
            rf(one + one, b * (b + b + g)),
        ],
        (1, 6): [
            0,
            0,
            0,
            0,
            0,
            rf(one, b * g) - rf(one, g * (b + b + g)),
            rf(one, b * g) - rf(one + one, g * (b + b + g)),
        ],
        (0, 3): [
            rf(one + one, a * (a + a + g)),
            rf(one + one, a * (a + a + g)),
            rf(one, a * (a + a + g)),
            rf(-one, a * (a + a + g)),
            rf(one + one, a * (a + a + g)),
            rf(one, a * (a + a + g)),
            rf(one + one, a * (a + a + g)),
        ],
        (4, 6): [
            0,
            0,
            0,
            0,
            0,
            rf(one, g * (b + b + g)),
            rf(one + one, g * (b + b + g)) - rf(one, b * g),
        ],
        (0, 6): [
            rf(one, a * g) - rf(one + one, g * (a + a + g)),
            rf(one, a * g) - rf(one + one, g * (a + a + g)),
            rf(-one, g * (a + a + g)),
            rf(one, g * (a + a + g)) - rf(one, a * g),
            rf(one, a * g) - rf(one + one, g * (a + a + g)),
            rf(-one, g * (a + a + g)),
            rf(one, a * g) - rf(one + one, g * (a + a + g)),
        ],
        (3, 6): [
            rf(one + one, g * (a + a + g)) - rf(one, a * g),
            rf(one + one, g * (a + a + g)) - rf(one, a * g),
            rf(one, g * (a + a + g)) - rf(one, a * g),
            rf(-one, g * (a + a + g)),
            rf(one + one, g * (a + a + g)) - rf(one, a * g),
            rf(one, g * (a + a + g)) - rf(one, a * g),
            rf(one + one, g * (a + a + g)) - rf(one, a * g),
        ],
    }


def grid_log_cases(fam, n):
    """The eight classes of log-form expansions in the grid family."""
    pool = fam.weight_pool
    a = {i: pool.var(f"a{i}") for i in range(n + 1)}
    g = pool.var("g")
    one = pool.one()
    two = one + one
    col_ij, col_k = grid_columns(n)
    vidx, hidx, didx = grid_indices(n)
    size = n * n + n
    rf = RationalFunction
    zero_vec = lambda: [rf.of(0, pool) for _ in range(size)]
    cases = []

    for k in range(1, n + 1):
        # vertical through 0 with horizontal k
        want = zero_vec()
        for i in range(1, n + 1):
            want[col_ij(i, k)] = rf(-one, a[0] * a[k])
        cases.append(((vidx(0), hidx(k)), want))
        # vertical k with horizontal through 0
        want = zero_vec()
        want[col_k(k)] = rf(-one, a[0] * a[k])
        for i in range(1, n + 1):
            want[col_ij(k, i)] = rf(-one, a[0] * a[k])
        cases.append(((vidx(k), hidx(0)), want))
        # aligned pair at k
        want = zero_vec()
        den = (a[k] + a[k] + g) * a[k]
        want[col_k(k)] = rf(one, den)
        want[col_ij(k, k)] = rf(two, den)
        cases.append(((vidx(k), hidx(k)), want))
        # vertical k with the diagonal
        want = zero_vec()
        den = (a[k] + a[k] + g) * g
        want[col_k(k)] = rf(-one, den) + rf(one, a[k] * g)
        want[col_ij(k, k)] = rf(-two, den) + rf(one, a[k] * g)
        cases.append(((vidx(k), didx), want))
        # horizontal k with the diagonal
        want = zero_vec()
        want[col_k(k)] = rf(one, den)
        want[col_ij(k, k)] = rf(two, den) - rf(one, a[k] * g)
        cases.append(((hidx(k), didx), want))

    # aligned pair at 0
    den0 = (a[0] + a[0] + g) * a[0]
    want = zero_vec()
    for i in range(1, n + 1):
        want[col_k(i)] = rf(one, den0)
        for j in range(1, n + 1):
            want[col_ij(i, j)] = rf(two, den0)
    cases.append(((vidx(0), hidx(0)), want))
    # vertical through 0 with the diagonal
    deng = (a[0] + a[0] + g) * g
    want = zero_vec()
    for i in range(1, n + 1):
        want[col_k(i)] = rf(-one, deng)
        for j in range(1, n + 1):
            want[col_ij(i, j)] = rf(-two, deng) + rf(one, a[0] * g)
    cases.append(((vidx(0), didx), want))
    # horizontal through 0 with the diagonal
    want = zero_vec()
    for i in range(1, n + 1):
        want[col_k(i)] = rf(one, deng) - rf(one, a[0] * g)
        for j in range(1, n + 1):
            want[col_ij(i, j)] = rf(two, deng) - rf(one, a[0] * g)
    cases.append(((hidx(0), didx), want))
    return cases


# ---------------------------------------------------------------------------
# connection matrices


def seven_line_connection_matrices(fam):
    """The five coefficient matrices of the seven-line connection,
    ordered like the declared base factors (x, y, x-1, y-1, x-y)."""
    pool = fam.weight_pool
    a, b, c, g = (pool.var(s) for s in "abcg")
    z = pool.zero()
    two = pool.const(2)
    A = [
        [a + c, z, z, z, z, z, c],
        [z, z, z, z, z, z, z],
        [g, z, two * a + c + g, c, g, c, z],
        [z, z, z, z, z, z, z],
        [z, c, z, -c, a + c, z, z],
        [z, z, z, z, z, z, z],
        [z, z, z, z, z, z, z],
    ]
    B = [
        [z, z, z, z, z, z, z],
        [z, a + c, z, z, z, c, c],
        [z, z, z, z, z, z, z],
        [z, -g, c, two * a + c + g, -g, c, z],
        [c, z, c, z, a + c, z, z],
        [z, z, z, z, z, z, z],
        [z, z, z, z, z, z, z],
    ]
    C = [
        [b + g, z, -b, z, z, z, -c],
        [z, c, z, z, -b, z, z],
        [-g, z, two * b, z, z, -c, z],
        [z, z, z, z, z, z, z],
        [z, -c, z, z, b, z, z],
        [g, z, -two * b, z, z, c, z],
        [-b - g, z, b, z, z, z, c],
    ]
    D = [
        [c, z, z, z, -b, z, z],
        [z, b + g, z, b, z, -c, -c],
        [z, z, z, z, z, z, z],
        [z, g, z, two * b, z, -c, z],
        [-c, z, z, z, b, z, z],
        [z, -g, z, -two * b, z, c, z],
        [z, -b, z, b, z, z, c],
    ]
    E = [
        [z] * 7,
        [z] * 7,
        [z, z, c, -c, -g, z, z],
        [z, z, -c, c, g, z, z],
        [z, z, -c, c, g, z, z],
        [z] * 7,
        [z] * 7,
    ]
    return [A, B, C, D, E]


def grid_connection_matrices(n):
    """Connection coefficients of the grid family from the closed formulas."""
    fam = build_in(n)
    pool = fam.weight_pool
    a = {i: pool.var(f"a{i}") for i in range(n + 1)}
    g = pool.var("g")
    base = fam.base_pool

    def factor_of(p, q):
        target = _xv(base, p) - _xv(base, q)
        if target.is_constant:
            return None
        for idx, f in enumerate(fam.declared_factors):
            if f == target or f == -target:
                return idx
        raise AssertionError((p, q))

    size = n * n + n
    col_ij, col_k = grid_columns(n)
    mats = [
        [[pool.zero() for _ in range(size)] for _ in range(size)]
        for _ in fam.declared_factors
    ]

    def add(row, p, q, col, coeff):
        idx = factor_of(p, q)
        if idx is None:
            return
        mats[idx][row][col] = mats[idx][row][col] + coeff

    rng = range(1, n + 1)
    for i in rng:
        for j in rng:
            if i == j:
                continue
            row = col_ij(i, j)
            add(row, i, j, col_ij(i, j), a[i] + a[j] + g)
            add(row, i, j, col_ij(j, j), -a[i])
            add(row, i, j, col_ij(i, i), -a[j])
            add(row, i, j, col_k(i), -a[j])
            for l in rng:
                add(row, i, 0, col_ij(l, j), a[i])
            add(row, i, 0, col_ij(i, j), a[0])
            for k in rng:
                if k in (i, j):
                    continue
                add(row, i, k, col_ij(i, j), a[k])
                add(row, i, k, col_ij(k, j), -a[i])
            add(row, j, 0, col_k(i), a[j])
            for l in rng:
                add(row, j, 0, col_ij(i, l), a[j])
            add(row, j, 0, col_ij(i, j), a[0])
            for k in rng:
                if k in (i, j):
                    continue
                add(row, j, k, col_ij(i, j), a[k])
                add(row, j, k, col_ij(i, k), -a[j])
        # aligned rows
        row = col_ij(i, i)
        for l in rng:
            add(row, i, 0, col_ij(l, i), a[i] + g)
            add(row, i, 0, col_ij(i, l), a[i])
            add(row, i, 0, col_k(l), -a[i])
        add(row, i, 0, col_ij(i, i), a[0] + a[0])
        add(row, i, 0, col_k(i), a[i])
        for k in rng:
            if k == i:
                continue
            add(row, i, k, col_k(k), a[i])
            add(row, i, k, col_ij(i, k), -a[i])
            add(row, i, k, col_ij(k, i), -a[i] - g)
            add(row, i, k, col_ij(i, i), a[k] + a[k])
        # derivative of the diagonal pairing
        row = col_k(i)
        add(row, i, 0, col_k(i), a[0] + a[0] + g)
        for l in rng:
            add(row, i, 0, col_k(l), a[i] + a[i])
            add(row, i, 0, col_ij(i, l), g)
            add(row, i, 0, col_ij(l, i), -g)
        for k in rng:
            if k == i:
                continue
            add(row, i, k, col_k(i), a[k] + a[k])
            add(row, i, k, col_k(k), -a[i] - a[i])
            add(row, i, k, col_ij(k, i), g)
            add(row, i, k, col_ij(i, k), -g)
    return fam, mats


# ---------------------------------------------------------------------------
# triple determinants


def grid_determinant_cases(fam, n):
    """Triples with one repeated direction and their coordinate-difference
    determinants, positively oriented."""
    base = fam.base_pool
    vidx, hidx, didx = grid_indices(n)
    cases = []
    rng = range(n + 1)
    for i in rng:
        for j in rng:
            for k in rng:
                if i != k:
                    cases.append(
                        ((vidx(i), hidx(j), vidx(k)), _xv(base, i) - _xv(base, k))
                    )
                if j != k:
                    cases.append(
                        ((vidx(i), hidx(j), hidx(k)), _xv(base, j) - _xv(base, k))
                    )
            if i != j:
                diff = _xv(base, i) - _xv(base, j)
                cases.append(((vidx(i), hidx(j), didx), diff))
                cases.append(((vidx(i), vidx(j), didx), diff))
                cases.append(((hidx(i), hidx(j), didx), diff))
    return cases
