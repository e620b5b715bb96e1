"""Tests for the bit-packed F2 linear algebra core.

Every nontrivial routine is checked against a plain list-of-lists reference
implementation that shares the library's determinism policy (leftmost pivot
column, topmost pivot row, full reduction, free coordinates zero).
"""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosseq.f2 import (
    BitMatrix,
    LinearSolver,
    Subquotient,
    Subspace,
    hstack,
    subquotient_induced_map,
    vstack,
)


from _reference import ref_kernel, ref_matmul, ref_rref, ref_solve


@st.composite
def dense_matrices(draw, max_rows=9, max_cols=11):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(0, max_cols))
    rows = [[draw(st.integers(0, 1)) for _ in range(c)] for _ in range(r)]
    return rows, r, c


def as_bm(rows, r, c):
    m = BitMatrix(r, c)
    for i in range(r):
        for j in range(c):
            if rows[i][j]:
                m.set(i, j)
    return m


def dense_of(m):
    return [[int(x) for x in row] for row in m.to_dense()]


@given(dense_matrices())
def test_from_dense_roundtrip(mc):
    rows, r, c = mc
    m = BitMatrix.from_dense(np.array(rows, dtype=np.uint8).reshape(r, c))
    assert m == as_bm(rows, r, c)
    assert dense_of(m) == rows


@given(dense_matrices())
def test_rref_matches_reference(mc):
    rows, r, c = mc
    R, pivots = as_bm(rows, r, c).rref()
    refR, refp = ref_rref(rows, c)
    assert pivots == refp
    assert dense_of(R) == refR


@given(dense_matrices())
def test_rref_idempotent(mc):
    rows, r, c = mc
    R, pivots = as_bm(rows, r, c).rref()
    R2, pivots2 = R.rref()
    assert pivots2 == pivots
    assert R2 == R


@given(dense_matrices())
def test_kernel_matches_reference_and_rank_nullity(mc):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    K = m.kernel_basis()
    assert dense_of(K) == ref_kernel(rows, c)
    assert m.rank() + K.rows == c
    prod = m @ K.transpose()
    assert prod == BitMatrix(r, K.rows)


@given(dense_matrices(), st.integers(0, 2**40))
def test_solve_matches_reference(mc, seed):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    rng = np.random.default_rng(seed)
    b = rng.integers(0, 2, size=r).astype(np.uint8)
    got = m.solve(b)
    want = ref_solve(rows, r, c, [int(x) for x in b])
    if want is None:
        assert got is None
    else:
        assert got is not None
        assert [int(x) for x in got] == want
        assert np.array_equal(m.matvec(got), b)


@given(dense_matrices(), st.data())
def test_solver_batched_rows(mc, data):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    nrhs = data.draw(st.integers(0, 5))
    B = [[data.draw(st.integers(0, 1)) for _ in range(r)] for _ in range(nrhs)]
    solver = LinearSolver(m)
    X, ok = solver.solve_rows(as_bm(B, nrhs, r))
    for i in range(nrhs):
        want = ref_solve(rows, r, c, B[i])
        if want is None:
            assert not ok[i]
        else:
            assert ok[i]
            assert dense_of(X)[i] == want


@given(dense_matrices(), dense_matrices())
def test_matmul_matches_reference(mc1, mc2):
    rows1, r1, c1 = mc1
    rows2, r2, c2 = mc2
    rows2 = [row[:] for row in rows2[: max(r2, 0)]]
    # force compatible shapes by regenerating the second factor
    b = [[rows2[i % r2][j] if r2 else 0 for j in range(c2)] for i in range(c1)]
    got = as_bm(rows1, r1, c1) @ as_bm(b, c1, c2)
    assert dense_of(got) == ref_matmul(rows1, b, r1, c1, c2)


@given(dense_matrices())
def test_matvec_matches_matmul(mc):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    rng = np.random.default_rng(7)
    v = rng.integers(0, 2, size=c).astype(np.uint8)
    got = m.matvec(v)
    want = [sum(rows[i][j] * int(v[j]) for j in range(c)) & 1 for i in range(r)]
    assert [int(x) for x in got] == want


@given(dense_matrices())
def test_transpose(mc):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    t = m.transpose()
    assert (t.rows, t.cols) == (c, r)
    assert dense_of(t) == [[rows[i][j] for i in range(r)] for j in range(c)]
    assert t.transpose() == m


@given(dense_matrices(), st.data())
def test_select_columns_and_rows(mc, data):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    idx = data.draw(st.lists(st.integers(0, c - 1), max_size=2 * c + 1)) if c else []
    sub = m.select_columns(idx)
    assert dense_of(sub) == [[rows[i][j] for j in idx] for i in range(r)]
    ridx = data.draw(st.lists(st.integers(0, r - 1), max_size=2 * r + 1)) if r else []
    subr = m.select_rows(ridx)
    assert dense_of(subr) == [rows[i] for i in ridx]


@given(dense_matrices(), dense_matrices(), st.integers(0, 70), st.integers(0, 5))
def test_paste(mc1, mc2, coff, roff):
    rows1, r1, c1 = mc1
    rows2, r2, c2 = mc2
    big = BitMatrix(r1 + r2 + roff, c1 + c2 + coff + 64)
    inner = as_bm(rows2, r2, c2)
    big.paste(inner, roff, coff)
    want = [[0] * big.cols for _ in range(big.rows)]
    for i in range(r2):
        for j in range(c2):
            want[roff + i][coff + j] = rows2[i][j]
    assert dense_of(big) == want


@given(dense_matrices(), dense_matrices())
def test_stacking(mc1, mc2):
    rows1, r1, c1 = mc1
    rows2, r2, c2 = mc2
    a = as_bm(rows1, r1, c1)
    b2 = [[rows2[i % r2][j % c2] if r2 and c2 else 0 for j in range(c1)] for i in range(r2)]
    b = as_bm(b2, r2, c1)
    v = vstack([a, b])
    assert dense_of(v) == rows1 + b2
    h = hstack(a, as_bm([[1] * 3 for _ in range(r1)], r1, 3))
    assert dense_of(h) == [row + [1, 1, 1] for row in rows1]


@given(dense_matrices())
def test_json_roundtrip(mc):
    rows, r, c = mc
    m = as_bm(rows, r, c)
    blob = json.dumps(m.to_json())
    back = BitMatrix.from_json(json.loads(blob))
    assert back == m


def test_from_entries_duplicates_cancel():
    m = BitMatrix.from_entries(2, 3, [(0, 1), (0, 1), (1, 2)])
    assert dense_of(m) == [[0, 0, 0], [0, 0, 1]]


def test_identity_and_get_set():
    m = BitMatrix.identity(70)
    assert m.rank() == 70
    assert m.get(69, 69) == 1 and m.get(69, 68) == 0
    m.set(69, 68)
    m.set(69, 69, 0)
    assert m.get(69, 68) == 1 and m.get(69, 69) == 0


@given(dense_matrices())
def test_subspace_membership_and_coords(mc):
    rows, r, c = mc
    sp = Subspace.from_rows(as_bm(rows, r, c))
    assert sp.dim == as_bm(rows, r, c).rank()
    rng = np.random.default_rng(3)
    for _ in range(3):
        coeffs = rng.integers(0, 2, size=r)
        v = np.zeros(c, dtype=np.uint8)
        for i in range(r):
            if coeffs[i]:
                v ^= np.array(rows[i], dtype=np.uint8)
        assert sp.contains(v)
        assert not np.any(sp.reduce(v))
        coords = sp.coords(v)
        back = np.zeros(c, dtype=np.uint8)
        for k in range(sp.dim):
            if coords[k]:
                back ^= sp.basis.to_dense()[k]
        assert np.array_equal(back, v)


def test_subspace_reduce_nonmember():
    sp = Subspace.from_rows(BitMatrix.from_dense(np.array([[1, 1, 0]], dtype=np.uint8)))
    resid = sp.reduce(np.array([1, 0, 1], dtype=np.uint8))
    assert np.array_equal(resid, np.array([0, 1, 1], dtype=np.uint8))
    assert not sp.contains(np.array([1, 0, 1], dtype=np.uint8))


@given(dense_matrices(), st.data())
def test_subquotient_dims_and_coords(mc, data):
    rows, r, c = mc
    num = Subspace.from_rows(as_bm(rows, r, c))
    # denominator: span of random combinations of the numerator rows
    ncomb = data.draw(st.integers(0, r))
    combos = []
    for _ in range(ncomb):
        v = [0] * c
        for i in range(r):
            if data.draw(st.integers(0, 1)):
                v = [a ^ b for a, b in zip(v, rows[i])]
        combos.append(v)
    den = Subspace.from_rows(as_bm(combos, ncomb, c))
    q = Subquotient(num, den)
    assert q.dim == num.dim - den.dim
    assert q.reps.rows == q.dim
    stacked = vstack([q.reps, den.basis])
    assert stacked.rank() == num.dim
    for i in range(q.dim):
        coords = q.class_coords(q.reps.to_dense()[i])
        want = np.zeros(q.dim, dtype=np.uint8)
        want[i] = 1
        assert np.array_equal(coords, want)
    if q.dim and den.dim:
        moved = q.reps.to_dense()[0] ^ den.basis.to_dense()[0]
        assert np.array_equal(q.class_coords(moved), q.class_coords(q.reps.to_dense()[0]))


def test_subquotient_rejects_non_nested():
    num = Subspace.from_rows(BitMatrix.from_dense(np.array([[1, 0]], dtype=np.uint8)))
    den = Subspace.from_rows(BitMatrix.from_dense(np.array([[0, 1]], dtype=np.uint8)))
    with pytest.raises(ValueError):
        Subquotient(num, den)


def test_class_coords_rejects_outsider():
    num = Subspace.from_rows(BitMatrix.from_dense(np.array([[1, 1, 0]], dtype=np.uint8)))
    q = Subquotient(num, Subspace.zero(3))
    with pytest.raises(ValueError):
        q.class_coords(np.array([0, 0, 1], dtype=np.uint8))


def test_induced_map_simple():
    # quotient map F2^2/<e1+e2> on both sides, ambient map swapping coordinates
    num = Subspace.from_rows(BitMatrix.identity(2))
    den = Subspace.from_rows(BitMatrix.from_dense(np.array([[1, 1]], dtype=np.uint8)))
    q = Subquotient(num, den)
    swap = BitMatrix.from_dense(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    ind = subquotient_induced_map(swap, q, q)
    assert (ind.rows, ind.cols) == (1, 1)
    assert ind.get(0, 0) == 1


def test_induced_map_not_filtered():
    num = Subspace.from_rows(BitMatrix.identity(2))
    src = Subquotient(num, Subspace.from_rows(BitMatrix.from_dense(np.array([[0, 1]], dtype=np.uint8))))
    tgt = Subquotient(num, Subspace.zero(2))
    ident = BitMatrix.identity(2)
    with pytest.raises(ValueError, match="not filtered"):
        subquotient_induced_map(ident, src, tgt)


@given(dense_matrices(), st.data())
def test_induced_map_commutes(mc, data):
    rows, r, c = mc
    num = Subspace.from_rows(as_bm(rows, r, c))
    q = Subquotient(num, Subspace.zero(c))
    # target: image of the numerator under a random map, no denominator
    d = data.draw(st.integers(0, 6))
    mat = [[data.draw(st.integers(0, 1)) for _ in range(c)] for _ in range(d)]
    f = as_bm(mat, d, c)
    imgs = (num.basis @ f.transpose()) if num.dim else BitMatrix(0, d)
    tgt = Subquotient(Subspace.from_rows(imgs), Subspace.zero(d))
    ind = subquotient_induced_map(f, q, tgt)
    for i in range(q.dim):
        v = q.reps.to_dense()[i]
        lhs = tgt.class_coords(f.matvec(v))
        rhs = ind.matvec(q.class_coords(v))
        assert np.array_equal(lhs, rhs)


def test_empty_shapes():
    for r, c in [(0, 0), (0, 5), (5, 0)]:
        m = BitMatrix(r, c)
        R, piv = m.rref()
        assert piv == []
        assert m.kernel_basis().rows == c
        assert m.rank() == 0
        assert m.transpose().rows == c
        assert BitMatrix.from_json(m.to_json()) == m
    assert BitMatrix(0, 4).solve(np.zeros(0, dtype=np.uint8)) is not None


def test_large_smoke():
    rng = np.random.default_rng(12345)
    dense = rng.integers(0, 2, size=(900, 1000), dtype=np.uint8)
    m = BitMatrix.from_dense(dense)
    K = m.kernel_basis()
    assert m.rank() + K.rows == 1000
    assert m.rank() > 850
    assert (m @ K.transpose()) == BitMatrix(900, K.rows)
    x = rng.integers(0, 2, size=1000).astype(np.uint8)
    b = m.matvec(x)
    x2 = m.solve(b)
    assert np.array_equal(m.matvec(x2), b)
