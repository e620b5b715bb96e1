"""Tests for chain complexes, the quadratic construction, and bicomplexes.

Homology oracles: random complexes are built as direct sums of elementary
pieces with known homology (see _reference.random_decomposable), then
everything downstream is cross-checked against dense rank computations.
"""

import random

import numpy as np
import pytest

from _reference import ref_betti, ref_rank
from cosseq.f2 import BitMatrix, image_basis, kernel_basis
from cosseq.chains import (
    Bicomplex,
    ChainComplex,
    InvolutiveBicomplex,
    InvolutiveComplex,
    bicomplex_tensor_over_pi,
    build_w,
    direct_sum,
    homology,
    homology_of_quadratic_on_module,
    quadratic_construction,
    suspend,
    tensor,
    tensor_square_with_swap,
    total_filtered,
    truncate_sk,
    vertical_embed,
    w_tensor_pi,
)


def from_dense_dict(dims, dense_d, labels=None):
    d = {}
    for k, mat in dense_d.items():
        rows, cols = dims.get(k - 1, 0), dims.get(k, 0)
        d[k] = BitMatrix.from_dense(np.array(mat, dtype=np.uint8).reshape(rows, cols))
    return ChainComplex(dims, d, labels)


def two_simplex():
    # normalized chains on the standard 2-simplex: 3 vertices, 3 edges, 1 face
    dims = {0: 3, 1: 3, 2: 1}
    d1 = [[1, 1, 0], [1, 0, 1], [0, 1, 1]]  # [01],[02],[12] -> vertex sums
    d2 = [[1], [1], [1]]
    return from_dense_dict(dims, {1: d1, 2: d2}, labels={0: ["0", "1", "2"], 1: ["01", "02", "12"], 2: ["012"]})


def random_complex(rng):
    dims, dense_d, betti = __import__("_reference").random_decomposable(rng)
    return from_dense_dict(dims, dense_d), betti


def test_two_simplex_homology():
    c = two_simplex()
    assert c.homology_dims() == {0: 1}
    h0 = homology(c, 0)
    assert h0.dim == 1
    assert kernel_basis(c.d(1)).dim == 1
    assert image_basis(c.d(1)).dim == 2


def test_homology_matches_reference():
    rng = random.Random(100)
    for _ in range(25):
        c, betti = random_complex(rng)
        assert c.homology_dims() == betti


def test_homology_classes_are_cycles():
    rng = random.Random(101)
    c, _ = random_complex(rng)
    for k in list(c.dims):
        h = c.homology(k)
        for i in range(h.reps.rows):
            v = h.reps.row_dense(i)
            assert not c.d(k).matvec(v).any()


def test_suspend_shifts_homology():
    rng = random.Random(102)
    for _ in range(10):
        c, betti = random_complex(rng)
        s = suspend(c, 3)
        assert s.homology_dims() == {k + 3: v for k, v in betti.items()}
        assert suspend(s, -3).dims == c.dims
        assert all(suspend(s, -3).d(k) == c.d(k) for k in c.dims)


def test_truncate_matches_dense_reference():
    rng = random.Random(103)
    for _ in range(10):
        dims, dense_d, _ = __import__("_reference").random_decomposable(rng)
        c = from_dense_dict(dims, dense_d)
        t = truncate_sk(c, 1)
        assert max(t.dims, default=0) <= 1
        tdims = {k: v for k, v in dims.items() if k <= 1}
        td = {k: m for k, m in dense_d.items() if k <= 1}
        assert t.homology_dims() == ref_betti(tdims, td)


def test_tensor_dims_and_kunneth():
    rng = random.Random(104)
    for _ in range(8):
        a, ba = random_complex(rng)
        b, bb = random_complex(rng)
        ab = tensor(a, b)
        for m in ab.dims:
            assert ab.dims[m] == sum(a.dims.get(i, 0) * b.dims.get(m - i, 0) for i in a.dims)
        conv = {}
        for i, x in ba.items():
            for j, y in bb.items():
                conv[i + j] = conv.get(i + j, 0) + x * y
        assert ab.homology_dims() == {k: v for k, v in conv.items() if v}


def test_tensor_labels_are_pairs():
    a = from_dense_dict({0: 1}, {}, labels={0: ["x"]})
    b = from_dense_dict({2: 2}, {}, labels={2: ["u", "v"]})
    ab = tensor(a, b)
    assert ab.labels(2) == [("x", "u"), ("x", "v")]


def test_direct_sum_adds():
    rng = random.Random(105)
    a, ba = random_complex(rng)
    b, bb = random_complex(rng)
    s = direct_sum(a, b)
    for m in s.dims:
        assert s.dims[m] == a.dims.get(m, 0) + b.dims.get(m, 0)
    want = dict(ba)
    for k, v in bb.items():
        want[k] = want.get(k, 0) + v
    assert s.homology_dims() == {k: v for k, v in want.items() if v}


def test_d_squared_enforced():
    bad = {1: [[1, 0], [0, 1]], 2: [[1, 0], [0, 1]]}
    with pytest.raises(ValueError):
        from_dense_dict({0: 2, 1: 2, 2: 2}, bad)


def test_build_w():
    for n in range(1, 5):
        w = build_w(n)
        assert all(w.complex.dims[i] == 2 for i in range(n + 1))
        for i in range(n + 1):
            s = w.sigma[i]
            assert s @ s == BitMatrix.identity(2)
            if i > 0:
                assert w.complex.d(i) @ s == w.sigma[i - 1] @ w.complex.d(i)
        hd = w.complex.homology_dims()
        assert hd == {0: 1, n: 1} if n > 0 else {0: 2}


def test_involution_must_commute():
    c = from_dense_dict({0: 2, 1: 2}, {1: [[1, 0], [0, 1]]})
    bad_sigma = {
        0: BitMatrix.from_dense(np.array([[0, 1], [1, 0]], dtype=np.uint8)),
        1: BitMatrix.identity(2),
    }
    with pytest.raises(ValueError, match="not equivariant"):
        InvolutiveComplex(c, bad_sigma)


def test_quadratic_point():
    c = from_dense_dict({0: 1}, {})
    for n in range(5):
        q = quadratic_construction(c, n)
        assert q.dims == {i: 1 for i in range(n + 1)}
        assert q.homology_dims() == {i: 1 for i in range(n + 1)}


def test_quadratic_dims_are_convolution():
    rng = random.Random(106)
    c, _ = random_complex(rng)
    sq = tensor(c, c)
    n = 2
    q = quadratic_construction(c, n)
    for m in q.dims:
        assert q.dims[m] == sum(sq.dims.get(m - i, 0) for i in range(n + 1))


def test_quadratic_homology_invariance():
    # dims of H(e^n C) match dims of H(e^n of the homology of C)
    rng = random.Random(107)
    for _ in range(6):
        c, betti = random_complex(rng)
        hc = ChainComplex(betti, {})
        for n in range(3):
            assert quadratic_construction(c, n).homology_dims() == quadratic_construction(hc, n).homology_dims()


def involutive_module(dim, sigma_dense, degree=0):
    c = ChainComplex({degree: dim}, {})
    return InvolutiveComplex(c, {degree: BitMatrix.from_dense(np.array(sigma_dense, dtype=np.uint8))})


def test_module_formula_examples():
    free = involutive_module(2, [[0, 1], [1, 0]])
    trivial = involutive_module(1, [[1]])
    both = involutive_module(3, [[0, 1, 0], [1, 0, 0], [0, 0, 1]])
    for n in range(1, 5):
        assert homology_of_quadratic_on_module(free, n) == {0: 1, n: 1}
        assert homology_of_quadratic_on_module(trivial, n) == {i: 1 for i in range(n + 1)}
        assert homology_of_quadratic_on_module(both, n) == {0: 2, **{i: 1 for i in range(1, n)}, n: 2}
    assert homology_of_quadratic_on_module(free, 0) == {0: 2}


def test_module_formula_matches_chain_route():
    rng = random.Random(108)
    for _ in range(10):
        # random involution: permutation made of swaps and fixed points
        dim = rng.randint(1, 5)
        perm = list(range(dim))
        for i in range(0, dim - 1, 2):
            if rng.random() < 0.5:
                perm[i], perm[i + 1] = perm[i + 1], perm[i]
        sig = [[1 if perm[j] == i else 0 for j in range(dim)] for i in range(dim)]
        deg = rng.randint(-2, 2)
        m = involutive_module(dim, sig, degree=deg)
        for n in range(5):
            chain = w_tensor_pi(build_w(n), m)
            assert chain.homology_dims() == homology_of_quadratic_on_module(m, n)


def test_quadratic_via_w_tensor_pi():
    rng = random.Random(109)
    c, _ = random_complex(rng)
    for n in range(3):
        q1 = quadratic_construction(c, n)
        q2 = w_tensor_pi(build_w(n), tensor_square_with_swap(c))
        assert q1.dims == q2.dims
        assert all(q1.d(k) == q2.d(k) for k in q1.dims)


def test_vertical_embed_total_is_original():
    rng = random.Random(110)
    c, betti = random_complex(rng)
    t = total_filtered(vertical_embed(c))
    assert {m: t.dim(m) for m in t.degrees()} == c.dims
    assert all(t.d(m) == c.d(m) for m in c.dims)
    assert t.homology_dims() == betti


def test_bicomplex_rejects_noncommuting():
    dims = {(0, 0): 1, (0, 1): 1, (-1, 0): 1, (-1, 1): 1}
    one = BitMatrix.identity(1)
    zero = BitMatrix(1, 1)
    dh = {(0, 0): one, (0, 1): one}
    dv = {(0, 1): one, (-1, 1): zero}
    with pytest.raises(ValueError):
        Bicomplex(dims, dh, dv)


def test_bicomplex_tensor_matches_quadratic():
    # embedding C x C vertically and tensoring with sk_n W over pi must agree
    # with the direct quadratic construction after totalization
    rng = random.Random(111)
    for _ in range(5):
        c, _ = random_complex(rng)
        sq = tensor_square_with_swap(c)
        emb = vertical_embed(sq.complex)
        sig = {(0, q): sq.sigma[q] for q in sq.complex.dims}
        ib = InvolutiveBicomplex(emb, sig)
        for n in range(3):
            bic = bicomplex_tensor_over_pi(build_w(n), ib)
            t = total_filtered(bic)
            q = quadratic_construction(c, n)
            assert {m: t.dim(m) for m in t.degrees()} == q.dims
            assert t.homology_dims() == q.homology_dims()


def test_bicomplex_tensor_not_equivariant():
    c = from_dense_dict({0: 1, 1: 2}, {1: [[1, 0]]})
    emb = vertical_embed(c)
    bad = {
        (0, 0): BitMatrix.identity(1),
        (0, 1): BitMatrix.from_dense(np.array([[0, 1], [1, 0]], dtype=np.uint8)),
    }
    with pytest.raises(ValueError, match="not equivariant"):
        InvolutiveBicomplex(emb, bad)


def make_square_bicomplex():
    # two-column bicomplex with commuting identity differentials
    one = BitMatrix.identity(1)
    dims = {(0, 0): 1, (0, 1): 1, (-1, 0): 1, (-1, 1): 1}
    dh = {(0, 0): one, (0, 1): one}
    dv = {(0, 1): one, (-1, 1): one}
    return Bicomplex(dims, dh, dv)


def test_total_filtered_shapes_and_filtration():
    b = make_square_bicomplex()
    t = total_filtered(b)
    assert {m: t.dim(m) for m in t.degrees()} == {-1: 1, 0: 2, 1: 1}
    # filtration is a prefix by ascending column; d preserves it
    assert t.prefix_dim(0, -1) == 1
    assert t.prefix_dim(0, 0) == 2
    for m in t.degrees():
        dm = t.d(m)
        for p, off, size in t.blocks(m):
            pre_tgt = t.prefix_dim(m - 1, p)
            for j in range(off, off + size):
                col = dm.select_columns([j])
                for i in range(pre_tgt, dm.rows):
                    assert col.get(i, 0) == 0
    assert t.homology_dims() == {}


def test_total_filtered_window_truncation():
    b = make_square_bicomplex()
    t = total_filtered(b, window_lo=0)
    assert {m: t.dim(m) for m in t.degrees()} == {0: 1, 1: 1}
    assert not t.exact_left
    assert t.homology_dims() == {}


def test_chain_json_roundtrip():
    c = two_simplex()
    blob = c.to_json()
    back = ChainComplex.from_json(blob)
    assert back.dims == c.dims
    assert all(back.d(k) == c.d(k) for k in c.dims)
    assert back.labels(1) == ["01", "02", "12"]
