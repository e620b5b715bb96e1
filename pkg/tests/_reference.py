"""Plain list-of-lists reference implementations shared by the test modules.

Everything here is deliberately naive: the point is an independent oracle
for the bit-packed code, using the same determinism policy (leftmost pivot
column, topmost pivot row, full reduction, free coordinates zero).
"""

import random


def ref_rref(mat, ncols):
    R = [row[:] for row in mat]
    nrows = len(R)
    pivots = []
    row = 0
    for col in range(ncols):
        sel = None
        for i in range(row, nrows):
            if R[i][col]:
                sel = i
                break
        if sel is None:
            continue
        R[row], R[sel] = R[sel], R[row]
        for i in range(nrows):
            if i != row and R[i][col]:
                R[i] = [a ^ b for a, b in zip(R[i], R[row])]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    return R, pivots


def ref_rank(mat, ncols):
    return len(ref_rref(mat, ncols)[1])


def ref_kernel(mat, ncols):
    R, pivots = ref_rref(mat, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for k, p in enumerate(pivots):
            v[p] = R[k][f]
        basis.append(v)
    return basis


def ref_matmul(a, b, n, k, m):
    return [[sum(a[i][t] * b[t][j] for t in range(k)) & 1 for j in range(m)] for i in range(n)]


def ref_solve(mat, nrows, ncols, b):
    aug = [row[:] + [b[i]] for i, row in enumerate(mat)]
    R, pivots = ref_rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    x = [0] * ncols
    for k, p in enumerate(pivots):
        x[p] = R[k][ncols]
    return x


def ref_inverse(mat, n):
    aug = [mat[i][:] + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    R, pivots = ref_rref(aug, n)
    if len(pivots) < n:
        return None
    return [row[n:] for row in R]


def ref_identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def ref_betti(dims, d):
    """Homology dimensions of a dense chain complex given as dicts."""
    ranks = {}
    for k, mat in d.items():
        rows = dims.get(k - 1, 0)
        cols = dims.get(k, 0)
        if rows and cols:
            ranks[k] = ref_rank(mat, cols)
    out = {}
    for k, n in dims.items():
        b = n - ranks.get(k, 0) - ranks.get(k + 1, 0)
        if b:
            out[k] = b
    return out


def random_invertible(rng: random.Random, n):
    while True:
        m = [[rng.randint(0, 1) for _ in range(n)] for _ in range(n)]
        if ref_rank(m, n) == n:
            return m


def random_decomposable(rng: random.Random, deg_lo=-1, deg_hi=3, max_units=6):
    """A random chain complex with known homology.

    Direct sum of one-generator cycles ("S(k)", contributing 1 to H_k) and
    two-generator acyclic pieces ("D(k)", degrees k and k-1, identity d),
    conjugated by random invertible changes of basis in every degree.
    Returns (dims, dense d by degree, expected homology dims).
    """
    dims = {}
    pieces = []
    betti = {}
    for _ in range(rng.randint(1, max_units)):
        k = rng.randint(deg_lo, deg_hi)
        if rng.random() < 0.4:
            pieces.append(("S", k, dims.get(k, 0)))
            dims[k] = dims.get(k, 0) + 1
            betti[k] = betti.get(k, 0) + 1
        else:
            pieces.append(("D", k, dims.get(k, 0), dims.get(k - 1, 0)))
            dims[k] = dims.get(k, 0) + 1
            dims[k - 1] = dims.get(k - 1, 0) + 1
    d = {k: [[0] * dims[k] for _ in range(dims.get(k - 1, 0))] for k in dims if dims.get(k - 1, 0)}
    for kind, k, *pos in pieces:
        if kind == "D":
            src, dst = pos
            d[k][dst][src] = 1
    # conjugate by random invertible matrices: x' = Q x, d' = Q_{k-1} d Q_k^{-1}
    Q = {k: random_invertible(rng, n) for k, n in dims.items()}
    Qinv = {k: ref_inverse(Q[k], dims[k]) for k in dims}
    for k in list(d):
        n, m = dims[k - 1], dims[k]
        d[k] = ref_matmul(ref_matmul(Q[k - 1], d[k], n, n, m), Qinv[k], n, m, m)
    return dims, d, betti


# Cosimplicial fixtures built from first-principles tuple combinatorics:
# level p of the simplex family is spanned by the increasing vertex tuples
# of {0..p} (degree = length - 1), with the facet-sum differential; vertex
# maps induce the structure maps, killing degenerate images.

import itertools

import numpy as np

from cosseq.chains import ChainComplex, ChainMap
from cosseq.cosimplicial import CosimplicialChainComplex
from cosseq.f2 import BitMatrix


def simplex_tuples(p):
    return {
        size - 1: sorted(itertools.combinations(range(p + 1), size))
        for size in range(1, p + 2)
    }


def ref_delta_level(p):
    tups = simplex_tuples(p)
    index = {k: {t: i for i, t in enumerate(v)} for k, v in tups.items()}
    dims = {k: len(v) for k, v in tups.items()}
    d = {}
    for k in range(1, p + 1):
        entries = []
        for j, t in enumerate(tups[k]):
            for drop in range(len(t)):
                entries.append((index[k - 1][t[:drop] + t[drop + 1 :]], j))
        d[k] = BitMatrix.from_entries(dims[k - 1], dims[k], entries)
    return ChainComplex(dims, d, {k: list(v) for k, v in tups.items()})


def ref_points_level(p):
    return ChainComplex({0: p + 1}, {}, {0: [(v,) for v in range(p + 1)]})


def ref_vertex_chain_map(f, src, tgt):
    """Chain map induced by a vertex map f; degenerate images vanish."""
    t_index = {k: {t: i for i, t in enumerate(tgt.labels(k))} for k in tgt.degrees()}
    mats = {}
    for k in src.degrees():
        entries = []
        for j, t in enumerate(src.labels(k)):
            img = tuple(f(v) for v in t)
            if all(a < b for a, b in zip(img, img[1:])):
                entries.append((t_index[k][img], j))
        mats[k] = BitMatrix.from_entries(tgt.dim(k), src.dim(k), entries)
    return ChainMap(src, tgt, mats)


def _vertex_family(levels):
    p_max = len(levels) - 1
    cofaces = {
        (p, i): ref_vertex_chain_map(lambda v, i=i: v + (v >= i), levels[p - 1], levels[p])
        for p in range(1, p_max + 1)
        for i in range(p + 1)
    }
    codegens = {
        (p, i): ref_vertex_chain_map(lambda v, i=i: v - (v > i), levels[p + 1], levels[p])
        for p in range(p_max)
        for i in range(p + 1)
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def ref_delta_family(p_max):
    return _vertex_family([ref_delta_level(p) for p in range(p_max + 1)])


def ref_points_family(p_max):
    return _vertex_family([ref_points_level(p) for p in range(p_max + 1)])
