"""Chain complexes over F2, quadratic constructions, and bicomplexes.

Gradings are integers and may be negative.  Differentials lower degree by
one and are stored in column convention (see f2).  Every constructor
verifies its stated compatibilities (d squared, involutions, commuting
squares), so downstream code can rely on them without re-checking.

The quadratic construction of a complex C at height n is the complex
sk_n W tensor_pi (C tensor C), where W is the standard free resolution of
F2 over F2[pi] for the order-two group pi, realized on the basis
e_i tensor x tensor y using freeness of W.  Bicomplexes are left-plane
(columns p <= 0), with d_h: (p,q) -> (p-1,q) and d_v: (p,q) -> (p,q-1).
"""

from __future__ import annotations

import numpy as np

from .f2 import (
    BitMatrix,
    Subquotient,
    Subspace,
    image_basis,
    kernel_basis,
    kron,
    subquotient_induced_map,
)


def label_text(lab) -> str:
    """Canonical printable form of a structured generator label."""
    if isinstance(lab, (set, frozenset)):
        return "{" + ",".join(str(x) for x in sorted(lab)) + "}"
    if isinstance(lab, tuple):
        return "(" + ",".join(label_text(x) for x in lab) + ")"
    return str(lab)


class ChainComplex:
    """A chain complex over F2 keyed by integer degree.

    dims maps a degree to the rank of that level (only nonzero levels are
    stored); the differential in degree k is the matrix of d: C_k -> C_{k-1};
    labels name the basis of each level and default to 0..dim-1.
    """

    __slots__ = ("dims", "_d", "_labels", "_ranks")

    def __init__(self, dims, d=None, labels=None, check=True):
        self.dims = {int(k): int(n) for k, n in dims.items() if int(n)}
        self._d = {}
        for k, mat in (d or {}).items():
            k = int(k)
            if mat is not None and mat.rows and mat.cols:
                self._d[k] = mat
        self._labels = {}
        for k, labs in (labels or {}).items():
            k = int(k)
            if self.dims.get(k):
                self._labels[k] = list(labs)
        self._ranks = {}
        if check:
            self._validate()

    def _validate(self) -> None:
        for k, mat in self._d.items():
            want = (self.dims.get(k - 1, 0), self.dims.get(k, 0))
            if (mat.rows, mat.cols) != want:
                raise ValueError(f"differential at degree {k} has shape {(mat.rows, mat.cols)}, expected {want}")
        for k, labs in self._labels.items():
            if len(labs) != self.dims[k]:
                raise ValueError(f"label count mismatch at degree {k}")
        for k in self._d:
            if (k - 1) in self._d:
                prod = self._d[k - 1] @ self._d[k]
                if not prod.is_zero():
                    raise ValueError(f"d squared is nonzero from degree {k}")

    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    def degrees(self) -> list[int]:
        return sorted(self.dims)

    def support(self) -> tuple[int, int] | None:
        if not self.dims:
            return None
        return min(self.dims), max(self.dims)

    def d(self, k: int) -> BitMatrix:
        mat = self._d.get(k)
        if mat is None:
            return BitMatrix(self.dims.get(k - 1, 0), self.dims.get(k, 0))
        return mat

    def labels(self, k: int) -> list:
        if k in self._labels:
            return self._labels[k]
        return list(range(self.dims.get(k, 0)))

    def _rank_d(self, k: int) -> int:
        if k not in self._ranks:
            mat = self._d.get(k)
            self._ranks[k] = mat.rank() if mat is not None else 0
        return self._ranks[k]

    def homology(self, k: int) -> Subquotient:
        """ker d_k / im d_{k+1} with deterministic coset representatives."""
        num = kernel_basis(self.d(k))
        den = image_basis(self.d(k + 1))
        return Subquotient(num, den)

    def homology_dim(self, k: int) -> int:
        return self.dim(k) - self._rank_d(k) - self._rank_d(k + 1)

    def homology_dims(self) -> dict[int, int]:
        out = {}
        for k in self.dims:
            h = self.homology_dim(k)
            if h:
                out[k] = h
        return out

    def to_json(self) -> dict:
        return {
            "degrees": {str(k): n for k, n in sorted(self.dims.items())},
            "d": {str(k): m.to_json() for k, m in sorted(self._d.items())},
            "labels": {str(k): [label_text(x) for x in self.labels(k)] for k in sorted(self.dims)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainComplex":
        dims = {int(k): n for k, n in obj.get("degrees", {}).items()}
        d = {int(k): BitMatrix.from_json(m) for k, m in obj.get("d", {}).items()}
        labels = {int(k): list(v) for k, v in obj.get("labels", {}).items()}
        return cls(dims, d, labels)


def homology(c: ChainComplex, k: int) -> Subquotient:
    return c.homology(k)


class ChainMap:
    """A degreewise linear map between chain complexes commuting with d."""

    __slots__ = ("source", "target", "_mats")

    def __init__(self, source: ChainComplex, target: ChainComplex, mats, check=True):
        self.source = source
        self.target = target
        self._mats = {}
        for k, m in mats.items():
            k = int(k)
            if m is not None and m.rows and m.cols:
                self._mats[k] = m
        if check:
            self._validate()

    def _validate(self) -> None:
        for k, m in self._mats.items():
            want = (self.target.dim(k), self.source.dim(k))
            if (m.rows, m.cols) != want:
                raise ValueError(f"component at degree {k} has shape {(m.rows, m.cols)}, expected {want}")
        for k in self.source.dims:
            left = self.target.d(k) @ self.mat(k)
            right = self.mat(k - 1) @ self.source.d(k)
            if left != right:
                raise ValueError(f"map does not commute with d at degree {k}")

    def mat(self, k: int) -> BitMatrix:
        m = self._mats.get(k)
        return m if m is not None else BitMatrix(self.target.dim(k), self.source.dim(k))

    def apply(self, k: int, vec: np.ndarray) -> np.ndarray:
        return self.mat(k).matvec(vec)

    @classmethod
    def identity(cls, c: ChainComplex) -> "ChainMap":
        return cls(c, c, {k: BitMatrix.identity(n) for k, n in c.dims.items()}, check=False)

    @classmethod
    def zero(cls, source: ChainComplex, target: ChainComplex) -> "ChainMap":
        return cls(source, target, {}, check=False)

    def compose(self, inner: "ChainMap") -> "ChainMap":
        """self after inner."""
        mats = {}
        for k in inner.source.dims:
            if self.target.dim(k) and inner.source.dim(k):
                mats[k] = self.mat(k) @ inner.mat(k)
        return ChainMap(inner.source, self.target, mats, check=False)

    def __xor__(self, other: "ChainMap") -> "ChainMap":
        mats = {}
        for k in set(self._mats) | set(other._mats):
            mats[k] = self.mat(k) ^ other.mat(k)
        return ChainMap(self.source, self.target, mats, check=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChainMap):
            return False
        for k in set(self.source.dims) | set(other.source.dims):
            if self.mat(k) != other.mat(k):
                return False
        return True

    def equal_mats(self, other: "ChainMap") -> bool:
        return self == other


def tensor_map(f: ChainMap, g: ChainMap, source: ChainComplex, target: ChainComplex) -> ChainMap:
    """f tensor g as a map of already-built tensor product complexes."""
    mats = {}
    f_cols = {i: _column_supports(f.mat(i)) for i in f.source.dims}
    g_cols = {j: _column_supports(g.mat(j)) for j in g.source.dims}
    for m in source.dims:
        if not target.dim(m):
            continue
        src_lay = _tensor_layout(f.source, g.source, m)
        tgt_index = {trip: pos for pos, trip in enumerate(_tensor_layout(f.target, g.target, m))}
        entries = []
        for pos, (i, xi, yi) in enumerate(src_lay):
            for ti in f_cols[i][xi]:
                for tj in g_cols[m - i][yi]:
                    entries.append((tgt_index[(i, int(ti), int(tj))], pos))
        mats[m] = BitMatrix.from_entries(target.dim(m), source.dim(m), entries)
    return ChainMap(source, target, mats, check=False)


def sum_map(f: ChainMap, g: ChainMap, source: ChainComplex, target: ChainComplex) -> ChainMap:
    """f plus g as a map of already-built direct sum complexes."""
    mats = {}
    for m in source.dims:
        if not target.dim(m):
            continue
        mat = BitMatrix(target.dim(m), source.dim(m))
        mat.paste(f.mat(m), 0, 0)
        mat.paste(g.mat(m), f.target.dim(m), f.source.dim(m))
        mats[m] = mat
    return ChainMap(source, target, mats, check=False)


def _w_block_offsets(top: int, dims_of, deg: int) -> dict[int, int]:
    """Offsets of the e_i blocks in degree deg of a height-top construction."""
    out = {}
    off = 0
    for i in range(top + 1):
        sz = dims_of(deg - i)
        if sz:
            out[i] = off
            off += sz
    return out


def quadratic_map(f: ChainMap, n: int, source: ChainComplex, target: ChainComplex) -> ChainMap:
    """The map e_i ten x ten y -> e_i ten f(x) ten f(y) on quadratic constructions."""
    src_sq = tensor(f.source, f.source)
    tgt_sq = tensor(f.target, f.target)
    tf = tensor_map(f, f, src_sq, tgt_sq)
    mats = {}
    for deg in source.dims:
        if not target.dim(deg):
            continue
        src_off = _w_block_offsets(n, src_sq.dim, deg)
        tgt_off = _w_block_offsets(n, tgt_sq.dim, deg)
        mat = BitMatrix(target.dim(deg), source.dim(deg))
        for i, off in src_off.items():
            if i in tgt_off:
                mat.paste(tf.mat(deg - i), tgt_off[i], off)
        mats[deg] = mat
    return ChainMap(source, target, mats, check=False)


def suspend(c: ChainComplex, k: int) -> ChainComplex:
    """Shift all degrees up by k (no signs in characteristic 2)."""
    return ChainComplex(
        {m + k: n for m, n in c.dims.items()},
        {m + k: mat for m, mat in c._d.items()},
        {m + k: c.labels(m) for m in c.dims},
        check=False,
    )


def truncate_sk(c: ChainComplex, t: int) -> ChainComplex:
    """Brutal truncation: zero out all degrees above t."""
    return ChainComplex(
        {m: n for m, n in c.dims.items() if m <= t},
        {m: mat for m, mat in c._d.items() if m <= t},
        {m: c.labels(m) for m in c.dims if m <= t},
        check=False,
    )


def _tensor_layout(a: ChainComplex, b: ChainComplex, m: int) -> list[tuple[int, int, int]]:
    """Basis of (a tensor b)_m as triples (i, x-index, y-index), i ascending."""
    out = []
    for i in sorted(a.dims):
        nb = b.dims.get(m - i, 0)
        if nb:
            for xi in range(a.dims[i]):
                for yi in range(nb):
                    out.append((i, xi, yi))
    return out


def _column_supports(mat: BitMatrix) -> list[np.ndarray]:
    dense = mat.to_dense()
    return [np.nonzero(dense[:, j])[0] for j in range(mat.cols)]


def tensor(a: ChainComplex, b: ChainComplex) -> ChainComplex:
    """Tensor product with d(x ten y) = dx ten y + x ten dy; labels are pairs."""
    degrees = sorted({i + j for i in a.dims for j in b.dims})
    layouts = {m: _tensor_layout(a, b, m) for m in degrees}
    index = {m: {trip: pos for pos, trip in enumerate(lay)} for m, lay in layouts.items()}
    dims = {m: len(lay) for m, lay in layouts.items() if lay}
    a_cols = {i: _column_supports(a.d(i)) for i in a.dims}
    b_cols = {j: _column_supports(b.d(j)) for j in b.dims}
    d = {}
    for m in degrees:
        if not dims.get(m) or not dims.get(m - 1):
            continue
        entries = []
        tgt = index[m - 1]
        for pos, (i, xi, yi) in enumerate(layouts[m]):
            for ti in a_cols[i][xi]:
                entries.append((tgt[(i - 1, int(ti), yi)], pos))
            for tj in b_cols[m - i][yi]:
                entries.append((tgt[(i, xi, int(tj))], pos))
        d[m] = BitMatrix.from_entries(dims[m - 1], dims[m], entries)
    labels = {
        m: [(a.labels(i)[xi], b.labels(m - i)[yi]) for (i, xi, yi) in layouts[m]]
        for m in dims
    }
    return ChainComplex(dims, d, labels)


def direct_sum(a: ChainComplex, b: ChainComplex) -> ChainComplex:
    dims = {}
    d = {}
    labels = {}
    for m in sorted(set(a.dims) | set(b.dims)):
        na, nb = a.dim(m), b.dim(m)
        dims[m] = na + nb
        labels[m] = [(0, x) for x in a.labels(m)] + [(1, y) for y in b.labels(m)]
    for m in dims:
        if dims.get(m - 1):
            mat = BitMatrix(a.dim(m - 1) + b.dim(m - 1), dims[m])
            mat.paste(a.d(m), 0, 0)
            mat.paste(b.d(m), a.dim(m - 1), a.dim(m))
            d[m] = mat
    return ChainComplex(dims, d, labels, check=False)


class InvolutiveComplex:
    """A chain complex with a degreewise involution commuting with d."""

    __slots__ = ("complex", "sigma")

    def __init__(self, complex: ChainComplex, sigma: dict[int, BitMatrix], check=True):
        self.complex = complex
        self.sigma = {int(k): m for k, m in sigma.items()}
        if check:
            self._validate()

    def _validate(self) -> None:
        c = self.complex
        for k, n in c.dims.items():
            s = self.sigma.get(k)
            if s is None or (s.rows, s.cols) != (n, n):
                raise ValueError(f"involution missing or misshapen at degree {k}")
            if s @ s != BitMatrix.identity(n):
                raise ValueError(f"map at degree {k} is not an involution")
        for k in c.dims:
            if c.dims.get(k - 1):
                left = self.sigma[k - 1] @ c.d(k)
                right = c.d(k) @ self.sigma[k]
                if left != right:
                    raise ValueError(f"involution not equivariant with d at degree {k}")


def build_w(n: int) -> InvolutiveComplex:
    """Degrees 0..n of the standard free involutive resolution.

    Each level has basis {e_i, sigma e_i}; d(e_i) = (1 + sigma) e_{i-1};
    the involution swaps the two basis vectors.
    """
    if n < 0:
        raise ValueError("height must be nonnegative")
    dims = {i: 2 for i in range(n + 1)}
    dmat = BitMatrix.from_dense(np.array([[1, 1], [1, 1]], dtype=np.uint8))
    swap = BitMatrix.from_dense(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    d = {i: dmat for i in range(1, n + 1)}
    labels = {i: [("e", i), ("se", i)] for i in range(n + 1)}
    return InvolutiveComplex(ChainComplex(dims, d, labels), {i: swap for i in range(n + 1)})


def _w_height(w: InvolutiveComplex) -> int:
    """Check that w came from build_w and return its top degree."""
    c = w.complex
    degs = c.degrees()
    if not degs or degs != list(range(degs[-1] + 1)) or any(c.dims[i] != 2 for i in degs):
        raise ValueError("expected a truncation of the standard free involutive resolution")
    dmat = BitMatrix.from_dense(np.array([[1, 1], [1, 1]], dtype=np.uint8))
    swap = BitMatrix.from_dense(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    for i in degs:
        if w.sigma[i] != swap or (i > 0 and c.d(i) != dmat):
            raise ValueError("expected a truncation of the standard free involutive resolution")
    return degs[-1]


def tensor_square_with_swap(c: ChainComplex) -> InvolutiveComplex:
    """C tensor C with the transposition involution (no signs, char 2)."""
    sq = tensor(c, c)
    sigma = {}
    for m in sq.dims:
        lay = _tensor_layout(c, c, m)
        index = {trip: pos for pos, trip in enumerate(lay)}
        entries = [(index[(m - i, yi, xi)], pos) for pos, (i, xi, yi) in enumerate(lay)]
        sigma[m] = BitMatrix.from_entries(len(lay), len(lay), entries)
    return InvolutiveComplex(sq, sigma)


def w_tensor_pi(w: InvolutiveComplex, m: InvolutiveComplex) -> ChainComplex:
    """sk W tensor_pi M on the basis e_i tensor x.

    d(e_i ten x) = e_{i-1} ten (x + sigma x) + e_i ten dx, the first term
    dropped at i = 0.
    """
    top = _w_height(w)
    mc = m.complex
    blocks: dict[int, dict[int, int]] = {}
    dims: dict[int, int] = {}
    labels: dict[int, list] = {}
    for deg in sorted({i + k for i in range(top + 1) for k in mc.dims}):
        off = 0
        blocks[deg] = {}
        labs = []
        for i in range(top + 1):
            sz = mc.dim(deg - i)
            if sz:
                blocks[deg][i] = off
                off += sz
                labs.extend(("e", i, lab) for lab in mc.labels(deg - i))
        if off:
            dims[deg] = off
            labels[deg] = labs
    d: dict[int, BitMatrix] = {}
    for deg in dims:
        if not dims.get(deg - 1):
            continue
        mat = BitMatrix(dims[deg - 1], dims[deg])
        for i, off in blocks[deg].items():
            mdeg = deg - i
            if i > 0:
                one_plus = m.sigma[mdeg] ^ BitMatrix.identity(mc.dim(mdeg))
                mat.paste(one_plus, blocks[deg - 1][i - 1], off)
            if mc.dim(mdeg - 1):
                mat.paste(mc.d(mdeg), blocks[deg - 1][i], off)
        d[deg] = mat
    return ChainComplex(dims, d, labels)


def quadratic_construction(c: ChainComplex, n: int) -> ChainComplex:
    """sk_n W tensor_pi (C tensor C) on the basis e_i tensor x tensor y."""
    return w_tensor_pi(build_w(n), tensor_square_with_swap(c))


def homology_of_quadratic_on_module(m: InvolutiveComplex, n: int) -> dict[int, int]:
    """Homology dims of sk_n W tensor_pi M for M concentrated in one degree.

    Closed form: coker(1+sigma) at the bottom, ker(1+sigma)/im(1+sigma)
    strictly inside, ker(1+sigma) at the top.
    """
    mc = m.complex
    if len(mc.dims) != 1:
        raise ValueError("module must be concentrated in a single degree")
    (t0, dim), = mc.dims.items()
    if n == 0:
        return {t0: dim}
    rho = (m.sigma[t0] ^ BitMatrix.identity(dim)).rank()
    out = {t0: dim - rho, t0 + n: dim - rho}
    for i in range(1, n):
        out[t0 + i] = dim - 2 * rho
    return {k: v for k, v in sorted(out.items()) if v}


class Bicomplex:
    """Left-plane bicomplex over F2.

    Cells are keyed (p, q) with column p <= 0; d_h maps (p,q) to (p-1,q)
    and d_v maps (p,q) to (p,q-1); the two differentials square to zero and
    commute (characteristic 2, so the total differential squares to zero).
    exact_left records that the bicomplex is not a truncation: there is no
    support to the left of the stored columns.
    """

    __slots__ = ("dims", "_dh", "_dv", "_labels", "exact_left")

    def __init__(self, dims, dh=None, dv=None, labels=None, exact_left=True, check=True):
        self.dims = {(int(p), int(q)): int(n) for (p, q), n in dims.items() if int(n)}
        for p, q in self.dims:
            if p > 0:
                raise ValueError("bicomplex columns must satisfy p <= 0")
        self._dh = {k: m for k, m in (dh or {}).items() if m is not None and m.rows and m.cols}
        self._dv = {k: m for k, m in (dv or {}).items() if m is not None and m.rows and m.cols}
        self._labels = {k: list(v) for k, v in (labels or {}).items() if k in self.dims}
        self.exact_left = bool(exact_left)
        if check:
            self._validate()

    def dim(self, p: int, q: int) -> int:
        return self.dims.get((p, q), 0)

    def dh(self, p: int, q: int) -> BitMatrix:
        mat = self._dh.get((p, q))
        return mat if mat is not None else BitMatrix(self.dim(p - 1, q), self.dim(p, q))

    def dv(self, p: int, q: int) -> BitMatrix:
        mat = self._dv.get((p, q))
        return mat if mat is not None else BitMatrix(self.dim(p, q - 1), self.dim(p, q))

    def labels(self, p: int, q: int) -> list:
        key = (p, q)
        if key in self._labels:
            return self._labels[key]
        return list(range(self.dim(p, q)))

    def cells(self) -> list[tuple[int, int]]:
        return sorted(self.dims)

    @property
    def p_min(self) -> int:
        return min((p for p, _ in self.dims), default=0)

    def _validate(self) -> None:
        for (p, q), mat in self._dh.items():
            want = (self.dim(p - 1, q), self.dim(p, q))
            if (mat.rows, mat.cols) != want:
                raise ValueError(f"d_h at {(p, q)} has shape {(mat.rows, mat.cols)}, expected {want}")
        for (p, q), mat in self._dv.items():
            want = (self.dim(p, q - 1), self.dim(p, q))
            if (mat.rows, mat.cols) != want:
                raise ValueError(f"d_v at {(p, q)} has shape {(mat.rows, mat.cols)}, expected {want}")
        for p, q in self.dims:
            if self.dim(p - 2, q) and self.dim(p - 1, q):
                if not (self.dh(p - 1, q) @ self.dh(p, q)).is_zero():
                    raise ValueError(f"d_h squared nonzero at {(p, q)}")
            if self.dim(p, q - 2) and self.dim(p, q - 1):
                if not (self.dv(p, q - 1) @ self.dv(p, q)).is_zero():
                    raise ValueError(f"d_v squared nonzero at {(p, q)}")
            if self.dim(p - 1, q - 1) and (self.dim(p - 1, q) or self.dim(p, q - 1)):
                left = self.dv(p - 1, q) @ self.dh(p, q)
                right = self.dh(p, q - 1) @ self.dv(p, q)
                if left != right:
                    raise ValueError(f"d_h and d_v do not commute at {(p, q)}")

    def to_json(self) -> dict:
        key = lambda p, q: f"({p},{q})"
        return {
            "degrees": {key(p, q): n for (p, q), n in sorted(self.dims.items())},
            "d_h": {key(p, q): m.to_json() for (p, q), m in sorted(self._dh.items())},
            "d_v": {key(p, q): m.to_json() for (p, q), m in sorted(self._dv.items())},
            "labels": {key(p, q): [label_text(x) for x in self.labels(p, q)] for (p, q) in sorted(self.dims)},
            "exact_left": self.exact_left,
        }


class InvolutiveBicomplex:
    """A bicomplex with a column-preserving involution commuting with both d's."""

    __slots__ = ("bicomplex", "sigma")

    def __init__(self, bicomplex: Bicomplex, sigma: dict[tuple[int, int], BitMatrix], check=True):
        self.bicomplex = bicomplex
        self.sigma = dict(sigma)
        if check:
            self._validate()

    def _validate(self) -> None:
        b = self.bicomplex
        for cell, n in b.dims.items():
            s = self.sigma.get(cell)
            if s is None or (s.rows, s.cols) != (n, n):
                raise ValueError(f"involution missing or misshapen at {cell}")
            if s @ s != BitMatrix.identity(n):
                raise ValueError(f"map at {cell} is not an involution")
        for p, q in b.dims:
            if b.dim(p - 1, q):
                if self.sigma[(p - 1, q)] @ b.dh(p, q) != b.dh(p, q) @ self.sigma[(p, q)]:
                    raise ValueError(f"involution not equivariant with d_h at {(p, q)}")
            if b.dim(p, q - 1):
                if self.sigma[(p, q - 1)] @ b.dv(p, q) != b.dv(p, q) @ self.sigma[(p, q)]:
                    raise ValueError(f"involution not equivariant with d_v at {(p, q)}")


def vertical_embed(c: ChainComplex) -> Bicomplex:
    """The complex placed in column 0 of a bicomplex."""
    return Bicomplex(
        {(0, q): n for q, n in c.dims.items()},
        dh={},
        dv={(0, q): c._d[q] for q in c._d},
        labels={(0, q): c.labels(q) for q in c.dims},
        check=False,
    )


def bicomplex_tensor_over_pi(w: InvolutiveComplex, b: InvolutiveBicomplex) -> Bicomplex:
    """sk W tensor_pi B for an involutive bicomplex B, on the basis e_i ten z.

    e_i raises the vertical degree by i; the vertical differential picks up
    the e_{i-1} ten (1 + sigma) z term, the horizontal one is unchanged.
    """
    top = _w_height(w)
    bb = b.bicomplex
    blocks: dict[tuple[int, int], dict[int, int]] = {}
    dims: dict[tuple[int, int], int] = {}
    labels: dict[tuple[int, int], list] = {}
    for (p, qb) in bb.dims:
        for i in range(top + 1):
            blocks.setdefault((p, qb + i), {})
    for cell in blocks:
        p, q = cell
        off = 0
        labs = []
        for i in range(top + 1):
            sz = bb.dim(p, q - i)
            if sz:
                blocks[cell][i] = off
                off += sz
                labs.extend(("e", i, lab) for lab in bb.labels(p, q - i))
        if off:
            dims[cell] = off
            labels[cell] = labs
    dh: dict[tuple[int, int], BitMatrix] = {}
    dv: dict[tuple[int, int], BitMatrix] = {}
    for cell, n in dims.items():
        p, q = cell
        if dims.get((p - 1, q)):
            mat = BitMatrix(dims[(p - 1, q)], n)
            for i, off in blocks[cell].items():
                if bb.dim(p - 1, q - i):
                    mat.paste(bb.dh(p, q - i), blocks[(p - 1, q)][i], off)
            dh[cell] = mat
        if dims.get((p, q - 1)):
            mat = BitMatrix(dims[(p, q - 1)], n)
            for i, off in blocks[cell].items():
                sz = bb.dim(p, q - i)
                if i > 0:
                    one_plus = b.sigma[(p, q - i)] ^ BitMatrix.identity(sz)
                    mat.paste(one_plus, blocks[(p, q - 1)][i - 1], off)
                if bb.dim(p, q - i - 1):
                    mat.paste(bb.dv(p, q - i), blocks[(p, q - 1)][i], off)
            dv[cell] = mat
    return Bicomplex(dims, dh, dv, labels, exact_left=bb.exact_left)


def column_complex(b: Bicomplex, p: int) -> ChainComplex:
    """Column p of a bicomplex as a chain complex under d_v."""
    dims = {q: n for (pp, q), n in b.dims.items() if pp == p}
    d = {q: b.dv(p, q) for q in dims if b.dim(p, q - 1)}
    labels = {q: b.labels(p, q) for q in dims}
    return ChainComplex(dims, d, labels, check=False)


def columnwise_homology(b: Bicomplex) -> tuple[dict, dict]:
    """Vertical homology of every cell, with the maps induced by d_h.

    Returns (hom, maps): hom[(p, q)] is the homology Subquotient of column
    p in degree q, and maps[(p, q)] the induced matrix into hom[(p-1, q)],
    stored only where both ends are nonzero.
    """
    hom: dict[tuple[int, int], Subquotient] = {}
    cols = {}
    for p in sorted({pp for pp, _ in b.dims}):
        col = column_complex(b, p)
        cols[p] = col
        for q in col.dims:
            hom[(p, q)] = col.homology(q)
    maps: dict[tuple[int, int], BitMatrix] = {}
    for (p, q), sq in hom.items():
        dst = hom.get((p - 1, q))
        if dst is not None and sq.dim and dst.dim:
            maps[(p, q)] = subquotient_induced_map(b.dh(p, q), sq, dst)
    return hom, maps


class BicomplexTensor:
    """Tensor product of two left-plane bicomplexes, with its block layout.

    The cell at (P, Q) is the sum over p1+p2 = P, q1+q2 = Q of the blocks
    A(p1,q1) tensor B(p2,q2), ordered by (p1, q1) ascending; within a block
    the pair (ia, ib) sits at ia * dim B + ib.  Both differentials act as
    d ten 1 + 1 ten d (no signs in characteristic 2).
    """

    __slots__ = ("left", "right", "bicomplex", "_layout")

    def __init__(self, left: Bicomplex, right: Bicomplex):
        self.left = left
        self.right = right
        pairs: dict[tuple[int, int], list] = {}
        for (p1, q1) in left.dims:
            for (p2, q2) in right.dims:
                pairs.setdefault((p1 + p2, q1 + q2), []).append(((p1, q1), (p2, q2)))
        dims = {}
        labels = {}
        layout: dict[tuple[int, int], list] = {}
        for cell, blist in pairs.items():
            blist.sort()
            off = 0
            rows = []
            labs = []
            for ca, cb in blist:
                rows.append((ca, cb, off))
                off += left.dims[ca] * right.dims[cb]
                labs.extend((x, y) for x in left.labels(*ca) for y in right.labels(*cb))
            layout[cell] = rows
            dims[cell] = off
            labels[cell] = labs
        dh = {}
        dv = {}
        for cell, rows in layout.items():
            for kind, tgt in (("h", (cell[0] - 1, cell[1])), ("v", (cell[0], cell[1] - 1))):
                if tgt not in dims:
                    continue
                tgt_off = {(ca, cb): o for ca, cb, o in layout[tgt]}
                mat = BitMatrix(dims[tgt], dims[cell])
                hit = False
                for ca, cb, off in rows:
                    na, nb = left.dims[ca], right.dims[cb]
                    if kind == "h":
                        parts = (
                            (((ca[0] - 1, ca[1]), cb), kron(left.dh(*ca), BitMatrix.identity(nb))),
                            ((ca, (cb[0] - 1, cb[1])), kron(BitMatrix.identity(na), right.dh(*cb))),
                        )
                    else:
                        parts = (
                            (((ca[0], ca[1] - 1), cb), kron(left.dv(*ca), BitMatrix.identity(nb))),
                            ((ca, (cb[0], cb[1] - 1)), kron(BitMatrix.identity(na), right.dv(*cb))),
                        )
                    for t, block in parts:
                        if t in tgt_off and block.rows and block.cols:
                            mat.paste(block, tgt_off[t], off)
                            hit = True
                if hit:
                    if kind == "h":
                        dh[cell] = mat
                    else:
                        dv[cell] = mat
        self.bicomplex = Bicomplex(
            dims, dh, dv, labels, exact_left=left.exact_left and right.exact_left
        )
        self._layout = layout

    def blocks(self, cell) -> list:
        """Block rows of a cell as (left cell, right cell, offset)."""
        return self._layout.get(cell, [])

    def position(self, cell_a, ia: int, cell_b, ib: int) -> tuple[tuple[int, int], int]:
        cell = (cell_a[0] + cell_b[0], cell_a[1] + cell_b[1])
        for ca, cb, off in self._layout[cell]:
            if ca == cell_a and cb == cell_b:
                return cell, off + ia * self.right.dims[cb] + ib
        raise KeyError("block not present")


class FilteredTotalComplex:
    """Product total complex of a bicomplex with the column filtration.

    The total degree m piece is the direct sum of the cells (p, m-p),
    blocks laid out by ascending p, so the filtration F^k (columns <= k)
    is a prefix of the coordinates in every degree.
    """

    __slots__ = ("bicomplex", "window_lo", "exact_left", "_blocks", "_dims", "_d", "_labels", "_ranks", "__weakref__")

    def __init__(self, bicomplex: Bicomplex, window_lo: int | None = None):
        self.bicomplex = bicomplex
        self.window_lo = window_lo
        kept = [
            cell for cell in bicomplex.cells()
            if window_lo is None or cell[0] >= window_lo
        ]
        self.exact_left = bicomplex.exact_left and (
            window_lo is None or not bicomplex.dims or window_lo <= bicomplex.p_min
        )
        self._blocks: dict[int, list[tuple[int, int, int]]] = {}
        self._dims: dict[int, int] = {}
        self._labels: dict[int, list] = {}
        for m in sorted({p + q for p, q in kept}):
            off = 0
            rows = []
            labs = []
            for p, q in sorted((p, q) for p, q in kept if p + q == m):
                n = bicomplex.dim(p, q)
                rows.append((p, off, n))
                labs.extend((p, q, lab) for lab in bicomplex.labels(p, q))
                off += n
            self._blocks[m] = rows
            self._dims[m] = off
            self._labels[m] = labs
        self._d: dict[int, BitMatrix] = {}
        for m, n in self._dims.items():
            if not self._dims.get(m - 1):
                continue
            mat = BitMatrix(self._dims[m - 1], n)
            tgt = {p: off for p, off, _ in self._blocks[m - 1]}
            for p, off, size in self._blocks[m]:
                q = m - p
                if (p - 1) in tgt and bicomplex.dim(p - 1, q):
                    mat.paste(bicomplex.dh(p, q), tgt[p - 1], off)
                if p in tgt and bicomplex.dim(p, q - 1):
                    mat.paste(bicomplex.dv(p, q), tgt[p], off)
            self._d[m] = mat
        self._ranks: dict[int, int] = {}

    def degrees(self) -> list[int]:
        return sorted(m for m, n in self._dims.items() if n)

    def dim(self, m: int) -> int:
        return self._dims.get(m, 0)

    def d(self, m: int) -> BitMatrix:
        mat = self._d.get(m)
        return mat if mat is not None else BitMatrix(self.dim(m - 1), self.dim(m))

    def blocks(self, m: int) -> list[tuple[int, int, int]]:
        """Blocks of degree m as (column p, offset, size), ascending p."""
        return self._blocks.get(m, [])

    def block_range(self, m: int, p: int) -> tuple[int, int]:
        for bp, off, size in self._blocks.get(m, []):
            if bp == p:
                return off, size
        return 0, 0

    def columns(self, m: int) -> list[int]:
        return [p for p, _, _ in self._blocks.get(m, [])]

    def prefix_dim(self, m: int, k: int) -> int:
        """Dimension of the filtration piece F^k (columns <= k) in degree m."""
        return sum(size for p, _, size in self._blocks.get(m, []) if p <= k)

    def labels(self, m: int) -> list:
        return self._labels.get(m, [])

    @property
    def p_min(self) -> int:
        lo = self.bicomplex.p_min
        return lo if self.window_lo is None else max(lo, self.window_lo)

    def _rank_d(self, m: int) -> int:
        if m not in self._ranks:
            mat = self._d.get(m)
            self._ranks[m] = mat.rank() if mat is not None else 0
        return self._ranks[m]

    def homology_dim(self, m: int) -> int:
        return self.dim(m) - self._rank_d(m) - self._rank_d(m + 1)

    def homology_dims(self) -> dict[int, int]:
        out = {}
        for m in self.degrees():
            h = self.homology_dim(m)
            if h:
                out[m] = h
        return out

    def chain_complex(self) -> ChainComplex:
        return ChainComplex(self._dims, self._d, self._labels, check=False)


def total_filtered(b: Bicomplex, window_lo: int | None = None) -> FilteredTotalComplex:
    """Totalize a bicomplex; window_lo drops all columns strictly below it."""
    return FilteredTotalComplex(b, window_lo)


class FilteredMap:
    """A chain map between filtered total complexes respecting the filtration.

    Each component may move coordinates toward lower columns but never
    toward higher ones, so induced maps exist on every page.
    """

    __slots__ = ("source", "target", "_mats")

    def __init__(self, source: FilteredTotalComplex, target: FilteredTotalComplex, mats, check=True):
        self.source = source
        self.target = target
        self._mats = {}
        for m, mat in mats.items():
            m = int(m)
            if mat is not None and mat.rows and mat.cols:
                self._mats[m] = mat
        if check:
            self._validate()

    def _validate(self) -> None:
        for m, mat in self._mats.items():
            want = (self.target.dim(m), self.source.dim(m))
            if (mat.rows, mat.cols) != want:
                raise ValueError(f"component at degree {m} has shape {(mat.rows, mat.cols)}, expected {want}")
            for p in self.source.columns(m):
                ps = self.source.prefix_dim(m, p)
                pt = self.target.prefix_dim(m, p)
                if pt >= mat.rows or not ps:
                    continue
                low = mat.select_rows(np.arange(pt, mat.rows)).select_columns(np.arange(ps))
                if not low.is_zero():
                    raise ValueError(f"map is not filtered at degree {m} column {p}")
        for m in self.source.degrees():
            left = self.target.d(m) @ self.mat(m)
            right = self.mat(m - 1) @ self.source.d(m)
            if left != right:
                raise ValueError(f"map does not commute with the total differential at degree {m}")

    def mat(self, m: int) -> BitMatrix:
        mat = self._mats.get(m)
        return mat if mat is not None else BitMatrix(self.target.dim(m), self.source.dim(m))

    @classmethod
    def identity(cls, f: FilteredTotalComplex) -> "FilteredMap":
        return cls(f, f, {m: BitMatrix.identity(f.dim(m)) for m in f.degrees()}, check=False)

    @classmethod
    def from_cells(cls, source: FilteredTotalComplex, target: FilteredTotalComplex, blocks, check=True) -> "FilteredMap":
        """Assemble a map from per-cell blocks keyed by (p, q)."""
        mats = {}
        for (p, q), block in sorted(blocks.items()):
            if block is None or not (block.rows and block.cols):
                continue
            m = p + q
            if m not in mats:
                mats[m] = BitMatrix(target.dim(m), source.dim(m))
            so, ssz = source.block_range(m, p)
            to, tsz = target.block_range(m, p)
            if (block.rows, block.cols) != (tsz, ssz):
                raise ValueError(f"block at cell {(p, q)} has shape {(block.rows, block.cols)}, expected {(tsz, ssz)}")
            mats[m].paste(block, to, so)
        return cls(source, target, mats, check=check)

    def compose(self, inner: "FilteredMap") -> "FilteredMap":
        """self after inner."""
        mats = {}
        for m in inner.source.degrees():
            if self.target.dim(m):
                mats[m] = self.mat(m) @ inner.mat(m)
        return FilteredMap(inner.source, self.target, mats, check=False)
