"""Linear algebra over the two-element field.

Matrices are bit-packed: row i is a vector of 64-bit words, and column j
lives at bit ``j & 63`` of word ``j >> 6``.  Elimination loops are
vectorized so that Python-level iteration runs over pivots only; everything
here stays fast up to the ~10^4 x 10^4 sizes the spectral computations
produce.

Conventions, fixed once so that every downstream answer is reproducible:

* vectors are numpy uint8 arrays of 0s and 1s; collections of vectors
  (spanning sets, bases) are BitMatrix rows;
* linear maps use the column convention: column j of the matrix is the
  image of the j-th source basis vector, applied with ``matvec``;
* row reduction picks the leftmost pivot column, the topmost available
  pivot row, and reduces every other row (reduced row echelon form);
* ``solve`` returns the solution whose free coordinates are zero;
* kernel bases list free columns in ascending order.
"""

from __future__ import annotations

import sys

import numpy as np

if sys.byteorder != "little":
    raise ImportError("bit packing assumes a little-endian platform")

_ONE = np.uint64(1)
_CHUNK = 1024


def _word_count(cols: int) -> int:
    return (cols + 63) >> 6


def _pack_dense(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) uint8 array into (rows, words) uint64."""
    rows, cols = dense.shape
    words = _word_count(cols)
    if rows == 0 or cols == 0:
        return np.zeros((rows, words), dtype=np.uint64)
    packed = np.packbits(dense, axis=1, bitorder="little")
    pad = 8 * words - packed.shape[1]
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    return np.ascontiguousarray(packed).view(np.uint64)


def _unpack_words(words: np.ndarray, cols: int) -> np.ndarray:
    """Unpack (rows, words) uint64 into a (rows, cols) uint8 array."""
    if words.shape[0] == 0 or cols == 0:
        return np.zeros((words.shape[0], cols), dtype=np.uint8)
    dense = np.unpackbits(np.ascontiguousarray(words).view(np.uint8), axis=1, bitorder="little")
    return dense[:, :cols]


def _row_support(wordrow: np.ndarray, cols: int) -> np.ndarray:
    return np.nonzero(_unpack_words(wordrow[None, :], cols)[0])[0]


def _rref_inplace(data: np.ndarray, rows: int, stop_col: int) -> list[int]:
    """Reduce `data` to reduced row echelon form; pivots only in [0, stop_col)."""
    pivots: list[int] = []
    row = 0
    for col in range(stop_col):
        if row == rows:
            break
        w = col >> 6
        b = np.uint64(col & 63)
        colbits = (data[row:, w] >> b) & _ONE
        nz = np.nonzero(colbits)[0]
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            data[[row, piv]] = data[[piv, row]]
        hit = np.nonzero((data[:, w] >> b) & _ONE)[0]
        hit = hit[hit != row]
        if hit.size:
            data[hit] ^= data[row]
        pivots.append(col)
        row += 1
    return pivots


class BitMatrix:
    """A rows x cols matrix over F2 with bit-packed rows."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        words = _word_count(self.cols)
        if data is None:
            self.data = np.zeros((self.rows, words), dtype=np.uint64)
        else:
            if data.shape != (self.rows, words) or data.dtype != np.uint64:
                raise ValueError("packed data has wrong shape or dtype")
            self.data = data
            self._mask_tail()

    def _mask_tail(self) -> None:
        tail = self.cols & 63
        if tail and self.data.shape[1]:
            self.data[:, -1] &= (_ONE << np.uint64(tail)) - _ONE

    # construction

    @classmethod
    def from_dense(cls, array) -> "BitMatrix":
        dense = np.asarray(array, dtype=np.uint8)
        if dense.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(dense.shape[0], dense.shape[1], _pack_dense(dense))

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "BitMatrix":
        """Build from (row, col) pairs; repeated entries cancel."""
        m = cls(rows, cols)
        pairs = list(entries)
        if pairs:
            ii = np.array([p[0] for p in pairs], dtype=np.int64)
            jj = np.array([p[1] for p in pairs], dtype=np.int64)
            np.bitwise_xor.at(m.data, (ii, jj >> 6), _ONE << (jj & 63).astype(np.uint64))
        return m

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        m = cls(n, n)
        if n:
            jj = np.arange(n, dtype=np.int64)
            m.data[jj, jj >> 6] |= _ONE << (jj & 63).astype(np.uint64)
        return m

    @classmethod
    def row_vector(cls, vec: np.ndarray) -> "BitMatrix":
        v = np.asarray(vec, dtype=np.uint8)
        return cls.from_dense(v[None, :])

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.data.copy())

    # element access

    def get(self, i: int, j: int) -> int:
        return int((self.data[i, j >> 6] >> np.uint64(j & 63)) & _ONE)

    def set(self, i: int, j: int, value: int = 1) -> None:
        if value & 1:
            self.data[i, j >> 6] |= _ONE << np.uint64(j & 63)
        else:
            self.data[i, j >> 6] &= ~(_ONE << np.uint64(j & 63))

    def to_dense(self) -> np.ndarray:
        return _unpack_words(self.data, self.cols)

    def row_dense(self, i: int) -> np.ndarray:
        return _unpack_words(self.data[i : i + 1], self.cols)[0]

    def is_zero(self) -> bool:
        return not self.data.any()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.data, other.data)
        )

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in sum")
        return BitMatrix(self.rows, self.cols, self.data ^ other.data)

    def __hash__(self):
        raise TypeError("BitMatrix is unhashable")

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    # products

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        """Apply the column-convention map to a length-cols vector."""
        v = np.asarray(vec, dtype=np.uint8)
        if v.shape != (self.cols,):
            raise ValueError("vector length mismatch")
        if self.rows == 0:
            return np.zeros(0, dtype=np.uint8)
        if self.cols == 0:
            return np.zeros(self.rows, dtype=np.uint8)
        vw = _pack_dense(v[None, :])[0]
        acc = np.bitwise_count(self.data & vw[None, :]).sum(axis=1)
        return (acc & 1).astype(np.uint8)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in product")
        out = BitMatrix(self.rows, other.cols)
        if self.rows == 0 or self.cols == 0 or other.cols == 0:
            return out
        for i in range(self.rows):
            idx = _row_support(self.data[i], self.cols)
            if idx.size:
                out.data[i] = np.bitwise_xor.reduce(other.data[idx], axis=0)
        return out

    def transpose(self) -> "BitMatrix":
        out = BitMatrix(self.cols, self.rows)
        if self.rows == 0 or self.cols == 0:
            return out
        out_bytes = out.data.view(np.uint8).reshape(self.cols, -1)
        step = 4096
        for r0 in range(0, self.rows, step):
            chunk = _unpack_words(self.data[r0 : r0 + step], self.cols)
            packed = np.packbits(chunk.T, axis=1, bitorder="little")
            out_bytes[:, r0 // 8 : r0 // 8 + packed.shape[1]] |= packed
        return out

    # slicing and assembly

    def select_columns(self, idx) -> "BitMatrix":
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        out = BitMatrix(self.rows, idx.size)
        if self.rows == 0 or idx.size == 0:
            return out
        shifts = (idx & 63).astype(np.uint64)
        words = idx >> 6
        for r0 in range(0, self.rows, _CHUNK):
            r1 = min(r0 + _CHUNK, self.rows)
            bits = ((self.data[r0:r1][:, words] >> shifts) & _ONE).astype(np.uint8)
            out.data[r0:r1] = _pack_dense(bits)
        return out

    def select_rows(self, idx) -> "BitMatrix":
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        return BitMatrix(idx.size, self.cols, self.data[idx].copy())

    def paste(self, other: "BitMatrix", row_off: int = 0, col_off: int = 0) -> None:
        """OR `other` into this matrix with its (0, 0) entry at (row_off, col_off)."""
        if row_off + other.rows > self.rows or col_off + other.cols > self.cols:
            raise ValueError("paste out of bounds")
        if other.rows == 0 or other.cols == 0:
            return
        w0 = col_off >> 6
        s = col_off & 63
        W = other.data.shape[1]
        dst = self.data[row_off : row_off + other.rows]
        if s == 0:
            dst[:, w0 : w0 + W] |= other.data
        else:
            sh = np.uint64(s)
            inv = np.uint64(64 - s)
            dst[:, w0 : w0 + W] |= other.data << sh
            avail = dst.shape[1] - (w0 + 1)
            if avail > 0:
                hi = other.data >> inv
                dst[:, w0 + 1 : w0 + 1 + W] |= hi[:, : min(W, avail)]

    # elimination

    def rref(self) -> tuple["BitMatrix", list[int]]:
        m = self.copy()
        pivots = _rref_inplace(m.data, m.rows, m.cols)
        return m, pivots

    def rank(self) -> int:
        m = self.data.copy()
        return len(_rref_inplace(m, self.rows, self.cols))

    def rref_with_transform(self) -> tuple["BitMatrix", list[int], "BitMatrix"]:
        """Return (R, pivots, U) with U @ self == R and U invertible."""
        aug = hstack(self, BitMatrix.identity(self.rows))
        pivots = _rref_inplace(aug.data, aug.rows, self.cols)
        R = aug.select_columns(np.arange(self.cols))
        U = aug.select_columns(np.arange(self.cols, self.cols + self.rows))
        return R, pivots, U

    def kernel_basis(self) -> "BitMatrix":
        """Rows form a basis of the right kernel, one per free column, ascending."""
        R, pivots = self.rref()
        pivot_set = set(pivots)
        free = np.array([c for c in range(self.cols) if c not in pivot_set], dtype=np.int64)
        K = BitMatrix(free.size, self.cols)
        if free.size == 0:
            return K
        K.data[np.arange(free.size), free >> 6] |= _ONE << (free & 63).astype(np.uint64)
        if pivots:
            Rfree = R.select_columns(free)
            for k, p in enumerate(pivots):
                sup = _row_support(Rfree.data[k], free.size)
                if sup.size:
                    K.data[sup, p >> 6] ^= _ONE << np.uint64(p & 63)
        return K

    def solve(self, b: np.ndarray) -> np.ndarray | None:
        """Least solution of self @ x == b (free coordinates zero), or None."""
        return LinearSolver(self).solve(b)

    def image_basis(self) -> "BitMatrix":
        """Rows form the reduced echelon basis of the column span."""
        T = self.transpose()
        R, pivots = T.rref()
        return R.select_rows(np.arange(len(pivots)))

    # serialization

    def to_json(self) -> dict:
        dense = self.to_dense()
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": ["".join("1" if x else "0" for x in row) for row in dense],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BitMatrix":
        rows, cols = int(obj["rows"]), int(obj["cols"])
        dense = np.zeros((rows, cols), dtype=np.uint8)
        for i, s in enumerate(obj["data"]):
            if len(s) != cols:
                raise ValueError("row string length mismatch")
            dense[i] = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
        return cls.from_dense(dense)


def hstack(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.rows != b.rows:
        raise ValueError("row count mismatch")
    out = BitMatrix(a.rows, a.cols + b.cols)
    out.paste(a, 0, 0)
    out.paste(b, 0, a.cols)
    return out


def vstack(mats) -> BitMatrix:
    mats = list(mats)
    if not mats:
        raise ValueError("nothing to stack")
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ValueError("column count mismatch")
    data = np.vstack([m.data for m in mats])
    return BitMatrix(sum(m.rows for m in mats), cols, data)


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Kronecker product; row i*b.rows + k, column j*b.cols + l."""
    if not (a.rows and a.cols and b.rows and b.cols):
        return BitMatrix(a.rows * b.rows, a.cols * b.cols)
    return BitMatrix.from_dense(np.kron(a.to_dense(), b.to_dense()))


def zero_vector(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.uint8)


def basis_vector(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=np.uint8)
    v[i] = 1
    return v


class LinearSolver:
    """Reusable solver for a fixed coefficient matrix (column convention)."""

    def __init__(self, matrix: BitMatrix):
        self.matrix = matrix
        R, pivots, U = matrix.rref_with_transform()
        self.pivots = pivots
        self.transform_t = U.transpose()

    def solve_rows(self, rhs_rows: BitMatrix) -> tuple[BitMatrix, np.ndarray]:
        """Solve matrix @ x == b for every row b; returns (solutions, consistent)."""
        A = self.matrix
        if rhs_rows.cols != A.rows:
            raise ValueError("right-hand side length mismatch")
        reduced = rhs_rows @ self.transform_t
        rank = len(self.pivots)
        if rank < A.rows:
            tail = reduced.select_columns(np.arange(rank, A.rows))
            consistent = ~tail.to_dense().any(axis=1)
        else:
            consistent = np.ones(rhs_rows.rows, dtype=bool)
        X = BitMatrix(rhs_rows.rows, A.cols)
        if rank:
            lead = reduced.select_columns(np.arange(rank)).to_dense()
            for k, p in enumerate(self.pivots):
                sel = np.nonzero(lead[:, k])[0]
                if sel.size:
                    X.data[sel, p >> 6] |= _ONE << np.uint64(p & 63)
        return X, consistent

    def solve(self, b: np.ndarray) -> np.ndarray | None:
        X, ok = self.solve_rows(BitMatrix.row_vector(b))
        return X.row_dense(0) if ok[0] else None


class Subspace:
    """Subspace of F2^n held as a reduced row echelon basis."""

    __slots__ = ("ambient", "basis", "pivots")

    def __init__(self, ambient: int, basis: BitMatrix, pivots: list[int]):
        self.ambient = ambient
        self.basis = basis
        self.pivots = pivots

    @classmethod
    def from_rows(cls, rows: BitMatrix) -> "Subspace":
        R, pivots = rows.rref()
        return cls(rows.cols, R.select_rows(np.arange(len(pivots))), pivots)

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(ambient, BitMatrix(0, ambient), [])

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls(ambient, BitMatrix.identity(ambient), list(range(ambient)))

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        """Residual of vec after eliminating every pivot coordinate."""
        out = BitMatrix.row_vector(vec)
        self.reduce_rows_inplace(out)
        return out.row_dense(0)

    def reduce_rows_inplace(self, m: BitMatrix) -> None:
        if m.cols != self.ambient:
            raise ValueError("ambient dimension mismatch")
        for k, p in enumerate(self.pivots):
            w = p >> 6
            b = np.uint64(p & 63)
            hit = np.nonzero((m.data[:, w] >> b) & _ONE)[0]
            if hit.size:
                m.data[hit] ^= self.basis.data[k]

    def contains(self, vec: np.ndarray) -> bool:
        return not self.reduce(vec).any()

    def contains_rows(self, m: BitMatrix) -> bool:
        r = m.copy()
        self.reduce_rows_inplace(r)
        return r.is_zero()

    def coords(self, vec: np.ndarray) -> np.ndarray:
        """Coordinates in the echelon basis; requires membership."""
        if not self.contains(vec):
            raise ValueError("vector not in subspace")
        v = np.asarray(vec, dtype=np.uint8)
        return v[self.pivots] if self.pivots else np.zeros(0, dtype=np.uint8)

    def sum(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise ValueError("ambient dimension mismatch")
        return Subspace.from_rows(vstack([self.basis, other.basis]))

    def equals(self, other: "Subspace") -> bool:
        return self.ambient == other.ambient and self.pivots == other.pivots and self.basis == other.basis

    def is_subspace_of(self, other: "Subspace") -> bool:
        return other.contains_rows(self.basis)


class Subquotient:
    """Quotient numerator/denominator of nested subspaces of F2^n.

    Coset representatives are the numerator basis rows forward-reduced
    against a growing echelon seeded with the denominator; the survivors,
    in numerator row order, form a basis of a complement of the denominator.
    """

    __slots__ = ("numerator", "denominator", "reps", "_solver")

    def __init__(self, numerator: Subspace, denominator: Subspace):
        if numerator.ambient != denominator.ambient:
            raise ValueError("ambient dimension mismatch")
        if not denominator.is_subspace_of(numerator):
            raise ValueError("denominator not contained in numerator")
        self.numerator = numerator
        self.denominator = denominator
        work = numerator.basis.copy()
        denominator.reduce_rows_inplace(work)
        ech: list[tuple[int, np.ndarray]] = []
        keep: list[int] = []
        for i in range(work.rows):
            rowi = work.data[i]
            for p, wrow in ech:
                if (rowi[p >> 6] >> np.uint64(p & 63)) & _ONE:
                    rowi ^= wrow
            sup = _row_support(rowi, work.cols)
            if sup.size:
                ech.append((int(sup[0]), rowi.copy()))
                keep.append(i)
        self.reps = work.select_rows(np.array(keep, dtype=np.int64))
        self._solver = None

    @property
    def ambient(self) -> int:
        return self.numerator.ambient

    @property
    def dim(self) -> int:
        return self.reps.rows

    def _get_solver(self) -> LinearSolver:
        if self._solver is None:
            stacked = vstack([self.reps, self.denominator.basis])
            self._solver = LinearSolver(stacked.transpose())
        return self._solver

    def class_coords(self, vec: np.ndarray) -> np.ndarray:
        """Coordinates of the class of vec in the representative basis."""
        X, ok = self._get_solver().solve_rows(BitMatrix.row_vector(vec))
        if not ok[0]:
            raise ValueError("vector not in numerator subspace")
        return X.row_dense(0)[: self.dim]

    def class_coords_rows(self, m: BitMatrix) -> BitMatrix:
        X, ok = self._get_solver().solve_rows(m)
        if not ok.all():
            raise ValueError("vector not in numerator subspace")
        return X.select_columns(np.arange(self.dim))

    def rep_vector(self, coords: np.ndarray) -> np.ndarray:
        """The distinguished representative with the given class coordinates."""
        out = zero_vector(self.ambient)
        for k in np.nonzero(np.asarray(coords, dtype=np.uint8))[0]:
            out ^= self.reps.row_dense(int(k))
        return out

    def is_zero_class(self, vec: np.ndarray) -> bool:
        return self.denominator.contains(vec)


def kernel_basis(m: BitMatrix) -> Subspace:
    """Right kernel of a column-convention map, as a subspace of the source."""
    return Subspace.from_rows(m.kernel_basis())


def image_basis(m: BitMatrix) -> Subspace:
    """Column span of a column-convention map, as a subspace of the target."""
    return Subspace.from_rows(m.transpose())


def subquotient_induced_map(f: BitMatrix, src: Subquotient, dst: Subquotient) -> BitMatrix:
    """Matrix (column convention) induced on subquotients by an ambient map.

    Raises ValueError("... not filtered") unless the map sends the source
    numerator into the target numerator and denominator into denominator.
    """
    if f.cols != src.ambient or f.rows != dst.ambient:
        raise ValueError("ambient dimension mismatch")
    ft = f.transpose()
    den_imgs = src.denominator.basis @ ft
    if not dst.denominator.contains_rows(den_imgs):
        raise ValueError("map is not filtered: denominator escapes denominator")
    rep_imgs = src.reps @ ft
    if not dst.numerator.contains_rows(rep_imgs):
        raise ValueError("map is not filtered: numerator escapes numerator")
    if dst.dim == 0 or src.dim == 0:
        return BitMatrix(dst.dim, src.dim)
    return dst.class_coords_rows(rep_imgs).transpose()
