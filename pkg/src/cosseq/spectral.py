"""Homology spectral sequences of filtered total complexes over F2.

A page cell at (p, q) is modeled on the leading column block: chains in
F^p whose differential drops r columns are projected to the block of
column p, modulo boundaries arriving from r - 1 columns to the right.
Chains in F^(p-1) project to zero, so the block subquotient is the page
cell, while classes stay attached to genuine chains.  That makes the
differential on a named class a mechanical evaluation rather than a
dimension count: apply the total differential and read the target block.

Truncated windows report a cell only when every cell within taxicab
radius r + 1 is stored; anything nearer the cut is marked invalid, never
silently zero.  The stabilized page instead certifies cells by checking
that all later differentials in and out vanish inside the window, and is
cross-checked against the homology of the total complex.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .chains import FilteredMap, FilteredTotalComplex
from .f2 import BitMatrix, LinearSolver, Subquotient, Subspace, vstack


@dataclass
class Page:
    """One page: cell subquotients, the differential, and a validity mask."""

    r: int
    cells: dict
    d: dict
    validity: dict
    stable: bool = False
    exact_left: bool = True
    p_min: int = 0
    col_hi: int = 0

    def dim(self, p: int, q: int) -> int:
        sq = self.cells.get((p, q))
        return sq.dim if sq is not None else 0

    def valid(self, p: int, q: int) -> bool:
        got = self.validity.get((p, q))
        if got is not None:
            return got
        if self.exact_left:
            return True
        if self.stable:
            return self._stable_valid(p, q)
        return p - (self.r + 1) >= self.p_min

    def _stable_valid(self, p: int, q: int) -> bool:
        width = self.col_hi - self.p_min + 1
        for j in range(self.r, width + 1):
            if self.dim(p - j, q + j - 1) or self.dim(p + j, q - j + 1):
                return False
        return True

    def d_matrix(self, p: int, q: int) -> BitMatrix:
        mat = self.d.get((p, q))
        if mat is not None:
            return mat
        return BitMatrix(self.dim(p - self.r, q + self.r - 1), self.dim(p, q))

    def nonzero_cells(self) -> dict:
        return {cell: sq.dim for cell, sq in sorted(self.cells.items()) if sq.dim}

    def to_json(self) -> dict:
        cells = []
        for (p, q), sq in sorted(self.cells.items()):
            ok = self.valid(p, q)
            if ok and not sq.dim:
                continue
            entry = {"p": p, "q": q, "dim": sq.dim if ok else None, "valid": bool(ok)}
            mat = self.d.get((p, q))
            if ok and sq.dim and mat is not None and self.valid(p - self.r, q + self.r - 1):
                entry["d"] = {"target": [p - self.r, q + self.r - 1], "matrix": mat.to_json()}
            cells.append(entry)
        return {"r": self.r, "stable": self.stable, "cells": cells}

    def ascii_chart(self) -> str:
        if not self.cells:
            return "(empty)"
        ps = sorted({p for p, _ in self.cells})
        qs = sorted({q for _, q in self.cells})
        lines = ["  q\\p" + "".join(f"{p:>4}" for p in range(ps[0], ps[-1] + 1))]
        for q in range(qs[-1], qs[0] - 1, -1):
            row = [f"{q:>5}"]
            for p in range(ps[0], ps[-1] + 1):
                if not self.valid(p, q):
                    ch = "?"
                else:
                    d = self.dim(p, q)
                    ch = "." if not d else (str(d) if d < 10 else "#")
                row.append(f"{ch:>4}")
            lines.append("".join(row))
        return "\n".join(lines)


@dataclass(eq=False)
class ClassHandle:
    """A chain pinned to a page cell, standing for the class it represents."""

    chain: np.ndarray
    page: int
    bidegree: tuple
    seq: "SpectralSequence"


class SpectralSequence:
    """Page-by-page engine for the column filtration of a total complex."""

    def __init__(self, filtered: FilteredTotalComplex):
        self.filtered = filtered
        self._z: dict = {}
        self._dens: dict = {}
        self._pages: dict = {}
        self._stable: Page | None = None

    # cycle prefixes

    def z_rows(self, r: int, p: int, q: int) -> BitMatrix:
        """Rows spanning the chains of F^p whose differential drops to F^(p-r)."""
        key = (r, p, q)
        got = self._z.get(key)
        if got is not None:
            return got
        f = self.filtered
        m = p + q
        pd = f.prefix_dim(m, p)
        rows = BitMatrix(0, f.dim(m))
        if pd:
            lo = f.prefix_dim(m - 1, p - r)
            hi = f.prefix_dim(m - 1, p)
            if hi > lo:
                sub = f.d(m).select_rows(np.arange(lo, hi)).select_columns(np.arange(pd))
                ker = sub.kernel_basis()
            else:
                ker = BitMatrix.identity(pd)
            rows = BitMatrix(ker.rows, f.dim(m))
            rows.paste(ker, 0, 0)
        self._z[key] = rows
        return rows

    def _boundary_rows(self, r: int, p: int, q: int) -> BitMatrix:
        """Total differential images of the cycle prefix at (p, q)."""
        f = self.filtered
        m = p + q
        z = self.z_rows(r, p, q)
        if not z.rows or not f.dim(m - 1):
            return BitMatrix(0, f.dim(m - 1))
        return z @ f.d(m).transpose()

    def _block(self, m: int, p: int, rows: BitMatrix) -> BitMatrix:
        off, size = self.filtered.block_range(m, p)
        return rows.select_columns(np.arange(off, off + size))

    def _cell(self, r: int, p: int, q: int) -> Subquotient:
        m = p + q
        num = Subspace.from_rows(self._block(m, p, self.z_rows(r, p, q)))
        bnd = self._boundary_rows(r - 1, p + r - 1, q - r + 2)
        den = Subspace.from_rows(self._block(m, p, bnd))
        return Subquotient(num, den)

    def _col_hi(self) -> int:
        f = self.filtered
        hi = f.p_min
        for m in f.degrees():
            cols = f.columns(m)
            if cols:
                hi = max(hi, cols[-1])
        return hi

    # pages

    def page(self, r: int) -> Page:
        if r < 1:
            raise ValueError("page index must be at least 1")
        got = self._pages.get(r)
        if got is not None:
            return got
        f = self.filtered
        cells = {}
        for m in f.degrees():
            for p, _, _ in f.blocks(m):
                cells[(p, m - p)] = self._cell(r, p, m - p)
        d = {}
        for (p, q), sq in sorted(cells.items()):
            tgt = cells.get((p - r, q + r - 1))
            if tgt is None or not sq.dim or not tgt.dim:
                continue
            d[(p, q)] = self._d_matrix(r, p, q, sq, tgt)
        validity = {
            cell: f.exact_left or (cell[0] - (r + 1) >= f.p_min) for cell in cells
        }
        pg = Page(r, cells, d, validity, False, f.exact_left, f.p_min, self._col_hi())
        self._pages[r] = pg
        return pg

    def _lift(self, r: int, p: int, q: int, block_rows: BitMatrix) -> BitMatrix:
        """Chains in the cycle prefix whose leading block is the given rows."""
        z = self.z_rows(r, p, q)
        zblk = self._block(p + q, p, z)
        coeffs, ok = LinearSolver(zblk.transpose()).solve_rows(block_rows)
        if not ok.all():
            raise AssertionError("page representative fails to lift to a cycle prefix")
        return coeffs @ z

    def _d_matrix(self, r: int, p: int, q: int, sq: Subquotient, tgt: Subquotient) -> BitMatrix:
        f = self.filtered
        m = p + q
        lifts = self._lift(r, p, q, sq.reps)
        imgs = lifts @ f.d(m).transpose()
        blk = self._block(m - 1, p - r, imgs)
        return tgt.class_coords_rows(blk).transpose()

    # chain level classes

    def class_of(self, chain, r: int, cell: tuple) -> ClassHandle | None:
        if r < 1:
            raise ValueError("page index must be at least 1")
        p, q = cell
        f = self.filtered
        m = p + q
        chain = np.asarray(chain, dtype=np.uint8) & 1
        if chain.shape != (f.dim(m),):
            raise ValueError(f"chain must have length {f.dim(m)} in degree {m}")
        pd = f.prefix_dim(m, p)
        if chain[pd:].any():
            raise ValueError(f"chain does not lie in the filtration piece of column {p}")
        img = f.d(m).matvec(chain)
        if img[f.prefix_dim(m - 1, p - r):].any():
            return None
        return ClassHandle(chain.copy(), int(r), (p, q), self)

    def _den_space(self, r: int, p: int, q: int) -> Subspace:
        key = (r, p, q)
        got = self._dens.get(key)
        if got is None:
            z1 = self.z_rows(r - 1, p - 1, q + 1)
            bnd = self._boundary_rows(r - 1, p + r - 1, q - r + 2)
            got = Subspace.from_rows(vstack([z1, bnd]))
            self._dens[key] = got
        return got

    def is_zero(self, h: ClassHandle) -> bool:
        p, q = h.bidegree
        return self._den_space(h.page, p, q).contains(h.chain)

    def coords_of(self, h: ClassHandle) -> np.ndarray:
        p, q = h.bidegree
        sq = self.page(h.page).cells.get((p, q))
        if sq is None or not sq.dim:
            return np.zeros(0, dtype=np.uint8)
        off, size = self.filtered.block_range(p + q, p)
        return sq.class_coords(h.chain[off:off + size])

    def differential_of(self, h: ClassHandle) -> ClassHandle:
        p, q = h.bidegree
        img = self.filtered.d(p + q).matvec(h.chain)
        return ClassHandle(img, h.page, (p - h.page, q + h.page - 1), self)

    def promote(self, h: ClassHandle) -> ClassHandle | None:
        r = h.page
        p, q = h.bidegree
        f = self.filtered
        m = p + q
        img = f.d(m).matvec(h.chain)
        z1 = self.z_rows(r - 1, p - r - 1, q + r)
        z2 = self.z_rows(r - 1, p - 1, q + 1)
        bnd = self._boundary_rows(r - 1, p - 1, q + 1)
        stacked = vstack([z1, bnd])
        if not stacked.rows:
            if img.any():
                return None
            return ClassHandle(h.chain.copy(), r + 1, (p, q), self)
        coeffs, ok = LinearSolver(stacked.transpose()).solve_rows(BitMatrix.row_vector(img))
        if not ok[0]:
            return None
        tail = coeffs.row_dense(0)[z1.rows:]
        chain = h.chain.copy()
        for k in np.nonzero(tail)[0]:
            chain = chain ^ z2.row_dense(int(k))
        return ClassHandle(chain, r + 1, (p, q), self)

    def representative(self, r: int, cell: tuple, index: int = 0) -> ClassHandle:
        p, q = cell
        sq = self.page(r).cells.get((p, q))
        if sq is None or index >= sq.dim:
            raise ValueError(f"cell {cell} has no class with index {index} on page {r}")
        lift = self._lift(r, p, q, BitMatrix.row_vector(sq.reps.row_dense(index)))
        return ClassHandle(lift.row_dense(0), int(r), (p, q), self)

    def first_nonzero_differential(self, h: ClassHandle):
        cur = h
        f = self.filtered
        while True:
            if self.is_zero(cur):
                return None
            r = cur.page
            p, q = cur.bidegree
            if p - r < f.p_min:
                return None
            if not self.is_zero(self.differential_of(cur)):
                return (r, (p - r, q + r - 1))
            cur = self.promote(cur)

    # stabilized page

    def e_infinity(self, window: int | None = None) -> Page:
        f = self.filtered
        width = self._col_hi() - f.p_min + 1
        if window is not None:
            j = int(window)
            base = self.page(j)
            cells = base.cells
            d = {}
        else:
            if self._stable is not None:
                return self._stable
            j = width + 1
            cells = self._stable_cells()
            d = {}
        pg = Page(j, cells, d, {}, True, f.exact_left, f.p_min, self._col_hi())
        for cell in cells:
            pg.validity[cell] = f.exact_left or pg._stable_valid(*cell)
        self._check_totals(pg)
        if window is None:
            self._stable = pg
        return pg

    def _stable_cells(self) -> dict:
        """Stable cells from kernel and image prefixes, one echelon per degree."""
        f = self.filtered
        cells = {}
        for m in f.degrees():
            n = f.dim(m)
            ker_rows, ker_last = _suffix_echelon(f.d(m).kernel_basis())
            if f.dim(m + 1):
                im_rows, im_last = _suffix_echelon(f.d(m + 1).transpose())
            else:
                im_rows, im_last = BitMatrix(0, n), np.zeros(0, dtype=np.int64)
            for p, off, size in f.blocks(m):
                pd = off + size
                span = np.arange(off, pd)
                nsel = np.nonzero((ker_last >= off) & (ker_last < pd))[0]
                num = Subspace.from_rows(ker_rows.select_rows(nsel).select_columns(span))
                dsel = np.nonzero((im_last >= off) & (im_last < pd))[0]
                den = Subspace.from_rows(im_rows.select_rows(dsel).select_columns(span))
                cells[(p, m - p)] = Subquotient(num, den)
        return cells

    def _check_totals(self, pg: Page) -> None:
        f = self.filtered
        sums: dict = {}
        valid_deg: dict = {}
        for (p, q), sq in pg.cells.items():
            m = p + q
            sums[m] = sums.get(m, 0) + sq.dim
            valid_deg[m] = valid_deg.get(m, True) and pg.valid(p, q)
        for m, total in sums.items():
            if valid_deg[m] and total != f.homology_dim(m):
                raise ValueError(
                    f"stabilized page disagrees with total homology in degree {m}"
                )


def _suffix_echelon(rows: BitMatrix) -> tuple[BitMatrix, np.ndarray]:
    """Echelon basis of the row span with pivots pushed rightmost.

    Returns the rows and the index of each row's last supported column,
    so the rows whose last column falls in a prefix span that prefix cut.
    """
    n = rows.cols
    if not rows.rows:
        return rows, np.zeros(0, dtype=np.int64)
    flip = np.arange(n - 1, -1, -1)
    R, pivots = rows.select_columns(flip).rref()
    R = R.select_rows(np.arange(len(pivots)))
    last = np.array([n - 1 - pv for pv in pivots], dtype=np.int64)
    order = np.argsort(last)
    return R.select_columns(flip).select_rows(order), last[order]


_ENGINES: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _engine(f: FilteredTotalComplex) -> SpectralSequence:
    eng = _ENGINES.get(f)
    if eng is None:
        eng = SpectralSequence(f)
        _ENGINES[f] = eng
    return eng


def page(f: FilteredTotalComplex, r: int) -> Page:
    """Page r of the column filtration spectral sequence of f."""
    return _engine(f).page(r)


def class_of(f: FilteredTotalComplex, chain, r: int, cell: tuple) -> ClassHandle | None:
    """The page r class of a chain at the given cell, or None.

    Raises ValueError when the chain has the wrong length or escapes the
    filtration piece of the cell; returns None when its differential does
    not drop the full r columns, so the chain holds no class on page r.
    """
    return _engine(f).class_of(chain, r, cell)


def is_zero(h: ClassHandle) -> bool:
    """Whether the handle's class vanishes on its page."""
    return h.seq.is_zero(h)


def coords_of(h: ClassHandle) -> np.ndarray:
    """Coordinates of the class in its page cell basis."""
    return h.seq.coords_of(h)


def differential_of(h: ClassHandle) -> ClassHandle:
    """The page differential applied to the class, as a class at the target."""
    return h.seq.differential_of(h)


def promote(h: ClassHandle) -> ClassHandle | None:
    """Carry the class to the next page, or None when it dies.

    The returned handle may hold a corrected chain: a chain of one column
    lower is subtracted so the differential drops one more column.
    """
    return h.seq.promote(h)


def representative(f: FilteredTotalComplex, r: int, cell: tuple, index: int = 0) -> ClassHandle:
    """A chain representing the indexed basis class of a page cell."""
    return _engine(f).representative(r, cell, index)


def first_nonzero_differential(h: ClassHandle):
    """(j, target cell) for the first nonvanishing differential, or None.

    Promotes the class page by page; reports None when the class dies or
    every remaining target lies outside the stored window.
    """
    return h.seq.first_nonzero_differential(h)


def e_infinity(f: FilteredTotalComplex, window: int | None = None) -> Page:
    """The stabilized page, cross-checked against total homology.

    Cells are certified stable when every later differential in or out
    vanishes inside the stored window; with a window cap the scan stops
    at that page and non-stabilizing cells are marked invalid.
    """
    return _engine(f).e_infinity(window)


def induced_morphism(phi: FilteredMap, r: int) -> dict:
    """Per-cell matrices induced on page r by a filtered map."""
    src_eng = _engine(phi.source)
    tgt_eng = _engine(phi.target)
    src_pg = src_eng.page(r)
    tgt_pg = tgt_eng.page(r)
    out = {}
    for cell, sq in sorted(src_pg.cells.items()):
        tsq = tgt_pg.cells.get(cell)
        if tsq is None or not (sq.dim or tsq.dim):
            continue
        p, q = cell
        m = p + q
        lifts = src_eng._lift(r, p, q, sq.reps)
        imgs = lifts @ phi.mat(m).transpose()
        blk = tgt_eng._block(m, p, imgs)
        out[cell] = tsq.class_coords_rows(blk).transpose()
    return out
