"""Cosimplicial chain complexes and conormalization.

A cosimplicial chain complex Y assigns a chain complex Y^p to each
cosimplicial degree p <= p_max, with coface chain maps d^i: Y^{p-1} -> Y^p
(0 <= i <= p) and codegeneracy chain maps s^i: Y^{p+1} -> Y^p (0 <= i <= p)
satisfying the cosimplicial identities.

Conormalization produces a left-plane bicomplex: the cell in column -p and
row q is the cokernel of d^1..d^p on Y^p in chain degree q, with coset
representatives the standard basis vectors at the non-pivot coordinates of
the span of the coface images.  The horizontal differential is induced by
the sum of all cofaces, the vertical one by the level differentials.

conormalize_tensor_square computes the conormalization of Y tensor Y
without ever materializing the tensor-square levels: when every coface is
a monomial injective matrix, the coface images span coordinate subspaces,
and the surviving basis of C(Y ten Y)^p consists of the pairs (x, y) whose
miss sets {k >= 1 : x in im d^k} are disjoint.  This is exactly the basis
the general path would produce, in the same order.
"""

from __future__ import annotations

import numpy as np

from .chains import (
    Bicomplex,
    BicomplexTensor,
    ChainComplex,
    ChainMap,
    InvolutiveBicomplex,
    _column_supports,
    _tensor_layout,
    direct_sum,
    quadratic_construction,
    quadratic_map,
    sum_map,
    suspend,
    tensor,
    tensor_map,
)
from .f2 import BitMatrix, LinearSolver, Subspace, kron, vstack


class CosimplicialChainComplex:
    """Levels Y^0..Y^{p_max} with coface and codegeneracy chain maps.

    cofaces are keyed (p, i) for the map d^i: Y^{p-1} -> Y^p, 1 <= p <= p_max;
    codegeneracies are keyed (p, i) for s^i: Y^{p+1} -> Y^p, 0 <= p < p_max.
    """

    __slots__ = ("p_max", "levels", "cofaces", "codegeneracies")

    def __init__(self, levels, cofaces, codegeneracies, check=True):
        self.levels = list(levels)
        self.p_max = len(self.levels) - 1
        self.cofaces = dict(cofaces)
        self.codegeneracies = dict(codegeneracies)
        if check:
            for p in range(1, self.p_max + 1):
                for i in range(p + 1):
                    if (p, i) not in self.cofaces:
                        raise ValueError(f"missing coface ({p},{i})")
            for p in range(self.p_max):
                for i in range(p + 1):
                    if (p, i) not in self.codegeneracies:
                        raise ValueError(f"missing codegeneracy ({p},{i})")

    def level(self, p: int) -> ChainComplex:
        return self.levels[p]

    def coface(self, p: int, i: int) -> ChainMap:
        return self.cofaces[(p, i)]

    def codegeneracy(self, p: int, i: int) -> ChainMap:
        return self.codegeneracies[(p, i)]

    def validate_report(self) -> list[str]:
        """Every violated cosimplicial or chain-map identity, as strings."""
        report = []
        for (p, i), f in sorted(self.cofaces.items()):
            try:
                f._validate()
            except ValueError as exc:
                report.append(f"coface d^{i} into level {p}: {exc}")
        for (p, i), f in sorted(self.codegeneracies.items()):
            try:
                f._validate()
            except ValueError as exc:
                report.append(f"codegeneracy s^{i} from level {p + 1}: {exc}")
        for p in range(2, self.p_max + 1):
            for j in range(p + 1):
                for i in range(j):
                    lhs = self.coface(p, j).compose(self.coface(p - 1, i))
                    rhs = self.coface(p, i).compose(self.coface(p - 1, j - 1))
                    if lhs != rhs:
                        report.append(f"coface identity d^{j} d^{i} != d^{i} d^{j-1} at level {p}")
        for p in range(self.p_max - 1):
            for j in range(p + 1):
                for i in range(j + 1):
                    lhs = self.codegeneracy(p, j).compose(self.codegeneracy(p + 1, i))
                    rhs = self.codegeneracy(p, i).compose(self.codegeneracy(p + 1, j + 1))
                    if lhs != rhs:
                        report.append(f"codegeneracy identity s^{j} s^{i} != s^{i} s^{j+1} at level {p}")
        for p in range(self.p_max):
            for j in range(p + 1):
                for i in range(p + 2):
                    lhs = self.codegeneracy(p, j).compose(self.coface(p + 1, i))
                    if i < j:
                        rhs = self.coface(p, i).compose(self.codegeneracy(p - 1, j - 1)) if p >= 1 else None
                    elif i in (j, j + 1):
                        rhs = ChainMap.identity(self.level(p))
                    else:
                        rhs = self.coface(p, i - 1).compose(self.codegeneracy(p - 1, j)) if p >= 1 else None
                    if rhs is not None and lhs != rhs:
                        report.append(f"mixed identity s^{j} d^{i} at level {p}")
        return report

    def to_json(self) -> dict:
        def maps_json(maps):
            return {
                f"{p},{i}": {str(k): f.mat(k).to_json() for k in f.source.dims if f.target.dim(k)}
                for (p, i), f in sorted(maps.items())
            }

        return {
            "p_max": self.p_max,
            "levels": [c.to_json() for c in self.levels],
            "cofaces": maps_json(self.cofaces),
            "codegeneracies": maps_json(self.codegeneracies),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CosimplicialChainComplex":
        levels = [ChainComplex.from_json(c) for c in obj["levels"]]
        p_max = int(obj["p_max"])
        if p_max != len(levels) - 1:
            raise ValueError("p_max does not match the number of levels")

        def maps_from(blob, src_of, tgt_of):
            out = {}
            for key, per_deg in blob.items():
                p, i = (int(x) for x in key.split(","))
                mats = {int(k): BitMatrix.from_json(m) for k, m in per_deg.items()}
                out[(p, i)] = ChainMap(src_of(p), tgt_of(p), mats)
            return out

        cofaces = maps_from(obj.get("cofaces", {}), lambda p: levels[p - 1], lambda p: levels[p])
        codegens = maps_from(obj.get("codegeneracies", {}), lambda p: levels[p + 1], lambda p: levels[p])
        return cls(levels, cofaces, codegens)


def validate(y: CosimplicialChainComplex) -> list[str]:
    return y.validate_report()


class CosimplicialMap:
    """Levelwise chain maps commuting with all structure maps."""

    __slots__ = ("source", "target", "components")

    def __init__(self, source, target, components, check=True):
        self.source = source
        self.target = target
        self.components = list(components)
        if check:
            self._validate()

    def component(self, p: int) -> ChainMap:
        return self.components[p]

    def _validate(self) -> None:
        if len(self.components) != self.source.p_max + 1 or self.source.p_max != self.target.p_max:
            raise ValueError("component count does not match p_max")
        for (p, i), d in self.source.cofaces.items():
            lhs = self.components[p].compose(d)
            rhs = self.target.coface(p, i).compose(self.components[p - 1])
            if lhs != rhs:
                raise ValueError(f"map does not commute with coface ({p},{i})")
        for (p, i), s in self.source.codegeneracies.items():
            lhs = self.components[p].compose(s)
            rhs = self.target.codegeneracy(p, i).compose(self.components[p + 1])
            if lhs != rhs:
                raise ValueError(f"map does not commute with codegeneracy ({p},{i})")


def constant_cosimplicial(c: ChainComplex, p_max: int) -> CosimplicialChainComplex:
    """All levels equal to c, all structure maps the identity."""
    ident = ChainMap.identity(c)
    cofaces = {(p, i): ident for p in range(1, p_max + 1) for i in range(p + 1)}
    codegens = {(p, i): ident for p in range(p_max) for i in range(p + 1)}
    return CosimplicialChainComplex([c] * (p_max + 1), cofaces, codegens)


def levelwise_suspend(y: CosimplicialChainComplex, k: int) -> CosimplicialChainComplex:
    levels = [suspend(c, k) for c in y.levels]

    def shift(f: ChainMap, src, tgt):
        return ChainMap(src, tgt, {q + k: f.mat(q) for q in f.source.dims}, check=False)

    cofaces = {key: shift(f, levels[key[0] - 1], levels[key[0]]) for key, f in y.cofaces.items()}
    codegens = {key: shift(f, levels[key[0] + 1], levels[key[0]]) for key, f in y.codegeneracies.items()}
    return CosimplicialChainComplex(levels, cofaces, codegens)


def levelwise_quadratic(y: CosimplicialChainComplex, n: int) -> CosimplicialChainComplex:
    """Apply the quadratic construction to every level and structure map."""
    levels = [quadratic_construction(c, n) for c in y.levels]
    cofaces = {
        (p, i): quadratic_map(f, n, levels[p - 1], levels[p])
        for (p, i), f in y.cofaces.items()
    }
    codegens = {
        (p, i): quadratic_map(f, n, levels[p + 1], levels[p])
        for (p, i), f in y.codegeneracies.items()
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def cosimplicial_tensor(a: CosimplicialChainComplex, b: CosimplicialChainComplex) -> CosimplicialChainComplex:
    """Levelwise tensor product with the diagonal cosimplicial structure."""
    if a.p_max != b.p_max:
        raise ValueError("p_max mismatch")
    levels = [tensor(a.level(p), b.level(p)) for p in range(a.p_max + 1)]
    cofaces = {
        (p, i): tensor_map(a.coface(p, i), b.coface(p, i), levels[p - 1], levels[p])
        for (p, i) in a.cofaces
    }
    codegens = {
        (p, i): tensor_map(a.codegeneracy(p, i), b.codegeneracy(p, i), levels[p + 1], levels[p])
        for (p, i) in a.codegeneracies
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def cosimplicial_direct_sum(a: CosimplicialChainComplex, b: CosimplicialChainComplex) -> CosimplicialChainComplex:
    if a.p_max != b.p_max:
        raise ValueError("p_max mismatch")
    levels = [direct_sum(a.level(p), b.level(p)) for p in range(a.p_max + 1)]
    cofaces = {
        (p, i): sum_map(a.coface(p, i), b.coface(p, i), levels[p - 1], levels[p])
        for (p, i) in a.cofaces
    }
    codegens = {
        (p, i): sum_map(a.codegeneracy(p, i), b.codegeneracy(p, i), levels[p + 1], levels[p])
        for (p, i) in a.codegeneracies
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def levelwise_homology(y: CosimplicialChainComplex) -> CosimplicialChainComplex:
    """Levelwise homology with the induced structure maps (zero differentials)."""
    homs = {}
    levels = []
    for p in range(y.p_max + 1):
        c = y.level(p)
        dims = {}
        labels = {}
        for q in c.degrees():
            h = c.homology(q)
            homs[(p, q)] = h
            if h.dim:
                dims[q] = h.dim
                labels[q] = [f"h{q}.{i}" for i in range(h.dim)]
        levels.append(ChainComplex(dims, {}, labels, check=False))

    def induced(f: ChainMap, p_src, p_tgt):
        mats = {}
        for q in levels[p_src].dims:
            if not levels[p_tgt].dim(q):
                continue
            hs, ht = homs[(p_src, q)], homs[(p_tgt, q)]
            imgs = hs.reps @ f.mat(q).transpose()
            mats[q] = ht.class_coords_rows(imgs).transpose()
        return ChainMap(levels[p_src], levels[p_tgt], mats, check=False)

    cofaces = {(p, i): induced(f, p - 1, p) for (p, i), f in y.cofaces.items()}
    codegens = {(p, i): induced(f, p + 1, p) for (p, i), f in y.codegeneracies.items()}
    return CosimplicialChainComplex(levels, cofaces, codegens)


def _monomial_images(mat: BitMatrix) -> np.ndarray | None:
    """Per-column image index of a monomial injective matrix, -1 for zero columns.

    Returns None when the matrix is not monomial (some column has weight > 1)
    or not injective on basis elements (two columns share their image).
    """
    dense = mat.to_dense()
    weights = dense.sum(axis=0)
    if np.any(weights > 1):
        return None
    img = np.full(mat.cols, -1, dtype=np.int64)
    if mat.cols:
        rows, cols = np.nonzero(dense.T)
        img[rows] = cols
        hit = img[img >= 0]
        if len(set(hit.tolist())) != hit.size:
            return None
    return img


class Conormalization:
    """Conormalized bicomplex of a cosimplicial chain complex.

    Cells are keyed (-p, q).  reps[cell] lists the level-basis coordinates
    of the surviving standard basis vectors; denominators[cell] is the span
    of the coface images.  normalized_reps gives the other distinguished
    section: the representative of each class killed by every codegeneracy,
    which is the one the pairing maps must be evaluated on.
    """

    __slots__ = ("source", "bicomplex", "reps", "denominators", "_nreps")

    def __init__(self, source, bicomplex, reps, denominators):
        self.source = source
        self.bicomplex = bicomplex
        self.reps = reps
        self.denominators = denominators
        self._nreps = {}

    def project_rows(self, cell, m: BitMatrix) -> BitMatrix:
        """Project row vectors of level p = -cell[0] degree cell[1] to the cokernel."""
        red = m.copy()
        self.denominators[cell].reduce_rows_inplace(red)
        return red.select_columns(self.reps[cell])

    def project(self, cell, vec: np.ndarray) -> np.ndarray:
        return self.project_rows(cell, BitMatrix.row_vector(vec)).row_dense(0)

    def project_cols(self, cell, m: BitMatrix) -> BitMatrix:
        return self.project_rows(cell, m.transpose()).transpose()

    def include(self, cell, coords: np.ndarray) -> np.ndarray:
        p, q = cell
        out = np.zeros(self.source.level(-p).dim(q), dtype=np.uint8)
        out[self.reps[cell][np.nonzero(np.asarray(coords, dtype=np.uint8))[0]]] = 1
        return out

    def normalized_reps(self, cell) -> BitMatrix:
        """Rows: the representative of each class killed by all codegeneracies."""
        cached = self._nreps.get(cell)
        if cached is not None:
            return cached
        p, q = -cell[0], cell[1]
        n = self.source.level(p).dim(q)
        dim = self.reps[cell].size
        if p == 0:
            rows = BitMatrix.from_entries(dim, n, list(enumerate(self.reps[cell].tolist())))
        else:
            stacked = vstack([self.source.codegeneracy(p - 1, i).mat(q) for i in range(p)])
            nb = stacked.kernel_basis()
            if nb.rows != dim:
                raise ValueError(f"codegeneracy kernel does not match cokernel at {cell}")
            coords = self.project_rows(cell, nb)
            sols, ok = LinearSolver(coords.transpose()).solve_rows(BitMatrix.identity(dim))
            if not ok.all():
                raise ValueError(f"normalized section is not surjective at {cell}")
            rows = sols @ nb
        self._nreps[cell] = rows
        return rows

    def set_normalized_reps(self, cell, rows: BitMatrix) -> None:
        """Install externally known normalized representatives, after checking.

        rows must be killed by every codegeneracy and project to the
        identity in the class coordinates of the cell.
        """
        p, q = -cell[0], cell[1]
        for i in range(p):
            if not (self.source.codegeneracy(p - 1, i).mat(q) @ rows.transpose()).is_zero():
                raise ValueError("rows are not killed by the codegeneracies")
        if self.project_rows(cell, rows) != BitMatrix.identity(self.reps[cell].size):
            raise ValueError("rows do not represent the cell's classes")
        self._nreps[cell] = rows


def conormalization(y: CosimplicialChainComplex, complete: bool = False) -> Conormalization:
    """Cokernel of d^1..d^p in every level and chain degree, with its data.

    complete declares that all columns beyond p_max are zero; builders that
    know a vanishing bound pass True so that downstream computations treat
    the window as exact rather than truncated.
    """
    reps: dict[tuple[int, int], np.ndarray] = {}
    dens: dict[tuple[int, int], Subspace] = {}
    dims = {}
    labels = {}
    for p in range(y.p_max + 1):
        level = y.level(p)
        for q in level.degrees():
            n = level.dim(q)
            if p:
                mono = [_monomial_images(y.coface(p, k).mat(q)) for k in range(1, p + 1)]
                if all(m is not None for m in mono):
                    covered = sorted({int(t) for m in mono for t in m if t >= 0})
                    basis = BitMatrix.from_entries(len(covered), n, list(enumerate(covered)))
                    den = Subspace(n, basis, covered)
                else:
                    rows = vstack([y.coface(p, k).mat(q).transpose() for k in range(1, p + 1)])
                    den = Subspace.from_rows(rows)
            else:
                den = Subspace.zero(n)
            free = np.array([j for j in range(n) if j not in set(den.pivots)], dtype=np.int64)
            cell = (-p, q)
            reps[cell] = free
            dens[cell] = den
            if free.size:
                dims[cell] = free.size
                labels[cell] = [level.labels(q)[j] for j in free]
    con = Conormalization(y, None, reps, dens)
    dh = {}
    dv = {}
    for (mp, q), n in dims.items():
        p = -mp
        level = y.level(p)
        tgt_v = (mp, q - 1)
        if tgt_v in dims:
            cols = level.d(q).select_columns(reps[(mp, q)])
            dv[(mp, q)] = con.project_cols(tgt_v, cols)
        tgt_h = (mp - 1, q)
        if tgt_h in dims and p + 1 <= y.p_max:
            total = None
            for i in range(p + 2):
                m = y.coface(p + 1, i).mat(q)
                total = m if total is None else total ^ m
            cols = total.select_columns(reps[(mp, q)])
            dh[(mp, q)] = con.project_cols(tgt_h, cols)
    bic = Bicomplex(dims, dh, dv, labels, exact_left=complete)
    return Conormalization(y, bic, reps, dens)


def conormalize(y: CosimplicialChainComplex, complete: bool = False) -> Bicomplex:
    """The conormalized bicomplex; column -p holds coker(d^1 + .. + d^p)."""
    return conormalization(y, complete).bicomplex


def conormalize_map(f, src: Conormalization, dst: Conormalization) -> dict:
    """Blocks of the bicomplex map induced on conormalizations by f.

    f is a CosimplicialMap or a sequence of per-level ChainMaps.  The result
    maps each source cell to the matrix into the same (-p, q) cell of dst.
    """
    comps = f.components if isinstance(f, CosimplicialMap) else list(f)
    out = {}
    for cell, free in src.reps.items():
        p, q = -cell[0], cell[1]
        if not free.size or cell not in dst.reps:
            continue
        g = comps[p].mat(q)
        den_imgs = src.denominators[cell].basis @ g.transpose()
        if not dst.denominators[cell].contains_rows(den_imgs):
            raise ValueError(f"map is not filtered at cell {cell}")
        out[cell] = dst.project_cols(cell, g.select_columns(free))
    return out


class TensorSquareConormalization:
    """Conormalization of Y tensor Y built directly on surviving pairs.

    Requires every coface of Y to be monomial injective.  pairs[cell] holds
    three parallel arrays (x-degree, x-index within that degree, y-index
    within degree q - x-degree); index[cell] maps such triples to positions.
    The involution swaps the two tensor factors.
    """

    __slots__ = ("source", "involutive", "pairs", "index")

    def __init__(self, source, involutive, pairs, index):
        self.source = source
        self.involutive = involutive
        self.pairs = pairs
        self.index = index

    @property
    def bicomplex(self) -> Bicomplex:
        return self.involutive.bicomplex

    def induced_square_map(self, comps, target: "TensorSquareConormalization") -> dict:
        """Blocks of C(f tensor f) for levelwise chain maps f (comps[p])."""
        out = {}
        for cell, (qx, xi, yi) in self.pairs.items():
            p, q = -cell[0], cell[1]
            if cell not in target.pairs:
                continue
            tqx, txi, tyi = target.pairs[cell]
            n_src = qx.size
            n_tgt = tqx.size
            if not n_src or not n_tgt:
                continue
            f = comps[p]
            dense = {d: f.mat(d).to_dense() for d in set(qx.tolist())}
            entries = []
            for s in range(n_src):
                dmat = dense[int(qx[s])]
                dy = f.mat(q - int(qx[s])).to_dense() if (q - int(qx[s])) != int(qx[s]) else dmat
                # target indices are only valid within the same x-degree
                sel = np.nonzero(tqx == qx[s])[0]
                if not sel.size:
                    continue
                fx = dmat[:, xi[s]]
                fy = dy[:, yi[s]]
                hits = sel[(fx[txi[sel]] & fy[tyi[sel]]).astype(bool)]
                entries.extend((int(t), s) for t in hits)
            out[cell] = BitMatrix.from_entries(n_tgt, n_src, entries)
        return out


def conormalize_tensor_square(y: CosimplicialChainComplex, complete: bool = False) -> TensorSquareConormalization:
    """C(Y tensor Y) with its swap involution, on the covering-pair basis.

    A pair (x, y) of level-p basis elements survives conormalization exactly
    when no single coface index k >= 1 hits both coordinates.
    """
    pair_arrays: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    index: dict[tuple[int, int], dict] = {}
    dims = {}
    labels = {}
    for p in range(y.p_max + 1):
        level = y.level(p)
        degs = level.degrees()
        masks = {}
        for q in degs:
            masks[q] = np.zeros(level.dim(q), dtype=np.uint64)
        for k in range(1, p + 1):
            f = y.coface(p, k)
            for q in degs:
                img = _monomial_images(f.mat(q))
                if img is None:
                    raise ValueError("tensor-square fast path requires monomial injective cofaces")
                hit = img[img >= 0]
                masks[q][hit] |= np.uint64(1) << np.uint64(k)
        # enumerate surviving pairs, x-degree major, then x, then y
        cells: dict[int, list[tuple[int, int, int]]] = {}
        for qx in degs:
            mx = masks[qx]
            for qy in degs:
                my = masks[qy]
                if not mx.size or not my.size:
                    continue
                for xi in range(mx.size):
                    ok = np.nonzero((my & mx[xi]) == 0)[0]
                    if ok.size:
                        cells.setdefault(qx + qy, []).extend((qx, xi, int(t)) for t in ok)
        for q, trips in cells.items():
            cell = (-p, q)
            qx = np.array([t[0] for t in trips], dtype=np.int64)
            xi = np.array([t[1] for t in trips], dtype=np.int64)
            yi = np.array([t[2] for t in trips], dtype=np.int64)
            pair_arrays[cell] = (qx, xi, yi)
            index[cell] = {t: pos for pos, t in enumerate(trips)}
            dims[cell] = len(trips)
            labels[cell] = [
                (level.labels(a)[b], level.labels(q - a)[c]) for a, b, c in trips
            ]
    dh = {}
    dv = {}
    sigma = {}
    for cell, (qx, xi, yi) in pair_arrays.items():
        p, q = -cell[0], cell[1]
        level = y.level(p)
        col_sup = {d: _column_supports(level.d(d)) for d in set(qx.tolist()) | {q - int(a) for a in set(qx.tolist())}}
        # swap involution
        entries = []
        idx = index[cell]
        for s in range(qx.size):
            entries.append((idx[(q - int(qx[s]), int(yi[s]), int(xi[s]))], s))
        sigma[cell] = BitMatrix.from_entries(qx.size, qx.size, entries)
        # vertical differential: d x ten y + x ten d y, dropped where not surviving
        tgt = (-p, q - 1)
        if tgt in index:
            tidx = index[tgt]
            entries = []
            for s in range(qx.size):
                a, b, c = int(qx[s]), int(xi[s]), int(yi[s])
                for tb in col_sup[a][b]:
                    t = tidx.get((a - 1, int(tb), c))
                    if t is not None:
                        entries.append((t, s))
                for tc in col_sup[q - a][c]:
                    t = tidx.get((a, b, int(tc)))
                    if t is not None:
                        entries.append((t, s))
            dv[cell] = BitMatrix.from_entries(dims[tgt], qx.size, entries)
        # horizontal differential: of the coface sum, only the d^0 term can
        # survive projection, since (d^k x, d^k y) is covered by k for k >= 1
        tgt = (-(p + 1), q)
        if tgt in index and p + 1 <= y.p_max:
            tidx = index[tgt]
            d0 = y.coface(p + 1, 0)
            im = {d: _monomial_images(d0.mat(d)) for d in set(qx.tolist()) | {q - int(a) for a in set(qx.tolist())}}
            entries = []
            for s in range(qx.size):
                a, b, c = int(qx[s]), int(xi[s]), int(yi[s])
                tb, tc = im[a][b], im[q - a][c]
                if tb >= 0 and tc >= 0:
                    t = tidx.get((a, int(tb), int(tc)))
                    if t is not None:
                        entries.append((t, s))
            dh[cell] = BitMatrix.from_entries(dims[tgt], qx.size, entries)
    bic = Bicomplex(dims, dh, dv, labels, exact_left=complete)
    return TensorSquareConormalization(y, InvolutiveBicomplex(bic, sigma), pair_arrays, index)


def check_bicomplex_map(src: Bicomplex, tgt: Bicomplex, blocks: dict, cells=None) -> list[str]:
    """Violations of d_h/d_v commutation for a cellwise bicomplex map.

    Missing blocks are zero maps.  cells restricts the check; by default
    every source cell is checked, which is only meaningful when the block
    dict covers the whole relevant window.
    """

    def block(cell):
        m = blocks.get(cell)
        return m if m is not None else BitMatrix(tgt.dim(*cell), src.dim(*cell))

    bad = []
    for cell in sorted(cells if cells is not None else src.dims):
        p, q = cell
        if block((p - 1, q)) @ src.dh(p, q) != tgt.dh(p, q) @ block(cell):
            bad.append(f"d_h does not commute at {cell}")
        if block((p, q - 1)) @ src.dv(p, q) != tgt.dv(p, q) @ block(cell):
            bad.append(f"d_v does not commute at {cell}")
    return bad


def tensor_block_map(src: BicomplexTensor, tgt: BicomplexTensor, fa: dict, fb: dict) -> dict:
    """Cellwise matrices of fa tensor fb between tensor bicomplexes.

    fa and fb map cells of the left and right factors to matrices into the
    same cell of the target factors; missing entries are zero blocks.
    """
    out = {}
    for cell in src.bicomplex.dims:
        if cell not in tgt.bicomplex.dims:
            continue
        tgt_off = {(ca, cb): off for ca, cb, off in tgt.blocks(cell)}
        mat = BitMatrix(tgt.bicomplex.dims[cell], src.bicomplex.dims[cell])
        for ca, cb, off in src.blocks(cell):
            if (ca, cb) in tgt_off and ca in fa and cb in fb:
                mat.paste(kron(fa[ca], fb[cb]), tgt_off[(ca, cb)], off)
        out[cell] = mat
    return out


class AwMap:
    """Front-and-back coface pairing C(a) tensor C(b) -> C(a tensor b).

    source is the tensor bicomplex of the two conormalizations.  On the
    block of representatives x in column -p, y in column -m, the image is
    (d^{p+m} o .. o d^{p+1})(x) tensor ((d^0)^p)(y) projected to the
    conormalized cokernel; blocks maps each source cell to its matrix into
    the same cell of the target, restricted to columns within the target's
    p_max.
    """

    __slots__ = ("source", "target", "blocks")

    def __init__(self, source, target, blocks):
        self.source = source
        self.target = target
        self.blocks = blocks

    def block(self, cell) -> BitMatrix:
        m = self.blocks.get(cell)
        if m is not None:
            return m
        return BitMatrix(self.target.dim(*cell), self.source.bicomplex.dim(*cell))

    def apply_pair(self, cell_a, va: np.ndarray, cell_b, vb: np.ndarray) -> tuple[tuple[int, int], np.ndarray]:
        """Image of the class with coordinate vectors va, vb in its cell."""
        cell = (cell_a[0] + cell_b[0], cell_a[1] + cell_b[1])
        vec = np.zeros(self.source.bicomplex.dim(*cell), dtype=np.uint8)
        for ca, cb, off in self.source.blocks(cell):
            if ca == cell_a and cb == cell_b:
                nb = self.source.right.dims[cb]
                block = np.outer(np.asarray(va, dtype=np.uint8), np.asarray(vb, dtype=np.uint8)) & 1
                vec[off : off + block.size] = block.reshape(-1)
        return cell, self.block(cell).matvec(vec)


def _back_coface_matrix(y: CosimplicialChainComplex, p: int, top: int, q: int) -> BitMatrix:
    """d^{top} o ... o d^{p+1} at chain degree q, each arrow its last coface."""
    mat = BitMatrix.identity(y.level(p).dim(q))
    for j in range(p + 1, top + 1):
        mat = y.coface(j, j).mat(q) @ mat
    return mat


def _front_coface_matrix(y: CosimplicialChainComplex, m: int, top: int, q: int) -> BitMatrix:
    """(d^0)^(top - m) at chain degree q."""
    mat = BitMatrix.identity(y.level(m).dim(q))
    for j in range(m + 1, top + 1):
        mat = y.coface(j, 0).mat(q) @ mat
    return mat


def aw_map(a: CosimplicialChainComplex, b: CosimplicialChainComplex, cona=None, conb=None, conab=None) -> AwMap:
    """AW: C(a) tensor C(b) -> C(a tensor b), materializing the tensor levels.

    Precomputed conormalizations may be passed to share work; conab must be
    the conormalization of cosimplicial_tensor(a, b).
    """
    if cona is None:
        cona = conormalization(a)
    if conb is None:
        conb = conormalization(b)
    if conab is None:
        conab = conormalization(cosimplicial_tensor(a, b))
    src = BicomplexTensor(cona.bicomplex, conb.bicomplex)
    p_top = conab.source.p_max
    blocks = {}
    for cell in src.bicomplex.dims:
        if -cell[0] > p_top or cell not in conab.bicomplex.dims:
            continue
        P, Q = -cell[0], cell[1]
        la, lb = a.level(P), b.level(P)
        amb = conab.source.level(P).dim(Q)
        tgt_index = {trip: pos for pos, trip in enumerate(_tensor_layout(la, lb, Q))}
        mat = BitMatrix(conab.bicomplex.dims[cell], src.bicomplex.dims[cell])
        for ca, cb, off in src.blocks(cell):
            p, qa = -ca[0], ca[1]
            m, qb = -cb[0], cb[1]
            back = _column_supports(_back_coface_matrix(a, p, P, qa) @ cona.normalized_reps(ca).transpose())
            front = _column_supports(_front_coface_matrix(b, m, P, qb) @ conb.normalized_reps(cb).transpose())
            nb = len(front)
            entries = []
            for ia, sup_a in enumerate(back):
                for ib, sup_b in enumerate(front):
                    row = ia * nb + ib
                    for s in sup_a:
                        for t in sup_b:
                            entries.append((row, tgt_index[(qa, int(s), int(t))]))
            rows = BitMatrix.from_entries(nb * len(back), amb, entries)
            mat.paste(conab.project_rows(cell, rows).transpose(), 0, off)
        blocks[cell] = mat
    return AwMap(src, conab.bicomplex, blocks)


def aw_map_square(y: CosimplicialChainComplex, cony=None, tsq=None) -> AwMap:
    """AW: C(y) tensor C(y) -> C(y tensor y) on the covering-pair basis.

    Requires monomial injective cofaces; never materializes tensor levels,
    so it scales to levels where aw_map cannot.
    """
    if cony is None:
        cony = conormalization(y)
    if tsq is None:
        tsq = conormalize_tensor_square(y)
    src = BicomplexTensor(cony.bicomplex, cony.bicomplex)
    blocks = {}
    for cell in src.bicomplex.dims:
        if cell not in tsq.index:
            continue
        P, Q = -cell[0], cell[1]
        idx = tsq.index[cell]
        mat_entries = []
        for ca, cb, off in src.blocks(cell):
            p, qa = -ca[0], ca[1]
            m, qb = -cb[0], cb[1]
            back = np.arange(y.level(p).dim(qa), dtype=np.int64)
            for j in range(p + 1, P + 1):
                img = _monomial_images(y.coface(j, j).mat(qa))
                if img is None:
                    raise ValueError("aw_map_square requires monomial injective cofaces")
                back = np.where(back >= 0, img[back], -1)
            front = np.arange(y.level(m).dim(qb), dtype=np.int64)
            for j in range(m + 1, P + 1):
                img = _monomial_images(y.coface(j, 0).mat(qb))
                if img is None:
                    raise ValueError("aw_map_square requires monomial injective cofaces")
                front = np.where(front >= 0, img[front], -1)
            nra = cony.normalized_reps(ca)
            nrb = cony.normalized_reps(cb)
            nb = nrb.rows

            def pushed(rows, chain):
                out = []
                for i in range(rows.rows):
                    arr = chain[np.nonzero(rows.row_dense(i))[0]]
                    arr = arr[arr >= 0]
                    vals, counts = np.unique(arr, return_counts=True)
                    out.append(vals[counts % 2 == 1])
                return out

            for ia, sa in enumerate(pushed(nra, back)):
                for ib, tb in enumerate(pushed(nrb, front)):
                    col = off + ia * nb + ib
                    for s in sa.tolist():
                        for t in tb.tolist():
                            pos = idx.get((qa, s, t))
                            if pos is not None:
                                mat_entries.append((pos, col))
        blocks[cell] = BitMatrix.from_entries(
            tsq.bicomplex.dim(*cell), src.bicomplex.dims[cell], mat_entries
        )
    return AwMap(src, tsq.bicomplex, blocks)