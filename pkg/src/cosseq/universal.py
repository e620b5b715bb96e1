"""Universal examples and their predicted spectral sequence tables.

D is a cosimplicial chain complex whose level p holds the simplicial chains
of the full simplex on {0..p} in a fixed band of degrees.  The truncated
quadratic construction on D has a first page spanned by eight labeled
families of classes indexed by order-preserving injections; this module
builds D, enumerates the predicted tables, and constructs the comparison
complexes that realize the families, verifying every step mechanically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import total_ordering
from math import inf

import numpy as np

from .chains import (
    Bicomplex,
    ChainComplex,
    ChainMap,
    FilteredMap,
    FilteredTotalComplex,
    _w_block_offsets,
    bicomplex_tensor_over_pi,
    build_w,
    columnwise_homology,
    total_filtered,
)
from .cosimplicial import (
    CosimplicialChainComplex,
    TensorSquareConormalization,
    conormalize_tensor_square,
)
from .f2 import BitMatrix, LinearSolver, vstack

INFINITY = inf


@total_ordering
@dataclass(frozen=True)
class Injection:
    """Order-preserving injection [s] -> [p], recorded by its image tuple.

    Injections compare in reverse dictionary order on the image, so the
    lexicographically largest image is the smallest injection.
    """

    s: int
    p: int
    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != self.s + 1:
            raise ValueError("an injection on [s] takes s + 1 values")
        if any(b <= a for a, b in zip(vals, vals[1:])) or vals[0] < 0 or vals[-1] > self.p:
            raise ValueError("values must be strictly increasing within [0, p]")

    def __lt__(self, other):
        if not isinstance(other, Injection):
            return NotImplemented
        return self.values > other.values


def h_set(s: int, p: int) -> list[Injection]:
    """The injections [s] -> [p] fixing 0, sorted in reverse dictionary order."""
    if s < 0 or p < s:
        return []
    return sorted(
        Injection(s, p, (0, *tail)) for tail in itertools.combinations(range(1, p + 1), s)
    )


@dataclass(frozen=True)
class UniversalParams:
    """Shape of a universal example: page bound r, weight s, degree t, height n.

    r is an integer at least 2 or INFINITY; p_max bounds the cosimplicial
    levels and defaults to a window wide enough for every predicted family.
    """

    r: object
    s: int
    t: int
    n: int
    p_max: int | None = None

    def __post_init__(self):
        if self.r != INFINITY and (not isinstance(self.r, int) or self.r < 2):
            raise ValueError("page bound r must be an integer >= 2 or INFINITY")
        if self.s < 0:
            raise ValueError("weight s must be nonnegative")
        if self.n < 1:
            raise ValueError("height n must be at least 1")
        if self.p_max is None:
            wide = 2 * (self.s + self.r) + 2 if self.r != INFINITY else 2 * self.s + self.n + 3
            object.__setattr__(self, "p_max", int(wide))
        elif self.p_max < 0:
            raise ValueError("p_max must be nonnegative")

    @property
    def finite(self) -> bool:
        return self.r != INFINITY

    @property
    def hypothesis_met(self) -> bool:
        """Heights below 2 sit outside the hypothesis of the table theorems."""
        return self.n >= 2


@dataclass(frozen=True, eq=False)
class PredictedTable:
    """Predicted dimensions of one labeled family, keyed by bidegree."""

    family: str
    cells: dict
    hypothesis_met: bool = True

    def dim(self, p: int, q: int) -> int:
        return self.cells.get((p, q), 0)

    def support(self) -> list[tuple[int, int]]:
        return sorted(self.cells)

    def to_json(self) -> dict:
        out = {
            "family": self.family,
            "cells": [
                {"p": p, "q": q, "dim": d} for (p, q), d in sorted(self.cells.items())
            ],
        }
        if not self.hypothesis_met:
            out["hypothesis_met"] = False
        return out


def _tuple_complex(p: int, lo: int, hi: int, shift: int) -> ChainComplex:
    """Simplicial chains of the full simplex on {0..p} in degrees [lo, hi].

    Basis elements are ascending vertex tuples; the whole complex is
    regraded upward by shift.
    """
    hi = min(hi, p)
    if p < 0 or hi < lo:
        return ChainComplex({}, {})
    labs = {k: list(itertools.combinations(range(p + 1), k + 1)) for k in range(lo, hi + 1)}
    dims = {k + shift: len(labs[k]) for k in labs}
    labels = {k + shift: labs[k] for k in labs}
    d = {}
    for k in range(lo + 1, hi + 1):
        index = {tup: i for i, tup in enumerate(labs[k - 1])}
        entries = []
        for j, tup in enumerate(labs[k]):
            for drop in range(len(tup)):
                entries.append((index[tup[:drop] + tup[drop + 1 :]], j))
        d[k + shift] = BitMatrix.from_entries(len(labs[k - 1]), len(labs[k]), entries)
    return ChainComplex(dims, d, labels, check=True)


def _vertex_chain_map(src: ChainComplex, tgt: ChainComplex, fn) -> ChainMap:
    """Chain map induced by a monotone vertex map; non-injective tuples die."""
    mats = {}
    for k in src.degrees():
        if tgt.dim(k) == 0:
            continue
        index = {tup: i for i, tup in enumerate(tgt.labels(k))}
        entries = []
        for j, tup in enumerate(src.labels(k)):
            img = tuple(fn(v) for v in tup)
            if all(a < b for a, b in zip(img, img[1:])):
                entries.append((index[img], j))
        mats[k] = BitMatrix.from_entries(tgt.dim(k), src.dim(k), entries)
    return ChainMap(src, tgt, mats, check=True)


def _coface_vertex(i: int):
    return lambda v: v + 1 if v >= i else v


def _codegeneracy_vertex(i: int):
    return lambda v: v - 1 if v > i else v


def build_delta(p_max: int) -> CosimplicialChainComplex:
    """The cosimplicial chain complex of the standard simplices, levels 0..p_max."""
    levels = [_tuple_complex(p, 0, p, 0) for p in range(p_max + 1)]
    cofaces = {
        (p, i): _vertex_chain_map(levels[p - 1], levels[p], _coface_vertex(i))
        for p in range(1, p_max + 1)
        for i in range(p + 1)
    }
    codegens = {
        (p, i): _vertex_chain_map(levels[p + 1], levels[p], _codegeneracy_vertex(i))
        for p in range(p_max)
        for i in range(p + 1)
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def build_d(params: UniversalParams) -> CosimplicialChainComplex:
    """The universal example: simplex chains in tuple degrees [s, s + r - 1].

    Degree s is regraded to t.  For r = INFINITY the band is unbounded above,
    so each level carries its full upper range.
    """
    s, t = params.s, params.t
    hi = params.s + params.r - 1 if params.finite else params.p_max
    levels = [_tuple_complex(p, s, int(min(hi, p)), t - s) for p in range(params.p_max + 1)]
    cofaces = {
        (p, i): _vertex_chain_map(levels[p - 1], levels[p], _coface_vertex(i))
        for p in range(1, params.p_max + 1)
        for i in range(p + 1)
    }
    codegens = {
        (p, i): _vertex_chain_map(levels[p + 1], levels[p], _codegeneracy_vertex(i))
        for p in range(params.p_max)
        for i in range(p + 1)
    }
    return CosimplicialChainComplex(levels, cofaces, codegens)


def _covering_pairs(a: int, b: int, p: int) -> list[tuple[Injection, Injection]]:
    """Ordered pairs from h_a x h_b whose images jointly cover {1..p}."""
    need = set(range(1, p + 1))
    hb = h_set(b, p)
    out = []
    for ea in h_set(a, p):
        rest = need.difference(ea.values)
        for eb in hb:
            if rest.issubset(eb.values):
                out.append((ea, eb))
    return out


def _distinct_pair_counts(a: int, bound: int) -> dict[int, int]:
    """Per level, the number of unordered distinct covering pairs in h_a."""
    out = {}
    for p in range(bound + 1):
        out[p] = sum(1 for ea, eb in _covering_pairs(a, a, p) if ea < eb)
    return out


def predicted_e1(params: UniversalParams) -> list[PredictedTable]:
    """First-page tables: two column families and six pair families.

    Pair multiplicities come from direct enumeration of covering pairs of
    injections; the w prefix marks first-page names.
    """
    s, t, n, r = params.s, params.t, params.n, params.r
    flag = params.hypothesis_met
    tables = []

    def add(family, cells):
        tables.append(PredictedTable(family, {c: d for c, d in cells.items() if d}, flag))

    add("wrfc", {(-s, 2 * t + m): 1 for m in range(n + 1)})
    if params.finite:
        add("wdrc", {(-s - r, 2 * t + 2 * r - 2 + m): 1 for m in range(n + 1)})
    same_s = _distinct_pair_counts(s, 2 * s)
    add("wrfb", {(-p, 2 * t): c for p, c in same_s.items()})
    add("wrft", {(-p, 2 * t + n): c for p, c in same_s.items()})
    if params.finite:
        mixed = {p: len(_covering_pairs(s, s + r, p)) for p in range(2 * s + r + 1)}
        same_sr = _distinct_pair_counts(s + r, 2 * (s + r))
        add("wrfmone", {(-p, 2 * t + r - 1): c for p, c in mixed.items()})
        add("wrfmtwo", {(-p, 2 * t + n + r - 1): c for p, c in mixed.items()})
        add("wdrb", {(-p, 2 * t + 2 * r - 2): c for p, c in same_sr.items()})
        add("wdrt", {(-p, 2 * t + 2 * r + n - 2): c for p, c in same_sr.items()})
    return tables


def predicted_e2(params: UniversalParams) -> list[PredictedTable]:
    """Second-page tables; every listed cell has dimension exactly one."""
    s, t, n, r = params.s, params.t, params.n, params.r
    flag = params.hypothesis_met
    tables = []

    def add(family, cells):
        tables.append(PredictedTable(family, cells, flag))

    rfc = {(-s, 2 * t + a): 1 for a in range(n)}
    if s == 0:
        rfc[(0, 2 * t + n)] = 1
    add("rfc", rfc)
    if params.finite:
        add("drc", {(-s - r, 2 * t + 2 * r - 2 + a): 1 for a in range(n)})
    add("rfb", {(-p, 2 * t): 1 for p in range(s + 1, 2 * s + 1)})
    add("rft", {(-p, 2 * t + n): 1 for p in range(s + 2, 2 * s + 1)})
    if params.finite:
        add("drb", {(-p, 2 * t + 2 * r - 2): 1 for p in range(s + r + 1, 2 * (s + r) + 1)})
        add("drt", {(-p, 2 * t + 2 * r + n - 2): 1 for p in range(s + r + 2, 2 * (s + r) + 1)})
        add("rfmone", {(-2 * s - r, 2 * t + r - 1): 1})
        add("rfmtwo", {(-2 * s - r, 2 * t + n + r - 1): 1})
    return tables


def lattice_l(params: UniversalParams) -> list[tuple[int, int]]:
    """The n + 1 second-page cells pinned by the height-n comparison map."""
    if not params.finite:
        raise ValueError("the lattice is defined for finite page bounds only")
    s, t, n, r = params.s, params.t, params.n, params.r
    row = 2 * t + 2 * r - 2
    if n <= s + r - 1:
        cells = [(-2 * (s + r) + j, row) for j in range(n + 1)]
    else:
        cells = [(-p, row) for p in range(s + r + 1, 2 * (s + r) + 1)]
        cells += [(-s - r, row + j) for j in range(n - r - s + 1)]
    return sorted(cells)


class _LabeledHomology:
    """Homology of one level in one degree, on an injection-labeled cycle basis."""

    __slots__ = ("injections", "index", "rows", "homology", "_solver")

    def __init__(self, injections, rows, homology, where):
        self.injections = injections
        self.index = {e: i for i, e in enumerate(injections)}
        self.rows = rows
        self.homology = homology
        if homology.dim != len(injections):
            raise ValueError(
                f"homology dimension mismatch at {where}: "
                f"{len(injections)} labels, dimension {homology.dim}"
            )
        coords = homology.class_coords_rows(rows)
        if coords.rank() != len(injections):
            raise ValueError(f"labeled cycles are not independent at {where}")
        self._solver = LinearSolver(coords.transpose())

    def to_labeled_rows(self, chains: BitMatrix) -> BitMatrix:
        """Coordinates in the labeled basis of the classes of the given cycles."""
        coords = self.homology.class_coords_rows(chains)
        if not self.injections:
            return coords
        sols, ok = self._solver.solve_rows(coords)
        if not ok.all():
            raise ValueError("class lies outside the labeled basis span")
        return sols

    def support_of(self, e: Injection) -> np.ndarray:
        return np.nonzero(self.rows.row_dense(self.index[e]))[0]


@dataclass(frozen=True, eq=False)
class _HomologyModule:
    """Levelwise homology of a universal example in one band, with labels."""

    module: CosimplicialChainComplex
    data: dict
    deg: int


def _injection_cycle_rows(level: ChainComplex, deg: int, injections, facet_sums: bool) -> BitMatrix:
    """Rows of labeled cycles: image tuples, or their facet sums at the top."""
    pos = {tup: i for i, tup in enumerate(level.labels(deg))}
    entries = []
    for i, e in enumerate(injections):
        if facet_sums:
            for drop in range(len(e.values)):
                entries.append((i, pos[e.values[:drop] + e.values[drop + 1 :]]))
        else:
            entries.append((i, pos[e.values]))
    return BitMatrix.from_entries(len(injections), level.dim(deg), entries)


def _induced_on_labels(f: ChainMap, dsrc, ddst, csrc, cdst, deg: int) -> ChainMap:
    """The map induced on labeled homology by one structure map of the example."""
    if dsrc is None or ddst is None:
        return ChainMap(csrc, cdst, {}, check=False)
    img = dsrc.rows @ f.mat(deg).transpose()
    mat = ddst.to_labeled_rows(img).transpose()
    return ChainMap(csrc, cdst, {deg: mat}, check=False)


def _homology_module(y: CosimplicialChainComplex, a: int, deg: int, facet_sums: bool) -> _HomologyModule:
    """Labeled homology of every level of y in one degree, as a cosimplicial module.

    The labeled basis is h_a^p at level p; the construction fails loudly if
    the computed homology disagrees with the labels or the induced structure
    maps break any cosimplicial identity.
    """
    levels = []
    data = {}
    for p in range(y.p_max + 1):
        inj = h_set(a, p)
        level = y.level(p)
        if not inj:
            if level.dim(deg) and level.homology(deg).dim:
                raise ValueError(f"homology dimension mismatch at {(p, deg)}: no labels")
            levels.append(ChainComplex({}, {}))
            data[p] = None
            continue
        rows = _injection_cycle_rows(level, deg, inj, facet_sums)
        data[p] = _LabeledHomology(inj, rows, level.homology(deg), (p, deg))
        levels.append(ChainComplex({deg: len(inj)}, {}, {deg: list(inj)}))
    cofaces = {
        (p, i): _induced_on_labels(
            y.coface(p, i), data[p - 1], data[p], levels[p - 1], levels[p], deg
        )
        for p in range(1, y.p_max + 1)
        for i in range(p + 1)
    }
    codegens = {
        (p, i): _induced_on_labels(
            y.codegeneracy(p, i), data[p + 1], data[p], levels[p + 1], levels[p], deg
        )
        for p in range(y.p_max)
        for i in range(p + 1)
    }
    module = CosimplicialChainComplex(levels, cofaces, codegens)
    report = module.validate_report()
    if report:
        raise ValueError(f"labeled homology module is not cosimplicial: {report[0]}")
    return _HomologyModule(module, data, deg)


def _pair_complex(mod_a: _HomologyModule, mod_b: _HomologyModule, a: int, b: int, p_max: int) -> ChainComplex:
    """Conormalization of mod_a tensor mod_b, graded by column -p.

    Covering pairs survive; of the coface sum only the 0th term can land on
    a covering pair, so the differential is its projection.
    """
    pairs = {p: _covering_pairs(a, b, p) for p in range(p_max + 1)}
    dims = {-p: len(pr) for p, pr in pairs.items() if pr}
    labels = {-p: pairs[p] for p in pairs if pairs[p]}
    d = {}
    for p in range(p_max):
        src, tgt = pairs[p], pairs[p + 1]
        if not src or not tgt:
            continue
        fa = mod_a.module.coface(p + 1, 0).mat(mod_a.deg).to_dense()
        fb = mod_b.module.coface(p + 1, 0).mat(mod_b.deg).to_dense()
        sa = {e: i for i, e in enumerate(h_set(a, p))}
        sb = {e: i for i, e in enumerate(h_set(b, p))}
        ta = {e: i for i, e in enumerate(h_set(a, p + 1))}
        tb = {e: i for i, e in enumerate(h_set(b, p + 1))}
        rows_a = np.array([ta[ea] for ea, _ in tgt], dtype=np.intp)
        rows_b = np.array([tb[eb] for _, eb in tgt], dtype=np.intp)
        cols_a = np.array([sa[ea] for ea, _ in src], dtype=np.intp)
        cols_b = np.array([sb[eb] for _, eb in src], dtype=np.intp)
        d[-p] = BitMatrix.from_dense(
            fa[np.ix_(rows_a, cols_a)] & fb[np.ix_(rows_b, cols_b)]
        )
    return ChainComplex(dims, d, labels, check=True)


def _swap_complexes(voc: ChainComplex) -> tuple[ChainComplex, ChainComplex]:
    """Coinvariants and invariants of the factor swap on a pair complex.

    Both are based on orbits (diagonal pairs and unordered distinct pairs);
    the differential is checked to descend to the quotient and to preserve
    the invariants.
    """
    data = {}
    for k in voc.degrees():
        labs = voc.labels(k)
        pos = {lab: i for i, lab in enumerate(labs)}
        orbits = [(ea, eb) for ea, eb in labs if not eb < ea]
        pe, se = [], []
        for i, (ea, eb) in enumerate(orbits):
            se.append((pos[(ea, eb)], i))
            pe.append((i, pos[(ea, eb)]))
            if ea != eb:
                pe.append((i, pos[(eb, ea)]))
        data[k] = (
            orbits,
            BitMatrix.from_entries(len(orbits), len(labs), pe),
            BitMatrix.from_entries(len(labs), len(orbits), se),
        )
    dims = {k: len(v[0]) for k, v in data.items() if v[0]}
    labels = {k: v[0] for k, v in data.items() if v[0]}
    d_quot = {}
    d_ker = {}
    for k in voc.degrees():
        if k - 1 not in data or not data[k][0] or not data[k - 1][0]:
            continue
        _, proj, sect = data[k]
        _, proj_prev, _ = data[k - 1]
        dmat = voc.d(k)
        d_quot[k] = proj_prev @ dmat @ sect
        if proj_prev @ dmat != d_quot[k] @ proj:
            raise ValueError(f"swap quotient differential is not induced at column {k}")
        images = proj @ dmat.transpose()
        sols, ok = LinearSolver(proj_prev.transpose()).solve_rows(images)
        if not ok.all():
            raise ValueError(f"swap kernel is not preserved at column {k}")
        d_ker[k] = sols.transpose()
    quot = ChainComplex(dims, d_quot, labels, check=True)
    ker = ChainComplex(dims, d_ker, labels, check=True)
    return quot, ker


@dataclass(frozen=True, eq=False)
class ComparisonSegment:
    """One labeled family realized as classes on the first page.

    blocks[k] expresses the classes of column k of the source inside the
    first-page cell (k, row), one column per source basis element.
    """

    family: str
    source: ChainComplex
    row: int
    blocks: dict


@dataclass(frozen=True, eq=False)
class ComparisonComplexes:
    """The comparison complexes of a universal example and their embeddings.

    voc holds the pair complexes keyed by weight pairs, vom and tvom the
    swap coinvariants and invariants keyed by weight.  Each segment carries
    an injective chain map onto its family; e1_dims records the computed
    first-page dimensions.
    """

    params: UniversalParams
    voc: dict
    vom: dict
    tvom: dict
    segments: dict
    e1_dims: dict


def _square_is_complete(params: UniversalParams) -> bool:
    """Whether the stored window provably holds every nonzero column.

    A surviving pair of band tuples covers at most 2(s + r) positive
    levels, so a finite band with a window at least that wide is exact on
    the left.  An unbounded band keeps nonzero columns at every level and
    its window is an honest truncation.
    """
    return params.finite and params.p_max >= 2 * (params.s + params.r)


def build_comparison_complexes(params: UniversalParams) -> ComparisonComplexes:
    """Build and verify the first-page comparison data of a universal example.

    Raises ValueError naming a bidegree whenever a labeled chain fails to be
    a cycle, a family embedding drops rank, an embedding breaks the page
    differential, or the page dimensions leave the predicted tables.
    """
    y = build_d(params)
    s, t, n, r = params.s, params.t, params.n, params.r
    tsq = conormalize_tensor_square(y, complete=_square_is_complete(params))
    big = bicomplex_tensor_over_pi(build_w(n), tsq.involutive)
    hom, d1 = columnwise_homology(big)

    mods = {s: _homology_module(y, s, t, False)}
    if params.finite:
        mods[s + r] = _homology_module(y, s + r, t + r - 1, True)
    keys = [(s, s)] + ([(s, s + r), (s + r, s + r)] if params.finite else [])
    voc = {(a, b): _pair_complex(mods[a], mods[b], a, b, y.p_max) for a, b in keys}
    vom = {}
    tvom = {}
    for a in mods:
        vom[a], tvom[a] = _swap_complexes(voc[(a, a)])

    def hdim(cell):
        sq = hom.get(cell)
        return sq.dim if sq is not None else 0

    offsets_cache = {}

    def add_pair_entries(entries, row_i, col, m, dx, sup_x, dy, sup_y):
        q = dx + dy + m
        idx = tsq.index.get((col, dx + dy))
        if idx is None:
            return
        key = (col, q)
        if key not in offsets_cache:
            offsets_cache[key] = _w_block_offsets(n, lambda k: tsq.bicomplex.dim(col, k), q)
        off = offsets_cache[key][m]
        for xi in sup_x:
            for yi in sup_y:
                pos = idx.get((dx, int(xi), int(yi)))
                if pos is not None:
                    entries.append((row_i, off + pos))

    coverage = {}
    segments = {}

    def classes_of(rows: BitMatrix, cell) -> BitMatrix:
        if not (big.dv(cell[0], cell[1]) @ rows.transpose()).is_zero():
            raise ValueError(f"comparison chains are not cycles at {cell}")
        sq = hom.get(cell)
        if sq is None:
            raise ValueError(f"comparison fails to be injective at {cell}")
        cls = sq.class_coords_rows(rows)
        coverage.setdefault(cell, []).append(cls)
        return cls

    def add_segment(family, source, row, m, symmetrize, mod_x, mod_y):
        blocks = {}
        for k in source.degrees():
            labs = source.labels(k)
            entries = []
            for i, (ea, eb) in enumerate(labs):
                sup_x = mod_x.data[-k].support_of(ea)
                sup_y = mod_y.data[-k].support_of(eb)
                add_pair_entries(entries, i, k, m, mod_x.deg, sup_x, mod_y.deg, sup_y)
                if symmetrize and not (mod_x is mod_y and ea == eb):
                    add_pair_entries(entries, i, k, m, mod_y.deg, sup_y, mod_x.deg, sup_x)
            cell = (k, row)
            rows = BitMatrix.from_entries(len(labs), big.dim(k, row), entries)
            blocks[k] = classes_of(rows, cell).transpose()
        seg = ComparisonSegment(family, source, row, blocks)
        _verify_segment(seg, hom, d1, hdim)
        segments[family] = seg

    add_segment("wrfb", vom[s], 2 * t, 0, False, mods[s], mods[s])
    add_segment("wrft", tvom[s], 2 * t + n, n, True, mods[s], mods[s])
    if params.finite:
        mixed = voc[(s, s + r)]
        add_segment("wrfmone", mixed, 2 * t + r - 1, 0, False, mods[s], mods[s + r])
        add_segment("wrfmtwo", mixed, 2 * t + n + r - 1, n, True, mods[s], mods[s + r])
        add_segment("wdrb", vom[s + r], 2 * (t + r - 1), 0, False, mods[s + r], mods[s + r])
        add_segment("wdrt", tvom[s + r], 2 * (t + r - 1) + n, n, True, mods[s + r], mods[s + r])

    for a, mod in mods.items():
        dat = mod.data.get(a)
        if dat is None:
            raise ValueError(f"missing diagonal class at column {-a}")
        sup = dat.support_of(dat.injections[0])
        for m in range(1, n):
            cell = (-a, 2 * mod.deg + m)
            entries = []
            add_pair_entries(entries, 0, -a, m, mod.deg, sup, mod.deg, sup)
            rows = BitMatrix.from_entries(1, big.dim(cell[0], cell[1]), entries)
            classes_of(rows, cell)

    expected = {}
    for table in predicted_e1(params):
        for (p, q), mult in table.cells.items():
            if -p <= y.p_max:
                expected[(p, q)] = expected.get((p, q), 0) + mult
    got = {cell: sq.dim for cell, sq in hom.items() if sq.dim}
    if got != expected:
        bad = {c for c in set(got) | set(expected) if got.get(c) != expected.get(c)}
        raise ValueError(
            f"first-page dimensions disagree with the predicted table at {sorted(bad)[0]}"
        )
    for cell in got:
        if cell not in coverage:
            raise ValueError(f"first page is not exhausted by the labeled families at {cell}")
    for cell, parts in coverage.items():
        stacked = vstack(parts)
        if stacked.rows != hdim(cell) or stacked.rank() != hdim(cell):
            raise ValueError(f"first page is not exhausted by the labeled families at {cell}")

    return ComparisonComplexes(params, voc, vom, tvom, segments, got)


def _verify_segment(seg: ComparisonSegment, hom, d1, hdim) -> None:
    """Check a segment is injective and commutes with the page differential."""
    src = seg.source
    row = seg.row

    def blk(k):
        b = seg.blocks.get(k)
        return b if b is not None else BitMatrix(hdim((k, row)), src.dim(k))

    for k in src.degrees():
        cell = (k, row)
        if blk(k).rank() != src.dim(k):
            raise ValueError(f"comparison fails to be injective at {cell}")
        dmat = d1.get(cell)
        if dmat is None:
            dmat = BitMatrix(hdim((k - 1, row)), hdim(cell))
        if dmat @ blk(k) != blk(k - 1) @ src.d(k):
            raise ValueError(
                f"comparison does not commute with the page differential at {cell}"
            )


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """A truncated quadratic construction on a universal example, totalized.

    Bundles the conormalized tensor square, its tensor with a resolution
    skeleton of height top, and the filtered total complex of the result.
    """

    params: UniversalParams
    top: int
    square: TensorSquareConormalization
    bicomplex: Bicomplex
    filtered: FilteredTotalComplex

    def chain(self, cell: tuple, vec) -> np.ndarray:
        """Embed a cell vector into total degree coordinates."""
        p, q = cell
        off, size = self.filtered.block_range(p + q, p)
        vec = np.asarray(vec, dtype=np.uint8) & 1
        if vec.shape != (size,) or not size:
            raise ValueError(f"cell {cell} holds vectors of length {size}")
        out = np.zeros(self.filtered.dim(p + q), dtype=np.uint8)
        out[off:off + size] = vec
        return out


def build_quadratic_model(params: UniversalParams, top=None, square=None) -> QuadraticModel:
    """Totalize the quadratic construction of height top on a universal example."""
    if square is None:
        y = build_d(params)
        square = conormalize_tensor_square(y, complete=_square_is_complete(params))
    top = params.n if top is None else int(top)
    big = bicomplex_tensor_over_pi(build_w(top), square.involutive)
    return QuadraticModel(params, top, square, big, total_filtered(big))


def skeleton_inclusion(small: QuadraticModel, big: QuadraticModel) -> FilteredMap:
    """The filtered map induced by growing the resolution skeleton."""
    if small.square is not big.square or small.top > big.top:
        raise ValueError("models must share a square with the smaller skeleton first")
    blocks = {}
    for (p, q), size in small.bicomplex.dims.items():
        mat = BitMatrix(big.bicomplex.dim(p, q), size)
        offs_small = _w_block_offsets(small.top, lambda k: small.square.bicomplex.dim(p, k), q)
        offs_big = _w_block_offsets(big.top, lambda k: big.square.bicomplex.dim(p, k), q)
        for i, off in offs_small.items():
            sz = small.square.bicomplex.dim(p, q - i)
            mat.paste(BitMatrix.identity(sz), offs_big[i], off)
        blocks[(p, q)] = mat
    return FilteredMap.from_cells(small.filtered, big.filtered, blocks)
