"""External operations between pages of quadratic-construction spectral
sequences.

The quadratic construction of a cosimplicial chain complex carries external
squaring operations on the pages of its column filtration spectral sequence.
This module evaluates them at chain level:

  * fundamental_cycle / classify_cycle: the corner class of the universal
    window example, and the cosimplicial map classifying any page cycle of
    a registered model.
  * pre_theta / theta / landing_page: external squares of a page class,
    read off on the starting page or carried to their landing page.
  * browder_external: the pairing measuring how additivity of the top
    external square fails.
  * sum_split: the splitting of the quadratic construction of a direct sum
    into the two summands plus a free cross term.
  * phi_compare: rank data of the page-two map induced by growing the
    resolution skeleton.
  * structure_map / product_structure / internalize: push external values
    into a model along a multiplication on it.

Models enter through model_of or universal_model, which register their
total complexes so later calls can resolve class handles back to the
objects they came from.  Everything here requires monomial injective
cofaces; the covering-pair basis of the tensor square is what keeps the
universal examples tractable at their own window sizes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .chains import (
    ChainMap,
    FilteredMap,
    _tensor_layout,
    _w_block_offsets,
    bicomplex_tensor_over_pi,
    build_w,
    quadratic_construction,
    tensor_square_with_swap,
    total_filtered,
)
from .cosimplicial import (
    CosimplicialMap,
    aw_map_square,
    conormalization,
    conormalize_map,
    conormalize_tensor_square,
    constant_cosimplicial,
    cosimplicial_direct_sum,
    cosimplicial_tensor,
    levelwise_quadratic,
)
from .f2 import BitMatrix
from .spectral import (
    ClassHandle,
    class_of,
    coords_of,
    induced_morphism,
    page,
    promote,
    representative,
)
from .universal import UniversalParams, _square_is_complete, build_d, skeleton_inclusion

_REGISTRY: dict = {}
_UNIVERSAL: dict = {}


class CosimplicialModel:
    """A cosimplicial chain complex bundled with its conormalized total.

    complete marks the conormalization as exact on the left; likewise
    square_complete for the covering-pair tensor square.  The constructor
    registers the total complex so operations can resolve class handles
    back to the model.
    """

    __slots__ = ("cosimplicial", "conormalization", "filtered", "square_complete", "_square", "_aw", "_spaces")

    def __init__(self, y, complete: bool = False, square_complete: bool = False):
        self.cosimplicial = y
        self.conormalization = conormalization(y, complete)
        self.filtered = total_filtered(self.conormalization.bicomplex)
        self.square_complete = bool(square_complete)
        self._square = None
        self._aw = None
        self._spaces: dict = {}
        _REGISTRY[self.filtered] = self

    @property
    def bicomplex(self):
        return self.conormalization.bicomplex

    @property
    def square(self):
        if self._square is None:
            self._square = conormalize_tensor_square(self.cosimplicial, self.square_complete)
        return self._square

    def aw(self):
        """The pairing of conormalized chains into the tensor square, cached."""
        if self._aw is None:
            self._aw = aw_map_square(self.cosimplicial, self.conormalization, self.square)
        return self._aw

    def chain(self, cell, vec) -> np.ndarray:
        """Embed cell coordinates as a chain of the total complex."""
        p, q = cell
        off, size = self.filtered.block_range(p + q, p)
        vec = np.asarray(vec, dtype=np.uint8)
        if vec.size != size:
            raise ValueError(f"cell {cell} holds vectors of length {size}")
        out = np.zeros(self.filtered.dim(p + q), dtype=np.uint8)
        out[off:off + size] = vec
        return out


class QuadraticSpace:
    """The height-top quadratic construction of a model, totalized on the
    covering-pair basis.  Spaces over one model share its tensor square, so
    skeleton inclusions between different heights stay compatible."""

    __slots__ = ("base", "top", "square", "bicomplex", "filtered", "_maps", "_classes")

    def __init__(self, base: CosimplicialModel, top: int):
        self.base = base
        self.top = int(top)
        self.square = base.square
        self.bicomplex = bicomplex_tensor_over_pi(build_w(self.top), self.square.involutive)
        self.filtered = total_filtered(self.bicomplex)
        self._maps: dict = {}
        self._classes: dict = {}
        _REGISTRY[self.filtered] = self

    def chain(self, cell, vec) -> np.ndarray:
        """Embed cell coordinates as a chain of the total complex."""
        p, q = cell
        off, size = self.filtered.block_range(p + q, p)
        vec = np.asarray(vec, dtype=np.uint8)
        if vec.size != size:
            raise ValueError(f"cell {cell} holds vectors of length {size}")
        out = np.zeros(self.filtered.dim(p + q), dtype=np.uint8)
        out[off:off + size] = vec
        return out


def model_of(y, complete: bool = False, square_complete: bool = False) -> CosimplicialModel:
    """Register a cosimplicial chain complex for use with the operations."""
    return CosimplicialModel(y, complete, square_complete)


def universal_model(params: UniversalParams) -> CosimplicialModel:
    """The registered model of the universal window example, cached."""
    got = _UNIVERSAL.get(params)
    if got is None:
        complete = params.finite and params.p_max >= params.s + params.r
        got = CosimplicialModel(build_d(params), complete, _square_is_complete(params))
        _UNIVERSAL[params] = got
    return got


def quadratic_space(model: CosimplicialModel, top: int) -> QuadraticSpace:
    """The quadratic construction of height top over a model, cached."""
    top = int(top)
    got = model._spaces.get(top)
    if got is None:
        got = QuadraticSpace(model, top)
        model._spaces[top] = got
    return got


def _model_for(h: ClassHandle) -> CosimplicialModel:
    got = _REGISTRY.get(h.seq.filtered)
    if not isinstance(got, CosimplicialModel):
        raise ValueError("class does not come from a registered cosimplicial model")
    return got


def _space_for(h: ClassHandle) -> QuadraticSpace:
    got = _REGISTRY.get(h.seq.filtered)
    if not isinstance(got, QuadraticSpace):
        raise ValueError("class does not come from a registered quadratic construction")
    return got


def _local_params(params: UniversalParams, model: CosimplicialModel) -> UniversalParams:
    top = model.cosimplicial.p_max
    return params if params.p_max == top else dataclasses.replace(params, p_max=top)


def _valid_cell(f, r: int, cell) -> bool:
    # mirrors the page validity rule without materializing the page
    return f.exact_left or cell[0] - (r + 1) >= f.p_min


@dataclass(frozen=True, eq=False)
class OpResult:
    """The value of one operation: a class handle plus its provenance."""

    op: str
    variant: str | None
    m: int | None
    page: int
    bidegree: tuple
    handle: ClassHandle
    coords: np.ndarray

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "variant": self.variant,
            "m": self.m,
            "page": int(self.page),
            "bidegree": [int(self.bidegree[0]), int(self.bidegree[1])],
            "class": [int(c) for c in self.coords],
        }


def conormalized_map(f, src: CosimplicialModel, tgt: CosimplicialModel) -> FilteredMap:
    """The filtered map induced on conormalized totals by a cosimplicial map."""
    blocks = conormalize_map(f, src.conormalization, tgt.conormalization)
    return FilteredMap.from_cells(src.filtered, tgt.filtered, blocks)


def quadratic_filtered_map(f: CosimplicialMap, src: QuadraticSpace, tgt: QuadraticSpace) -> FilteredMap:
    """The filtered map e(f) between quadratic constructions of one height."""
    if src.top != tgt.top:
        raise ValueError("quadratic constructions must share their height")
    cell_blocks = src.square.induced_square_map(list(f.components), tgt.square)
    blocks = {}
    for (p, q), size in src.bicomplex.dims.items():
        tsize = tgt.bicomplex.dim(p, q)
        if not tsize:
            continue
        mat = BitMatrix(tsize, size)
        offs_src = _w_block_offsets(src.top, lambda k: src.square.bicomplex.dim(p, k), q)
        offs_tgt = _w_block_offsets(tgt.top, lambda k: tgt.square.bicomplex.dim(p, k), q)
        for i, off in offs_src.items():
            blk = cell_blocks.get((p, q - i))
            if blk is not None and i in offs_tgt:
                mat.paste(blk, offs_tgt[i], off)
        blocks[(p, q)] = mat
    return FilteredMap.from_cells(src.filtered, tgt.filtered, blocks)


def fundamental_cycle(params: UniversalParams, model: CosimplicialModel | None = None) -> ClassHandle:
    """The page-r class of the zigzag chain at the window corner."""
    if not params.finite:
        raise ValueError("the fundamental cycle requires a finite page bound")
    if model is None:
        model = universal_model(params)
    f = model.filtered
    shift = params.t - params.s
    chain = np.zeros(f.dim(shift), dtype=np.uint8)
    for d in range(params.s, params.s + params.r):
        off, size = f.block_range(shift, -d)
        if not size:
            raise ValueError(f"window ends before the band cell in column {-d}")
        if size != 1:
            raise RuntimeError(f"expected a one-dimensional band cell in column {-d}")
        chain[off] = 1
    handle = class_of(f, chain, params.r, (-params.s, params.t))
    if handle is None:
        raise RuntimeError("the zigzag chain misses its page")
    return handle


def _band_images(model: CosimplicialModel, chain: np.ndarray, params: UniversalParams) -> dict:
    """Normalized level representatives of the chain's diagonal components."""
    shift = params.t - params.s
    out = {}
    for d in range(params.s, params.s + params.r):
        cell = (-d, shift + d)
        off, size = model.filtered.block_range(shift, -d)
        vec = np.zeros(model.cosimplicial.level(d).dim(shift + d), dtype=np.uint8)
        coords = chain[off:off + size]
        if size and coords.any():
            reps = model.conormalization.normalized_reps(cell)
            vec = (BitMatrix.row_vector(coords) @ reps).row_dense(0)
        out[d] = vec
    return out


def _extend_level(dcos, ycos, p: int, xs: dict, prev: ChainMap | None, shift: int) -> ChainMap:
    """Extend the classifying map to level p from its value on level p - 1.

    Each non-band tuple factors through the coface inserting its largest
    missing vertex, so its column is a column of that coface composed with
    the previous level; the band tuple is sent to its prescribed image.
    """
    dlevel = dcos.level(p)
    ylevel = ycos.level(p)
    mats = {}
    for deg in dlevel.degrees():
        ncols = dlevel.dim(deg)
        nrows = ylevel.dim(deg)
        if not ncols or not nrows:
            continue
        dense = np.zeros((nrows, ncols), dtype=np.uint8)
        if deg - shift == p:
            dense[:, 0] = xs[p]
        else:
            back = {tup: j for j, tup in enumerate(dcos.level(p - 1).labels(deg))}
            groups: dict = {}
            for j, tup in enumerate(dlevel.labels(deg)):
                k = max(v for v in range(p + 1) if v not in tup)
                src = tuple(v - 1 if v > k else v for v in tup)
                groups.setdefault(k, []).append((j, back[src]))
            fprev = prev.mat(deg)
            for k, cols in groups.items():
                img = (ycos.coface(p, k).mat(deg) @ fprev).to_dense()
                for j, jsrc in cols:
                    dense[:, j] = img[:, jsrc]
        mats[deg] = BitMatrix.from_dense(dense)
    return ChainMap(dlevel, ylevel, mats)


def classify_cycle(y: ClassHandle, params: UniversalParams) -> CosimplicialMap:
    """The cosimplicial map out of the window example classifying y.

    y must be a page-r class at bidegree (-s, t) of a registered model.
    The band generators go to the normalized representatives of the chain's
    diagonal components; every other value follows from the cosimplicial
    identities, and the full map is re-validated on construction.
    """
    if not params.finite:
        raise ValueError("classification requires a finite page bound")
    model = _model_for(y)
    work = _local_params(params, model)
    try:
        gate = class_of(model.filtered, y.chain, work.r, (-work.s, work.t))
    except ValueError as exc:
        raise ValueError("not classifiable in window") from exc
    if gate is None:
        raise ValueError("not classifiable in window")
    dmodel = universal_model(work)
    xs = _band_images(model, y.chain, work)
    dcos = dmodel.cosimplicial
    ycos = model.cosimplicial
    shift = work.t - work.s
    comps = []
    prev = None
    for p in range(dcos.p_max + 1):
        prev = _extend_level(dcos, ycos, p, xs, prev, shift)
        comps.append(prev)
    return CosimplicialMap(dcos, ycos, comps)


def _value_cell(params: UniversalParams, m: int, variant: str) -> tuple:
    s, t, n = params.s, params.t, params.n
    if variant == "v":
        lo, hi = t, t - s + n
        cell = (-s, m + t)
    elif variant == "h":
        lo, hi = t - s, min(t, t - s + n)
        cell = (m - s - t, 2 * t)
    else:
        raise ValueError("variant must be 'v' or 'h'")
    if not lo <= m <= hi:
        raise ValueError(f"m = {m} is outside [{lo}, {hi}] for variant {variant!r}")
    return cell


def landing_page(params: UniversalParams, m: int, variant: str = "h") -> int:
    """The page on which the external square of weight m settles."""
    if not params.finite:
        raise ValueError("landing pages require a finite page bound")
    _value_cell(params, m, variant)
    r, s, t = params.r, params.s, params.t
    if variant == "v" or m == t - s:
        return r
    if m <= t - r + 2:
        return 2 * r - 2
    return r + t - m


def _universal_class(space: QuadraticSpace, params: UniversalParams, cell) -> ClassHandle:
    """The one-dimensional page-2 class at cell, carried to page r, cached."""
    key = (cell, params.r)
    got = space._classes.get(key)
    if got is not None:
        return got
    pg = page(space.filtered, 2)
    if pg.dim(*cell) != 1:
        raise RuntimeError(f"expected a one-dimensional page-2 cell at {cell}")
    if not pg.valid(*cell):
        raise ValueError(f"window too small for an honest class at {cell}")
    h = representative(space.filtered, 2, cell, 0)
    while h.page < params.r:
        nxt = promote(h)
        if nxt is None:
            raise RuntimeError(f"the class at {cell} dies before page {params.r}")
        h = nxt
    space._classes[key] = h
    return h


def _classified_map(y: ClassHandle, work: UniversalParams, src: QuadraticSpace, tgt: QuadraticSpace) -> FilteredMap:
    key = (work, y.chain.tobytes())
    got = tgt._maps.get(key)
    if got is None:
        delta = classify_cycle(y, work)
        got = quadratic_filtered_map(delta, src, tgt)
        tgt._maps[key] = got
    return got


def pre_theta(y: ClassHandle, m: int, variant: str, params: UniversalParams) -> OpResult:
    """The weight-m external square of a page-r class, on page r.

    variant "v" reads the value at (-s, m + t), variant "h" at
    (m - s - t, 2t); both are images of the corresponding one-dimensional
    class of the window example under the classified quadratic map.
    """
    if not params.finite:
        raise ValueError("external squares require a finite page bound")
    model = _model_for(y)
    work = _local_params(params, model)
    cell = _value_cell(work, m, variant)
    dspace = quadratic_space(universal_model(work), work.n)
    espace = quadratic_space(model, work.n)
    gen = _universal_class(dspace, work, cell)
    phi = _classified_map(y, work, dspace, espace)
    img = phi.mat(cell[0] + cell[1]).matvec(gen.chain)
    if not _valid_cell(espace.filtered, work.r, cell):
        raise ValueError(f"window too small for an honest value at {cell}")
    handle = class_of(espace.filtered, img, work.r, cell)
    if handle is None:
        raise RuntimeError(f"image of the window class misses page {work.r} at {cell}")
    return OpResult("pre_theta", variant, int(m), int(work.r), cell, handle, coords_of(handle))


def theta(y: ClassHandle, m: int, variant: str, params: UniversalParams) -> OpResult:
    """The weight-m external square carried to its landing page."""
    w = landing_page(params, m, variant)
    res = pre_theta(y, m, variant, params)
    h = res.handle
    while h.page < w:
        nxt = promote(h)
        if nxt is None:
            raise RuntimeError(f"value at {res.bidegree} dies before page {w}")
        h = nxt
    if not _valid_cell(h.seq.filtered, w, res.bidegree):
        raise ValueError(f"window too small for an honest value at {res.bidegree}")
    return OpResult("theta", variant, int(m), int(w), res.bidegree, h, coords_of(h))


def browder_external(x: ClassHandle, y: ClassHandle, n: int) -> OpResult:
    """The external pairing of two page classes of one model at height n.

    Pairs the two chains through the conormalized tensor square and inserts
    the swap-symmetrized result into the top W-block; this measures the
    additivity defect of the top external square.
    """
    model = _model_for(x)
    if _model_for(y) is not model:
        raise ValueError("classes must come from the same model")
    if x.page != y.page:
        raise ValueError("classes must live on the same page")
    n = int(n)
    r = int(x.page)
    espace = quadratic_space(model, n)
    aw = model.aw()
    sq = espace.square
    f = model.filtered
    mx, my = sum(x.bidegree), sum(y.bidegree)
    out = np.zeros(espace.filtered.dim(mx + my + n), dtype=np.uint8)
    for pa, offa, sza in f.blocks(mx):
        va = x.chain[offa:offa + sza]
        if not va.any():
            continue
        for pb, offb, szb in f.blocks(my):
            vb = y.chain[offb:offb + szb]
            if not vb.any():
                continue
            cell, vec = aw.apply_pair((pa, mx - pa), va, (pb, my - pb), vb)
            if not vec.any():
                continue
            sym = vec ^ sq.involutive.sigma[cell].matvec(vec)
            if not sym.any():
                continue
            P, Q = cell
            blk = _w_block_offsets(n, lambda k: sq.bicomplex.dim(P, k), Q + n)[n]
            off2, _ = espace.filtered.block_range(mx + my + n, P)
            out[off2 + blk:off2 + blk + sym.size] ^= sym
    cell = (x.bidegree[0] + y.bidegree[0], x.bidegree[1] + y.bidegree[1] + n)
    if not _valid_cell(espace.filtered, r, cell):
        raise ValueError(f"window too small for an honest value at {cell}")
    handle = class_of(espace.filtered, out, r, cell)
    if handle is None:
        raise RuntimeError(f"pairing image misses page {r} at {cell}")
    return OpResult("browder", None, None, r, cell, handle, coords_of(handle))


def _pair_offsets(x, y, m: int) -> dict:
    """Offsets of the x-degree groups in the degree-m tensor layout."""
    out = {}
    off = 0
    for i in x.degrees():
        ny = y.dim(m - i)
        if x.dim(i) and ny:
            out[i] = off
            off += x.dim(i) * ny
    return out


def _sq_level_dim(level, q: int) -> int:
    return sum(level.dim(u) * level.dim(q - u) for u in level.degrees())


@dataclass(frozen=True, eq=False)
class SumSplit:
    """The splitting of the quadratic construction of a direct sum."""

    source: object
    target: object
    left: object
    right: object
    cross: object
    forward: CosimplicialMap
    backward: CosimplicialMap


def sum_split(a, b, n: int) -> SumSplit:
    """Split e^n(a + b) as e^n(a) + e^n(b) + (W tensor a tensor b).

    The forward map is a basis bijection: pairs drawn from one summand land
    in its quadratic construction, mixed pairs land in the cross term, and
    the swap-ordered mixed pairs pick up the other W generator.  Both
    directions are validated cosimplicial maps; backward is the transpose.
    """
    n = int(n)
    source = levelwise_quadratic(cosimplicial_direct_sum(a, b), n)
    left = levelwise_quadratic(a, n)
    right = levelwise_quadratic(b, n)
    w = build_w(n)
    tensored = cosimplicial_tensor(a, b)
    cross = cosimplicial_tensor(constant_cosimplicial(w.complex, a.p_max), tensored)
    target = cosimplicial_direct_sum(cosimplicial_direct_sum(left, right), cross)
    fwd = []
    bwd = []
    for p in range(source.p_max + 1):
        la, lb = a.level(p), b.level(p)
        fwd_mats = {}
        slevel = source.level(p)
        tlevel = target.level(p)
        tl = tensored.level(p)
        for deg in slevel.degrees():
            if not slevel.dim(deg):
                continue
            entries = []
            ea_deg = left.level(p).dim(deg)
            eb_deg = right.level(p).dim(deg)
            offs_src = _w_block_offsets(n, lambda k: _sq_level_dim_sum(la, lb, k), deg)
            offs_ea = _w_block_offsets(n, lambda k: _sq_level_dim(la, k), deg)
            offs_eb = _w_block_offsets(n, lambda k: _sq_level_dim(lb, k), deg)
            wgrp = _pair_offsets(w.complex, tl, deg)
            for i, qoff in offs_src.items():
                inner = deg - i
                grp_aa = _pair_offsets(la, la, inner)
                grp_bb = _pair_offsets(lb, lb, inner)
                grp_ab = _pair_offsets(la, lb, inner)
                for pos, (dx, xi, yi) in enumerate(_sum_layout(la, lb, inner)):
                    dy = inner - dx
                    na_x, na_y = la.dim(dx), la.dim(dy)
                    src = qoff + pos
                    if xi < na_x and yi < na_y:
                        tgt = offs_ea[i] + grp_aa[dx] + xi * na_y + yi
                    elif xi >= na_x and yi >= na_y:
                        tgt = ea_deg + offs_eb[i] + grp_bb[dx] + (xi - na_x) * lb.dim(dy) + (yi - na_y)
                    elif xi < na_x:
                        z = grp_ab[dx] + xi * lb.dim(dy) + (yi - na_y)
                        tgt = ea_deg + eb_deg + wgrp[i] + z
                    else:
                        z = grp_ab[dy] + yi * lb.dim(dx) + (xi - na_x)
                        tgt = ea_deg + eb_deg + wgrp[i] + tl.dim(inner) + z
                    entries.append((tgt, src))
            fwd_mats[deg] = BitMatrix.from_entries(tlevel.dim(deg), slevel.dim(deg), entries)
        fwd.append(ChainMap(slevel, tlevel, fwd_mats))
        bwd.append(ChainMap(tlevel, slevel, {deg: m.transpose() for deg, m in fwd_mats.items()}))
    forward = CosimplicialMap(source, target, fwd)
    backward = CosimplicialMap(target, source, bwd)
    return SumSplit(source, target, left, right, cross, forward, backward)


def _sq_level_dim_sum(la, lb, q: int) -> int:
    degs = sorted(set(la.degrees()) | set(lb.degrees()))
    return sum(
        (la.dim(u) + lb.dim(u)) * (la.dim(q - u) + lb.dim(q - u)) for u in degs
    )


def _sum_layout(la, lb, m: int) -> list:
    """Tensor layout triples of the direct sum level at degree m."""
    degs = sorted(set(la.degrees()) | set(lb.degrees()))
    out = []
    for i in degs:
        nx = la.dim(i) + lb.dim(i)
        ny = la.dim(m - i) + lb.dim(m - i)
        if nx and ny:
            out.extend((i, xi, yi) for xi in range(nx) for yi in range(ny))
    return out


@dataclass(frozen=True, eq=False)
class PhiReport:
    """Page-two comparison of two skeleton heights over one model."""

    params: UniversalParams
    dims: dict
    kernel: dict
    blocks: dict
    commutes: bool

    @property
    def kernel_total(self) -> int:
        return sum(self.kernel.values())


def phi_compare(params: UniversalParams) -> PhiReport:
    """Rank data of the page-two map induced by growing the skeleton.

    Compares heights n and n + 2r + 3 of the quadratic construction on the
    window example: per-cell dimensions of the smaller page, kernel
    dimensions of the induced blocks, and whether the blocks commute with
    the page differential.
    """
    if not params.finite:
        raise ValueError("the comparison requires a finite page bound")
    model = universal_model(params)
    small = quadratic_space(model, params.n)
    big = quadratic_space(model, params.n + 2 * params.r + 3)
    phi = skeleton_inclusion(small, big)
    blocks = induced_morphism(phi, 2)
    ps = page(small.filtered, 2)
    pb = page(big.filtered, 2)

    def block(cell):
        got = blocks.get(cell)
        return got if got is not None else BitMatrix(pb.dim(*cell), ps.dim(*cell))

    dims = {}
    kernel = {}
    for cell, sub in sorted(ps.cells.items()):
        if sub.dim:
            dims[cell] = sub.dim
            kernel[cell] = sub.dim - block(cell).rank()
    commutes = True
    for cell in dims:
        p, q = cell
        tgt = (p - 2, q + 1)
        ds = ps.d.get(cell, BitMatrix(ps.dim(*tgt), ps.dim(*cell)))
        db = pb.d.get(cell, BitMatrix(pb.dim(*tgt), pb.dim(*cell)))
        if block(tgt) @ ds != db @ block(cell):
            commutes = False
    return PhiReport(params, dims, kernel, blocks, commutes)


@dataclass(frozen=True, eq=False)
class StructureMap:
    """A validated map from the quadratic construction of a model into it."""

    base: CosimplicialModel
    top: int
    map: CosimplicialMap


def structure_map(model: CosimplicialModel, top: int, mats) -> StructureMap:
    """Wrap per-level degree matrices as a structure map of height top."""
    top = int(top)
    source = levelwise_quadratic(model.cosimplicial, top)
    comps = []
    for p in range(model.cosimplicial.p_max + 1):
        comps.append(ChainMap(source.level(p), model.cosimplicial.level(p), mats[p]))
    return StructureMap(model, top, CosimplicialMap(source, model.cosimplicial, comps))


def product_structure(model: CosimplicialModel, top: int, products) -> StructureMap:
    """The structure map of a levelwise commutative product.

    products[p] maps degrees to product matrices on the tensor square of
    level p.  The quadratic construction folds through its bottom W-block;
    the higher blocks die, forced by the product's symmetry.
    """
    top = int(top)
    y = model.cosimplicial
    mats = []
    for p in range(y.p_max + 1):
        level = y.level(p)
        sq = tensor_square_with_swap(level)
        mu = products[p]
        for deg, mat in mu.items():
            want = (level.dim(deg), sq.complex.dim(deg))
            if (mat.rows, mat.cols) != want:
                raise ValueError(
                    f"product at level {p} degree {deg} has shape {(mat.rows, mat.cols)}, expected {want}"
                )
            if mat.cols and mat @ sq.sigma[deg] != mat:
                raise ValueError("product is not commutative")
        quad = quadratic_construction(level, top)
        level_mats = {}
        for deg in quad.degrees():
            offs = _w_block_offsets(top, sq.complex.dim, deg)
            if not level.dim(deg):
                continue
            full = BitMatrix(level.dim(deg), quad.dim(deg))
            if 0 in offs and deg in mu:
                full.paste(mu[deg], 0, offs[0])
            level_mats[deg] = full
        mats.append(level_mats)
    return structure_map(model, top, mats)


def _structure_filtered(structure: StructureMap, espace: QuadraticSpace) -> FilteredMap:
    """The filtered map induced by a structure map on covering-pair totals."""
    got = espace._maps.get(structure)
    if got is not None:
        return got
    y = structure.base.cosimplicial
    con = structure.base.conormalization
    sq = espace.square
    top = espace.top
    blocks = {}
    for (P, Q), size in espace.bicomplex.dims.items():
        level = y.level(-P)
        gmat = structure.map.component(-P).mat(Q)
        if not structure.base.bicomplex.dim(P, Q) or not gmat.rows:
            continue
        woffs = _w_block_offsets(top, lambda k: sq.bicomplex.dim(P, k), Q)
        qoffs = _w_block_offsets(top, lambda k: _sq_level_dim(level, k), Q)
        entries = []
        for i, off in woffs.items():
            trips = sq.pairs.get((P, Q - i))
            if trips is None:
                continue
            grp = _pair_offsets(level, level, Q - i)
            tqx, txi, tyi = trips
            for col in range(tqx.size):
                dx = int(tqx[col])
                pos = qoffs[i] + grp[dx] + int(txi[col]) * level.dim(Q - i - dx) + int(tyi[col])
                entries.append((pos, off + col))
        incl = BitMatrix.from_entries(gmat.cols, size, entries)
        blocks[(P, Q)] = con.project_cols((P, Q), gmat @ incl)
    got = FilteredMap.from_cells(espace.filtered, structure.base.filtered, blocks)
    espace._maps[structure] = got
    return got


def internalize(structure: StructureMap, external: OpResult) -> OpResult:
    """Push an external value into the model along a structure map."""
    espace = _space_for(external.handle)
    if espace.base is not structure.base or espace.top != structure.top:
        raise ValueError("structure map does not match the value's quadratic construction")
    fm = _structure_filtered(structure, espace)
    img = fm.mat(sum(external.bidegree)).matvec(external.handle.chain)
    handle = class_of(structure.base.filtered, img, external.page, external.bidegree)
    if handle is None:
        raise RuntimeError(f"internal image misses page {external.page} at {external.bidegree}")
    return OpResult(
        "internal", external.variant, external.m, external.page, external.bidegree, handle, coords_of(handle)
    )
