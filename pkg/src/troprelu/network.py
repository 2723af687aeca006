"""Whole-network propagation through tropical polyhedra and zones.

A network is a chain of affine layers with ReLU after each one (the last
activation is optional).  ReLU is tropically affine, so its action on a
generator list is exact; affine layers are abstracted per layer by the
tight zone (or octagon) over the current enclosing hypercube.

The chaining loop per layer: compute the enclosing hypercube of the
current layer values; abstract the new layer over it; embed everything
into the joint space; intersect with the carried constraints; apply ReLU;
project back onto the tracked layer set.  Three modes differ in what is
carried:

* box:      generators only.  No intersection between layers; relations
            from earlier layers survive only through their interval
            bounds (this is the internal-only behaviour).
* zone:     generators plus a closed DBM over the tracked variables,
            intersected every layer with the new layer's zone and the
            ReLU transfer rows.  Default; strictly at least as tight.
* external: box behaviour plus a concatenated inequality system over all
            layer variables, kept for membership diagnostics (inequality
            systems cannot be projected, so it only ever grows).

In the octagon domain the carried DBM lives in the doubled space
(+v, -v), which lets sum constraints tighten later layers through
closure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .dbm import (
    Box,
    Dbm,
    EMPTY,
    INF,
    OctDbm,
    dbm_box,
    dbm_close,
    dbm_intersect,
    embed_dbm,
    embed_oct,
    oct_close,
)
from .errors import (
    BadIndex,
    CellBudgetExceeded,
    DimensionMismatch,
    EmptyAbstraction,
)
from .maxplus import BOTTOM, DEFAULT_EPS
from .layers import (
    AffineLayer,
    oct_constants,
    oct_dbm,
    zone_constants,
    zone_dbm,
    zone_external,
    zone_internal,
)
from .subdivision import (
    SubdivisionConfig,
    SubdivisionGrid,
    SubdivisionMode,
    subdivide_constraints,
)
from .tropical import (
    TropExternal,
    TropInternal,
    emb_box_internal,
    emb_external,
    extreme_filter,
    intersect_external,
    internal_to_zone,
    proj_internal,
    union_internal,
    zone_to_internal,
)


class ChainMode(Enum):
    BOX = "box"
    ZONE = "zone"
    EXTERNAL = "external"


class AbsDomain(Enum):
    ZONE = "zone"
    OCTAGON = "octagon"


@dataclass(frozen=True)
class Network:
    """Layer list (weights, biases) with ReLU between layers.

    ``final_relu`` controls the activation after the last affine map; the
    bundled example networks all clamp their outputs, so it defaults on.
    """

    weights: tuple
    biases: tuple
    final_relu: bool = True

    def __post_init__(self):
        ws = tuple(np.atleast_2d(np.asarray(w, dtype=float)) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=float).reshape(-1) for b in self.biases)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        if len(ws) != len(bs) or not ws:
            raise DimensionMismatch("need matching, nonempty weight/bias lists")
        for w, b in zip(ws, bs):
            if w.shape[0] != b.shape[0]:
                raise DimensionMismatch("weight rows must match bias length")
        for prev, nxt in zip(ws, ws[1:]):
            if nxt.shape[1] != prev.shape[0]:
                raise DimensionMismatch("consecutive layer sizes are incompatible")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def sizes(self) -> tuple:
        """Value-stage sizes: inputs, then each layer's output count."""
        return (self.weights[0].shape[1], *(w.shape[0] for w in self.weights))

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    def has_relu(self, layer_index: int) -> bool:
        return layer_index < self.n_layers - 1 or self.final_relu

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Concrete outputs for a batch of inputs."""
        v = np.atleast_2d(np.asarray(x, dtype=float))
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            v = v @ w.T + b
            if self.has_relu(i):
                v = np.maximum(v, 0.0)
        return v

    def trace(self, x: np.ndarray) -> list:
        """Per-stage values (inputs first) for a batch of inputs."""
        v = np.atleast_2d(np.asarray(x, dtype=float))
        out = [v]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            v = v @ w.T + b
            if self.has_relu(i):
                v = np.maximum(v, 0.0)
            out.append(v)
        return out


def relu_internal(
    poly: TropInternal, coords: Sequence[int], eps: float = DEFAULT_EPS
) -> TropInternal:
    """Clamp the selected coordinates of every generator at 0 (exact)."""
    coords = list(coords)
    if any(c < 0 or c >= poly.dim for c in coords):
        raise BadIndex("ReLU coordinate out of range")
    g = poly.generators.copy()
    g[:, coords] = np.maximum(g[:, coords], 0.0)
    return extreme_filter(TropInternal(g), eps=eps)


def relu_extend(
    poly: TropInternal, coords: Sequence[int], eps: float = DEFAULT_EPS
) -> TropInternal:
    """Append clamped copies of the selected coordinates as new dimensions."""
    coords = list(coords)
    if any(c < 0 or c >= poly.dim for c in coords):
        raise BadIndex("ReLU coordinate out of range")
    g = poly.generators
    return extreme_filter(
        TropInternal(np.hstack([g, np.maximum(g[:, coords], 0.0)])), eps=eps
    )


def relu_external(
    ext: TropExternal,
    h_dims: Sequence[int],
    y_dims: Sequence[int],
    h_bounds: Box,
) -> TropExternal:
    """Rows tying each post-activation y to its pre-activation h.

    Two exact rows per pair, max(0, h) <= y and y <= max(0, h), plus the
    derived zone rows used by the zone chain: y >= 0, y >= h,
    y - h <= -min(0, h_lo) and y <= max(0, h_hi).
    """
    h_dims = list(h_dims)
    y_dims = list(y_dims)
    if len(h_dims) != len(y_dims) or len(h_dims) != h_bounds.dim:
        raise BadIndex("h/y pairing does not match bounds")
    dim = ext.dim
    if any(d < 0 or d >= dim for d in h_dims + y_dims):
        raise BadIndex("ReLU dimension out of range")
    rows_l, rows_r = [], []

    def row():
        return np.full(1 + dim, BOTTOM), np.full(1 + dim, BOTTOM)

    for pair, (h, y) in enumerate(zip(h_dims, y_dims)):
        h_lo = h_bounds.lo[pair]
        h_hi = h_bounds.hi[pair]
        l1, r1 = row()  # max(0, h) <= y
        l1[0] = 0.0
        l1[1 + h] = 0.0
        r1[1 + y] = 0.0
        l2, r2 = row()  # y <= max(0, h)
        l2[1 + y] = 0.0
        r2[0] = 0.0
        r2[1 + h] = 0.0
        l3, r3 = row()  # y >= 0
        l3[0] = 0.0
        r3[1 + y] = 0.0
        l4, r4 = row()  # y >= h
        l4[1 + h] = 0.0
        r4[1 + y] = 0.0
        l5, r5 = row()  # y - h <= -min(0, h_lo)
        l5[1 + y] = 0.0
        r5[1 + h] = -min(0.0, h_lo)
        l6, r6 = row()  # y <= max(0, h_hi)
        l6[1 + y] = 0.0
        r6[0] = max(0.0, h_hi)
        rows_l += [l1, l2, l3, l4, l5, l6]
        rows_r += [r1, r2, r3, r4, r5, r6]
    return TropExternal(np.vstack(rows_l), np.vstack(rows_r))


def _relu_zone_rows(entries: np.ndarray, h_slot: int, y_slot: int, h_lo: float, h_hi: float):
    """Min the ReLU transfer rows for one (h, y) pair into a plain DBM."""
    e = entries
    e[h_slot, y_slot] = min(e[h_slot, y_slot], 0.0)  # y >= h
    e[y_slot, h_slot] = min(e[y_slot, h_slot], -min(0.0, h_lo))
    e[y_slot, 0] = min(e[y_slot, 0], max(0.0, h_hi))
    e[0, y_slot] = min(e[0, y_slot], -max(0.0, h_lo))


def _oct_relu_append(o: OctDbm, h_vars: list, eps: float):
    """Append clamped copies g_i = max(0, h_i) to a closed octagon.

    Clamping distributes over sups: sup(max(0, h) - s) equals
    max(sup(-s), sup(h - s)), and symmetrically with min for the negated
    copy, so every new entry is the exact pairwise transfer of the closed
    input entries.
    """
    n = o.dim
    r = len(h_vars)
    m = n + r
    e = embed_oct(o, list(range(n)), m).entries.copy()
    old = o.entries

    def mirror_cols(size):
        return np.concatenate([np.arange(size, 2 * size), np.arange(0, size)])

    mir_old = mirror_cols(n)
    # per-slot bounds of the closed input matrix: ub[q] = sup(s_q)
    ub_old = old[np.arange(2 * n), mir_old] / 2.0
    src = np.concatenate([np.arange(0, n), np.arange(m, m + n)])  # old slots in e
    for i, hv in enumerate(h_vars):
        gp, gm = n + i, m + n + i
        hp, hm = hv, hv + n
        h_hi = ub_old[hp]
        h_lo = -ub_old[hm]
        e[gp, gm] = 2.0 * max(0.0, h_hi)
        e[gm, gp] = -2.0 * max(0.0, h_lo)
        # rows/columns against every old slot q (exact max/min transfer)
        e[gp, src] = np.minimum(e[gp, src], np.maximum(ub_old[mir_old], old[hp, :]))
        e[src, gp] = np.minimum(e[src, gp], np.minimum(ub_old, old[:, hp]))
        e[gm, src] = np.minimum(e[gm, src], np.minimum(ub_old[mir_old], old[hm, :]))
        e[src, gm] = np.minimum(e[src, gm], np.maximum(ub_old, old[:, hm]))
    # pairs of clamped copies, decomposed on the column variable through
    # the freshly written (g_i, h_j) entries
    for i in range(r):
        gp_i, gm_i = n + i, m + n + i
        for row, row_sup in ((gp_i, e[gp_i, gm_i] / 2.0), (gm_i, e[gm_i, gp_i] / 2.0)):
            for j in range(r):
                if i == j:
                    continue
                hp_j, hm_j = h_vars[j], h_vars[j] + m
                gp_j, gm_j = n + j, m + n + j
                e[row, gp_j] = min(e[row, gp_j], row_sup, e[row, hp_j])
                e[row, gm_j] = min(e[row, gm_j], max(row_sup, e[row, hm_j]))
    np.fill_diagonal(e, 0.0)
    out = oct_close(OctDbm(e), eps=eps)
    if out is EMPTY:
        raise EmptyAbstraction("octagon ReLU transfer produced an empty octagon")
    return out


@dataclass(frozen=True)
class AnalysisOptions:
    mode: ChainMode = ChainMode.ZONE
    domain: AbsDomain = AbsDomain.ZONE
    track_all: bool = False
    subdiv: Optional[SubdivisionGrid] = None
    subdiv_cfg: SubdivisionConfig = SubdivisionConfig()
    eps: float = DEFAULT_EPS
    emb_pad: float = 1e-6  # relative padding of embedding intervals
    keep_layer_records: bool = True


@dataclass
class AnalysisResult:
    """Everything the checkers and the CLI need from one analysis run."""

    var_map: list  # (stage, neuron) per tracked dimension
    internal: TropInternal
    zone: Dbm  # enclosing zone over the tracked dimensions
    bounds: list  # one Box per value stage (inputs first)
    n_inputs: int
    n_outputs: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def input_slots(self) -> list:
        return [i for i, (s, _) in enumerate(self.var_map) if s == 0]

    @property
    def output_slots(self) -> list:
        last = max(s for s, _ in self.var_map)
        return [i for i, (s, _) in enumerate(self.var_map) if s == last]


def _box_hull(box: Box) -> TropInternal:
    return zone_to_internal(box.to_dbm())


def analyze(net: Network, in_box: Box, options: AnalysisOptions = AnalysisOptions()) -> AnalysisResult:
    """Propagate the input box through the network (see module docstring)."""
    if in_box.dim != net.n_inputs:
        raise DimensionMismatch("input box does not match network inputs")
    if options.subdiv is not None and options.subdiv_cfg.mode in (
        SubdivisionMode.CELLWISE_UNION,
        SubdivisionMode.BOTH,
    ):
        return _analyze_cellwise_union(net, in_box, options)
    return _analyze_single(net, in_box, options)


def _analyze_cellwise_union(net: Network, in_box: Box, options: AnalysisOptions) -> AnalysisResult:
    grid = options.subdiv
    if grid.n_cells > options.subdiv_cfg.cell_budget:
        raise CellBudgetExceeded(
            f"{grid.n_cells} cells exceed the budget of {options.subdiv_cfg.cell_budget}"
        )
    cell_opts = AnalysisOptions(
        mode=options.mode,
        domain=options.domain,
        track_all=options.track_all,
        subdiv=None,
        subdiv_cfg=options.subdiv_cfg,
        eps=options.eps,
        emb_pad=options.emb_pad,
        keep_layer_records=False,
    )
    t0 = time.perf_counter()
    combined: Optional[AnalysisResult] = None
    hull: Optional[TropInternal] = None
    zones = []
    n_cells = 0
    for cell in grid.cells():
        res = _analyze_single(net, cell, cell_opts)
        n_cells += 1
        hull = res.internal if hull is None else union_internal(hull, res.internal, eps=options.eps)
        zones.append(res.zone)
        combined = res
    # zone hull of a union: entrywise max of the per-cell zones
    zentries = zones[0].entries.copy()
    for z in zones[1:]:
        np.maximum(zentries, z.entries, out=zentries)
    zone = dbm_intersect(Dbm(zentries, closed=False), internal_to_zone(hull), eps=options.eps)
    if zone is EMPTY:
        raise EmptyAbstraction("cellwise union produced an empty zone")
    bounds = _stage_bounds_from(combined.var_map, zone, in_box, net)
    return AnalysisResult(
        var_map=combined.var_map,
        internal=hull,
        zone=zone,
        bounds=bounds,
        n_inputs=net.n_inputs,
        n_outputs=net.n_outputs,
        diagnostics={
            "mode": options.mode.value,
            "domain": options.domain.value,
            "cells": n_cells,
            "seconds": time.perf_counter() - t0,
        },
    )


def _stage_bounds_from(var_map, zone: Dbm, in_box: Box, net: Network) -> list:
    """Rebuild per-stage bounds for the stages present in the var map."""
    out = {0: in_box}
    for s in sorted({st for st, _ in var_map}):
        if s == 0:
            continue
        slots = [i + 1 for i, (st, _) in enumerate(var_map) if st == s]
        out[s] = dbm_box(zone.slice(slots))
    return [out.get(s) for s in range(net.n_layers + 1)]


def _analyze_single(net: Network, in_box: Box, options: AnalysisOptions) -> AnalysisResult:
    eps = options.eps
    t0 = time.perf_counter()
    var_map = [(0, j) for j in range(net.n_inputs)]
    hull = _box_hull(in_box)
    zone: Optional[Dbm] = in_box.to_dbm() if options.mode is ChainMode.ZONE else None
    oct_zone: Optional[OctDbm] = None
    if options.mode is ChainMode.ZONE and options.domain is AbsDomain.OCTAGON:
        oct_zone = _oct_from_box(in_box)
    ext: Optional[TropExternal] = None
    ext_map = [("x", 0, j) for j in range(net.n_inputs)]
    ext_feed = list(range(net.n_inputs))
    if options.mode is ChainMode.EXTERNAL:
        ext = TropExternal.empty(net.n_inputs)
    stage_boxes = [in_box]
    records = []

    for li in range(net.n_layers):
        w, b = net.weights[li], net.biases[li]
        act = net.has_relu(li)
        n_new = w.shape[0]
        cur_slots = [i for i, (s, _) in enumerate(var_map) if s == li]
        cur_box = _current_box(hull, zone, oct_zone, cur_slots, eps)
        layer = AffineLayer(w, b, cur_box)
        k = zone_constants(layer)
        preact_box = Box(k.out_lo, k.out_hi)

        # --- generator side -------------------------------------------------
        p_int = zone_internal(k, layer, eps=eps)
        other_slots = [i for i in range(len(var_map)) if i not in cur_slots]
        if other_slots:
            carried = internal_to_zone(hull)
            ivals = []
            for s in other_slots:
                lo = -carried.entries[0, s + 1]
                hi = carried.entries[s + 1, 0]
                pad = max(hi - lo, 1.0) * options.emb_pad
                ivals.append((lo - pad, hi + pad))
            # splice the non-current tracked dims in front, preserving order
            big = emb_box_internal(p_int, ivals, 0, eps=eps)
            # current order: other_slots dims, then cur, then new
            perm = _restore_order(other_slots, cur_slots, len(var_map), n_new)
            big = TropInternal(big.generators[:, perm])
        else:
            big = p_int
        new_map = var_map + [(li + 1, j) for j in range(n_new)]
        h_slots = list(range(len(var_map), len(var_map) + n_new))
        if act:
            big = relu_extend(big, h_slots, eps=eps)
            post_map = new_map + [(li + 1, j) for j in range(n_new)]
            hull_next_map, hull_next = _project_tracked(
                big, post_map, keep_preact=False, track_all=options.track_all, eps=eps
            )
        else:
            hull_next_map, hull_next = _project_tracked(
                big, new_map, keep_preact=True, track_all=options.track_all, eps=eps
            )

        # --- zone side -------------------------------------------------------
        preact_record = None
        if options.mode is ChainMode.ZONE and options.domain is AbsDomain.ZONE:
            zone, preact_record = _zone_step(
                zone, var_map, cur_slots, layer, k, act, hull_next, hull_next_map, eps
            )
        elif options.mode is ChainMode.ZONE:
            oct_zone, zone, preact_record = _oct_step(
                oct_zone, var_map, cur_slots, layer, k, act, hull_next, hull_next_map, eps
            )
        if options.mode is not ChainMode.ZONE:
            zone = internal_to_zone(hull_next)

        # --- external side ----------------------------------------------------
        if ext is not None:
            p_ext = zone_external(k, layer)
            if options.subdiv is not None and li == 0:
                p_ext = intersect_external(
                    p_ext, subdivide_constraints(layer, options.subdiv, options.subdiv_cfg)
                )
            h_dims = list(range(len(ext_map), len(ext_map) + n_new))
            ext_map = ext_map + [("pre", li + 1, j) for j in range(n_new)]
            p_big = _ext_embed(p_ext, ext_feed, len(ext_map) - n_new, n_new)
            ext = intersect_external(emb_external(ext, n_new, ext.dim), p_big)
            if act:
                y_dims = list(range(len(ext_map), len(ext_map) + n_new))
                ext_map = ext_map + [("post", li + 1, j) for j in range(n_new)]
                ext = emb_external(ext, n_new, ext.dim)
                ext = intersect_external(
                    ext, relu_external(ext, h_dims, y_dims, preact_box)
                )
                ext_feed = y_dims
            else:
                ext_feed = h_dims

        var_map = hull_next_map
        hull = hull_next
        new_slots = [i for i, (s, _) in enumerate(var_map) if s == li + 1]
        stage_box = dbm_box(zone.slice([i + 1 for i in new_slots]))
        stage_boxes.append(stage_box)
        if options.keep_layer_records:
            records.append(
                {
                    "stage": li + 1,
                    "input_box": cur_box,
                    "preact_box": preact_box,
                    "box": stage_box,
                    "preact_zone": preact_record,
                }
            )

    zone_final = dbm_intersect(zone, internal_to_zone(hull), eps=eps)
    if zone_final is EMPTY:
        raise EmptyAbstraction("final zone intersection came out empty")
    diag = {
        "mode": options.mode.value,
        "domain": options.domain.value,
        "cells": 1,
        "seconds": time.perf_counter() - t0,
        "layers": records,
    }
    if ext is not None:
        diag["external"] = ext
        diag["external_map"] = ext_map
    return AnalysisResult(
        var_map=var_map,
        internal=hull,
        zone=zone_final,
        bounds=stage_boxes,
        n_inputs=net.n_inputs,
        n_outputs=net.n_outputs,
        diagnostics=diag,
    )


def _restore_order(other_slots, cur_slots, n_old, n_new):
    """Permutation mapping (others..., cur..., new...) back to var-map order."""
    order_now = list(other_slots) + list(cur_slots) + [n_old + j for j in range(n_new)]
    perm = [0] * len(order_now)
    for pos, slot in enumerate(order_now):
        perm[slot] = pos
    return perm


def _project_tracked(poly, dim_map, keep_preact, track_all, eps):
    """Drop untracked dimensions; returns (new map, projected hull)."""
    last = max(s for s, _ in dim_map)
    keep = []
    seen_new = 0
    for i, (s, j) in enumerate(dim_map):
        if s == last:
            # with an activation the pre-activation copy comes first and is
            # dropped; the clamped copy has the same (stage, neuron) key
            if not keep_preact and seen_new < _count(dim_map, last) // 2:
                seen_new += 1
                continue
            keep.append(i)
        elif track_all and s > 0:
            keep.append(i)
        elif s == 0:
            keep.append(i)
    new_map = [dim_map[i] for i in keep]
    return new_map, proj_internal(poly, keep, eps=eps)


def _count(dim_map, stage):
    return sum(1 for s, _ in dim_map if s == stage)


def _current_box(hull, zone, oct_zone, cur_slots, eps) -> Box:
    if oct_zone is not None:
        full = oct_zone.box()
        return Box(full.lo[cur_slots], full.hi[cur_slots])
    if zone is not None:
        return dbm_box(zone.slice([i + 1 for i in cur_slots]))
    return dbm_box(internal_to_zone(hull).slice([i + 1 for i in cur_slots]))


def _oct_from_box(box: Box) -> OctDbm:
    n = box.dim
    e = np.full((2 * n, 2 * n), INF)
    np.fill_diagonal(e, 0.0)
    e[:n, :n] = box.hi[:, None] - box.lo[None, :]
    e[n:, n:] = e[:n, :n].T.copy()
    e[:n, n:] = box.hi[:, None] + box.hi[None, :]
    e[n:, :n] = -(box.lo[:, None] + box.lo[None, :])
    np.fill_diagonal(e, 0.0)
    out = oct_close(OctDbm(e))
    assert isinstance(out, OctDbm)
    return out


def _zone_step(zone, var_map, cur_slots, layer, k, act, hull_next, hull_next_map, eps):
    """One layer of the plain zone chain; returns (next zone, pre-act record)."""
    n_new = layer.n_outputs
    n_old = len(var_map)
    n_big = n_old + n_new + (n_new if act else 0)
    big = embed_dbm(zone, [i + 1 for i in range(n_old)], n_big)
    entries = big.entries.copy()
    # layer rows over (current, h)
    ldbm = zone_dbm(k, layer)
    l_slots = [s + 1 for s in cur_slots] + [n_old + j + 1 for j in range(n_new)]
    idx = np.asarray([0, *l_slots], dtype=int)
    sub = entries[np.ix_(idx, idx)]
    entries[np.ix_(idx, idx)] = np.minimum(sub, ldbm.entries)
    if act:
        for j in range(n_new):
            _relu_zone_rows(
                entries,
                n_old + j + 1,
                n_old + n_new + j + 1,
                float(k.out_lo[j]),
                float(k.out_hi[j]),
            )
    closed = dbm_close(Dbm(entries), eps=eps)
    if closed is EMPTY:
        raise EmptyAbstraction("zone chain produced an empty zone")
    # keep the refined pre-activation relations around before projection
    big_map = list(var_map) + [("pre", j) for j in range(n_new)]
    if act:
        big_map += [("post", j) for j in range(n_new)]
    record = {"dbm": closed, "keys": big_map}
    keep = _match_slots(var_map, hull_next_map, n_old, n_new, act)
    nxt = closed.slice([i + 1 for i in keep])
    nxt = dbm_intersect(nxt, internal_to_zone(hull_next), eps=eps)
    if nxt is EMPTY:
        raise EmptyAbstraction("zone chain produced an empty zone")
    return nxt, record


def _match_slots(old_map, target_map, n_old, n_new, act):
    """Slots in the (old, pre, post) big space realising the projected map.

    Old stages keep their slots; the new stage lives in the post block when
    there is an activation, else in the pre block.
    """
    pos_of = {key: i for i, key in enumerate(old_map[:n_old])}
    base_new = n_old + (n_new if act else 0)
    return [pos_of.get(key, base_new + key[1]) for key in target_map]


def _oct_step(oct_zone, var_map, cur_slots, layer, k, act, hull_next, hull_next_map, eps):
    """One layer of the octagon chain in the doubled space."""
    n_new = layer.n_outputs
    n_old = len(var_map)
    n_pre = n_old + n_new
    big = embed_oct(oct_zone, list(range(n_old)), n_pre)
    entries = big.entries.copy()
    layer_oct = oct_dbm(oct_constants(layer), layer)
    l_vars = list(cur_slots) + [n_old + j for j in range(n_new)]
    l_slots = np.asarray(l_vars + [v + n_pre for v in l_vars], dtype=int)
    sub = entries[np.ix_(l_slots, l_slots)]
    entries[np.ix_(l_slots, l_slots)] = np.minimum(sub, layer_oct.entries)
    closed = oct_close(OctDbm(entries), eps=eps)
    if closed is EMPTY:
        raise EmptyAbstraction("octagon chain produced an empty octagon")
    big_map = list(var_map) + [("pre", j) for j in range(n_new)]
    if act:
        closed = _oct_relu_append(closed, [n_old + j for j in range(n_new)], eps)
        big_map += [("post", j) for j in range(n_new)]
    n_big = closed.dim
    record = {"dbm": _plus_block_dbm(closed, list(range(n_big))), "keys": big_map}
    keep = _match_slots(var_map, hull_next_map, n_old, n_new, act)
    sel = np.asarray(keep + [i + n_big for i in keep], dtype=int)
    nxt_oct = OctDbm(closed.entries[np.ix_(sel, sel)].copy(), closed=True)
    plus = _plus_block_dbm(nxt_oct, list(range(len(keep))))
    plus = dbm_intersect(plus, internal_to_zone(hull_next), eps=eps)
    if plus is EMPTY:
        raise EmptyAbstraction("octagon chain produced an empty zone")
    # fold the tightened generator-side differences back into the octagon
    merged = nxt_oct.entries.copy()
    npp = len(keep)
    merged[:npp, :npp] = np.minimum(merged[:npp, :npp], plus.entries[1:, 1:])
    merged[npp:, npp:] = np.minimum(merged[npp:, npp:], plus.entries[1:, 1:].T)
    for i in range(npp):
        merged[i, i + npp] = min(merged[i, i + npp], 2.0 * plus.entries[i + 1, 0])
        merged[i + npp, i] = min(merged[i + npp, i], 2.0 * plus.entries[0, i + 1])
    closed_next = oct_close(OctDbm(merged), eps=eps)
    if closed_next is EMPTY:
        raise EmptyAbstraction("octagon chain produced an empty octagon")
    return closed_next, _plus_block_dbm(closed_next, list(range(npp))), record


def _plus_block_dbm(o: OctDbm, vars_: list) -> Dbm:
    """Plain zone over selected variables read off a closed octagon."""
    n = o.dim
    k = len(vars_)
    e = np.full((k + 1, k + 1), INF)
    sel = np.asarray(vars_, dtype=int)
    e[1:, 1:] = o.entries[np.ix_(sel, sel)]
    for pos, v in enumerate(vars_):
        e[pos + 1, 0] = o.entries[v, v + n] / 2.0
        e[0, pos + 1] = o.entries[v + n, v] / 2.0
    np.fill_diagonal(e, 0.0)
    out = dbm_close(Dbm(e))
    if out is EMPTY:
        raise EmptyAbstraction("octagon plus-block is empty")
    return out


def _ext_embed(p_ext: TropExternal, cur_slots, n_before_new, n_new) -> TropExternal:
    """Spread a layer system over (cur, new) into the full external space."""
    total = n_before_new + n_new
    lhs = np.full((p_ext.n_rows, 1 + total), BOTTOM)
    rhs = np.full((p_ext.n_rows, 1 + total), BOTTOM)
    src_cols = [0] + [s + 1 for s in cur_slots] + [n_before_new + j + 1 for j in range(n_new)]
    lhs[:, src_cols] = p_ext.lhs
    rhs[:, src_cols] = p_ext.rhs
    return TropExternal(lhs, rhs)
