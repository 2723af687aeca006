"""Refinement of layer abstractions by partitioning the input box.

Three mechanisms, all sound:

* scalar case (one input, one output): with cut points a = c_0 < .. < c_N = b
  the union of per-interval zone hulls has an explicit description: the
  base rows plus one extra row per interior cut, picked by the slope case,
  and at most N + 2 extreme points.

* general case: extra external rows valid for the whole graph, one family
  per interior cut (per input/output pair, plus aggregate rows over
  input groups and output groups).  These tighten the inequality system
  without any union computation.

* cell-wise analysis: abstract the layer over every grid cell separately
  and return the tropical hull of the union.  Precision grows with the
  grid; the hull of a union of per-cell hulls over a refined grid is never
  larger than over a coarser one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .dbm import Box
from .errors import CellBudgetExceeded, InvalidDomain
from .maxplus import BOTTOM, DEFAULT_EPS
from .tropical import (
    TropExternal,
    TropInternal,
    extreme_filter,
    union_internal,
)
from .layers import AffineLayer, zone_constants, zone_external, zone_internal


class SubdivisionMode(Enum):
    CELLWISE_UNION = "cellwise-union"
    EXTRA_CONSTRAINTS = "extra-constraints"
    BOTH = "both"


@dataclass(frozen=True)
class SubdivisionGrid:
    """Per-input cut points; cuts[i] runs from the box lower to upper bound."""

    cuts: tuple

    def __post_init__(self):
        cuts = tuple(np.asarray(c, dtype=float) for c in self.cuts)
        object.__setattr__(self, "cuts", cuts)
        for c in cuts:
            if c.ndim != 1 or c.shape[0] < 2:
                raise InvalidDomain("each dimension needs at least two cut points")
            if not (np.diff(c) > 0).all():
                raise InvalidDomain("cut points must be strictly increasing")

    @property
    def dim(self) -> int:
        return len(self.cuts)

    @property
    def box(self) -> Box:
        return Box([c[0] for c in self.cuts], [c[-1] for c in self.cuts])

    @property
    def n_cells(self) -> int:
        out = 1
        for c in self.cuts:
            out *= c.shape[0] - 1
        return out

    def cells(self):
        """All grid cells as boxes, in lexicographic order."""
        ranges = [range(c.shape[0] - 1) for c in self.cuts]
        for idx in itertools.product(*ranges):
            lo = [self.cuts[d][i] for d, i in enumerate(idx)]
            hi = [self.cuts[d][i + 1] for d, i in enumerate(idx)]
            yield Box(lo, hi)

    @staticmethod
    def uniform(box: Box, n_cells) -> "SubdivisionGrid":
        """Uniform grid; n_cells is an int or one int per dimension."""
        if np.isscalar(n_cells):
            n_cells = [int(n_cells)] * box.dim
        if len(n_cells) != box.dim:
            raise InvalidDomain("one cell count per input dimension required")
        cuts = []
        for j, n in enumerate(n_cells):
            if n < 1:
                raise InvalidDomain("cell counts must be >= 1")
            cuts.append(np.linspace(box.lo[j], box.hi[j], n + 1))
        return SubdivisionGrid(tuple(cuts))


@dataclass(frozen=True)
class SubdivisionConfig:
    n_cells: int = 2
    mode: SubdivisionMode = SubdivisionMode.CELLWISE_UNION
    max_group: int = 2  # largest output subset used for group rows
    cell_budget: int = 1024


def _scalar_cut_points(slope, intercept, cuts):
    f = lambda t: slope * t + intercept
    pts = [np.array([cuts[0], f(cuts[0])]), np.array([cuts[-1], f(cuts[-1])])]
    for i in range(1, len(cuts)):
        lo_c, hi_c = cuts[i - 1], cuts[i]
        if slope <= 0:
            pts.append(np.array([lo_c, f(hi_c)]))
        elif slope <= 1:
            pts.append(np.array([lo_c + f(hi_c) - f(lo_c), f(hi_c)]))
        else:
            pts.append(np.array([hi_c, f(lo_c) + hi_c - lo_c]))
    return np.vstack(pts)


def subdivide_scalar(
    slope: float,
    intercept: float,
    domain: tuple,
    n_cells: int,
    eps: float = DEFAULT_EPS,
):
    """Exact subdivided hull of a scalar affine graph on [a, b].

    Returns (external, internal).  The external system is the base
    three-row description of the whole-interval zone plus one extra row
    per interior cut c:

        slope <= 0:      0 <= max(x - c, y - f(c))
        0 <= slope <= 1: y - f(c) <= max(0, x - c)
        slope >= 1:      x - c <= max(0, y - f(c))

    The internal form is the hull of (a, f(a)), (b, f(b)) and one corner
    point per sub-interval, reduced to extreme points.
    """
    a, b = float(domain[0]), float(domain[1])
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise InvalidDomain(f"invalid scalar domain [{a}, {b}]")
    if n_cells < 1:
        raise InvalidDomain("need at least one sub-interval")
    layer = AffineLayer([[slope]], [intercept], Box([a], [b]))
    base = zone_external(zone_constants(layer), layer)
    cuts = np.linspace(a, b, n_cells + 1)
    f = lambda t: slope * t + intercept
    lhs_rows, rhs_rows = [], []
    for c in cuts[1:-1]:
        lhs = np.full(3, BOTTOM)
        rhs = np.full(3, BOTTOM)
        if slope <= 0:
            lhs[0] = 0.0
            rhs[1] = -c
            rhs[2] = -f(c)
        elif slope <= 1:
            lhs[2] = -f(c)
            rhs[0] = 0.0
            rhs[1] = -c
        else:
            lhs[1] = -c
            rhs[0] = 0.0
            rhs[2] = -f(c)
        lhs_rows.append(lhs)
        rhs_rows.append(rhs)
    if lhs_rows:
        extra = TropExternal(np.vstack(lhs_rows), np.vstack(rhs_rows))
        ext = TropExternal(
            np.vstack([base.lhs, extra.lhs]), np.vstack([base.rhs, extra.rhs])
        )
    else:
        ext = base
    internal = extreme_filter(
        TropInternal(_scalar_cut_points(slope, intercept, cuts)), eps=eps
    )
    return ext, internal


def _greedy_unit_sum(slopes: np.ndarray, candidates: Sequence[int]):
    """Maximal subset with total slope <= 1: greedy by ascending slope."""
    order = sorted(candidates, key=lambda i: (slopes[i], i))
    chosen = []
    total = 0.0
    for i in order:
        if total + slopes[i] <= 1.0 + 1e-12:
            chosen.append(i)
            total += slopes[i]
    return sorted(chosen)


def subdivide_constraints(
    layer: AffineLayer,
    grid: SubdivisionGrid,
    cfg: SubdivisionConfig = SubdivisionConfig(),
) -> TropExternal:
    """Extra external rows induced by a grid, over (x_1..x_m, y_1..y_n).

    Per interior cut c of input i and output j (slope = w_ji):
        slope <= 0:      0 <= max(x_i - c, y_j - out_lo_j + slope (b_i - c))
        0 <= slope <= 1: y_j - out_hi_j + slope (b_i - c) <= max(0, x_i - c)
        slope >= 1:      x_i - c <= max(0, y_j - out_lo_j - slope (c - a_i))

    Aggregate rows combine all nonpositive-slope inputs (and a maximal
    group of slopes summing to <= 1) at the common interior cut index.
    A group row per output subset J bounds sum_J y below by its exact
    minimum, split across the members proportionally to their ranges; the
    max(0, .) guard is dropped only when the group slopes sum to exactly 1,
    where the convex-combination bound needs no fallback branch.
    Singleton groups reduce to the base lower bound and are skipped.
    """
    if grid.dim != layer.n_inputs:
        raise InvalidDomain("grid dimension must match layer inputs")
    k = zone_constants(layer)
    m = layer.n_inputs
    n = layer.n_outputs
    w = layer.weights
    a = layer.in_box.lo
    b = layer.in_box.hi
    width = 1 + m + n
    lhs_rows, rhs_rows = [], []

    def new_row():
        return np.full(width, BOTTOM), np.full(width, BOTTOM)

    for i in range(m):
        for c in grid.cuts[i][1:-1]:
            for j in range(n):
                slope = w[j, i]
                lhs, rhs = new_row()
                if slope <= 0:
                    lhs[0] = 0.0
                    rhs[1 + i] = -c
                    rhs[1 + m + j] = -k.out_lo[j] + slope * (b[i] - c)
                elif slope <= 1:
                    lhs[1 + m + j] = -k.out_hi[j] + slope * (b[i] - c)
                    rhs[0] = 0.0
                    rhs[1 + i] = -c
                else:
                    lhs[1 + i] = -c
                    rhs[0] = 0.0
                    rhs[1 + m + j] = -k.out_lo[j] - slope * (c - a[i])
                lhs_rows.append(lhs)
                rhs_rows.append(rhs)

    interior_counts = [grid.cuts[i].shape[0] - 2 for i in range(m)]
    for j in range(n):
        neg = [i for i in range(m) if w[j, i] <= 0]
        if neg:
            common = min(interior_counts[i] for i in neg)
            for kk in range(1, common + 1):
                cut = np.array([grid.cuts[i][kk] for i in neg])
                sigma = float(sum(w[j, i] * (b[i] - grid.cuts[i][kk]) for i in neg))
                lhs, rhs = new_row()
                lhs[0] = 0.0
                rhs[1 + m + j] = -k.out_lo[j] + sigma
                for pos, i in enumerate(neg):
                    rhs[1 + i] = -cut[pos]
                lhs_rows.append(lhs)
                rhs_rows.append(rhs)
        unit = _greedy_unit_sum(w[j], [i for i in range(m) if 0 <= w[j, i] <= 1])
        if unit:
            common = min(interior_counts[i] for i in unit)
            full_sum = abs(float(w[j, unit].sum()) - 1.0) <= 1e-12
            for kk in range(1, common + 1):
                sigma = float(sum(w[j, i] * (b[i] - grid.cuts[i][kk]) for i in unit))
                lhs, rhs = new_row()
                lhs[1 + m + j] = -k.out_hi[j] + sigma
                if not full_sum:
                    rhs[0] = 0.0
                for i in unit:
                    rhs[1 + i] = -grid.cuts[i][kk]
                lhs_rows.append(lhs)
                rhs_rows.append(rhs)

    for size in range(2, min(cfg.max_group, n) + 1):
        for group in itertools.combinations(range(n), size):
            gsum = w[list(group)].sum(axis=0)
            group_lo = float(
                np.where(gsum > 0, gsum * a, gsum * b).sum()
                + layer.bias[list(group)].sum()
            )
            los = k.out_lo[list(group)]
            his = k.out_hi[list(group)]
            widths = his - los
            total = widths.sum()
            if total <= 0:
                split = np.full(size, (group_lo - los.sum()) / size)
            else:
                split = (group_lo - los.sum()) * widths / total
            u = los + split
            lhs, rhs = new_row()
            lhs[0] = 0.0
            for pos, j in enumerate(group):
                rhs[1 + m + j] = -u[pos]
            lhs_rows.append(lhs)
            rhs_rows.append(rhs)

    if not lhs_rows:
        return TropExternal.empty(m + n)
    return TropExternal(np.vstack(lhs_rows), np.vstack(rhs_rows))


def analyze_cellwise(
    layer: AffineLayer,
    grid: SubdivisionGrid,
    apply_relu: bool = False,
    cell_budget: int = 1024,
    eps: float = DEFAULT_EPS,
) -> TropInternal:
    """Hull of the union of per-cell zone abstractions.

    With ``apply_relu`` the output coordinates are duplicated and clamped,
    so the result lives over (x, pre-activation, post-activation).
    """
    if grid.dim != layer.n_inputs:
        raise InvalidDomain("grid dimension must match layer inputs")
    if grid.n_cells > cell_budget:
        raise CellBudgetExceeded(
            f"{grid.n_cells} cells exceed the budget of {cell_budget}"
        )
    out: Optional[TropInternal] = None
    m = layer.n_inputs
    for cell in grid.cells():
        sub = AffineLayer(layer.weights, layer.bias, cell)
        piece = zone_internal(zone_constants(sub), sub, eps=eps)
        if apply_relu:
            g = piece.generators
            piece = TropInternal(np.hstack([g, np.maximum(g[:, m:], 0.0)]))
        out = piece if out is None else union_internal(out, piece, eps=eps)
    return extreme_filter(out, eps=eps)
