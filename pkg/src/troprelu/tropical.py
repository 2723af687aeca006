"""Tropical polyhedra in generator (internal) and inequality (external) form.

A tropical polyhedron in internal form is the tropical convex hull of
finitely many generators g_1..g_p: the set of points max_j (lam_j + g_j)
with all lam_j <= 0 and at least one lam_j = 0 (tropical affine
combinations).  In external form it is the solution set of rows

    max(l_0, l_1 + x_1, ..., l_k + x_k)  <=  max(r_0, r_1 + x_1, ...)

where slot 0 of each side is the constant term and absent terms are -inf.

Rays are deliberately not represented: unbounded directions are handled by
embedding into large finite intervals supplied by the caller, which is
what the analysis does anyway.  All generators therefore have finite
coordinates.

The bridge to zones: a closed bounded zone over n variables equals the
hull of n + 1 explicit points (``zone_to_internal``), and the tightest
zone around a hull comes from the residuated matrix A/A with
(A/A)_{i,j} = min_k (a_{i,k} - a_{j,k}) over homogenized generator
columns (``internal_to_zone``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dbm import Dbm
from .errors import (
    BadIndex,
    DimensionMismatch,
    EmptyGenerators,
    InfiniteEntry,
    InvalidInterval,
    NotClosed,
)
from .maxplus import BOTTOM, DEFAULT_EPS


@dataclass(frozen=True)
class TropInternal:
    """Generator list of a tropical polyhedron; rows are extreme points."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        object.__setattr__(self, "generators", g)
        if g.ndim != 2:
            raise DimensionMismatch("generators must form a 2-d array")

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[0]


@dataclass(frozen=True)
class TropExternal:
    """Row system of tropical affine inequalities lhs <= rhs.

    ``lhs`` and ``rhs`` have shape (rows, dim + 1); column 0 is the
    constant term, column j+1 the coefficient of variable j.  Absent terms
    are -inf.
    """

    lhs: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        lhs = np.asarray(self.lhs, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if lhs.ndim == 1:
            lhs = lhs.reshape(1, -1)
        if rhs.ndim == 1:
            rhs = rhs.reshape(1, -1)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        if lhs.ndim != 2 or lhs.shape != rhs.shape or lhs.shape[1] < 1:
            raise DimensionMismatch("lhs and rhs must be matching (rows, dim+1) arrays")

    @property
    def dim(self) -> int:
        return self.lhs.shape[1] - 1

    @property
    def n_rows(self) -> int:
        return self.lhs.shape[0]

    @staticmethod
    def empty(dim: int) -> "TropExternal":
        return TropExternal(np.zeros((0, dim + 1)), np.zeros((0, dim + 1)))


def _eval_rows(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Max-evaluate affine rows at points: result[r, p] for row r, point p."""
    aug = np.hstack([np.zeros((points.shape[0], 1)), points])
    # -inf coefficients stay -inf after adding finite coordinates
    return (coeffs[:, None, :] + aug[None, :, :]).max(axis=2).T


def external_membership(
    ext: TropExternal, point: np.ndarray, eps: float = DEFAULT_EPS
) -> bool:
    """True iff every row's lhs value is <= its rhs value + eps."""
    p = np.asarray(point, dtype=float).reshape(1, -1)
    if p.shape[1] != ext.dim:
        raise DimensionMismatch("point dimension does not match system")
    if ext.n_rows == 0:
        return True
    lhs = _eval_rows(ext.lhs, p)[0]
    rhs = _eval_rows(ext.rhs, p)[0]
    return bool((lhs <= rhs + eps).all())


def external_membership_many(
    ext: TropExternal, points: np.ndarray, eps: float = DEFAULT_EPS
) -> np.ndarray:
    """Vectorised membership mask over point rows (block processed)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != ext.dim:
        raise DimensionMismatch("point dimension does not match system")
    if ext.n_rows == 0:
        return np.ones(pts.shape[0], dtype=bool)
    per_point = max(ext.n_rows * (ext.dim + 1), 1)
    block = max(1, min(pts.shape[0], 4_000_000 // per_point))
    out = np.empty(pts.shape[0], dtype=bool)
    for start in range(0, pts.shape[0], block):
        p = pts[start : start + block]
        lhs = _eval_rows(ext.lhs, p)
        rhs = _eval_rows(ext.rhs, p)
        out[start : start + block] = (lhs <= rhs + eps).all(axis=1)
    return out


def internal_membership(
    poly: TropInternal, point: np.ndarray, eps: float = DEFAULT_EPS
) -> bool:
    """Residuation test for tropical affine hull membership.

    raw_j = min_k (p_k - g_{j,k}) is the largest coefficient keeping
    raw_j + g_j <= p.  Clamping at 0 gives the greatest *admissible*
    combination; the point is in the hull iff that combination reproduces
    it and the affine side condition max_j lam_j = 0 is reachable, i.e.
    some generator lies componentwise below the point (raw_j >= 0).
    """
    p = np.asarray(point, dtype=float)
    if poly.n_generators == 0:
        raise EmptyGenerators("membership test needs at least one generator")
    if p.shape != (poly.dim,):
        raise DimensionMismatch("point dimension does not match polyhedron")
    raw = (p[None, :] - poly.generators).min(axis=1)
    if raw.max() < -eps:
        return False
    lam = np.minimum(0.0, raw)
    recon = (poly.generators + lam[:, None]).max(axis=0)
    return bool(np.abs(recon - p).max() <= eps)


def internal_membership_many(
    poly: TropInternal, points: np.ndarray, eps: float = DEFAULT_EPS
) -> np.ndarray:
    """Vectorised residuation membership over point rows.

    Processed in blocks to keep the (points x generators x dim) temporary
    bounded.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if poly.n_generators == 0:
        raise EmptyGenerators("membership test needs at least one generator")
    if pts.shape[1] != poly.dim:
        raise DimensionMismatch("point dimension does not match polyhedron")
    g = poly.generators
    per_point = max(g.shape[0] * g.shape[1], 1)
    block = max(1, min(pts.shape[0], 4_000_000 // per_point))
    out = np.empty(pts.shape[0], dtype=bool)
    for start in range(0, pts.shape[0], block):
        p = pts[start : start + block]
        raw = (p[:, None, :] - g[None, :, :]).min(axis=2)
        lam = np.minimum(0.0, raw)
        recon = (g[None, :, :] + lam[:, :, None]).max(axis=1)
        ok = np.abs(recon - p).max(axis=1) <= eps
        out[start : start + block] = ok & (raw.max(axis=1) >= -eps)
    return out


def zone_to_internal(zone: Dbm, eps: float = DEFAULT_EPS) -> TropInternal:
    """Generator form of a closed bounded zone: n + 1 explicit points.

    The lower corner A = (-c_{0,1}, ..., -c_{0,n}) plus, for each variable
    k, the point B_k = (c_{k,0} - c_{k,1}, ..., c_{k,0} - c_{k,n}) where
    x_k sits at its maximum.  Closedness makes these points feasible and
    their hull exactly the zone.
    """
    m = zone.entries
    if not zone.closed:
        raise NotClosed("zone_to_internal needs a closed DBM")
    if not np.isfinite(m).all():
        raise InfiniteEntry("zone_to_internal needs finite entries (bounded zone)")
    a = -m[0, 1:]
    b = m[1:, 0][:, None] - m[1:, 1:]
    return extreme_filter(TropInternal(np.vstack([a, b])), eps=eps)


def internal_to_zone(poly: TropInternal) -> Dbm:
    """Smallest zone containing the hull, via the residuated matrix A/A.

    Generators are homogenized (a 0 appended), placed as columns of A, and
    (A/A)_{i,j} = min_k (a_{i,k} - a_{j,k}) gives the valid lower bounds
    x_i - x_j >= (A/A)_{i,j}; row/column n+1 carries the interval bounds.
    """
    if poly.n_generators == 0:
        raise EmptyGenerators("internal_to_zone needs at least one generator")
    cols = np.vstack([poly.generators.T, np.zeros((1, poly.n_generators))])
    n1 = cols.shape[0]
    quot = np.empty((n1, n1))
    for i in range(n1):
        quot[i] = (cols[i][None, :] - cols).min(axis=1)
    # x_i - x_j >= quot[i, j]  <=>  DBM bound on x_j - x_i is -quot[i, j];
    # the homogenization row n1-1 plays the constant slot 0.
    order = np.concatenate([[n1 - 1], np.arange(n1 - 1)])
    sub = quot[np.ix_(order, order)]
    return Dbm(-sub.T, closed=True)


def extreme_filter(poly: TropInternal, eps: float = DEFAULT_EPS) -> TropInternal:
    """Minimal generating set: drop generators the others already combine to.

    Duplicates (within eps) keep the first occurrence.  The minimal set of
    a tropical polytope is unique, so the scan order does not affect the
    resulting set beyond duplicate tie-breaking.
    """
    g = poly.generators
    if g.shape[0] <= 1:
        return poly
    keep = []
    for i in range(g.shape[0]):
        if not any(np.abs(g[i] - g[k]).max() <= eps for k in keep):
            keep.append(i)
    g = g[keep]
    alive = list(range(g.shape[0]))
    for i in range(g.shape[0] - 1, -1, -1):
        if len(alive) == 1:
            break
        others = [k for k in alive if k != i]
        rest = g[others]
        raw = (g[i][None, :] - rest).min(axis=1)
        if raw.max() < -eps:
            continue
        lam = np.minimum(0.0, raw)
        recon = (rest + lam[:, None]).max(axis=0)
        if np.abs(recon - g[i]).max() <= eps:
            alive = others
    return TropInternal(g[alive])


def union_internal(a: TropInternal, b: TropInternal, eps: float = DEFAULT_EPS) -> TropInternal:
    """Hull of the union: concatenate generators, then reduce."""
    if a.dim != b.dim:
        raise DimensionMismatch("cannot union polyhedra of different dimensions")
    return extreme_filter(TropInternal(np.vstack([a.generators, b.generators])), eps=eps)


def intersect_external(a: TropExternal, b: TropExternal) -> TropExternal:
    """Intersection: concatenation of the two row systems."""
    if a.dim != b.dim:
        raise DimensionMismatch("cannot intersect systems of different dimensions")
    return TropExternal(np.vstack([a.lhs, b.lhs]), np.vstack([a.rhs, b.rhs]))


def emb_internal(
    poly: TropInternal,
    interval: tuple,
    position: int,
    eps: float = DEFAULT_EPS,
) -> TropInternal:
    """Embed the hull into one extra bounded dimension at ``position``.

    The extreme points of H x [a, b] are every (p_i, a) plus (p_i, b) for
    the generators p_i that dominate no other generator componentwise;
    dominated ones reach their b-copy through combinations with the
    dominating generator's b-copy.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (np.isfinite(a) and np.isfinite(b)) or a > b:
        raise InvalidInterval(f"invalid embedding interval [{a}, {b}]")
    if position < 0 or position > poly.dim:
        raise BadIndex("embedding position out of range")
    g = poly.generators
    if g.shape[0] == 0:
        raise EmptyGenerators("cannot embed an empty generator list")
    dominates_other = np.zeros(g.shape[0], dtype=bool)
    for i in range(g.shape[0]):
        le = (g <= g[i] + eps).all(axis=1)
        le[i] = False
        dominates_other[i] = le.any()
    low = np.insert(g, position, a, axis=1)
    high = np.insert(g[~dominates_other], position, b, axis=1)
    pts = np.vstack([low, high]) if b > a else low
    # drop exact duplicates introduced by degenerate intervals
    seen = []
    keep = []
    for i in range(pts.shape[0]):
        if not any(np.abs(pts[i] - pts[k]).max() <= eps for k in keep):
            keep.append(i)
    return TropInternal(pts[keep])


def emb_box_internal(
    poly: TropInternal,
    intervals: Sequence[tuple],
    position: int,
    eps: float = DEFAULT_EPS,
) -> TropInternal:
    """Embed several bounded dimensions, one after the other."""
    out = poly
    for off, iv in enumerate(intervals):
        out = emb_internal(out, iv, position + off, eps=eps)
    return out


def emb_external(ext: TropExternal, new_dims: int, position: int) -> TropExternal:
    """Embed an inequality system: new columns are -inf in every row."""
    if new_dims < 0 or position < 0 or position > ext.dim:
        raise BadIndex("bad embedding position or count")
    if new_dims == 0:
        return ext
    col = position + 1  # account for the constant slot
    fill_l = np.full((ext.n_rows, new_dims), BOTTOM)
    lhs = np.hstack([ext.lhs[:, :col], fill_l, ext.lhs[:, col:]])
    rhs = np.hstack([ext.rhs[:, :col], fill_l.copy(), ext.rhs[:, col:]])
    return TropExternal(lhs, rhs)


def proj_internal(
    poly: TropInternal, keep: Sequence[int], eps: float = DEFAULT_EPS
) -> TropInternal:
    """Project onto the kept coordinates (projected generators generate)."""
    keep = list(keep)
    if any(k < 0 or k >= poly.dim for k in keep):
        raise BadIndex("projection index out of range")
    return extreme_filter(TropInternal(poly.generators[:, keep]), eps=eps)
