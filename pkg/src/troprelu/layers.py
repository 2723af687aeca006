"""Optimal zone and octagon abstractions of one affine layer over a box.

Given y = Wx + b with x ranging over a box, the tightest zone containing
the graph {(x, y)} is described by a handful of closed-form constants:

    out_lo_i / out_hi_i   exact range of output i
    diff[i1, i2]          exact sup of y_i1 - y_i2
    slack[i, j]           per input/output slack tightening y_i - x_j:
                          0                      if w_ij <= 0
                          w_ij (hi_j - lo_j)     if 0 <= w_ij <= 1
                          (hi_j - lo_j)          if w_ij >= 1

yielding  out_lo_i - hi_j + slack_ij <= y_i - x_j <= out_hi_i - lo_j - slack_ij.

That zone has an exact tropical description: m + n + 1 inequalities
(external) or m + n + 1 extreme points (internal).  The octagon variant
adds tight bounds on sums y_i1 + y_i2 and y_i + x_j and lives in a doubled
space (+x, +y, -x, -y), where it is again a zone, hence again a tropical
polyhedron.

All constructions here are exact sups over the graph; tests verify every
finite bound is attained by a vertex of the input box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dbm import Box, Dbm, INF, OctDbm, oct_close
from .errors import DimensionMismatch, EmptyAbstraction
from .maxplus import BOTTOM, DEFAULT_EPS
from .tropical import TropExternal, TropInternal, extreme_filter, zone_to_internal


@dataclass(frozen=True)
class AffineLayer:
    """y = weights @ x + bias for x in in_box."""

    weights: np.ndarray
    bias: np.ndarray
    in_box: Box

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.asarray(self.bias, dtype=float).reshape(-1)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        if w.shape[0] != b.shape[0]:
            raise DimensionMismatch("weight rows must match bias length")
        if w.shape[1] != self.in_box.dim:
            raise DimensionMismatch("weight columns must match input box dimension")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise DimensionMismatch("layer weights and bias must be finite")

    @property
    def n_outputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weights.T + self.bias


@dataclass(frozen=True)
class ZoneAbsConstants:
    """Tight zone constants of one affine layer (see module docstring)."""

    out_lo: np.ndarray  # (n,) exact minimum of each output
    out_hi: np.ndarray  # (n,) exact maximum of each output
    diff: np.ndarray  # (n, n) exact sup of y_i1 - y_i2
    slack: np.ndarray  # (n, m) difference-row slack

    @property
    def ext_offset(self) -> np.ndarray:
        """(n, n) constants d[i1, i2] = diff[i1, i2] + out_lo[i2] used in the
        external output rows."""
        return self.diff + self.out_lo[None, :]

    @property
    def covertex(self) -> np.ndarray:
        """(n, n) companion values c[i1, i2] = out_hi[i1] - diff[i1, i2]:
        output i2's coordinate at the vertex where output i1 peaks."""
        return self.out_hi[:, None] - self.diff


@dataclass(frozen=True)
class OctAbsConstants:
    """Zone constants plus tight sum bounds for the octagon abstraction."""

    zone: ZoneAbsConstants
    sum_hi: np.ndarray  # (n, n) exact sup of y_i1 + y_i2
    sum_lo: np.ndarray  # (n, n) exact inf of y_i1 + y_i2
    sum_slack: np.ndarray  # (n, m) slack tightening y_i + x_j


def zone_constants(layer: AffineLayer) -> ZoneAbsConstants:
    w = layer.weights
    b = layer.bias
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    neg = np.minimum(w, 0.0)
    pos = np.maximum(w, 0.0)
    out_lo = neg @ hi + pos @ lo + b
    out_hi = neg @ lo + pos @ hi + b
    dw = w[:, None, :] - w[None, :, :]
    diff = np.where(dw < 0, dw * lo, dw * hi).sum(axis=2) + b[:, None] - b[None, :]
    width = hi - lo
    slack = np.where(w <= 0, 0.0, np.where(w <= 1, w * width, width))
    return ZoneAbsConstants(out_lo, out_hi, diff, slack)


def zone_external(k: ZoneAbsConstants, layer: AffineLayer) -> TropExternal:
    """External tropical form of the tight zone: m + n + 1 rows over
    variables (x_1..x_m, y_1..y_n).

    Row 0 caps everything: max_j (x_j - hi_j), max_i (y_i - out_hi_i) <= 0.
    Row per input j:  max(0, max_i (y_i - out_hi_i + slack_ij)) <= x_j - lo_j.
    Row per output i: max(0, max_j (x_j - hi_j + slack_ij),
                          max_i' (y_i' - d[i', i]))            <= y_i - out_lo_i.
    """
    m = layer.n_inputs
    n = layer.n_outputs
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    d = k.ext_offset
    width = 1 + m + n
    lhs = np.full((1 + m + n, width), BOTTOM)
    rhs = np.full((1 + m + n, width), BOTTOM)
    # row 0
    lhs[0, 1 : 1 + m] = -hi
    lhs[0, 1 + m :] = -k.out_hi
    rhs[0, 0] = 0.0
    # input rows
    for j in range(m):
        r = 1 + j
        lhs[r, 0] = 0.0
        lhs[r, 1 + m :] = k.slack[:, j] - k.out_hi
        rhs[r, 1 + j] = -lo[j]
    # output rows
    for i in range(n):
        r = 1 + m + i
        lhs[r, 0] = 0.0
        lhs[r, 1 : 1 + m] = k.slack[i, :] - hi
        lhs[r, 1 + m :] = -d[:, i]
        rhs[r, 1 + m + i] = -k.out_lo[i]
    return TropExternal(lhs, rhs)


def zone_internal(
    k: ZoneAbsConstants, layer: AffineLayer, eps: float = DEFAULT_EPS
) -> TropInternal:
    """Internal tropical form: the m + n + 1 extreme points of the zone.

    A is the all-lower corner; B_j raises input j to its max and each
    output by its slack; C_i is the graph vertex where output i peaks.
    Degenerate layers produce duplicates, which the filter removes.
    """
    m = layer.n_inputs
    n = layer.n_outputs
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    pts = np.empty((1 + m + n, m + n))
    pts[0] = np.concatenate([lo, k.out_lo])
    for j in range(m):
        x = lo.copy()
        x[j] = hi[j]
        pts[1 + j] = np.concatenate([x, k.out_lo + k.slack[:, j]])
    cov = k.covertex
    for i in range(n):
        pts[1 + m + i] = np.concatenate([lo + k.slack[i, :], cov[i, :]])
    return extreme_filter(TropInternal(pts), eps=eps)


def zone_dbm(k: ZoneAbsConstants, layer: AffineLayer) -> Dbm:
    """The tight zone as a closed DBM over (x_1..x_m, y_1..y_n)."""
    m = layer.n_inputs
    n = layer.n_outputs
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    size = 1 + m + n
    e = np.full((size, size), INF)
    xs = slice(1, 1 + m)
    ys = slice(1 + m, size)
    e[xs, 0] = hi
    e[0, xs] = -lo
    e[ys, 0] = k.out_hi
    e[0, ys] = -k.out_lo
    e[xs, xs] = hi[:, None] - lo[None, :]
    e[ys, ys] = k.diff
    e[ys, xs] = k.out_hi[:, None] - lo[None, :] - k.slack
    e[xs, ys] = (hi[:, None] - k.out_lo[None, :]) - k.slack.T
    np.fill_diagonal(e, 0.0)
    return Dbm(e, closed=True)


def oct_constants(layer: AffineLayer) -> OctAbsConstants:
    w = layer.weights
    b = layer.bias
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    sw = w[:, None, :] + w[None, :, :]
    bias2 = b[:, None] + b[None, :]
    sum_hi = np.where(sw > 0, sw * hi, sw * lo).sum(axis=2) + bias2
    sum_lo = np.where(sw > 0, sw * lo, sw * hi).sum(axis=2) + bias2
    width = hi - lo
    sum_slack = np.where(w >= 0, 0.0, np.where(w >= -1, -w * width, width))
    return OctAbsConstants(zone_constants(layer), sum_hi, sum_lo, sum_slack)


def oct_dbm(k: OctAbsConstants, layer: AffineLayer) -> OctDbm:
    """Tight octagon as a coherent, closed doubled DBM.

    Variable order (x_1..x_m, y_1..y_n); slot i is +v_i, slot m+n+i is
    -v_i.  Every entry is the exact sup of the corresponding +-combination
    over the graph, so strong closure leaves the matrix unchanged.
    """
    m = layer.n_inputs
    n = layer.n_outputs
    z = k.zone
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    dim = m + n
    plus = np.empty((dim, dim))
    xs = slice(0, m)
    ys = slice(m, dim)
    plus[xs, xs] = hi[:, None] - lo[None, :]
    plus[ys, ys] = z.diff
    plus[ys, xs] = z.out_hi[:, None] - lo[None, :] - z.slack
    plus[xs, ys] = (hi[:, None] - z.out_lo[None, :]) - z.slack.T
    mixed_hi = np.empty((dim, dim))  # sup of v_i + v_j
    mixed_hi[xs, xs] = hi[:, None] + hi[None, :]
    mixed_hi[ys, ys] = k.sum_hi
    mixed_hi[ys, xs] = z.out_hi[:, None] + hi[None, :] - k.sum_slack
    mixed_hi[xs, ys] = (hi[:, None] + z.out_hi[None, :]) - k.sum_slack.T
    mixed_lo = np.empty((dim, dim))  # sup of -(v_i + v_j)
    mixed_lo[xs, xs] = -(lo[:, None] + lo[None, :])
    mixed_lo[ys, ys] = -k.sum_lo
    mixed_lo[ys, xs] = -(z.out_lo[:, None] + lo[None, :] + k.sum_slack)
    mixed_lo[xs, ys] = -((lo[:, None] + z.out_lo[None, :]) + k.sum_slack.T)
    e = np.block([[plus, mixed_hi], [mixed_lo, plus.T]])
    np.fill_diagonal(e, 0.0)
    out = oct_close(OctDbm(e))
    if isinstance(out, OctDbm):
        return out
    raise EmptyAbstraction("octagon abstraction of a nonempty box came out empty")


def oct_internal(
    k: OctAbsConstants, layer: AffineLayer, eps: float = DEFAULT_EPS
) -> TropInternal:
    """Extreme points of the doubled-space octagon zone.

    The doubled octagon is itself a (bounded) zone over 2(m+n) variables,
    so its generator form follows from the zone-to-generators conversion;
    ``oct_internal_direct`` cross-checks the closed-form coordinates.
    """
    return zone_to_internal(oct_dbm(k, layer).to_bounded_dbm(), eps=eps)


def oct_internal_direct(
    k: OctAbsConstants, layer: AffineLayer, eps: float = DEFAULT_EPS
) -> TropInternal:
    """Closed-form doubled-space extreme points, one per doubled variable.

    The lower corner plus one point per doubled slot, each placing that
    slot at its maximum with every other coordinate as low as the octagon
    allows.  Coordinates mirror the zone case, with sum slacks playing the
    role of difference slacks on the negated copies.
    """
    m = layer.n_inputs
    n = layer.n_outputs
    z = k.zone
    lo = layer.in_box.lo
    hi = layer.in_box.hi
    cov = z.covertex
    pts = []
    pts.append(np.concatenate([lo, z.out_lo, -hi, -z.out_hi]))
    for j in range(m):  # +x_j at its max
        x = lo.copy()
        x[j] = hi[j]
        pts.append(
            np.concatenate(
                [x, z.out_lo + z.slack[:, j], -hi, -z.out_hi + k.sum_slack[:, j]]
            )
        )
    for i in range(n):  # +y_i at its max
        # diagonal works out automatically: sum_hi[i, i] = 2 out_hi[i]
        ym = z.out_hi[i] - k.sum_hi[i, :]
        pts.append(
            np.concatenate(
                [lo + z.slack[i, :], cov[i, :], -hi + k.sum_slack[i, :], ym]
            )
        )
    for j in range(m):  # -x_j at its max (x_j at its min)
        xm = -hi.copy()
        xm[j] = -lo[j]
        pts.append(
            np.concatenate(
                [lo, z.out_lo + k.sum_slack[:, j], xm, -z.out_hi + z.slack[:, j]]
            )
        )
    for i in range(n):  # -y_i at its max (y_i at its min)
        yp = k.sum_lo[i, :] - z.out_lo[i]  # diagonal: 2 out_lo[i] - out_lo[i]
        ym = -z.out_lo[i] - z.diff[:, i]
        pts.append(
            np.concatenate([lo + k.sum_slack[i, :], yp, -hi + z.slack[i, :], ym])
        )
    return extreme_filter(TropInternal(np.vstack(pts)), eps=eps)
