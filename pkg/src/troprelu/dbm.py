"""Zones as difference-bound matrices, plus the doubled encoding for octagons.

A zone over variables x_1..x_n is a conjunction of difference constraints
x_i - x_j <= c and interval bounds a_i <= x_i <= b_i.  It is stored as a
difference-bound matrix (DBM): an (n+1) x (n+1) matrix of upper bounds on
x_i - x_j, where slot 0 is a phantom constant variable x_0 = 0, so that
row/column 0 carries the interval bounds:

    entries[i, 0] = upper bound of x_i          entries[0, i] = -(lower bound)

Missing constraints are ``+inf``.  The closure (all-pairs shortest paths)
is the smallest DBM with the same concretization; after closure every
finite constraint is saturated by some point of the zone.  Emptiness shows
up as a negative diagonal entry during closure and is returned as the
``EMPTY`` value, never raised.

Octagons add constraints on sums x_i + x_j.  They are encoded as a DBM
over 2n doubled variables (+x_1..+x_n, -x_1..-x_n) with *no* constant
slot: a unary bound x_i <= b is written as (+x_i) - (-x_i) <= 2b.  The
encoding must stay coherent: the bound on (+x_i) - (-x_j) equals the bound
on (+x_j) - (-x_i), both meaning x_i + x_j <= c.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, EmptyInput, UnboundedVariable
from .maxplus import DEFAULT_EPS

INF = float("inf")


class _EmptyZone:
    """Singleton marker for the empty zone (bottom)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"


EMPTY = _EmptyZone()


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with finite per-variable intervals [lo_j, hi_j]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box bounds must be 1-d arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise UnboundedVariable("box bounds must be finite")
        if (lo > hi).any():
            raise EmptyInput("box has lo > hi; empty boxes are not representable")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
        """Boolean mask over points (rows) lying in the box within eps."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((pts >= self.lo - eps) & (pts <= self.hi + eps)).all(axis=1)

    def intersect(self, other: "Box") -> Union["Box", _EmptyZone]:
        if other.dim != self.dim:
            raise DimensionMismatch("box dimensions differ")
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if (lo > hi).any():
            return EMPTY
        return Box(lo, hi)

    def to_dbm(self) -> "Dbm":
        """The (already closed) DBM of the box."""
        n = self.dim
        m = np.full((n + 1, n + 1), INF)
        np.fill_diagonal(m, 0.0)
        m[1:, 0] = self.hi
        m[0, 1:] = -self.lo
        # pairwise sups over the product set
        m[1:, 1:] = self.hi[:, None] - self.lo[None, :]
        np.fill_diagonal(m, 0.0)
        return Dbm(m, closed=True)

    def vertices(self) -> Iterator[np.ndarray]:
        """All 2^dim corners (use only for small dimensions)."""
        n = self.dim
        for mask in range(1 << n):
            v = self.lo.copy()
            for j in range(n):
                if mask >> j & 1:
                    v[j] = self.hi[j]
            yield v

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))


@dataclass(frozen=True)
class Dbm:
    """Difference-bound matrix over n variables plus the constant slot 0.

    ``entries[i, j]`` is the upper bound on x_i - x_j (``+inf`` if
    unconstrained).  ``closed`` records whether the matrix is known to be
    shortest-path closed; operations that need closure check the flag.
    Instances are immutable by convention; operations return new values.
    """

    entries: np.ndarray
    closed: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionMismatch("DBM must be a square matrix")

    @property
    def dim(self) -> int:
        """Number of variables, excluding the constant slot."""
        return self.entries.shape[0] - 1

    def upper(self, i: int) -> float:
        """Upper bound of x_i (1-based variable slot)."""
        return float(self.entries[i, 0])

    def lower(self, i: int) -> float:
        return float(-self.entries[0, i])

    def slice(self, slots: Sequence[int]) -> "Dbm":
        """Sub-DBM on the given variable slots (1-based), keeping slot 0.

        Projection of a closed zone is exact: shortest paths through the
        dropped variables are already folded into the kept entries.
        """
        idx = np.asarray([0, *slots], dtype=int)
        return Dbm(self.entries[np.ix_(idx, idx)].copy(), closed=self.closed)


MaybeDbm = Union[Dbm, _EmptyZone]


def _floyd_warshall(m: np.ndarray) -> np.ndarray:
    for k in range(m.shape[0]):
        np.minimum(m, m[:, k, None] + m[None, k, :], out=m)
    return m


def dbm_close(d: Dbm, eps: float = DEFAULT_EPS) -> MaybeDbm:
    """Shortest-path closure; EMPTY iff a diagonal entry goes negative."""
    m = d.entries.copy()
    diag = np.diagonal(m).copy()
    np.fill_diagonal(m, np.minimum(diag, 0.0))
    _floyd_warshall(m)
    if (np.diagonal(m) < -eps).any():
        return EMPTY
    np.fill_diagonal(m, 0.0)
    return Dbm(m, closed=True)


def dbm_intersect(a: Dbm, b: Dbm, eps: float = DEFAULT_EPS) -> MaybeDbm:
    """Entrywise min followed by closure (zone intersection)."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot intersect DBMs of dims {a.dim} and {b.dim}")
    return dbm_close(Dbm(np.minimum(a.entries, b.entries)), eps=eps)


def dbm_box(d: Dbm) -> Box:
    """Extract per-variable bounds from a closed, nonempty DBM."""
    if not d.closed:
        from .errors import NotClosed

        raise NotClosed("dbm_box needs a closed DBM")
    hi = d.entries[1:, 0]
    lo = -d.entries[0, 1:]
    if not (np.isfinite(hi).all() and np.isfinite(lo).all()):
        raise UnboundedVariable("zone has an unbounded variable")
    return Box(lo.copy(), hi.copy())


def best_zone_of_points(points: np.ndarray) -> Dbm:
    """Tightest zone containing a finite point set.

    Every entry is the sup of x_i - x_j over the set (with x_0 = 0), so the
    result is closed by construction and every finite constraint is
    attained by some input point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0 or pts.shape[0] == 0:
        raise EmptyInput("best_zone_of_points needs at least one point")
    aug = np.hstack([np.zeros((pts.shape[0], 1)), pts])
    m = (aug[:, :, None] - aug[:, None, :]).max(axis=0)
    return Dbm(m, closed=True)


def dbm_contains(d: Dbm, points: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Boolean mask over points (rows) satisfying every finite constraint."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d.dim:
        raise DimensionMismatch("point dimension does not match DBM")
    aug = np.hstack([np.zeros((pts.shape[0], 1)), pts])
    ok = np.ones(pts.shape[0], dtype=bool)
    m = d.entries
    for i in range(m.shape[0]):
        bound = m[i]
        finite = np.isfinite(bound)
        if not finite.any():
            continue
        diffs = aug[:, i, None] - aug[:, finite]
        ok &= (diffs <= bound[finite] + eps).all(axis=1)
    return ok


def embed_dbm(d: Dbm, old_slots: Sequence[int], new_dim: int) -> Dbm:
    """Embed a DBM into a larger space, leaving new variables unconstrained.

    ``old_slots[k]`` is the 1-based slot in the new space of the k-th
    variable of ``d``.  The result stays closed if ``d`` was: +inf columns
    cannot shorten any path.
    """
    if len(old_slots) != d.dim:
        raise DimensionMismatch("slot map size does not match DBM dimension")
    m = np.full((new_dim + 1, new_dim + 1), INF)
    np.fill_diagonal(m, 0.0)
    idx = np.asarray([0, *old_slots], dtype=int)
    m[np.ix_(idx, idx)] = d.entries
    return Dbm(m, closed=d.closed)


# ---------------------------------------------------------------------------
# Octagons: coherent doubled DBMs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OctDbm:
    """Octagon over n variables as a DBM on 2n slots, no constant slot.

    Slot i (0-based, i < n) is +x_i; slot n+i is -x_i.  ``entries[p, q]``
    bounds slot_p - slot_q, so mixed entries bound sums:
    entries[i, n+j] is the upper bound on x_i + x_j.  Unary bounds use the
    doubling trick x_i <= b  <=>  (+x_i) - (-x_i) <= 2b.
    """

    entries: np.ndarray
    closed: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0:
            raise DimensionMismatch("octagon DBM must be square with even size")

    @property
    def dim(self) -> int:
        """Number of underlying variables (half the slot count)."""
        return self.entries.shape[0] // 2

    def mirror(self, slot: int) -> int:
        n = self.dim
        return slot + n if slot < n else slot - n

    def box(self) -> Box:
        n = self.dim
        hi = np.diagonal(self.entries[:n, n:]) / 2.0
        lo = -np.diagonal(self.entries[n:, :n]) / 2.0
        if not (np.isfinite(hi).all() and np.isfinite(lo).all()):
            raise UnboundedVariable("octagon has an unbounded variable")
        return Box(lo.copy(), hi.copy())

    def to_bounded_dbm(self) -> Dbm:
        """View the doubled slots as a plain zone over 2n variables.

        Interval bounds for the constant slot come from halving the
        mirror-diagonal entries (x_i <= b stored as 2b on (+x_i) - (-x_i)).
        """
        n2 = 2 * self.dim
        m = np.full((n2 + 1, n2 + 1), INF)
        m[1:, 1:] = self.entries
        for p in range(n2):
            q = self.mirror(p)
            m[p + 1, 0] = self.entries[p, q] / 2.0
            m[0, p + 1] = self.entries[q, p] / 2.0
        np.fill_diagonal(m, 0.0)
        out = dbm_close(Dbm(m))
        if out is EMPTY:
            raise EmptyInput("octagon is empty")
        return out


def _coherence_min(m: np.ndarray, n: int) -> np.ndarray:
    # entries[p, q] and entries[mirror(q), mirror(p)] encode the same fact
    perm = np.concatenate([np.arange(n, 2 * n), np.arange(0, n)])
    return np.minimum(m, m[np.ix_(perm, perm)].T)


def oct_close(o: OctDbm, eps: float = DEFAULT_EPS) -> Union[OctDbm, _EmptyZone]:
    """Strong closure of a coherent doubled DBM.

    Alternates shortest-path closure, the half-sum strengthening
    m[p,q] <- min(m[p,q], (m[p, p̄] + m[q̄, q]) / 2) and coherence until a
    fixed point; entries only decrease, so the loop terminates.
    """
    n = o.dim
    m = o.entries.copy()
    np.fill_diagonal(m, np.minimum(np.diagonal(m), 0.0))
    m = _coherence_min(m, n)
    # entries only decrease, so the loop stabilises; the cap guards against
    # float drip-feeding and early exit merely leaves a sound, looser matrix
    for _ in range(64):
        prev = m.copy()
        _floyd_warshall(m)
        if (np.diagonal(m) < -eps).any():
            return EMPTY
        perm = np.concatenate([np.arange(n, 2 * n), np.arange(0, n)])
        half = (m[np.arange(2 * n), perm][:, None] + m[perm, np.arange(2 * n)][None, :]) / 2.0
        np.minimum(m, half, out=m)
        m = _coherence_min(m, n)
        if (np.diagonal(m) < -eps).any():
            return EMPTY
        np.fill_diagonal(m, np.minimum(np.diagonal(m), 0.0))
        if np.array_equal(prev, m):
            break
    np.fill_diagonal(m, 0.0)
    return OctDbm(m, closed=True)


def oct_intersect(a: OctDbm, b: OctDbm, eps: float = DEFAULT_EPS) -> Union[OctDbm, _EmptyZone]:
    if a.dim != b.dim:
        raise DimensionMismatch("octagon dimensions differ")
    return oct_close(OctDbm(np.minimum(a.entries, b.entries)), eps=eps)


def embed_oct(o: OctDbm, old_vars: Sequence[int], new_dim: int) -> OctDbm:
    """Embed an octagon into a larger doubled space (0-based variable map)."""
    if len(old_vars) != o.dim:
        raise DimensionMismatch("variable map size does not match octagon")
    m = np.full((2 * new_dim, 2 * new_dim), INF)
    np.fill_diagonal(m, 0.0)
    slots = np.asarray([*old_vars, *[v + new_dim for v in old_vars]], dtype=int)
    m[np.ix_(slots, slots)] = o.entries
    return OctDbm(m, closed=o.closed)
