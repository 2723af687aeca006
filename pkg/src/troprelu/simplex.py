"""Small dense two-phase simplex, enough for minimising over zones.

Zones yield linear programs with few variables and many one- or
two-variable rows, so they are solved through the dual: for

    minimise  a.x  subject to  R x <= c          (x free)

the dual reads  minimise c.y  subject to  R^T y = -a, y >= 0, and strong
duality gives  min a.x = -min c.y.  The dual's basis size equals the
number of primal variables, which keeps the tableau small no matter how
many difference constraints the closed DBM carries.

Bland's rule is used throughout, so the iteration cannot cycle; pivots
below ``eps`` are treated as zero.
"""

from __future__ import annotations

import numpy as np

from .maxplus import DEFAULT_EPS


class _Infeasible(Exception):
    pass


def _simplex_standard(
    cost: np.ndarray,
    eq: np.ndarray,
    rhs: np.ndarray,
    eps: float = DEFAULT_EPS,
    max_iter: int = 100_000,
) -> float:
    """min cost.y s.t. eq @ y = rhs, y >= 0; raises _Infeasible."""
    n_rows, n_cols = eq.shape
    flip = rhs < 0
    eq = np.where(flip[:, None], -eq, eq)
    rhs = np.where(flip, -rhs, rhs)
    # phase-1 tableau with one artificial per row
    tab = np.zeros((n_rows + 1, n_cols + n_rows + 1))
    tab[:n_rows, :n_cols] = eq
    tab[:n_rows, n_cols : n_cols + n_rows] = np.eye(n_rows)
    tab[:n_rows, -1] = rhs
    basis = list(range(n_cols, n_cols + n_rows))
    # phase-1 objective: sum of artificials, expressed in nonbasic terms
    tab[-1, :] = -tab[:n_rows, :].sum(axis=0)
    tab[-1, n_cols : n_cols + n_rows] = 0.0
    _pivot_until_optimal(tab, basis, eps, max_iter, limit_cols=n_cols)
    if tab[-1, -1] < -eps:
        raise _Infeasible
    _drive_out_artificials(tab, basis, n_cols, eps)
    # phase 2 on the original columns
    tab2 = np.zeros((n_rows + 1, n_cols + 1))
    tab2[:n_rows, :n_cols] = tab[:n_rows, :n_cols]
    tab2[:n_rows, -1] = tab[:n_rows, -1]
    tab2[-1, :n_cols] = cost
    for r, b in enumerate(basis):
        if b < n_cols and abs(tab2[-1, b]) > 0:
            tab2[-1, :] -= tab2[-1, b] * tab2[r, :]
    _pivot_until_optimal(tab2, basis, eps, max_iter, limit_cols=n_cols)
    return float(-tab2[-1, -1])


def _pivot_until_optimal(tab, basis, eps, max_iter, limit_cols):
    n_rows = tab.shape[0] - 1
    for _ in range(max_iter):
        red = tab[-1, :limit_cols]
        candidates = np.flatnonzero(red < -eps)
        if candidates.size == 0:
            return
        col = int(candidates[0])  # Bland: smallest index
        ratios = np.full(n_rows, np.inf)
        pos = tab[:n_rows, col] > eps
        ratios[pos] = tab[:n_rows, -1][pos] / tab[:n_rows, col][pos]
        if not np.isfinite(ratios).any():
            # unbounded phase objective cannot happen for our duals
            # (phase 1 is bounded below by 0; phase 2 of a feasible,
            # bounded dual is bounded); treat as numerically stuck
            raise _Infeasible
        best = ratios.min()
        row = int(
            min(
                (basis[r], r)
                for r in np.flatnonzero(np.abs(ratios - best) <= eps)
            )[1]
        )
        _pivot(tab, basis, row, col)
    raise _Infeasible


def _pivot(tab, basis, row, col):
    tab[row, :] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r, :] -= tab[r, col] * tab[row, :]
    basis[row] = col


def _drive_out_artificials(tab, basis, n_cols, eps):
    n_rows = tab.shape[0] - 1
    for r in range(n_rows):
        if basis[r] >= n_cols:
            cols = np.flatnonzero(np.abs(tab[r, :n_cols]) > eps)
            if cols.size:
                _pivot(tab, basis, r, int(cols[0]))
            # else: redundant row, harmless to keep with its artificial


def minimize_over_halfspaces(
    objective: np.ndarray,
    rows: np.ndarray,
    bounds: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> float:
    """Exact min of objective.x over {x : rows @ x <= bounds} (x free).

    Returns -inf when the program is unbounded below.  The feasible set is
    assumed nonempty (our callers check zone emptiness first); an infeasible
    primal would also surface as a dual failure and raises accordingly.
    """
    objective = np.asarray(objective, dtype=float)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    bounds = np.asarray(bounds, dtype=float)
    if rows.shape[0] == 0 or not objective.any():
        if objective.any():
            return float("-inf")
        return 0.0
    try:
        dual = _simplex_standard(bounds, rows.T.copy(), -objective, eps=eps)
    except _Infeasible:
        return float("-inf")
    return -dual
