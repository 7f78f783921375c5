"""Dense two-phase primal simplex with Bland's pivoting rule.

The solver works on a full tableau.  Input ordering fully determines the pivot
sequence, so a given LP always produces the same vertex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


class SimplexIterationLimit(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def _bland_iterate(T, basis, n_cols, tol, limit, counter):
    """Run Bland pivots on tableau ``T`` (objective in the last row).

    Returns False when an unbounded ray is found.
    """
    m = T.shape[0] - 1
    while True:
        red = T[m, :n_cols]
        cand = np.flatnonzero(red < -tol)
        if cand.size == 0:
            return True
        c = int(cand[0])
        col = T[:m, c]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return False
        rhs = np.maximum(T[rows, -1], 0.0)
        ratios = rhs / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, c)
        basis[r] = c
        counter[0] += 1
        if counter[0] > limit:
            raise SimplexIterationLimit(f"simplex exceeded {limit} pivots")


def simplex_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=None, hi=None,
                  pivot_tol: float = PIVOT_TOL, feas_tol: float = FEAS_TOL) -> LPResult:
    """Minimise ``c @ z`` s.t. ``A_ub z <= b_ub``, ``A_eq z = b_eq``, ``lo <= z <= hi``.

    Missing bounds default to ``z >= 0``; use ``-inf``/``inf`` for free
    variables.  Returns an :class:`LPResult` whose status is one of
    ``"optimal"``, ``"infeasible"``, ``"unbounded"``.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    nz = c.shape[0]
    A_ub = np.zeros((0, nz)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nz)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, nz)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nz)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    lo = np.zeros(nz) if lo is None else np.asarray(lo, dtype=float).reshape(-1)
    hi = np.full(nz, np.inf) if hi is None else np.asarray(hi, dtype=float).reshape(-1)

    # z = shift + M y, y >= 0
    cols = []
    shift = np.zeros(nz)
    extra_ub = []
    for j in range(nz):
        if np.isfinite(lo[j]):
            if np.isfinite(hi[j]) and hi[j] < lo[j]:
                return LPResult(INFEASIBLE, None, np.inf, 0)
            shift[j] = lo[j]
            cols.append((j, 1.0))
            if np.isfinite(hi[j]):
                extra_ub.append((len(cols) - 1, hi[j] - lo[j]))
        elif np.isfinite(hi[j]):
            shift[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    M = np.zeros((nz, ny))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s

    Aub = A_ub @ M
    bub = b_ub - A_ub @ shift
    if extra_ub:
        rows = np.zeros((len(extra_ub), ny))
        for r, (k, ub) in enumerate(extra_ub):
            rows[r, k] = 1.0
        Aub = np.vstack([Aub, rows])
        bub = np.concatenate([bub, [ub for _, ub in extra_ub]])
    Aeq = A_eq @ M
    beq = b_eq - A_eq @ shift
    cy = c @ M
    c0 = float(c @ shift)

    m_ub, m_eq = Aub.shape[0], Aeq.shape[0]
    m = m_ub + m_eq
    n_std = ny + m_ub
    A = np.zeros((m, n_std))
    A[:m_ub, :ny] = Aub
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = Aeq
    b = np.concatenate([bub, beq])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    basis = [-1] * m
    art_rows = []
    for i in range(m):
        if i < m_ub and not flip[i]:
            basis[i] = ny + i
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    n_tot = n_std + n_art
    T = np.zeros((m + 1, n_tot + 1))
    T[:m, :n_std] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n_std + k] = 1.0
        basis[i] = n_std + k
    limit = 50 * (m + n_tot) + 50
    counter = [0]

    if n_art:
        T[m, :] = 0.0
        for i in art_rows:
            T[m, :n_std] -= T[i, :n_std]
            T[m, -1] -= T[i, -1]
        _bland_iterate(T, basis, n_tot, pivot_tol, limit, counter)
        if -T[m, -1] > feas_tol:
            return LPResult(INFEASIBLE, None, np.inf, counter[0])
        # drive remaining artificials out of the basis
        keep = []
        for i in range(m):
            if basis[i] >= n_std:
                row = T[i, :n_std]
                cand = np.flatnonzero(np.abs(row) > pivot_tol)
                if cand.size:
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
                    keep.append(i)
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[m:m + 1]])
        basis = [basis[i] for i in keep]
        m = len(keep)
        T = np.hstack([T[:, :n_std], T[:, -1:]])

    # phase 2 objective row
    T[m, :] = 0.0
    T[m, :ny] = cy
    for i, bv in enumerate(basis):
        cb = T[m, bv]
        if cb != 0.0:
            T[m] -= cb * T[i]
    ok = _bland_iterate(T, basis, n_std, pivot_tol, limit, counter)
    if not ok:
        return LPResult(UNBOUNDED, None, -np.inf, counter[0])
    y = np.zeros(n_std)
    for i, bv in enumerate(basis):
        y[bv] = T[i, -1]
    z = shift + M @ y[:ny]
    return LPResult(OPTIMAL, z, float(c @ z), counter[0])
