"""Brute-force reference oracle for low-dimensional problems.

Works for any piece and constraint the expression language can evaluate,
including nonconvex constraints, as long as the search dimension after
eliminating

* one epigraph-style coordinate (objective increasing in it, every constraint a
  lower bound on it), and
* one coordinate per independent equality row

is at most two.  The search is a uniform grid followed by shrinking windows
around the incumbent.  In one dimension, constraint roots and kinks are added
as exact candidates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog

from . import expr as ex
from .oracle import Oracle, OracleResult, active_constraint_set
from .problem import MSProblem, canonical
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED


class RefOracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    ranges: dict = field(default_factory=dict)
    points: int | None = None
    rounds: int = 6
    shrink: float = 10.0
    eliminate: object = "auto"

    def points_for(self, dim: int) -> int:
        if self.points is not None:
            return self.points
        return 2001 if dim <= 1 else 401


def _find_eliminable(problem: MSProblem, i: int, S: tuple):
    piece = problem.pieces[i]
    for k in reversed(range(problem.d)):
        a = ex.linear_coefficient(piece, k)
        if a is None or a <= 0:
            continue
        if problem.basic.A_in.shape[0] and np.any(problem.basic.A_in[:, k] != 0):
            continue
        if problem.basic.A_eq.shape[0] and np.any(problem.basic.A_eq[:, k] != 0):
            continue
        coefs = [ex.linear_coefficient(problem.constraints[j], k) for j in S]
        if any(c is None or c > 0 for c in coefs):
            continue
        return k
    return None


def _rref(A: np.ndarray, b: np.ndarray, tol: float = 1e-12):
    """Pivot columns and reduced rows of ``A x = b``; None if inconsistent."""
    A = A.astype(float).copy()
    b = b.astype(float).copy()
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[piv, c]) <= tol:
            continue
        A[[r, piv]] = A[[piv, r]]
        b[[r, piv]] = b[[piv, r]]
        s = A[r, c]
        A[r] /= s
        b[r] /= s
        for q in range(rows):
            if q != r and A[q, c] != 0:
                f = A[q, c]
                A[q] -= f * A[r]
                b[q] -= f * b[r]
        pivots.append(c)
        r += 1
    if np.any(np.abs(b[r:]) > 1e-9):
        return None
    return pivots, A[:r], b[:r]


class _Reduced:
    """Map from free search coordinates to full points."""

    def __init__(self, problem: MSProblem, i: int, S: tuple, grid: GridSpec):
        self.problem = problem
        self.piece = problem.pieces[i]
        self.S = S
        d = problem.d
        if grid.eliminate == "auto":
            k = _find_eliminable(problem, i, S)
        else:
            k = grid.eliminate
        self.k = k
        rest = [c for c in range(d) if c != k]
        A_eq = problem.basic.A_eq
        self.pivot_cols: list = []
        self.red_A = np.zeros((0, 0))
        self.red_b = np.zeros(0)
        self.inconsistent = False
        if A_eq.shape[0]:
            sub = A_eq[:, rest]
            out = _rref(sub, problem.basic.b_eq)
            if out is None:
                self.inconsistent = True
                pivots, red_A, red_b = [], np.zeros((0, len(rest))), np.zeros(0)
            else:
                pivots, red_A, red_b = out
            self.pivot_cols = [rest[p] for p in pivots]
            self.red_A = red_A
            self.red_b = red_b
            self.rest = rest
        else:
            self.rest = rest
        self.free = [c for c in rest if c not in self.pivot_cols]
        if len(self.free) > 2:
            raise RefOracleError(f"effective search dimension {len(self.free)} exceeds 2")
        if k is not None:
            self.k_coefs = {}
            for j in S:
                a = ex.linear_coefficient(problem.constraints[j], k)
                if a < 0:
                    self.k_coefs[j] = a
            self.unbounded = not self.k_coefs and not np.isfinite(problem.basic.lo[k])
        else:
            self.k_coefs = {}
            self.unbounded = False
        self.ranges = self._ranges(grid)

    def _ranges(self, grid: GridSpec):
        out = []
        basic = self.problem.basic
        for c in self.free:
            if c in grid.ranges:
                lo, hi = grid.ranges[c]
            else:
                lo, hi = basic.lo[c], basic.hi[c]
                if not (np.isfinite(lo) and np.isfinite(hi)):
                    lo2, hi2 = self._lp_range(c)
                    lo = lo if np.isfinite(lo) else lo2
                    hi = hi if np.isfinite(hi) else hi2
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise RefOracleError(f"cannot bound search coordinate {c}; pass GridSpec.ranges")
            out.append((float(lo), float(hi)))
        return out

    def _lp_range(self, c: int):
        basic = self.problem.basic
        d = self.problem.d
        bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(h) else h)
                  for l, h in zip(basic.lo, basic.hi)]
        if self.k is not None:
            bounds[self.k] = (None, None)
        kw = {}
        if basic.A_in.shape[0]:
            kw.update(A_ub=basic.A_in, b_ub=basic.b_in)
        if basic.A_eq.shape[0]:
            kw.update(A_eq=basic.A_eq, b_eq=basic.b_eq)
        vals = []
        for sign in (1.0, -1.0):
            obj = np.zeros(d)
            obj[c] = sign
            res = linprog(obj, bounds=bounds, method="highs", **kw)
            vals.append(sign * res.fun if res.status == 0 else sign * -np.inf)
        return vals[0], vals[1]

    def points(self, T: np.ndarray) -> np.ndarray:
        """Full points for free-coordinate samples ``T`` of shape ``(N, len(free))``."""
        N = T.shape[0]
        X = np.zeros((N, self.problem.d))
        X[:, self.free] = T
        if self.pivot_cols:
            fr = [self.rest.index(c) for c in self.free]
            X[:, self.pivot_cols] = self.red_b - T @ self.red_A[:, fr].T
        if self.k is not None:
            X[:, self.k] = self.eta(X)
        return X

    def eta(self, X: np.ndarray) -> np.ndarray:
        lo = self.problem.basic.lo[self.k]
        lb = np.full(X.shape[0], lo)
        if self.k_coefs:
            X0 = X.copy()
            X0[:, self.k] = 0.0
            for j, a in self.k_coefs.items():
                g = ex._eval(self.problem.constraints[j], X0)
                lb = np.maximum(lb, g / (-a))
        return lb

    def lower_bound_terms(self, X: np.ndarray) -> np.ndarray:
        X0 = X.copy()
        X0[:, self.k] = 0.0
        return np.stack([ex._eval(self.problem.constraints[j], X0) / (-a) for j, a in self.k_coefs.items()], axis=1)

    def objective(self, X: np.ndarray, tol: float) -> np.ndarray:
        p = self.problem
        ok = p.basic.contains(X, tol)
        for j in self.S:
            if j in self.k_coefs:
                continue
            ok &= ex._eval(p.constraints[j], X) <= tol
        vals = np.asarray(ex._eval(self.piece, X), dtype=float) * np.ones(X.shape[0])
        return np.where(ok, vals, np.inf)


def _axis_grid(ranges, pts: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, pts) if hi > lo else np.array([lo]) for lo, hi in ranges]
    if not axes:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _sign_change_roots(fun, ts: np.ndarray, vals: np.ndarray) -> list:
    roots = []
    finite = np.isfinite(vals)
    s = np.sign(vals)
    idx = np.flatnonzero(finite[:-1] & finite[1:] & (s[:-1] * s[1:] < 0))
    for q in idx:
        roots.append(brentq(fun, ts[q], ts[q + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    roots.extend(ts[np.flatnonzero(finite & (vals == 0))].tolist())
    return roots


def _max_nodes(e: ex.Expr):
    if isinstance(e, ex.MaxOf):
        yield e
    for c in e.children():
        yield from _max_nodes(c)


def _exact_candidates(red: _Reduced) -> np.ndarray:
    """Constraint roots and kink locations along a one-dimensional search."""
    (lo, hi), = red.ranges
    ts = np.linspace(lo, hi, 4001)
    cands = []

    def along(f):
        return lambda t: float(f(red.points(np.array([[t]])))[0])

    for j in red.S:
        if j in red.k_coefs:
            continue
        c = red.problem.constraints[j]
        f = lambda X, c=c: ex._eval(c, X)  # noqa: E731
        cands += _sign_change_roots(along(f), ts, f(red.points(ts[:, None])))
    if red.k is not None and 1 < len(red.k_coefs) <= 60:
        X = red.points(ts[:, None])
        L = red.lower_bound_terms(X)
        q = L.shape[1]
        for a in range(q):
            for b in range(a + 1, q):
                diff = L[:, a] - L[:, b]
                if np.all(diff > 0) or np.all(diff < 0):
                    continue

                def h(t, a=a, b=b):
                    LL = red.lower_bound_terms(red.points(np.array([[t]])))
                    return float(LL[0, a] - LL[0, b])

                cands += _sign_change_roots(h, ts, diff)
    for node in _max_nodes(red.piece):
        kids = node.items[:40]
        X = red.points(ts[:, None])
        vals = [np.asarray(ex._eval(k, X), dtype=float) * np.ones(len(ts)) for k in kids]
        for a in range(len(kids)):
            for b in range(a + 1, len(kids)):
                diff = vals[a] - vals[b]

                def h(t, ka=kids[a], kb=kids[b]):
                    P = red.points(np.array([[t]]))
                    return float(ex._eval(ka, P)[0] - ex._eval(kb, P)[0])

                cands += _sign_change_roots(h, ts, diff)
    return np.array(sorted(set(cands)), dtype=float).reshape(-1, 1)


def ref_solve(problem: MSProblem, i: int, S=None, grid: GridSpec | None = None, tol_act: float = 1e-6) -> OracleResult:
    """Grid-search minimum of piece ``i`` under constraints ``S``."""
    grid = grid or GridSpec()
    S = problem.all_constraints() if S is None else canonical(S)
    with np.errstate(invalid="ignore", over="ignore"):
        return _ref_solve(problem, i, S, grid, tol_act)


def _ref_solve(problem, i, S, grid, tol_act):
    red = _Reduced(problem, i, S, grid)
    if red.inconsistent:
        return OracleResult(INFEASIBLE, np.inf, info={"reason": "equality rows inconsistent"})
    dim = len(red.free)
    width = max([hi - lo for lo, hi in red.ranges] + [1.0])
    tol = 1e-9 * width
    pts = grid.points_for(dim)

    T = _axis_grid(red.ranges, pts)
    if dim == 1:
        extra = _exact_candidates(red)
        if extra.size:
            T = np.vstack([T, extra])
    X = red.points(T)
    vals = red.objective(X, tol)
    best = int(np.argmin(vals))
    if red.unbounded and not np.all(np.isposinf(vals)):
        return OracleResult(UNBOUNDED, -np.inf, info={"d_eff": dim, "eliminated": red.k})
    if not np.isfinite(vals[best]):
        return OracleResult(INFEASIBLE, np.inf, info={"d_eff": dim, "eliminated": red.k})
    best_t, best_v = T[best].copy(), float(vals[best])
    history = [best_v]
    half = np.array([(hi - lo) / 2.0 for lo, hi in red.ranges])
    for _ in range(grid.rounds if dim else 0):
        half = half / grid.shrink
        win = [(max(lo, c - h), min(hi, c + h)) for (lo, hi), c, h in zip(red.ranges, best_t, half)]
        Tr = _axis_grid(win, pts)
        vr = red.objective(red.points(Tr), tol)
        q = int(np.argmin(vr))
        if vr[q] < best_v:
            best_t, best_v = Tr[q].copy(), float(vr[q])
        history.append(best_v)
    x = red.points(best_t[None, :])[0]
    value = ex.evaluate(problem.pieces[i], x)
    act = active_constraint_set(problem, x, S, tol_act)
    return OracleResult(OPTIMAL, value, x, act,
                        info={"history": history, "d_eff": dim, "eliminated": red.k})


class RefOracle(Oracle):
    name = "ref"

    def __init__(self, problem: MSProblem, cost=None, grid: GridSpec | None = None, tol_act: float = 1e-6):
        super().__init__(problem, cost, tol_act)
        self.grid = grid or GridSpec()

    def _solve(self, i: int, S: tuple) -> OracleResult:
        return ref_solve(self.problem, i, S, self.grid, self.tol_act)


def cross_validate(problem: MSProblem, i: int, S=None, grid: GridSpec | None = None, tol: float = 1e-3) -> dict:
    """Compare the LP oracle against the reference oracle on one ``(i, S)``.

    Values agree when they differ by at most ``tol * max(1, |lp value|)``.
    """
    from .oracle import LPOracle

    S = problem.all_constraints() if S is None else canonical(S)
    a = LPOracle(problem).solve_piece(i, S)
    b = ref_solve(problem, i, S, grid)
    if a.status == OPTIMAL and b.status == OPTIMAL:
        diff = abs(a.value - b.value)
        ok = diff <= tol * max(1.0, abs(a.value))
    else:
        diff = None
        ok = a.status == b.status
    return {"piece": i, "S": S, "lp_status": a.status, "ref_status": b.status,
            "lp_value": a.value, "ref_value": b.value, "diff": diff, "ok": ok}
