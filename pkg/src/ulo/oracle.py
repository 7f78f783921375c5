"""Deterministic single-piece oracles with memoisation.

An oracle answers ``nu({i}, S)``: the global minimum of piece ``i`` over the
basic set intersected with the constraints in ``S``.  Results are cached by
``(i, sorted S)``; a cached entry is never replaced, so repeated queries return
the very same object.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import expr as ex
from .cost import CostModel
from .problem import MSProblem, canonical
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, simplex_solve

TOL_ACT = 1e-6


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    status: str
    value: float
    x_star: np.ndarray | None = None
    active_constraints: tuple | None = None
    piece: int = -1
    S: tuple = ()
    solve_time: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def active_constraint_set(problem: MSProblem, x, S, tol: float = TOL_ACT) -> tuple:
    S = canonical(S)
    if not S:
        return ()
    vals = problem.constraint_values(x, S)
    return tuple(j for j, v in zip(S, vals) if abs(v) <= tol)


class Oracle:
    """Memoising base class; subclasses implement :meth:`_solve`."""

    name = "oracle"

    def __init__(self, problem: MSProblem, cost: CostModel | None = None, tol_act: float = TOL_ACT):
        self.problem = problem
        self.cost = cost or CostModel()
        self.tol_act = tol_act
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.model_time = 0.0
        self.wall_time = 0.0

    def _solve(self, i: int, S: tuple) -> OracleResult:
        raise NotImplementedError

    def solve_piece(self, i: int, S: Iterable[int] | None = None) -> OracleResult:
        S = self.problem.all_constraints() if S is None else canonical(S)
        key = (int(i), S)
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None:
                self.hits += 1
                return hit
        t0 = time.perf_counter()
        res = self._solve(int(i), S)
        dt = time.perf_counter() - t0
        res = OracleResult(res.status, res.value, res.x_star, res.active_constraints, int(i), S, dt, res.info)
        if res.x_star is not None:
            res.x_star.setflags(write=False)
        with self._lock:
            if key in self._cache:
                self.hits += 1
                return self._cache[key]
            self._cache[key] = res
            self.misses += 1
            self.model_time += self.cost.T(len(S))
            self.wall_time += dt
        return res

    def solve_model(self, H: Iterable[int], S: Iterable[int] | None = None):
        """``nu(H, S) = min_{i in H} nu({i}, S)``; ties go to the lowest index."""
        H = canonical(H)
        if not H:
            raise OracleError("H must be nonempty")
        results = [self.solve_piece(i, S) for i in H]
        best = min(range(len(H)), key=lambda k: (results[k].value, H[k]))
        return results[best].value, H[best], results[best]

    def cached(self, i: int, S: Iterable[int] | None = None) -> OracleResult | None:
        S = self.problem.all_constraints() if S is None else canonical(S)
        return self._cache.get((int(i), S))

    def stats(self) -> dict:
        return {"hits": self.hits, "misses": self.misses, "model_time": self.model_time,
                "wall_time": self.wall_time}


class LPOracle(Oracle):
    """Epigraph LP + two-phase simplex for LP-representable problems."""

    name = "lp"

    def __init__(self, problem: MSProblem, cost: CostModel | None = None, tol_act: float = TOL_ACT,
                 row_generation: bool = True, rowgen_min: int = 40, rowgen_batch: int = 10):
        super().__init__(problem, cost, tol_act)
        self.row_generation = row_generation
        self.rowgen_min = rowgen_min
        self.rowgen_batch = rowgen_batch
        for k, e in enumerate(problem.pieces + problem.constraints):
            if not ex.classify(e).lp_representable:
                raise ex.UnsupportedExpression(
                    f"expression {k} is not LP-representable; use the reference oracle")
        d = problem.d
        self._piece_epi = [ex.epigraph_rows(p, d) for p in problem.pieces]
        self._cons_epi = [ex.epigraph_rows(c, d) for c in problem.constraints]

    def build_lp(self, i: int, S: tuple):
        """Dense LP data ``(c, c0, A_ub, b_ub, A_eq, b_eq, lo, hi)`` over ``(x, t)``."""
        p = self.problem
        d = p.d
        blocks = [self._piece_epi[i]] + [self._cons_epi[j] for j in S]
        offsets = np.cumsum([0] + [b.n_aux for b in blocks])
        nv = d + int(offsets[-1])

        def dense(term: ex.LinTerm, off: int):
            row = np.zeros(nv)
            row[:d] = term.x_coeffs
            for k, v in term.aux.items():
                row[d + off + k] += v
            return row, term.const

        rows, rhs = [], []
        for b, off in zip(blocks, offsets):
            for r in b.rows:
                a, c0 = dense(r, int(off))
                rows.append(a)
                rhs.append(-c0)
        for b, off in zip(blocks[1:], offsets[1:]):
            a, c0 = dense(b.objective, int(off))
            rows.append(a)
            rhs.append(-c0)
        if p.basic.A_in.shape[0]:
            for a_row, b_val in zip(p.basic.A_in, p.basic.b_in):
                a = np.zeros(nv)
                a[:d] = a_row
                rows.append(a)
                rhs.append(b_val)
        A_ub = np.array(rows).reshape(-1, nv)
        b_ub = np.array(rhs, dtype=float)
        A_eq = np.zeros((p.basic.A_eq.shape[0], nv))
        A_eq[:, :d] = p.basic.A_eq
        b_eq = p.basic.b_eq.copy()
        c, c0 = dense(blocks[0].objective, 0)
        lo = np.concatenate([p.basic.lo, np.full(nv - d, -np.inf)])
        hi = np.concatenate([p.basic.hi, np.full(nv - d, np.inf)])
        return c, c0, A_ub, b_ub, A_eq, b_eq, lo, hi

    def _solve_rows(self, i: int, S: tuple):
        c, c0, A_ub, b_ub, A_eq, b_eq, lo, hi = self.build_lp(i, S)
        return simplex_solve(c, A_ub, b_ub, A_eq, b_eq, lo, hi), c0

    def _solve(self, i: int, S: tuple) -> OracleResult:
        if self.row_generation and len(S) > self.rowgen_min:
            lp, c0, info = self._solve_generated(i, S)
        else:
            lp, c0 = self._solve_rows(i, S)
            info = {"pivots": lp.iterations}
        if lp.status == INFEASIBLE:
            return OracleResult(INFEASIBLE, np.inf, info=info)
        if lp.status == UNBOUNDED:
            return OracleResult(UNBOUNDED, -np.inf, info=info)
        x = np.array(lp.x[: self.problem.d])
        value = ex.evaluate(self.problem.pieces[i], x)
        info["lp_objective"] = lp.objective + c0
        act = active_constraint_set(self.problem, x, S, self.tol_act)
        return OracleResult(OPTIMAL, value, x, act, info=info)

    def _solve_generated(self, i: int, S: tuple):
        """Add the most violated constraints of ``S`` until the relaxed optimum satisfies all of them.

        A relaxed optimum that is feasible for ``S`` is optimal for ``S``; an
        infeasible relaxation proves ``S`` infeasible.  An unbounded relaxation
        falls back to the full row set.
        """
        work: list = []
        pivots = rounds = 0
        while True:
            rounds += 1
            lp, c0 = self._solve_rows(i, tuple(sorted(work)))
            pivots += lp.iterations
            if lp.status == UNBOUNDED:
                lp, c0 = self._solve_rows(i, S)
                pivots += lp.iterations
                work = list(S)
                break
            if lp.status != OPTIMAL:
                break
            rest = sorted(set(S) - set(work))
            if not rest:
                break
            vals = self.problem.constraint_values(lp.x[: self.problem.d], rest)
            viol = np.flatnonzero(vals > 1e-9 * np.maximum(1.0, np.abs(vals)))
            if viol.size == 0:
                break
            order = viol[np.argsort(-vals[viol], kind="stable")][: self.rowgen_batch]
            work.extend(rest[k] for k in order)
        return lp, c0, {"pivots": pivots, "rounds": rounds, "rows_used": len(work)}


def make_oracle(problem: MSProblem, kind: str = "auto", cost: CostModel | None = None, **kwargs) -> Oracle:
    """``kind`` is ``"lp"``, ``"ref"`` or ``"auto"`` (LP when possible)."""
    if kind == "auto":
        kind = "lp" if problem.lp_representable else "ref"
    if kind == "lp":
        return LPOracle(problem, cost)
    if kind == "ref":
        from .reforacle import RefOracle
        return RefOracle(problem, cost, **kwargs)
    raise ValueError(f"unknown oracle kind {kind!r}")
