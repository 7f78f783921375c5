"""ULO and the two baselines (enumeration, restarted alternating minimisation).

All three work on any :class:`~ulo.oracle.Oracle`.  Pieces and constraints are
zero-based.  Every random decision draws from one ``numpy`` PCG64 stream seeded
by ``SolverConfig.seed``, so runs are exactly reproducible.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cost import gamma_ulo
from .oracle import Oracle
from .problem import IncompleteCertificate, MSProblem, active_pieces, local_opt_certificate
from .simplex import INFEASIBLE, UNBOUNDED

UPPER = "UpperImproved"
LOWER = "LowerImproved"
PHASE_A_END = "PhaseAEnd"
PHASE_B_END = "PhaseBEnd"
EXIT = "Exit"

DESCENT_SLACK = 1e-6


class SolverError(RuntimeError):
    pass


class InfeasibleInstance(SolverError):
    pass


class IllPosedInstance(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1e-3
    eps: float = 1e-3
    eps_rel: float = 5e-2
    seed: int = 0
    time_limit: float | None = None
    early_exit: bool = True
    value_tol: float = 1e-6

    def __post_init__(self):
        if self.rho < 0 or self.eps < 0 or self.eps_rel < 0:
            raise ValueError("rho, eps and eps_rel must be nonnegative")

    def gap_closed(self, F_hat: float, F_check: float) -> bool:
        if not math.isfinite(F_hat) or F_check == -math.inf:
            return False
        return F_hat - F_check <= max(self.eps, max(1.0, abs(F_hat)) * self.eps_rel)


@dataclass(frozen=True)
class TraceEvent:
    t_wall: float
    t_model: float
    F_hat: float
    F_check: float
    kind: str
    k: int


class _Timeout(Exception):
    pass


@dataclass
class UloState:
    problem: MSProblem
    oracle: Oracle
    config: SolverConfig
    rng: np.random.Generator
    k: int = 0
    H: set = field(default_factory=set)
    S: set = field(default_factory=set)
    F_hat: float = math.inf
    F_check: float = -math.inf
    x_best: np.ndarray | None = None
    i_best: int | None = None
    i_hat: int | None = None
    trace: list = field(default_factory=list)
    descent_violations: list = field(default_factory=list)
    descent_checks: int = 0
    timed_out: bool = False
    _t0: float = field(default_factory=time.perf_counter)
    _m0: float = 0.0

    def __post_init__(self):
        self._m0 = self.oracle.model_time

    @property
    def t_wall(self) -> float:
        return time.perf_counter() - self._t0

    @property
    def t_model(self) -> float:
        return self.oracle.model_time - self._m0

    def emit(self, kind: str) -> None:
        self.trace.append(TraceEvent(self.t_wall, self.t_model, self.F_hat, self.F_check, kind, self.k))

    def check_time(self) -> None:
        lim = self.config.time_limit
        if lim is not None and self.t_wall > lim:
            self.timed_out = True
            raise _Timeout

    def full_solve(self, i: int):
        res = self.oracle.solve_piece(i, None)
        if res.status == INFEASIBLE:
            raise InfeasibleInstance("the feasible set of the full problem is empty")
        if res.status == UNBOUNDED:
            raise IllPosedInstance(f"piece {i} is unbounded below on the full problem")
        self.check_time()
        return res


def _F(problem: MSProblem, x) -> float:
    return float(np.min(problem.piece_values(x)))


def phase_a(state: UloState, i_hat: int) -> int:
    """Local walk over the upper model started from an unvisited piece.

    Returns the last accepted piece ``i_star``.  ``state.F_hat``/``x_best`` are
    updated on every accepted candidate.
    """
    if i_hat in state.H:
        raise ValueError(f"start piece {i_hat} already visited")
    p, cfg = state.problem, state.config
    V = [i_hat]
    R = math.inf
    x_bar = None
    i_star = None
    while V:
        i_bar = V[int(state.rng.integers(len(V)))]
        res = state.full_solve(i_bar)
        state.H.add(i_bar)
        if res.value >= R - cfg.value_tol:
            V.remove(i_bar)
            continue
        x_new = res.x_star
        F_new = _F(p, x_new)
        if x_bar is not None:
            f_prev = float(p.piece_values(x_bar)[i_bar])
            chain = (F_new, res.value, f_prev, R + cfg.rho)
            state.descent_checks += 1
            if not all(a <= b + DESCENT_SLACK for a, b in zip(chain, chain[1:])):
                state.descent_violations.append({"k": state.k, "piece": i_bar, "chain": chain})
        x_bar, R, i_star = x_new, F_new, i_bar
        V = sorted(set(active_pieces(p, x_new, cfg.rho)) - state.H)
        if R < state.F_hat:
            state.F_hat, state.x_best, state.i_best = R, x_new, i_bar
            state.emit(UPPER)
            if cfg.early_exit and cfg.gap_closed(state.F_hat, state.F_check):
                break
    state.emit(PHASE_A_END)
    return i_star


def phase_b(state: UloState, i_star: int):
    """Grow ``S`` and compute lower bounds; returns ``(i_hat, lower_bounds)``."""
    p = state.problem
    missing = sorted(set(range(p.m)) - state.S)
    if missing:
        state.S.add(missing[int(state.rng.integers(len(missing)))])
    state.S.update(state.oracle.cached(i_star, None).active_constraints)
    S = tuple(sorted(state.S))
    lower = np.empty(p.n)
    for i in range(p.n):
        if i in state.H:
            lower[i] = state.oracle.cached(i, None).value
        else:
            lower[i] = state.oracle.solve_piece(i, S).value
            state.check_time()
    i_hat = int(np.argmin(lower))
    if lower[i_hat] > state.F_check:
        state.F_check = float(lower[i_hat])
        state.emit(LOWER)
    state.emit(PHASE_B_END)
    return i_hat, lower


@dataclass
class UloResult:
    x: np.ndarray | None
    F_hat: float
    F_check: float
    i_best: int | None
    K: int
    H: tuple
    S: tuple
    exit_reason: str
    trace: list
    phase_b_sizes: list
    model_time: float
    gamma: float
    descent_checks: int
    descent_violations: list
    certified_local: bool | None
    wall_time: float

    @property
    def gap(self) -> float:
        return self.F_hat - self.F_check


def certify_local(problem: MSProblem, oracle: Oracle, i_star: int, x, rho: float, tol: float = 1e-6):
    """Local-optimality test from cached full-problem values; None if incomplete."""
    if x is None:
        return None
    nu = {}
    for i in set(active_pieces(problem, x, rho)) | {i_star}:
        hit = oracle.cached(i, None)
        if hit is not None:
            nu[i] = hit.value
    try:
        return local_opt_certificate(problem, i_star, x, rho, nu, tol)
    except IncompleteCertificate:
        return None


def ulo(problem: MSProblem, oracle: Oracle, i_hat0: int | None = None, config: SolverConfig | None = None) -> UloResult:
    """Alternate upper-model walks and lower-model suggestions until the gap closes."""
    config = config or SolverConfig()
    state = UloState(problem, oracle, config, np.random.default_rng(config.seed))
    if i_hat0 is None:
        i_hat0 = int(state.rng.integers(problem.n))
    if not 0 <= i_hat0 < problem.n:
        raise ValueError(f"start piece {i_hat0} out of range")
    i_hat = i_hat0
    sizes = []
    reason = "gap"
    try:
        while True:
            state.k += 1
            i_star = phase_a(state, i_hat)
            if config.early_exit and config.gap_closed(state.F_hat, state.F_check):
                reason = "early"
                break
            i_hat, _ = phase_b(state, i_star)
            sizes.append((len(state.H), len(state.S)))
            if i_hat in state.H:
                reason = "exact"
                break
            if config.gap_closed(state.F_hat, state.F_check):
                break
    except _Timeout:
        reason = "timeout"
    state.emit(EXIT)
    cert = None
    if reason in ("gap", "exact", "early") and state.i_best is not None:
        cert = certify_local(problem, oracle, state.i_best, state.x_best, config.rho)
    return UloResult(
        x=state.x_best, F_hat=state.F_hat, F_check=state.F_check, i_best=state.i_best, K=state.k,
        H=tuple(sorted(state.H)), S=tuple(sorted(state.S)), exit_reason=reason, trace=state.trace,
        phase_b_sizes=sizes, model_time=state.t_model,
        gamma=gamma_ulo(len(state.H), sizes, problem.n, problem.m, oracle.cost),
        descent_checks=state.descent_checks, descent_violations=state.descent_violations,
        certified_local=cert, wall_time=state.t_wall,
    )


@dataclass
class EnumResult:
    F_star: float
    i_star: int
    x_star: np.ndarray | None
    values: np.ndarray
    times: np.ndarray
    model_times: np.ndarray
    order: tuple
    trace: list


def enumeration(problem: MSProblem, oracle: Oracle, seed: int = 0, time_limit: float | None = None) -> EnumResult:
    """Solve every single-piece problem under all constraints in a seeded order."""
    rng = np.random.default_rng(seed)
    order = tuple(int(i) for i in rng.permutation(problem.n))
    t0 = time.perf_counter()
    m0 = oracle.model_time
    values = np.full(problem.n, np.nan)
    times = np.zeros(problem.n)
    mtimes = np.zeros(problem.n)
    trace = []
    best = math.inf
    for k, i in enumerate(order, start=1):
        before = oracle.model_time
        res = oracle.solve_piece(i, None)
        if res.status == INFEASIBLE:
            raise InfeasibleInstance("the feasible set of the full problem is empty")
        values[i] = res.value
        times[i] = res.solve_time
        mtimes[i] = oracle.model_time - before
        done = k == problem.n
        if res.value < best or done:
            best = min(best, res.value)
            trace.append(TraceEvent(time.perf_counter() - t0, oracle.model_time - m0, best,
                                    best if done else -math.inf, EXIT if done else UPPER, k))
        if time_limit is not None and time.perf_counter() - t0 > time_limit and not done:
            trace.append(TraceEvent(time.perf_counter() - t0, oracle.model_time - m0, best, -math.inf, EXIT, k))
            break
    finite = np.where(np.isnan(values), np.inf, values)
    i_star = int(np.argmin(finite))
    hit = oracle.cached(i_star, None)
    return EnumResult(float(finite[i_star]), i_star, None if hit is None else hit.x_star,
                      values, times, mtimes, order, trace)


@dataclass
class RamResult:
    F_hat: float
    F_check: float
    x: np.ndarray | None
    i_best: int | None
    restarts: int
    H: tuple
    trace: list
    model_time: float
    descent_violations: list
    exit_reason: str


def ram(problem: MSProblem, oracle: Oracle, config: SolverConfig | None = None, budget: int | None = None) -> RamResult:
    """Phase-a walks restarted from uniformly drawn unvisited pieces."""
    config = config or SolverConfig()
    state = UloState(problem, oracle, config, np.random.default_rng(config.seed))
    restarts = 0
    reason = "budget"
    try:
        while len(state.H) < problem.n:
            if budget is not None and restarts >= budget:
                break
            free = sorted(set(range(problem.n)) - state.H)
            state.k += 1
            phase_a(state, free[int(state.rng.integers(len(free)))])
            restarts += 1
        if len(state.H) == problem.n:
            reason = "exhausted"
            state.F_check = min(oracle.cached(i, None).value for i in range(problem.n))
    except _Timeout:
        reason = "timeout"
    state.emit(EXIT)
    return RamResult(state.F_hat, state.F_check, state.x_best, state.i_best, restarts,
                     tuple(sorted(state.H)), state.trace, state.t_model, state.descent_violations, reason)


TRACE_COLUMNS = ("run_id", "algo", "seed", "k", "t_wall_s", "t_model_units", "F_hat", "F_check", "kind")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace(path, events, run_id: str, algo: str, seed: int, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if not append or fh.tell() == 0:
            w.writerow(TRACE_COLUMNS)
        for e in events:
            w.writerow([run_id, algo, seed, e.k, _fmt(e.t_wall), _fmt(e.t_model), _fmt(e.F_hat),
                        _fmt(e.F_check), e.kind])


def read_trace(path) -> list:
    """Rows as dicts with typed values."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "run_id": row["run_id"], "algo": row["algo"], "seed": int(row["seed"]), "k": int(row["k"]),
                "t_wall_s": float(row["t_wall_s"]), "t_model_units": float(row["t_model_units"]),
                "F_hat": float(row["F_hat"]), "F_check": float(row["F_check"]), "kind": row["kind"],
            })
    return out
