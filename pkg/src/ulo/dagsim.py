"""Abstract DAG instances and a model-time simulator for ULO and enumeration.

A node is a piece.  An edge ``(i, j)`` means ``j`` is rho-active at the
minimiser of piece ``i`` and improves on it.  Oracle calls are not solved; the
simulator only charges ``T(|S|)`` model-time units per call.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import CostModel, gamma_es, gamma_ulo
from .simplex import OPTIMAL, simplex_solve

LAMBDA = 10.0
XI = 1e-7
MAX_REDRAWS = 20


class AssignmentError(RuntimeError):
    pass


@dataclass
class AbstractInstance:
    n: int
    m: int
    edges: tuple
    nu: np.ndarray
    F_at: np.ndarray
    C_sets: tuple
    theta_bar_draws: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.F_at = np.asarray(self.F_at, dtype=float)
        self.theta_bar_draws = np.asarray(self.theta_bar_draws, dtype=float)
        self.edges = tuple(sorted((int(a), int(b)) for a, b in self.edges))
        out = [[] for _ in range(self.n)]
        for a, b in self.edges:
            out[a].append(b)
        self.out = tuple(tuple(sorted(o)) for o in out)
        self.member = np.zeros((self.n, self.m), dtype=bool)
        for i, C in enumerate(self.C_sets):
            self.member[i, list(C)] = True
        self.C_size = self.member.sum(axis=1)

    @property
    def sinks(self) -> tuple:
        return tuple(i for i in range(self.n) if not self.out[i])

    @property
    def union_active_size(self) -> int:
        return int(self.member.any(axis=0).sum())

    def reachable(self, start: int) -> set:
        seen, stack = {start}, [start]
        while stack:
            for b in self.out[stack.pop()]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        return seen

    def check(self, xi: float = 0.0, tol: float = 1e-9) -> list:
        """Violated structural conditions as readable strings (empty when consistent)."""
        bad = []
        if not is_acyclic(self.n, self.edges):
            bad.append("edge set has a cycle")
        for a, b in self.edges:
            if not self.nu[b] < self.F_at[a] - xi + tol:
                bad.append(f"edge ({a},{b}): nu[{b}]={self.nu[b]} not below F_at[{a}]={self.F_at[a]}")
            if not self.F_at[a] <= self.nu[a] + tol:
                bad.append(f"edge ({a},{b}): F_at[{a}] exceeds nu[{a}]")
        for i in self.sinks:
            if abs(self.F_at[i] - self.nu[i]) > tol:
                bad.append(f"sink {i}: F_at differs from nu")
        return bad

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "edges": [list(e) for e in self.edges], "nu": self.nu.tolist(),
                "F_at": self.F_at.tolist(), "C_sets": [list(c) for c in self.C_sets],
                "theta_bar_draws": self.theta_bar_draws.tolist(), "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "AbstractInstance":
        return cls(d["n"], d["m"], tuple(map(tuple, d["edges"])), d["nu"], d["F_at"],
                   tuple(tuple(c) for c in d["C_sets"]), d["theta_bar_draws"], d.get("params", {}))


def is_acyclic(n: int, edges) -> bool:
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        a = queue.pop()
        seen += 1
        for b in out[a]:
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
    return seen == n


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_dag(n: int, sigma_deg: float, seed=0) -> tuple:
    """Random acyclic edge set with ``round(sigma_deg * n(n-1)/2)`` edges."""
    rng = _rng(seed)
    target = round(sigma_deg * n * (n - 1) / 2)
    if target == 0:
        return ()
    out = [set() for _ in range(n)]
    edges = []

    def reaches(src, dst):
        stack, seen = [src], {src}
        while stack:
            a = stack.pop()
            if a == dst:
                return True
            for b in out[a]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        return False

    # drawing uniformly from the remaining pool is a walk along a random permutation
    for code in rng.permutation(n * (n - 1)):
        a, r = divmod(int(code), n - 1)
        b = r if r < a else r + 1
        if reaches(b, a):
            continue
        out[a].add(b)
        edges.append((a, b))
        if len(edges) == target:
            break
    return tuple(edges)


def active_set_size(m: int, sigma_act: float) -> int:
    return min(m, max(1, round(sigma_act * m)))


def sample_active_sets(n: int, m: int, sigma_act: float, upsilon: float, seed=0) -> tuple:
    """Per-node constraint sets drawn by successive ``j**upsilon``-weighted picks.

    Uses Gumbel top-k keys, which has the same law as sequential weighted
    sampling without replacement.
    """
    rng = _rng(seed)
    k = active_set_size(m, sigma_act)
    logw = upsilon * np.log(np.arange(1, m + 1))
    out = []
    for _ in range(n):
        keys = logw + rng.gumbel(size=m)
        top = np.argpartition(-keys, k - 1)[:k] if k < m else np.arange(m)
        out.append(tuple(sorted(int(j) for j in top)))
    return tuple(out)


def assign_values(n: int, edges, gaps, Lambda: float = LAMBDA, xi: float = XI):
    """Solve the value-assignment LP; returns ``(nu, F_at)`` or raises AssignmentError."""
    edges = list(edges)
    gaps = np.asarray(gaps, dtype=float)
    nv = 2 * n  # [nu, F]
    c = np.concatenate([-np.ones(n), np.zeros(n)])
    rows, rhs = [], []
    for (a, b), g in zip(edges, gaps):
        r = np.zeros(nv)
        r[b], r[a] = 1.0, -1.0
        rows.append(r)
        rhs.append(-g)
        r = np.zeros(nv)
        r[b], r[n + a] = 1.0, -1.0
        rows.append(r)
        rhs.append(-xi)
    for i in range(n):
        r = np.zeros(nv)
        r[n + i], r[i] = 1.0, -1.0
        rows.append(r)
        rhs.append(0.0)
    has_out = {a for a, _ in edges}
    eq = []
    for i in range(n):
        if i not in has_out:
            r = np.zeros(nv)
            r[i], r[n + i] = 1.0, -1.0
            eq.append(r)
    A_eq = np.array(eq).reshape(-1, nv)
    lo = np.full(nv, -np.inf)
    hi = np.full(nv, Lambda)
    res = simplex_solve(c, np.array(rows), np.array(rhs), A_eq, np.zeros(len(eq)), lo, hi)
    if res.status != OPTIMAL:
        raise AssignmentError(f"assignment LP is {res.status}")
    return res.x[:n].copy(), res.x[n:].copy()


def generate_instance(n: int, m: int, sigma_act: float, sigma_deg: float, upsilon: float, theta: float,
                      theta_bar: float, seed=0, Lambda: float = LAMBDA, xi: float = XI) -> AbstractInstance:
    rng = _rng(seed)
    edges = gen_dag(n, sigma_deg, rng)
    theta_bar_draws = rng.exponential(theta_bar, size=n) if theta_bar > 0 else np.zeros(n)
    C_sets = sample_active_sets(n, m, sigma_act, upsilon, rng)
    for attempt in range(MAX_REDRAWS):
        gaps = rng.exponential(theta, size=len(edges))
        try:
            nu, F_at = assign_values(n, edges, gaps, Lambda, xi)
            break
        except AssignmentError:
            if attempt == MAX_REDRAWS - 1:
                raise
    params = {"sigma_act": sigma_act, "sigma_deg": sigma_deg, "upsilon": upsilon, "theta": theta,
              "theta_bar": theta_bar, "Lambda": Lambda, "xi": xi}
    return AbstractInstance(n, m, edges, nu, F_at, C_sets, theta_bar_draws, params)


def sim_lower_bound(inst: AbstractInstance, i: int, S) -> float:
    S = set(S)
    frac_c = 1.0 - len(S.intersection(inst.C_sets[i])) / len(inst.C_sets[i])
    frac_s = (1.0 - len(S) / inst.m) ** 1.5
    return float(inst.nu[i] - min(frac_c, frac_s) * inst.theta_bar_draws[i])


@dataclass
class SimResult:
    K: int
    F_hat: float
    F_check: float
    i_best: int
    gamma: float
    counter: float
    phase_b_sizes: list
    H: tuple
    S_size: int
    trace: list
    exit_reason: str


def _gap_closed(F_hat, F_check, eps, eps_rel):
    if not math.isfinite(F_hat) or F_check == -math.inf:
        return False
    return F_hat - F_check <= max(eps, max(1.0, abs(F_hat)) * eps_rel)


def sim_ulo(inst: AbstractInstance, start: int, cost: CostModel, eps: float = 1e-3, eps_rel: float = 5e-2,
            seed=0, early_exit: bool = True, value_tol: float = 0.0) -> SimResult:
    """Run ULO on the abstraction, charging ``T(|S|)`` per simulated oracle call."""
    rng = _rng(seed)
    n, m = inst.n, inst.m
    T_full = cost.T(m)
    H: set = set()
    S_mask = np.zeros(m, dtype=bool)
    inter = np.zeros(n)
    F_hat, F_check = math.inf, -math.inf
    i_best = -1
    counter = 0.0
    sizes, trace = [], []
    k = 0
    i_hat = start
    reason = "gap"

    def emit(kind):
        trace.append({"kind": kind, "k": k, "H": len(H), "S": int(S_mask.sum()), "F_hat": F_hat,
                      "F_check": F_check, "counter": counter})

    while True:
        k += 1
        # phase (a)
        V, R, i_star = [i_hat], math.inf, None
        stop = False
        while V:
            i_bar = V[int(rng.integers(len(V)))]
            counter += T_full
            H.add(i_bar)
            if inst.nu[i_bar] >= R - value_tol:
                V.remove(i_bar)
                continue
            R, i_star = float(inst.F_at[i_bar]), i_bar
            V = sorted(({i_bar} | set(inst.out[i_bar])) - H)
            if R < F_hat:
                F_hat, i_best = R, i_bar
                emit("UpperImproved")
                if early_exit and _gap_closed(F_hat, F_check, eps, eps_rel):
                    stop = True
                    break
        emit("PhaseAEnd")
        if stop:
            reason = "early"
            break
        # phase (b)
        free = np.flatnonzero(~S_mask)
        new = list(inst.C_sets[i_star])
        if free.size:
            new.append(int(free[int(rng.integers(free.size))]))
        new = [j for j in set(new) if not S_mask[j]]
        S_mask[new] = True
        inter += inst.member[:, new].sum(axis=1)
        s = int(S_mask.sum())
        factor = np.minimum(1.0 - inter / inst.C_size, (1.0 - s / m) ** 1.5)
        lower = inst.nu - factor * inst.theta_bar_draws
        in_H = np.zeros(n, dtype=bool)
        in_H[list(H)] = True
        lower[in_H] = inst.nu[in_H]
        T_s = cost.T(s)
        for _ in range(n - len(H)):
            counter += T_s
        sizes.append((len(H), s))
        i_hat = int(np.argmin(lower))
        if lower[i_hat] > F_check:
            F_check = float(lower[i_hat])
            emit("LowerImproved")
        emit("PhaseBEnd")
        if i_hat in H:
            reason = "exact"
            break
        if _gap_closed(F_hat, F_check, eps, eps_rel):
            break
    emit("Exit")
    gamma = gamma_ulo(len(H), sizes, n, m, cost)
    return SimResult(k, F_hat, F_check, i_best, gamma, counter, sizes, tuple(sorted(H)), int(S_mask.sum()),
                     trace, reason)


def sim_es(inst: AbstractInstance, cost: CostModel, seed=0):
    """Enumeration on the abstraction: ``(F_star, argmin, running-min trace)``."""
    rng = _rng(seed)
    best, arg, trace = math.inf, -1, []
    T_full = cost.T(inst.m)
    for k, i in enumerate(rng.permutation(inst.n), start=1):
        if inst.nu[i] < best:
            best, arg = float(inst.nu[i]), int(i)
        trace.append({"k": k, "F_hat": best, "counter": k * T_full})
    return best, arg, trace


GRID_COLUMNS = ("theta_bar", "upsilon_param", "sigma_deg", "instance_id", "start_piece", "K", "gamma_ulo",
                "gamma_es_n", "upsilon_ratio", "union_active_size")


@dataclass
class GridResult:
    rows: list
    summary: list


def run_grid(n: int, m: int, sigma_act: float, theta: float, theta_bars, upsilons, sigma_degs,
             instances: int, starts: int, cost: CostModel, seed: int = 0, eps: float = 1e-3,
             eps_rel: float = 5e-2) -> GridResult:
    """Sweep ``(theta_bar, upsilon, sigma_deg)`` cells; every job gets its own derived seed."""
    rows, summary = [], []
    g_es = gamma_es(n, n, m, cost)
    cells = [(tb, u, sd) for tb in theta_bars for u in upsilons for sd in sigma_degs]
    for c_idx, (tb, u, sd) in enumerate(cells):
        log_ups, ratios, unions = [], [], []
        for e in range(instances):
            inst_rng = np.random.default_rng(np.random.SeedSequence([seed, c_idx, e]))
            inst = generate_instance(n, m, sigma_act, sd, u, theta, tb, inst_rng)
            picks = inst_rng.choice(n, size=min(starts, n), replace=False)
            inst_ratios = []
            for s_idx, start in enumerate(picks):
                run_rng = np.random.default_rng(np.random.SeedSequence([seed, c_idx, e, s_idx, 1]))
                res = sim_ulo(inst, int(start), cost, eps, eps_rel, run_rng)
                ratio = res.gamma / g_es
                inst_ratios.append(ratio)
                rows.append({"theta_bar": tb, "upsilon_param": u, "sigma_deg": sd, "instance_id": e,
                             "start_piece": int(start), "K": res.K, "gamma_ulo": res.gamma,
                             "gamma_es_n": g_es, "upsilon_ratio": ratio,
                             "union_active_size": inst.union_active_size})
            ratios.extend(inst_ratios)
            log_ups.append(math.log10(float(np.mean(inst_ratios))))
            unions.append(inst.union_active_size)
        summary.append({"theta_bar": tb, "upsilon_param": u, "sigma_deg": sd,
                        "mean_log10_upsilon": float(np.mean(log_ups)), "std_log10_upsilon": float(np.std(log_ups)),
                        "mean_upsilon": float(np.mean(ratios)), "std_upsilon": float(np.std(ratios)),
                        "mean_union_active_size": float(np.mean(unions)),
                        "std_union_active_size": float(np.std(unions))})
    return GridResult(rows, summary)


def _write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


def write_grid(result: GridResult, rows_path, summary_path=None) -> None:
    _write_rows(rows_path, GRID_COLUMNS, result.rows)
    if summary_path is not None and result.summary:
        _write_rows(summary_path, tuple(result.summary[0]), result.summary)
