"""Benchmark orchestration, timestamp aggregation and SVG reporting."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .cost import CostModel
from .oracle import make_oracle
from .problem import load_problem
from .solvers import EXIT, UPPER, SolverConfig, TraceEvent, enumeration, ram, read_trace, ulo, write_trace

ALGOS = ("ulo", "es", "ram")


class ReportError(ValueError):
    pass


def default_timestamps(time_limit: float, count: int = 24, first: float = 0.05) -> tuple:
    return tuple(float(t) for t in np.geomspace(first, time_limit, count))


@dataclass
class BenchPlan:
    problems: list
    algos: tuple = ALGOS
    n_rep: int = 15
    starts: list | None = None
    time_limit_s: float = 240.0
    timestamps: tuple | None = None
    es_permutations: int = 1000
    seed: int = 0
    oracle: str = "auto"
    rho: float = 1e-3
    eps: float = 1e-3
    eps_rel: float = 5e-2
    cost_C: float | None = None
    cost_r: float = 1.5

    def __post_init__(self):
        unknown = set(self.algos) - set(ALGOS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.timestamps is None:
            self.timestamps = default_timestamps(self.time_limit_s)
        ts = list(self.timestamps)
        if not ts or ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be positive and strictly increasing")
        self.timestamps = tuple(float(t) for t in ts)
        self.algos = tuple(self.algos)

    @classmethod
    def load(cls, path) -> "BenchPlan":
        with open(path) as fh:
            data = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        data["problems"] = [p if os.path.isabs(p) else os.path.join(base, p) for p in data["problems"]]
        return cls(**data)

    def cost(self, m: int) -> CostModel:
        if self.cost_C is None:
            return CostModel.matched(m, self.cost_r)
        return CostModel(self.cost_C, self.cost_r)


def es_resample(times, values, seed: int = 0, count: int = 1000) -> list:
    """Step traces ``[(cumulative time, running min), ...]`` for ``count`` random orders."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have equal length")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        perm = rng.permutation(times.size)
        t = np.cumsum(times[perm])
        v = np.minimum.accumulate(values[perm])
        out.append([(float(a), float(b)) for a, b in zip(t, v)])
    return out


def aggregate(traces, timestamps) -> list:
    """Per-timestamp means of the last event at or before each timestamp.

    Each trace is a time-sorted list of ``(t, F_hat)`` or ``(t, F_hat, F_check)``.
    Traces with no event yet are left out; ``coverage`` counts the rest.
    """
    out = []
    for tau in timestamps:
        hats, checks = [], []
        for tr in traces:
            last = None
            for ev in tr:
                if ev[0] <= tau:
                    last = ev
                else:
                    break
            if last is not None:
                hats.append(last[1])
                checks.append(last[2] if len(last) > 2 else -math.inf)
        out.append({
            "tau": float(tau), "coverage": len(hats),
            "F_hat": float(np.mean(hats)) if hats else math.nan,
            "F_check": float(np.mean(checks)) if checks else math.nan,
        })
    return out


def _start_pieces(plan: BenchPlan, n: int) -> list:
    if plan.starts:
        return [int(s) % n for s in plan.starts]
    rng = np.random.default_rng(np.random.SeedSequence([plan.seed, 7]))
    return [int(s) for s in rng.integers(n, size=plan.n_rep)]


def run_bench(plan: BenchPlan, out_dir) -> dict:
    """Run every algorithm on every problem; writes ``traces.csv`` and ``fstar.json``."""
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "traces.csv")
    if os.path.exists(trace_path):
        os.remove(trace_path)
    fstar = {}
    for path in plan.problems:
        problem = load_problem(path)
        name = problem.name
        cost = plan.cost(problem.m)
        oracle = make_oracle(problem, plan.oracle, cost)
        es = enumeration(problem, oracle, seed=plan.seed)
        fstar[name] = es.F_star
        if "es" in plan.algos:
            walls = es_resample(es.times, es.values, plan.seed, plan.es_permutations)
            models = es_resample(es.model_times, es.values, plan.seed, plan.es_permutations)
            for r, (tw, tm) in enumerate(zip(walls, models)):
                events = []
                for k, ((t, v), (t2, _)) in enumerate(zip(tw, tm), start=1):
                    if t > plan.time_limit_s:
                        break
                    last = k == problem.n
                    events.append(TraceEvent(t, t2, v, v if last else -math.inf, EXIT if last else UPPER, k))
                write_trace(trace_path, events, f"{name}/es/{r}", "es", plan.seed, append=True)
        starts = _start_pieces(plan, problem.n)
        for rep in range(plan.n_rep):
            cfg = SolverConfig(rho=plan.rho, eps=plan.eps, eps_rel=plan.eps_rel, seed=plan.seed + rep,
                               time_limit=plan.time_limit_s)
            if "ulo" in plan.algos:
                res = ulo(problem, make_oracle(problem, plan.oracle, cost), starts[rep % len(starts)], cfg)
                write_trace(trace_path, res.trace, f"{name}/ulo/{rep}", "ulo", cfg.seed, append=True)
            if "ram" in plan.algos:
                res = ram(problem, make_oracle(problem, plan.oracle, cost), cfg)
                write_trace(trace_path, res.trace, f"{name}/ram/{rep}", "ram", cfg.seed, append=True)
    with open(os.path.join(out_dir, "fstar.json"), "w") as fh:
        json.dump(fstar, fh, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "plan.json"), "w") as fh:
        json.dump(asdict(plan), fh, indent=2)
    return fstar


# --- reporting -------------------------------------------------------------

COLORS = {"ulo": "#1f77b4", "es": "#d62728", "ram": "#2ca02c"}
GAP_FLOOR = 1e-9


def _group(rows, clock: str):
    """``{problem: {algo: [trace, ...]}}`` with traces as ``(t, F_hat, F_check)`` lists."""
    col = "t_wall_s" if clock == "wall" else "t_model_units"
    runs: dict = {}
    for r in rows:
        runs.setdefault(r["run_id"], []).append(r)
    out: dict = {}
    for run_id in sorted(runs):
        evs = runs[run_id]
        problem = run_id.rsplit("/", 2)[0] if run_id.count("/") >= 2 else "problem"
        algo = evs[0]["algo"]
        tr = sorted(((e[col], e["F_hat"], e["F_check"]) for e in evs), key=lambda e: e[0])
        out.setdefault(problem, {}).setdefault(algo, []).append(tr)
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def svg_chart(series: dict, title: str, xlabel: str, ylabel: str, width: int = 640, height: int = 400) -> str:
    """Deterministic SVG line chart with log-scaled axes.

    ``series`` maps a label to ``[(x, y), ...]`` with positive values; points
    with non-finite or non-positive coordinates are skipped.
    """
    pts = {k: [(x, y) for x, y in v if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)]
           for k, v in series.items()}
    xs = [p[0] for v in pts.values() for p in v] or [1.0]
    ys = [p[1] for v in pts.values() for p in v] or [1.0]
    lx0, lx1 = math.floor(math.log10(min(xs))), math.ceil(math.log10(max(xs)))
    ly0, ly1 = math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))
    lx1, ly1 = max(lx1, lx0 + 1), max(ly1, ly0 + 1)
    L, R, T, B = 70, 120, 40, 50
    pw, ph = width - L - R, height - T - B

    def px(x):
        return L + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def py(y):
        return T + ph - (math.log10(y) - ly0) / (ly1 - ly0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(lx0, lx1 + 1):
        x = px(10.0 ** e)
        out.append(f'<line x1="{_fmt(x)}" y1="{T + ph}" x2="{_fmt(x)}" y2="{T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{T + ph + 18}" text-anchor="middle" font-size="11">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{L - 5}" y1="{_fmt(y)}" x2="{L}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11">1e{e}</text>')
    out.append(f'<text x="{L + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>')
    out.append(f'<text x="15" y="{T + ph / 2:.2f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 15 {T + ph / 2:.2f})">{ylabel}</text>')
    for idx, label in enumerate(sorted(pts)):
        color = COLORS.get(label, "#555555")
        if pts[label]:
            coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts[label])
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = T + 15 + 18 * idx
        out.append(f'<line x1="{L + pw + 10}" y1="{ly}" x2="{L + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 35}" y="{ly + 4}" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


SUMMARY_COLUMNS = ("problem", "algo", "tau", "coverage", "F_hat", "F_check", "primal_gap", "certified_gap")


def report(in_dir, out_dir, f_star="auto", clock: str = "wall", timestamps=None) -> list:
    """Aggregate ``traces.csv`` from ``in_dir`` into ``summary.csv`` and SVG charts in ``out_dir``.

    ``f_star`` is ``"auto"`` (read ``fstar.json``), a number, or None.  Without
    an optimal value only the certified-gap chart is drawn.  Returns the paths
    written.
    """
    trace_path = os.path.join(in_dir, "traces.csv")
    rows = read_trace(trace_path) if os.path.exists(trace_path) else []
    if not rows:
        raise ReportError(f"empty summary: no trace rows in {in_dir}")
    fstars: dict = {}
    if f_star == "auto":
        fp = os.path.join(in_dir, "fstar.json")
        if os.path.exists(fp):
            with open(fp) as fh:
                fstars = json.load(fh)
    grouped = _group(rows, clock)
    if isinstance(f_star, (int, float)):
        fstars = {p: float(f_star) for p in grouped}
    os.makedirs(out_dir, exist_ok=True)
    written, summary = [], []
    for problem in sorted(grouped):
        algos = grouped[problem]
        if timestamps is None:
            ts_all = [e[0] for trs in algos.values() for tr in trs for e in tr if e[0] > 0]
            lo, hi = min(ts_all), max(ts_all)
            ts = np.geomspace(lo, hi, 24) if hi > lo else np.array([hi])
        else:
            ts = timestamps
        fs = fstars.get(problem)
        primal, certified = {}, {}
        for algo in sorted(algos):
            for row in aggregate(algos[algo], ts):
                pg = row["F_hat"] - fs if fs is not None else math.nan
                cg = row["F_hat"] - row["F_check"]
                summary.append({"problem": problem, "algo": algo, "tau": row["tau"], "coverage": row["coverage"],
                                "F_hat": row["F_hat"], "F_check": row["F_check"], "primal_gap": pg,
                                "certified_gap": cg})
                if row["coverage"]:
                    if fs is not None:
                        primal.setdefault(algo, []).append((row["tau"], max(pg, GAP_FLOOR)))
                    if math.isfinite(cg):
                        certified.setdefault(algo, []).append((row["tau"], max(cg, GAP_FLOOR)))
                    else:
                        certified.setdefault(algo, [])
        xlabel = "wall time [s]" if clock == "wall" else "model time [units]"
        safe = problem.replace("/", "_")
        charts = [("certified", certified, "certified gap F_hat - F_check")]
        if fs is not None:
            charts.insert(0, ("primal", primal, "primal gap F_hat - F*"))
        for tag, series, ylabel in charts:
            path = os.path.join(out_dir, f"{safe}_{tag}_gap.svg")
            with open(path, "w", newline="\n") as fh:
                fh.write(svg_chart(series, f"{problem}: {tag} gap", xlabel, ylabel))
            written.append(path)
    spath = os.path.join(out_dir, "summary.csv")
    with open(spath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in summary:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in SUMMARY_COLUMNS])
    written.append(spath)
    return written
