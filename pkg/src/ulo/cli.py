"""Command-line front end.

Exit codes: 0 success, 1 solver error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .bench import BenchPlan, ReportError, report, run_bench
from .cost import CostModel, gamma_es
from .dagsim import run_grid, sim_ulo, write_grid
from .instances import PoplpParams, gen_poplp, table4_instance, toy_illustration, toy_tikhonov
from .oracle import make_oracle
from .problem import ProblemError, load_problem, save_problem
from .solvers import SolverConfig, SolverError, enumeration, ram, ulo, write_trace


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    return f"{v:.10g}"


def _floats(text: str) -> list:
    return [float(t) for t in text.split(",") if t]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ulo", description="Global minimisation of a minimum of convex pieces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("kind", choices=["poplp", "toy", "table4"])
    g.add_argument("-o", "--out", required=True)
    g.add_argument("--which", choices=["illustration", "tikhonov"], default="tikhonov")
    g.add_argument("--n", type=int, default=20)
    g.add_argument("--m", type=int, default=50)
    g.add_argument("--p", type=int, default=10)
    g.add_argument("--I", type=float, default=1.0)
    g.add_argument("--zeta", type=float, default=1.0)
    g.add_argument("--R", type=float, default=10.0)
    g.add_argument("--omega", type=float, default=0.5)
    g.add_argument("--c-pen", type=float, default=5e4)
    g.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--algo", choices=["ulo", "es", "ram"], default="ulo")
    s.add_argument("--problem", required=True)
    s.add_argument("--oracle", choices=["auto", "lp", "ref"], default="auto")
    s.add_argument("--rho", type=float, default=1e-3)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--eps-rel", type=float, default=5e-2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--start", type=int, default=None, help="zero-based start piece (ulo)")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--budget", type=int, default=None, help="restart budget (ram)")
    s.add_argument("--trace", default=None)

    m = sub.add_parser("simulate", help="simulate ULO on abstract DAG instances")
    m.add_argument("--preset", choices=["table4"], default=None)
    m.add_argument("--n", type=int, default=100)
    m.add_argument("--m", type=int, default=2000)
    m.add_argument("--sigma-act", type=float, default=1e-2)
    m.add_argument("--sigma-deg", type=_floats, default=[2e-3])
    m.add_argument("--upsilon", type=_floats, default=[0.0])
    m.add_argument("--theta", type=float, default=10.0)
    m.add_argument("--theta-bar", type=_floats, default=[5.0])
    m.add_argument("--cost-c", type=float, default=None, help="default: T(m)/1000")
    m.add_argument("--cost-r", type=float, default=1.5)
    m.add_argument("--eps", type=float, default=None)
    m.add_argument("--eps-rel", type=float, default=None)
    m.add_argument("--instances", type=int, default=5)
    m.add_argument("--starts", type=int, default=20)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default=None)

    b = sub.add_parser("bench", help="run a benchmark plan")
    b.add_argument("--plan", required=True)
    b.add_argument("--out", required=True)

    r = sub.add_parser("report", help="summarise benchmark traces")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--f-star", default="auto")
    r.add_argument("--clock", choices=["wall", "model"], default="wall")
    r.add_argument("--out", required=True)
    return p


def _gen(a) -> int:
    if a.kind == "poplp":
        params = PoplpParams(n=a.n, m=a.m, I=a.I, zeta=a.zeta, p=a.p, R=a.R, omega=a.omega, C_pen=a.c_pen,
                             seed=a.seed)
        save_problem(gen_poplp(params), a.out)
    elif a.kind == "toy":
        save_problem(toy_tikhonov() if a.which == "tikhonov" else toy_illustration(), a.out)
    else:
        with open(a.out, "w") as fh:
            json.dump(table4_instance().to_dict(), fh, indent=2)
    print(f"wrote {a.out}")
    return 0


def _solve(a) -> int:
    problem = load_problem(a.problem)
    oracle = make_oracle(problem, a.oracle)
    cfg = SolverConfig(rho=a.rho, eps=a.eps, eps_rel=a.eps_rel, seed=a.seed, time_limit=a.time_limit)
    if a.algo == "ulo":
        res = ulo(problem, oracle, a.start, cfg)
        events, F_hat, F_check, x = res.trace, res.F_hat, res.F_check, res.x
        print(f"K={res.K} exit={res.exit_reason} oracle_calls={oracle.misses}")
    elif a.algo == "es":
        res = enumeration(problem, oracle, a.seed, a.time_limit)
        events, F_hat, F_check, x = res.trace, res.F_star, res.trace[-1].F_check, res.x_star
        print(f"argmin piece={res.i_star}")
    else:
        res = ram(problem, oracle, cfg, a.budget)
        events, F_hat, F_check, x = res.trace, res.F_hat, res.F_check, res.x
        print(f"restarts={res.restarts} exit={res.exit_reason}")
    if a.trace:
        write_trace(a.trace, events, f"{problem.name}/{a.algo}/0", a.algo, a.seed)
    if cfg.gap_closed(F_hat, F_check) and F_hat - F_check <= 0:
        print(f"F*={_num(F_hat)}")
    else:
        print(f"F_hat={_num(F_hat)} F_check={_num(F_check)}")
    if x is not None:
        print("x=" + " ".join(_num(v) for v in x))
    if problem.provenance.get("kind") == "poplp":
        print(f"minimisation value={_num(F_hat)} original maximisation value={_num(-F_hat)}")
    return 0


def _simulate(a) -> int:
    if a.preset == "table4":
        inst = table4_instance()
        cost = CostModel(a.cost_c or 0.0, a.cost_r)
        eps = 0.0 if a.eps is None else a.eps
        eps_rel = 0.0 if a.eps_rel is None else a.eps_rel
        g_es = gamma_es(inst.n, inst.n, inst.m, cost)
        print("start,K,F_hat,gamma_ulo,upsilon_ratio")
        for start in range(min(a.starts, inst.n)):
            res = sim_ulo(inst, start, cost, eps, eps_rel, seed=a.seed + start)
            print(f"{start},{res.K},{_num(res.F_hat)},{_num(res.gamma)},{_num(res.gamma / g_es)}")
        return 0
    cost = CostModel.matched(a.m, a.cost_r) if a.cost_c is None else CostModel(a.cost_c, a.cost_r)
    grid = run_grid(a.n, a.m, a.sigma_act, a.theta, a.theta_bar, a.upsilon, a.sigma_deg, a.instances, a.starts,
                    cost, a.seed, 1e-3 if a.eps is None else a.eps, 5e-2 if a.eps_rel is None else a.eps_rel)
    for row in grid.summary:
        print(" ".join(f"{k}={_num(v)}" for k, v in row.items()))
    if a.out:
        base = a.out[:-4] if a.out.endswith(".csv") else a.out
        write_grid(grid, a.out, base + "_summary.csv")
    return 0


def _report(a) -> int:
    if a.f_star in ("auto", "none"):
        fs = None if a.f_star == "none" else "auto"
    else:
        try:
            fs = float(a.f_star)
        except ValueError:
            raise UsageError(f"--f-star must be auto, none or a number, got {a.f_star!r}")
    for path in report(a.in_dir, a.out, fs, a.clock):
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if a.cmd == "gen":
            return _gen(a)
        if a.cmd == "solve":
            return _solve(a)
        if a.cmd == "simulate":
            return _simulate(a)
        if a.cmd == "bench":
            fstar = run_bench(BenchPlan.load(a.plan), a.out)
            for name, v in sorted(fstar.items()):
                print(f"{name}: F*={_num(v)}")
            return 0
        return _report(a)
    except (UsageError, ReportError, ValueError, FileNotFoundError, ProblemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ProblemError) else 2
    except (SolverError, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
