import numpy as np
import pytest
from scipy.optimize import linprog

from ulo import expr as ex
from ulo.cost import CostModel
from ulo.instances import PoplpParams, dcpl_to_ms, gen_poplp
from ulo.oracle import LPOracle, make_oracle
from ulo.problem import BasicSet, MSProblem, feasible
from ulo.reforacle import RefOracle
from ulo.simplex import OPTIMAL, UNBOUNDED


def box_problem(pieces, constraints=()):
    return MSProblem(1, list(pieces), list(constraints), BasicSet.make(1, lo=[-5.0], hi=[5.0]))


def test_abs_on_box():
    p = box_problem([ex.MaxOf((ex.affine([1.0]), ex.affine([-1.0])))])
    r = LPOracle(p).solve_piece(0, [])
    assert r.status == OPTIMAL and r.value == 0.0 and r.x_star[0] == 0.0


def test_single_binding_constraint():
    p = box_problem([ex.affine([1.0])], [ex.affine([-1.0], 1.0)])
    r = LPOracle(p).solve_piece(0, [0])
    assert r.value == pytest.approx(1.0) and r.x_star[0] == pytest.approx(1.0)
    assert r.active_constraints == (0,)


def test_lp_oracle_refuses_quadratic(tikhonov):
    with pytest.raises(ex.UnsupportedExpression):
        LPOracle(tikhonov)
    assert isinstance(make_oracle(tikhonov), RefOracle)


def test_tikhonov_empty_S_unbounded(tikhonov):
    r = RefOracle(tikhonov).solve_piece(0, [])
    assert r.status == UNBOUNDED and r.value == -np.inf


def test_tikhonov_model_value(tikhonov):
    o = RefOracle(tikhonov)
    value, arg, res = o.solve_model(range(6), range(6))
    assert value == pytest.approx(-25 / 8, abs=1e-9) and arg == 4
    assert value == min(o.solve_piece(i, range(6)).value for i in range(6))


def test_linear_tikhonov_part_lp_exact():
    # the quadratic-free part is an LP; compare against HiGHS on the original form
    from ulo.instances import TIKHONOV_B1, TIKHONOV_B2, TIKHONOV_G1, TIKHONOV_G2
    b1, g1 = np.array(TIKHONOV_B1, float), np.array(TIKHONOV_G1, float)
    b2, g2 = np.array(TIKHONOV_B2, float), np.array(TIKHONOV_G2, float)
    p = dcpl_to_ms(b1[:, None], g1, b2[:, None], g2, BasicSet.make(1, lo=[-5.0], hi=[5.0]))
    o = LPOracle(p)
    value, _, _ = o.solve_model(p.all_pieces())
    us = np.linspace(-5, 5, 200001)
    brute = np.min(np.max(np.outer(us, b1) + g1, axis=1)[:, None] - (np.outer(us, b2) + g2))
    assert value == pytest.approx(brute, abs=1e-6)


def random_poplp(seed, **kw):
    rng = np.random.default_rng(seed)
    params = dict(n=int(rng.integers(2, 8)), m=int(rng.integers(2, 20)), p=int(rng.integers(2, 6)),
                  omega=float(rng.choice([0.0, 0.5])), zeta=float(rng.choice([0.1, 1.0, 5.0])), seed=seed)
    params.update(kw)
    return gen_poplp(PoplpParams(**params))


def highs_value(oracle, i, S):
    c, c0, A, b, Ae, be, lo, hi = oracle.build_lp(i, tuple(S))
    bounds = [(None if np.isinf(a) else a, None if np.isinf(z) else z) for a, z in zip(lo, hi)]
    r = linprog(c, A_ub=A if len(A) else None, b_ub=b if len(b) else None, A_eq=Ae, b_eq=be, bounds=bounds,
                method="highs")
    return r.fun + c0


@pytest.mark.parametrize("seed", range(15))
def test_against_highs_and_invariants(seed):
    p = random_poplp(seed)
    o = LPOracle(p)
    rng = np.random.default_rng(seed)
    for i in range(p.n):
        full = o.solve_piece(i)
        assert full.value == pytest.approx(highs_value(o, i, p.all_constraints()), rel=1e-9, abs=1e-7)
        assert feasible(p, full.x_star, tol=1e-6)
        assert ex.evaluate(p.pieces[i], full.x_star) == pytest.approx(full.value)
        # monotone in S
        S = sorted(rng.choice(p.m, size=int(rng.integers(0, p.m)), replace=False).tolist())
        small = o.solve_piece(i, S)
        assert small.value <= full.value + 1e-7
        # passive constraints can be dropped
        act = o.solve_piece(i, full.active_constraints)
        assert act.value == pytest.approx(full.value, rel=1e-9, abs=1e-6)
    H = rng.choice(p.n, size=max(1, p.n // 2), replace=False)
    value, arg, _ = o.solve_model(H)
    assert value == min(o.solve_piece(i).value for i in H)
    assert arg == min(i for i in H if o.solve_piece(i).value == value)


def test_cache_and_determinism():
    p = random_poplp(3)
    o = LPOracle(p, CostModel(1.0, 1.0))
    a = o.solve_piece(0, [1, 0])
    b = o.solve_piece(0, (0, 1))
    assert a is b and o.hits == 1 and o.misses == 1
    assert o.model_time == 1.0 + 2.0
    fresh = LPOracle(p).solve_piece(0, [0, 1])
    assert fresh.x_star.tobytes() == a.x_star.tobytes()
    with pytest.raises(ValueError):
        a.x_star[0] = 1.0


def test_row_generation_matches_full_rows():
    p = gen_poplp(PoplpParams(n=4, m=120, p=8, zeta=0.5, seed=11))
    gen = LPOracle(p)
    full = LPOracle(p, row_generation=False)
    for i in range(p.n):
        a, b = gen.solve_piece(i), full.solve_piece(i)
        assert a.value == pytest.approx(b.value, rel=1e-10)
        assert a.info["rows_used"] < p.m
