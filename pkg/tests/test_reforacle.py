import math

import numpy as np
import pytest

from ulo import expr as ex
from ulo.instances import PoplpParams, gen_poplp
from ulo.oracle import LPOracle
from ulo.problem import BasicSet, MSProblem
from ulo.reforacle import GridSpec, RefOracleError, cross_validate, ref_solve
from ulo.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED


def test_illustration_full(illustration):
    best = min((ref_solve(illustration, i, [0, 1, 2]) for i in range(4)), key=lambda r: r.value)
    assert best.value == pytest.approx(math.sqrt(1.5) - 3, abs=1e-4)
    assert best.x_star[0] == pytest.approx(math.sqrt(1.5), abs=1e-4)


def test_illustration_last_piece(illustration):
    r = ref_solve(illustration, 3, [0])
    assert r.value == pytest.approx(0.0, abs=1e-9) and r.x_star[0] == pytest.approx(-4.0, abs=1e-6)


def test_tikhonov_all_pieces(tikhonov):
    vals = [ref_solve(tikhonov, i, range(6)) for i in range(6)]
    best = min(vals, key=lambda r: r.value)
    assert best.value == pytest.approx(-25 / 8, abs=1e-8)
    np.testing.assert_allclose(best.x_star, [-1.5, -0.25], atol=1e-6)
    assert vals[0].info["eliminated"] == 1 and vals[0].info["d_eff"] == 1


def test_errors(tikhonov):
    assert ref_solve(tikhonov, 0, []).status == UNBOUNDED
    p = MSProblem(3, [ex.affine([1.0, 1.0, 1.0])], [], BasicSet.make(3, lo=[0.0] * 3, hi=[1.0] * 3))
    with pytest.raises(RefOracleError):
        ref_solve(p, 0, [], GridSpec(eliminate=None))
    q = MSProblem(1, [ex.affine([1.0])], [ex.affine([1.0], 1.0), ex.affine([-1.0], 1.0)],
                  BasicSet.make(1, lo=[-3.0], hi=[3.0]))
    assert ref_solve(q, 0, [0, 1]).status == INFEASIBLE


def test_history_non_increasing(illustration):
    r = ref_solve(illustration, 0, [0, 1, 2])
    h = r.info["history"]
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_never_undershoots_known_minimum():
    # min (x-0.3)^2 + (y+0.7)^2 on a box: true minimum 0
    f = ex.SumOf((ex.SquareAffine(ex.AffineForm((1.0, 0.0), -0.3)), ex.SquareAffine(ex.AffineForm((0.0, 1.0), 0.7))))
    p = MSProblem(2, [f], [], BasicSet.make(2, lo=[-2.0, -2.0], hi=[2.0, 2.0]))
    r = ref_solve(p, 0, [])
    assert 0.0 <= r.value <= 1e-8


def test_affine_piece_on_box_hits_vertex():
    p = MSProblem(2, [ex.affine([1.0, -2.0], 0.5)], [], BasicSet.make(2, lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    rep = cross_validate(p, 0, [])
    assert rep["ok"] and rep["lp_value"] == rep["ref_value"] == -2.5


def test_cross_validate_infeasible():
    p = MSProblem(1, [ex.affine([1.0])], [ex.affine([1.0], 1.0), ex.affine([-1.0], 1.0)],
                  BasicSet.make(1, lo=[-3.0], hi=[3.0]))
    rep = cross_validate(p, 0, [0, 1])
    assert rep["ok"] and rep["lp_status"] == rep["ref_status"] == INFEASIBLE


@pytest.mark.parametrize("seed", range(4))
def test_cross_validate_poplp(seed):
    # three assets: the budget equality and the epigraph coordinate leave two search axes
    p = gen_poplp(PoplpParams(n=5, m=8, p=3, seed=seed, zeta=[0.1, 1.0, 5.0, 1.0][seed], omega=0.5 * (seed % 2)))
    rng = np.random.default_rng(seed)
    for i in range(p.n):
        S = sorted(rng.choice(p.m, size=int(rng.integers(1, p.m + 1)), replace=False).tolist())
        rep = cross_validate(p, i, S)
        assert rep["ok"], rep


def test_elimination_reproduces_lp():
    p = gen_poplp(PoplpParams(n=3, m=6, p=3, seed=9))
    lp = LPOracle(p)
    for i in range(p.n):
        r = ref_solve(p, i, p.all_constraints())
        assert r.status == OPTIMAL and r.info["eliminated"] == p.d - 1
        assert r.value == pytest.approx(lp.solve_piece(i).value, abs=1e-3)
