import json

import numpy as np
import pytest
from scipy.optimize import linprog

from ulo import expr as ex
from ulo.instances import (DELTA_PROBS, PoplpParams, dcpl_to_ms, gen_poplp, poplp_data, toy_illustration,
                           toy_tikhonov)
from ulo.oracle import LPOracle
from ulo.problem import BasicSet, MSProblem, load_problem, save_problem


@pytest.mark.parametrize("omega", [0.0, 0.5])
def test_poplp_shape(omega):
    p = gen_poplp(PoplpParams(n=7, m=9, p=4, omega=omega, seed=3))
    assert (p.n, p.m, p.d) == (7, 9, 5) and p.lp_representable
    assert p.basic.A_eq.tolist() == [[1.0, 1.0, 1.0, 1.0, 0.0]] and p.basic.b_eq.tolist() == [10.0]
    assert ex.count_max_nodes(p.pieces[0]) == (1 if omega else 0)


def test_poplp_data_laws():
    deltas = np.concatenate([poplp_data(PoplpParams(n=50, m=5, p=20, seed=s)).delta.ravel() for s in range(20)])
    assert np.mean(deltas == 0) == pytest.approx(DELTA_PROBS[2], abs=0.02)
    d = poplp_data(PoplpParams(n=10, m=30, p=10, zeta=2.5, seed=1))
    np.testing.assert_array_equal(d.W, 2.5 * d.V.sum(axis=1) / 10)
    assert np.all(d.beta >= 0) and np.all((d.beta_bar >= 1) & (d.beta_bar <= 15))
    assert np.all((d.V == 0) | ((d.V >= 1) & (d.V <= 10)))
    assert np.all((d.V > 0).sum(axis=1) >= 1)
    assert np.all((d.gamma >= 0) & (d.gamma <= d.gamma_max))


def test_poplp_seed_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_problem(gen_poplp(PoplpParams(n=5, m=6, p=3, seed=8)), a)
    save_problem(gen_poplp(PoplpParams(n=5, m=6, p=3, seed=8)), b)
    assert a.read_bytes() == b.read_bytes()
    save_problem(gen_poplp(PoplpParams(n=5, m=6, p=3, seed=9)), b)
    assert a.read_bytes() != b.read_bytes()


@pytest.mark.parametrize("build", [toy_tikhonov, toy_illustration,
                                   lambda: gen_poplp(PoplpParams(n=4, m=5, p=3, seed=2))])
def test_json_round_trip_values(tmp_path, build):
    p = build()
    save_problem(p, tmp_path / "p.json")
    q = load_problem(tmp_path / "p.json")
    rng = np.random.default_rng(0)
    X = rng.uniform(-5, 5, size=(100, p.d))
    for x in X:
        np.testing.assert_array_equal(p.piece_values(x), q.piece_values(x))
        np.testing.assert_array_equal(p.constraint_values(x), q.constraint_values(x))
    assert json.loads((tmp_path / "p.json").read_text())["name"] == p.name


def test_params_validation():
    with pytest.raises(ValueError):
        PoplpParams(omega=1.0)
    with pytest.raises(ValueError):
        PoplpParams(n=0)


def test_toys():
    tik, ill = toy_tikhonov(), toy_illustration()
    assert (tik.n, tik.m, tik.d) == (6, 6, 2) and not tik.lp_representable
    assert ill.d == 1 and ill.n == 4 and ill.m == 3


def test_dcpl_single_pair_matches_direct():
    b1, g1, b2, g2 = np.array([[2.0]]), [1.0], np.array([[-1.0]]), [0.5]
    p = dcpl_to_ms(b1, g1, b2, g2, BasicSet.make(1, lo=[-3.0], hi=[2.0]))
    value = LPOracle(p).solve_piece(0).value
    # (2u + 1) - (-u + 0.5) = 3u + 0.5 on [-3, 2]
    direct = linprog([3.0], bounds=[(-3.0, 2.0)], method="highs")
    assert value == pytest.approx(direct.fun + 0.5)


def test_dcpl_shape_errors():
    with pytest.raises(ValueError):
        dcpl_to_ms(np.zeros((0, 1)), [], [[1.0]], [0.0])
    with pytest.raises(ValueError):
        dcpl_to_ms([[1.0, 2.0]], [0.0], [[1.0]], [0.0])


def test_tikhonov_is_dcpl_plus_quadratic():
    tik = toy_tikhonov()
    from ulo.instances import TIKHONOV_B1, TIKHONOV_B2, TIKHONOV_G1, TIKHONOV_G2
    lin = dcpl_to_ms(np.array(TIKHONOV_B1)[:, None], TIKHONOV_G1, np.array(TIKHONOV_B2)[:, None], TIKHONOV_G2)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-5, 5, size=(50, 2)):
        np.testing.assert_allclose(tik.piece_values(x) - 0.5 * x[0] ** 2, lin.piece_values(x), atol=1e-12)
        np.testing.assert_allclose(tik.constraint_values(x), lin.constraint_values(x), atol=1e-12)
