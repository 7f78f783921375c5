import math

import numpy as np
import pytest

from ulo import expr as ex
from ulo.problem import (BasicSet, IncompleteCertificate, MSProblem, ProblemError, active_pieces, eval_F,
                         eval_F_HS, feasible, load_problem, local_opt_certificate, save_problem)


def test_basic_set_contains():
    b = BasicSet.make(2, A_in=[[1.0, 1.0]], b_in=[1.0], lo=[0.0, 0.0])
    assert b.contains(np.array([0.5, 0.5]))
    assert not b.contains(np.array([0.8, 0.5]))
    np.testing.assert_array_equal(b.contains(np.array([[0.1, 0.1], [-1.0, 0.0]])), [True, False])


def test_problem_validation():
    with pytest.raises(ProblemError):
        MSProblem(1, [], [], BasicSet.make(1))
    with pytest.raises(ProblemError):
        MSProblem(1, [ex.Neg(ex.SquareAffine(ex.AffineForm((1.0,), 0.0)))], [], BasicSet.make(1))


def test_illustration_domain(illustration):
    assert (illustration.n, illustration.m) == (4, 3)
    assert feasible(illustration, [-2.0])
    assert not feasible(illustration, [1.0])
    r = math.sqrt(1.5)
    assert eval_F(illustration, [r]) == pytest.approx(r - 3, abs=1e-12)
    assert eval_F(illustration, [1.0]) == math.inf


def test_tikhonov_values(tikhonov):
    assert eval_F(tikhonov, [2.0, 2.0]) == pytest.approx(-3.0)
    assert eval_F(tikhonov, [-1.5, -0.25]) == pytest.approx(-25 / 8)
    assert not feasible(tikhonov, [2.0, 1.9])


def test_eval_F_HS_subsets(tikhonov):
    x = [0.0, 5.0]
    full = eval_F_HS(tikhonov, x)
    assert eval_F_HS(tikhonov, x, H=[0]) >= full
    with pytest.raises(ProblemError):
        eval_F_HS(tikhonov, x, H=[])


def test_active_pieces(tikhonov):
    x = [-1.5, -0.25]
    vals = tikhonov.piece_values(x)
    act = active_pieces(tikhonov, x, 1e-3)
    assert int(np.argmin(vals)) in act
    assert all(vals[i] <= vals.min() + 1e-3 for i in act)


def test_certificate_requires_all_values(tikhonov):
    x = np.array([-1.5, -0.25])
    act = active_pieces(tikhonov, x, 1e-3)
    with pytest.raises(IncompleteCertificate):
        local_opt_certificate(tikhonov, 4, x, 1e-3, {})
    nu = {i: -25 / 8 for i in act}
    assert local_opt_certificate(tikhonov, 4, x, 1e-3, nu)


def test_save_load_round_trip(tmp_path, tikhonov):
    path = tmp_path / "p.json"
    save_problem(tikhonov, path)
    back = load_problem(path)
    pts = np.random.default_rng(0).uniform(-5, 5, size=(50, 2))
    np.testing.assert_array_equal(back.piece_values(pts), tikhonov.piece_values(pts))
    np.testing.assert_array_equal(back.basic.lo, tikhonov.basic.lo)
