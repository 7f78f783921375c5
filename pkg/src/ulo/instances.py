"""Builders for the concrete problems used throughout the package."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import expr as ex
from .problem import BasicSet, MSProblem


@dataclass(frozen=True)
class PoplpParams:
    """Pessimistic/optimistic piecewise-linear portfolio program."""

    n: int = 20
    m: int = 50
    I: float = 1.0
    zeta: float = 1.0
    p: int = 10
    R: float = 10.0
    omega: float = 0.5
    C_pen: float = 5e4
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.m, self.p) < 1:
            raise ValueError("n, m and p must be positive")
        if self.R <= 0 or self.zeta <= 0:
            raise ValueError("R and zeta must be positive")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError("omega must lie in [0, 1)")


@dataclass
class PoplpData:
    beta_bar: np.ndarray
    delta: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    gamma_max: float
    V: np.ndarray
    W: np.ndarray


DELTA_VALUES = np.array([-2, -1, 0, 1, 2])
DELTA_PROBS = np.array([0.1, 0.1, 0.6, 0.1, 0.1])


def poplp_data(params: PoplpParams) -> PoplpData:
    rng = np.random.default_rng(params.seed)
    n, m, p = params.n, params.m, params.p
    beta_bar = rng.integers(1, 16, size=p).astype(float)
    delta = rng.choice(DELTA_VALUES, size=(n, p), p=DELTA_PROBS)
    beta = np.maximum(0.0, beta_bar + params.I * delta)
    norms = beta.sum(axis=1)
    gamma_max = 0.15 * (norms.max() - norms.min())
    gamma = rng.uniform(0.0, gamma_max, size=n) if gamma_max > 0 else np.zeros(n)
    V = np.zeros((m, p))
    lo_nnz = math.ceil(p / 10)
    for j in range(m):
        iota = int(rng.integers(lo_nnz, p + 1))
        pos = rng.choice(p, size=iota, replace=False)
        V[j, pos] = rng.integers(1, 11, size=iota)
    W = params.zeta * V.sum(axis=1) / p
    return PoplpData(beta_bar, delta, beta, gamma, float(gamma_max), V, W)


def gen_poplp(params: PoplpParams) -> MSProblem:
    """Minimisation form over ``x = (u, eta)``; the original maximum is ``-F*``."""
    data = poplp_data(params)
    p, w = params.p, params.omega
    d = p + 1
    pess = [ex.affine(list(-data.beta[k]) + [0.0], data.gamma[k]) for k in range(params.n)]
    pieces = []
    for i in range(params.n):
        own = ex.affine(list(-(1.0 - w) * data.beta[i]) + [params.C_pen], (1.0 - w) * data.gamma[i])
        if w > 0:
            pieces.append(ex.SumOf((own, ex.Scale(w, ex.MaxOf(tuple(pess))))))
        else:
            pieces.append(own)
    constraints = [ex.affine(list(data.V[j]) + [-1.0], -data.W[j]) for j in range(params.m)]
    basic = BasicSet.make(d, A_eq=[[1.0] * p + [0.0]], b_eq=[params.R], lo=[0.0] * d)
    prov = {"kind": "poplp", "params": asdict(params), "sense": "max form objective is -F"}
    return MSProblem(d, pieces, constraints, basic, name=f"poplp-n{params.n}-m{params.m}-s{params.seed}",
                     provenance=prov)


def toy_illustration() -> MSProblem:
    """One-dimensional four-piece toy with a nonconvex feasible set.

    Feasible set is ``[-5, -sqrt(1.5)] U [sqrt(1.5), 5]``; global minimum
    ``sqrt(1.5) - 3`` at ``x = sqrt(1.5)``.  The box ``[-8, 8]`` only serves the
    reference grid and does not cut the feasible set.
    """
    x = lambda a, b: ex.AffineForm((a,), b)  # noqa: E731
    pieces = [
        ex.Scale(0.1, ex.SquareAffine(x(1.0, -1.0))),
        ex.SumOf((ex.MaxOf((ex.Affine(x(1.0, -2.0)), ex.Affine(x(-2.0, 0.0)))), ex.constant(-1.0, 1))),
        ex.SumOf((ex.constant(1.0, 1), ex.ExpAffine(x(0.2, 0.0)))),
        ex.Scale(10.0, ex.SquareAffine(x(1.0, 4.0))),
    ]
    constraints = [
        ex.SumOf((ex.constant(1.5, 1), ex.Neg(ex.SquareAffine(x(1.0, 0.0))))),
        ex.Affine(x(1.0, -5.0)),
        ex.Affine(x(-1.0, -5.0)),
    ]
    basic = BasicSet.make(1, lo=[-8.0], hi=[8.0])
    return MSProblem(1, pieces, constraints, basic, name="toy-illustration",
                     provenance={"kind": "toy", "which": "illustration"})


TIKHONOV_B1 = (Fraction(1, 4), Fraction(-1, 2), Fraction(1, 3), Fraction(2), Fraction(0), Fraction(3))
TIKHONOV_G1 = (Fraction(-2), Fraction(-1), Fraction(0), Fraction(-2), Fraction(-1, 4), Fraction(-4))
TIKHONOV_B2 = (Fraction(3, 2), Fraction(1), Fraction(-1), Fraction(4), Fraction(-2), Fraction(0))
TIKHONOV_G2 = (Fraction(0), Fraction(2), Fraction(1), Fraction(-1), Fraction(1), Fraction(2))


def toy_tikhonov() -> MSProblem:
    """``min_{|u|<=5} u^2/2 + max_j(b1_j u + g1_j) - max_i(b2_i u + g2_i)`` lifted to ``(u, eta)``."""
    pieces = [
        ex.SumOf((ex.Scale(0.5, ex.SquareAffine(ex.AffineForm((1.0, 0.0)))),
                  ex.affine([-float(b), 1.0], -float(g))))
        for b, g in zip(TIKHONOV_B2, TIKHONOV_G2)
    ]
    constraints = [ex.affine([float(b), -1.0], float(g)) for b, g in zip(TIKHONOV_B1, TIKHONOV_G1)]
    basic = BasicSet.make(2, lo=[-5.0, -np.inf], hi=[5.0, np.inf])
    return MSProblem(2, pieces, constraints, basic, name="toy-tikhonov",
                     provenance={"kind": "toy", "which": "tikhonov"})


def dcpl_to_ms(beta1, gamma1, beta2, gamma2, basic_u: BasicSet | None = None, name: str = "dcpl") -> MSProblem:
    """Lift ``min_u max_j(<b1_j,u>+g1_j) - max_i(<b2_i,u>+g2_i)`` to pieces and constraints.

    Variables become ``(u, eta)``; piece i is ``eta - g2_i - <b2_i, u>`` and
    constraint j is ``<b1_j, u> + g1_j - eta``.
    """
    beta1 = np.atleast_2d(np.asarray(beta1, dtype=float))
    beta2 = np.atleast_2d(np.asarray(beta2, dtype=float))
    gamma1 = np.asarray(gamma1, dtype=float).reshape(-1)
    gamma2 = np.asarray(gamma2, dtype=float).reshape(-1)
    p = beta1.shape[1]
    if beta2.shape[1] != p or beta1.shape[0] != gamma1.size or beta2.shape[0] != gamma2.size:
        raise ValueError("inconsistent affine family shapes")
    if beta1.shape[0] == 0 or beta2.shape[0] == 0:
        raise ValueError("both affine families must be nonempty")
    basic_u = basic_u or BasicSet.make(p)
    pieces = [ex.affine(list(-beta2[i]) + [1.0], -gamma2[i]) for i in range(beta2.shape[0])]
    constraints = [ex.affine(list(beta1[j]) + [-1.0], gamma1[j]) for j in range(beta1.shape[0])]
    pad = lambda A: np.hstack([A, np.zeros((A.shape[0], 1))])  # noqa: E731
    basic = BasicSet.make(
        p + 1, pad(basic_u.A_in), basic_u.b_in, pad(basic_u.A_eq), basic_u.b_eq,
        list(basic_u.lo) + [-np.inf], list(basic_u.hi) + [np.inf],
    )
    return MSProblem(p + 1, pieces, constraints, basic, name=name, provenance={"kind": "dcpl"})


def table4_instance(rho: Fraction = Fraction(1, 10)):
    """Nine-node abstract instance with hand-specified values and edges."""
    from .dagsim import AbstractInstance

    F = Fraction
    # one-based labels in comments; stored zero-based
    nu = [F(5, 2), F(16, 5), F(2), F(3), F(7, 3), F(6), F(6), F(5, 2), F(4)]
    F_at = [F(5, 2), F(5, 2), F(2), F(8, 3), F(7, 3), F(9, 2) - rho / 3, F(4), F(5, 2), F(4)]
    edges_1based = [(7, 1), (7, 2), (7, 3), (2, 4), (4, 3), (4, 5), (6, 4), (6, 9)]
    edges = tuple((a - 1, b - 1) for a, b in edges_1based)
    m = 9
    # each node's active constraint is its own index
    C_sets = tuple((i,) for i in range(9))
    return AbstractInstance(
        n=9, m=m, edges=edges,
        nu=np.array([float(v) for v in nu]), F_at=np.array([float(v) for v in F_at]),
        C_sets=C_sets, theta_bar_draws=np.ones(9),
        params={"preset": "table4", "rho": float(rho)},
    )
