"""(MS) problem instances: pieces, constraints and a polyhedral basic set."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import expr as ex

DEFAULT_TOL = 1e-6
DEFAULT_RHO = 1e-3


class ProblemError(ValueError):
    pass


class IncompleteCertificate(ProblemError):
    pass


def _as_matrix(rows, d: int) -> np.ndarray:
    a = np.asarray(rows if rows is not None else np.zeros((0, d)), dtype=float)
    if a.size == 0:
        return np.zeros((0, d))
    return a.reshape(-1, d)


def _decode(v):
    if isinstance(v, str):
        return float(v)  # "inf" / "-inf"
    return float(v)


def _encode(v: float):
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return float(v)


@dataclass(frozen=True, eq=False)
class BasicSet:
    """``A_in x <= b_in``, ``A_eq x = b_eq``, ``lo <= x <= hi``."""

    A_in: np.ndarray
    b_in: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def make(cls, d: int, A_in=None, b_in=None, A_eq=None, b_eq=None, lo=None, hi=None) -> "BasicSet":
        A_in = _as_matrix(A_in, d)
        A_eq = _as_matrix(A_eq, d)
        b_in = np.asarray(b_in if b_in is not None else [], dtype=float).reshape(-1)
        b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).reshape(-1)
        lo = np.full(d, -np.inf) if lo is None else np.asarray([_decode(v) for v in lo], dtype=float)
        hi = np.full(d, np.inf) if hi is None else np.asarray([_decode(v) for v in hi], dtype=float)
        if A_in.shape[0] != b_in.shape[0] or A_eq.shape[0] != b_eq.shape[0]:
            raise ProblemError("row counts of basic-set matrices and vectors differ")
        if lo.shape != (d,) or hi.shape != (d,):
            raise ProblemError("bound vectors must have length d")
        for a in (A_in, b_in, A_eq, b_eq, lo, hi):
            a.setflags(write=False)
        return cls(A_in, b_in, A_eq, b_eq, lo, hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x: np.ndarray, tol: float = DEFAULT_TOL):
        """Vectorised membership test for ``(d,)`` or ``(N, d)`` inputs."""
        x = np.asarray(x, dtype=float)
        ok = np.all(x >= self.lo - tol, axis=-1) & np.all(x <= self.hi + tol, axis=-1)
        if self.A_in.shape[0]:
            ok &= np.all(x @ self.A_in.T <= self.b_in + tol, axis=-1)
        if self.A_eq.shape[0]:
            ok &= np.all(np.abs(x @ self.A_eq.T - self.b_eq) <= tol, axis=-1)
        return ok

    def to_dict(self) -> dict:
        return {
            "A_in": self.A_in.tolist(), "b_in": self.b_in.tolist(),
            "A_eq": self.A_eq.tolist(), "b_eq": self.b_eq.tolist(),
            "lo": [_encode(v) for v in self.lo], "hi": [_encode(v) for v in self.hi],
        }


def canonical(indices: Iterable[int]) -> tuple:
    """Sorted duplicate-free tuple; the cache key form of H and S."""
    return tuple(sorted(set(int(i) for i in indices)))


@dataclass(frozen=True, eq=False)
class MSProblem:
    """``min_{x in X} min_i f_i(x)  s.t.  c_j(x) <= 0`` for all j.

    Piece and constraint indices are zero-based.
    """

    d: int
    pieces: tuple
    constraints: tuple
    basic: BasicSet
    name: str = ""
    provenance: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.pieces:
            raise ProblemError("an MS problem needs at least one piece")
        for e in self.pieces + self.constraints:
            if ex.dim_of(e) != self.d:
                raise ProblemError("expression dimension does not match d")
        if self.basic.dim != self.d:
            raise ProblemError("basic set dimension does not match d")
        for i, p in enumerate(self.pieces):
            if not ex.classify(p).certified_convex:
                raise ProblemError(f"piece {i} is not certified convex")

    @property
    def n(self) -> int:
        return len(self.pieces)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def lp_representable(self) -> bool:
        return all(ex.classify(e).lp_representable for e in self.pieces + self.constraints)

    def all_pieces(self) -> tuple:
        return tuple(range(self.n))

    def all_constraints(self) -> tuple:
        return tuple(range(self.m))

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ProblemError(f"point has dimension {x.shape[-1]}, problem has d={self.d}")
        return x

    def piece_values(self, x) -> np.ndarray:
        """All piece values at x, shape ``(n,)`` or ``(N, n)``."""
        x = self._check_point(x)
        return np.stack([np.asarray(ex._eval(p, x), dtype=float) for p in self.pieces], axis=-1)

    def constraint_values(self, x, S: Iterable[int] | None = None) -> np.ndarray:
        x = self._check_point(x)
        idx = self.all_constraints() if S is None else canonical(S)
        if not idx:
            return np.zeros(x.shape[:-1] + (0,))
        return np.stack([np.asarray(ex._eval(self.constraints[j], x), dtype=float) for j in idx], axis=-1)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "d": self.d,
            "basic": self.basic.to_dict(),
            "pieces": [ex.to_dict(p) for p in self.pieces],
            "constraints": [ex.to_dict(c) for c in self.constraints],
        }
        if self.provenance:
            out["provenance"] = dict(self.provenance)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "MSProblem":
        d = int(data["d"])
        b = data.get("basic", {})
        basic = BasicSet.make(d, b.get("A_in"), b.get("b_in"), b.get("A_eq"), b.get("b_eq"), b.get("lo"), b.get("hi"))
        return cls(
            d=d,
            pieces=tuple(ex.from_dict(p) for p in data["pieces"]),
            constraints=tuple(ex.from_dict(c) for c in data.get("constraints", [])),
            basic=basic,
            name=data.get("name", ""),
            provenance=data.get("provenance", {}),
        )


def save_problem(problem: MSProblem, path) -> None:
    Path(path).write_text(json.dumps(problem.to_dict(), indent=1), encoding="utf-8")


def load_problem(path) -> MSProblem:
    return MSProblem.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --------------------------------------------------------------------------
# point-wise operations

def feasible(problem: MSProblem, x, S: Iterable[int] | None = None, tol: float = DEFAULT_TOL):
    """Basic-set membership and ``c_j(x) <= tol`` for every j in S."""
    if tol < 0:
        raise ProblemError("tol must be non-negative")
    x = problem._check_point(x)
    ok = problem.basic.contains(x, tol)
    cv = problem.constraint_values(x, S)
    if cv.shape[-1]:
        ok = ok & np.all(cv <= tol, axis=-1)
    return bool(ok) if x.ndim == 1 else ok


def eval_F_HS(problem: MSProblem, x, H: Iterable[int] | None = None, S: Iterable[int] | None = None,
              tol: float = DEFAULT_TOL):
    """``min_{i in H} f_i(x)`` if x satisfies S (and the basic set), else +inf."""
    H = problem.all_pieces() if H is None else canonical(H)
    if not H:
        raise ProblemError("H must be nonempty")
    x = problem._check_point(x)
    vals = problem.piece_values(x)[..., list(H)].min(axis=-1)
    ok = feasible(problem, x, S, tol)
    out = np.where(ok, vals, np.inf)
    return float(out) if x.ndim == 1 else out


def eval_F(problem: MSProblem, x, tol: float = DEFAULT_TOL):
    return eval_F_HS(problem, x, None, None, tol)


def active_pieces(problem: MSProblem, x, rho: float = DEFAULT_RHO) -> tuple:
    """``{i : f_i(x) <= min_k f_k(x) + rho}``; feasibility of x is not required."""
    if rho < 0:
        raise ProblemError("rho must be non-negative")
    vals = problem.piece_values(np.asarray(x, dtype=float).reshape(-1))
    return tuple(int(i) for i in np.flatnonzero(vals <= vals.min() + rho))


def local_opt_certificate(problem: MSProblem, i_star: int, x_star, rho: float, nu: Mapping[int, float],
                          tol: float = 0.0) -> bool:
    """Sufficient local-optimality test at an oracle minimiser ``x_star`` of piece ``i_star``.

    ``nu`` must give the exact single-piece optimal values for every piece in
    the rho-active set at ``x_star`` (and for ``i_star``).
    """
    act = active_pieces(problem, x_star, rho)
    missing = [i for i in set(act) | {i_star} if i not in nu]
    if missing:
        raise IncompleteCertificate(f"no optimal value for active pieces {sorted(missing)}")
    ref = nu[i_star]
    return all(nu[i] >= ref - tol for i in act)
