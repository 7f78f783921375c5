"""Small expression language for pieces and constraints.

Seven node kinds cover every instance built by this package: affine forms,
pointwise maxima, sums, scalings, squared and exponentiated affine forms, and
negation.  Evaluation is vectorised: a point may be a single ``(d,)`` vector or
a batch of shape ``(N, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np


class ExprError(ValueError):
    """Structural problem with an expression (bad arity, wrong dimension)."""


class UnsupportedExpression(ExprError):
    """The expression lies outside the fragment an operation can handle."""


@dataclass(frozen=True)
class AffineForm:
    """``<coeffs, x> + offset``."""

    coeffs: tuple
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @cached_property
    def vec(self) -> np.ndarray:
        v = np.asarray(self.coeffs, dtype=float)
        v.setflags(write=False)
        return v

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.dim:
            raise ExprError(f"point has dimension {x.shape[-1]}, expression expects {self.dim}")
        return x @ self.vec + self.offset

    def scaled(self, w: float) -> "AffineForm":
        return AffineForm(tuple(w * c for c in self.coeffs), w * self.offset)


class Expr:
    """Base class of expression nodes.  Nodes are immutable."""

    kind: str = ""

    def children(self) -> tuple:
        return ()

    def __neg__(self):
        return Neg(self)

    def __add__(self, other):
        return SumOf((self, other))

    def __rmul__(self, w):
        return Scale(float(w), self)


@dataclass(frozen=True, eq=True)
class Affine(Expr):
    form: AffineForm
    kind = "affine"


@dataclass(frozen=True, eq=True)
class MaxOf(Expr):
    items: tuple
    kind = "max"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ExprError("MaxOf needs at least one child")

    def children(self):
        return self.items


@dataclass(frozen=True, eq=True)
class SumOf(Expr):
    items: tuple
    kind = "sum"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ExprError("SumOf needs at least one child")

    def children(self):
        return self.items


@dataclass(frozen=True, eq=True)
class Scale(Expr):
    weight: float
    child: Expr
    kind = "scale"

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=True)
class SquareAffine(Expr):
    form: AffineForm
    kind = "sq_affine"


@dataclass(frozen=True, eq=True)
class ExpAffine(Expr):
    form: AffineForm
    kind = "exp_affine"


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    child: Expr
    kind = "neg"

    def children(self):
        return (self.child,)


ExprLike = Union[Expr, AffineForm]


def affine(coeffs: Iterable[float], offset: float = 0.0) -> Affine:
    return Affine(AffineForm(tuple(coeffs), offset))


def constant(value: float, dim: int) -> Affine:
    return Affine(AffineForm((0.0,) * dim, value))


def dim_of(expr: Expr) -> int:
    """Dimension of the embedded affine forms; raises if they disagree."""
    dims = {f.dim for f in _forms(expr)}
    if len(dims) != 1:
        raise ExprError(f"inconsistent affine dimensions {sorted(dims)}")
    return dims.pop()


def _forms(expr: Expr):
    if isinstance(expr, (Affine, SquareAffine, ExpAffine)):
        yield expr.form
    for c in expr.children():
        yield from _forms(c)


def evaluate(expr: Expr, x) -> Union[float, np.ndarray]:
    """Exact recursive evaluation at a point or a batch of points."""
    arr = np.asarray(x, dtype=float)
    out = _eval(expr, arr)
    if arr.ndim == 1:
        return float(out)
    return out


def _eval(e: Expr, x: np.ndarray):
    if isinstance(e, Affine):
        return e.form(x)
    if isinstance(e, MaxOf):
        vals = [_eval(c, x) for c in e.items]
        return np.maximum.reduce(vals) if len(vals) > 1 else vals[0]
    if isinstance(e, SumOf):
        acc = _eval(e.items[0], x)
        for c in e.items[1:]:
            acc = acc + _eval(c, x)
        return acc
    if isinstance(e, Scale):
        return e.weight * _eval(e.child, x)
    if isinstance(e, SquareAffine):
        return e.form(x) ** 2
    if isinstance(e, ExpAffine):
        return np.exp(e.form(x))
    if isinstance(e, Neg):
        return -_eval(e.child, x)
    raise ExprError(f"unknown node {type(e).__name__}")


@dataclass(frozen=True)
class Classification:
    certified_convex: bool
    lp_representable: bool


def classify(expr: Expr) -> Classification:
    """Rule-based convexity / LP-representability flags."""
    if isinstance(expr, Affine):
        return Classification(True, True)
    if isinstance(expr, (SquareAffine, ExpAffine)):
        return Classification(True, False)
    if isinstance(expr, Neg):
        return Classification(False, False)
    if isinstance(expr, Scale):
        inner = classify(expr.child)
        if expr.weight < 0:
            return Classification(False, False)
        return inner
    if isinstance(expr, (MaxOf, SumOf)):
        flags = [classify(c) for c in expr.items]
        return Classification(
            all(f.certified_convex for f in flags),
            all(f.lp_representable for f in flags),
        )
    raise ExprError(f"unknown node {type(expr).__name__}")


def canonicalize(expr: Expr) -> Expr:
    """Push negations and scalings into affine leaves where possible.

    ``Neg(Affine)`` and ``Scale(w, Affine)`` collapse to a single affine leaf,
    double negations cancel.  Other structure is kept.
    """
    if isinstance(expr, Neg):
        inner = canonicalize(expr.child)
        if isinstance(inner, Affine):
            return Affine(inner.form.scaled(-1.0))
        if isinstance(inner, Neg):
            return inner.child
        return Neg(inner)
    if isinstance(expr, Scale):
        inner = canonicalize(expr.child)
        if isinstance(inner, Affine):
            return Affine(inner.form.scaled(expr.weight))
        return Scale(expr.weight, inner)
    if isinstance(expr, MaxOf):
        return MaxOf(tuple(canonicalize(c) for c in expr.items))
    if isinstance(expr, SumOf):
        return SumOf(tuple(canonicalize(c) for c in expr.items))
    return expr


def count_max_nodes(expr: Expr) -> int:
    own = 1 if isinstance(expr, MaxOf) else 0
    return own + sum(count_max_nodes(c) for c in expr.children())


# --------------------------------------------------------------------------
# epigraph reduction of LP-representable trees

@dataclass
class LinTerm:
    """``<x_coeffs, x> + sum_k aux[k] * t_k + const``."""

    x_coeffs: np.ndarray
    aux: dict = field(default_factory=dict)
    const: float = 0.0

    def scaled(self, w: float) -> "LinTerm":
        return LinTerm(w * self.x_coeffs, {k: w * v for k, v in self.aux.items()}, w * self.const)

    def plus(self, other: "LinTerm") -> "LinTerm":
        aux = dict(self.aux)
        for k, v in other.aux.items():
            aux[k] = aux.get(k, 0.0) + v
        return LinTerm(self.x_coeffs + other.x_coeffs, aux, self.const + other.const)

    def dense(self, n_aux: int) -> tuple[np.ndarray, np.ndarray, float]:
        t = np.zeros(n_aux)
        for k, v in self.aux.items():
            t[k] = v
        return self.x_coeffs, t, self.const


@dataclass
class Epigraph:
    """Linear lifting of an LP-representable expression.

    Minimising ``objective`` over ``(x, t)`` subject to every row ``<= 0``
    reproduces the minimum of the expression over any polyhedron in ``x``.
    """

    objective: LinTerm
    n_aux: int
    rows: list


def epigraph_rows(expr: Expr, dim: int | None = None) -> Epigraph:
    """One auxiliary variable per ``MaxOf`` node, rows ``t_k >= child``."""
    if not classify(expr).lp_representable:
        raise UnsupportedExpression("expression is not LP-representable")
    d = dim_of(expr) if dim is None else dim
    rows: list = []
    counter = [0]

    def lin(e: Expr) -> LinTerm:
        if isinstance(e, Affine):
            return LinTerm(e.form.vec.copy(), {}, e.form.offset)
        if isinstance(e, Scale):
            return lin(e.child).scaled(e.weight)
        if isinstance(e, SumOf):
            acc = lin(e.items[0])
            for c in e.items[1:]:
                acc = acc.plus(lin(c))
            return acc
        if isinstance(e, MaxOf):
            k = counter[0]
            counter[0] += 1
            for c in e.items:
                # child - t_k <= 0
                rows.append(lin(c).plus(LinTerm(np.zeros(d), {k: -1.0}, 0.0)))
            return LinTerm(np.zeros(d), {k: 1.0}, 0.0)
        raise UnsupportedExpression(f"{type(e).__name__} has no linear lifting")

    obj = lin(expr)
    return Epigraph(obj, counter[0], rows)


def linear_coefficient(expr: Expr, k: int):
    """Coefficient ``a`` if ``expr(x) = a * x[k] + g(x without x[k])``, else None."""
    if isinstance(expr, Affine):
        return expr.form.coeffs[k]
    if isinstance(expr, (SquareAffine, ExpAffine, MaxOf)):
        return 0.0 if all(f.coeffs[k] == 0.0 for f in _forms(expr)) else None
    if isinstance(expr, Scale):
        c = linear_coefficient(expr.child, k)
        return None if c is None else expr.weight * c
    if isinstance(expr, Neg):
        c = linear_coefficient(expr.child, k)
        return None if c is None else -c
    if isinstance(expr, SumOf):
        total = 0.0
        for c in expr.items:
            ck = linear_coefficient(c, k)
            if ck is None:
                return None
            total += ck
        return total
    raise ExprError(f"unknown node {type(expr).__name__}")


# --------------------------------------------------------------------------
# JSON encoding

def to_dict(expr: Expr) -> dict:
    if isinstance(expr, (Affine, SquareAffine, ExpAffine)):
        return {"kind": expr.kind, "coeffs": list(expr.form.coeffs), "offset": expr.form.offset}
    if isinstance(expr, (MaxOf, SumOf)):
        return {"kind": expr.kind, "items": [to_dict(c) for c in expr.items]}
    if isinstance(expr, Scale):
        return {"kind": "scale", "weight": expr.weight, "child": to_dict(expr.child)}
    if isinstance(expr, Neg):
        return {"kind": "neg", "child": to_dict(expr.child)}
    raise ExprError(f"unknown node {type(expr).__name__}")


_LEAVES = {"affine": Affine, "sq_affine": SquareAffine, "exp_affine": ExpAffine}


def from_dict(data: dict) -> Expr:
    kind = data.get("kind")
    if kind in _LEAVES:
        return _LEAVES[kind](AffineForm(tuple(data["coeffs"]), data.get("offset", 0.0)))
    if kind == "max":
        return MaxOf(tuple(from_dict(c) for c in data["items"]))
    if kind == "sum":
        return SumOf(tuple(from_dict(c) for c in data["items"]))
    if kind == "scale":
        return Scale(float(data["weight"]), from_dict(data["child"]))
    if kind == "neg":
        return Neg(from_dict(data["child"]))
    raise ExprError(f"unknown expression kind {kind!r}")
