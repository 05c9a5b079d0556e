"""Numerical cross-checks at random points of jet space."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .calculus import frechet
from .jet_core import DiffExpr, Var, as_expr, total_derivative_mi

Value = Fraction | float


@dataclass
class JetPoint:
    """Values for independents, jet variables and parameter-atom derivatives."""

    values: dict[Var, Value] = field(default_factory=dict)
    seed: int | None = None

    def __getitem__(self, v: Var) -> Value:
        try:
            return self.values[v]
        except KeyError:
            raise KeyError(f"point does not cover {v!r}") from None

    def covers(self, e: DiffExpr) -> bool:
        return all(v in self.values for v in e.variables())

    def shifted(self, delta: dict[Var, Value]) -> "JetPoint":
        vals = dict(self.values)
        for v, d in delta.items():
            vals[v] = vals[v] + d
        return JetPoint(vals, self.seed)


def random_rational(rng: random.Random) -> Fraction:
    """num/den with num, den drawn from [-9, 9] minus zero."""
    pick = [k for k in range(-9, 10) if k]
    return Fraction(rng.choice(pick), rng.choice(pick))


def random_point(exprs: Iterable[DiffExpr], seed: int = 0, rng: random.Random | None = None) -> JetPoint:
    rng = rng or random.Random(seed)
    vars_: set[Var] = set()
    for e in exprs:
        vars_ |= as_expr(e).variables()
    return JetPoint({v: random_rational(rng) for v in sorted(vars_)}, seed)


def eval_exact(e, p: JetPoint) -> Value:
    total: Value = Fraction(0)
    for mono, c in as_expr(e).terms.items():
        term: Value = Fraction(c)
        for v, k in mono:
            term = term * p[v] ** k
        total = total + term
    return total


def evaluate(e, p: JetPoint) -> float:
    return float(eval_exact(e, p))


def _direction_vars(f: DiffExpr, F: Sequence[DiffExpr], deps: Sequence[str]) -> dict[Var, DiffExpr]:
    out = {}
    for v in f.jet_vars():
        out[v] = total_derivative_mi(F[deps.index(v.name)], v.mi)
    return out


def frechet_point(f, F, deps: Sequence[str], seed: int = 0) -> JetPoint:
    """Random point covering f, f'(F) and every prolonged direction D_I F."""
    f = as_expr(f)
    F = tuple(as_expr(x) for x in F)
    exprs = [f, frechet(f, F, deps)] + list(_direction_vars(f, F, deps).values())
    return random_point(exprs, seed)


def fd_frechet_check(f, F, p: JetPoint, h: float = 1e-6, deps: Sequence[str] | None = None) -> float:
    """|central difference of f along prolonged F - f'(F)| / max(1, |f'(F)|).

    The shifted values are computed exactly; only the final quotient is a
    float, so the error is the O(h^2) truncation term.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    f = as_expr(f)
    F = tuple(as_expr(x) for x in F)
    if deps is None:
        deps = tuple(sorted({v.name for v in f.jet_vars()} | {v.name for x in F for v in x.jet_vars()}))
    if len(F) != len(deps):
        raise ValueError("direction needs one component per dependent variable")
    hh = Fraction(h)
    shift = {v: eval_exact(d, p) for v, d in _direction_vars(f, F, deps).items()}
    plus = eval_exact(f, p.shifted({v: hh * s for v, s in shift.items()}))
    minus = eval_exact(f, p.shifted({v: -hh * s for v, s in shift.items()}))
    fd = float((plus - minus) / (2 * hh))
    sym = evaluate(frechet(f, F, deps), p)
    return abs(fd - sym) / max(1.0, abs(sym))


def relative_gap(a, b, p: JetPoint) -> float:
    """Relative difference of two expressions at p."""
    x, y = eval_exact(a, p), eval_exact(b, p)
    return float(abs(x - y)) / max(1.0, float(abs(y)))


__all__ = ["JetPoint", "random_point", "evaluate", "eval_exact", "fd_frechet_check", "frechet_point"]
