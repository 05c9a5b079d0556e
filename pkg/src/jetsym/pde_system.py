"""PDE systems, reduction onto the solution space, Hadamard factorization.

Every equation that takes part in a reduction carries a *leading derivative*
occurring linearly with a constant coefficient.  Solving each equation for it
gives an elimination rule, prolonged to all derivatives.  The reducer keeps,
for every eliminated variable v, a certificate

    v - reduce(v) = sum_{B,K} c_{B,K} D_K G^B

so that an expression vanishing on the solution space comes with an exact
factorization e = R_e(G).  For an evolution system the leading derivative of
u^a_t - g^a is u^a_t itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .calculus import LinDiffOp, adjoint_frechet, frechet
from .grammar import Namespace
from .jet_core import (
    EMPTY,
    JET,
    ONE,
    ZERO,
    DiffExpr,
    MultiIndex,
    Substitution,
    Var,
    as_expr,
    jet_var,
    total_derivative,
)


@dataclass(frozen=True)
class Equation:
    name: str
    expr: DiffExpr
    leading: Var | None = None


def split_leading(eq: Equation) -> tuple[Fraction, DiffExpr]:
    """(c, rest) with eq.expr = c * leading + rest; c a nonzero constant."""
    v = eq.leading
    if v is None or v.kind != JET:
        raise ValueError(f"equation {eq.name!r} has no leading jet variable")
    try:
        coeff, rest = eq.expr.coefficient_of(v)
    except ValueError as exc:
        raise ValueError(f"equation {eq.name!r}: leading derivative {v!r} occurs nonlinearly") from exc
    c = coeff.constant_value()
    if coeff.is_zero():
        raise ValueError(f"equation {eq.name!r} does not contain its leading derivative {v!r}")
    if c is None:
        raise ValueError(f"equation {eq.name!r}: leading derivative must have a constant coefficient")
    for w in rest.jet_vars():
        if w.name == v.name and w.mi.contains(v.mi):
            raise ValueError(
                f"equation {eq.name!r}: {w!r} is a derivative of the leading derivative {v!r}")
    return c, rest


Cert = dict  # (equation index, MultiIndex) -> DiffExpr


def _cert_add(acc: Cert, other: Cert, factor: DiffExpr | None = None) -> None:
    for key, c in other.items():
        val = acc.get(key, ZERO) + (c if factor is None else factor * c)
        if val:
            acc[key] = val
        else:
            acc.pop(key, None)


def _cert_total(cert: Cert, j: str) -> Cert:
    """D_j o (sum c_{B,K} D_K): pushes D_j through the coefficients."""
    out: Cert = {}
    for (b, K), c in cert.items():
        _cert_add(out, {(b, K.add(j)): c})
        dc = total_derivative(c, j)
        if dc:
            _cert_add(out, {(b, K): dc})
    return out


class Reducer(Substitution):
    """Elimination of leading derivatives for a list of equations."""

    def __init__(self, equations: Sequence[Equation]):
        rules = []
        self.equations = tuple(equations)
        self._rule_eq: list[tuple[int, Fraction]] = []
        for k, eq in enumerate(self.equations):
            c, rest = split_leading(eq)
            rules.append((eq.leading, rest.scale(-Fraction(1) / c)))
            self._rule_eq.append((k, c))
        super().__init__(rules, prolong=True)
        self._cert: dict[Var, Cert] = {}

    def reduce(self, e) -> DiffExpr:
        return self.apply(as_expr(e))

    def certificate(self, v: Var) -> Cert:
        """Operator row R_v with v - reduce(v) = R_v(G)."""
        if v in self._cert:
            return self._cert[v]
        k = self.match(v) if v.kind == JET else None
        if k is None:
            out: Cert = {}
        else:
            base, _ = self.rules[k]
            eq_index, c = self._rule_eq[k]
            if v == base:
                # v - rhs = G/c, then rhs - reduce(rhs) from the other rules
                out = {(eq_index, EMPTY): DiffExpr.const(Fraction(1) / c)}
                _cert_add(out, self.expr_certificate(self.rules[k][1]))
            else:
                j = v.mi.minus(base.mi)[-1]
                w = jet_var(v.name, v.mi.minus((j,)))
                out = _cert_total(self.certificate(w), j)
                wi = self.image(w)
                _cert_add(out, self.expr_certificate(total_derivative(wi, j)))
        self._cert[v] = out
        return out

    def expr_certificate(self, e: DiffExpr) -> Cert:
        """Operator row R with e - reduce(e) = R(G)."""
        out: Cert = {}
        for mono, c in e.terms.items():
            factors = list(mono)
            imgs = [self.image(v) if v.kind == JET else None for v, _ in factors]
            if all(i is None for i in imgs):
                continue
            # prod a^e - prod b^e telescoped factor by factor
            prefix = DiffExpr.const(c)
            for k, ((v, p), img) in enumerate(zip(factors, imgs)):
                if img is not None:
                    suffix = DiffExpr({tuple(factors[k + 1:]): 1})
                    a = DiffExpr.of(v)
                    geo = ZERO
                    for s in range(p):
                        geo = geo + a ** s * img ** (p - 1 - s)
                    _cert_add(out, self.certificate(v), prefix * geo * suffix)
                    prefix = prefix * img ** p
                else:
                    prefix = prefix * DiffExpr.of(v, p)
        return out

    def cert_to_op(self, certs: Sequence[Cert]) -> LinDiffOp:
        n = len(self.equations)
        rows = []
        for cert in certs:
            row = [dict() for _ in range(n)]
            for (b, K), c in cert.items():
                row[b][K] = c
            rows.append(row)
        return LinDiffOp(rows, n)


@dataclass(frozen=True, eq=False)
class PdeSystem:
    """A system G^A = 0, optionally split as u_t^a = g^a plus spatial constraints.

    For an evolution split the first equations are G^a = u^a_t - g^a in the
    order of ``namespace.dependents``, followed by the constraints.
    """

    name: str
    namespace: Namespace
    equations: tuple[Equation, ...]
    time: str | None = None
    n_evolution: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        deps = set(self.namespace.dependents)
        for eq in self.equations:
            for v in eq.expr.jet_vars():
                if v.name not in deps:
                    raise ValueError(f"equation {eq.name!r} uses unknown dependent {v.name!r}")
            if eq.leading is not None:
                split_leading(eq)
        if self.n_evolution:
            if self.time is None:
                raise ValueError("an evolution split needs a time variable")
            for eq in self.equations:
                if any(self.time in v.mi for v in self.rhs_vars(eq)):
                    raise ValueError(
                        f"equation {eq.name!r}: right-hand side/constraint contains a {self.time}-derivative")

    def rhs_vars(self, eq: Equation):
        if eq in self.evolution_equations:
            return (-eq.expr + DiffExpr.of(eq.leading)).jet_vars()
        return eq.expr.jet_vars()

    # -- construction ---------------------------------------------------------
    @classmethod
    def evolutionary(cls, name: str, namespace: Namespace, time: str, g: Mapping[str, DiffExpr],
                     constraints: Sequence[tuple[str, DiffExpr, Var]] = ()) -> "PdeSystem":
        if time not in namespace.independents:
            raise ValueError(f"time variable {time!r} is not an independent variable")
        missing = [a for a in namespace.dependents if a not in g]
        if missing:
            raise ValueError(f"evolution equations missing for {missing}")
        eqs = []
        for a in namespace.dependents:
            ut = jet_var(a, (time,))
            eqs.append(Equation(a, DiffExpr.of(ut) - as_expr(g[a]), ut))
        for cname, expr, lead in constraints:
            eqs.append(Equation(cname, as_expr(expr), lead))
        return cls(name, namespace, tuple(eqs), time, len(namespace.dependents))

    @classmethod
    def general(cls, name: str, namespace: Namespace, equations: Sequence[tuple[str, DiffExpr, Var | None]],
                time: str | None = None) -> "PdeSystem":
        eqs = tuple(Equation(n, as_expr(e), lead) for n, e, lead in equations)
        return cls(name, namespace, eqs, time, 0)

    # -- views ------------------------------------------------------------------
    @property
    def independents(self) -> tuple[str, ...]:
        return self.namespace.independents

    @property
    def dependents(self) -> tuple[str, ...]:
        return self.namespace.dependents

    @property
    def spatial(self) -> tuple[str, ...]:
        return tuple(x for x in self.independents if x != self.time)

    @property
    def is_evolutionary(self) -> bool:
        return self.n_evolution > 0

    @property
    def evolution_equations(self) -> tuple[Equation, ...]:
        return self.equations[: self.n_evolution]

    @property
    def constraints(self) -> tuple[Equation, ...]:
        return self.equations[self.n_evolution:] if self.is_evolutionary else ()

    @property
    def has_constraints(self) -> bool:
        return bool(self.constraints)

    @property
    def G(self) -> tuple[DiffExpr, ...]:
        return tuple(eq.expr for eq in self.equations)

    @property
    def g(self) -> tuple[DiffExpr, ...]:
        if not self.is_evolutionary:
            raise ValueError(f"system {self.name!r} has no evolution split")
        return tuple(DiffExpr.of(eq.leading) - eq.expr for eq in self.evolution_equations)

    @property
    def C(self) -> tuple[DiffExpr, ...]:
        return tuple(eq.expr for eq in self.constraints)

    @property
    def equation_names(self) -> tuple[str, ...]:
        return tuple(eq.name for eq in self.equations)

    @cached_property
    def full_reducer(self) -> Reducer:
        missing = [eq.name for eq in self.equations if eq.leading is None]
        if missing:
            raise ValueError(
                f"system {self.name!r}: no leading derivative declared for {missing}; reduction unsupported")
        return Reducer(self.equations)

    @cached_property
    def constraint_reducer(self) -> Reducer:
        return Reducer(self.constraints)


def reduce_on_solutions(e, sys: PdeSystem, constraints_only: bool = False) -> DiffExpr:
    """Residual of e on the solution space (or on the constraint surface)."""
    red = sys.constraint_reducer if constraints_only else sys.full_reducer
    return red.reduce(e)


def hadamard_factor(e, sys: PdeSystem, constraints_only: bool = False) -> LinDiffOp:
    """Operator R (one row per component of e) with e = R(G) exactly.

    Columns follow ``sys.equations`` (or only the constraints when
    ``constraints_only`` is set).  Raises ValueError when e does not vanish
    on the solution space.
    """
    es = (as_expr(e),) if isinstance(e, (DiffExpr, int, Fraction, Var)) else tuple(as_expr(x) for x in e)
    red = sys.constraint_reducer if constraints_only else sys.full_reducer
    certs = []
    for x in es:
        r = red.reduce(x)
        if r:
            raise ValueError("expression does not vanish on the solution space; no factorization exists")
        certs.append(red.expr_certificate(x))
    R = red.cert_to_op(certs)
    G = tuple(eq.expr for eq in red.equations)
    if R.apply(G) != es:
        raise AssertionError("factorization failed to reproduce the expression")
    return R


def compatibility_operator(sys: PdeSystem) -> LinDiffOp:
    """The spatial operator D with C'(g) = D(C) exactly."""
    if not sys.has_constraints:
        return LinDiffOp.zero(0, 0)
    lhs = frechet(sys.C, sys.g, sys.dependents)
    try:
        return hadamard_factor(lhs, sys, constraints_only=True)
    except ValueError as exc:
        raise ValueError(f"constraints of {sys.name!r} are incompatible with the evolution") from exc


@dataclass(frozen=True)
class SolutionResidual:
    """Residual of each equation as numerator/denominator."""

    numerators: tuple[DiffExpr, ...]
    denominators: tuple[DiffExpr, ...]

    @property
    def is_zero(self) -> bool:
        return all(n.is_zero() for n in self.numerators)


class _RationalJet:
    """All derivatives of num/den, stored as (num_I, k) meaning num_I / den^k."""

    def __init__(self, num: DiffExpr, den: DiffExpr):
        self.den = den
        self._d: dict[MultiIndex, tuple[DiffExpr, int]] = {EMPTY: (num, 1)}

    def __call__(self, mi: MultiIndex) -> tuple[DiffExpr, int]:
        if mi not in self._d:
            j = mi[-1]
            n, k = self(mi.minus((j,)))
            dn = total_derivative(n, j) * self.den - total_derivative(self.den, j) * n.scale(k)
            self._d[mi] = (dn, k + 1)
        return self._d[mi]


def check_solution(sys: PdeSystem, candidate: Mapping[str, DiffExpr | tuple[DiffExpr, DiffExpr]]) -> SolutionResidual:
    """Substitute u^a = N^a/D^a (jet-free) into every equation."""
    jets: dict[str, _RationalJet] = {}
    for a in sys.dependents:
        if a not in candidate:
            raise ValueError(f"candidate gives no expression for {a!r}")
        val = candidate[a]
        num, den = (val if isinstance(val, tuple) else (as_expr(val), ONE))
        num, den = as_expr(num), as_expr(den)
        if num.has_jet() or den.has_jet():
            raise ValueError("candidate solutions must not contain dependent variables")
        if den.is_zero():
            raise ZeroDivisionError("candidate has a zero denominator")
        jets[a] = _RationalJet(num, den)
    nums, dens = [], []
    for eq in sys.equations:
        terms = []
        top = {a: 0 for a in sys.dependents}
        for mono, c in eq.expr.terms.items():
            keep, parts, ks = [], [], {a: 0 for a in sys.dependents}
            for v, p in mono:
                if v.kind == JET:
                    n, k = jets[v.name](v.mi)
                    parts.append(n ** p)
                    ks[v.name] += k * p
                else:
                    keep.append((v, p))
            term = DiffExpr({tuple(keep): c})
            for x in parts:
                term = term * x
            terms.append((term, ks))
            for a in top:
                top[a] = max(top[a], ks[a])
        numer = ZERO
        for term, ks in terms:
            for a in sys.dependents:
                if top[a] - ks[a]:
                    term = term * jets[a].den ** (top[a] - ks[a])
            numer = numer + term
        denom = ONE
        for a in sys.dependents:
            denom = denom * jets[a].den ** top[a]
        nums.append(numer)
        dens.append(denom)
    return SolutionResidual(tuple(nums), tuple(dens))


def adjoint_of_system(sys: PdeSystem, Q: Sequence[DiffExpr]) -> tuple[DiffExpr, ...]:
    """G'*(Q), one component per dependent variable."""
    return adjoint_frechet(sys.G, Q, sys.dependents)
