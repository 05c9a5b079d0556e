"""Determining equations, symmetry actions and conservation laws.

Symmetry characteristics P are tuples aligned with ``sys.dependents``;
adjoint-symmetry candidates Q are tuples aligned with ``sys.equations``
(for a constrained evolution system: Q_a for the evolution equations
followed by q_Y for the constraints).

Sign conventions: evolution equations are G^a = u^a_t - g^a.  The
general-form adjoint residual G'*(Q) and the evolution-form residual
Q_t + Q'(g) + g'*(Q) - C'*(q) agree up to an overall minus sign on the
solution space; reports state which form was used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .calculus import (
    LinDiffOp,
    adjoint_frechet,
    commutator,
    divergence,
    frechet,
    frechet_op,
    is_total_divergence,
    psi_current,
)
from .grammar import Namespace
from .jet_core import ZERO, DiffExpr, EvOneForm, EvVectorField, MultiIndex, as_expr, param_var, total_derivative
from .pde_system import PdeSystem, compatibility_operator, hadamard_factor, reduce_on_solutions

REGULARITY = "system assumed regular; non-singularity of factorization coefficients on the solution space not checked"


@dataclass
class VerificationReport:
    residual: tuple[DiffExpr, ...]
    labels: tuple[str, ...]
    factorization: LinDiffOp | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.is_zero() for r in self.residual)

    def __bool__(self) -> bool:
        return self.passed


def _vec(x, n: int, what: str) -> tuple[DiffExpr, ...]:
    out = tuple(as_expr(v) for v in x)
    if len(out) != n:
        raise ValueError(f"{what} needs {n} components, got {len(out)}")
    return out


def _partial_t(e: DiffExpr, t: str) -> DiffExpr:
    return total_derivative(e, t, include_jet=False)


def _prepare(sys: PdeSystem, comps: tuple[DiffExpr, ...], notes: list[str]) -> tuple[DiffExpr, ...]:
    """Eliminate time derivatives from candidate components of evolution systems."""
    if not sys.is_evolutionary:
        return comps
    if any(sys.time in v.mi for c in comps for v in c.jet_vars()):
        notes.append(f"{sys.time}-derivatives in the candidate eliminated through the evolution equations")
        reducer = sys.full_reducer
        return tuple(reducer.reduce(c) for c in comps)
    return comps


def flow_lie_derivative_vec(sys: PdeSystem, P) -> EvVectorField:
    """Components P_t + [g, P] on the constraint surface."""
    P = _vec(P, len(sys.dependents), "symmetry characteristic")
    P = _prepare(sys, P, [])
    comm = commutator(sys.g, P, sys.dependents)
    out = tuple(reduce_on_solutions(_partial_t(p, sys.time) + c, sys, constraints_only=True)
                for p, c in zip(P, comm))
    return EvVectorField(sys.dependents, out)


def _evolution_adjoint(sys: PdeSystem, Q: tuple[DiffExpr, ...], with_constraints: bool) -> tuple[DiffExpr, ...]:
    m = len(sys.dependents)
    Qe, q = Q[:m], Q[m:]
    g = sys.g
    gstar = adjoint_frechet(g, Qe, sys.dependents)
    out = []
    for k, a in enumerate(sys.dependents):
        out.append(_partial_t(Qe[k], sys.time) + frechet(Qe[k], g, sys.dependents) + gstar[k])
    if with_constraints and sys.has_constraints:
        cstar = adjoint_frechet(sys.C, q, sys.dependents)
        out = [r - c for r, c in zip(out, cstar)]
    return tuple(reduce_on_solutions(r, sys, constraints_only=True) for r in out)


def flow_lie_derivative_form(sys: PdeSystem, Q) -> EvOneForm:
    """L_t omega_Q = (Q_t + Q'(g) + g'*(Q))_a du^a on the constraint surface."""
    Q = _vec(Q, len(sys.equations), "adjoint-symmetry candidate") if len(Q) == len(sys.equations) else \
        _vec(tuple(Q) + (ZERO,) * len(sys.constraints), len(sys.equations), "adjoint-symmetry candidate")
    Q = _prepare(sys, Q, [])
    comps = _evolution_adjoint(sys, Q, with_constraints=False)
    return EvOneForm({(a, MultiIndex()): c for a, c in zip(sys.dependents, comps)})


def constrained_flow_report(sys: PdeSystem, Q) -> VerificationReport:
    """Checks L_t omega_Q = q_Y dC^Y (mod total D) on the constraint surface."""
    Q = _vec(Q, len(sys.equations), "adjoint-symmetry candidate")
    lie = flow_lie_derivative_form(sys, Q)
    m = len(sys.dependents)
    normal = adjoint_frechet(sys.C, Q[m:], sys.dependents) if sys.has_constraints else (ZERO,) * m
    res = tuple(
        reduce_on_solutions(lie.components.get((a, MultiIndex()), ZERO) - n, sys, constraints_only=True)
        for a, n in zip(sys.dependents, normal))
    return VerificationReport(res, sys.dependents, notes=["q_Y dC^Y moved onto du^a by integration by parts"])


def symmetry_residual(sys: PdeSystem, P) -> VerificationReport:
    P = _vec(P, len(sys.dependents), "symmetry characteristic")
    notes: list[str] = []
    P = _prepare(sys, P, notes)
    if not sys.is_evolutionary:
        res = tuple(reduce_on_solutions(r, sys) for r in frechet(sys.G, P, sys.dependents))
        notes.append("general form: G'(P) reduced on the solution space")
        return VerificationReport(res, sys.equation_names, notes=notes + [REGULARITY])
    flow = flow_lie_derivative_vec(sys, P).components
    labels = tuple(f"flow[{a}]" for a in sys.dependents)
    notes.append("evolution form: P_t + [g,P]" + (" on the constraint surface" if sys.has_constraints else ""))
    if sys.has_constraints:
        pres = tuple(reduce_on_solutions(r, sys, constraints_only=True) for r in frechet(sys.C, P, sys.dependents))
        flow = flow + pres
        labels = labels + tuple(f"preserve[{eq.name}]" for eq in sys.constraints)
        notes.append("constraint preservation: C'(P) on the constraint surface")
    return VerificationReport(flow, labels, notes=notes)


def adjoint_residual(sys: PdeSystem, Q, form: str = "auto") -> VerificationReport:
    """Adjoint-symmetry determining equation.

    ``form`` is ``"general"`` (G'*(Q) on the solution space), ``"evolution"``
    (Q_t + Q'(g) + g'*(Q) - C'*(q) on the constraint surface) or ``"auto"``
    (evolution form whenever the system has an evolution split).
    """
    Q = _vec(Q, len(sys.equations), "adjoint-symmetry candidate")
    notes: list[str] = []
    Q = _prepare(sys, Q, notes)
    if form == "auto":
        form = "evolution" if sys.is_evolutionary else "general"
    labels = tuple(f"adj[{a}]" for a in sys.dependents)
    if form == "general":
        res = tuple(reduce_on_solutions(r, sys) for r in adjoint_frechet(sys.G, Q, sys.dependents))
        notes += ["general form: G'*(Q) reduced on the solution space", REGULARITY]
        return VerificationReport(res, labels, notes=notes)
    if form != "evolution":
        raise ValueError(f"unknown residual form {form!r}")
    res = _evolution_adjoint(sys, Q, with_constraints=True)
    notes.append("evolution form: Q_t + Q'(g) + g'*(Q)" + (" - C'*(q) on the constraint surface"
                                                           if sys.has_constraints else "")
                 + "; equals -G'*(Q) on the solution space")
    return VerificationReport(res, labels, notes=notes)


def adjoint_forms_agree(sys: PdeSystem, Q) -> bool:
    """General-form residual equals minus the evolution-form residual on E."""
    gen = adjoint_residual(sys, Q, form="general").residual
    evo = adjoint_residual(sys, Q, form="evolution").residual
    return all(reduce_on_solutions(a + b, sys).is_zero() for a, b in zip(gen, evo))


def conditional_residuals(sys: PdeSystem, P=None, Q=None) -> VerificationReport:
    """Conditional (constraint-surface) symmetry or adjoint-symmetry residual."""
    if not sys.is_evolutionary:
        raise ValueError("conditional residuals need an evolution split")
    if (P is None) == (Q is None):
        raise ValueError("give exactly one of P or Q")
    if P is not None:
        flow = flow_lie_derivative_vec(sys, P).components
        return VerificationReport(flow, tuple(f"flow[{a}]" for a in sys.dependents),
                                  notes=["conditional: P_t + [g,P] on the constraint surface only"])
    Q = tuple(as_expr(x) for x in Q)
    if len(Q) == len(sys.dependents):
        Q = Q + (ZERO,) * len(sys.constraints)
    Q = _vec(Q, len(sys.equations), "adjoint-symmetry candidate")
    res = _evolution_adjoint(sys, _prepare(sys, Q, []), with_constraints=False)
    return VerificationReport(res, tuple(f"adj[{a}]" for a in sys.dependents),
                              notes=["conditional: Q_t + Q'(g) + g'*(Q) on the constraint surface, C'*(q) omitted"])


# -- factorizations and symmetry actions --------------------------------------


def symmetry_operator(sys: PdeSystem, P) -> LinDiffOp:
    """R_P with G'(P) = R_P(G)."""
    P = _prepare(sys, _vec(P, len(sys.dependents), "symmetry characteristic"), [])
    try:
        return hadamard_factor(frechet(sys.G, P, sys.dependents), sys)
    except ValueError as exc:
        raise ValueError("P is not a symmetry: G'(P) does not factor through G") from exc


def adjoint_operator(sys: PdeSystem, Q) -> tuple[LinDiffOp, str]:
    """R_Q with G'*(Q) = R_Q(G), and a note naming the route taken."""
    Q = _prepare(sys, _vec(Q, len(sys.equations), "adjoint-symmetry candidate"), [])
    lhs = adjoint_frechet(sys.G, Q, sys.dependents)
    if sys.is_evolutionary and not sys.has_constraints:
        R = -frechet_op(Q, sys.dependents)
        if R.apply(sys.G) == lhs:
            return R, "R_Q = -Q' (evolution system)"
    try:
        return hadamard_factor(lhs, sys), "R_Q from factorization of G'*(Q)"
    except ValueError as exc:
        raise ValueError("Q is not an adjoint-symmetry: G'*(Q) does not factor through G") from exc


def _actions(sys: PdeSystem, P, Q):
    P = _prepare(sys, _vec(P, len(sys.dependents), "symmetry characteristic"), [])
    Q = _prepare(sys, _vec(Q, len(sys.equations), "adjoint-symmetry candidate"), [])
    RP = symmetry_operator(sys, P)
    RQ, _ = adjoint_operator(sys, Q)
    qp = frechet(Q, P, sys.dependents)
    rps = RP.adjoint().apply(Q)
    rqs = RQ.adjoint().apply(P)
    return qp, rps, rqs


def action_lie(sys: PdeSystem, P, Q) -> tuple[DiffExpr, ...]:
    """S_P(Q) = Q'(P) + R_P*(Q)."""
    qp, rps, _ = _actions(sys, P, Q)
    return tuple(a + b for a, b in zip(qp, rps))


def action_s1(sys: PdeSystem, P, Q) -> tuple[DiffExpr, ...]:
    """S1_P(Q) = R_P*(Q) - R_Q*(P)."""
    _, rps, rqs = _actions(sys, P, Q)
    return tuple(a - b for a, b in zip(rps, rqs))


def action_s2(sys: PdeSystem, P, Q) -> tuple[DiffExpr, ...]:
    """S2_P(Q) = Q'(P) + R_Q*(P)."""
    qp, _, rqs = _actions(sys, P, Q)
    return tuple(a + b for a, b in zip(qp, rqs))


ACTIONS = {"lie": action_lie, "s1": action_s1, "s2": action_s2}


# -- conservation laws ---------------------------------------------------------


@dataclass
class ConservationLaw:
    current: tuple[DiffExpr, ...]
    independents: tuple[str, ...]
    divergence_on_solutions: DiffExpr
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.divergence_on_solutions.is_zero()


def conservation_current(sys: PdeSystem, P, Q) -> ConservationLaw:
    """Psi^i(P,Q;G) = sum_A (D_K Q_A)(D_J P^a) E^K_{u^a_{iJ}}(G^A)."""
    notes: list[str] = []
    P = _prepare(sys, _vec(P, len(sys.dependents), "symmetry characteristic"), notes)
    Q = _prepare(sys, _vec(Q, len(sys.equations), "adjoint-symmetry candidate"), notes)
    if not symmetry_residual(sys, P).passed:
        notes.append("warning: P fails the symmetry determining equation")
    if not adjoint_residual(sys, Q).passed:
        notes.append("warning: Q fails the adjoint-symmetry determining equation")
    total = [ZERO] * len(sys.independents)
    for G, q in zip(sys.G, Q):
        if not q:
            continue
        part = psi_current(P, q, G, sys.dependents, sys.independents)
        total = [a + b for a, b in zip(total, part)]
    div = reduce_on_solutions(divergence(total, sys.independents), sys)
    return ConservationLaw(tuple(total), sys.independents, div, notes)


def pairing_vanishes(sys: PdeSystem, P, Q) -> VerificationReport:
    """<pr X_P, varpi_Q> on the solution space, moved onto du by parts.

    Computes P^a G'*(Q)_a reduced on the solution space and tests whether it
    is a total divergence.
    """
    notes: list[str] = []
    P = _prepare(sys, _vec(P, len(sys.dependents), "symmetry characteristic"), notes)
    Q = _prepare(sys, _vec(Q, len(sys.equations), "adjoint-symmetry candidate"), notes)
    local = ZERO
    for p, r in zip(P, adjoint_frechet(sys.G, Q, sys.dependents)):
        local = local + p * r
    local = reduce_on_solutions(local, sys)
    test = is_total_divergence(local, sys.dependents, sys.independents)
    notes.append("pairing P^a G'*(Q)_a reduced on the solution space; pass iff a total divergence")
    res = (ZERO,) if test.result else (local,)
    return VerificationReport(res, ("pairing",), notes=notes)


# -- gauge adjoint-symmetries -------------------------------------------------


def gauge_parameters(sys: PdeSystem) -> dict[str, tuple[str, ...]]:
    """Names and arguments of the gauge functions chi_Y(t, x), one per constraint."""
    return {f"chi_{eq.name}": sys.independents for eq in sys.constraints}


def gauge_adjoint_symmetry(sys: PdeSystem, chi=None) -> tuple[DiffExpr, ...]:
    """(Q_a, q_Y) = (C'*(chi)_a, (D_t chi + D*(chi))_Y)."""
    if not sys.has_constraints:
        raise ValueError(f"system {sys.name!r} has no constraints")
    if chi is None:
        chi = tuple(DiffExpr.of(param_var(n, args)) for n, args in gauge_parameters(sys).items())
    chi = _vec(chi, len(sys.constraints), "gauge function tuple")
    D = compatibility_operator(sys)
    Qe = adjoint_frechet(sys.C, chi, sys.dependents)
    Dstar = D.adjoint().apply(chi)
    q = tuple(total_derivative(c, sys.time) + d for c, d in zip(chi, Dstar))
    return Qe + q


def gauge_namespace(sys: PdeSystem) -> Namespace:
    return sys.namespace.with_params(gauge_parameters(sys))
