import pytest
from hypothesis import given, settings, strategies as st

from jetsym.adjoint_symmetry import (
    ACTIONS,
    action_lie,
    action_s1,
    action_s2,
    adjoint_forms_agree,
    adjoint_operator,
    adjoint_residual,
    conditional_residuals,
    conservation_current,
    constrained_flow_report,
    flow_lie_derivative_form,
    flow_lie_derivative_vec,
    gauge_adjoint_symmetry,
    gauge_parameters,
    pairing_vanishes,
    symmetry_operator,
    symmetry_residual,
)
from jetsym.calculus import LinDiffOp
from jetsym.fileformats import parse_generators_text
from jetsym.grammar import parse_expr
from jetsym.jet_core import PARAM, ZERO, MultiIndex
from jetsym.pde_system import reduce_on_solutions
from jetsym import corpus_path


def vec(gens, name, sys):
    return gens.get(name).vector(sys)


def ex(text, sys):
    return parse_expr(text, sys.namespace)


@pytest.mark.parametrize("name", ["q1", "q2", "q3", "q4"])
def test_kdv_adjoint_pass(kdv, name):
    sys, gens = kdv
    assert adjoint_residual(sys, vec(gens, name, sys)).passed
    assert adjoint_residual(sys, vec(gens, name, sys), form="general").passed


@pytest.mark.parametrize("name,residual", [("bad_x", "u"), ("bad_ux", "-u_x^2")])
def test_kdv_adjoint_fail(kdv, name, residual):
    sys, gens = kdv
    rep = adjoint_residual(sys, vec(gens, name, sys))
    assert not rep.passed and rep.labels == ("adj[u]",)
    assert rep.residual[0] == ex(residual, sys)


def test_kdv_symmetries(kdv):
    sys, gens = kdv
    for name in ("p1", "p2", "p3"):
        assert symmetry_residual(sys, vec(gens, name, sys)).passed, name
    assert not symmetry_residual(sys, vec(gens, "bad_p", sys)).passed
    assert not symmetry_residual(sys, (ex("u", sys),)).passed


def test_flow_examples(kdv, toy):
    sys, _ = kdv
    assert flow_lie_derivative_vec(sys, sys.g).components == (ZERO,)
    assert flow_lie_derivative_vec(sys, (ex("u", sys),)).components == (ex("u*u_x", sys),)
    form = flow_lie_derivative_form(sys, (ex("1", sys),))
    assert form.components.get(("u", MultiIndex()), ZERO) == ZERO
    tsys, tgens = toy
    assert constrained_flow_report(tsys, vec(tgens, "gauge", tsys)).passed
    assert not constrained_flow_report(tsys, vec(tgens, "wrong_sign", tsys)).passed


def test_vorticity_families(vorticity):
    sys, gens = vorticity
    for name in ("q1", "q2", "q3", "q4", "q5"):
        assert adjoint_residual(sys, vec(gens, name, sys)).passed, name
    assert not adjoint_residual(sys, vec(gens, "bad_phix", sys)).passed
    for name in ("px", "pt", "prot", "pf"):
        assert symmetry_residual(sys, vec(gens, name, sys)).passed, name
    with pytest.raises(ValueError):
        adjoint_residual(sys, vec(gens, "q1", sys), form="evolution")


def test_forms_agree_on_corpus(corpus):
    for sys, gens in corpus.values():
        for cand in gens.of_kind("adjoint"):
            if sys.is_evolutionary:
                assert adjoint_forms_agree(sys, cand.vector(sys)), cand.name


def test_maxwell_zeroth_order(maxwell):
    sys, gens = maxwell
    for name in ("zeroth1", "zeroth2", "gauge"):
        Q = vec(gens, name, sys)
        assert adjoint_residual(sys, Q).passed, name
        assert adjoint_residual(sys, Q, form="general").passed, name
    rep = adjoint_residual(sys, vec(gens, "translation_no_q", sys))
    assert not rep.passed
    for name in ("px", "duality"):
        assert symmetry_residual(sys, vec(gens, name, sys)).passed


def test_maxwell_literal_xi_fails_only_in_a5(maxwell):
    # the special conformal data with +t^2 in xi is not a conformal Killing vector
    sys, _ = maxwell
    text = corpus_path("maxwell.gen").read_text().replace("(xx - t^2)", "(xx + t^2)")
    gens = parse_generators_text(text, sys)
    rep = adjoint_residual(sys, gens.get("zeroth1").vector(sys))
    assert not rep.passed
    params = {v.name for r in rep.residual for v in r.variables() if v.kind == PARAM}
    assert params and params <= {"a5x", "a5y", "a5z"}


def test_gauge_family(maxwell, toy):
    sys, gens = maxwell
    assert gauge_parameters(sys) == {"chi_divE": sys.independents, "chi_divB": sys.independents}
    Q = gauge_adjoint_symmetry(sys)
    assert adjoint_residual(sys, Q).passed
    tsys, tgens = toy
    Q = gauge_adjoint_symmetry(tsys)
    assert adjoint_residual(tsys, Q).passed
    ns = tsys.namespace.with_params({"chi_C": ("t", "x")})
    assert Q == (parse_expr("-D[chi_C; x]", ns), parse_expr("D[chi_C; t] - D[chi_C; x]", ns))
    assert adjoint_residual(tsys, vec(tgens, "gauge", tsys)).passed
    assert not adjoint_residual(tsys, vec(tgens, "wrong_sign", tsys)).passed
    with pytest.raises(ValueError):
        gauge_adjoint_symmetry(kdv_sys())


def kdv_sys():
    from jetsym.fileformats import parse_system
    return parse_system(corpus_path("kdv.sys"))


def test_conditional_residuals(toy):
    sys, gens = toy
    # the gauge candidate needs its C'*(q) term; u is adjoint only on u_x = 0
    Q = vec(gens, "gauge", sys)
    assert not conditional_residuals(sys, Q=Q[:1]).passed
    assert conditional_residuals(sys, Q=(ex("u", sys),)).passed
    assert not conditional_residuals(sys, Q=(ex("x", sys),)).passed
    assert conditional_residuals(sys, P=(ex("u_x", sys),)).passed
    with pytest.raises(ValueError):
        conditional_residuals(sys)


def test_operators(kdv):
    sys, gens = kdv
    RP = symmetry_operator(sys, vec(gens, "p2", sys))
    assert RP == LinDiffOp([[{MultiIndex("x"): ex("-t", sys)}]])
    RQ, note = adjoint_operator(sys, vec(gens, "q2", sys))
    assert RQ == LinDiffOp([[{MultiIndex(): ex("-1", sys)}]]) and "evolution" in note
    with pytest.raises(ValueError):
        symmetry_operator(sys, vec(gens, "bad_p", sys))
    with pytest.raises(ValueError):
        adjoint_operator(sys, vec(gens, "bad_x", sys))


def test_action_example(kdv):
    sys, gens = kdv
    P, Q = vec(gens, "p2", sys), vec(gens, "q2", sys)
    assert action_lie(sys, P, Q) == (ex("1", sys),)
    assert action_s1(sys, P, Q) == (ex("1", sys),)
    assert action_s2(sys, P, Q) == (ZERO,)


def test_action_closure_and_sum(corpus):
    for key in ("kdv", "vorticity"):
        sys, gens = corpus[key]
        for p in gens.of_kind("symmetry"):
            for q in gens.of_kind("adjoint"):
                if not (adjoint_residual(sys, q.vector(sys)) and symmetry_residual(sys, p.vector(sys))):
                    continue
                P, Q = p.vector(sys), q.vector(sys)
                out = {k: f(sys, P, Q) for k, f in ACTIONS.items()}
                for k, v in out.items():
                    assert adjoint_residual(sys, v).passed, (key, p.name, q.name, k)
                total = tuple(reduce_on_solutions(a + b - c, sys)
                              for a, b, c in zip(out["s1"], out["s2"], out["lie"]))
                assert all(r.is_zero() for r in total)


@settings(max_examples=25, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5), st.sampled_from(["s1", "s2", "lie"]))
def test_action_linearity(a, b, kind):
    import jetsym.fileformats as ff
    sys = kdv_sys()
    gens = ff.parse_generators(corpus_path("kdv.gen"), sys)
    P = gens.get("p2").vector(sys)
    Q1, Q2 = gens.get("q2").vector(sys), gens.get("q4").vector(sys)
    comb = tuple(x.scale(a) + y.scale(b) for x, y in zip(Q1, Q2))
    f = ACTIONS[kind]
    lhs = f(sys, P, comb)
    rhs = tuple(x.scale(a) + y.scale(b) for x, y in zip(f(sys, P, Q1), f(sys, P, Q2)))
    assert all(reduce_on_solutions(l - r, sys).is_zero() for l, r in zip(lhs, rhs))


def test_conservation_current_example(kdv):
    sys, gens = kdv
    law = conservation_current(sys, vec(gens, "p1", sys), vec(gens, "q1", sys))
    assert law.passed and not any("warning" in n for n in law.notes)
    assert law.current == (ex("u_x", sys), ex("u*u_x + u_xxx", sys))


def test_conservation_corpus(corpus):
    for key in ("kdv", "vorticity", "maxwell"):
        sys, gens = corpus[key]
        for p in gens.of_kind("symmetry"):
            for q in gens.of_kind("adjoint"):
                if adjoint_residual(sys, q.vector(sys)) and symmetry_residual(sys, p.vector(sys)):
                    assert conservation_current(sys, p.vector(sys), q.vector(sys)).passed, (key, p.name, q.name)


def test_conservation_warns_on_bad_input(kdv):
    sys, gens = kdv
    law = conservation_current(sys, vec(gens, "bad_p", sys), vec(gens, "bad_x", sys))
    assert sum("warning" in n for n in law.notes) == 2


def test_pairing(kdv):
    sys, _ = kdv
    assert pairing_vanishes(sys, (ex("u_x", sys),), (ex("x", sys),)).passed
    assert not pairing_vanishes(sys, (ex("u_x", sys),), (ex("u_x", sys),)).passed
    assert pairing_vanishes(sys, (ex("u_x", sys),), (ex("u", sys),)).passed


def test_wrong_arity(kdv):
    sys, _ = kdv
    with pytest.raises(ValueError):
        adjoint_residual(sys, ())
    with pytest.raises(ValueError):
        adjoint_residual(sys, (ex("u", sys),), form="weird")
