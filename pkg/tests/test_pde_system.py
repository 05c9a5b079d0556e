import pytest
import sympy as sp
from hypothesis import given, settings

from jetsym.calculus import LinDiffOp, frechet
from jetsym.grammar import Namespace, parse_expr
from jetsym.jet_core import ZERO, DiffExpr, MultiIndex, jet_var, total_derivative
from jetsym.pde_system import (
    Equation,
    PdeSystem,
    check_solution,
    compatibility_operator,
    hadamard_factor,
    reduce_on_solutions,
    split_leading,
)

from support import NS1, exprs, to_sympy

NS = Namespace(("t", "x"), ("u",))


def e(text, ns=NS):
    return parse_expr(text, ns)


@pytest.fixture(scope="module")
def K():
    return PdeSystem.evolutionary("kdv", NS, "t", {"u": e("-u*u_x - u_xxx")})


def test_reduce_examples(K):
    Q = e("t*u - x")
    expr = -total_derivative(Q, "t") - e("u") * total_derivative(Q, "x") - \
        total_derivative(total_derivative(total_derivative(Q, "x"), "x"), "x")
    assert reduce_on_solutions(expr, K) == ZERO
    assert reduce_on_solutions(K.G[0], K) == ZERO
    assert reduce_on_solutions(e("u_tx"), K) == e("-u_x^2 - u*u_xx - u_xxxx")


def test_maxwell_constraint_reduction(maxwell):
    sys, _ = maxwell
    ns = sys.namespace.with_params({"a0x": ()})
    res = reduce_on_solutions(parse_expr("a0x*(E1_x + E2_y + E3_z) + E2_yx + E1_xy", ns), sys)
    assert res == parse_expr("-E3_yz - E2_yy + E2_xy", ns)


@settings(max_examples=60, deadline=None)
@given(exprs(NS1, max_order=3, atoms=False))
def test_reduce_idempotent_and_time_derivative(f):
    K = PdeSystem.evolutionary("kdv", NS, "t", {"u": e("-u*u_x - u_xxx")})
    r = reduce_on_solutions(f, K)
    assert reduce_on_solutions(r, K) == r
    # D_t f on solutions = f_t + f'(g) once f is free of time derivatives
    lhs = reduce_on_solutions(total_derivative(r, "t"), K)
    rhs = reduce_on_solutions(total_derivative(r, "t", include_jet=False) + frechet(r, K.g, K.dependents), K)
    assert lhs == rhs


def test_hadamard_examples(K):
    assert hadamard_factor(K.G[0], K) == LinDiffOp.identity(1)
    R = hadamard_factor(e("u_tx") - total_derivative(e("-u*u_x - u_xxx"), "x"), K)
    assert R == LinDiffOp.total("x")
    P = e("1 - t*u_x")
    R = hadamard_factor(frechet(K.G, (P,), K.dependents), K)
    assert R == LinDiffOp([[{MultiIndex("x"): e("-t")}]])
    with pytest.raises(ValueError):
        hadamard_factor(e("u_x"), K)


@settings(max_examples=60, deadline=None)
@given(exprs(NS1, max_order=3, atoms=False))
def test_hadamard_reproduces_vanishing_expressions(f):
    K = PdeSystem.evolutionary("kdv", NS, "t", {"u": e("-u*u_x - u_xxx")})
    vanishing = f - reduce_on_solutions(f, K)
    R = hadamard_factor(vanishing, K)
    assert R.apply(K.G) == (vanishing,)


def test_hadamard_general_system(vorticity):
    sys, _ = vorticity
    G = sys.G[0]
    target = total_derivative(G, "y") * parse_expr("phi_x", sys.namespace) + G * G
    R = hadamard_factor(target, sys)
    assert R.apply(sys.G) == (target,)


def test_compatibility_examples(maxwell, toy):
    assert compatibility_operator(maxwell[0]).is_zero()
    D = compatibility_operator(toy[0])
    assert D == LinDiffOp.total("x")
    sys = toy[0]
    assert frechet(sys.C, sys.g, sys.dependents) == D.apply(sys.C)
    assert compatibility_operator(PdeSystem.evolutionary("k", NS, "t", {"u": e("u_x")})) == LinDiffOp.zero(0, 0)


def test_incompatible_constraints_rejected():
    sys = PdeSystem.evolutionary("bad", NS, "t", {"u": e("u")}, [("C", e("u_x + u^2"), jet_var("u", "x"))])
    with pytest.raises(ValueError):
        compatibility_operator(sys)


def test_check_solution_examples(kdv, vorticity, K):
    sys, gens = kdv
    assert check_solution(sys, gens.get("similarity").components).is_zero
    vsys, vg = vorticity
    assert check_solution(vsys, vg.get("constant_vorticity").components).is_zero
    res = check_solution(K, {"u": e("x")})
    assert not res.is_zero and res.numerators[0] == e("x")


def test_check_solution_against_sympy():
    ns = Namespace(("t", "x"), ("u",), {"c1": (), "c2": (), "c3": ()})
    K = PdeSystem.evolutionary("kdv", ns, "t", {"u": parse_expr("-u*u_x - u_xxx", ns)})
    cand = (parse_expr("x^2 - c1", ns), parse_expr("t + c3", ns))
    res = check_solution(K, {"u": cand})
    t, x = sp.symbols("t x")
    c1, c3 = sp.symbols("c1 c3")
    u = (x**2 - c1) / (t + c3)
    direct = sp.diff(u, t) + u * sp.diff(u, x) + sp.diff(u, x, 3)
    ours = to_sympy(res.numerators[0], ns) / to_sympy(res.denominators[0], ns)
    assert sp.simplify(ours - direct) == 0


def test_validation():
    with pytest.raises(ValueError):
        PdeSystem.evolutionary("k", NS, "t", {"u": e("u_tx")})
    with pytest.raises(ValueError):
        PdeSystem.evolutionary("k", NS, "t", {"u": e("u")}, [("C", e("u_t"), jet_var("u", "t"))])
    with pytest.raises(ValueError):
        split_leading(Equation("C", e("u_x^2 + u"), jet_var("u", "x")))
    with pytest.raises(ValueError):
        split_leading(Equation("C", e("u*u_x + u"), jet_var("u", "x")))
    gen = PdeSystem.general("g", NS, [("G", e("u_tt - u_xx"), None)])
    with pytest.raises(ValueError):
        reduce_on_solutions(e("u_tt"), gen)


def test_constraint_surface_reduction(toy):
    sys, _ = toy
    assert reduce_on_solutions(e("u_xx + u_t"), sys, constraints_only=True) == e("u_t")
    assert reduce_on_solutions(e("u_xx + u_t"), sys) == ZERO
