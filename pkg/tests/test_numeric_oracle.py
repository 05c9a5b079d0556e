from fractions import Fraction

import pytest
from hypothesis import given, settings

from jetsym.calculus import frechet
from jetsym.grammar import parse_expr
from jetsym.jet_core import indep_var, jet_var
from jetsym.numeric_oracle import (
    JetPoint,
    eval_exact,
    evaluate,
    fd_frechet_check,
    frechet_point,
    random_point,
    relative_gap,
)

from support import NS1, exprs, p


def test_eval_examples():
    pt = JetPoint({jet_var("u"): Fraction(2), jet_var("u", "x"): Fraction(3), indep_var("x"): Fraction(-1)})
    assert eval_exact(p("u*u_x"), pt) == 6
    assert eval_exact(p("x*u_x"), pt) == -3
    assert evaluate(p("u_x"), pt) == 3.0
    with pytest.raises(KeyError, match="does not cover"):
        evaluate(p("u_xx"), pt)


def test_fd_examples():
    f, F = p("u^3"), (p("u_x"),)
    pt = frechet_point(f, F, ("u",), seed=1)
    assert fd_frechet_check(f, F, pt, deps=("u",)) < 1e-9
    with pytest.raises(ValueError):
        fd_frechet_check(f, F, pt, h=0)
    with pytest.raises(ValueError):
        fd_frechet_check(f, F, pt, h=-1e-3)


def test_fd_detects_wrong_derivative():
    # compare against a deliberately wrong symbolic value
    f, F = p("u*u_xx"), (p("u"),)
    pt = frechet_point(f, F, ("u",), seed=2)
    good = evaluate(frechet(f, F, ("u",)), pt)
    assert relative_gap(frechet(f, F, ("u",)), frechet(f, F, ("u",)), pt) == 0
    assert good != 0
    assert relative_gap(p("u*u_xx"), frechet(f, F, ("u",)), pt) > 1e-3


def test_random_point_seeded():
    e = p("u*u_xx + t*x")
    a, b = random_point([e], seed=5), random_point([e], seed=5)
    assert a.values == b.values
    assert a.covers(e)
    for v in a.values.values():
        assert v != 0 and abs(v.numerator) <= 9 and v.denominator <= 9


@settings(max_examples=100, deadline=None)
@given(exprs(NS1, max_order=3, atoms=False), exprs(NS1, max_order=3, max_degree=1, atoms=False, max_power=1))
def test_fd_agrees_with_symbolic(f, F):
    # truncation error grows like h^2 |F|^2, so directions are kept linear
    pt = frechet_point(f, (F,), ("u",), seed=0)
    assert fd_frechet_check(f, (F,), pt, deps=("u",)) < 1e-6
