"""Shared strategies and an independent sympy oracle for the test suite."""

from fractions import Fraction

import sympy as sp
from hypothesis import strategies as st

from jetsym.grammar import Namespace, parse_expr
from jetsym.jet_core import INDEP, JET, DiffExpr, MultiIndex, indep_var, jet_var, param_var

NS1 = Namespace(("t", "x"), ("u",), {"f": ("t",)})
NS2 = Namespace(("x", "y"), ("u", "v"), {})


def p(text, ns=NS1):
    return parse_expr(text, ns)


def to_sympy(e: DiffExpr, ns: Namespace):
    X = {x: sp.Symbol(x) for x in ns.independents}
    args = [X[x] for x in ns.independents]
    out = 0
    for mono, c in e.terms.items():
        term = sp.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for v, k in mono:
            if v.kind == INDEP:
                base = X[v.name]
            elif v.kind == JET:
                base = sp.Function(v.name)(*args)
                for i in v.mi:
                    base = sp.diff(base, X[i])
            else:
                base = sp.Function(v.name)(*[X[a] for a in v.args]) if v.args else sp.Symbol(v.name)
                for i in v.mi:
                    base = sp.diff(base, X[i])
            term = term * base ** k
        out = out + term
    return sp.expand(out)


def sympy_equal(a: DiffExpr, b, ns: Namespace) -> bool:
    rhs = b if isinstance(b, sp.Basic) else to_sympy(b, ns)
    return sp.simplify(sp.expand(to_sympy(a, ns) - rhs)) == 0


def sympy_frechet(f: DiffExpr, F, ns: Namespace):
    """d/de f[u + e F] at e = 0, computed by sympy substitution."""
    X = [sp.Symbol(x) for x in ns.independents]
    eps = sp.Symbol("eps")
    expr = to_sympy(f, ns)
    subs = {sp.Function(a)(*X): sp.Function(a)(*X) + eps * to_sympy(Fa, ns) for a, Fa in zip(ns.dependents, F)}
    shifted = expr.subs(subs).doit()
    return sp.expand(sp.diff(shifted, eps).subs(eps, 0).doit())


def _jet_vars(ns: Namespace, max_order: int):
    out = []
    for a in ns.dependents:
        stack = [MultiIndex()]
        seen = set()
        while stack:
            mi = stack.pop()
            if mi in seen:
                continue
            seen.add(mi)
            out.append(jet_var(a, mi))
            if len(mi) < max_order:
                stack += [mi.add(i) for i in ns.independents]
    return sorted(out)


def exprs(ns: Namespace = NS1, max_order: int = 3, max_terms: int = 4, max_degree: int = 3,
          atoms: bool = True, indeps: bool = True, max_power: int = 2):
    """Random differential polynomials with small integer coefficients."""
    pool = _jet_vars(ns, max_order)
    if indeps:
        pool += [indep_var(x) for x in ns.independents]
    if atoms:
        pool += [param_var(n, args) for n, args in ns.params.items()]
    factor = st.tuples(st.sampled_from(pool), st.integers(1, max_power))
    mono = st.lists(factor, min_size=0, max_size=max_degree)
    term = st.tuples(st.integers(-4, 4).filter(bool), mono)

    def build(terms):
        acc = DiffExpr()
        for c, fs in terms:
            m = DiffExpr.const(c)
            for v, k in fs:
                m = m * DiffExpr.of(v, k)
            acc = acc + m
        return acc

    return st.lists(term, min_size=1, max_size=max_terms).map(build)


def vectors(ns: Namespace = NS1, **kw):
    return st.tuples(*[exprs(ns, **kw) for _ in ns.dependents])


def random_expr(rng, ns: Namespace = NS1, max_order: int = 3, max_terms: int = 4, max_degree: int = 3,
                atoms: bool = True, indeps: bool = True, max_power: int = 2) -> DiffExpr:
    """Seeded counterpart of ``exprs`` for fixed-count loops."""
    pool = _jet_vars(ns, max_order)
    if indeps:
        pool += [indep_var(x) for x in ns.independents]
    if atoms:
        pool += [param_var(n, args) for n, args in ns.params.items()]
    acc = DiffExpr()
    for _ in range(rng.randint(1, max_terms)):
        m = DiffExpr.const(rng.choice([-4, -3, -2, -1, 1, 2, 3, 4]))
        for _ in range(rng.randint(0, max_degree)):
            m = m * DiffExpr.of(rng.choice(pool), rng.randint(1, max_power))
        acc = acc + m
    return acc


def random_op(rng, ns: Namespace = NS2, rows: int = 2, cols: int = 2, max_order: int = 2):
    from jetsym.calculus import LinDiffOp
    mis = [MultiIndex(v.mi) for v in _jet_vars(Namespace(ns.independents, ("w",)), max_order)]
    entries = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            row.append({rng.choice(mis): random_expr(rng, ns, 2, 2) for _ in range(rng.randint(0, 3))})
        entries.append(row)
    return LinDiffOp(entries, cols)
