"""Total derivatives, Frechet derivatives, Euler operators and their currents.

Vectors indexed by dependent variables are tuples aligned with a ``deps``
sequence; vectors indexed by equations are plain tuples.  Multi-index sums
run over unordered multi-indices.  Where a formula is naturally written as a
sum over ordered index tuples with symmetrized partials, the conversion
weights ``N_J = |J|!/prod(counts!)`` appear explicitly (see ``psi_current``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .jet_core import (
    EMPTY,
    INDEP,
    JET,
    PARAM,
    ONE,
    ZERO,
    DerivativeCache,
    DiffExpr,
    EvOneForm,
    EvVectorField,
    MultiIndex,
    Var,
    as_expr,
    jet_var,
    mi_binomial,
    total_derivative,
    total_derivative_mi,
)

__all__ = [
    "LinDiffOp",
    "total_derivative",
    "frechet",
    "frechet_op",
    "adjoint_frechet",
    "adjoint_op",
    "frechet_second",
    "commutator",
    "euler",
    "euler_higher",
    "gamma_current",
    "psi_current",
    "divergence",
    "is_total_divergence",
    "DivergenceTest",
    "oneform_canonicalize",
    "normal_oneform",
    "functional_pairing",
    "functionally_equal",
]


def _tuple(F) -> tuple[DiffExpr, ...]:
    if isinstance(F, (DiffExpr, int, Fraction, Var)):
        return (as_expr(F),)
    return tuple(as_expr(x) for x in F)


def _sign(n: int) -> int:
    return -1 if n & 1 else 1


def _leibniz(a: DiffExpr, J: MultiIndex) -> dict[MultiIndex, DiffExpr]:
    """D_J o a as sum_K binom(J,K) D_{J-K}(a) D_K."""
    out: dict[MultiIndex, DiffExpr] = {}
    da = DerivativeCache(a)
    for K in J.submultisets():
        c = mi_binomial(J, K)
        term = da(J.minus(K)).scale(c)
        if term:
            out[K] = out.get(K, ZERO) + term
    return out


def _add_entry(acc: dict, part: Mapping[MultiIndex, DiffExpr], scale=1) -> None:
    for K, c in part.items():
        val = acc.get(K, ZERO) + (c.scale(scale) if scale != 1 else c)
        if val:
            acc[K] = val
        else:
            acc.pop(K, None)


class LinDiffOp:
    """Matrix of linear differential operators sum_J a_J D_J.

    ``rows[r][c]`` is a dict MultiIndex -> coefficient.  Applying the operator
    to a column tuple F gives row r = sum_c sum_J a_J D_J F_c.
    """

    __slots__ = ("rows", "shape")

    def __init__(self, rows: Sequence[Sequence[Mapping]], ncols: int | None = None):
        clean = []
        for row in rows:
            clean.append(tuple(
                {MultiIndex(k): as_expr(v) for k, v in entry.items() if as_expr(v)} for entry in row
            ))
        if ncols is None:
            ncols = len(clean[0]) if clean else 0
        if any(len(r) != ncols for r in clean):
            raise ValueError("ragged operator matrix")
        self.rows = tuple(clean)
        self.shape = (len(clean), ncols)

    @staticmethod
    def zero(nrows: int, ncols: int) -> "LinDiffOp":
        return LinDiffOp([[{} for _ in range(ncols)] for _ in range(nrows)], ncols)

    @staticmethod
    def identity(n: int) -> "LinDiffOp":
        return LinDiffOp([[{EMPTY: ONE} if r == c else {} for c in range(n)] for r in range(n)], n)

    @staticmethod
    def total(i: str | Sequence[str]) -> "LinDiffOp":
        mi = MultiIndex((i,) if isinstance(i, str) else i)
        return LinDiffOp([[{mi: ONE}]])

    def entry(self, r: int, c: int) -> dict[MultiIndex, DiffExpr]:
        return self.rows[r][c]

    def order(self) -> int:
        return max((len(K) for row in self.rows for e in row for K in e), default=-1)

    def is_zero(self) -> bool:
        return all(not e for row in self.rows for e in row)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinDiffOp) and self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash(tuple(tuple(frozenset(e.items()) for e in row) for row in self.rows))

    def __add__(self, other: "LinDiffOp") -> "LinDiffOp":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        rows = []
        for ra, rb in zip(self.rows, other.rows):
            row = []
            for ea, eb in zip(ra, rb):
                acc = dict(ea)
                _add_entry(acc, eb)
                row.append(acc)
            rows.append(row)
        return LinDiffOp(rows, self.shape[1])

    def __neg__(self) -> "LinDiffOp":
        return LinDiffOp([[{K: -c for K, c in e.items()} for e in row] for row in self.rows], self.shape[1])

    def __sub__(self, other: "LinDiffOp") -> "LinDiffOp":
        return self + (-other)

    def left_multiply(self, a) -> "LinDiffOp":
        """The operator a o L (multiplication by a after L)."""
        a = as_expr(a)
        return LinDiffOp([[{K: a * c for K, c in e.items()} for e in row] for row in self.rows], self.shape[1])

    def transpose(self) -> "LinDiffOp":
        nr, nc = self.shape
        return LinDiffOp([[self.rows[r][c] for r in range(nr)] for c in range(nc)], nr)

    def apply(self, F) -> tuple[DiffExpr, ...]:
        F = _tuple(F)
        if len(F) != self.shape[1]:
            raise ValueError(f"operator expects {self.shape[1]} components, got {len(F)}")
        caches = [DerivativeCache(f) for f in F]
        out = []
        for row in self.rows:
            acc = ZERO
            for c, entry in enumerate(row):
                for K, a in entry.items():
                    acc = acc + a * caches[c](K)
            out.append(acc)
        return tuple(out)

    __call__ = apply

    def compose(self, other: "LinDiffOp") -> "LinDiffOp":
        """self o other, expanded with the generalized Leibniz rule."""
        if self.shape[1] != other.shape[0]:
            raise ValueError("shape mismatch in composition")
        rows = []
        for r in range(self.shape[0]):
            row = []
            for c in range(other.shape[1]):
                acc: dict = {}
                for k in range(self.shape[1]):
                    for J, a in self.rows[r][k].items():
                        for K, b in other.rows[k][c].items():
                            for M, db in _leibniz(b, J).items():
                                _add_entry(acc, {M + K: a * db})
                row.append(acc)
            rows.append(row)
        return LinDiffOp(rows, other.shape[1])

    def adjoint(self) -> "LinDiffOp":
        """Formal adjoint with matrix transpose:
        (sum_J a_J D_J)* = sum_J (-1)^|J| D_J o a_J."""
        nr, nc = self.shape
        rows = []
        for c in range(nc):
            row = []
            for r in range(nr):
                acc: dict = {}
                for J, a in self.rows[r][c].items():
                    _add_entry(acc, _leibniz(a, J), _sign(len(J)))
                row.append(acc)
            rows.append(row)
        return LinDiffOp(rows, nr)

    def __repr__(self) -> str:
        from .grammar import format_expr

        def fmt(entry):
            if not entry:
                return "0"
            parts = []
            for K in sorted(entry, key=lambda k: (len(k), k)):
                d = "D_" + "".join(K) if K else "1"
                parts.append(f"({format_expr(entry[K])})*{d}" if K else f"({format_expr(entry[K])})")
            return " + ".join(parts)

        return "LinDiffOp[" + "; ".join(" | ".join(fmt(e) for e in row) for row in self.rows) + "]"


def adjoint_op(L: LinDiffOp) -> LinDiffOp:
    return L.adjoint()


def _jet_vars_of(f: DiffExpr, dep: str | None = None) -> list[Var]:
    return sorted(v for v in f.jet_vars() if dep is None or v.name == dep)


def frechet(f, F, deps: Sequence[str]):
    """f'(F) = f_{u^a_I} D_I F^a.  Scalar f gives a DiffExpr, a tuple f a tuple."""
    F = _tuple(F)
    if len(F) != len(deps):
        raise ValueError("direction needs one component per dependent variable")
    index = {a: k for k, a in enumerate(deps)}
    caches = [DerivativeCache(x) for x in F]

    def one(g: DiffExpr) -> DiffExpr:
        acc = ZERO
        for v in _jet_vars_of(g):
            if v.name not in index:
                raise ValueError(f"unknown dependent variable {v.name!r}")
            acc = acc + g.partial(v) * caches[index[v.name]](v.mi)
        return acc

    if isinstance(f, (DiffExpr, int, Fraction, Var)):
        return one(as_expr(f))
    return tuple(one(g) for g in _tuple(f))


def frechet_op(f, deps: Sequence[str]) -> LinDiffOp:
    """The operator f' with entries f^A_{u^a_I} at (A, a, I)."""
    fs = _tuple(f)
    index = {a: k for k, a in enumerate(deps)}
    rows = []
    for g in fs:
        row = [dict() for _ in deps]
        for v in _jet_vars_of(g):
            row[index[v.name]][v.mi] = g.partial(v)
        rows.append(row)
    return LinDiffOp(rows, len(deps))


def adjoint_frechet(f, Q, deps: Sequence[str]) -> tuple[DiffExpr, ...]:
    """f'*(Q)_a = sum_A (-1)^|I| D_I (f^A_{u^a_I} Q_A)."""
    fs, Qs = _tuple(f), _tuple(Q)
    if len(fs) != len(Qs):
        raise ValueError("multiplier needs one component per expression")
    out = []
    for a in deps:
        acc = ZERO
        for g, q in zip(fs, Qs):
            if not q:
                continue
            for v in _jet_vars_of(g, a):
                acc = acc + total_derivative_mi(g.partial(v) * q, v.mi).scale(_sign(v.order))
        out.append(acc)
    return tuple(out)


def frechet_second(f, F1, F2, deps: Sequence[str]) -> DiffExpr:
    """f''(F1, F2) = f_{u^a_I u^b_J} (D_I F1^a)(D_J F2^b)."""
    f = as_expr(f)
    F1, F2 = _tuple(F1), _tuple(F2)
    index = {a: k for k, a in enumerate(deps)}
    c1 = [DerivativeCache(x) for x in F1]
    c2 = [DerivativeCache(x) for x in F2]
    acc = ZERO
    jv = _jet_vars_of(f)
    for v in jv:
        fv = f.partial(v)
        for w in jv:
            fvw = fv.partial(w)
            if fvw:
                acc = acc + fvw * c1[index[v.name]](v.mi) * c2[index[w.name]](w.mi)
    return acc


def commutator(f1, f2, deps: Sequence[str]) -> tuple[DiffExpr, ...]:
    """[f1, f2] = f2'(f1) - f1'(f2)."""
    a, b = _tuple(f1), _tuple(f2)
    if len(a) != len(b) or len(a) != len(deps):
        raise ValueError("commutator needs equal component counts matching the dependents")
    return tuple(x - y for x, y in zip(frechet(b, a, deps), frechet(a, b, deps)))


def _family(e: DiffExpr, name: str) -> list[Var]:
    return sorted(v for v in e.variables() if v.kind in (JET, PARAM) and v.name == name)


def euler(e, dep: str) -> DiffExpr:
    """Variational derivative sum_I (-1)^|I| D_I d/du^a_I.

    ``dep`` may also name a parameter atom, which is then treated as an
    auxiliary dependent variable over its own arguments.
    """
    e = as_expr(e)
    acc = ZERO
    for v in _family(e, dep):
        acc = acc + total_derivative_mi(e.partial(v), v.mi).scale(_sign(v.order))
    return acc


def euler_higher(e, dep: str, I: Iterable[str]) -> DiffExpr:
    """Higher Euler operator sum_J binom(I+J, I) (-1)^|J| D_J d/du^a_{I+J}."""
    e = as_expr(e)
    I = MultiIndex(I)
    acc = ZERO
    for v in _family(e, dep):
        if v.kind != JET or not v.mi.contains(I):
            continue
        J = v.mi.minus(I)
        acc = acc + total_derivative_mi(e.partial(v), J).scale(_sign(len(J)) * mi_binomial(v.mi, I))
    return acc


def _ordered_weight(J: MultiIndex, K: MultiIndex, M: MultiIndex, full: MultiIndex) -> Fraction:
    # conversion of the ordered-index sum over (i, J, K, M) to unordered multi-indices
    return Fraction(J.orderings() * K.orderings() * M.orderings() * comb(len(K) + len(M), len(K)),
                    full.orderings())


def psi_current(F1, F2, f, deps: Sequence[str], independents: Sequence[str]) -> tuple[DiffExpr, ...]:
    """Psi^i(F1, F2; f) with F2 f'(F1) - F1^a f'*(F2)_a = D_i Psi^i.

    Psi^i = (D_K F2)(D_J F1^a) E^K_{u^a_{iJ}}(f) summed over ordered index
    tuples, where E^K_{u^a_L} is the higher Euler operator taken with respect
    to the derivative coordinate u^a_L.  Expanded over unordered multi-indices
    each term carries the weight from ``_ordered_weight`` and the sign
    (-1)^(|K|+|M|) from moving D_K onto F2 and D_M onto f_{u^a_{iJKM}}.
    """
    f = as_expr(f)
    F1 = _tuple(F1)
    F2 = as_expr(F2)
    index = {a: k for k, a in enumerate(deps)}
    c1 = [DerivativeCache(x) for x in F1]
    c2 = DerivativeCache(F2)
    out = {i: ZERO for i in independents}
    if not F2:
        return tuple(out.values())
    for v in _jet_vars_of(f):
        if not v.mi:
            continue
        fv = DerivativeCache(f.partial(v))
        L = v.mi
        for i in sorted(set(L)):
            if i not in out:
                raise ValueError(f"derivative in unknown direction {i!r}")
            R = L.minus((i,))
            acc = ZERO
            for J in R.submultisets():
                dJ = c1[index[v.name]](J)
                if not dJ:
                    continue
                R2 = R.minus(J)
                for K in R2.submultisets():
                    dK = c2(K)
                    if not dK:
                        continue
                    M = R2.minus(K)
                    w = _ordered_weight(J, K, M, L) * _sign(len(K) + len(M))
                    acc = acc + (dK * dJ * fv(M)).scale(w)
            out[i] = out[i] + acc
    return tuple(out[i] for i in independents)


def gamma_current(F, f, deps: Sequence[str], independents: Sequence[str]) -> tuple[DiffExpr, ...]:
    """Gamma^i(F; f) = (D_J F^a) E_{u^a_{iJ}}(f), so f'(F) = F^a E_{u^a}(f) + D_i Gamma^i."""
    return psi_current(F, ONE, f, deps, independents)


def divergence(fluxes: Sequence, independents: Sequence[str]) -> DiffExpr:
    acc = ZERO
    for Fi, i in zip(fluxes, independents):
        acc = acc + total_derivative(as_expr(Fi), i)
    return acc


@dataclass(frozen=True)
class DivergenceTest:
    result: bool
    fluxes: tuple[DiffExpr, ...] | None = None

    def __bool__(self) -> bool:
        return self.result


def _free_direction(mono, independents: Sequence[str]) -> str | None:
    """First independent on which no factor of a jet-free monomial depends
    through a parameter atom."""
    used: set[str] = set()
    for v, _ in mono:
        if v.kind == PARAM:
            used.update(v.args)
    for x in independents:
        if x not in used:
            return x
    return None


def _integrate_in(mono, c, x: str) -> DiffExpr:
    d = dict(mono)
    from .jet_core import indep_var

    xv = indep_var(x)
    p = d.get(xv, 0)
    d[xv] = p + 1
    return DiffExpr({tuple(sorted(d.items())): Fraction(c) / (p + 1)})


def _greedy_fluxes(e: DiffExpr, independents: Sequence[str], cap: int = 400) -> dict[str, DiffExpr] | None:
    """Iterated integration by parts on the top derivative variable."""
    flux = {i: ZERO for i in independents}
    rest = e
    for _ in range(cap):
        if not rest:
            return flux
        jet_free = {m: c for m, c in rest.terms.items()
                    if not any(v.kind == JET or (v.kind == PARAM and v.order) for v, _ in m)}
        moved = False
        for m, c in jet_free.items():
            x = _free_direction(m, independents)
            if x is not None:
                F = _integrate_in(m, c, x)
                flux[x] = flux[x] + F
                rest = rest - total_derivative(F, x)
                moved = True
                break
        if moved:
            continue
        cands = [v for v in rest.variables() if v.kind in (JET, PARAM) and v.order > 0]
        if not cands:
            return None
        v = max(cands, key=lambda w: (w.order, w))
        mono, c = next((m, c) for m, c in rest.sorted_terms() if any(w == v for w, _ in m))
        d = dict(mono)
        if d[v] != 1:
            return None
        del d[v]
        j = v.mi[0]
        w = v._replace(order=v.order - 1, mi=v.mi.minus((j,)))
        q = d.pop(w, 0)
        A = DiffExpr({tuple(sorted(d.items())): 1})
        F = (A * DiffExpr.of(w, q + 1)).scale(Fraction(c) / (q + 1))
        if j not in flux:
            return None
        flux[j] = flux[j] + F
        rest = rest - total_derivative(F, j)
    return None


def is_total_divergence(e, deps: Sequence[str], independents: Sequence[str], witness: bool = False) -> DivergenceTest:
    """Decide whether e = D_i F^i for differential polynomials F^i.

    All Euler images in the dependent variables must vanish.  The jet-free
    remainder is a divergence monomial by monomial when some independent is
    absent from every atom argument list (polynomial integration in that
    direction); what is left must be annihilated by the Euler operators in
    the parameter atoms, viewed as dependent variables over their arguments.
    """
    e = as_expr(e)
    names = set(deps) | {v.name for v in e.jet_vars()}
    for a in sorted(names):
        if euler(e, a):
            return DivergenceTest(False)
    leftover = {}
    for m, c in e.terms.items():
        if any(v.kind == JET for v, _ in m):
            continue
        if _free_direction(m, independents) is None:
            leftover[m] = c
    left = DiffExpr(leftover)
    for p in sorted({v.name for v in left.param_vars()}):
        if euler(left, p):
            return DivergenceTest(False)
    fluxes = None
    if witness:
        got = _greedy_fluxes(e, independents)
        if got is not None:
            fl = tuple(got[i] for i in independents)
            if divergence(fl, independents) == e:
                fluxes = fl
    return DivergenceTest(True, fluxes)


def oneform_canonicalize(omega: EvOneForm) -> EvOneForm:
    """Move every component onto du^a: Q_a^I du^a_I -> (-1)^|I| D_I(Q_a^I) du^a."""
    acc: dict[str, DiffExpr] = {}
    for (a, I), q in omega.components.items():
        acc[a] = acc.get(a, ZERO) + total_derivative_mi(q, I).scale(_sign(len(I)))
    return EvOneForm({(a, EMPTY): q for a, q in acc.items()})


def normal_oneform(G, Q) -> EvOneForm:
    """The 1-form Q_A dG^A = Q_A (G^A)_{u^a_I} du^a_I."""
    acc: dict = {}
    for g, q in zip(_tuple(G), _tuple(Q)):
        if not q:
            continue
        for v in _jet_vars_of(g):
            key = (v.name, v.mi)
            acc[key] = acc.get(key, ZERO) + q * g.partial(v)
    return EvOneForm(acc)


def functional_pairing(X: EvVectorField, omega: EvOneForm) -> DiffExpr:
    """Local form P^a Q_a of the pairing, after moving omega onto du^a."""
    canon = oneform_canonicalize(omega).components
    acc = ZERO
    for a, p in zip(X.deps, X.components):
        q = canon.get((a, EMPTY))
        if q is not None:
            acc = acc + p * q
    return acc


def functionally_equal(e1, e2, deps: Sequence[str], independents: Sequence[str]) -> bool:
    return bool(is_total_divergence(as_expr(e1) - as_expr(e2), deps, independents))
