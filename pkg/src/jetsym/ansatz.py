"""Linear ansatz search for symmetries and adjoint-symmetries."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from .adjoint_symmetry import adjoint_residual, symmetry_residual
from .jet_core import ONE, ZERO, DiffExpr, MultiIndex, _mono_key, indep_var, jet_var
from .pde_system import PdeSystem

KINDS = ("adjoint", "symmetry")


@dataclass(frozen=True)
class Ansatz:
    """Candidate components are sums of ``basis`` monomials with unknown
    rational coefficients, one unknown per (component, monomial)."""

    basis: tuple[DiffExpr, ...]
    kind: str = "adjoint"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"ansatz kind must be one of {KINDS}")
        seen = set()
        for m in self.basis:
            if len(m) != 1:
                raise ValueError(f"basis element {m} is not a single monomial")
            if m in seen:
                raise ValueError(f"duplicate basis monomial {m}")
            seen.add(m)

    def unknowns(self, ncomp: int) -> list[tuple[int, int]]:
        return [(j, k) for j in range(ncomp) for k in range(len(self.basis))]


def _monomials(vars_: Sequence[DiffExpr], degree: int) -> list[DiffExpr]:
    out = [ONE]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(vars_, d):
            m = ONE
            for v in combo:
                m = m * v
            out.append(m)
    return out


def _jet_multi_indices(names: Sequence[str], order: int) -> list[MultiIndex]:
    out = [MultiIndex()]
    for k in range(1, order + 1):
        out += [MultiIndex(c) for c in combinations_with_replacement(names, k)]
    return out


def generate_basis(sys: PdeSystem, max_jet_order: int, max_poly_degree: int, independents_degree: int,
                   kind: str = "adjoint") -> Ansatz:
    """Products (independent monomial of total degree <= independents_degree)
    x (jet monomial of degree <= max_poly_degree in derivatives of order
    <= max_jet_order).  Time derivatives are left out for evolution systems,
    since they are eliminated on solutions anyway."""
    if min(max_jet_order, max_poly_degree, independents_degree) < 0:
        raise ValueError("ansatz bounds must be nonnegative")
    names = sys.spatial if sys.is_evolutionary else sys.independents
    jets = [DiffExpr.of(jet_var(a, mi)) for a in sys.dependents for mi in _jet_multi_indices(names, max_jet_order)]
    indeps = [DiffExpr.of(indep_var(x)) for x in sys.independents]
    basis = [i * j for i in _monomials(indeps, independents_degree) for j in _monomials(jets, max_poly_degree)]
    basis.sort(key=lambda m: (m.degree(), _mono_key(next(iter(m.terms)))))
    return Ansatz(tuple(basis), kind)


def rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals and its pivot columns."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of the kernel, returned itself in reduced row echelon form."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    vecs = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        vecs.append(v)
    if not vecs:
        return []
    basis, _ = rref(vecs, ncols)
    return basis


def _residual_of(sys: PdeSystem, kind: str, cand: tuple[DiffExpr, ...]) -> tuple[DiffExpr, ...]:
    if kind == "adjoint":
        return adjoint_residual(sys, cand).residual
    return symmetry_residual(sys, cand).residual


def determining_matrix(sys: PdeSystem, ansatz: Ansatz) -> tuple[list[list[Fraction]], list[tuple[int, int]]]:
    ncomp = len(sys.equations) if ansatz.kind == "adjoint" else len(sys.dependents)
    unknowns = ansatz.unknowns(ncomp)
    columns = []
    for j, k in unknowns:
        cand = tuple(ansatz.basis[k] if i == j else ZERO for i in range(ncomp))
        columns.append(_residual_of(sys, ansatz.kind, cand))
    keys = sorted({(r, mono) for col in columns for r, e in enumerate(col) for mono in e.terms},
                  key=lambda rm: (rm[0], _mono_key(rm[1])))
    index = {key: n for n, key in enumerate(keys)}
    rows = [[Fraction(0)] * len(unknowns) for _ in keys]
    for c, col in enumerate(columns):
        for r, e in enumerate(col):
            for mono, coeff in e.terms.items():
                rows[index[(r, mono)]][c] = Fraction(coeff)
    return rows, unknowns


def solve_determining(sys: PdeSystem, ansatz: Ansatz) -> list[tuple[DiffExpr, ...]]:
    """Basis of all candidates in the ansatz span that pass the residual check."""
    if not ansatz.basis:
        raise ValueError("empty ansatz")
    rows, unknowns = determining_matrix(sys, ansatz)
    ncomp = len(sys.equations) if ansatz.kind == "adjoint" else len(sys.dependents)
    out = []
    for vec in nullspace(rows, len(unknowns)):
        comps = [ZERO] * ncomp
        for (j, k), c in zip(unknowns, vec):
            if c:
                comps[j] = comps[j] + ansatz.basis[k].scale(c)
        cand = tuple(comps)
        if any(not r.is_zero() for r in _residual_of(sys, ansatz.kind, cand)):
            raise AssertionError("solution fails the residual check")
        out.append(cand)
    return out


def in_span(vectors: Sequence[Sequence[DiffExpr]], target: Sequence[DiffExpr]) -> bool:
    """Exact membership of target in the rational span of vectors."""
    keys = sorted({(j, mono) for v in list(vectors) + [target] for j, e in enumerate(v) for mono in e.terms},
                  key=lambda jm: (jm[0], _mono_key(jm[1])))
    def coords(v):
        return [Fraction(v[j].terms.get(mono, 0)) if j < len(v) else Fraction(0) for j, mono in keys]
    cols = [coords(v) for v in vectors]
    t = coords(target)
    n = len(cols)
    rows = [[c[i] for c in cols] + [t[i]] for i in range(len(keys))]
    red, pivots = rref(rows, n + 1)
    return n not in pivots
