"""Exact differential polynomials on finite jet spaces.

A differential polynomial is a finite sum of monomials with exact rational
coefficients.  Each monomial is a product of powers of *variables*, which come
in three kinds:

  jet variables      u^alpha_I   (dependent variable plus derivative multi-index)
  independents       x^i
  parameter atoms    f_I(args)   (opaque functions of a subset of independents)

Storage::

    DiffExpr  =  {Monomial: coefficient}
    Monomial  =  ((Var, exponent), ...)     sorted by Var
    Var       =  (kind, name, order, MultiIndex, args)

The tuple layout of ``Var`` makes the natural tuple ordering the canonical
variable ordering: jet variables first (by dependent name, then graded by
derivative order, then lexicographic in the multi-index), then independents,
then parameter atoms.  The zero polynomial is the empty dict.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

JET, INDEP, PARAM = 0, 1, 2

Number = Union[int, Fraction]


class MultiIndex(tuple):
    """Unordered multiset of independent-variable names, stored sorted."""

    __slots__ = ()

    def __new__(cls, items: Iterable[str] = ()):
        return super().__new__(cls, sorted(items))

    @property
    def order(self) -> int:
        return len(self)

    def counts(self) -> dict[str, int]:
        return dict(Counter(self))

    def __add__(self, other) -> "MultiIndex":
        return MultiIndex(tuple.__add__(self, tuple(other)))

    def add(self, name: str) -> "MultiIndex":
        return MultiIndex(tuple.__add__(self, (name,)))

    def contains(self, sub: Sequence[str]) -> bool:
        mine = Counter(self)
        return all(mine[k] >= v for k, v in Counter(sub).items())

    def minus(self, sub: Sequence[str]) -> "MultiIndex":
        rest = Counter(self)
        rest.subtract(Counter(sub))
        if any(v < 0 for v in rest.values()):
            raise ValueError(f"{tuple(sub)} is not a sub-multiset of {tuple(self)}")
        return MultiIndex(rest.elements())

    def submultisets(self) -> Iterator["MultiIndex"]:
        """All distinct sub-multisets, including the empty one and self."""
        items = sorted(Counter(self).items())
        names = [k for k, _ in items]
        for picks in product(*(range(c + 1) for _, c in items)):
            yield MultiIndex(n for n, k in zip(names, picks) for _ in range(k))

    def orderings(self) -> int:
        """Number of distinct orderings of the multiset (multinomial count)."""
        out = factorial(len(self))
        for c in Counter(self).values():
            out //= factorial(c)
        return out

    def __repr__(self) -> str:
        return "MultiIndex(" + ",".join(self) + ")"


EMPTY = MultiIndex()


def mi_binomial(big: Sequence[str], small: Sequence[str]) -> int:
    """Product over variables of binomial(count in big, count in small).

    Zero when ``small`` is not a sub-multiset of ``big``.
    """
    cb, cs = Counter(big), Counter(small)
    out = 1
    for k, v in cs.items():
        if cb[k] < v:
            return 0
        out *= comb(cb[k], v)
    return out


class Var(NamedTuple):
    kind: int
    name: str
    order: int
    mi: MultiIndex
    args: tuple

    @property
    def is_jet(self) -> bool:
        return self.kind == JET

    def __repr__(self) -> str:
        if self.kind == INDEP:
            return self.name
        if self.kind == JET:
            return f"{self.name}_{''.join(self.mi)}" if self.mi else self.name
        return f"D[{self.name};{','.join(self.mi)}]" if self.mi else f"{self.name}({','.join(self.args)})"


def jet_var(dep: str, mi: Iterable[str] = ()) -> Var:
    m = mi if isinstance(mi, MultiIndex) else MultiIndex(mi)
    return Var(JET, dep, len(m), m, ())


def indep_var(name: str) -> Var:
    return Var(INDEP, name, 0, EMPTY, ())


def param_var(name: str, args: Iterable[str] = (), mi: Iterable[str] = ()) -> Var:
    m = mi if isinstance(mi, MultiIndex) else MultiIndex(mi)
    return Var(PARAM, name, len(m), m, tuple(args))


def var_derivative(v: Var, i: str) -> Var | None:
    """Derivative variable of ``v`` in direction ``i``; None for independents."""
    if v.kind == JET:
        return Var(JET, v.name, v.order + 1, v.mi.add(i), ())
    if v.kind == PARAM:
        if i not in v.args:
            return None
        return Var(PARAM, v.name, v.order + 1, v.mi.add(i), v.args)
    return None


Monomial = tuple


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_key(m: Monomial):
    # printing/storage order: high degree first, then variable order
    return (-sum(e for _, e in m), m)


class DiffExpr:
    """Immutable canonical differential polynomial."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None, _clean: bool = False):
        if terms is None:
            self._terms = {}
        elif _clean:
            self._terms = terms
        else:
            self._terms = {m: c for m, c in terms.items() if c != 0}
        self._hash = None

    # -- constructors -------------------------------------------------------
    @staticmethod
    def const(c: Number) -> "DiffExpr":
        c = Fraction(c)
        return DiffExpr({(): c}) if c else ZERO

    @staticmethod
    def of(v: Var, power: int = 1) -> "DiffExpr":
        if power == 0:
            return ONE
        return DiffExpr({((v, power),): 1}, _clean=True)

    @staticmethod
    def lift(x) -> "DiffExpr":
        if isinstance(x, DiffExpr):
            return x
        if isinstance(x, Var):
            return DiffExpr.of(x)
        if isinstance(x, (int, Fraction)):
            return DiffExpr.const(x)
        raise TypeError(f"cannot convert {type(x).__name__} to DiffExpr")

    # -- structure ----------------------------------------------------------
    @property
    def terms(self) -> dict:
        return self._terms

    def sorted_terms(self) -> list[tuple[Monomial, Number]]:
        return sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def variables(self) -> set[Var]:
        return {v for m in self._terms for v, _ in m}

    def jet_vars(self) -> set[Var]:
        return {v for v in self.variables() if v.kind == JET}

    def param_vars(self) -> set[Var]:
        return {v for v in self.variables() if v.kind == PARAM}

    def has_jet(self) -> bool:
        return any(v.kind == JET for m in self._terms for v, _ in m)

    def order(self) -> int:
        """Maximal derivative order over the jet variables (-1 if none)."""
        return max((v.order for v in self.jet_vars()), default=-1)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def constant_value(self) -> Fraction | None:
        """The value if this is a constant, else None."""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and () in self._terms:
            return Fraction(self._terms[()])
        return None

    def coefficient_of(self, v: Var) -> tuple["DiffExpr", "DiffExpr"]:
        """Split self = coeff * v + rest with rest free of v, if self is linear in v."""
        lin, rest = {}, {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(v, 0)
            if e == 0:
                rest[m] = c
            elif e == 1:
                del d[v]
                lin[tuple(sorted(d.items()))] = c
            else:
                raise ValueError(f"{v!r} occurs nonlinearly")
        return DiffExpr(lin, _clean=True), DiffExpr(rest, _clean=True)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "DiffExpr":
        other = DiffExpr.lift(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return DiffExpr(out, _clean=True)

    __radd__ = __add__

    def __neg__(self) -> "DiffExpr":
        return DiffExpr({m: -c for m, c in self._terms.items()}, _clean=True)

    def __sub__(self, other) -> "DiffExpr":
        return self + (-DiffExpr.lift(other))

    def __rsub__(self, other) -> "DiffExpr":
        return DiffExpr.lift(other) - self

    def scale(self, c: Number) -> "DiffExpr":
        if c == 0:
            return ZERO
        if c == 1:
            return self
        return DiffExpr({m: v * c for m, v in self._terms.items()}, _clean=True)

    def __mul__(self, other) -> "DiffExpr":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = DiffExpr.lift(other)
        if not self._terms or not other._terms:
            return ZERO
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return DiffExpr(out, _clean=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DiffExpr":
        c = DiffExpr.lift(other).constant_value() if not isinstance(other, (int, Fraction)) else Fraction(other)
        if c is None:
            raise ValueError("division by a non-constant expression")
        if c == 0:
            raise ZeroDivisionError("division by zero")
        return self.scale(Fraction(1) / c)

    def __pow__(self, n: int) -> "DiffExpr":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Var)):
            other = DiffExpr.lift(other)
        if not isinstance(other, DiffExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        from .grammar import format_expr

        return f"DiffExpr({format_expr(self)})"

    def __str__(self) -> str:
        from .grammar import format_expr

        return format_expr(self)

    # -- differentiation ----------------------------------------------------
    def partial(self, v: Var) -> "DiffExpr":
        """Partial derivative with respect to a single variable."""
        out: dict = {}
        for m, c in self._terms.items():
            for k, (w, e) in enumerate(m):
                if w == v:
                    nm = m[:k] + ((w, e - 1),) + m[k + 1:] if e > 1 else m[:k] + m[k + 1:]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return DiffExpr(out)

    def map_terms(self, fn) -> "DiffExpr":
        """Sum of c * fn(monomial) over all terms; fn returns a DiffExpr."""
        acc: dict = {}
        for m, c in self._terms.items():
            for m2, c2 in fn(m)._terms.items():
                acc[m2] = acc.get(m2, 0) + c * c2
        return DiffExpr(acc)


ZERO = DiffExpr()
ONE = DiffExpr({(): Fraction(1)}, _clean=True)


def as_expr(x) -> DiffExpr:
    return DiffExpr.lift(x)


@lru_cache(maxsize=200_000)
def _mono_total_derivative(m: Monomial, i: str, include_jet: bool) -> DiffExpr:
    out: dict = {}
    for k, (v, e) in enumerate(m):
        if v.kind == INDEP:
            if v.name != i:
                continue
            rest = m[:k] + ((v, e - 1),) + m[k + 1:] if e > 1 else m[:k] + m[k + 1:]
            out[rest] = out.get(rest, 0) + e
            continue
        if v.kind == JET and not include_jet:
            continue
        dv = var_derivative(v, i)
        if dv is None:
            continue
        rest = m[:k] + ((v, e - 1),) + m[k + 1:] if e > 1 else m[:k] + m[k + 1:]
        nm = _mono_mul(rest, ((dv, 1),))
        out[nm] = out.get(nm, 0) + e
    return DiffExpr(out)


def total_derivative(e: DiffExpr, i: str, include_jet: bool = True) -> DiffExpr:
    """D_i e.  With ``include_jet=False`` only the explicit dependence on
    independents and parameter atoms is differentiated (the partial d/dx^i)."""
    if not e._terms:
        return ZERO
    return e.map_terms(lambda m: _mono_total_derivative(m, i, include_jet))


def total_derivative_mi(e: DiffExpr, mi: Iterable[str]) -> DiffExpr:
    for i in mi:
        e = total_derivative(e, i)
    return e


class DerivativeCache:
    """Memoized D_J F for a fixed expression F."""

    def __init__(self, base: DiffExpr):
        self._cache: dict[MultiIndex, DiffExpr] = {EMPTY: base}

    def __call__(self, mi: Sequence[str]) -> DiffExpr:
        mi = mi if isinstance(mi, MultiIndex) else MultiIndex(mi)
        got = self._cache.get(mi)
        if got is None:
            last = mi[-1]
            got = total_derivative(self(mi.minus((last,))), last)
            self._cache[mi] = got
        return got


def expr_normalize(tree) -> DiffExpr:
    """Canonical DiffExpr for a raw expression tree.

    The tree is either a leaf (number, Var, DiffExpr) or a tuple
    ``(op, *children)`` with op in ``+ - * / ^ neg``.  Division is only
    permitted by constants.  Normalizing a canonical form returns it unchanged.
    """
    if isinstance(tree, (DiffExpr, Var, int, Fraction)):
        return DiffExpr.lift(tree)
    op, *kids = tree
    if op == "neg":
        return -expr_normalize(kids[0])
    if op == "^":
        n = kids[1]
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer literal")
        return expr_normalize(kids[0]) ** n
    vals = [expr_normalize(k) for k in kids]
    if op == "+":
        out = ZERO
        for v in vals:
            out = out + v
        return out
    if op == "-":
        out = vals[0]
        for v in vals[1:]:
            out = out - v
        return out
    if op == "*":
        out = ONE
        for v in vals:
            out = out * v
        return out
    if op == "/":
        out = vals[0]
        for v in vals[1:]:
            out = out / v
        return out
    raise ValueError(f"unknown operator {op!r}")


def _rule_matches(base: Var, v: Var) -> bool:
    return v.kind == JET and v.name == base.name and v.mi.contains(base.mi)


class Substitution:
    """Exhaustive replacement of jet variables by expressions.

    With ``prolong`` set, a rule for u^a_L also replaces every u^a_K with
    L a sub-multiset of K, by D_{K-L} of the replacement; the result is then
    reduced again until no rule-matching variable remains.
    """

    def __init__(self, rules: Mapping[Var, DiffExpr] | Sequence[tuple[Var, DiffExpr]], prolong: bool = False):
        items = list(rules.items()) if isinstance(rules, Mapping) else list(rules)
        self.rules: list[tuple[Var, DiffExpr]] = [(b, DiffExpr.lift(r)) for b, r in items]
        self.prolong = prolong
        for base, rhs in self.rules:
            if base.kind != JET:
                raise ValueError(f"rules must be given for jet variables, got {base!r}")
            for v in rhs.jet_vars():
                if v == base or (prolong and _rule_matches(base, v)):
                    raise ValueError(
                        f"non-terminating rule set: replacement for {base!r} contains {v!r}")
        self._image: dict[Var, DiffExpr | None] = {}
        self._busy: set[Var] = set()
        self._pow: dict[tuple[Var, int], DiffExpr] = {}

    def match(self, v: Var) -> int | None:
        """Index of the first rule acting on ``v``, or None."""
        for k, (base, _) in enumerate(self.rules):
            if base == v or (self.prolong and _rule_matches(base, v)):
                return k
        return None

    def image(self, v: Var) -> DiffExpr | None:
        """Fully reduced replacement of ``v``; None when no rule applies."""
        if v in self._image:
            return self._image[v]
        k = self.match(v) if v.kind == JET else None
        if k is None:
            self._image[v] = None
            return None
        if v in self._busy:
            raise ValueError(f"non-terminating rule set at {v!r}")
        self._busy.add(v)
        try:
            if len(self._busy) > 2000:
                raise ValueError("rule set does not terminate")
            base, rhs = self.rules[k]
            if v == base:
                out = self.apply(rhs)
            else:
                j = v.mi.minus(base.mi)[-1]
                w = jet_var(v.name, v.mi.minus((j,)))
                wi = self.image(w)
                out = self.apply(total_derivative(wi if wi is not None else DiffExpr.of(w), j))
        finally:
            self._busy.discard(v)
        self._image[v] = out
        return out

    def _power(self, v: Var, e: int) -> DiffExpr | None:
        key = (v, e)
        if key not in self._pow:
            img = self.image(v)
            self._pow[key] = None if img is None else img ** e
        return self._pow[key]

    def apply(self, e: DiffExpr) -> DiffExpr:
        if not e._terms:
            return e
        if not any(self.image(v) is not None for v in e.jet_vars()):
            return e
        acc: dict = {}
        for m, c in e._terms.items():
            keep: list = []
            factors: list[DiffExpr] = []
            for v, p in m:
                img = self._power(v, p) if v.kind == JET else None
                if img is None:
                    keep.append((v, p))
                else:
                    factors.append(img)
            term = DiffExpr({tuple(keep): c}, _clean=True)
            for f in factors:
                term = term * f
                if not term:
                    break
            for m2, c2 in term._terms.items():
                s = acc.get(m2, 0) + c2
                if s:
                    acc[m2] = s
                else:
                    del acc[m2]
        return DiffExpr(acc, _clean=True)


def substitute(e: DiffExpr, rules: Mapping[Var, DiffExpr], prolong: bool = False) -> DiffExpr:
    return Substitution(rules, prolong).apply(DiffExpr.lift(e))


@dataclass(frozen=True)
class EvVectorField:
    """Evolutionary vector field P^a d/du^a; components aligned with ``deps``."""

    deps: tuple[str, ...]
    components: tuple[DiffExpr, ...]

    def __post_init__(self):
        if len(self.deps) != len(self.components):
            raise ValueError("one component per dependent variable is required")


@dataclass(frozen=True)
class EvOneForm:
    """Evolutionary 1-form Q_a^I du^a_I, keyed by (dependent, MultiIndex)."""

    components: Mapping[tuple[str, MultiIndex], DiffExpr] = field(default_factory=dict)

    def __post_init__(self):
        clean = {(a, MultiIndex(mi)): DiffExpr.lift(q) for (a, mi), q in self.components.items()}
        object.__setattr__(self, "components", {k: v for k, v in clean.items() if v})

    def __eq__(self, other) -> bool:
        return isinstance(other, EvOneForm) and self.components == other.components

    def __hash__(self) -> int:
        return hash(frozenset(self.components.items()))


def to_evolutionary_form(
    independents: Sequence[str],
    deps: Sequence[str],
    base_components: Sequence,
    vertical_components: Sequence,
) -> EvVectorField:
    """Evolutionary form P^a - P^i u^a_i of a point vector field."""
    if len(base_components) != len(independents):
        raise ValueError("one base component per independent variable is required")
    out = []
    for a, pa in zip(deps, vertical_components):
        val = DiffExpr.lift(pa)
        for x, pi in zip(independents, base_components):
            val = val - DiffExpr.lift(pi) * DiffExpr.of(jet_var(a, (x,)))
        out.append(val)
    return EvVectorField(tuple(deps), tuple(out))
