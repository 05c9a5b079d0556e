"""Expression grammar shared by every file format.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' INT)?
    atom    := INT | '(' expr ')' | 'D' '[' NAME ';' NAME (',' NAME)* ']'
             | NAME | NAME '(' [NAME (',' NAME)*] ')'

``D[u; x,x,t]`` is u_{xxt}.  When every independent variable is a single
character the subscript shorthand ``u_xxt`` is accepted as well.  Parameter
atoms must be declared in the namespace; they are written ``f(t)`` (or
``f`` alone) and differentiated with ``D[f; t]``.  Names bound with ``let``
in a file expand to their (already parsed) value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .jet_core import (
    INDEP,
    JET,
    DiffExpr,
    MultiIndex,
    Var,
    expr_normalize,
    indep_var,
    jet_var,
    param_var,
    total_derivative,
)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 1, col: int = 1):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.msg, self.line, self.col = msg, line, col


@dataclass
class Namespace:
    independents: tuple[str, ...] = ()
    dependents: tuple[str, ...] = ()
    params: dict[str, tuple[str, ...]] = field(default_factory=dict)
    lets: dict[str, DiffExpr] = field(default_factory=dict)

    def __post_init__(self):
        self.independents = tuple(self.independents)
        self.dependents = tuple(self.dependents)
        names = list(self.independents) + list(self.dependents) + list(self.params) + list(self.lets)
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate names: {sorted(dup)}")
        if "D" in names:
            raise ValueError("'D' is reserved for derivatives")
        for p, args in self.params.items():
            bad = [a for a in args if a not in self.independents]
            if bad:
                raise ValueError(f"parameter {p} depends on undeclared variables {bad}")

    @property
    def shorthand(self) -> bool:
        return all(len(x) == 1 for x in self.independents)

    def with_params(self, extra: dict[str, tuple[str, ...]]) -> "Namespace":
        merged = dict(self.params)
        for k, v in extra.items():
            if k in merged and tuple(merged[k]) != tuple(v):
                raise ValueError(f"parameter {k} redeclared with different arguments")
            merged[k] = tuple(v)
        return Namespace(self.independents, self.dependents, merged, dict(self.lets))

    def with_let(self, name: str, value: DiffExpr) -> "Namespace":
        return Namespace(self.independents, self.dependents, dict(self.params), {**self.lets, name: value})


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str, line: int, col0: int):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            toks.append(("INT", int(m.group(1)), m.start(1)))
        elif m.group(2):
            toks.append(("NAME", m.group(2), m.start(2)))
        elif m.group(3):
            toks.append(("SYM", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(("END", None, len(text)))
    return [(k, v, line, col0 + p) for k, v, p in toks]


class _Parser:
    def __init__(self, text: str, ns: Namespace, line: int = 1, col: int = 1):
        self.ns = ns
        self.toks = _tokenize(text, line, col)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], tok[3])

    def take(self, kind=None, value=None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] if tok[1] is not None else "end of input"
            self.error(f"expected {want!r}, found {got!r}")
        self.k += 1
        return tok

    def at(self, value) -> bool:
        tok = self.peek()
        return tok[0] == "SYM" and tok[1] == value

    def parse(self):
        tree = self.expr()
        if self.peek()[0] != "END":
            self.error(f"unexpected {self.peek()[1]!r}")
        return tree

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.at("-"):
            self.take()
            return ("neg", self.unary())
        if self.at("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^"):
            self.take()
            tok = self.peek()
            if tok[0] != "INT":
                self.error("exponent must be a nonnegative integer literal")
            self.take()
            return ("^", base, tok[1])
        return base

    def name_list(self, closer):
        names = []
        if self.at(closer):
            return names
        names.append(self.take("NAME")[1])
        while self.at(","):
            self.take()
            names.append(self.take("NAME")[1])
        return names

    def atom(self):
        tok = self.peek()
        if tok[0] == "INT":
            self.take()
            return tok[1]
        if self.at("("):
            self.take()
            node = self.expr()
            self.take("SYM", ")")
            return node
        if tok[0] != "NAME":
            self.error(f"unexpected {tok[1]!r}" if tok[1] is not None else "unexpected end of input")
        self.take()
        name = tok[1]
        if name == "D" and self.at("["):
            self.take()
            target = self.take("NAME")
            self.take("SYM", ";")
            mi = self.name_list("]")
            self.take("SYM", "]")
            bad = [i for i in mi if i not in self.ns.independents]
            if bad:
                self.error(f"unknown independent variable(s) {bad} in derivative", target)
            return self.derived(target, mi)
        if self.at("(") and name in self.ns.params:
            self.take()
            args = self.name_list(")")
            self.take("SYM", ")")
            if tuple(args) != tuple(self.ns.params[name]):
                self.error(f"parameter {name} is declared with arguments {self.ns.params[name]}", tok)
            return param_var(name, self.ns.params[name])
        return self.resolve(tok)

    def derived(self, target, mi):
        name = target[1]
        if name in self.ns.dependents:
            return jet_var(name, mi)
        if name in self.ns.params:
            return param_var(name, self.ns.params[name], mi)
        if name in self.ns.independents:
            e = DiffExpr.of(indep_var(name))
            for i in mi:
                e = total_derivative(e, i)
            return e
        self.error(f"unknown name {name!r}", target)

    def resolve(self, tok):
        name = tok[1]
        if name in self.ns.lets:
            return self.ns.lets[name]
        if name in self.ns.independents:
            return indep_var(name)
        if name in self.ns.dependents:
            return jet_var(name)
        if name in self.ns.params:
            return param_var(name, self.ns.params[name])
        if "_" in name and self.ns.shorthand:
            head, _, sub = name.rpartition("_")
            if (head in self.ns.dependents or head in self.ns.params) and sub and all(
                c in self.ns.independents for c in sub
            ):
                return self.derived((tok[0], head, tok[2], tok[3]), list(sub))
        self.error(f"unknown name {name!r}", tok)


def parse_tree(text: str, ns: Namespace, line: int = 1, col: int = 1):
    """Raw expression tree (see ``expr_normalize``) for ``text``."""
    return _Parser(text, ns, line, col).parse()


def parse_expr(text: str, ns: Namespace, line: int = 1, col: int = 1) -> DiffExpr:
    tree = parse_tree(text, ns, line, col)
    try:
        return expr_normalize(tree)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(str(exc), line, col) from exc


def tree_to_rational(tree) -> tuple[DiffExpr, DiffExpr]:
    """(numerator, denominator) for a tree whose divisors may be any
    expression free of jet variables."""
    if isinstance(tree, (DiffExpr, Var, int, Fraction)):
        return DiffExpr.lift(tree), DiffExpr.const(1)
    op, *kids = tree
    if op == "neg":
        n, d = tree_to_rational(kids[0])
        return -n, d
    if op == "^":
        n, d = tree_to_rational(kids[0])
        return n ** kids[1], d ** kids[1]
    (n1, d1), (n2, d2) = tree_to_rational(kids[0]), tree_to_rational(kids[1])
    if op == "+":
        return (n1 * d2 + n2 * d1, d1 * d2) if d1 != d2 else (n1 + n2, d1)
    if op == "-":
        return (n1 * d2 - n2 * d1, d1 * d2) if d1 != d2 else (n1 - n2, d1)
    if op == "*":
        return n1 * n2, d1 * d2
    if op == "/":
        if n2.has_jet():
            raise ValueError("division by an expression containing dependent variables")
        if n2.is_zero():
            raise ZeroDivisionError("division by zero")
        return n1 * d2, d1 * n2
    raise ValueError(f"unknown operator {op!r}")


# -- printing ----------------------------------------------------------------


def format_var(v: Var, shorthand: bool = True) -> str:
    if v.kind == INDEP:
        return v.name
    if v.kind == JET:
        if not v.mi:
            return v.name
        if shorthand and all(len(i) == 1 for i in v.mi):
            return f"{v.name}_{''.join(v.mi)}"
        return f"D[{v.name}; {','.join(v.mi)}]"
    if v.mi:
        return f"D[{v.name}; {','.join(v.mi)}]"
    return f"{v.name}({','.join(v.args)})" if v.args else v.name


def _format_coeff(c: Fraction) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_expr(e: DiffExpr, ns: Namespace | None = None) -> str:
    if e.is_zero():
        return "0"
    shorthand = ns.shorthand if ns is not None else True
    parts = []
    for mono, c in e.sorted_terms():
        c = Fraction(c)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        factors = [format_var(v, shorthand) + (f"^{p}" if p > 1 else "") for v, p in mono]
        if not factors:
            body = _format_coeff(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = _format_coeff(a) + "*" + "*".join(factors)
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def format_mi(mi: MultiIndex) -> str:
    return ",".join(mi) if mi else "-"


__all__ = [
    "Namespace",
    "ParseError",
    "parse_tree",
    "parse_expr",
    "tree_to_rational",
    "format_expr",
    "format_var",
    "JET",
]
