"""Readers for the line-oriented ``.sys``, ``.gen`` and ``.ans`` files.

Every file starts with the header ``jetsym-format 1``.  Blank lines and
``#`` comments are ignored, and a trailing backslash continues a line.

System file::

    system kdv
    independent t x
    dependent u
    param f(t) c1
    time t
    evolution u: -u*u_x - u_xxx            # u_t = ...
    constraint divE: E1_x + E2_y + E3_z ; leading E1_x
    equation vort: <expr> ; leading D[phi; t,x,x]

Generator file (components default to 0)::

    param f(t)
    let r2 = x^2 + y^2
    candidate q3 adjoint
      u: t*u - x
    candidate sim solution
      u: (c2*x - c1)/(c2*t + c3)

Ansatz file::

    kind adjoint
    basis 1, u, x*f(t)
    bounds order=1 degree=2 indep=1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .grammar import Namespace, ParseError, parse_expr, parse_tree, tree_to_rational
from .jet_core import ZERO, DiffExpr, Var
from .pde_system import PdeSystem

HEADER = "jetsym-format 1"
CANDIDATE_KINDS = ("symmetry", "adjoint", "solution")

_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*$")
_PARAM = re.compile(r"([A-Za-z][A-Za-z0-9_]*)(?:\(([^)]*)\))?")


@dataclass
class Line:
    no: int
    text: str
    indent: int


def logical_lines(text: str) -> list[Line]:
    out: list[Line] = []
    pending: Line | None = None
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        cont = body.endswith("\\")
        if cont:
            body = body[:-1]
        if pending is not None:
            pending.text += " " + body.strip()
        elif body.strip():
            pending = Line(no, body.strip(), len(body) - len(body.lstrip()))
        if not cont and pending is not None:
            out.append(pending)
            pending = None
    if pending is not None:
        out.append(pending)
    return out


def _lines_with_header(text: str) -> list[Line]:
    lines = logical_lines(text)
    if not lines or lines[0].text != HEADER:
        no = lines[0].no if lines else 1
        raise ParseError(f"missing header line '{HEADER}'", no, 1)
    return lines[1:]


def _split_names(rest: str, line: Line, col: int) -> list[str]:
    names = [n for n in re.split(r"[\s,]+", rest.strip()) if n]
    for n in names:
        if not _NAME.match(n):
            raise ParseError(f"invalid name {n!r}", line.no, col)
    return names


def _parse_params(rest: str, line: Line, col: int) -> dict[str, tuple[str, ...]]:
    out = {}
    pos = 0
    rest = rest.strip()
    while pos < len(rest):
        if rest[pos] in " ,":
            pos += 1
            continue
        m = _PARAM.match(rest, pos)
        if m is None:
            raise ParseError(f"invalid parameter declaration near {rest[pos:]!r}", line.no, col + pos)
        args = tuple(a.strip() for a in m.group(2).split(",") if a.strip()) if m.group(2) else ()
        out[m.group(1)] = args
        pos = m.end()
    return out


def _expr_at(line: Line, text: str, offset: int, ns: Namespace) -> DiffExpr:
    return parse_expr(text, ns, line.no, line.indent + offset + 1)


_LEADING = re.compile(r";\s*leading\b")


def _split_leading(body: str) -> tuple[str, str | None]:
    hits = list(_LEADING.finditer(body))
    if not hits:
        return body, None
    m = hits[-1]
    return body[: m.start()], body[m.end():].strip()


def _leading_var(text: str, ns: Namespace, line: Line) -> Var:
    e = parse_expr(text, ns, line.no, 1)
    vs = list(e.jet_vars())
    if len(e) != 1 or len(vs) != 1 or e != DiffExpr.of(vs[0]):
        raise ParseError(f"leading derivative must be a single jet variable, got {text!r}", line.no, 1)
    return vs[0]


def _keyword(line: Line) -> tuple[str, str, int]:
    kw, _, rest = line.text.partition(" ")
    return kw, rest, len(kw) + 1


def _named_body(rest: str, line: Line, col: int) -> tuple[str, str, int]:
    name, sep, body = rest.partition(":")
    if not sep:
        raise ParseError("expected 'name: expression'", line.no, col)
    name = name.strip()
    if not _NAME.match(name):
        raise ParseError(f"invalid name {name!r}", line.no, col)
    return name, body, line.text.index(":", col) + 1


def parse_system_text(text: str, source: str = "<system>") -> PdeSystem:
    name = Path(source).stem
    indeps: list[str] = []
    deps: list[str] = []
    params: dict[str, tuple[str, ...]] = {}
    time = None
    evol: list[tuple[Line, str, str, int]] = []
    cons: list[tuple[Line, str, str, int]] = []
    geqs: list[tuple[Line, str, str, int]] = []
    lets: list[tuple[Line, str, str, int]] = []
    for line in _lines_with_header(text):
        kw, rest, col = _keyword(line)
        if kw == "system":
            name = rest.strip()
        elif kw == "independent":
            indeps += _split_names(rest, line, col)
        elif kw == "dependent":
            deps += _split_names(rest, line, col)
        elif kw == "param":
            params.update(_parse_params(rest, line, col))
        elif kw == "time":
            time = rest.strip()
        elif kw in ("evolution", "constraint", "equation"):
            n, body, c = _named_body(rest, line, col)
            {"evolution": evol, "constraint": cons, "equation": geqs}[kw].append((line, n, body, c))
        elif kw == "let":
            n, sep, body = rest.partition("=")
            if not sep:
                raise ParseError("expected 'let name = expression'", line.no, col)
            lets.append((line, n.strip(), body, line.text.index("=") + 1))
        else:
            raise ParseError(f"unknown directive {kw!r}", line.no, 1)
    try:
        ns = Namespace(tuple(indeps), tuple(deps), params)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from exc
    if not indeps or not deps:
        raise ParseError("system needs 'independent' and 'dependent' declarations", 1, 1)
    for line, n, body, c in lets:
        ns = ns.with_let(n, _expr_at(line, body, c, ns))
    if evol and geqs:
        raise ParseError("use either 'evolution' or 'equation' lines, not both", geqs[0][0].no, 1)
    if time is not None and time not in indeps:
        raise ParseError(f"time variable {time!r} is not declared independent", 1, 1)

    def bodies(items):
        out = []
        for line, n, body, c in items:
            expr, lead = _split_leading(body)
            e = _expr_at(line, expr, c, ns)
            out.append((n, e, _leading_var(lead, ns, line) if lead else None, line))
        return out

    try:
        if evol:
            if time is None:
                raise ParseError("evolution equations need a 'time' declaration", evol[0][0].no, 1)
            for line, n, body, c in evol + cons:
                e = _expr_at(line, _split_leading(body)[0], c, ns)
                if any(time in v.mi for v in e.jet_vars()):
                    raise ParseError(f"{n!r}: evolution right-hand sides and constraints must not contain "
                                     f"{time}-derivatives", line.no, c + 1)
            g = {}
            for n, e, _, line in bodies(evol):
                if n not in deps:
                    raise ParseError(f"evolution equation for undeclared dependent {n!r}", line.no, 1)
                g[n] = e
            constraints = []
            for n, e, lead, line in bodies(cons):
                if lead is None:
                    raise ParseError(f"constraint {n!r} needs '; leading <var>'", line.no, 1)
                constraints.append((n, e, lead))
            return PdeSystem.evolutionary(name, ns, time, g, constraints)
        if cons:
            raise ParseError("constraints need an evolution split", cons[0][0].no, 1)
        if not geqs:
            raise ParseError("system has no equations", 1, 1)
        return PdeSystem.general(name, ns, [(n, e, lead) for n, e, lead, _ in bodies(geqs)], time)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from exc


def parse_system(path) -> PdeSystem:
    path = Path(path)
    return parse_system_text(path.read_text(), str(path))


@dataclass
class Candidate:
    name: str
    kind: str
    components: dict[str, object] = field(default_factory=dict)
    line: int = 0

    def vector(self, sys: PdeSystem) -> tuple[DiffExpr, ...]:
        keys = sys.equation_names if self.kind == "adjoint" else sys.dependents
        unknown = [k for k in self.components if k not in keys]
        if unknown:
            raise ParseError(f"candidate {self.name!r}: unknown component(s) {unknown}; expected {list(keys)}",
                             self.line, 1)
        return tuple(self.components.get(k, ZERO) for k in keys)


@dataclass
class GeneratorFile:
    candidates: list[Candidate]
    namespace: Namespace

    def of_kind(self, kind: str) -> list[Candidate]:
        return [c for c in self.candidates if c.kind == kind]

    def get(self, name: str) -> Candidate:
        for c in self.candidates:
            if c.name == name:
                return c
        raise KeyError(f"no candidate named {name!r}")


def parse_generators_text(text: str, sys: PdeSystem, source: str = "<generators>") -> GeneratorFile:
    ns = sys.namespace
    cands: list[Candidate] = []
    for line in _lines_with_header(text):
        kw, rest, col = _keyword(line)
        if kw == "param":
            try:
                ns = ns.with_params(_parse_params(rest, line, col))
            except ValueError as exc:
                raise ParseError(str(exc), line.no, col) from exc
        elif kw == "let":
            n, sep, body = rest.partition("=")
            if not sep or not _NAME.match(n.strip()):
                raise ParseError("expected 'let name = expression'", line.no, col)
            try:
                ns = ns.with_let(n.strip(), _expr_at(line, body, line.text.index("=") + 1, ns))
            except ValueError as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(str(exc), line.no, col) from exc
        elif kw == "candidate":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in CANDIDATE_KINDS:
                raise ParseError(f"expected 'candidate <name> <{'|'.join(CANDIDATE_KINDS)}>'", line.no, col)
            if any(c.name == parts[0] for c in cands):
                raise ParseError(f"duplicate candidate {parts[0]!r}", line.no, col)
            cands.append(Candidate(parts[0], parts[1], {}, line.no))
        else:
            key, sep, body = line.text.partition(":")
            key = key.strip()
            if not sep or not _NAME.match(key):
                raise ParseError(f"unknown directive {kw!r}", line.no, 1)
            if not cands:
                raise ParseError("component given before any 'candidate' line", line.no, 1)
            cand = cands[-1]
            if key in cand.components:
                raise ParseError(f"component {key!r} given twice", line.no, 1)
            offset = line.text.index(":") + 1
            if cand.kind == "solution":
                tree = parse_tree(body, ns, line.no, line.indent + offset + 1)
                try:
                    cand.components[key] = tree_to_rational(tree)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ParseError(str(exc), line.no, line.indent + offset + 1) from exc
            else:
                cand.components[key] = _expr_at(line, body, offset, ns)
    return GeneratorFile(cands, ns)


def parse_generators(path, sys: PdeSystem) -> GeneratorFile:
    path = Path(path)
    return parse_generators_text(path.read_text(), sys, str(path))


@dataclass
class AnsatzFile:
    kind: str = "adjoint"
    basis: list[DiffExpr] = field(default_factory=list)
    bounds: dict[str, int] = field(default_factory=dict)
    namespace: Namespace | None = None


def parse_ansatz_text(text: str, sys: PdeSystem) -> AnsatzFile:
    out = AnsatzFile(namespace=sys.namespace)
    ns = sys.namespace
    for line in _lines_with_header(text):
        kw, rest, col = _keyword(line)
        if kw == "kind":
            if rest.strip() not in ("adjoint", "symmetry"):
                raise ParseError("kind must be 'adjoint' or 'symmetry'", line.no, col)
            out.kind = rest.strip()
        elif kw == "param":
            ns = ns.with_params(_parse_params(rest, line, col))
        elif kw == "basis":
            pos = col
            for piece in rest.split(","):
                e = _expr_at(line, piece, pos, ns)
                pos += len(piece) + 1
                out.basis.append(e)
        elif kw == "bounds":
            for item in rest.split():
                k, sep, v = item.partition("=")
                if not sep or k not in ("order", "degree", "indep") or not v.isdigit():
                    raise ParseError(f"bad bound {item!r}; use order=, degree=, indep=", line.no, col)
                out.bounds[k] = int(v)
        else:
            raise ParseError(f"unknown directive {kw!r}", line.no, 1)
    out.namespace = ns
    return out


def parse_ansatz(path, sys: PdeSystem) -> AnsatzFile:
    return parse_ansatz_text(Path(path).read_text(), sys)


__all__ = [
    "HEADER",
    "Candidate",
    "GeneratorFile",
    "AnsatzFile",
    "parse_system",
    "parse_system_text",
    "parse_generators",
    "parse_generators_text",
    "parse_ansatz",
    "parse_ansatz_text",
]
