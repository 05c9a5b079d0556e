"""Command-line front end.

Exit status: 0 when every check passes, 1 when a verification fails (the
residual is printed), 2 on malformed input.
"""

from __future__ import annotations

import argparse
import random
import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import adjoint_symmetry as adj
from .ansatz import Ansatz, generate_basis, solve_determining
from .fileformats import Candidate, GeneratorFile, parse_ansatz, parse_generators, parse_system
from .grammar import Namespace, ParseError, format_expr, parse_expr
from .jet_core import DiffExpr, indep_var, jet_var
from .numeric_oracle import fd_frechet_check, frechet_point
from .pde_system import PdeSystem, check_solution, compatibility_operator, reduce_on_solutions

PASS, FAIL, INPUT_ERROR = 0, 1, 2

SIGN_NOTE = "evolution equations written G^a = u^a_t - g^a"


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    report: str | None = None
    seed: int = 0
    points: int = 100
    step: float = 1e-6
    max_order: int = 1
    max_degree: int = 2
    indep_degree: int = 1
    name: str | None = None
    form: str = "auto"
    kind: str | None = None
    action: str | None = None
    conditional: bool = False
    reduce: bool = False
    verbose: bool = False


@dataclass
class Report:
    lines: list[str] = field(default_factory=list)
    failed: bool = False

    def kv(self, key: str, value) -> None:
        self.lines.append(f"{key}: {value}")

    def blank(self) -> None:
        if self.lines and self.lines[-1]:
            self.lines.append("")

    def assume(self, note: str) -> None:
        self.kv("assumption", note)

    def verdict(self, ok: bool) -> None:
        self.kv("verdict", "pass" if ok else "fail")
        self.failed |= not ok

    def text(self) -> str:
        return "\n".join(self.lines).rstrip() + "\n"


def _fmt(e: DiffExpr, ns: Namespace) -> str:
    return format_expr(e, ns)


def _system_header(rep: Report, cfg: RunConfig, sys: PdeSystem) -> None:
    rep.kv("command", cfg.command + (f" {cfg.action}" if cfg.action else ""))
    rep.kv("system", sys.name)
    rep.kv("independents", " ".join(sys.independents))
    rep.kv("dependents", " ".join(sys.dependents))
    if sys.is_evolutionary:
        rep.kv("time", sys.time)
        rep.kv("evolution_equations", sys.n_evolution)
        rep.kv("constraints", len(sys.constraints))
        rep.assume(SIGN_NOTE)
    for eq in sys.equations:
        if eq.leading is not None:
            rep.assume(f"leading derivative of {eq.name}: {format_expr(DiffExpr.of(eq.leading), sys.namespace)}")


def _load(cfg: RunConfig, min_inputs: int) -> tuple[PdeSystem, list[GeneratorFile]]:
    if len(cfg.inputs) < min_inputs:
        raise InputError(f"{cfg.command} needs {min_inputs} input file(s)")
    sys = parse_system(cfg.inputs[0])
    gens = [parse_generators(p, sys) for p in cfg.inputs[1:]]
    return sys, gens


def _select(gens: Sequence[GeneratorFile], kind: str, name: str | None = None) -> list[tuple[Candidate, Namespace]]:
    out = [(c, g.namespace) for g in gens for c in g.candidates if c.kind == kind]
    if name is not None:
        out = [(c, ns) for c, ns in out if c.name == name]
    if not out:
        raise InputError(f"no {kind} candidate" + (f" named {name!r}" if name else "") + " in the input files")
    return out


def _residual_block(rep: Report, res: adj.VerificationReport, ns: Namespace) -> None:
    for label, r in zip(res.labels, res.residual):
        rep.kv(f"residual[{label}]", _fmt(r, ns))
    for note in res.notes:
        rep.assume(note)
    rep.verdict(res.passed)


# -- commands ------------------------------------------------------------------


def cmd_check_symmetry(cfg: RunConfig, rep: Report) -> None:
    sys, gens = _load(cfg, 2)
    _system_header(rep, cfg, sys)
    for cand, ns in _select(gens, "symmetry", cfg.name):
        rep.blank()
        rep.kv("candidate", cand.name)
        P = cand.vector(sys)
        for a, p in zip(sys.dependents, P):
            rep.kv(f"P[{a}]", _fmt(p, ns))
        if cfg.conditional:
            res = adj.conditional_residuals(sys, P=P)
        else:
            res = adj.symmetry_residual(sys, P)
        _residual_block(rep, res, ns)


def cmd_check_adjoint(cfg: RunConfig, rep: Report) -> None:
    sys, gens = _load(cfg, 2)
    _system_header(rep, cfg, sys)
    for cand, ns in _select(gens, "adjoint", cfg.name):
        rep.blank()
        rep.kv("candidate", cand.name)
        Q = cand.vector(sys)
        for k, q in zip(sys.equation_names, Q):
            rep.kv(f"Q[{k}]", _fmt(q, ns))
        if cfg.conditional:
            res = adj.conditional_residuals(sys, Q=Q)
        else:
            res = adj.adjoint_residual(sys, Q, form=cfg.form)
        _residual_block(rep, res, ns)


def _pairs(cfg: RunConfig, gens):
    syms = _select(gens, "symmetry", None)
    adjs = _select(gens, "adjoint", None)
    if cfg.name:
        syms = [s for s in syms if s[0].name == cfg.name] or syms
        adjs = [a for a in adjs if a[0].name == cfg.name] or adjs
    return [(s, a) for s in syms for a in adjs]


def cmd_conservation_law(cfg: RunConfig, rep: Report) -> None:
    sys, gens = _load(cfg, 2)
    _system_header(rep, cfg, sys)
    rep.assume("current Psi^i = sum_A (D_K Q_A)(D_J P^a) E^K_{u^a_{iJ}}(G^A)")
    for (pc, pns), (qc, qns) in _pairs(cfg, gens):
        ns = pns.with_params(qns.params)
        rep.blank()
        rep.kv("symmetry", pc.name)
        rep.kv("adjoint", qc.name)
        law = adj.conservation_current(sys, pc.vector(sys), qc.vector(sys))
        for x, c in zip(law.independents, law.current):
            rep.kv(f"Psi[{x}]", _fmt(c, ns))
        rep.kv("divergence_on_solutions", _fmt(law.divergence_on_solutions, ns))
        for note in law.notes:
            rep.kv("warning" if note.startswith("warning") else "assumption", note.removeprefix("warning: "))
        rep.verdict(law.passed)


def cmd_symmetry_action(cfg: RunConfig, rep: Report) -> None:
    sys, gens = _load(cfg, 2)
    _system_header(rep, cfg, sys)
    action = adj.ACTIONS[cfg.action]
    for (pc, pns), (qc, qns) in _pairs(cfg, gens):
        ns = pns.with_params(qns.params)
        rep.blank()
        rep.kv("symmetry", pc.name)
        rep.kv("adjoint", qc.name)
        P, Q = pc.vector(sys), qc.vector(sys)
        try:
            out = action(sys, P, Q)
        except ValueError as exc:
            rep.kv("error", str(exc))
            rep.verdict(False)
            continue
        _, route = adj.adjoint_operator(sys, Q)
        rep.assume(route)
        for k, q in zip(sys.equation_names, out):
            rep.kv(f"S[{k}]", _fmt(q, ns))
        res = adj.adjoint_residual(sys, out)
        rep.kv("output_is_adjoint_symmetry", "yes" if res.passed else "no")
        for label, r in zip(res.labels, res.residual):
            if r:
                rep.kv(f"residual[{label}]", _fmt(r, ns))
        s1, s2, s = adj.action_s1(sys, P, Q), adj.action_s2(sys, P, Q), adj.action_lie(sys, P, Q)
        split = all(a + b == c for a, b, c in zip(s1, s2, s))
        rep.kv("s1_plus_s2_equals_lie", "yes" if split else "no")
        rep.verdict(res.passed and split)


def _ansatz(cfg: RunConfig, sys: PdeSystem) -> tuple[Ansatz, Namespace]:
    kind = cfg.kind or "adjoint"
    if len(cfg.inputs) > 1:
        af = parse_ansatz(cfg.inputs[1], sys)
        kind = cfg.kind or af.kind
        if af.basis:
            return Ansatz(tuple(af.basis), kind), af.namespace
        b = {"order": cfg.max_order, "degree": cfg.max_degree, "indep": cfg.indep_degree, **af.bounds}
        return generate_basis(sys, b["order"], b["degree"], b["indep"], kind), af.namespace
    return generate_basis(sys, cfg.max_order, cfg.max_degree, cfg.indep_degree, kind), sys.namespace


def cmd_solve_ansatz(cfg: RunConfig, rep: Report) -> None:
    if not cfg.inputs:
        raise InputError("solve-ansatz needs a system file")
    sys = parse_system(cfg.inputs[0])
    _system_header(rep, cfg, sys)
    ans, ns = _ansatz(cfg, sys)
    rep.kv("kind", ans.kind)
    rep.kv("basis_size", len(ans.basis))
    rep.kv("basis", ", ".join(_fmt(m, ns) for m in ans.basis))
    rep.assume("one unknown rational coefficient per component and basis monomial")
    sols = solve_determining(sys, ans)
    rep.kv("dimension", len(sols))
    keys = sys.equation_names if ans.kind == "adjoint" else sys.dependents
    for n, sol in enumerate(sols, start=1):
        rep.blank()
        rep.kv("solution", n)
        for k, c in zip(keys, sol):
            if c:
                rep.kv(f"component[{k}]", _fmt(c, ns))
    rep.blank()
    rep.verdict(True)


def cmd_gauge_adjoint(cfg: RunConfig, rep: Report) -> None:
    if not cfg.inputs:
        raise InputError("gauge-adjoint needs a system file")
    sys = parse_system(cfg.inputs[0])
    if not sys.has_constraints:
        raise InputError(f"system {sys.name!r} has no constraints")
    _system_header(rep, cfg, sys)
    ns = adj.gauge_namespace(sys)
    D = compatibility_operator(sys)
    rep.kv("compatibility_operator", "0" if D.is_zero() else repr(D))
    rep.assume("constraint identity C'(g) = D(C) holds exactly")
    rep.assume("gauge family Q_a = C'*(chi)_a, q_Y = (D_t chi + D*(chi))_Y with chi opaque")
    Q = adj.gauge_adjoint_symmetry(sys)
    for k, q in zip(sys.equation_names, Q):
        rep.kv(f"Q[{k}]", _fmt(q, ns))
    _residual_block(rep, adj.adjoint_residual(sys, Q, form=cfg.form), ns)


def cmd_check_solution(cfg: RunConfig, rep: Report) -> None:
    sys, gens = _load(cfg, 2)
    _system_header(rep, cfg, sys)
    for cand, ns in _select(gens, "solution", cfg.name):
        rep.blank()
        rep.kv("candidate", cand.name)
        for a in sys.dependents:
            if a not in cand.components:
                raise InputError(f"solution {cand.name!r} gives no expression for {a!r}")
            n, d = cand.components[a]
            rep.kv(f"{a}", f"({_fmt(n, ns)})/({_fmt(d, ns)})" if d != DiffExpr.const(1) else _fmt(n, ns))
        res = check_solution(sys, cand.components)
        for name, n, d in zip(sys.equation_names, res.numerators, res.denominators):
            rep.kv(f"residual[{name}]", _fmt(n, ns) + ("" if n.is_zero() else f"  / ({_fmt(d, ns)})"))
        rep.assume("denominators assumed nonzero on the domain")
        rep.verdict(res.is_zero)


def _random_direction(sys: PdeSystem, rng: random.Random) -> tuple[DiffExpr, ...]:
    atoms = [DiffExpr.of(indep_var(x)) for x in sys.independents]
    for a in sys.dependents:
        atoms += [DiffExpr.of(jet_var(a, mi)) for mi in ((), (sys.spatial or sys.independents)[:1])]
    out = []
    for _ in sys.dependents:
        e = DiffExpr.const(rng.randint(-3, 3))
        for _ in range(2):
            e = e + rng.choice(atoms) * rng.choice(atoms) * rng.randint(-3, 3)
        out.append(e)
    return tuple(out)


def cmd_oracle_check(cfg: RunConfig, rep: Report) -> None:
    if cfg.step <= 0:
        raise InputError("--step must be positive")
    sys, gens = _load(cfg, 1)
    _system_header(rep, cfg, sys)
    rep.kv("seed", cfg.seed)
    rep.kv("points", cfg.points)
    rep.kv("step", cfg.step)
    rep.assume("random points are rationals n/d with n, d in [-9, 9] minus 0")
    rng = random.Random(cfg.seed)
    dirs = [c.vector(sys) for g in gens for c in g.candidates if c.kind == "symmetry"]
    worst = 0.0
    for k in range(cfg.points):
        F = dirs[k % len(dirs)] if dirs else _random_direction(sys, rng)
        for G in sys.G:
            pt = frechet_point(G, F, sys.dependents, seed=rng.randrange(2**31))
            worst = max(worst, fd_frechet_check(G, F, pt, cfg.step, sys.dependents))
    rep.kv("max_relative_error", f"{worst:.3e}")
    ok = worst < 1e-6
    rep.kv("frechet_check", "pass" if ok else "fail")
    if sys.is_evolutionary:
        for g in gens:
            for c in g.of_kind("adjoint"):
                agree = adj.adjoint_forms_agree(sys, c.vector(sys))
                rep.kv(f"forms_agree[{c.name}]", "yes" if agree else "no")
                ok &= agree
        rep.assume("general form G'*(Q) equals minus the evolution form on the solution space")
    rep.verdict(ok)


def cmd_canonicalize(cfg: RunConfig, rep: Report) -> None:
    if len(cfg.inputs) < 2:
        raise InputError("canonicalize needs a system file and at least one expression")
    sys = parse_system(cfg.inputs[0])
    rep.kv("command", cfg.command)
    rep.kv("system", sys.name)
    for n, text in enumerate(cfg.inputs[1:], start=1):
        e = parse_expr(text, sys.namespace, 1, 1)
        rep.kv(f"canonical[{n}]", _fmt(e, sys.namespace))
        if cfg.reduce:
            rep.kv(f"on_solutions[{n}]", _fmt(reduce_on_solutions(e, sys), sys.namespace))
    rep.verdict(True)


COMMANDS = {
    "check-symmetry": cmd_check_symmetry,
    "check-adjoint": cmd_check_adjoint,
    "conservation-law": cmd_conservation_law,
    "symmetry-action": cmd_symmetry_action,
    "solve-ansatz": cmd_solve_ansatz,
    "gauge-adjoint": cmd_gauge_adjoint,
    "check-solution": cmd_check_solution,
    "oracle-check": cmd_oracle_check,
    "canonicalize": cmd_canonicalize,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetsym", description="Symmetries, adjoint-symmetries and conservation laws "
                                 "of polynomial PDE systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="also write the report to this path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--points", type=int, default=100)
    common.add_argument("--step", type=float, default=1e-6)
    common.add_argument("--max-order", type=int, default=1)
    common.add_argument("--max-degree", type=int, default=2)
    common.add_argument("--indep-degree", type=int, default=1)
    common.add_argument("--name", help="only the candidate with this name")
    common.add_argument("--form", choices=("auto", "general", "evolution"), default="auto")
    common.add_argument("--kind", choices=("adjoint", "symmetry"))
    common.add_argument("--conditional", action="store_true", help="reduce on the constraint surface only")
    common.add_argument("--reduce", action="store_true", help="canonicalize: also reduce on solutions")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "symmetry-action":
            p.add_argument("action", choices=sorted(adj.ACTIONS))
        p.add_argument("inputs", nargs="*")
    return ap


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(
        command=ns.command, inputs=list(ns.inputs), report=ns.report, seed=ns.seed, points=ns.points,
        step=ns.step, max_order=ns.max_order, max_degree=ns.max_degree, indep_degree=ns.indep_degree,
        name=ns.name, form=ns.form, kind=ns.kind, action=getattr(ns, "action", None),
        conditional=ns.conditional, reduce=ns.reduce)


def run_command(cfg: RunConfig) -> tuple[int, Report]:
    rep = Report()
    try:
        COMMANDS[cfg.command](cfg, rep)
    except (ParseError, InputError, FileNotFoundError, IsADirectoryError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        rep.kv("error", msg)
        return INPUT_ERROR, rep
    return (FAIL if rep.failed else PASS), rep


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else PASS
    status, rep = run_command(cfg)
    text = rep.text()
    out = _sys.stderr if status == INPUT_ERROR else _sys.stdout
    out.write(text)
    if cfg.report:
        Path(cfg.report).write_text(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
