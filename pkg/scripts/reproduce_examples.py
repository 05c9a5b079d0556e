"""Run every corpus candidate through its determining equation and print a table.

    python scripts/reproduce_examples.py [--system kdv]
"""

import argparse
import time

from jetsym import corpus_path
from jetsym.adjoint_symmetry import adjoint_residual, gauge_adjoint_symmetry, symmetry_residual
from jetsym.fileformats import parse_generators, parse_system
from jetsym.pde_system import check_solution

SYSTEMS = ("kdv", "vorticity", "maxwell", "toy")


def run(name: str) -> list[tuple[str, str, str, bool, float]]:
    sys = parse_system(corpus_path(f"{name}.sys"))
    gens = parse_generators(corpus_path(f"{name}.gen"), sys)
    rows = []
    for cand in gens.candidates:
        t0 = time.perf_counter()
        if cand.kind == "symmetry":
            ok = symmetry_residual(sys, cand.vector(sys)).passed
        elif cand.kind == "adjoint":
            ok = adjoint_residual(sys, cand.vector(sys)).passed
        else:
            ok = check_solution(sys, cand.components).is_zero
        rows.append((name, cand.name, cand.kind, ok, time.perf_counter() - t0))
    if sys.has_constraints:
        t0 = time.perf_counter()
        ok = adjoint_residual(sys, gauge_adjoint_symmetry(sys)).passed
        rows.append((name, "<gauge family>", "adjoint", ok, time.perf_counter() - t0))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--system", choices=SYSTEMS, action="append")
    args = ap.parse_args()
    print(f"{'system':<10} {'candidate':<18} {'kind':<9} {'result':<6} seconds")
    for name in args.system or SYSTEMS:
        for sysname, cand, kind, ok, dt in run(name):
            print(f"{sysname:<10} {cand:<18} {kind:<9} {'pass' if ok else 'fail':<6} {dt:.3f}")


if __name__ == "__main__":
    main()
