"""Dimension of the KdV adjoint-symmetry (or symmetry) space over a grid of ansatz bounds.

    python scripts/ansatz_sweep.py --kind adjoint --max-order 3
"""

import argparse
import time

from jetsym import corpus_path
from jetsym.ansatz import generate_basis, solve_determining
from jetsym.fileformats import parse_system
from jetsym.grammar import format_expr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--system", default="kdv")
    ap.add_argument("--kind", choices=("adjoint", "symmetry"), default="adjoint")
    ap.add_argument("--max-order", type=int, default=2)
    ap.add_argument("--max-degree", type=int, default=2)
    ap.add_argument("--indep-degree", type=int, default=1)
    args = ap.parse_args()
    sys = parse_system(corpus_path(f"{args.system}.sys"))
    for order in range(args.max_order + 1):
        for degree in range(args.max_degree + 1):
            for indep in range(args.indep_degree + 1):
                ans = generate_basis(sys, order, degree, indep, args.kind)
                t0 = time.perf_counter()
                sols = solve_determining(sys, ans)
                dt = time.perf_counter() - t0
                shown = "; ".join(", ".join(format_expr(c, sys.namespace) for c in s) for s in sols)
                print(f"order={order} degree={degree} indep={indep} basis={len(ans.basis):<4} "
                      f"dim={len(sols)} ({dt:.2f} s)  {shown}")


if __name__ == "__main__":
    main()
