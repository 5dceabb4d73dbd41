"""Degree-zero kernel count of the gaussian weight as the box grows at fixed spacing."""

import argparse

from dbarspec import schrodinger as S
from dbarspec import weights as W
from dbarspec.eigensolve import eigenpairs_below, lowest_eigenpairs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.125)
    ap.add_argument("--L", type=float, nargs="+", default=[4.0, 6.0, 9.0])
    args = ap.parse_args()
    print("L     kernel  area/pi")
    for L in args.L:
        grid = S.Grid2D(L, int(round(2 * L / args.h)))
        lam1 = lowest_eigenpairs(S.assemble(W.gaussian(), grid, "top"), 1).values[0]
        count = eigenpairs_below(S.assemble(W.gaussian(), grid, "zero"), 0.5 * lam1).values.size
        print(f"{L:<5g} {count:6d}  {4 * L * L / 3.141592653589793:7.1f}")


if __name__ == "__main__":
    main()
