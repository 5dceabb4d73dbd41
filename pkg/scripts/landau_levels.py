"""Lowest level clusters of the lattice operators for the gaussian weight |z|^2."""

import argparse
import time

from dbarspec import schrodinger as S
from dbarspec import weights as W
from dbarspec.eigensolve import bulk_clusters, eigenpairs_below


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--cutoff", type=float, default=5.3)
    ap.add_argument("--degree", choices=S.DEGREES, default="top")
    args = ap.parse_args()
    grid = S.Grid2D(args.L, args.N)
    t0 = time.perf_counter()
    s = eigenpairs_below(S.assemble(W.gaussian(), grid, args.degree, args.cutoff), args.cutoff)
    print(f"{s.values.size} eigenvalues below {args.cutoff} in {time.perf_counter() - t0:.1f} s, h = {grid.h:g}")
    exact = S.landau_levels(8, args.degree)
    for (v, m), e in zip(bulk_clusters(s.values), exact):
        print(f"  cluster {v:.6f}  multiplicity {m:4d}  exact {e:g}")


if __name__ == "__main__":
    main()
