"""Spectral vs quadrature right-hand side gap as a function of n and the lattice cutoff J.

usage: python3 scripts/crossval_convergence.py [s]
"""

import sys

from gnb import experiments as ex


def main(s=0.5):
    sc = ex.standard_scenario(s=float(s))
    print(f"s = {sc.s}")
    print("   n    J=5        J=10       J=20       J=40")
    for n in (32, 64, 128, 256):
        errs = [ex.crossval_error(sc, n, J) for J in (5, 10, 20, 40)]
        print(f"{n:4d}  " + "  ".join(f"{e:.3e}" for e in errs))


if __name__ == "__main__":
    main(*sys.argv[1:])
