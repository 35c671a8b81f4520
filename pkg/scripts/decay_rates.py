"""Guaranteed rate eta against the fitted amplitude and gradient rates across s.

usage: python3 scripts/decay_rates.py [t_end]
"""

import sys

from gnb import experiments as ex


def main(t_end=3.0):
    print("   s     eta      amp rate  grad rate  r2(grad)")
    for s in (0.2, 0.4, 0.5, 0.6, 0.8, 0.95):
        sc = ex.standard_scenario(s=s, t_end=float(t_end))
        rep = ex.run_decay(sc)
        m = rep.measured
        print(f"{s:5.2f}  {m['eta']:.4f}  {m['amplitude_rate']:8.4f}  {m['gradient_rate']:8.4f}"
              f"  {m['gradient_r2']:.6f}  {'PASS' if rep.passed else 'FAIL'}")


if __name__ == "__main__":
    main(*sys.argv[1:])
