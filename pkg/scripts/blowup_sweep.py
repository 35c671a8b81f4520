"""Gradient growth of the reversed flow as the reversal time t* grows.

usage: python3 scripts/blowup_sweep.py
"""

from gnb import experiments as ex


def main():
    sc = ex.blowup_scenario()
    print("  t*     growth     flagged  reversal error")
    for t_star in (0.02, 0.05, 0.1, 0.2, 0.3):
        rep = ex.run_blowup(sc, t_star)
        m = rep.measured
        err = m.get("reversal_error", float("nan"))
        print(f"{t_star:5.2f}  {m['gradient_growth']:10.1f}  {str(m['flagged']):7s}  {err:.2e}")


if __name__ == "__main__":
    main()
