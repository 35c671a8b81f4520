"""Run every named experiment and write one report.json per run under an output directory.

usage: python3 scripts/run_all.py [OUT]
"""

import sys
import time
from dataclasses import replace
from pathlib import Path

from gnb import experiments as ex
from gnb.invariants import run_invariants
from gnb.io import write_json
from gnb.nonlinearity import make_nonlinearity


def main(out="gnb_out/all"):
    out = Path(out)
    std = ex.standard_scenario()
    std2 = ex.standard_scenario(t_end=2.0)
    jobs = {
        "invariants": run_invariants,
        "decay_1d": lambda: ex.run_decay(std, out / "decay_1d"),
        "decay_2d": lambda: ex.run_decay(ex.decay_2d_scenario(), out / "decay_2d"),
        "blowup": lambda: ex.run_blowup(ex.blowup_scenario(0.1)),
        "rereversal": lambda: ex.run_blowup(ex.blowup_scenario(0.0)),
        "stability_data": lambda: ex.run_stability(std2, ex.perturb_mode(std2)),
        "stability_F": lambda: ex.run_stability(
            std2, replace(std2, name="standard_F2", F=make_nonlinearity("power_real", 2.001))),
        "delta_cauchy": lambda: ex.run_delta_cauchy(ex.delta_scenario()),
        "crossval": lambda: ex.run_crossval(std),
        "scaling": lambda: ex.scaling_check(ex.standard_scenario(t_end=1.0)),
        "reversal": lambda: ex.reversal_check(replace(std, F=make_nonlinearity("identity"))),
    }
    ok = True
    for name, job in jobs.items():
        t0 = time.perf_counter()
        rep = job()
        (out / name).mkdir(parents=True, exist_ok=True)
        write_json(out / name / "report.json", rep.to_json())
        ok &= rep.passed
        print(f"{name:16s} {'PASS' if rep.passed else 'FAIL'}  {time.perf_counter() - t0:6.1f}s")
        for c in rep.checks:
            print("    " + c.line())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
