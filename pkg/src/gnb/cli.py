"""Command-line entry point: ``gnb <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, load_scenario
from .dynamics import evolve
from .io import emit_plot, write_json
from .nonlinearity import make_nonlinearity

log = logging.getLogger("gnb")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _scenario(args, default):
    if getattr(args, "config", None):
        return load_scenario(args.config)
    return default()


def cmd_simulate(args):
    sc = load_scenario(args.config)
    u0 = sc.initial()
    kernel = ex._kernel_for(sc) if np.all(u0 > 0) else None
    traj = evolve(u0, sc.solver, sc.F, kernel=kernel)
    rep = ex.RunReport(sc.describe())
    rep.artifacts += ex.write_artifacts(traj, args.out, sc.name)
    E = traj.series("energy")
    drift = float(np.abs(E - E[0]).max() / E[0]) if E[0] > 0 else 0.0
    rep.add("energy_drift", drift, 1e-8, drift <= 1e-8)
    if np.all(u0 > 0):
        rep.add("no_blowup_flag", float(traj.blowup), 0, not traj.blowup)
    rep.measured.update(steps=traj.steps, t_final=float(traj.times[-1]))
    return [rep]


def cmd_decay(args):
    if args.config:
        return [ex.run_decay(load_scenario(args.config), args.out)]
    return [ex.run_decay(ex.standard_scenario(), args.out),
            ex.run_decay(ex.decay_2d_scenario(), args.out)]


def cmd_blowup(args):
    sc = _scenario(args, ex.blowup_scenario)
    reps = [ex.run_blowup(sc, args.t_star)]
    if args.t_star != 0:
        reps.append(ex.run_blowup(sc, 0.0))
    return reps


def cmd_stability(args):
    if args.config:
        sc1 = load_scenario(args.config)
        if args.config2:
            return [ex.run_stability(sc1, load_scenario(args.config2))]
    else:
        sc1 = ex.standard_scenario(t_end=2.0)
    F2 = make_nonlinearity("power_real", sc1.F.param + 1e-3) if sc1.F.is_power else sc1.F
    return [ex.run_stability(sc1, ex.perturb_mode(sc1)),
            ex.run_stability(sc1, replace(sc1, name=sc1.name + "_F2", F=F2))]


def cmd_delta(args):
    return [ex.run_delta_cauchy(_scenario(args, ex.delta_scenario))]


def cmd_crossval(args):
    return [ex.run_crossval(_scenario(args, ex.standard_scenario))]


def cmd_verify(args):
    from .invariants import run_invariants

    reps = [run_invariants()]
    if args.suite == "all":
        std = ex.standard_scenario()
        reps += [ex.run_decay(std), ex.run_decay(ex.decay_2d_scenario()),
                 ex.run_blowup(ex.blowup_scenario(0.1)), ex.run_blowup(ex.blowup_scenario(0.0)),
                 ex.run_stability(ex.standard_scenario(t_end=2.0),
                                  ex.perturb_mode(ex.standard_scenario(t_end=2.0))),
                 ex.run_delta_cauchy(ex.delta_scenario()), ex.run_crossval(std),
                 ex.scaling_check(ex.standard_scenario(t_end=1.0)),
                 ex.reversal_check(replace(std, F=make_nonlinearity("identity")))]
    return reps


def cmd_emit_plot(args):
    out = args.output or Path(args.out) / f"{Path(args.csv).stem}_{args.col}.dat"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    emit_plot(args.csv, args.col, out)
    rep = ex.RunReport({"name": "emit-plot", "csv": str(args.csv), "col": args.col})
    rep.artifacts.append(str(out))
    return [rep]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gnb", description="Non-local Burgers flows on the torus.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, config=True, help=None):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--out", default=f"gnb_out/{name}", help="directory for artifacts and report.json")
        if config:
            sp.add_argument("--config", help="scenario file (key = value)")
        sp.set_defaults(func=fn)
        return sp

    sp = add("simulate", cmd_simulate, config=False, help="evolve one scenario and write diagnostics")
    sp.add_argument("--config", required=True)
    add("decay", cmd_decay, help="amplitude and gradient decay checks")
    sp = add("blowup", cmd_blowup, help="time-reversal blow-up experiment")
    sp.add_argument("--t-star", type=float, help="reversal time (default: scenario t_star, else 0.1)")
    sp = add("stability", cmd_stability, help="stability under perturbed data or nonlinearity")
    sp.add_argument("--config2")
    add("delta-cauchy", cmd_delta, help="collapse of regularized-flow gaps")
    add("crossval", cmd_crossval, help="spectral vs quadrature right-hand sides")
    sp = add("verify", cmd_verify, config=False, help="property suites")
    sp.add_argument("--suite", choices=("invariants", "all"), default="invariants")
    sp = add("emit-plot", cmd_emit_plot, config=False, help="two-column data from a diagnostics CSV")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--col", required=True)
    sp.add_argument("--output", help="output file (default: <out>/<csv stem>_<col>.dat)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        reports = args.func(args)
    except (FileNotFoundError, ConfigError, KeyError) as e:
        msg = e.args[0] if e.args else str(e)
        print(f"gnb {args.command}: {msg}", file=sys.stderr)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", {"scenario": None, "assertions": [], "artifacts": [],
                                         "error": str(msg)})
        return EXIT_USAGE
    out.mkdir(parents=True, exist_ok=True)
    doc = [r.to_json() for r in reports]
    ok = all(r.passed for r in reports)
    report_path = out / "report.json"
    write_json(report_path, doc[0] if len(doc) == 1 else {"runs": doc, "pass": ok})
    for r in reports:
        name = r.scenario.get("name", "run") if isinstance(r.scenario, dict) else "run"
        for c in r.checks:
            print(f"{name}: {c.line()}")
    print(f"report: {report_path}")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
