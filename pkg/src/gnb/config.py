"""Flat ``key = value`` scenario files."""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

from .dynamics import SolverConfig
from .experiments import Scenario, U0Spec
from .nonlinearity import make_nonlinearity


class ConfigError(ValueError):
    pass


_SOLVER_KEYS = {f.name for f in fields(SolverConfig)} - {"s"}
_PARAM_KEYS = {"t_star", "deltas", "J", "ns", "t_mid"}
_U0_KEYS = {"kind", "base", "amplitudes", "freqs", "phases", "seed", "min", "max", "smoothness"}


def parse_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = (p.strip() for p in line.split("=", 1))
        if k in out:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        out[k] = v
    return out


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _freqs(v: str, d: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for item in (x.strip() for x in v.split(",")):
        if not item:
            continue
        k = tuple(int(c) for c in item.split(":"))
        if len(k) != d:
            raise ConfigError(f"frequency {item!r} does not have {d} components")
        out.append(k)
    return tuple(out)


def scenario_from_dict(kv: dict[str, str]) -> Scenario:
    kv = dict(kv)
    try:
        name = kv.pop("name", "scenario")
        d = int(kv.pop("d", "1"))
        n = int(kv.pop("n", "128"))
        s = float(kv.pop("s", "0.5"))
        kind = kv.pop("F.kind", "power_int")
        param = kv.pop("F.param", None)
        F = make_nonlinearity(kind, None if param is None else float(param))

        u0kv = {k[3:]: kv.pop(k) for k in list(kv) if k.startswith("u0.")}
        bad = set(u0kv) - _U0_KEYS
        if bad:
            raise ConfigError(f"unknown u0 keys: {sorted('u0.' + b for b in bad)}")
        u0 = U0Spec(
            kind=u0kv.get("kind", "constant_plus_modes"),
            base=float(u0kv.get("base", "2.0")),
            amplitudes=_floats(u0kv.get("amplitudes", "")),
            freqs=_freqs(u0kv.get("freqs", ""), d),
            phases=_floats(u0kv.get("phases", "")),
            seed=int(u0kv.get("seed", "0")),
            lo=float(u0kv.get("min", "1.0")),
            hi=float(u0kv.get("max", "2.0")),
            smoothness=int(u0kv.get("smoothness", "8")),
        )

        solver = {}
        for k in list(kv):
            if k in _SOLVER_KEYS:
                v = kv.pop(k)
                typ = type(getattr(SolverConfig, k))
                solver[k] = typ(v) if typ is not str else v
        cfg = SolverConfig(s=s, **solver)

        params = {}
        for k in list(kv):
            if k in _PARAM_KEYS:
                v = kv.pop(k)
                params[k] = _floats(v) if k in ("deltas", "ns") else float(v)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e
    if kv:
        raise ConfigError(f"unknown keys: {sorted(kv)}")
    return Scenario(name=name, d=d, n=n, F=F, u0=u0, solver=cfg, params=params)


def load_scenario(path) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return scenario_from_dict(parse_text(p.read_text()))


def dump_scenario(sc: Scenario) -> str:
    lines = [f"name = {sc.name}", f"d = {sc.d}", f"n = {sc.n}", f"s = {sc.solver.s}",
             f"F.kind = {sc.F.kind}", f"F.param = {sc.F.param!r}"]
    u = sc.u0
    lines.append(f"u0.kind = {u.kind}")
    if u.kind == "constant_plus_modes":
        lines += [f"u0.base = {u.base!r}",
                  "u0.amplitudes = " + ", ".join(repr(a) for a in u.amplitudes),
                  "u0.freqs = " + ", ".join(":".join(str(c) for c in k) for k in u.freqs),
                  "u0.phases = " + ", ".join(repr(a) for a in u.phases)]
    else:
        lines += [f"u0.seed = {u.seed}", f"u0.min = {u.lo!r}", f"u0.max = {u.hi!r}",
                  f"u0.smoothness = {u.smoothness}"]
    for f in fields(SolverConfig):
        if f.name != "s":
            lines.append(f"{f.name} = {getattr(sc.solver, f.name)}")
    for k, v in sc.params.items():
        lines.append(f"{k} = " + (", ".join(repr(x) for x in v) if isinstance(v, tuple) else repr(v)))
    return "\n".join(lines) + "\n"


def with_solver(sc: Scenario, **kw) -> Scenario:
    return replace(sc, solver=replace(sc.solver, **kw))
