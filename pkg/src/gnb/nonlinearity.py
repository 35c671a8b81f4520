"""Admissible nonlinearities F with F(0) = 0 and F' > 0 on (0, inf)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("power_int", "power_real", "exp_minus_one", "u_minus_sin", "identity")


class HypothesisViolation(ValueError):
    """F' fails to be positive on a queried interval."""


@dataclass(frozen=True)
class Nonlinearity:
    kind: str
    param: float = 1.0
    reflected: bool = False  # F~(u) = -F(-u)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "power_int":
            if self.param != int(self.param) or self.param < 1:
                raise ValueError("power_int needs an integer exponent n >= 1")
        if self.kind == "power_real" and not self.param > 0:
            raise ValueError("power_real needs an exponent alpha > 0")

    @property
    def is_power(self) -> bool:
        return self.kind in ("power_int", "power_real", "identity")

    @property
    def is_odd(self) -> bool:
        if self.kind in ("identity", "u_minus_sin"):
            return True
        return self.kind == "power_int" and int(self.param) % 2 == 1

    def _base(self, u, order):
        u = np.asarray(u, dtype=float)
        kind, p = self.kind, self.param
        if kind == "identity":
            return (u, np.ones_like(u), np.zeros_like(u))[order]
        if kind == "power_int":
            n = int(p)
            if order == 0:
                return u**n
            if order == 1:
                return n * u ** (n - 1)
            return n * (n - 1) * u ** (n - 2) if n >= 2 else np.zeros_like(u)
        if kind == "power_real":
            if np.any(u <= 0):
                raise ValueError("power_real is only defined on strictly positive states")
            a = p
            return (u**a, a * u ** (a - 1), a * (a - 1) * u ** (a - 2))[order]
        if kind == "exp_minus_one":
            return np.expm1(u) if order == 0 else np.exp(u)
        # u_minus_sin
        return (u - np.sin(u), 1.0 - np.cos(u), np.sin(u))[order]

    def _eval(self, u, order):
        if not self.reflected:
            return self._base(u, order)
        u = np.asarray(u, dtype=float)
        # d^k/du^k [-F(-u)] = (-1)^(k+1) F^(k)(-u)
        return (-1.0) ** (order + 1) * self._base(-u, order)

    def F(self, u):
        return self._eval(u, 0)

    def dF(self, u):
        return self._eval(u, 1)

    def d2F(self, u):
        return self._eval(u, 2)

    def critical_points(self, lo: float, hi: float) -> np.ndarray:
        """Interior extrema of F' on [lo, hi]."""
        if self.kind != "u_minus_sin":
            return np.empty(0)
        # F' = 1 - cos u has extrema at multiples of pi (same after reflection)
        k = np.arange(np.ceil(lo / np.pi), np.floor(hi / np.pi) + 1)
        return k * np.pi

    def describe(self) -> dict:
        return {"kind": self.kind, "param": self.param, "reflected": self.reflected}


def make_nonlinearity(kind: str, param: float | None = None) -> Nonlinearity:
    if kind == "power_int" and param is not None and param == 0:
        raise ValueError("n = 0 gives F' = 0, i.e. a trivial evolution")
    if param is None:
        param = {"power_int": 2, "power_real": 2.0}.get(kind, 1.0)
    return Nonlinearity(kind, float(param))


def fprime_bounds(F: Nonlinearity, lo: float, hi: float, samples: int = 1024,
                  strict: bool = True) -> tuple[float, float]:
    """(min F', max F') over a closed uniform sample of [lo, hi].

    Known interior extrema of F' are added to the sample so the result is
    exact for the registered kinds.
    """
    if not (0 < lo <= hi):
        raise ValueError(f"need 0 < lo <= hi, got [{lo}, {hi}]")
    if samples < 64:
        raise ValueError("at least 64 samples required")
    pts = np.concatenate([np.linspace(lo, hi, samples), F.critical_points(lo, hi)])
    vals = F.dF(pts)
    mn, mx = float(vals.min()), float(vals.max())
    if strict and mn <= 0:
        raise HypothesisViolation(f"min F' = {mn:g} <= 0 on [{lo}, {hi}]")
    return mn, mx


def odd_reflection(F: Nonlinearity) -> Nonlinearity:
    """F~(u) = -F(-u); returns F itself when F is odd."""
    if F.is_odd:
        return F
    return Nonlinearity(F.kind, F.param, reflected=not F.reflected)


def sup_fprime_gap(F1: Nonlinearity, F2: Nonlinearity, lo: float, hi: float,
                   samples: int = 1024) -> float:
    """Sampled ||F1' - F2'||_inf on [lo, hi]."""
    pts = np.linspace(lo, hi, samples)
    return float(np.abs(F1.dF(pts) - F2.dF(pts)).max())
