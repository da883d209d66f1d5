"""
Named scalar time functions used for reference signals, weights and control
bases: const(c), exp(a[, s]) = s e^{a t}, power(k[, s]) = s t^k.
"""
import re
from dataclasses import dataclass

import numpy as np

KINDS = ("const", "exp", "power")

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


@dataclass(frozen=True)
class TimeFunction:
    """Vectorized scalar function of time."""
    kind: str
    rate: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown time function '{self.kind}', expected one of {KINDS}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "const":
            return np.full_like(t, self.scale)
        if self.kind == "exp":
            return self.scale * np.exp(self.rate * t)
        return self.scale * t ** self.rate

    def derivative(self) -> "TimeFunction":
        if self.kind == "const" or self.scale == 0.0:
            return TimeFunction("const", scale=0.0)
        if self.kind == "exp":
            return TimeFunction("exp", self.rate, self.scale * self.rate)
        if self.rate == 0.0:
            return TimeFunction("const", scale=0.0)
        return TimeFunction("power", self.rate - 1.0, self.scale * self.rate)

    def __str__(self) -> str:
        if self.kind == "const":
            return f"const({self.scale:g})"
        if self.scale == 1.0:
            return f"{self.kind}({self.rate:g})"
        return f"{self.kind}({self.rate:g}, {self.scale:g})"


def const(c: float = 1.0) -> TimeFunction:
    return TimeFunction("const", scale=c)


def exp_rate(a: float = -1.0, scale: float = 1.0) -> TimeFunction:
    return TimeFunction("exp", a, scale)


def power(k: float, scale: float = 1.0) -> TimeFunction:
    return TimeFunction("power", k, scale)


def parse_time_function(text: str) -> TimeFunction:
    """Parse 'const(2)', 'exp(-1)', 'power(2)', 'zero' or 'one'."""
    match = _CALL.match(text)
    if not match:
        raise ValueError(f"cannot parse time function '{text}'")
    name, raw = match.group(1), match.group(2)
    args = [float(a) for a in raw.split(",")] if raw and raw.strip() else []
    if name == "zero":
        return const(0.0)
    if name == "one":
        return const(1.0)
    if name == "const":
        return const(*args) if args else const()
    if name == "exp":
        return exp_rate(*args)
    if name == "power":
        if not args:
            raise ValueError("power(k) needs an exponent")
        return power(*args)
    raise ValueError(f"unknown time function '{name}'")
