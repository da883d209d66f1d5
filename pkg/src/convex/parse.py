"""
Parse potentials and rates from their configuration spelling, e.g.
`quadratic(1.0)`, `quartic`, `power(p=3, c=2)`, `abs(1)`,
`power(p=2, beta=1.0)` for rates.
"""
import re
from typing import Dict, List, Tuple

from .potentials import AbsValue, Potential, PowerP, Quadratic, Quartic
from .rates import PowerRate, RatePotential

_CALL = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*$")


def _split_call(text: str) -> Tuple[str, List[float], Dict[str, float]]:
    match = _CALL.match(text)
    if not match:
        raise ValueError(f"cannot parse '{text}', expected name or name(args)")
    name = match.group(1).lower()
    positional, named = [], {}
    raw = match.group(2)
    if raw and raw.strip():
        for part in raw.split(","):
            part = part.strip()
            if "=" in part:
                key, value = part.split("=", 1)
                named[key.strip().lower()] = float(value)
            else:
                if named:
                    raise ValueError(f"positional argument after keyword in '{text}'")
                positional.append(float(part))
    return name, positional, named


def parse_potential(text: str) -> Potential:
    """Build a built-in potential from 'name(args)'."""
    name, args, kwargs = _split_call(text)
    try:
        if name == "quadratic":
            return Quadratic(*args, **{("lam" if k in ("lambda", "lam") else k): v for k, v in kwargs.items()})
        if name == "quartic":
            if args or kwargs:
                raise ValueError("quartic takes no arguments")
            return Quartic()
        if name == "power":
            return PowerP(*args, **kwargs)
        if name == "abs":
            return AbsValue(*args, **kwargs)
    except TypeError as e:
        raise ValueError(f"bad arguments for potential '{text}': {e}")
    raise ValueError(f"unknown potential '{name}', expected quadratic, quartic, power or abs")


def parse_rate(text: str) -> RatePotential:
    """Build a rate potential from 'power(p=.., beta=..[, beta_max=..])' or 'quadratic'."""
    name, args, kwargs = _split_call(text)
    if name == "quadratic" and not args and not kwargs:
        return PowerRate(2.0, 1.0)
    if name != "power":
        raise ValueError(f"unknown rate '{name}', expected power(...) or quadratic")
    if "beta" in kwargs:
        kwargs["beta_min"] = kwargs.pop("beta")
    try:
        return PowerRate(*args, **kwargs)
    except TypeError as e:
        raise ValueError(f"bad arguments for rate '{text}': {e}")
