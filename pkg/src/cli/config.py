"""
INI run configurations.

    [problem]
    name = linear            ; optional preset: linear | quartic
    potential = quadratic(1.0)
    rate = power(p=2, beta=1.0)
    y0 = 1.0
    T = 1.0
    N = 200

    [target]
    y_weight = one
    y_ref = exp(-1)
    u_weight = power(2)
    u_ref = exp(-1)
    param_weight = 0
    param_ref = 2

    [control]
    mode = family            ; family | free
    basis = exp(-1)          ; '|'-separated time functions
    lo = 0
    hi = 1

    [penalty]
    kind = BEN
    eps = 2, 1, 0.5, 0.1

    [minimize]
    max_iter = 20000
    gtol = 1e-8
    alternate = false
    multistart = 1
    seed = 0
    warm_start = true
    jobs = 1
    curve_points = 201
    reference_n = 1600
"""
import configparser
import re
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from convex.parse import parse_potential, parse_rate
from core.functions import parse_time_function
from core.grid import TimeGrid
from errors import ConfigError
from functionals.penalty import PenaltyKind, PenaltySpec
from functionals.target import TargetFunctional
from optimize.options import MinimizeOptions
from optimize.space import FreeNodal, ParamFamily
from problems import ProblemSetup, get_problem
from settings import get_settings

# (section, key) -> RunConfig field
KEYS: Dict[Tuple[str, str], str] = {
    ("problem", "name"): "problem",
    ("problem", "potential"): "potential",
    ("problem", "rate"): "rate",
    ("problem", "y0"): "y0",
    ("problem", "t"): "horizon",
    ("problem", "n"): "n_intervals",
    ("target", "y_weight"): "y_weight",
    ("target", "y_ref"): "y_ref",
    ("target", "dy_weight"): "dy_weight",
    ("target", "dy_ref"): "dy_ref",
    ("target", "u_weight"): "u_weight",
    ("target", "u_ref"): "u_ref",
    ("target", "param_weight"): "param_weight",
    ("target", "param_ref"): "param_ref",
    ("control", "mode"): "control_mode",
    ("control", "basis"): "basis",
    ("control", "lo"): "lo",
    ("control", "hi"): "hi",
    ("penalty", "kind"): "kind",
    ("penalty", "eps"): "eps",
    ("minimize", "max_iter"): "max_iter",
    ("minimize", "gtol"): "gtol",
    ("minimize", "alternate"): "alternate",
    ("minimize", "multistart"): "multistart",
    ("minimize", "seed"): "seed",
    ("minimize", "warm_start"): "warm_start",
    ("minimize", "jobs"): "jobs",
    ("minimize", "curve_points"): "curve_points",
    ("minimize", "reference_n"): "reference_n",
}
LIST_FIELDS = {"y0", "eps", "lo", "hi", "param_ref"}
TARGET_FIELDS = ("y_weight", "y_ref", "dy_weight", "dy_ref", "u_weight", "u_ref")
MINIMIZE_FIELDS = ("max_iter", "gtol", "alternate", "multistart", "seed", "warm_start", "jobs", "reference_n")

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:;#\s][^=:]*?)\s*[=:]")


class RunConfig(BaseModel):
    """Validated run configuration; `lines` maps fields to their source line."""
    problem: Optional[str] = None
    potential: Optional[str] = None
    rate: Optional[str] = None
    y0: Optional[List[float]] = None
    horizon: float = Field(1.0, gt=0)
    n_intervals: int = Field(default_factory=lambda: get_settings().default_n, ge=1)
    y_weight: Optional[str] = None
    y_ref: Optional[str] = None
    dy_weight: Optional[str] = None
    dy_ref: Optional[str] = None
    u_weight: Optional[str] = None
    u_ref: Optional[str] = None
    param_weight: float = Field(0.0, ge=0)
    param_ref: Optional[List[float]] = None
    control_mode: Literal["family", "free"] = "family"
    basis: Optional[str] = None
    lo: Optional[List[float]] = None
    hi: Optional[List[float]] = None
    kind: Optional[PenaltyKind] = None
    eps: List[float] = Field(default_factory=list)
    max_iter: Optional[int] = Field(None, ge=1)
    gtol: Optional[float] = Field(None, gt=0)
    alternate: bool = False
    multistart: int = Field(1, ge=1)
    seed: Optional[int] = None
    warm_start: bool = True
    jobs: Optional[int] = Field(None, ge=1)
    curve_points: int = Field(201, ge=3)
    reference_n: Optional[int] = Field(None, ge=1)
    lines: Dict[str, int] = Field(default_factory=dict)

    @field_validator("eps")
    @classmethod
    def _eps_decreasing(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("eps list is empty")
        if any(not e > 0 for e in value):
            raise ValueError("eps values must be strictly positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("eps values must be strictly decreasing")
        return value

    def line_of(self, name: str) -> Optional[int]:
        return self.lines.get(name)

    def options(self, **overrides) -> MinimizeOptions:
        values = {k: getattr(self, k) for k in MINIMIZE_FIELDS if getattr(self, k) is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return MinimizeOptions(**values)

    def _fail(self, message: str, name: str):
        raise ConfigError(message, line=self.line_of(name), key=name)

    def _parsed(self, parse, name: str):
        try:
            return parse(getattr(self, name))
        except ValueError as exc:
            self._fail(str(exc), name)

    def _time_function(self, name: str):
        text = getattr(self, name)
        if text is None:
            return None
        try:
            return parse_time_function(text)
        except ValueError as exc:
            self._fail(str(exc), name)

    def build(self) -> ProblemSetup:
        """Assemble target, penalty and control space, starting from the preset if one is named."""
        setup = None
        if self.problem is not None:
            kwargs = {"n": self.n_intervals}
            if self.kind is not None:
                kwargs["kind"] = self.kind.value
            if self.rate is not None:
                kwargs["rate"] = self._parsed(parse_rate, "rate")
            try:
                setup = get_problem(self.problem, **kwargs)
            except ValueError as exc:
                self._fail(str(exc), "problem")
        grid = TimeGrid(self.horizon, self.n_intervals) if setup is None else setup.grid
        target = self._target(setup)
        spec = self._spec(setup)
        space = self._space(setup, grid, spec.dim)
        eps = self.eps or (setup.eps_list if setup else [])
        curve_range = setup.curve_range if setup else (float(space.lower[0]), float(space.upper[0]))
        return ProblemSetup(self.problem or "custom", target, spec, space, eps_list=list(eps), curve_range=curve_range)

    def _target(self, setup: Optional[ProblemSetup]) -> TargetFunctional:
        if setup is not None and all(getattr(self, k) is None for k in TARGET_FIELDS) and self.param_ref is None:
            return setup.target
        functions = {k: self._time_function(k) for k in TARGET_FIELDS}
        return TargetFunctional(param_weight=self.param_weight, param_ref=self.param_ref, **functions)

    def _spec(self, setup: Optional[ProblemSetup]) -> PenaltySpec:
        if setup is not None and self.potential is None and self.y0 is None:
            return setup.spec
        if self.potential is None and setup is None:
            self._fail("[problem] potential is required without a preset", "potential")
        if self.kind is None and setup is None:
            self._fail("[penalty] kind is required without a preset", "kind")
        potential = self._parsed(parse_potential, "potential") if self.potential else setup.spec.potential
        rate = self._parsed(parse_rate, "rate") if self.rate else (setup.spec.rate if setup else None)
        y0 = self.y0 if self.y0 is not None else (setup.spec.y0 if setup else None)
        if y0 is None:
            self._fail("[problem] y0 is required", "y0")
        kind = self.kind or setup.spec.kind
        try:
            return PenaltySpec(kind, potential, y0=y0, rate=rate)
        except ValueError as exc:
            self._fail(str(exc), "kind")

    def _space(self, setup: Optional[ProblemSetup], grid: TimeGrid, dim: int):
        if setup is not None and self.basis is None and self.lo is None and self.hi is None \
                and self.control_mode == "family":
            return setup.space
        lo = self.lo if self.lo is not None else (list(setup.space.lower) if setup else None)
        hi = self.hi if self.hi is not None else (list(setup.space.upper) if setup else None)
        if lo is None or hi is None:
            self._fail("[control] lo and hi are required", "lo")
        try:
            if self.control_mode == "free":
                return FreeNodal(grid, lo[0], hi[0], dim=dim)
            if self.basis is None and setup is None:
                self._fail("[control] basis is required for a parameterized family", "basis")
            basis = [parse_time_function(b) for b in self.basis.split("|")] if self.basis else setup.space.basis
            return ParamFamily(grid, basis, lo, hi, dim=dim, tag=self.basis or setup.space.tag)
        except ValueError as exc:
            self._fail(str(exc), "basis")


def _line_map(text: str) -> Dict[Tuple[str, str], int]:
    lines = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        match = _SECTION.match(raw)
        if match:
            section = match.group(1).strip().lower()
            continue
        match = _KEY.match(raw)
        if match and section is not None:
            lines[(section, match.group(1).strip().lower())] = number
    return lines


def _split_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def parse_config_text(text: str) -> RunConfig:
    """Parse and validate INI text; errors carry the offending line number."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          line=getattr(exc, "lineno", None)) from exc
    line_map = _line_map(text)
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            where = (section.lower(), key.lower())
            if where not in KEYS:
                raise ConfigError(f"unknown key '{key}' in section [{section}]", line=line_map.get(where))
            name = KEYS[where]
            lines[name] = line_map.get(where)
            if raw.strip() == "" and name not in LIST_FIELDS:
                continue
            values[name] = _split_list(raw) if name in LIST_FIELDS else raw.strip()
    if "eps" not in values and "problem" not in values:
        raise ConfigError("[penalty] eps is required", line=None)
    try:
        config = RunConfig(**values, lines=lines)
        if "eps" not in values:
            config = config.model_copy(update={"eps": get_problem(config.problem).eps_list})
        return config
    except ValidationError as exc:
        error = exc.errors()[0]
        name = str(error["loc"][0]) if error["loc"] else ""
        raise ConfigError(f"invalid value for '{name}': {error['msg']}", line=lines.get(name)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc), line=lines.get("problem")) from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())
