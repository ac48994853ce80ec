"""Run configuration: built-in defaults, then an optional YAML file, then command-line flags."""
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from typing import Optional

import oyaml as yaml

from autobid.auction import EQUAL_SPLIT, POLICIES
from autobid.exceptions import ParameterError
from autobid.gadgets import NATIVE, OBJECTIVES, RESERVE_MODES, REVENUE
from autobid.learning import EXP, POLY, STEP
from autobid.utils.rationals import format_rational, parse_parameter

BUDGET_ENV = "AUTOBID_BUDGET"
DEFAULT_BUDGET = 10 ** 6

RULES = (STEP, POLY, EXP)
INITIAL_MODES = ("ones", "random")
LABELINGS = "labelings"

# YAML keys that differ from the RunConfig field names
_ALIASES = {"lambda": "lam", "rule-param": "rule_param"}


@dataclass(frozen=True)
class RunConfig:
    subcommand: Optional[str] = None
    instance: Optional[str] = None
    profile: Optional[str] = None
    trace: Optional[str] = None
    source: Optional[str] = None
    out: Optional[str] = None
    signals: Optional[str] = None
    epsilon: Fraction = Fraction(1, 10)
    delta: Fraction = Fraction(1, 10)
    gamma: Optional[Fraction] = None
    beta: Optional[Fraction] = None
    alpha: Optional[Fraction] = None
    mu: Optional[Fraction] = None
    lam: Optional[Fraction] = None
    rounds: int = 100
    grid: str = "geom:9"
    objective: str = REVENUE
    reserves: str = NATIVE
    rule: str = STEP
    rule_param: Optional[Fraction] = None
    policy: str = EQUAL_SPLIT
    initial: str = "ones"
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    workers: int = 1
    precision: int = 6


_RATIONAL_FIELDS = ("epsilon", "delta", "gamma", "beta", "alpha", "mu", "lam", "rule_param")
_INT_FIELDS = ("rounds", "seed", "budget", "workers", "precision")


def load_yaml(path):
    try:
        with open(path) as f:
            loaded = yaml.safe_load(f)
    except OSError as e:
        raise ParameterError(f"Cannot read config {path}: {e}")
    except yaml.YAMLError as e:
        raise ParameterError(f"Config {path} is not valid YAML: {e}")
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ParameterError(f"Config {path} must hold a mapping")
    return {_ALIASES.get(k, str(k).replace("-", "_")): v for k, v in loaded.items()}


def _as_int(name, value):
    if isinstance(value, bool):
        raise ParameterError(f"{name} must be an integer")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be an integer, got {value!r}")


def _in_range(name, value, low, high, closed_high=False):
    inside = low <= value <= high if closed_high else low <= value < high
    if not inside:
        raise ParameterError(f"{name} = {format_rational(value)} is outside its range")


def validate(config):
    if config.epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    _in_range("epsilon", config.epsilon, 0, 1)
    if config.delta <= 0:
        raise ParameterError("delta must be positive")
    _in_range("delta", config.delta, 0, 1)
    if config.gamma is not None:
        _in_range("gamma", config.gamma, 0, 1)
    for name in ("beta", "alpha", "mu"):
        value = getattr(config, name)
        if value is not None:
            _in_range(name, value, 0, 1)
    if config.lam is not None and config.lam <= 0:
        raise ParameterError("lambda must be positive")
    if config.rounds < 1:
        raise ParameterError("rounds must be at least 1")
    if config.workers < 1 or config.budget < 1 or config.precision < 0:
        raise ParameterError("workers and budget must be positive and precision nonnegative")
    for name, value, allowed in (
        ("objective", config.objective, OBJECTIVES),
        ("reserves", config.reserves, RESERVE_MODES),
        ("rule", config.rule, RULES),
        ("policy", config.policy, POLICIES),
        ("initial", config.initial, INITIAL_MODES),
    ):
        if value not in allowed:
            raise ParameterError(f"{name} must be one of {', '.join(allowed)}, got {value!r}")
    grid_options(config.grid)
    return config


def resolve_config(args, environ=None):
    """Merges defaults, the YAML file named by args.config and the flags set on args."""
    environ = os.environ if environ is None else environ
    values = {}
    path = getattr(args, "config", None)
    if path:
        values.update(load_yaml(path))
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ParameterError(f"Unknown config keys: {', '.join(unknown)}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if BUDGET_ENV in environ:
        values["budget"] = environ[BUDGET_ENV]
    for name in _RATIONAL_FIELDS:
        if name in values:
            values[name] = parse_parameter(values[name])
    for name in _INT_FIELDS:
        if name in values:
            values[name] = _as_int(name, values[name])
    return validate(replace(RunConfig(), **values))


def grid_options(spec):
    """Parses a grid spec: "labelings", "step:<p/q>", "geom:<count>" or a comma list of points."""
    spec = str(spec).strip()
    if spec == LABELINGS:
        return {"labelings": True}
    kind, _, rest = spec.partition(":")
    if kind == "step" and rest:
        return {"step": parse_parameter(rest)}
    if kind == "geom" and rest:
        return {"count": _as_int("grid count", rest)}
    try:
        points = [parse_parameter(p) for p in spec.split(",") if p.strip()]
    except ParameterError:
        raise ParameterError(f"Malformed grid spec {spec!r}")
    if not points:
        raise ParameterError(f"Malformed grid spec {spec!r}")
    return {"candidates": points}


def render(value):
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, dict):
        return {str(k): render(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [render(v) for v in value]
    return value


def dump_yaml(document):
    "YAML rendering with exact rationals as p/q strings; key order is kept."
    return yaml.safe_dump(render(document), default_flow_style=False)


def header(config, extra=None):
    "The resolved configuration (and any derived parameters) as a YAML document."
    document = {"config": asdict(config)}
    if extra:
        document["derived"] = dict(extra)
    return dump_yaml(document)


def setting(value, default=Fraction(0)):
    "value unless it was left unset."
    return default if value is None else value
