"""Scenario configuration: builtin experiments and JSON config files."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .core import ResourceVector, to_fraction
from .dispatch import DEMAND_DRF_FORMULAS, PolicyKind
from .mesos import Behavior, SecondLevelBehavior
from .workload import DEFAULT_TASK_DURATION, ArrivalProfile

DEFAULT_TIME_CAP = Fraction(50_000)


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


@dataclass(frozen=True)
class FrameworkConfig:
    name: str
    behavior: SecondLevelBehavior = SecondLevelBehavior()


@dataclass(frozen=True)
class ProfileConfig:
    framework: str
    count: int
    interval: Fraction
    demand: ResourceVector
    duration: Optional[Fraction] = None
    start_offset: Fraction = Fraction(0)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    nodes: int
    node_resources: ResourceVector
    frameworks: tuple[FrameworkConfig, ...]
    profiles: tuple[ProfileConfig, ...]
    policy: PolicyKind = PolicyKind.DRF_AWARE
    dispatch_period: Fraction = Fraction(1)
    allocation_period: Fraction = Fraction(1)
    seed: int = 0
    task_duration: Fraction = DEFAULT_TASK_DURATION
    time_cap: Fraction = DEFAULT_TIME_CAP
    demand_drf_formula: str = "difference"
    # [t_i, t_j] pairs for which summary.json reports unfairness
    unfairness_windows: tuple[tuple[Fraction, Fraction], ...] = ()

    def framework_ids(self) -> dict[str, int]:
        return {f.name: i for i, f in enumerate(self.frameworks)}

    def arrival_profiles(self) -> list[ArrivalProfile]:
        ids = self.framework_ids()
        return [
            ArrivalProfile(
                framework_id=ids[p.framework],
                count=p.count,
                interval=p.interval,
                demand=p.demand,
                duration=p.duration if p.duration is not None else self.task_duration,
                start_offset=p.start_offset,
            )
            for p in self.profiles
        ]

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    def capacity_in_tasks(self) -> int:
        """Concurrent tasks the cluster can run, assuming every task has the first profile's demand."""
        if not self.profiles:
            return 0
        d = self.profiles[0].demand
        per_node = min(
            int(n // q) for n, q in zip(self.node_resources.values, d.values) if q > 0
        )
        return per_node * self.nodes

    def fair_level(self) -> int:
        return self.capacity_in_tasks() // max(len(self.frameworks), 1)


# --- builtin scenarios -----------------------------------------------------

EXP_NODE = ResourceVector.of(cpu=8, mem=16 * 1024)
EXP_TASK = ResourceVector.of(cpu="0.5", mem=1024)
MOTIVATION_TASK = ResourceVector.of(cpu=1, mem=2 * 1024)

AURORA = FrameworkConfig("aurora", SecondLevelBehavior(Behavior.HOLD_OFFERS, Fraction(60), Fraction(5)))
MARATHON = FrameworkConfig("marathon", SecondLevelBehavior(Behavior.GREEDY_BIN_PACK, Fraction(60), Fraction(5)))
SCYLLA = FrameworkConfig("scylla", SecondLevelBehavior(Behavior.FIRST_FIT, Fraction(60), Fraction(5)))

# (framework, count, interval-seconds) rows, in registration order
_EXPERIMENTS: dict[str, tuple[tuple[FrameworkConfig, int, str], ...]] = {
    "exp1": ((MARATHON, 1000, "1"), (SCYLLA, 700, "1.5"), (AURORA, 500, "2")),
    "exp2": ((AURORA, 733, "1"), (MARATHON, 733, "1.5"), (SCYLLA, 733, "2")),
    "exp3": ((AURORA, 1000, "1"), (MARATHON, 700, "1.5"), (SCYLLA, 500, "2")),
    "exp4": ((AURORA, 500, "1"), (MARATHON, 700, "1.5"), (SCYLLA, 900, "2")),
}

# Task runtimes are not reported; these keep each scenario saturated for most
# of its arrival phase without letting backlogs dwarf the arrival pattern.
_DURATIONS = {"motivation": 90, "exp1": 90, "exp2": 100, "exp3": 100, "exp4": 95}

BUILTIN_NAMES = ("motivation", "exp1", "exp2", "exp3", "exp4")


def builtin_scenario(name: str) -> ScenarioConfig:
    if name == "motivation":
        return ScenarioConfig(
            name="motivation",
            nodes=4,
            node_resources=EXP_NODE,
            frameworks=(SCYLLA, MARATHON),
            profiles=(
                ProfileConfig("scylla", 200, Fraction(3, 2), MOTIVATION_TASK),
                ProfileConfig("marathon", 300, Fraction(1), MOTIVATION_TASK),
            ),
            policy=PolicyKind.PASSTHROUGH,
            task_duration=Fraction(_DURATIONS["motivation"]),
            demand_drf_formula="ratio",
        )
    rows = _EXPERIMENTS.get(name)
    if rows is None:
        raise ConfigError(f"scenario: unknown builtin scenario {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    return ScenarioConfig(
        name=name,
        nodes=8,
        node_resources=EXP_NODE,
        frameworks=tuple(fw for fw, _, _ in rows),
        profiles=tuple(ProfileConfig(fw.name, n, Fraction(iv), EXP_TASK) for fw, n, iv in rows),
        policy=PolicyKind.PASSTHROUGH if name == "exp1" else PolicyKind.DRF_AWARE,
        task_duration=Fraction(_DURATIONS[name]),
        demand_drf_formula="ratio",
    )


# --- JSON ------------------------------------------------------------------

def _num(x: Fraction) -> Any:
    """JSON form of an exact quantity: int when integral, else decimal string."""
    if x.denominator == 1:
        return x.numerator
    f = float(x)
    if Fraction(repr(f)) == x:
        return f
    return f"{x.numerator}/{x.denominator}"


def _vec_json(v: ResourceVector) -> dict[str, Any]:
    return {k: _num(q) for k, q in zip(v.kinds, v.values)}


def to_json(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "name": cfg.name,
        "cluster": {"nodes": cfg.nodes, "node_resources": _vec_json(cfg.node_resources)},
        "frameworks": [
            {
                "name": f.name,
                "behavior": f.behavior.variant.value,
                "hold_duration": _num(f.behavior.hold_duration),
                "decline_filter": _num(f.behavior.decline_filter),
            }
            for f in cfg.frameworks
        ],
        "profiles": [
            {
                "framework": p.framework,
                "count": p.count,
                "interval": _num(p.interval),
                "demand": _vec_json(p.demand),
                **({"duration": _num(p.duration)} if p.duration is not None else {}),
                "start_offset": _num(p.start_offset),
            }
            for p in cfg.profiles
        ],
        "policy": cfg.policy.value,
        "periods": {"dispatch": _num(cfg.dispatch_period), "allocation": _num(cfg.allocation_period)},
        "seed": cfg.seed,
        "task_duration": _num(cfg.task_duration),
        "time_cap": _num(cfg.time_cap),
        "demand_drf_formula": cfg.demand_drf_formula,
        "unfairness_windows": [[_num(a), _num(b)] for a, b in cfg.unfairness_windows],
    }


class _Reader:
    """Field access that turns type/range problems into ConfigError with a dotted path."""

    def __init__(self, data: Any, path: str = ""):
        self.data = data
        self.path = path

    def sub(self, key: Any) -> "_Reader":
        where = f"{self.path}.{key}" if isinstance(key, str) else f"{self.path}[{key}]"
        where = where.lstrip(".")
        if isinstance(self.data, dict):
            if key not in self.data:
                raise ConfigError(f"{where}: missing required field")
        elif isinstance(self.data, list):
            if not 0 <= key < len(self.data):
                raise ConfigError(f"{where}: index out of range")
        else:
            raise ConfigError(f"{self.path or '<root>'}: expected an object")
        return _Reader(self.data[key], where)

    def has(self, key: str) -> bool:
        return isinstance(self.data, dict) and key in self.data

    def opt(self, key: str) -> Optional["_Reader"]:
        return self.sub(key) if self.has(key) else None

    def number(self, *, positive: bool = False, nonneg: bool = False) -> Fraction:
        v = self.data
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ConfigError(f"{self.path}: expected a number, got {v!r}")
        try:
            x = to_fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{self.path}: not a number: {v!r}") from None
        if positive and x <= 0:
            raise ConfigError(f"{self.path}: must be > 0, got {v!r}")
        if nonneg and x < 0:
            raise ConfigError(f"{self.path}: must be >= 0, got {v!r}")
        return x

    def integer(self, *, positive: bool = False, nonneg: bool = False) -> int:
        x = self.number(positive=positive, nonneg=nonneg)
        if x.denominator != 1:
            raise ConfigError(f"{self.path}: expected an integer, got {self.data!r}")
        return int(x)

    def string(self) -> str:
        if not isinstance(self.data, str) or not self.data:
            raise ConfigError(f"{self.path}: expected a non-empty string")
        return self.data

    def items(self) -> list["_Reader"]:
        if not isinstance(self.data, list):
            raise ConfigError(f"{self.path}: expected a list")
        return [self.sub(i) for i in range(len(self.data))]

    def vector(self, *, positive: bool = False) -> ResourceVector:
        if not isinstance(self.data, dict):
            raise ConfigError(f"{self.path}: expected an object like {{\"cpu\": 1, \"mem\": 1024}}")
        vals = {}
        for k in self.data:
            vals[k] = self.sub(k).number(nonneg=True)
        try:
            v = ResourceVector.from_mapping(vals)
        except ValueError as e:
            raise ConfigError(f"{self.path}: {e}") from None
        if positive and any(q <= 0 for q in v.values):
            raise ConfigError(f"{self.path}: every component must be > 0")
        if v.is_zero():
            raise ConfigError(f"{self.path}: must be non-zero")
        return v


def from_json(data: dict[str, Any]) -> ScenarioConfig:
    r = _Reader(data)
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    cluster = r.sub("cluster")
    frameworks = []
    for fr in r.sub("frameworks").items():
        variant = fr.sub("behavior").string()
        try:
            behavior = Behavior(variant)
        except ValueError:
            raise ConfigError(
                f"{fr.path}.behavior: unknown behavior {variant!r}; expected one of "
                + ", ".join(b.value for b in Behavior)
            ) from None
        hold = fr.opt("hold_duration")
        filt = fr.opt("decline_filter")
        frameworks.append(FrameworkConfig(
            fr.sub("name").string(),
            SecondLevelBehavior(
                behavior,
                hold.number(nonneg=True) if hold else Fraction(60),
                filt.number(nonneg=True) if filt else Fraction(5),
            ),
        ))
    if not frameworks:
        raise ConfigError("frameworks: at least one framework is required")
    names = [f.name for f in frameworks]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"frameworks: duplicate framework names {dupes}")

    profiles = []
    for pr in r.sub("profiles").items():
        fw = pr.sub("framework").string()
        if fw not in names:
            raise ConfigError(f"{pr.path}.framework: unknown framework {fw!r}")
        dur = pr.opt("duration")
        off = pr.opt("start_offset")
        profiles.append(ProfileConfig(
            fw,
            pr.sub("count").integer(nonneg=True),
            pr.sub("interval").number(positive=True),
            pr.sub("demand").vector(),
            dur.number(nonneg=True) if dur else None,
            off.number(nonneg=True) if off else Fraction(0),
        ))

    kw: dict[str, Any] = {}
    if r.has("policy"):
        name = r.sub("policy").string()
        try:
            kw["policy"] = PolicyKind.parse(name)
        except ValueError as e:
            raise ConfigError(f"policy: {e}") from None
    if r.has("periods"):
        periods = r.sub("periods")
        if periods.has("dispatch"):
            kw["dispatch_period"] = periods.sub("dispatch").number(positive=True)
        if periods.has("allocation"):
            kw["allocation_period"] = periods.sub("allocation").number(positive=True)
    if r.has("seed"):
        kw["seed"] = r.sub("seed").integer(nonneg=True)
    if r.has("task_duration"):
        kw["task_duration"] = r.sub("task_duration").number(nonneg=True)
    if r.has("time_cap"):
        kw["time_cap"] = r.sub("time_cap").number(positive=True)
    if r.has("demand_drf_formula"):
        formula = r.sub("demand_drf_formula").string()
        if formula not in DEMAND_DRF_FORMULAS:
            raise ConfigError(
                f"demand_drf_formula: unknown formula {formula!r}; expected one of {sorted(DEMAND_DRF_FORMULAS)}"
            )
        kw["demand_drf_formula"] = formula
    if r.has("unfairness_windows"):
        windows = []
        for w in r.sub("unfairness_windows").items():
            a, b = w.sub(0).number(nonneg=True), w.sub(1).number(nonneg=True)
            if not a < b:
                raise ConfigError(f"{w.path}: window start must be before its end")
            windows.append((a, b))
        kw["unfairness_windows"] = tuple(windows)

    return ScenarioConfig(
        name=r.sub("name").string() if r.has("name") else "custom",
        nodes=cluster.sub("nodes").integer(positive=True),
        node_resources=cluster.sub("node_resources").vector(positive=True),
        frameworks=tuple(frameworks),
        profiles=tuple(profiles),
        **kw,
    )


def load(spec: str) -> ScenarioConfig:
    """A builtin scenario name or a path to a JSON config file."""
    if spec in BUILTIN_NAMES:
        return builtin_scenario(spec)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"scenario: {spec!r} is neither a builtin scenario nor an existing file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"scenario: {path}: invalid JSON ({e})") from None
    return from_json(data)
