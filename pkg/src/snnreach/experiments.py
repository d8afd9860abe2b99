"""
Closed-loop experiment runner.

An experiment couples a controller (spiking arm controller or PID) to a plant
(kinematic chain or dynamic two-link arm), follows a target schedule at a fixed
control period, and records a :class:`~snnreach.metrics.TrialTrace` per trial.
:func:`run_experiment` writes one trace CSV per trial plus a summary CSV.

Configs are YAML files with ``schema_version: 1``; see ``configs/`` for
examples and :func:`parse_config` for the accepted keys.
"""

from __future__ import annotations

import copy
import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import yaml

from .arm import DEFAULT_COORDINATION_WEIGHT, CoordinationGraph, arm_step, build_topology, initial_arm_state
from .joint import JointConfig, ablate
from .metrics import (
    NotSettled,
    TrialTrace,
    bell_shape_score,
    derivatives,
    step_metrics,
)
from .pid import PidGains, PidState, pid_step
from .plant import (
    ArmState,
    IntegrationError,
    TwoLinkParams,
    calibrate_torque_increment,
    ik_two_link,
    kinematic_step,
    link_points,
    two_link_step,
)
from .presets import JACO_LENGTHS, PRESETS, joint_config

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "SimulationError",
    "ScheduleEntry",
    "WorkspaceBounds",
    "PlantSpec",
    "ControllerSpec",
    "MetricsSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "load_config",
    "load_plant_config",
    "CalibrationRequest",
    "parse_config",
    "random_goal_schedule",
    "simulate",
    "trial_metrics",
    "schedule_from_trace",
    "write_summary_csv",
    "resolve_out_dir",
    "run_experiment",
    "write_trace_csv",
    "read_trace_csv",
    "trace_columns",
    "SUMMARY_COLUMNS",
    "OUT_DIR_ENV",
]

SCHEMA_VERSION = 1
OUT_DIR_ENV = "SNNREACH_OUT_DIR"
EXPERIMENT_KINDS = ("step_response", "reach_sequence", "ablation_sweep", "pid_compare", "param_sweep")
ABLATIONS = {"full": (False, False), "no_psi": (False, True), "neither": (True, True)}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``line`` points into the source file when known."""

    def __init__(self, message: str, path: Sequence = (), line: Optional[int] = None, source: str = "<config>"):
        self.path = tuple(path)
        self.line = line
        self.source = source
        self.message = message
        where = f"{source}:{line}" if line else source
        key = ".".join(str(p) for p in self.path)
        super().__init__(f"{where}: {key + ': ' if key else ''}{message}")


class SimulationError(RuntimeError):
    """Integration fault during a trial; ``step`` is the control-step index."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"integration fault at step {step}: {cause}")


# --- schedules -----------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleEntry:
    time_ms: float
    targets: tuple[float, ...]
    point: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class WorkspaceBounds:
    """Annular sector in which random end-effector goals are drawn (m, rad)."""

    r_min: float
    r_max: float
    angle_min: float = -math.pi
    angle_max: float = math.pi


def random_goal_schedule(seed: int, count: int, interval_ms: float, bounds: WorkspaceBounds,
                         lengths=(0.1, 0.11), elbow: str = "down", start_ms: float = 0.0) -> list[ScheduleEntry]:
    """Reproducible random workspace goals at fixed intervals, converted to joint targets by IK."""
    l1, l2 = lengths
    if count < 0:
        raise ValueError("count must be non-negative")
    if interval_ms <= 0:
        raise ValueError("interval_ms must be positive")
    if bounds.r_max > l1 + l2 or bounds.r_min < abs(l1 - l2) or bounds.r_min > bounds.r_max:
        raise ValueError(f"radius bounds [{bounds.r_min}, {bounds.r_max}] leave the reachable "
                         f"annulus [{abs(l1 - l2)}, {l1 + l2}]")
    if bounds.angle_min > bounds.angle_max:
        raise ValueError("angle_min must not exceed angle_max")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        r = rng.uniform(bounds.r_min, bounds.r_max)
        phi = rng.uniform(bounds.angle_min, bounds.angle_max)
        p = (float(r * math.cos(phi)), float(r * math.sin(phi)))
        q = ik_two_link(p, lengths, elbow)
        out.append(ScheduleEntry(start_ms + i * interval_ms, tuple(float(x) for x in q), p))
    return out


# --- config objects ----------------------------------------------------------

@dataclass(frozen=True)
class PlantSpec:
    kind: str = "kinematic"                        # kinematic | two_link
    n_joints: int = 1
    initial_q: tuple[float, ...] = (0.0,)
    lengths: tuple[float, ...] = (0.1,)            # for end-effector positions
    limits: Optional[tuple[tuple[float, ...], tuple[float, ...]]] = None
    two_link: TwoLinkParams = field(default_factory=TwoLinkParams)
    calibration_settle_s: float = 0.5
    calibration_period_s: Optional[float] = None


@dataclass(frozen=True)
class ControllerSpec:
    kind: str = "snn"                              # snn | pid
    preset: str = "reference"
    overrides: Mapping = field(default_factory=dict)
    per_joint: tuple[Mapping, ...] = ()
    disable_facilitation: bool = False
    disable_psi: bool = False
    coordination: CoordinationGraph = field(default_factory=CoordinationGraph)
    pid: PidGains = field(default_factory=PidGains)

    def joint_configs(self, n: int) -> list[JointConfig]:
        cfgs = []
        for j in range(n):
            over = _deep_merge(self.overrides, self.per_joint[j] if j < len(self.per_joint) else {})
            cfgs.append(ablate(joint_config(self.preset, over), self.disable_facilitation, self.disable_psi))
        return cfgs


@dataclass(frozen=True)
class MetricsSpec:
    joint: int = 0
    smoothing_ms: Optional[float] = None
    source: str = "end-effector"                   # end-effector | joint
    prominence: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    plant: PlantSpec
    controller: ControllerSpec
    schedule: tuple[ScheduleEntry, ...]
    duration_ms: float
    dt_ms: float = 1.0
    seed: int = 0
    metrics: MetricsSpec = field(default_factory=MetricsSpec)
    sweep_parameter: Optional[str] = None
    sweep_values: tuple = ()
    output_dir: str = "out"
    prefix: str = "trial"
    raw: Mapping = field(default_factory=dict, compare=False, repr=False)


def _deep_merge(base: Mapping, over: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# --- YAML loading with line numbers ----------------------------------------

def _line_index(text: str) -> dict:
    index: dict[tuple, int] = {}
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is None:
        return index

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                walk(v, p)
                index[p] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))
                index.setdefault(path + (i,), v.start_mark.line + 1)
        else:
            index.setdefault(path, node.start_mark.line + 1)

    index[()] = root.start_mark.line + 1
    walk(root, ())
    return index


class _Reader:
    """Typed access to a nested mapping that reports errors with source lines."""

    def __init__(self, data: Mapping, index: dict, source: str):
        self.data = data
        self.index = index
        self.source = source

    def error(self, path, message):
        path = tuple(path)
        line = None
        for k in range(len(path), -1, -1):
            if path[:k] in self.index:
                line = self.index[path[:k]]
                break
        return ConfigError(message, path, line, self.source)

    def node(self, path):
        cur = self.data
        for p in path:
            if isinstance(cur, Mapping) and p in cur:
                cur = cur[p]
            elif isinstance(cur, list) and isinstance(p, int) and p < len(cur):
                cur = cur[p]
            else:
                return _MISSING
        return cur

    def section(self, path, allowed):
        value = self.node(path)
        if value is _MISSING or value is None:
            return {}
        if not isinstance(value, Mapping):
            raise self.error(path, "expected a mapping")
        for k in value:
            if k not in allowed:
                raise self.error(tuple(path) + (k,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return value

    def get(self, path, kind=float, default=None, required=False, choices=None, check=None,
            check_msg="invalid value"):
        value = self.node(path)
        if value is _MISSING or value is None:
            if required:
                raise self.error(path, "required key is missing")
            return default
        try:
            value = _coerce(value, kind)
        except (TypeError, ValueError) as exc:
            raise self.error(path, f"expected {getattr(kind, '__name__', kind)}: {exc}") from None
        if choices is not None and value not in choices:
            raise self.error(path, f"must be one of {', '.join(map(str, choices))}, got {value!r}")
        if check is not None and not check(value):
            raise self.error(path, check_msg)
        return value


class _Missing:
    pass


_MISSING = _Missing()


def _coerce(value, kind):
    if kind is float:
        if isinstance(value, bool):
            raise TypeError("boolean is not a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise TypeError(f"{value!r} is not an integer")
        return int(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise TypeError(f"{value!r} is not true/false")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise TypeError(f"{value!r} is not a string")
        return value
    if kind == "floats":
        if not isinstance(value, list):
            raise TypeError("expected a list of numbers")
        return tuple(_coerce(v, float) for v in value)
    if kind == "mapping":
        if not isinstance(value, Mapping):
            raise TypeError("expected a mapping")
        return dict(value)
    raise TypeError(f"unsupported kind {kind}")


def load_config(path, overrides: Optional[Mapping] = None) -> ExperimentConfig:
    """Read and validate a YAML experiment config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    return parse_config(text, source=str(path), overrides=overrides)


def parse_config(text: str, source: str = "<config>", overrides: Optional[Mapping] = None) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
        index = _line_index(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, source=source) from None
    if not isinstance(data, Mapping):
        raise ConfigError("top level must be a mapping", line=1, source=source)
    if overrides:
        data = _deep_merge(data, overrides)
    return _build_config(_Reader(data, index, source))


@dataclass(frozen=True)
class CalibrationRequest:
    plant: PlantSpec
    delta_theta: tuple[float, ...]


def load_plant_config(path) -> CalibrationRequest:
    """Read a plant-only YAML file for torque calibration.

    Keys: ``schema_version``, ``plant`` (as in experiment configs; kind must be
    ``two_link``), ``dt_ms`` and ``delta_theta`` (one value or one per joint,
    default: the reference preset's angle increment).
    """
    path = Path(path)
    try:
        text = path.read_text()
        data = yaml.safe_load(text)
        index = _line_index(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, source=str(path)) from None
    if not isinstance(data, Mapping):
        raise ConfigError("top level must be a mapping", line=1, source=str(path))
    if isinstance(data.get("plant"), Mapping):
        data["plant"].setdefault("kind", "two_link")
    r = _Reader(data, index, str(path))
    r.section((), {"schema_version", "plant", "dt_ms", "delta_theta"})
    version = r.get(("schema_version",), int, required=True)
    if version != SCHEMA_VERSION:
        raise r.error(("schema_version",), f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    dt_ms = r.get(("dt_ms",), float, 1.0, check=lambda v: v > 0, check_msg="must be positive")
    plant = _build_plant(r, dt_ms)
    if plant.kind != "two_link":
        raise r.error(("plant", "kind"), "calibration needs the two_link plant")
    raw = r.node(("delta_theta",))
    if isinstance(raw, list):
        delta = r.get(("delta_theta",), "floats")
        if len(delta) != plant.n_joints:
            raise r.error(("delta_theta",), f"expected {plant.n_joints} values")
    else:
        delta = (r.get(("delta_theta",), float, PRESETS["reference"]["angle_increment"]),) * plant.n_joints
    if min(delta) <= 0:
        raise r.error(("delta_theta",), "must be positive")
    return CalibrationRequest(plant, delta)


_TOP_KEYS = {"schema_version", "experiment", "dt_ms", "duration_ms", "seed", "plant", "controller",
             "schedule", "random_goals", "metrics", "sweep", "output"}


def _build_config(r: _Reader) -> ExperimentConfig:
    r.section((), _TOP_KEYS)
    version = r.get(("schema_version",), int, required=True)
    if version != SCHEMA_VERSION:
        raise r.error(("schema_version",), f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    kind = r.get(("experiment",), str, required=True, choices=EXPERIMENT_KINDS)
    dt_ms = r.get(("dt_ms",), float, 1.0, check=lambda v: v > 0, check_msg="must be positive")
    duration = r.get(("duration_ms",), float, required=True, check=lambda v: v > 0, check_msg="must be positive")
    seed = r.get(("seed",), int, 0)

    plant = _build_plant(r, dt_ms)
    controller = _build_controller(r, plant)
    if controller.kind == "snn" or kind == "pid_compare":
        for c in controller.joint_configs(plant.n_joints):
            if abs(c.dt - dt_ms) > 1e-12:
                raise r.error(("dt_ms",), f"controller dt {c.dt} ms differs from experiment dt_ms {dt_ms}")
    schedule = _build_schedule(r, plant, seed)
    metrics = _build_metrics(r, plant)

    sweep = r.section(("sweep",), {"parameter", "values"})
    sweep_param, sweep_values = None, ()
    if kind == "param_sweep":
        sweep_param = r.get(("sweep", "parameter"), str, required=True)
        values = r.node(("sweep", "values"))
        if not isinstance(values, list) or not values:
            raise r.error(("sweep", "values"), "expected a non-empty list")
        sweep_values = tuple(values)
    elif sweep:
        raise r.error(("sweep",), "only valid for experiment: param_sweep")

    if kind == "pid_compare" and plant.kind != "two_link":
        raise r.error(("plant", "kind"), "pid_compare needs the two_link plant (PID outputs torques)")
    if controller.kind == "pid" and plant.kind != "two_link":
        raise r.error(("controller", "kind"), "the PID controller drives the two_link plant only")

    r.section(("output",), {"dir", "prefix"})
    return ExperimentConfig(
        kind=kind, plant=plant, controller=controller, schedule=tuple(schedule), duration_ms=duration,
        dt_ms=dt_ms, seed=seed, metrics=metrics, sweep_parameter=sweep_param, sweep_values=sweep_values,
        output_dir=r.get(("output", "dir"), str, "out"), prefix=r.get(("output", "prefix"), str, "trial"),
        raw=copy.deepcopy(r.data),
    )


def _build_plant(r: _Reader, dt_ms: float) -> PlantSpec:
    sec = ("plant",)
    r.section(sec, {"kind", "n_joints", "initial_q", "lengths", "limits", "two_link", "calibration"})
    kind = r.get(sec + ("kind",), str, "kinematic", choices=("kinematic", "two_link"))
    default_n = 2 if kind == "two_link" else 1
    n = r.get(sec + ("n_joints",), int, default_n, check=lambda v: v >= 1, check_msg="must be >= 1")
    if kind == "two_link" and n != 2:
        raise r.error(sec + ("n_joints",), "two_link plant has exactly 2 joints")
    q0 = r.get(sec + ("initial_q",), "floats", (0.0,) * n)
    if len(q0) != n:
        raise r.error(sec + ("initial_q",), f"expected {n} values, got {len(q0)}")

    tl = r.section(sec + ("two_link",), {"link_lengths", "link_masses", "link_inertias", "joint_damping",
                                         "armature", "gravity"})
    tl_kwargs = {}
    for k in ("link_lengths", "link_masses", "link_inertias", "joint_damping", "armature"):
        if k in tl:
            tl_kwargs[k] = r.get(sec + ("two_link", k), "floats")
    if "gravity" in tl:
        tl_kwargs["gravity"] = r.get(sec + ("two_link", "gravity"), float)
    try:
        two_link = TwoLinkParams(dt=dt_ms * 1e-3, **tl_kwargs)
    except ValueError as exc:
        raise r.error(sec + ("two_link",), str(exc)) from None

    if kind == "two_link":
        default_lengths = two_link.link_lengths
    elif n == 6:
        default_lengths = JACO_LENGTHS
    else:
        default_lengths = (0.1,) * n
    lengths = r.get(sec + ("lengths",), "floats", default_lengths)
    if len(lengths) != n or min(lengths) <= 0:
        raise r.error(sec + ("lengths",), f"expected {n} positive lengths")
    if kind == "two_link" and "lengths" in r.section(sec, {"kind", "n_joints", "initial_q", "lengths", "limits",
                                                           "two_link", "calibration"}):
        raise r.error(sec + ("lengths",), "set two_link.link_lengths for the dynamic arm")

    limits = None
    lim = r.section(sec + ("limits",), {"lower", "upper"})
    if lim:
        lo = r.get(sec + ("limits", "lower"), "floats", required=True)
        hi = r.get(sec + ("limits", "upper"), "floats", required=True)
        if len(lo) != n or len(hi) != n:
            raise r.error(sec + ("limits",), f"expected {n} lower and {n} upper limits")
        if any(a >= b for a, b in zip(lo, hi)):
            raise r.error(sec + ("limits",), "each lower limit must be below its upper limit")
        if kind == "two_link":
            raise r.error(sec + ("limits",), "joint limits apply to the kinematic plant only")
        limits = (lo, hi)

    cal = r.section(sec + ("calibration",), {"settle_s", "period_s"})
    settle = r.get(sec + ("calibration", "settle_s"), float, 0.5, check=lambda v: v >= 0, check_msg="must be >= 0")
    period = r.get(sec + ("calibration", "period_s"), float, None, check=lambda v: v > 0, check_msg="must be positive")
    if cal and kind != "two_link":
        raise r.error(sec + ("calibration",), "calibration applies to the two_link plant only")
    return PlantSpec(kind, n, q0, lengths, limits, two_link, settle, period)


def _build_controller(r: _Reader, plant: PlantSpec) -> ControllerSpec:
    sec = ("controller",)
    r.section(sec, {"kind", "preset", "overrides", "per_joint", "ablate", "coordination", "pid"})
    kind = r.get(sec + ("kind",), str, "snn", choices=("snn", "pid"))
    preset = r.get(sec + ("preset",), str, "reference", choices=tuple(PRESETS))
    overrides = r.get(sec + ("overrides",), "mapping", {})
    per_joint_raw = r.node(sec + ("per_joint",))
    per_joint: tuple = ()
    if per_joint_raw is not _MISSING and per_joint_raw is not None:
        if not isinstance(per_joint_raw, list) or len(per_joint_raw) != plant.n_joints:
            raise r.error(sec + ("per_joint",), f"expected a list of {plant.n_joints} mappings")
        per_joint = tuple(r.get(sec + ("per_joint", i), "mapping", {}) for i in range(plant.n_joints))

    ab = r.section(sec + ("ablate",), {"facilitation", "psi"})
    no_fac = r.get(sec + ("ablate", "facilitation"), bool, False)
    no_psi = r.get(sec + ("ablate", "psi"), bool, False)
    del ab

    co = r.section(sec + ("coordination",), {"preset", "weight", "sign", "source", "edges"})
    default_preset = {2: "reacher2", 6: "jaco6"}.get(plant.n_joints, "none")
    c_preset = r.get(sec + ("coordination", "preset"), str, default_preset if co else "none",
                     choices=("none", "reacher2", "jaco6", "custom"))
    weight = r.get(sec + ("coordination", "weight"), float, DEFAULT_COORDINATION_WEIGHT, check=lambda v: v >= 0, check_msg="must be >= 0")
    sign = r.get(sec + ("coordination", "sign"), int, -1, choices=(-1, 1))
    source = r.get(sec + ("coordination", "source"), str, "both", choices=("e", "f", "both"))
    edges = r.node(sec + ("coordination", "edges"))
    if edges is _MISSING or edges is None:
        edges = []
    try:
        graph = build_topology(c_preset, weight, sign, source, [tuple(e) for e in edges])
    except (ValueError, TypeError) as exc:
        raise r.error(sec + ("coordination",), str(exc)) from None
    if graph.max_joint() >= plant.n_joints:
        raise r.error(sec + ("coordination",), f"edges reference joints beyond the plant's {plant.n_joints}")

    pid = r.section(sec + ("pid",), {"kp", "kv", "ki", "integral_limit"})
    nonneg = dict(check=lambda v: v >= 0, check_msg="must be >= 0")
    gains = PidGains(r.get(sec + ("pid", "kp"), float, 20.0, **nonneg),
                     r.get(sec + ("pid", "kv"), float, 30.0, **nonneg),
                     r.get(sec + ("pid", "ki"), float, 0.001, **nonneg),
                     r.get(sec + ("pid", "integral_limit"), float, 10.0, **nonneg))
    del pid

    spec = ControllerSpec(kind, preset, overrides, per_joint, no_fac, no_psi, graph, gains)
    try:
        spec.joint_configs(plant.n_joints)
    except (TypeError, ValueError) as exc:
        raise r.error(sec + ("overrides",), f"invalid joint parameters: {exc}") from None
    return spec


def _build_schedule(r: _Reader, plant: PlantSpec, seed: int) -> list[ScheduleEntry]:
    entries: list[ScheduleEntry] = []
    raw = r.node(("schedule",))
    if raw is not _MISSING and raw is not None:
        if not isinstance(raw, list):
            raise r.error(("schedule",), "expected a list of entries")
        for i, _ in enumerate(raw):
            p = ("schedule", i)
            r.section(p, {"time_ms", "targets", "point", "elbow"})
            t = r.get(p + ("time_ms",), float, required=True, check=lambda v: v >= 0, check_msg="must be >= 0")
            targets = r.get(p + ("targets",), "floats")
            point = r.get(p + ("point",), "floats")
            if (targets is None) == (point is None):
                raise r.error(p, "give exactly one of 'targets' or 'point'")
            if point is not None:
                if plant.n_joints != 2:
                    raise r.error(p + ("point",), "workspace points need a two-joint arm")
                elbow = r.get(p + ("elbow",), str, "down", choices=("up", "down"))
                try:
                    targets = tuple(float(x) for x in ik_two_link(point, plant.lengths[:2], elbow))
                except ValueError as exc:
                    raise r.error(p + ("point",), str(exc)) from None
                point = tuple(point)
            elif len(targets) != plant.n_joints:
                raise r.error(p + ("targets",), f"expected {plant.n_joints} targets, got {len(targets)}")
            entries.append(ScheduleEntry(t, tuple(targets), point))

    rg = r.section(("random_goals",), {"seed", "count", "interval_ms", "start_ms", "radius", "angle", "elbow"})
    if rg:
        p = ("random_goals",)
        if plant.n_joints != 2:
            raise r.error(p, "random workspace goals need a two-joint arm")
        radius = r.get(p + ("radius",), "floats", required=True)
        angle = r.get(p + ("angle",), "floats", (-math.pi, math.pi))
        if len(radius) != 2 or len(angle) != 2:
            raise r.error(p, "radius and angle are [min, max] pairs")
        try:
            entries += random_goal_schedule(
                r.get(p + ("seed",), int, seed),
                r.get(p + ("count",), int, required=True),
                r.get(p + ("interval_ms",), float, 3000.0),
                WorkspaceBounds(radius[0], radius[1], angle[0], angle[1]),
                plant.lengths[:2],
                r.get(p + ("elbow",), str, "down", choices=("up", "down")),
                r.get(p + ("start_ms",), float, 0.0),
            )
        except ValueError as exc:
            raise r.error(p, str(exc)) from None

    if not entries:
        raise r.error(("schedule",), "no targets: give 'schedule' and/or 'random_goals'")
    times = [e.time_ms for e in entries]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise r.error(("schedule",), "schedule times must be strictly increasing")
    return entries


def _build_metrics(r: _Reader, plant: PlantSpec) -> MetricsSpec:
    sec = ("metrics",)
    r.section(sec, {"joint", "smoothing_ms", "source", "prominence"})
    joint = r.get(sec + ("joint",), int, 0, check=lambda v: 0 <= v < plant.n_joints,
                  check_msg=f"must index one of {plant.n_joints} joints")
    smoothing = r.get(sec + ("smoothing_ms",), float, None, check=lambda v: v > 0, check_msg="must be positive")
    source = r.get(sec + ("source",), str, "end-effector", choices=("end-effector", "joint"))
    prominence = r.get(sec + ("prominence",), float, 0.1, check=lambda v: 0 < v < 1, check_msg="must be in (0, 1)")
    return MetricsSpec(joint, smoothing, source, prominence)


# --- simulation ----------------------------------------------------------------

def _targets_at(schedule: Sequence[ScheduleEntry], t_ms: float, default) -> np.ndarray:
    current = default
    for e in schedule:
        if e.time_ms <= t_ms + 1e-9:
            current = e.targets
        else:
            break
    return np.asarray(current, dtype=float)


def simulate(plant: PlantSpec, controller: ControllerSpec, schedule: Sequence[ScheduleEntry],
             duration_ms: float, dt_ms: float = 1.0) -> TrialTrace:
    """Run one closed-loop trial.

    Row ``k`` of the trace holds the measured state at ``k * dt_ms`` together
    with the target and the controller output computed from it.
    """
    n = plant.n_joints
    steps = int(round(duration_ms / dt_ms))
    dt_s = dt_ms * 1e-3
    state = ArmState.at_rest(plant.initial_q)
    lengths = plant.two_link.link_lengths if plant.kind == "two_link" else plant.lengths

    q_log = np.empty((steps, n))
    tgt_log = np.empty((steps, n))
    ee_log = np.empty((steps, 2))
    spike_e = np.zeros((steps, n), dtype=bool)
    spike_f = np.zeros((steps, n), dtype=bool)
    g_log = np.full((steps, n), np.nan)
    fe_log = np.full((steps, n), np.nan)
    ff_log = np.full((steps, n), np.nan)

    if controller.kind == "snn":
        configs = controller.joint_configs(n)
        for c in configs:
            if abs(c.dt - dt_ms) > 1e-12:
                raise ValueError(f"controller dt {c.dt} ms differs from experiment dt {dt_ms} ms")
        arm = initial_arm_state(configs, controller.coordination)
        torque_per_spike = None
        if plant.kind == "two_link":
            cal = calibrate_torque_increment(plant.two_link, [c.angle_increment for c in configs],
                                             posture=plant.initial_q,
                                             control_period=plant.calibration_period_s,
                                             settle_time=plant.calibration_settle_s)
            torque_per_spike = cal.nominal_torque
    else:
        pid_states = [PidState() for _ in range(n)]

    for k in range(steps):
        t = k * dt_ms
        targets = _targets_at(schedule, t, plant.initial_q)
        q_log[k] = state.q
        tgt_log[k] = targets
        ee_log[k] = link_points(state.q, lengths)[-1]
        try:
            if controller.kind == "snn":
                arm, deltas, cmds = arm_step(arm, configs, state.q, targets)
                for j, c in enumerate(cmds):
                    spike_e[k, j], spike_f[k, j] = c.e_spike, c.f_spike
                    g_log[k, j], fe_log[k, j], ff_log[k, j] = c.gain, c.fac_extensor, c.fac_flexor
                if plant.kind == "kinematic":
                    state = kinematic_step(state, deltas, plant.limits, dt_s)
                else:
                    signs = spike_e[k].astype(float) - spike_f[k].astype(float)
                    state = two_link_step(state, signs * torque_per_spike, plant.two_link)
            else:
                tau = np.empty(n)
                for j in range(n):
                    pid_states[j], tau[j] = pid_step(pid_states[j], controller.pid, state.q[j], targets[j],
                                                     state.qdot[j], dt_s)
                state = two_link_step(state, tau, plant.two_link)
        except IntegrationError as exc:
            raise SimulationError(k, exc) from exc

    spikes = {"e": spike_e, "f": spike_f}
    return TrialTrace(np.arange(steps) * dt_ms, q_log, tgt_log, ee_log, spikes, g_log, fe_log, ff_log)


# --- metrics over a trial ------------------------------------------------------

SUMMARY_COLUMNS = (
    "trial", "controller", "plant", "segment", "t_start_ms", "joint", "theta_0", "theta_d",
    "overshoot_pct", "rise_time_ms", "settling_time_ms", "max_abs_jerk", "integral_abs_jerk",
    "peak_speed", "peak_count", "symmetry_ratio", "jerk_reduction_pct",
)


def _segments(trace: TrialTrace, schedule: Sequence[ScheduleEntry]):
    """Index ranges between consecutive schedule entries that fall inside the trace."""
    n = len(trace.time)
    starts = []
    for e in schedule:
        k = int(np.searchsorted(trace.time, e.time_ms - 1e-9))
        if k < n and (not starts or k > starts[-1]):
            starts.append(k)
    return [(s, starts[i + 1] if i + 1 < len(starts) else n) for i, s in enumerate(starts)]


def schedule_from_trace(trace: TrialTrace) -> list[ScheduleEntry]:
    """Recover the target schedule from the rows where the target columns change."""
    change = np.any(np.diff(trace.targets, axis=0) != 0, axis=1)
    rows = [0] + list(np.nonzero(change)[0] + 1)
    return [ScheduleEntry(float(trace.time[k]), tuple(float(x) for x in trace.targets[k])) for k in rows]


def trial_metrics(trace: TrialTrace, schedule: Sequence[ScheduleEntry], spec: MetricsSpec) -> list[dict]:
    """One dict per movement segment: step metrics for ``spec.joint`` plus smoothness of ``spec.source``."""
    sigma = spec.smoothing_ms / trace.dt if spec.smoothing_ms else None
    signal = trace.ee if spec.source == "end-effector" else trace.q[:, spec.joint]
    dt_s = trace.dt * 1e-3
    vel, _, jerk = derivatives(signal, dt_s, sigma)
    speed = np.abs(vel) if vel.ndim == 1 else np.linalg.norm(vel, axis=1)
    jmag = np.abs(jerk) if jerk.ndim == 1 else np.linalg.norm(jerk, axis=1)

    rows = []
    for i, (a, b) in enumerate(_segments(trace, schedule)):
        j = spec.joint
        theta_0, theta_d = float(trace.q[a, j]), float(trace.targets[a, j])
        seg = TrialTrace(trace.time[a:b], trace.q[a:b], trace.targets[a:b], trace.ee[a:b])
        row = {"segment": i, "t_start_ms": float(trace.time[a]), "joint": j,
               "theta_0": theta_0, "theta_d": theta_d,
               "overshoot_pct": None, "rise_time_ms": None, "settling_time_ms": None}
        if theta_d != theta_0 and b - a >= 2:
            m = step_metrics(seg, j, theta_0, theta_d)
            row.update(overshoot_pct=m.overshoot_pct, rise_time_ms=m.rise_time, settling_time_ms=m.settling_time)
        sp = speed[a:b]
        peaks, sym = bell_shape_score(sp, spec.prominence) if sp.max() > 0 else (0, float("nan"))
        row.update(max_abs_jerk=float(jmag[a:b].max()), integral_abs_jerk=float(jmag[a:b].sum() * dt_s),
                   peak_speed=float(sp.max()), peak_count=peaks, symmetry_ratio=sym)
        rows.append(row)
    return rows


# --- CSV I/O -------------------------------------------------------------------

def trace_columns(n_joints: int) -> list[str]:
    cols = ["time_ms"]
    cols += [f"q{j}" for j in range(n_joints)]
    cols += [f"target{j}" for j in range(n_joints)]
    cols += ["ee_x", "ee_y"]
    for j in range(n_joints):
        cols += [f"spike_e{j}", f"spike_f{j}"]
    cols += [f"g{j}" for j in range(n_joints)]
    for j in range(n_joints):
        cols += [f"fac_e{j}", f"fac_f{j}"]
    return cols


def _fmt(x) -> str:
    if x is None or isinstance(x, NotSettled):
        return "not_settled" if isinstance(x, NotSettled) else ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_trace_csv(trace: TrialTrace, path) -> None:
    n = trace.n_joints
    empty = np.zeros((len(trace.time), n), dtype=bool)
    nan = np.full((len(trace.time), n), np.nan)
    se, sf = trace.spikes.get("e", empty), trace.spikes.get("f", empty)
    g = trace.gain if trace.gain is not None else nan
    fe = trace.fac_e if trace.fac_e is not None else nan
    ff = trace.fac_f if trace.fac_f is not None else nan
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_columns(n))
    for k in range(len(trace.time)):
        row = [trace.time[k], *trace.q[k], *trace.targets[k], *trace.ee[k]]
        for j in range(n):
            row += [bool(se[k, j]), bool(sf[k, j])]
        row += list(g[k])
        for j in range(n):
            row += [fe[k, j], ff[k, j]]
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_trace_csv(path) -> TrialTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    n = sum(1 for c in header if c.startswith("q") and c[1:].isdigit())
    if header != trace_columns(n):
        raise ValueError(f"{path}: unexpected trace columns")
    data = np.array([[float(v) if v != "" else np.nan for v in row] for row in rows], dtype=float)
    data = data.reshape(len(rows), len(header))
    col = {c: i for i, c in enumerate(header)}

    def block(names):
        return data[:, [col[c] for c in names]]

    spikes = {"e": block([f"spike_e{j}" for j in range(n)]).astype(bool),
              "f": block([f"spike_f{j}" for j in range(n)]).astype(bool)}
    return TrialTrace(data[:, 0], block([f"q{j}" for j in range(n)]), block([f"target{j}" for j in range(n)]),
                      block(["ee_x", "ee_y"]), spikes, block([f"g{j}" for j in range(n)]),
                      block([f"fac_e{j}" for j in range(n)]), block([f"fac_f{j}" for j in range(n)]))


def write_summary_csv(rows: Sequence[Mapping], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([row.get(c) if isinstance(row.get(c), str) else _fmt(row.get(c)) for c in SUMMARY_COLUMNS])
    Path(path).write_text(buf.getvalue())


# --- experiment driver -----------------------------------------------------

@dataclass
class ExperimentResult:
    traces: dict[str, TrialTrace]
    trace_paths: dict[str, Path]
    summary_rows: list[dict]
    summary_path: Optional[Path]


def _set_path(data: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = data
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"cannot set {dotted}: {k} is not a mapping")
    cur[keys[-1]] = value


def _trials(config: ExperimentConfig) -> list[tuple[str, ControllerSpec, PlantSpec]]:
    c, p = config.controller, config.plant
    if config.kind in ("step_response", "reach_sequence"):
        return [(c.kind, c, p)]
    if config.kind == "ablation_sweep":
        if c.kind != "snn":
            raise ConfigError("ablation_sweep needs the snn controller", ("controller", "kind"))
        return [(name, replace(c, disable_facilitation=a, disable_psi=b), p) for name, (a, b) in ABLATIONS.items()]
    if config.kind == "pid_compare":
        return [("snn", replace(c, kind="snn"), p), ("pid", replace(c, kind="pid"), p)]
    if config.kind == "param_sweep":
        out = []
        for v in config.sweep_values:
            raw = copy.deepcopy(dict(config.raw))
            raw["experiment"] = "step_response"
            raw.pop("sweep", None)
            _set_path(raw, config.sweep_parameter, v)
            sub = _build_config(_Reader(raw, {}, f"sweep {config.sweep_parameter}={v}"))
            out.append((f"{config.sweep_parameter}={v}", sub.controller, sub.plant))
        return out
    raise ConfigError(f"unknown experiment kind {config.kind!r}")


def resolve_out_dir(config: ExperimentConfig, out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    return Path(os.environ.get(OUT_DIR_ENV) or config.output_dir)


def run_experiment(config: ExperimentConfig, out_dir=None, write: bool = True) -> ExperimentResult:
    """Execute every trial of ``config``; write traces and a summary unless ``write`` is false.

    Output directory precedence: ``out_dir`` argument, ``$SNNREACH_OUT_DIR``,
    then ``output.dir`` from the config.
    """
    traces, paths, rows = {}, {}, []
    directory = resolve_out_dir(config, out_dir)
    if write:
        directory.mkdir(parents=True, exist_ok=True)
    for name, ctrl, plant in _trials(config):
        trace = simulate(plant, ctrl, config.schedule, config.duration_ms, config.dt_ms)
        traces[name] = trace
        safe = "".join(ch if ch.isalnum() or ch in "-_.=" else "_" for ch in name)
        if write:
            paths[name] = directory / f"{config.prefix}_{safe}.csv"
            write_trace_csv(trace, paths[name])
        for row in trial_metrics(trace, config.schedule, config.metrics):
            rows.append({"trial": name, "controller": ctrl.kind, "plant": plant.kind, **row})

    if config.kind == "pid_compare":
        by_trial = {r["trial"]: r for r in rows if r["segment"] == 0}
        j_snn, j_pid = by_trial["snn"]["max_abs_jerk"], by_trial["pid"]["max_abs_jerk"]
        by_trial["snn"]["jerk_reduction_pct"] = 100.0 * (1.0 - j_snn / j_pid)

    summary_path = None
    if write:
        summary_path = directory / f"{config.prefix}_summary.csv"
        write_summary_csv(rows, summary_path)
    return ExperimentResult(traces, paths, rows, summary_path)
