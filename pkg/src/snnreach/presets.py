"""
Shipped parameter sets.

``reference`` was hand-tuned on the single-joint kinematic plant for a 1 rad
step: no overshoot, sub-second rise, single-peaked speed profile, and a
clear speed/jerk ordering when facilitation and PSI are removed. See
``demos/tuning_recipe.py`` for the procedure.

``pid_matched`` slows the reference down so that its settling time on the
dynamic two-link arm is close to the PID baseline's.
"""

from __future__ import annotations

import copy
from dataclasses import fields, is_dataclass, replace
from typing import Any, Mapping

from .joint import JointConfig, SynapseWeights
from .plant import TwoLinkParams
from .snn import FacilitationParams, LifParams, PsiParams

__all__ = [
    "PRESETS",
    "joint_config",
    "joint_config_from_dict",
    "joint_config_to_dict",
    "REFERENCE_STEP",
    "REFERENCE_REACH",
    "reacher_params",
    "JACO_LENGTHS",
]

# angles in rad; start and target of the reference single-joint step
REFERENCE_STEP = (0.0, 1.0)
# joint-space start and target of the reference two-link discrete movement
REFERENCE_REACH = ((0.3, 1.2), (1.3, 0.8))
# planar serial approximation of a six-joint arm, m
JACO_LENGTHS = (0.2755, 0.41, 0.2073, 0.0741, 0.0741, 0.16)

PRESETS: dict[str, dict[str, Any]] = {
    "reference": {
        "error_gain": 1.89,
        "derivative_gain": 1.076,
        "derivative_window": 32,
        "angle_increment": 0.005,
        "eppc": {"current_decay": 0.0, "voltage_decay": 0.99913, "threshold": 1.0},
        "dppc": {"current_decay": 0.0, "voltage_decay": 0.515, "threshold": 1.0},
        "extensor": {"current_decay": 0.6, "voltage_decay": 0.99759, "threshold": 1.0},
        "flexor": {"current_decay": 0.6, "voltage_decay": 0.99759, "threshold": 1.0},
        "psi": {"current_decay": 0.926, "voltage_decay": 0.9075, "threshold": 1.0},
        "weights": {"eppc_to_motor": 0.5205, "dppc_to_motor": 0.161, "eppc_to_psi": 0.1306},
        "facilitation": {"decay_tau": 500.0, "increment": 0.005, "max_factor": 1.0, "initial": 0.144},
        "psi_gain": {"decay_tau": 50.0, "increment": 0.005, "g_max": 1.0},
        "uses_facilitation": True,
        "uses_psi_gain": True,
        "dt": 1.0,
    },
}
# same network with a smaller step per spike: on the two-link arm this settles
# within about 15% of the default PID gains on a 1 rad shoulder step
PRESETS["pid_matched"] = copy.deepcopy(PRESETS["reference"])
PRESETS["pid_matched"]["angle_increment"] = 0.0008

_NESTED = {
    "eppc": LifParams,
    "dppc": LifParams,
    "extensor": LifParams,
    "flexor": LifParams,
    "psi": LifParams,
    "weights": SynapseWeights,
    "facilitation": FacilitationParams,
    "psi_gain": PsiParams,
}


def _merge(base: dict, overrides: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in overrides.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def joint_config_from_dict(d: Mapping) -> JointConfig:
    """Build a :class:`JointConfig` from a nested mapping (unknown keys raise ``TypeError``)."""
    kwargs = {}
    for k, v in d.items():
        cls = _NESTED.get(k)
        kwargs[k] = cls(**v) if cls is not None else v
    return JointConfig(**kwargs)


def joint_config_to_dict(cfg: JointConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = {g.name: getattr(v, g.name) for g in fields(v)} if is_dataclass(v) else v
    return out


def joint_config(name: str = "reference", overrides: Mapping | None = None) -> JointConfig:
    """Named preset with optional nested overrides, e.g. ``{"eppc": {"threshold": 2.0}}``."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return joint_config_from_dict(_merge(base, overrides or {}))


def reacher_params(**overrides) -> TwoLinkParams:
    """Two-link arm at Reacher scale (0.1 m / 0.11 m links)."""
    return replace(TwoLinkParams(), **overrides)
