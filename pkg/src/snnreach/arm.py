"""
Arm controller: one joint block per DOF plus leading-joint coordination.

Motor spikes of a leading (proximal) joint are routed, one step later, as a
current into both motor neurons of its subordinate (distal) joints. With the
default inhibitory sign this holds back the subordinate joint until the
leading joint's activity subsides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .joint import JointBlockState, JointCommand, JointConfig, initial_state, joint_step

__all__ = [
    "CoordinationEdge",
    "CoordinationGraph",
    "ArmControllerState",
    "CyclicGraphError",
    "build_topology",
    "DEFAULT_COORDINATION_WEIGHT",
    "initial_arm_state",
    "arm_step",
]

SOURCES = ("e", "f", "both")
# current per leading-joint spike; large enough to delay subordinate onset by a
# few steps without splitting the end-effector speed profile into two peaks
DEFAULT_COORDINATION_WEIGHT = 0.05


class CyclicGraphError(ValueError):
    """Raised for coordination graphs that are cyclic or point distal-to-proximal."""


@dataclass(frozen=True)
class CoordinationEdge:
    leader: int
    follower: int
    weight: float
    sign: int = -1
    source: str = "both"

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if self.weight < 0:
            raise ValueError("weight is a magnitude; use sign for inhibition")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")

    def current(self, e_spike: bool, f_spike: bool) -> float:
        if self.source == "e":
            n = int(e_spike)
        elif self.source == "f":
            n = int(f_spike)
        else:
            n = int(e_spike) + int(f_spike)
        return self.sign * self.weight * n


@dataclass(frozen=True)
class CoordinationGraph:
    edges: tuple[CoordinationEdge, ...] = ()

    def __post_init__(self):
        edges = tuple(self.edges)
        object.__setattr__(self, "edges", edges)
        for e in edges:
            if e.leader < 0 or e.follower < 0:
                raise ValueError("joint indices must be non-negative")
            if e.leader >= e.follower:
                raise CyclicGraphError(
                    f"edge {e.leader}->{e.follower}: edges must run from proximal to distal joints")

    def incoming(self, joint: int) -> tuple[CoordinationEdge, ...]:
        return tuple(e for e in self.edges if e.follower == joint)

    def max_joint(self) -> int:
        return max((max(e.leader, e.follower) for e in self.edges), default=-1)


def build_topology(arm_kind: str, weight: float = DEFAULT_COORDINATION_WEIGHT, sign: int = -1, source: str = "both",
                   edges: Sequence = ()) -> CoordinationGraph:
    """Named coordination presets.

    ``reacher2``: shoulder leads elbow. ``jaco6``: joint 0 leads joint 1, and
    joints 0 and 1 both lead joints 2-5. ``none``: no edges. ``custom``: ``edges``
    given as ``(leader, follower)`` pairs or :class:`CoordinationEdge` objects.
    """
    if arm_kind == "none":
        pairs = []
    elif arm_kind == "reacher2":
        pairs = [(0, 1)]
    elif arm_kind == "jaco6":
        pairs = [(0, 1)] + [(lead, sub) for lead in (0, 1) for sub in range(2, 6)]
    elif arm_kind == "custom":
        built = []
        for e in edges:
            if isinstance(e, CoordinationEdge):
                built.append(e)
            else:
                built.append(CoordinationEdge(int(e[0]), int(e[1]), weight, sign, source))
        _check_acyclic(built)
        return CoordinationGraph(tuple(built))
    else:
        raise ValueError(f"unknown arm kind {arm_kind!r}")
    return CoordinationGraph(tuple(CoordinationEdge(a, b, weight, sign, source) for a, b in pairs))


def _check_acyclic(edges):
    succ: dict[int, set[int]] = {}
    for e in edges:
        succ.setdefault(e.leader, set()).add(e.follower)
    state: dict[int, int] = {}

    def visit(n):
        state[n] = 1
        for m in succ.get(n, ()):
            if state.get(m) == 1:
                raise CyclicGraphError(f"coordination graph has a cycle through joint {m}")
            if m not in state:
                visit(m)
        state[n] = 2

    for n in list(succ):
        if n not in state:
            visit(n)


@dataclass(frozen=True)
class ArmControllerState:
    blocks: tuple[JointBlockState, ...]
    graph: CoordinationGraph = field(default_factory=CoordinationGraph)
    last_step_spikes: tuple[tuple[bool, bool], ...] = ()


def initial_arm_state(configs: Sequence[JointConfig], graph: CoordinationGraph = CoordinationGraph()) -> ArmControllerState:
    if graph.max_joint() >= len(configs):
        raise ValueError("coordination graph references a joint the arm does not have")
    return ArmControllerState(tuple(initial_state(c) for c in configs), graph,
                              tuple((False, False) for _ in configs))


def arm_step(state: ArmControllerState, configs: Sequence[JointConfig], thetas, targets
             ) -> tuple[ArmControllerState, np.ndarray, tuple[JointCommand, ...]]:
    """Step every joint block once; coordination uses the previous step's motor spikes."""
    n = len(state.blocks)
    if len(configs) != n or len(thetas) != n or len(targets) != n:
        raise ValueError(f"expected {n} configs, angles and targets, got "
                         f"{len(configs)}, {len(thetas)}, {len(targets)}")
    prev = state.last_step_spikes
    blocks, commands = [], []
    for j in range(n):
        coord = 0.0
        for edge in state.graph.incoming(j):
            coord += edge.current(*prev[edge.leader])
        block, cmd = joint_step(state.blocks[j], configs[j], float(thetas[j]), float(targets[j]), coord)
        blocks.append(block)
        commands.append(cmd)
    spikes = tuple((c.e_spike, c.f_spike) for c in commands)
    deltas = np.array([c.delta for c in commands])
    return ArmControllerState(tuple(blocks), state.graph, spikes), deltas, tuple(commands)
