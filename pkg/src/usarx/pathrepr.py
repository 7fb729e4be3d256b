"""Behavior representations and their textual rendering.

Three representations of "why did the agent act": the decision path through
the distilled tree, a sample of state-action pairs, or nothing (baseline).
All text goes through one predicate grammar so every rendered line parses
back to its (feature, branch) pair; the exact strings are frozen by golden
tests and must not drift.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .grid import (
    ACTION_FROM_WIRE,
    ACTION_WIRE,
    MOVE_DELTA,
    N_FEATURES,
    ROLE_FROM_WIRE,
    ROLE_WIRE,
    Action,
    Attribute,
    FeatureVector,
    Observation,
    Role,
    RoomCoord,
    feature_descriptor,
)
from .policies import Trajectory
from .tree import DecisionTree, SchemaMismatchError, tree_predict

# (true branch, false branch) templates per attribute; {room} is "(x, y)".
_PREDICATE_TEMPLATES = {
    Attribute.EXPLORED: (
        "room {room} has been explored.",
        "room {room} has not been explored.",
    ),
    Attribute.RUBBLE: (
        "room {room} contains rubble.",
        "room {room} doesn't contain rubble.",
    ),
    Attribute.VICTIM: (
        "room {room} contains a victim.",
        "room {room} doesn't contain a victim.",
    ),
    Attribute.MEDIC_HERE: (
        "medic is in room {room}.",
        "medic is not in room {room}.",
    ),
    Attribute.ENGINEER_HERE: (
        "engineer is in room {room}.",
        "engineer is not in room {room}.",
    ),
}

_DIRECTION = {
    Action.MOVE_NORTH: "north",
    Action.MOVE_SOUTH: "south",
    Action.MOVE_EAST: "east",
    Action.MOVE_WEST: "west",
}


def render_predicate(feature: int, branch: bool) -> str:
    room, attr = feature_descriptor(feature)
    true_form, false_form = _PREDICATE_TEMPLATES[attr]
    template = true_form if branch else false_form
    return template.format(room=room.text())


_PREDICATE_INVERSE = {
    render_predicate(f, b): (f, b) for f in range(N_FEATURES) for b in (True, False)
}


def parse_predicate(line: str) -> tuple[int, bool]:
    try:
        return _PREDICATE_INVERSE[line]
    except KeyError:
        raise ValueError(f"not a predicate line: {line!r}") from None


def render_action(role: Role, from_room: RoomCoord, action: Action) -> str:
    """One sentence for an action taken from `from_room`; movement names the
    destination room."""
    who = ROLE_WIRE[role]
    if action in MOVE_DELTA:
        dx, dy = MOVE_DELTA[action]
        dest = RoomCoord(from_room.x + dx, from_room.y + dy)
        if not dest.in_bounds():
            raise ValueError(f"{who} cannot move {_DIRECTION[action]} from {from_room.text()}")
        return f"{who} moves {_DIRECTION[action]} to room {dest.text()}."
    if action == Action.REMOVE_RUBBLE:
        if role != Role.ENGINEER:
            raise ValueError("only the engineer removes rubble")
        return f"engineer removes rubble in room {from_room.text()}."
    if action == Action.RESCUE_VICTIM:
        if role != Role.MEDIC:
            raise ValueError("only the medic rescues victims")
        return f"medic rescues the victim in room {from_room.text()}."
    return f"{who} stays in room {from_room.text()}."


_MOVE_RE = re.compile(
    r"^(medic|engineer) moves (north|south|east|west) to room \((\d+), (\d+)\)\.$"
)
_REMOVE_RE = re.compile(r"^engineer removes rubble in room \((\d+), (\d+)\)\.$")
_RESCUE_RE = re.compile(r"^medic rescues the victim in room \((\d+), (\d+)\)\.$")
_STAY_RE = re.compile(r"^(medic|engineer) stays in room \((\d+), (\d+)\)\.$")

_ACTION_BY_DIRECTION = {v: k for k, v in _DIRECTION.items()}


def parse_action(line: str) -> tuple[Role, Action, RoomCoord]:
    """Inverse of render_action. The room is the destination for moves and
    the acting room otherwise."""
    m = _MOVE_RE.match(line)
    if m:
        role, direction, x, y = m.groups()
        return ROLE_FROM_WIRE[role], _ACTION_BY_DIRECTION[direction], RoomCoord(int(x), int(y))
    m = _REMOVE_RE.match(line)
    if m:
        return Role.ENGINEER, Action.REMOVE_RUBBLE, RoomCoord(int(m.group(1)), int(m.group(2)))
    m = _RESCUE_RE.match(line)
    if m:
        return Role.MEDIC, Action.RESCUE_VICTIM, RoomCoord(int(m.group(1)), int(m.group(2)))
    m = _STAY_RE.match(line)
    if m:
        role, x, y = m.groups()
        return ROLE_FROM_WIRE[role], Action.NO_OP, RoomCoord(int(x), int(y))
    raise ValueError(f"not an action line: {line!r}")


@dataclass
class DecisionPath:
    """Root-to-leaf traversal for one state: (feature, branch taken) steps
    plus the leaf's action."""

    steps: list[tuple[int, bool]]
    leaf_action: Action
    role: Role

    def to_json(self) -> dict:
        return {
            "steps": [{"feature": f, "branch": b} for f, b in self.steps],
            "leaf_action": ACTION_WIRE[self.leaf_action],
            "role": ROLE_WIRE[self.role],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "DecisionPath":
        return cls(
            steps=[(s["feature"], bool(s["branch"])) for s in payload["steps"]],
            leaf_action=ACTION_FROM_WIRE[payload["leaf_action"]],
            role=ROLE_FROM_WIRE[payload["role"]],
        )


def extract_path(tree: DecisionTree, features: FeatureVector) -> DecisionPath:
    if features.schema_version != tree.feature_schema_version:
        raise SchemaMismatchError(
            f"feature schema {features.schema_version} != tree schema {tree.feature_schema_version}"
        )
    bits = features.bits
    steps: list[tuple[int, bool]] = []
    node = tree.nodes[tree.root]
    while not node.is_leaf:
        branch = bool(bits[node.feature])
        steps.append((node.feature, branch))
        node = tree.nodes[node.true_child if branch else node.false_child]
    return DecisionPath(steps=steps, leaf_action=Action(node.action), role=tree.role)


def render_path(path: DecisionPath) -> str:
    lines = ["Features:"]
    lines.extend(render_predicate(f, b) for f, b in path.steps)
    return "\n".join(lines)


BR_PATH = "path"
BR_STATES = "states"
BR_NONE = "none"
BR_KINDS = (BR_PATH, BR_STATES, BR_NONE)


@dataclass
class PathBR:
    path: DecisionPath
    kind: str = BR_PATH

    def to_json(self) -> dict:
        return {"kind": self.kind, "path": self.path.to_json()}


@dataclass
class StatesBR:
    pairs: list[tuple[Observation, Action]]
    k: int
    role: Role
    kind: str = BR_STATES

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "role": ROLE_WIRE[self.role],
            "pairs": [
                {"observation": obs.to_json(), "action": ACTION_WIRE[action]}
                for obs, action in self.pairs
            ],
        }


@dataclass
class NoBR:
    kind: str = BR_NONE

    def to_json(self) -> dict:
        return {"kind": self.kind}


BehaviorRepresentation = Union[PathBR, StatesBR, NoBR]


def br_from_json(payload: dict) -> BehaviorRepresentation:
    kind = payload.get("kind")
    if kind == BR_PATH:
        return PathBR(path=DecisionPath.from_json(payload["path"]))
    if kind == BR_STATES:
        return StatesBR(
            pairs=[
                (Observation.from_json(p["observation"]), ACTION_FROM_WIRE[p["action"]])
                for p in payload["pairs"]
            ],
            k=payload["k"],
            role=ROLE_FROM_WIRE[payload["role"]],
        )
    if kind == BR_NONE:
        return NoBR()
    raise ValueError(f"unknown behavior representation kind {kind!r}")


def sample_states_br(traj: Trajectory, role: Role, k: int = 10, seed: int = 0) -> StatesBR:
    """k uniform timesteps without replacement, returned in time order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(traj) < k:
        raise ValueError(f"trajectory has {len(traj)} steps, need at least {k}")
    rng = np.random.default_rng(seed)
    picks = sorted(int(i) for i in rng.choice(len(traj), size=k, replace=False))
    pairs = [(traj.steps[i].obs, traj.action_of(i, role)) for i in picks]
    return StatesBR(pairs=pairs, k=k, role=role)


def render_observation(obs: Observation) -> str:
    """Explored rooms with their contents, then both agent positions, all in
    the predicate grammar."""
    lines: list[str] = []
    for r in range(len(obs.explored)):
        if not obs.explored[r]:
            continue
        room = RoomCoord.from_index(r)
        base = r * 5
        lines.append(render_predicate(base + Attribute.EXPLORED, True))
        lines.append(render_predicate(base + Attribute.RUBBLE, bool(obs.known_rubble[r])))
        lines.append(render_predicate(base + Attribute.VICTIM, bool(obs.known_victim[r])))
    medic_bit = obs.medic_pos.index * 5 + Attribute.MEDIC_HERE
    engineer_bit = obs.engineer_pos.index * 5 + Attribute.ENGINEER_HERE
    lines.append(render_predicate(medic_bit, True))
    lines.append(render_predicate(engineer_bit, True))
    return "\n".join(lines)


def render_states_br(br: StatesBR) -> str:
    blocks = ["State-action pairs sampled from the agent's behavior:"]
    for obs, action in br.pairs:
        action_line = render_action(br.role, obs.pos(br.role), action)
        blocks.append(f"State:\n{render_observation(obs)}\nAction: {action_line}")
    return "\n\n".join(blocks)


def render_br(br: BehaviorRepresentation) -> str:
    """BR block for the prompt; empty string for the no-BR baseline."""
    if isinstance(br, PathBR):
        return render_path(br.path)
    if isinstance(br, StatesBR):
        return render_states_br(br)
    return ""
