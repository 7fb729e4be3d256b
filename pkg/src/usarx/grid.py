"""Two-agent urban search-and-rescue gridworld.

The world is 4 columns (x, east positive) by 5 rows (y, south positive),
20 rooms total, with y=0 the northernmost row. An engineer removes rubble,
a medic rescues victims; rubble may hide a victim until removed. Both
agents share one observation: every room either agent has entered stays
visible to both. Everything is deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

GRID_W = 4
GRID_H = 5
N_ROOMS = GRID_W * GRID_H
ATTRS_PER_ROOM = 5
N_FEATURES = N_ROOMS * ATTRS_PER_ROOM  # 100
FEATURE_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Environment configuration cannot be instantiated."""


class IllegalActionError(RuntimeError):
    """Action is not legal in the current state (e.g. move off grid)."""


class RoleViolationError(IllegalActionError):
    """Role-specific action submitted by the wrong agent."""


class RoomCoord(NamedTuple):
    x: int
    y: int

    @property
    def index(self) -> int:
        return self.y * GRID_W + self.x

    @classmethod
    def from_index(cls, index: int) -> "RoomCoord":
        return cls(index % GRID_W, index // GRID_W)

    def text(self) -> str:
        # Canonical rendering used in all prompt/report output.
        return f"({self.x}, {self.y})"

    def in_bounds(self) -> bool:
        return 0 <= self.x < GRID_W and 0 <= self.y < GRID_H


class Action(IntEnum):
    MOVE_NORTH = 0
    MOVE_SOUTH = 1
    MOVE_EAST = 2
    MOVE_WEST = 3
    REMOVE_RUBBLE = 4
    RESCUE_VICTIM = 5
    NO_OP = 6


# Wire spellings are part of the trajectory/tree file formats; keep stable.
ACTION_WIRE = {
    Action.MOVE_NORTH: "MoveNorth",
    Action.MOVE_SOUTH: "MoveSouth",
    Action.MOVE_EAST: "MoveEast",
    Action.MOVE_WEST: "MoveWest",
    Action.REMOVE_RUBBLE: "RemoveRubble",
    Action.RESCUE_VICTIM: "RescueVictim",
    Action.NO_OP: "NoOp",
}
ACTION_FROM_WIRE = {v: k for k, v in ACTION_WIRE.items()}

MOVE_DELTA = {
    Action.MOVE_NORTH: (0, -1),
    Action.MOVE_SOUTH: (0, 1),
    Action.MOVE_EAST: (1, 0),
    Action.MOVE_WEST: (-1, 0),
}

MOVE_ACTIONS = (Action.MOVE_NORTH, Action.MOVE_SOUTH, Action.MOVE_EAST, Action.MOVE_WEST)


class Role(IntEnum):
    MEDIC = 0
    ENGINEER = 1


ROLE_WIRE = {Role.MEDIC: "medic", Role.ENGINEER: "engineer"}
ROLE_FROM_WIRE = {v: k for k, v in ROLE_WIRE.items()}


class Victim(IntEnum):
    NONE = 0
    OPEN = 1
    HIDDEN_UNDER_RUBBLE = 2
    RESCUED = 3


VICTIM_WIRE = {
    Victim.NONE: "None",
    Victim.OPEN: "Open",
    Victim.HIDDEN_UNDER_RUBBLE: "HiddenUnderRubble",
    Victim.RESCUED: "Rescued",
}
VICTIM_FROM_WIRE = {v: k for k, v in VICTIM_WIRE.items()}


class Attribute(IntEnum):
    EXPLORED = 0
    RUBBLE = 1
    VICTIM = 2
    MEDIC_HERE = 3
    ENGINEER_HERE = 4


class GroundTruthRoom(NamedTuple):
    has_rubble: bool
    victim: Victim


@dataclass
class EnvConfig:
    n_rubble: int = 3
    n_victims: int = 2
    hidden_victim_fraction: float = 0.5
    horizon: int = 200
    seed: int = 0

    def validate(self) -> None:
        if self.n_rubble < 0 or self.n_victims < 0:
            raise ConfigError("entity counts must be non-negative")
        if self.n_rubble + self.n_victims > N_ROOMS:
            raise ConfigError(
                f"{self.n_rubble} rubble + {self.n_victims} victims do not fit in {N_ROOMS} rooms"
            )
        if not 0.0 <= self.hidden_victim_fraction <= 1.0:
            raise ConfigError("hidden_victim_fraction must be in [0, 1]")
        if self.hidden_count > self.n_rubble:
            raise ConfigError(
                f"{self.hidden_count} hidden victims need at least that many rubble rooms"
            )
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")

    @property
    def hidden_count(self) -> int:
        return int(self.n_victims * self.hidden_victim_fraction + 0.5)

    def to_json(self) -> dict:
        return {
            "n_rubble": self.n_rubble,
            "n_victims": self.n_victims,
            "hidden_victim_fraction": self.hidden_victim_fraction,
            "horizon": self.horizon,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EnvConfig":
        return cls(**payload)


@dataclass(eq=False)
class WorldState:
    """Ground truth. Treated as immutable: step() returns a fresh state."""

    rubble: np.ndarray  # uint8[20], 1 where rubble present
    victim: np.ndarray  # uint8[20], Victim enum values
    explored: np.ndarray  # uint8[20]
    medic_pos: RoomCoord
    engineer_pos: RoomCoord
    time: int
    rng_seed: int

    def room(self, coord: RoomCoord) -> GroundTruthRoom:
        r = coord.index
        return GroundTruthRoom(bool(self.rubble[r]), Victim(int(self.victim[r])))

    def all_rescued(self) -> bool:
        return not np.any((self.victim == Victim.OPEN) | (self.victim == Victim.HIDDEN_UNDER_RUBBLE))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return (
            self.rubble.tobytes() == other.rubble.tobytes()
            and self.victim.tobytes() == other.victim.tobytes()
            and self.explored.tobytes() == other.explored.tobytes()
            and self.medic_pos == other.medic_pos
            and self.engineer_pos == other.engineer_pos
            and self.time == other.time
            and self.rng_seed == other.rng_seed
        )

    def to_json(self) -> dict:
        return {
            "rooms": [
                {"has_rubble": bool(self.rubble[r]), "victim": VICTIM_WIRE[Victim(int(self.victim[r]))]}
                for r in range(N_ROOMS)
            ],
            "explored": [bool(v) for v in self.explored],
            "medic_pos": {"x": self.medic_pos.x, "y": self.medic_pos.y},
            "engineer_pos": {"x": self.engineer_pos.x, "y": self.engineer_pos.y},
            "time": self.time,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "WorldState":
        rubble = np.array([1 if r["has_rubble"] else 0 for r in payload["rooms"]], dtype=np.uint8)
        victim = np.array(
            [VICTIM_FROM_WIRE[r["victim"]] for r in payload["rooms"]], dtype=np.uint8
        )
        explored = np.array([1 if v else 0 for v in payload["explored"]], dtype=np.uint8)
        world = cls(
            rubble=rubble,
            victim=victim,
            explored=explored,
            medic_pos=RoomCoord(payload["medic_pos"]["x"], payload["medic_pos"]["y"]),
            engineer_pos=RoomCoord(payload["engineer_pos"]["x"], payload["engineer_pos"]["y"]),
            time=payload["time"],
            rng_seed=payload["rng_seed"],
        )
        world.check_invariants()
        return world

    def check_invariants(self) -> None:
        hidden = self.victim == Victim.HIDDEN_UNDER_RUBBLE
        if np.any(hidden & (self.rubble == 0)):
            raise ValueError("hidden victim in a room without rubble")
        if np.any((self.victim == Victim.OPEN) & (self.rubble == 1)):
            raise ValueError("open victim coexists with rubble")
        if not self.explored[self.medic_pos.index] or not self.explored[self.engineer_pos.index]:
            raise ValueError("agent rooms must be explored")


@dataclass(eq=False)
class Observation:
    """Shared agent view: ground truth masked by the explored grid."""

    explored: np.ndarray  # uint8[20]
    known_rubble: np.ndarray  # uint8[20]
    known_victim: np.ndarray  # uint8[20]
    medic_pos: RoomCoord
    engineer_pos: RoomCoord

    def pos(self, role: Role) -> RoomCoord:
        return self.engineer_pos if role == Role.ENGINEER else self.medic_pos

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observation):
            return NotImplemented
        return (
            self.explored.tobytes() == other.explored.tobytes()
            and self.known_rubble.tobytes() == other.known_rubble.tobytes()
            and self.known_victim.tobytes() == other.known_victim.tobytes()
            and self.medic_pos == other.medic_pos
            and self.engineer_pos == other.engineer_pos
        )

    def to_json(self) -> dict:
        return {
            "explored": [bool(v) for v in self.explored],
            "known_rubble": [bool(v) for v in self.known_rubble],
            "known_victim": [bool(v) for v in self.known_victim],
            "medic_pos": {"x": self.medic_pos.x, "y": self.medic_pos.y},
            "engineer_pos": {"x": self.engineer_pos.x, "y": self.engineer_pos.y},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Observation":
        return cls(
            explored=np.array([1 if v else 0 for v in payload["explored"]], dtype=np.uint8),
            known_rubble=np.array([1 if v else 0 for v in payload["known_rubble"]], dtype=np.uint8),
            known_victim=np.array([1 if v else 0 for v in payload["known_victim"]], dtype=np.uint8),
            medic_pos=RoomCoord(payload["medic_pos"]["x"], payload["medic_pos"]["y"]),
            engineer_pos=RoomCoord(payload["engineer_pos"]["x"], payload["engineer_pos"]["y"]),
        )


class FeatureVector(NamedTuple):
    bits: np.ndarray  # uint8[100]
    schema_version: int = FEATURE_SCHEMA_VERSION


def new_world(config: EnvConfig) -> WorldState:
    """Place rubble, victims, and agents uniformly at random (seeded).

    Draw order is part of the determinism contract: rubble rooms, hidden
    victim rooms (among rubble), open victim rooms (among rubble-free),
    then the two distinct agent start rooms.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)

    rubble = np.zeros(N_ROOMS, dtype=np.uint8)
    victim = np.zeros(N_ROOMS, dtype=np.uint8)
    explored = np.zeros(N_ROOMS, dtype=np.uint8)

    rubble_rooms = rng.choice(N_ROOMS, size=config.n_rubble, replace=False)
    rubble[rubble_rooms] = 1

    hidden_rooms = rng.choice(rubble_rooms, size=config.hidden_count, replace=False)
    victim[hidden_rooms] = Victim.HIDDEN_UNDER_RUBBLE

    open_candidates = np.flatnonzero(rubble == 0)
    n_open = config.n_victims - config.hidden_count
    open_rooms = rng.choice(open_candidates, size=n_open, replace=False)
    victim[open_rooms] = Victim.OPEN

    starts = rng.choice(N_ROOMS, size=2, replace=False)
    medic_pos = RoomCoord.from_index(int(starts[0]))
    engineer_pos = RoomCoord.from_index(int(starts[1]))
    explored[starts] = 1

    return WorldState(
        rubble=rubble,
        victim=victim,
        explored=explored,
        medic_pos=medic_pos,
        engineer_pos=engineer_pos,
        time=0,
        rng_seed=config.seed,
    )


def observe(world: WorldState) -> Observation:
    """Project ground truth through the explored mask.

    A hidden victim never shows up in known_victim while its rubble is in
    place; a rescued victim no longer shows up at all.
    """
    known_rubble = (world.rubble & world.explored).astype(np.uint8)
    known_victim = ((world.victim == Victim.OPEN) & (world.explored == 1)).astype(np.uint8)
    return Observation(
        explored=world.explored.copy(),
        known_rubble=known_rubble,
        known_victim=known_victim,
        medic_pos=world.medic_pos,
        engineer_pos=world.engineer_pos,
    )


def legal_actions(obs: Observation, role: Role) -> set[Action]:
    pos = obs.pos(role)
    legal = {Action.NO_OP}
    for action, (dx, dy) in MOVE_DELTA.items():
        if RoomCoord(pos.x + dx, pos.y + dy).in_bounds():
            legal.add(action)
    if role == Role.ENGINEER and obs.known_rubble[pos.index]:
        legal.add(Action.REMOVE_RUBBLE)
    if role == Role.MEDIC and obs.known_victim[pos.index]:
        legal.add(Action.RESCUE_VICTIM)
    return legal


def _check_legal(obs: Observation, role: Role, action: Action) -> None:
    if role == Role.MEDIC and action == Action.REMOVE_RUBBLE:
        raise RoleViolationError("medic cannot remove rubble")
    if role == Role.ENGINEER and action == Action.RESCUE_VICTIM:
        raise RoleViolationError("engineer cannot rescue victims")
    if action not in legal_actions(obs, role):
        raise IllegalActionError(
            f"{ROLE_WIRE[role]} cannot {ACTION_WIRE[action]} at {obs.pos(role).text()}"
        )


def _apply(world: WorldState, role: Role, action: Action) -> WorldState:
    # Caller has validated legality against the pre-step observation.
    pos = world.engineer_pos if role == Role.ENGINEER else world.medic_pos
    if action in MOVE_DELTA:
        dx, dy = MOVE_DELTA[action]
        dest = RoomCoord(pos.x + dx, pos.y + dy)
        explored = world.explored.copy()
        explored[dest.index] = 1
        kwargs = dict(
            rubble=world.rubble,
            victim=world.victim,
            explored=explored,
            medic_pos=world.medic_pos,
            engineer_pos=world.engineer_pos,
            time=world.time,
            rng_seed=world.rng_seed,
        )
        if role == Role.ENGINEER:
            kwargs["engineer_pos"] = dest
        else:
            kwargs["medic_pos"] = dest
        return WorldState(**kwargs)
    if action == Action.REMOVE_RUBBLE:
        rubble = world.rubble.copy()
        victim = world.victim.copy()
        rubble[pos.index] = 0
        if victim[pos.index] == Victim.HIDDEN_UNDER_RUBBLE:
            victim[pos.index] = Victim.OPEN
        return WorldState(
            rubble=rubble,
            victim=victim,
            explored=world.explored,
            medic_pos=world.medic_pos,
            engineer_pos=world.engineer_pos,
            time=world.time,
            rng_seed=world.rng_seed,
        )
    if action == Action.RESCUE_VICTIM:
        victim = world.victim.copy()
        victim[pos.index] = Victim.RESCUED
        return WorldState(
            rubble=world.rubble,
            victim=victim,
            explored=world.explored,
            medic_pos=world.medic_pos,
            engineer_pos=world.engineer_pos,
            time=world.time,
            rng_seed=world.rng_seed,
        )
    return world  # NO_OP


def step(world: WorldState, engineer_action: Action, medic_action: Action) -> WorldState:
    """Joint transition: the engineer resolves first, then the medic.

    Legality is checked against the pre-step observation for both agents,
    so a victim exposed by this step's rubble removal is only rescuable
    from the next step on.
    """
    obs = observe(world)
    _check_legal(obs, Role.ENGINEER, engineer_action)
    _check_legal(obs, Role.MEDIC, medic_action)
    world = _apply(world, Role.ENGINEER, engineer_action)
    world = _apply(world, Role.MEDIC, medic_action)
    return WorldState(
        rubble=world.rubble,
        victim=world.victim,
        explored=world.explored,
        medic_pos=world.medic_pos,
        engineer_pos=world.engineer_pos,
        time=world.time + 1,
        rng_seed=world.rng_seed,
    )


def encode_features(obs: Observation) -> FeatureVector:
    """100-bit encoding: per room [explored, rubble, victim, medic, engineer].

    bit index = room_index * 5 + attribute, room_index = y * 4 + x.
    """
    bits = np.zeros(N_FEATURES, dtype=np.uint8)
    bits[0::ATTRS_PER_ROOM] = obs.explored
    bits[1::ATTRS_PER_ROOM] = obs.known_rubble
    bits[2::ATTRS_PER_ROOM] = obs.known_victim
    bits[obs.medic_pos.index * ATTRS_PER_ROOM + Attribute.MEDIC_HERE] = 1
    bits[obs.engineer_pos.index * ATTRS_PER_ROOM + Attribute.ENGINEER_HERE] = 1
    return FeatureVector(bits)


def decode_features(features: FeatureVector) -> Observation:
    if features.schema_version != FEATURE_SCHEMA_VERSION:
        raise ValueError(f"unsupported feature schema {features.schema_version}")
    bits = features.bits
    medic = int(np.flatnonzero(bits[Attribute.MEDIC_HERE::ATTRS_PER_ROOM])[0])
    engineer = int(np.flatnonzero(bits[Attribute.ENGINEER_HERE::ATTRS_PER_ROOM])[0])
    return Observation(
        explored=bits[0::ATTRS_PER_ROOM].copy(),
        known_rubble=bits[1::ATTRS_PER_ROOM].copy(),
        known_victim=bits[2::ATTRS_PER_ROOM].copy(),
        medic_pos=RoomCoord.from_index(medic),
        engineer_pos=RoomCoord.from_index(engineer),
    )


def feature_descriptor(index: int) -> tuple[RoomCoord, Attribute]:
    if not 0 <= index < N_FEATURES:
        raise ValueError(f"feature index {index} out of range")
    return RoomCoord.from_index(index // ATTRS_PER_ROOM), Attribute(index % ATTRS_PER_ROOM)
