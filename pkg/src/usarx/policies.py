"""Scripted reference behaviors: Explore, Exploit, Fixed.

These stand in as black-box policies. All three are deterministic,
memoryless functions of the shared observation, which is what makes tree
distillation well-posed. Targeting rules are frozen for reproducibility:
nearest target by Manhattan distance with ties broken by smallest (y, x),
and the first move toward a target is the adjacent strictly-closer room
with smallest (y, x).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from typing import IO, NamedTuple, Optional, Protocol

import numpy as np

from .grid import (
    ACTION_FROM_WIRE,
    ACTION_WIRE,
    GRID_H,
    GRID_W,
    MOVE_DELTA,
    N_ROOMS,
    ROLE_FROM_WIRE,
    ROLE_WIRE,
    Action,
    EnvConfig,
    Observation,
    Role,
    RoomCoord,
    WorldState,
    new_world,
    observe,
    step,
)

TRAJECTORY_SCHEMA = "usarx.trajectory"
TRAJECTORY_VERSION = 1


class GoalKind(IntEnum):
    REACH_ROOM = 0
    REMOVE_RUBBLE_AT = 1
    RESCUE_VICTIM_AT = 2
    FOLLOW_PATTERN = 3
    IDLE = 4


GOAL_WIRE = {
    GoalKind.REACH_ROOM: "ReachRoom",
    GoalKind.REMOVE_RUBBLE_AT: "RemoveRubbleAt",
    GoalKind.RESCUE_VICTIM_AT: "RescueVictimAt",
    GoalKind.FOLLOW_PATTERN: "FollowPattern",
    GoalKind.IDLE: "Idle",
}
GOAL_FROM_WIRE = {v: k for k, v in GOAL_WIRE.items()}


class Goal(NamedTuple):
    kind: GoalKind
    target: Optional[RoomCoord] = None

    def to_json(self) -> dict:
        payload: dict = {"kind": GOAL_WIRE[self.kind]}
        if self.target is not None:
            payload["target"] = {"x": self.target.x, "y": self.target.y}
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "Goal":
        target = payload.get("target")
        return cls(
            GOAL_FROM_WIRE[payload["kind"]],
            RoomCoord(target["x"], target["y"]) if target else None,
        )


class Policy(Protocol):
    name: str

    def act(self, obs: Observation, role: Role) -> Action: ...

    def current_goal(self, obs: Observation, role: Role) -> Goal: ...


def manhattan(a: RoomCoord, b: RoomCoord) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def nearest_room(pos: RoomCoord, mask: np.ndarray) -> Optional[RoomCoord]:
    """Nearest masked room by (distance, y, x); None when mask is empty."""
    best = None
    best_key = None
    for r in np.flatnonzero(mask):
        room = RoomCoord.from_index(int(r))
        key = (manhattan(pos, room), room.y, room.x)
        if best_key is None or key < best_key:
            best, best_key = room, key
    return best


def step_toward(pos: RoomCoord, target: RoomCoord) -> Action:
    """First move along a shortest path: adjacent strictly-closer room
    with smallest (y, x)."""
    best_action = None
    best_key = None
    for action, (dx, dy) in MOVE_DELTA.items():
        dest = RoomCoord(pos.x + dx, pos.y + dy)
        if not dest.in_bounds():
            continue
        if manhattan(dest, target) >= manhattan(pos, target):
            continue
        key = (dest.y, dest.x)
        if best_key is None or key < best_key:
            best_action, best_key = action, key
    if best_action is None:
        raise ValueError(f"no move from {pos} toward {target}")
    return best_action


def _duty_mask(obs: Observation, role: Role) -> np.ndarray:
    return obs.known_rubble if role == Role.ENGINEER else obs.known_victim


def _duty_action(role: Role) -> Action:
    return Action.REMOVE_RUBBLE if role == Role.ENGINEER else Action.RESCUE_VICTIM


class ExplorePolicy:
    """Explore every room first; only then backtrack to rubble/victims."""

    name = "explore"

    def act(self, obs: Observation, role: Role) -> Action:
        pos = obs.pos(role)
        unexplored = obs.explored == 0
        if unexplored.any():
            return step_toward(pos, nearest_room(pos, unexplored))
        mask = _duty_mask(obs, role)
        target = nearest_room(pos, mask)
        if target is None:
            return Action.NO_OP
        if target == pos:
            return _duty_action(role)
        return step_toward(pos, target)

    def current_goal(self, obs: Observation, role: Role) -> Goal:
        pos = obs.pos(role)
        unexplored = obs.explored == 0
        if unexplored.any():
            return Goal(GoalKind.REACH_ROOM, nearest_room(pos, unexplored))
        target = nearest_room(pos, _duty_mask(obs, role))
        if target is None:
            return Goal(GoalKind.IDLE)
        kind = GoalKind.REMOVE_RUBBLE_AT if role == Role.ENGINEER else GoalKind.RESCUE_VICTIM_AT
        return Goal(kind, target)


class ExploitPolicy:
    """Handle rubble/victims the moment they are known; explore otherwise."""

    name = "exploit"

    def act(self, obs: Observation, role: Role) -> Action:
        pos = obs.pos(role)
        mask = _duty_mask(obs, role)
        if mask[pos.index]:
            return _duty_action(role)
        target = nearest_room(pos, mask)
        if target is not None:
            return step_toward(pos, target)
        unexplored = obs.explored == 0
        if unexplored.any():
            return step_toward(pos, nearest_room(pos, unexplored))
        return Action.NO_OP

    def current_goal(self, obs: Observation, role: Role) -> Goal:
        pos = obs.pos(role)
        target = nearest_room(pos, _duty_mask(obs, role))
        if target is not None:
            kind = GoalKind.REMOVE_RUBBLE_AT if role == Role.ENGINEER else GoalKind.RESCUE_VICTIM_AT
            return Goal(kind, target)
        unexplored = obs.explored == 0
        if unexplored.any():
            return Goal(GoalKind.REACH_ROOM, nearest_room(pos, unexplored))
        return Goal(GoalKind.IDLE)


def _fixed_cycle() -> dict[int, Action]:
    # Single-successor tour of all 20 rooms: columns swept north-south,
    # shifting east at each column end, with row 0 as the westward return.
    # A unique successor per room keeps the pattern memoryless.
    nxt: dict[int, Action] = {}
    for y in range(4):
        nxt[RoomCoord(0, y).index] = Action.MOVE_SOUTH
    nxt[RoomCoord(0, 4).index] = Action.MOVE_EAST
    for y in (4, 3, 2):
        nxt[RoomCoord(1, y).index] = Action.MOVE_NORTH
    nxt[RoomCoord(1, 1).index] = Action.MOVE_EAST
    for y in (1, 2, 3):
        nxt[RoomCoord(2, y).index] = Action.MOVE_SOUTH
    nxt[RoomCoord(2, 4).index] = Action.MOVE_EAST
    for y in (4, 3, 2, 1):
        nxt[RoomCoord(3, y).index] = Action.MOVE_NORTH
    for x in (3, 2, 1):
        nxt[RoomCoord(x, 0).index] = Action.MOVE_WEST
    assert len(nxt) == N_ROOMS
    return nxt


FIXED_NEXT = _fixed_cycle()


class FixedPolicy:
    """Pre-determined sweep; ignores rubble and victims entirely."""

    name = "fixed"

    def act(self, obs: Observation, role: Role) -> Action:
        return FIXED_NEXT[obs.pos(role).index]

    def current_goal(self, obs: Observation, role: Role) -> Goal:
        return Goal(GoalKind.FOLLOW_PATTERN)


POLICIES = {p.name: p for p in (ExplorePolicy(), ExploitPolicy(), FixedPolicy())}


def get_policy(name: str) -> Policy:
    try:
        return POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}") from None


@dataclass
class TrajectoryStep:
    world: WorldState
    obs: Observation
    engineer_action: Action
    medic_action: Action
    engineer_goal: Goal
    medic_goal: Goal


@dataclass
class Trajectory:
    config: EnvConfig
    engineer_policy: str
    medic_policy: str
    steps: list[TrajectoryStep]
    final_world: WorldState
    final_obs: Observation

    def __len__(self) -> int:
        return len(self.steps)

    def obs_at(self, t: int) -> Observation:
        """Observation at time t, where t == len(steps) is the final state."""
        if t == len(self.steps):
            return self.final_obs
        return self.steps[t].obs

    def action_of(self, t: int, role: Role) -> Action:
        s = self.steps[t]
        return s.engineer_action if role == Role.ENGINEER else s.medic_action

    def goal_of(self, t: int, role: Role) -> Goal:
        s = self.steps[t]
        return s.engineer_goal if role == Role.ENGINEER else s.medic_goal


def rollout(engineer_policy: Policy, medic_policy: Policy, config: EnvConfig) -> Trajectory:
    """Run one episode until every victim is rescued or the horizon hits."""
    world = new_world(config)
    steps: list[TrajectoryStep] = []
    while not world.all_rescued() and world.time < config.horizon:
        obs = observe(world)
        ea = engineer_policy.act(obs, Role.ENGINEER)
        ma = medic_policy.act(obs, Role.MEDIC)
        steps.append(
            TrajectoryStep(
                world=world,
                obs=obs,
                engineer_action=ea,
                medic_action=ma,
                engineer_goal=engineer_policy.current_goal(obs, Role.ENGINEER),
                medic_goal=medic_policy.current_goal(obs, Role.MEDIC),
            )
        )
        world = step(world, ea, ma)
    return Trajectory(
        config=config,
        engineer_policy=engineer_policy.name,
        medic_policy=medic_policy.name,
        steps=steps,
        final_world=world,
        final_obs=observe(world),
    )


def write_trajectory(traj: Trajectory, fp: IO[str]) -> None:
    """One JSON record per line: header, then one record per timestep,
    then the terminal state."""
    header = {
        "schema": TRAJECTORY_SCHEMA,
        "version": TRAJECTORY_VERSION,
        "config": traj.config.to_json(),
        "engineer_policy": traj.engineer_policy,
        "medic_policy": traj.medic_policy,
        "n_steps": len(traj.steps),
    }
    fp.write(json.dumps(header) + "\n")
    for s in traj.steps:
        record = {
            "time": s.world.time,
            "world": s.world.to_json(),
            "observation": s.obs.to_json(),
            "engineer_action": ACTION_WIRE[s.engineer_action],
            "medic_action": ACTION_WIRE[s.medic_action],
            "engineer_goal": s.engineer_goal.to_json(),
            "medic_goal": s.medic_goal.to_json(),
        }
        fp.write(json.dumps(record) + "\n")
    fp.write(
        json.dumps(
            {
                "time": traj.final_world.time,
                "world": traj.final_world.to_json(),
                "observation": traj.final_obs.to_json(),
                "final": True,
            }
        )
        + "\n"
    )


def read_trajectory(fp: IO[str]) -> Trajectory:
    header = json.loads(fp.readline())
    if header.get("schema") != TRAJECTORY_SCHEMA:
        raise ValueError("not a trajectory stream")
    if header.get("version") != TRAJECTORY_VERSION:
        raise ValueError(f"unsupported trajectory version {header.get('version')}")
    steps = []
    final_world = final_obs = None
    for line in fp:
        record = json.loads(line)
        world = WorldState.from_json(record["world"])
        obs = Observation.from_json(record["observation"])
        if record.get("final"):
            final_world, final_obs = world, obs
            break
        steps.append(
            TrajectoryStep(
                world=world,
                obs=obs,
                engineer_action=ACTION_FROM_WIRE[record["engineer_action"]],
                medic_action=ACTION_FROM_WIRE[record["medic_action"]],
                engineer_goal=Goal.from_json(record["engineer_goal"]),
                medic_goal=Goal.from_json(record["medic_goal"]),
            )
        )
    if final_world is None:
        raise ValueError("trajectory stream missing terminal record")
    return Trajectory(
        config=EnvConfig.from_json(header["config"]),
        engineer_policy=header["engineer_policy"],
        medic_policy=header["medic_policy"],
        steps=steps,
        final_world=final_world,
        final_obs=final_obs,
    )
