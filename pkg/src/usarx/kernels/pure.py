"""Reference episode kernels composed from the plain environment modules.

This is the semantic ground truth: the compiled kernel must reproduce these
results bit for bit (tests/test_kernels.py checks equality across seeds).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..grid import (
    N_FEATURES,
    Action,
    Role,
    RoomCoord,
    WorldState,
    encode_features,
    legal_actions,
    observe,
    step,
)
from ..policies import POLICIES
from .api import BEHAVIOR_NAME, TreeArrays, WorldArrays


def _to_world(world: WorldArrays) -> WorldState:
    return WorldState(
        rubble=world.rubble.copy(),
        victim=world.victim.copy(),
        explored=world.explored.copy(),
        medic_pos=RoomCoord.from_index(int(world.medic_idx)),
        engineer_pos=RoomCoord.from_index(int(world.engineer_idx)),
        time=0,
        rng_seed=0,
    )


def _tree_act(tree: TreeArrays, bits: np.ndarray) -> Action:
    node = tree.root
    while tree.feature[node] >= 0:
        if bits[tree.feature[node]]:
            node = tree.true_child[node]
        else:
            node = tree.false_child[node]
    return Action(int(tree.action[node]))


def fidelity_episode(
    world: WorldArrays, behavior: int, role: int, tree: TreeArrays
) -> tuple[int, int]:
    """Roll out the expert pair; count timesteps where the tree agrees with
    the expert's action for `role`. Returns (matches, steps)."""
    policy = POLICIES[BEHAVIOR_NAME[behavior]]
    who = Role(role)
    w = _to_world(world)
    matches = steps = 0
    while not w.all_rescued() and w.time < world.horizon:
        obs = observe(w)
        ea = policy.act(obs, Role.ENGINEER)
        ma = policy.act(obs, Role.MEDIC)
        expert = ea if who == Role.ENGINEER else ma
        if _tree_act(tree, encode_features(obs).bits) == expert:
            matches += 1
        steps += 1
        w = step(w, ea, ma)
    return matches, steps


def collect_episode(
    world: WorldArrays, behavior: int, role: int, tree: Optional[TreeArrays]
) -> tuple[np.ndarray, np.ndarray]:
    """One data-collection episode for `role`.

    Every visited state is labeled with the expert's action. With no tree the
    expert pair drives; with a tree, the tree drives `role` (illegal picks
    demoted to NoOp) while the expert drives the other agent.
    """
    policy = POLICIES[BEHAVIOR_NAME[behavior]]
    who = Role(role)
    w = _to_world(world)
    features: list[np.ndarray] = []
    labels: list[int] = []
    while not w.all_rescued() and w.time < world.horizon:
        obs = observe(w)
        ea = policy.act(obs, Role.ENGINEER)
        ma = policy.act(obs, Role.MEDIC)
        bits = encode_features(obs).bits
        features.append(bits)
        labels.append(int(ea if who == Role.ENGINEER else ma))
        if tree is not None:
            picked = _tree_act(tree, bits)
            if picked not in legal_actions(obs, who):
                picked = Action.NO_OP
            if who == Role.ENGINEER:
                ea = picked
            else:
                ma = picked
        w = step(w, ea, ma)
    X = np.array(features, dtype=np.uint8).reshape(-1, N_FEATURES)
    y = np.array(labels, dtype=np.int64)
    return X, y
