"""Shared argument types for the episode kernels.

Both kernel implementations take the same flat-array inputs so they can be
swapped freely: a world snapshot as plain numpy arrays plus scalars, and a
fitted tree as parallel node arrays. Kernels never mutate their inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..grid import WorldState
from ..tree import DecisionTree

BEHAVIOR_CODE = {"explore": 0, "exploit": 1, "fixed": 2}
BEHAVIOR_NAME = {v: k for k, v in BEHAVIOR_CODE.items()}


class WorldArrays(NamedTuple):
    rubble: np.ndarray  # uint8[20]
    victim: np.ndarray  # uint8[20], Victim enum values
    explored: np.ndarray  # uint8[20]
    medic_idx: int
    engineer_idx: int
    horizon: int


class TreeArrays(NamedTuple):
    feature: np.ndarray  # int32[n], -1 at leaves
    false_child: np.ndarray  # int32[n]
    true_child: np.ndarray  # int32[n]
    action: np.ndarray  # int32[n], -1 at splits
    root: int


def world_arrays(world: WorldState, horizon: int) -> WorldArrays:
    """Snapshot a fresh world for a kernel; episodes run from time 0."""
    return WorldArrays(
        rubble=np.ascontiguousarray(world.rubble, dtype=np.uint8),
        victim=np.ascontiguousarray(world.victim, dtype=np.uint8),
        explored=np.ascontiguousarray(world.explored, dtype=np.uint8),
        medic_idx=world.medic_pos.index,
        engineer_idx=world.engineer_pos.index,
        horizon=horizon,
    )


def tree_arrays(tree: DecisionTree) -> TreeArrays:
    feature, false_child, true_child, action, root = tree.to_arrays()
    return TreeArrays(feature, false_child, true_child, action, root)
