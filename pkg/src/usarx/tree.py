"""CART decision trees over the 100-bit observation encoding.

Greedy top-down induction minimizing weighted Gini impurity. All features
are binary, so split search is exact enumeration over the 100 candidate
bits. Ties in impurity go to the smallest feature index and leaf-majority
ties to the smallest action value, which keeps fitting fully deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .grid import (
    ACTION_FROM_WIRE,
    ACTION_WIRE,
    FEATURE_SCHEMA_VERSION,
    N_FEATURES,
    Action,
    FeatureVector,
    Role,
    ROLE_FROM_WIRE,
    ROLE_WIRE,
)

TREE_SCHEMA = "usarx.tree"
TREE_VERSION = 1
N_ACTIONS = len(Action)


class SchemaMismatchError(ValueError):
    """Feature schema of the input does not match the tree's."""


@dataclass
class Node:
    """Internal node (feature >= 0) or leaf (action >= 0)."""

    feature: int = -1
    false_child: int = -1
    true_child: int = -1
    action: int = -1
    class_counts: Optional[np.ndarray] = None  # int64[N_ACTIONS], leaves only

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class DecisionTree:
    nodes: list[Node]
    root: int
    role: Role
    max_depth: int
    feature_schema_version: int = FEATURE_SCHEMA_VERSION

    def depth(self) -> int:
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.false_child), walk(node.true_child))

        return walk(self.root)

    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
        """Flat arrays (feature, false_child, true_child, action, root) for
        the rollout kernels."""
        n = len(self.nodes)
        feat = np.empty(n, dtype=np.int32)
        fc = np.empty(n, dtype=np.int32)
        tc = np.empty(n, dtype=np.int32)
        act = np.empty(n, dtype=np.int32)
        for i, node in enumerate(self.nodes):
            feat[i] = node.feature
            fc[i] = node.false_child
            tc[i] = node.true_child
            act[i] = node.action
        return feat, fc, tc, act, self.root

    def validate(self) -> None:
        """Check structural invariants: child ids in range, reachable part
        acyclic, no feature repeated along a path, depth within bound."""
        n = len(self.nodes)
        if not 0 <= self.root < n:
            raise ValueError("root out of range")

        def walk(i: int, seen_features: frozenset[int], depth: int, on_path: tuple[int, ...]):
            if i in on_path:
                raise ValueError("cycle in tree")
            node = self.nodes[i]
            if node.is_leaf:
                if not 0 <= node.action < N_ACTIONS:
                    raise ValueError(f"leaf {i} has invalid action")
                return
            if depth >= self.max_depth:
                raise ValueError(f"node {i} exceeds max depth {self.max_depth}")
            if not 0 <= node.feature < N_FEATURES:
                raise ValueError(f"node {i} has invalid feature")
            if node.feature in seen_features:
                raise ValueError(f"feature {node.feature} repeated on a path")
            if not (0 <= node.false_child < n and 0 <= node.true_child < n):
                raise ValueError(f"node {i} has child out of range")
            nxt = seen_features | {node.feature}
            walk(node.false_child, nxt, depth + 1, on_path + (i,))
            walk(node.true_child, nxt, depth + 1, on_path + (i,))

        walk(self.root, frozenset(), 0, ())


@dataclass
class Dataset:
    """Rows of (feature bits, action) for one role."""

    X: np.ndarray  # uint8[n, 100]
    y: np.ndarray  # int64[n]
    role: Role
    schema_version: int = FEATURE_SCHEMA_VERSION

    def __len__(self) -> int:
        return len(self.y)

    def extend(self, X: np.ndarray, y: np.ndarray) -> "Dataset":
        return Dataset(
            X=np.concatenate([self.X, X]),
            y=np.concatenate([self.y, y]),
            role=self.role,
            schema_version=self.schema_version,
        )


def _gini_terms(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # Weighted impurity contribution n * (1 - sum p^2) = n - sum(c^2)/n,
    # defined as 0 for empty sides.
    sq = np.square(counts, dtype=np.float64).sum(axis=1)
    out = np.zeros_like(totals, dtype=np.float64)
    nz = totals > 0
    out[nz] = totals[nz] - sq[nz] / totals[nz]
    return out


def fit_tree(data: Dataset, max_depth: int, min_samples_leaf: int = 1) -> DecisionTree:
    """Greedy CART fit. Splits as long as a node is impure, the depth bound
    allows, and some feature puts at least min_samples_leaf rows on each
    side; zero-gain splits are allowed (an XOR-style dataset needs them)."""
    if len(data) == 0:
        raise ValueError("cannot fit a tree on an empty dataset")
    if data.schema_version != FEATURE_SCHEMA_VERSION:
        raise SchemaMismatchError(f"dataset schema {data.schema_version}")

    X = np.ascontiguousarray(data.X, dtype=np.uint8)
    y = np.asarray(data.y, dtype=np.int64)
    nodes: list[Node] = []

    def make_leaf(counts: np.ndarray) -> int:
        action = int(np.argmax(counts))  # ties: smallest action value
        nodes.append(Node(action=action, class_counts=counts))
        return len(nodes) - 1

    def build(idx: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[idx], minlength=N_ACTIONS)
        n = len(idx)
        if depth >= max_depth or counts.max() == n or n < 2 * min_samples_leaf:
            return make_leaf(counts)

        Xn = X[idx]
        onehot = np.zeros((n, N_ACTIONS), dtype=np.float64)
        onehot[np.arange(n), y[idx]] = 1.0
        true_counts = Xn.T.astype(np.float64) @ onehot  # (100, N_ACTIONS)
        n_true = true_counts.sum(axis=1)
        n_false = n - n_true
        false_counts = counts.astype(np.float64) - true_counts

        weighted = _gini_terms(true_counts, n_true) + _gini_terms(false_counts, n_false)
        invalid = (n_true < min_samples_leaf) | (n_false < min_samples_leaf)
        weighted[invalid] = np.inf

        best = int(np.argmin(weighted))  # ties: smallest feature index
        if not np.isfinite(weighted[best]):
            return make_leaf(counts)

        mask = Xn[:, best] == 1
        false_id = build(idx[~mask], depth + 1)
        true_id = build(idx[mask], depth + 1)
        nodes.append(Node(feature=best, false_child=false_id, true_child=true_id))
        return len(nodes) - 1

    root = build(np.arange(len(y)), 0)
    tree = DecisionTree(nodes=nodes, root=root, role=data.role, max_depth=max_depth)
    return tree


def tree_predict(tree: DecisionTree, features: FeatureVector) -> Action:
    if features.schema_version != tree.feature_schema_version:
        raise SchemaMismatchError(
            f"feature schema {features.schema_version} != tree schema {tree.feature_schema_version}"
        )
    bits = features.bits
    node = tree.nodes[tree.root]
    while not node.is_leaf:
        node = tree.nodes[node.true_child if bits[node.feature] else node.false_child]
    return Action(node.action)


def predict_batch(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Predict actions for a row matrix of feature bits."""
    out = np.empty(len(X), dtype=np.int64)
    nodes = tree.nodes
    for i in range(len(X)):
        row = X[i]
        node = nodes[tree.root]
        while not node.is_leaf:
            node = nodes[node.true_child if row[node.feature] else node.false_child]
        out[i] = node.action
    return out


def training_accuracy(tree: DecisionTree, data: Dataset) -> float:
    return float(np.mean(predict_batch(tree, data.X) == data.y))


def tree_to_json(tree: DecisionTree) -> dict:
    return {
        "schema": TREE_SCHEMA,
        "version": TREE_VERSION,
        "role": ROLE_WIRE[tree.role],
        "feature_schema_version": tree.feature_schema_version,
        "max_depth": tree.max_depth,
        "root": tree.root,
        "nodes": [
            {"id": i, "kind": "split", "feature": n.feature,
             "children": {"false": n.false_child, "true": n.true_child}}
            if not n.is_leaf
            else {"id": i, "kind": "leaf", "action": ACTION_WIRE[Action(n.action)],
                  "class_counts": {ACTION_WIRE[Action(a)]: int(c)
                                   for a, c in enumerate(
                                       [] if n.class_counts is None else n.class_counts)
                                   if c}}
            for i, n in enumerate(tree.nodes)
        ],
    }


def write_tree(tree: DecisionTree, fp: IO[str]) -> None:
    json.dump(tree_to_json(tree), fp, indent=1)
    fp.write("\n")


def tree_from_json(payload: dict) -> DecisionTree:
    if payload.get("schema") != TREE_SCHEMA:
        raise ValueError("not a tree artifact")
    if payload.get("version") != TREE_VERSION:
        raise ValueError(f"unsupported tree version {payload.get('version')}")
    nodes: list[Node] = [Node() for _ in payload["nodes"]]
    for spec in payload["nodes"]:
        node = nodes[spec["id"]]
        if spec["kind"] == "split":
            node.feature = spec["feature"]
            node.false_child = spec["children"]["false"]
            node.true_child = spec["children"]["true"]
        else:
            node.action = int(ACTION_FROM_WIRE[spec["action"]])
            counts = np.zeros(N_ACTIONS, dtype=np.int64)
            for name, c in spec.get("class_counts", {}).items():
                counts[int(ACTION_FROM_WIRE[name])] = c
            node.class_counts = counts
    tree = DecisionTree(
        nodes=nodes,
        root=payload["root"],
        role=ROLE_FROM_WIRE[payload["role"]],
        max_depth=payload["max_depth"],
        feature_schema_version=payload["feature_schema_version"],
    )
    tree.validate()
    return tree


def read_tree(fp: IO[str]) -> DecisionTree:
    return tree_from_json(json.load(fp))
