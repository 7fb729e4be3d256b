"""File-backed artifact store with content-derived ids.

Layout under the root directory: episodes/, trees/, explanations/,
labels/, one artifact per file named <id> plus an extension. Ids are the
first 16 hex digits of the sha256 of the serialized artifact, so identical
content maps to the same id across runs. Writes go through a temp file in
the target directory followed by an atomic rename.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Optional

from .distill import DistillResult
from .grid import ROLE_WIRE, Role
from .harness import AnnotationLabels
from .chat import ExplanationRecord
from .policies import Trajectory, read_trajectory, write_trajectory
from .tree import DecisionTree, tree_from_json, tree_to_json

TREE_ARTIFACT_SCHEMA = "usarx.distilled_tree"
TREE_ARTIFACT_VERSION = 1
LABELS_SCHEMA = "usarx.labels"
LABELS_VERSION = 1


class ArtifactNotFound(KeyError):
    def __init__(self, kind: str, artifact_id: str):
        super().__init__(f"{kind} {artifact_id!r} not found")
        self.kind = kind
        self.artifact_id = artifact_id

    def __str__(self) -> str:
        return f"{self.kind} {self.artifact_id!r} not found"


def content_id(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class ArtifactStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("episodes", "trees", "explanations", "labels"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        # (path, mtime_ns) -> parsed payload, so repeated tree lookups skip
        # reparsing megabyte-scale node lists
        self._tree_cache: dict[tuple[Path, int], dict] = {}

    def _write_atomic(self, path: Path, text: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fp:
                fp.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _read(self, kind: str, path: Path) -> str:
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ArtifactNotFound(kind, path.stem) from None

    @staticmethod
    def _ids(directory: Path, suffix: str) -> list[str]:
        return sorted(p.stem for p in directory.glob(f"*{suffix}"))

    # -- episodes ----------------------------------------------------------

    def put_episode(self, traj: Trajectory) -> str:
        buf = io.StringIO()
        write_trajectory(traj, buf)
        text = buf.getvalue()
        episode_id = content_id(text)
        self._write_atomic(self.root / "episodes" / f"{episode_id}.jsonl", text)
        return episode_id

    def get_episode(self, episode_id: str) -> Trajectory:
        text = self._read("episode", self.root / "episodes" / f"{episode_id}.jsonl")
        return read_trajectory(io.StringIO(text))

    def list_episodes(self) -> list[str]:
        return self._ids(self.root / "episodes", ".jsonl")

    # -- trees -------------------------------------------------------------

    def put_tree(self, result: DistillResult) -> str:
        best = result.history[result.best_iteration - 1]
        payload = {
            "schema": TREE_ARTIFACT_SCHEMA,
            "version": TREE_ARTIFACT_VERSION,
            "behavior": result.behavior,
            "role": ROLE_WIRE[result.role],
            "best_iteration": result.best_iteration,
            "holdout_fidelity": best.holdout_fidelity,
            "config": result.config.to_json(),
            "history": [s.to_json() for s in result.history],
            "tree": tree_to_json(result.tree),
        }
        text = json.dumps(payload, indent=1) + "\n"
        tree_id = content_id(text)
        self._write_atomic(self.root / "trees" / f"{tree_id}.json", text)
        return tree_id

    def _tree_payload(self, path: Path) -> dict:
        key = (path, path.stat().st_mtime_ns)
        if key not in self._tree_cache:
            payload = json.loads(path.read_text(encoding="utf-8"))
            if payload.get("schema") != TREE_ARTIFACT_SCHEMA:
                raise ValueError(f"{path.name}: not a distilled-tree artifact")
            if payload.get("version") != TREE_ARTIFACT_VERSION:
                raise ValueError(f"{path.name}: unsupported version {payload.get('version')}")
            self._tree_cache = {k: v for k, v in self._tree_cache.items() if k[0] != path}
            self._tree_cache[key] = payload
        return self._tree_cache[key]

    def get_tree_payload(self, tree_id: str) -> dict:
        path = self.root / "trees" / f"{tree_id}.json"
        if not path.exists():
            raise ArtifactNotFound("tree", tree_id)
        return self._tree_payload(path)

    def get_tree(self, tree_id: str) -> DecisionTree:
        return tree_from_json(self.get_tree_payload(tree_id)["tree"])

    def list_trees(self) -> list[dict]:
        """Metadata rows (id, behavior, role, fidelity) for every stored tree."""
        rows = []
        for path in sorted((self.root / "trees").glob("*.json")):
            payload = self._tree_payload(path)
            rows.append(
                {
                    "id": path.stem,
                    "behavior": payload["behavior"],
                    "role": payload["role"],
                    "best_iteration": payload["best_iteration"],
                    "holdout_fidelity": payload["holdout_fidelity"],
                }
            )
        return rows

    def find_tree(self, behavior: str, role: Role) -> Optional[tuple[str, DecisionTree]]:
        """Best stored tree for (behavior, role) by holdout fidelity, ties by id."""
        wire_role = ROLE_WIRE[role]
        candidates = [
            row
            for row in self.list_trees()
            if row["behavior"] == behavior and row["role"] == wire_role
        ]
        if not candidates:
            return None
        best = max(candidates, key=lambda row: (row["holdout_fidelity"], row["id"]))
        return best["id"], self.get_tree(best["id"])

    # -- explanations ------------------------------------------------------

    def put_explanation(self, record: ExplanationRecord) -> str:
        text = json.dumps(record.to_json(), indent=1) + "\n"
        self._write_atomic(self.root / "explanations" / f"{record.id}.json", text)
        return record.id

    def get_explanation(self, record_id: str) -> ExplanationRecord:
        text = self._read("explanation", self.root / "explanations" / f"{record_id}.json")
        return ExplanationRecord.from_json(json.loads(text))

    def has_explanation(self, record_id: str) -> bool:
        return (self.root / "explanations" / f"{record_id}.json").exists()

    def list_explanations(self) -> list[str]:
        return self._ids(self.root / "explanations", ".json")

    def all_explanations(self) -> list[ExplanationRecord]:
        return [self.get_explanation(rid) for rid in self.list_explanations()]

    # -- labels ------------------------------------------------------------

    def put_labels(self, labels: AnnotationLabels) -> str:
        """Store one annotator's labels for one record; a resubmission for
        the same (record, annotator) replaces the previous artifact."""
        payload = {
            "schema": LABELS_SCHEMA,
            "version": LABELS_VERSION,
            **labels.to_json(),
        }
        text = json.dumps(payload, indent=1) + "\n"
        labels_id = content_id(text)
        for existing_id in self.list_labels():
            if existing_id == labels_id:
                continue
            existing = self.get_labels(existing_id)
            if (
                existing.record_id == labels.record_id
                and existing.annotator_id == labels.annotator_id
            ):
                os.unlink(self.root / "labels" / f"{existing_id}.json")
        self._write_atomic(self.root / "labels" / f"{labels_id}.json", text)
        return labels_id

    def get_labels(self, labels_id: str) -> AnnotationLabels:
        text = self._read("labels", self.root / "labels" / f"{labels_id}.json")
        payload = json.loads(text)
        if payload.get("schema") != LABELS_SCHEMA:
            raise ValueError(f"{labels_id}: not a labels artifact")
        if payload.get("version") != LABELS_VERSION:
            raise ValueError(f"{labels_id}: unsupported version {payload.get('version')}")
        payload.pop("schema")
        payload.pop("version")
        return AnnotationLabels.from_json(payload)

    def list_labels(self) -> list[str]:
        return self._ids(self.root / "labels", ".json")

    def all_labels(self) -> list[AnnotationLabels]:
        return [self.get_labels(lid) for lid in self.list_labels()]
