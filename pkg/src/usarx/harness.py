"""Evaluation machinery: state categorization and sampling, annotation
labels, accuracy/hallucination tables, and the correlation statistic.

Strategy/Category/Goal/Intent judgments are made by humans; this module
only mines the states to annotate, stores the labels, and does the
arithmetic. Goal categories rely on scripted-policy goal introspection and
are undefined for the fixed behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace as dc_replace
from typing import IO, Optional

import numpy as np
from scipy import stats

from .chat import CATEGORY_FROM_WIRE, CATEGORY_WIRE, ExplanationRecord, StateCategory
from .distill import derive_seeds
from .grid import (
    ROLE_FROM_WIRE,
    ROLE_WIRE,
    Action,
    EnvConfig,
    MOVE_DELTA,
    Role,
    RoomCoord,
    encode_features,
)
from .policies import GoalKind, Trajectory, get_policy, rollout
from .tree import DecisionTree, tree_predict

METRICS = ("strategy", "category", "goal", "action", "intent")
# Goal-seeking metrics are meaningless for the pattern-following behavior.
FIXED_METRICS = ("strategy", "action", "intent")

_EXPLORE = get_policy("explore")
_EXPLOIT = get_policy("exploit")


def _move_destination(pos: RoomCoord, action: Action) -> Optional[RoomCoord]:
    if action not in MOVE_DELTA:
        return None
    dx, dy = MOVE_DELTA[action]
    return RoomCoord(pos.x + dx, pos.y + dy)


def categorize_state(traj: Trajectory, t: int, role: Role) -> StateCategory:
    """Categorize the decision at timestep t for one role.

    Ambiguous: explore and exploit agree with the recorded action here but
    disagree at the recorded next state. Short-term: the recorded action
    attains the recorded goal (lands on the target room, or performs the
    duty action at it). Long-term: everything else.
    """
    if not 0 <= t < len(traj.steps):
        raise IndexError(f"timestep {t} outside trajectory of length {len(traj.steps)}")
    obs_t = traj.obs_at(t)
    obs_next = traj.obs_at(t + 1)
    action = traj.action_of(t, role)

    explore_now = _EXPLORE.act(obs_t, role)
    exploit_now = _EXPLOIT.act(obs_t, role)
    if (
        explore_now == exploit_now == action
        and _EXPLORE.act(obs_next, role) != _EXPLOIT.act(obs_next, role)
    ):
        return StateCategory.AMBIGUOUS

    goal = traj.goal_of(t, role)
    if goal.target is not None:
        pos = obs_t.pos(role)
        if _move_destination(pos, action) == goal.target:
            return StateCategory.SHORT_TERM
        if pos == goal.target and (
            (goal.kind == GoalKind.REMOVE_RUBBLE_AT and action == Action.REMOVE_RUBBLE)
            or (goal.kind == GoalKind.RESCUE_VICTIM_AT and action == Action.RESCUE_VICTIM)
        ):
            return StateCategory.SHORT_TERM
    return StateCategory.LONG_TERM


@dataclass(frozen=True)
class EvalState:
    episode_seed: int
    t: int
    role: Role
    category: Optional[StateCategory]

    def to_json(self) -> dict:
        return {
            "episode_seed": self.episode_seed,
            "t": self.t,
            "role": ROLE_WIRE[self.role],
            "category": CATEGORY_WIRE[self.category],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EvalState":
        return cls(
            episode_seed=payload["episode_seed"],
            t=payload["t"],
            role=ROLE_FROM_WIRE[payload["role"]],
            category=CATEGORY_FROM_WIRE[payload["category"]],
        )


@dataclass
class EvalSample:
    states: list[EvalState]
    shortfall: dict[Role, int]
    episodes_used: int

    @property
    def complete(self) -> bool:
        return not any(self.shortfall.values())


def sample_eval_states(
    trees: dict[Role, DecisionTree],
    behavior: str,
    category: Optional[StateCategory],
    n_per_role: int = 10,
    seed: int = 0,
    env: Optional[EnvConfig] = None,
    max_episodes: int = 500,
    chunk: int = 50,
    pool_factor: int = 5,
) -> EvalSample:
    """Mine gated states of one category from fresh expert rollouts.

    Episodes are rolled in chunks until each role's qualifying pool holds
    pool_factor * n_per_role states (or the episode budget runs out), then
    n_per_role states per role are drawn uniformly without replacement.
    Gated means the role's tree reproduces the expert action. For the fixed
    behavior, goal categories are undefined: pass category=None, which
    samples gated states without a category filter.
    """
    if behavior == "fixed" and category is not None:
        # Undefined by construction; report a full shortfall, not an error.
        return EvalSample(
            states=[],
            shortfall={role: n_per_role for role in trees},
            episodes_used=0,
        )
    env = env if env is not None else EnvConfig()
    policy = get_policy(behavior)
    seeds = derive_seeds(seed, f"eval:{behavior}", max_episodes)

    pools: dict[Role, list[EvalState]] = {role: [] for role in trees}
    target_pool = pool_factor * n_per_role
    used = 0
    while used < max_episodes and any(len(p) < target_pool for p in pools.values()):
        for episode_seed in seeds[used : used + chunk]:
            traj = rollout(policy, policy, dc_replace(env, seed=episode_seed))
            for t in range(len(traj.steps)):
                features = encode_features(traj.obs_at(t))
                for role, tree in trees.items():
                    if tree_predict(tree, features) != traj.action_of(t, role):
                        continue
                    found = categorize_state(traj, t, role) if category is not None else None
                    if category is not None and found != category:
                        continue
                    pools[role].append(
                        EvalState(
                            episode_seed=episode_seed,
                            t=t,
                            role=role,
                            category=found,
                        )
                    )
        used = min(used + chunk, max_episodes)

    rng = np.random.default_rng(
        np.random.SeedSequence([seed] + list(f"pick:{behavior}".encode("utf-8")))
    )
    states: list[EvalState] = []
    shortfall: dict[Role, int] = {}
    for role in sorted(trees, key=int):
        pool = pools[role]
        take = min(n_per_role, len(pool))
        shortfall[role] = n_per_role - take
        picks = sorted(int(i) for i in rng.choice(len(pool), size=take, replace=False))
        states.extend(pool[i] for i in picks)
    return EvalSample(states=states, shortfall=shortfall, episodes_used=used)


@dataclass
class AnnotationLabels:
    """Human judgments for one explanation; None means not annotated and is
    excluded from denominators."""

    record_id: str
    annotator_id: str
    strategy: Optional[bool] = None
    category: Optional[bool] = None
    goal: Optional[bool] = None
    action: Optional[bool] = None
    intent: Optional[bool] = None
    hallucination_in_explanation: Optional[bool] = None
    hallucination_in_prediction: Optional[bool] = None

    def metric(self, name: str) -> Optional[bool]:
        if name not in METRICS:
            raise KeyError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "annotator_id": self.annotator_id,
            "strategy": self.strategy,
            "category": self.category,
            "goal": self.goal,
            "action": self.action,
            "intent": self.intent,
            "hallucination_in_explanation": self.hallucination_in_explanation,
            "hallucination_in_prediction": self.hallucination_in_prediction,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "AnnotationLabels":
        return cls(**payload)


def write_labels(labels: list[AnnotationLabels], fp: IO[str]) -> None:
    for label in labels:
        fp.write(json.dumps(label.to_json()) + "\n")


def read_labels(fp: IO[str]) -> list[AnnotationLabels]:
    return [AnnotationLabels.from_json(json.loads(line)) for line in fp if line.strip()]


@dataclass(frozen=True)
class EvalCell:
    behavior: str
    br_kind: str
    category: Optional[StateCategory]
    metric: str
    numerator: int
    denominator: int

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator

    def to_json(self) -> dict:
        return {
            "behavior": self.behavior,
            "br_kind": self.br_kind,
            "category": CATEGORY_WIRE[self.category],
            "metric": self.metric,
            "numerator": self.numerator,
            "denominator": self.denominator,
        }


def _join(
    records: list[ExplanationRecord], labels: list[AnnotationLabels]
) -> list[tuple[ExplanationRecord, AnnotationLabels]]:
    by_id = {label.record_id: label for label in labels}  # last write wins
    return [(r, by_id[r.id]) for r in records if r.id in by_id]


def score_cells(
    records: list[ExplanationRecord], labels: list[AnnotationLabels]
) -> list[EvalCell]:
    """Accuracy per (behavior, br_kind, category, metric). Cells with no
    labeled records are absent, never reported as zero."""
    counts: dict[tuple, list[int]] = {}
    for record, label in _join(records, labels):
        metrics = FIXED_METRICS if record.behavior == "fixed" else METRICS
        for metric in metrics:
            value = label.metric(metric)
            if value is None:
                continue
            key = (record.behavior, record.br_kind, record.state_category, metric)
            pair = counts.setdefault(key, [0, 0])
            pair[0] += int(value)
            pair[1] += 1
    return [
        EvalCell(behavior=b, br_kind=k, category=c, metric=m, numerator=num, denominator=den)
        for (b, k, c, m), (num, den) in sorted(
            counts.items(),
            key=lambda item: (
                item[0][0],
                item[0][1],
                -1 if item[0][2] is None else int(item[0][2]),
                METRICS.index(item[0][3]),
            ),
        )
    ]


@dataclass(frozen=True)
class HallucinationCell:
    behavior: str
    br_kind: str
    explanation_flagged: int
    explanation_total: int
    prediction_flagged: int
    prediction_total: int

    def to_json(self) -> dict:
        return {
            "behavior": self.behavior,
            "br_kind": self.br_kind,
            "explanation_flagged": self.explanation_flagged,
            "explanation_total": self.explanation_total,
            "prediction_flagged": self.prediction_flagged,
            "prediction_total": self.prediction_total,
        }


def hallucination_rates(
    records: list[ExplanationRecord], labels: list[AnnotationLabels]
) -> list[HallucinationCell]:
    acc: dict[tuple[str, str], list[int]] = {}
    for record, label in _join(records, labels):
        key = (record.behavior, record.br_kind)
        row = acc.setdefault(key, [0, 0, 0, 0])
        if label.hallucination_in_explanation is not None:
            row[0] += int(label.hallucination_in_explanation)
            row[1] += 1
        if label.hallucination_in_prediction is not None:
            row[2] += int(label.hallucination_in_prediction)
            row[3] += 1
    return [
        HallucinationCell(
            behavior=b,
            br_kind=k,
            explanation_flagged=e_num,
            explanation_total=e_den,
            prediction_flagged=p_num,
            prediction_total=p_den,
        )
        for (b, k), (e_num, e_den, p_num, p_den) in sorted(acc.items())
    ]


def pearson(x: list[float], y: list[float]) -> tuple[float, float]:
    """Sample Pearson r with a two-sided p from the t distribution
    (t = r * sqrt((n-2) / (1-r^2)), n-2 degrees of freedom)."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least 3 points")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for constant input")
    r = float((dx * dy).sum() / (sx * sy))
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * stats.t.sf(abs(t), df=n - 2))
    return r, p


def _fmt_cell(numerator: int, denominator: int) -> str:
    return f"{100.0 * numerator / denominator:5.1f} ({numerator}/{denominator})"


def _category_text(category: Optional[StateCategory]) -> str:
    return "-" if category is None else CATEGORY_WIRE[category]


def render_accuracy_table(cells: list[EvalCell]) -> str:
    """Aligned text table: one row per (behavior, category, br_kind), one
    column per metric, cells as 'percent (num/den)'."""
    rows: dict[tuple[str, Optional[StateCategory], str], dict[str, str]] = {}
    for cell in cells:
        row = rows.setdefault((cell.behavior, cell.category, cell.br_kind), {})
        row[cell.metric] = _fmt_cell(cell.numerator, cell.denominator)
    header = ["behavior", "category", "br"] + list(METRICS)
    table = [header]
    for (behavior, category, br_kind), metrics in rows.items():
        table.append(
            [behavior, _category_text(category), br_kind]
            + [metrics.get(m, "-") for m in METRICS]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_hallucination_table(cells: list[HallucinationCell]) -> str:
    header = ["behavior", "br", "explanation", "prediction"]
    table = [header]
    for cell in cells:
        table.append(
            [
                cell.behavior,
                cell.br_kind,
                _fmt_cell(cell.explanation_flagged, cell.explanation_total)
                if cell.explanation_total
                else "-",
                _fmt_cell(cell.prediction_flagged, cell.prediction_total)
                if cell.prediction_total
                else "-",
            ]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
