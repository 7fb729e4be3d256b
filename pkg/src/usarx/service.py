"""HTTP API over the artifact store: rollouts, distillation jobs, gated
explanations with follow-up chat, annotation labels, and report tables.

Single process. Distillation runs on a shared worker pool and is polled by
job id; chat turns are serialized per record with a non-blocking lock, so
a second concurrent turn gets Conflict instead of queueing.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .chat import (
    BackendError,
    ExplanationRecord,
    LLMBackend,
    MockBackend,
    StateCategory,
    follow_up,
    new_record,
    request_explanation,
)
from .distill import DistillConfig, dagger_distill
from .grid import (
    ACTION_WIRE,
    ROLE_FROM_WIRE,
    ROLE_WIRE,
    ConfigError,
    EnvConfig,
    Role,
    encode_features,
)
from .harness import (
    AnnotationLabels,
    categorize_state,
    hallucination_rates,
    render_accuracy_table,
    render_hallucination_table,
    score_cells,
)
from .pathrepr import (
    BR_KINDS,
    BR_NONE,
    BR_PATH,
    BR_STATES,
    NoBR,
    PathBR,
    extract_path,
    sample_states_br,
)
from .policies import POLICIES, Trajectory, get_policy, rollout
from .store import ArtifactNotFound, ArtifactStore, content_id
from .tree import tree_predict

ERROR_STATUS = {
    "NotFound": 404,
    "Invalid": 400,
    "Gated": 403,
    "BackendUnavailable": 503,
    "Conflict": 409,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str):
        assert code in ERROR_STATUS
        super().__init__(message)
        self.code = code
        self.message = message

    def to_json(self) -> dict:
        return {"error": {"code": self.code, "message": self.message}}


def api_not_found(message: str) -> ApiError:
    return ApiError("NotFound", message)


def api_invalid(message: str) -> ApiError:
    return ApiError("Invalid", message)


def api_gated(message: str) -> ApiError:
    return ApiError("Gated", message)


def api_backend_unavailable(message: str) -> ApiError:
    return ApiError("BackendUnavailable", message)


def api_conflict(message: str) -> ApiError:
    return ApiError("Conflict", message)


# Worker pool shared across app instances; jobs themselves are per-app.
_EXECUTOR: Optional[ThreadPoolExecutor] = None
_EXECUTOR_LOCK = threading.Lock()


def _executor() -> ThreadPoolExecutor:
    global _EXECUTOR
    with _EXECUTOR_LOCK:
        if _EXECUTOR is None:
            _EXECUTOR = ThreadPoolExecutor(max_workers=2, thread_name_prefix="usarx-job")
        return _EXECUTOR


@dataclass
class DistillJob:
    job_id: str
    behavior: str
    role: Role
    future: Future

    def status_json(self) -> dict:
        body = {
            "job_id": self.job_id,
            "behavior": self.behavior,
            "role": ROLE_WIRE[self.role],
        }
        if not self.future.done():
            body["status"] = "pending"
        elif self.future.exception() is not None:
            body["status"] = "failed"
            body["error"] = str(self.future.exception())
        else:
            tree_id, fidelity = self.future.result()
            body["status"] = "done"
            body["tree_id"] = tree_id
            body["holdout_fidelity"] = fidelity
        return body


def _parse_role(value) -> Role:
    if value not in ROLE_FROM_WIRE:
        raise api_invalid(f"role must be one of {sorted(ROLE_FROM_WIRE)}, got {value!r}")
    return ROLE_FROM_WIRE[value]


def _parse_behavior(value) -> str:
    if value not in POLICIES:
        raise api_invalid(f"behavior must be one of {sorted(POLICIES)}, got {value!r}")
    return value


def env_config_from(payload: Optional[dict], seed: Optional[int] = None) -> EnvConfig:
    try:
        env = EnvConfig(**(payload or {}))
        if seed is not None:
            env = replace(env, seed=seed)
        env.validate()
    except (TypeError, ConfigError) as exc:
        raise api_invalid(f"bad env config: {exc}") from None
    return env


def distill_config_from(payload: Optional[dict]) -> DistillConfig:
    payload = dict(payload or {})
    env_payload = payload.pop("env", None)
    try:
        config = DistillConfig(env=env_config_from(env_payload), **payload)
        config.validate()
    except (TypeError, ConfigError) as exc:
        raise api_invalid(f"bad distill config: {exc}") from None
    return config


def _step_payload(episode_id: str, traj: Trajectory, t: int) -> dict:
    if not 0 <= t <= len(traj.steps):
        raise api_invalid(f"timestep {t} outside [0, {len(traj.steps)}]")
    if t == len(traj.steps):
        return {
            "episode": episode_id,
            "t": t,
            "final": True,
            "observation": traj.final_obs.to_json(),
        }
    step = traj.steps[t]
    return {
        "episode": episode_id,
        "t": t,
        "final": False,
        "observation": step.obs.to_json(),
        "engineer_action": ACTION_WIRE[step.engineer_action],
        "medic_action": ACTION_WIRE[step.medic_action],
        "engineer_goal": step.engineer_goal.to_json(),
        "medic_goal": step.medic_goal.to_json(),
    }


def prepare_record(
    store: ArtifactStore, episode_id: str, t: int, role: Role, br_kind: str
) -> ExplanationRecord:
    """Resolve an explanation request against stored artifacts.

    Finds the stored tree for the episode's behavior, applies the gate
    (tree action must equal the recorded action, otherwise Gated), builds
    the behavior representation and the prompt. No backend call happens
    here.
    """
    traj = store.get_episode(episode_id)
    if not 0 <= t < len(traj.steps):
        raise api_invalid(
            f"timestep {t} outside [0, {len(traj.steps) - 1}] for episode {episode_id}"
        )
    behavior = traj.engineer_policy if role == Role.ENGINEER else traj.medic_policy
    found = store.find_tree(behavior, role)
    if found is None:
        raise api_not_found(f"no distilled tree for behavior {behavior!r} role {ROLE_WIRE[role]!r}")
    _, tree = found

    obs = traj.obs_at(t)
    action = traj.action_of(t, role)
    features = encode_features(obs)
    if tree_predict(tree, features) != action:
        raise api_gated(
            "tree action disagrees with the recorded action at this state; refusing to explain"
        )

    if br_kind == BR_PATH:
        br = PathBR(path=extract_path(tree, features))
    elif br_kind == BR_STATES:
        br = sample_states_br(traj, role, k=10, seed=traj.config.seed)
    elif br_kind == BR_NONE:
        br = NoBR()
    else:
        raise api_invalid(f"br_kind must be one of {BR_KINDS}, got {br_kind!r}")

    category: Optional[StateCategory] = None
    if behavior != "fixed":
        category = categorize_state(traj, t, role)
    return new_record(
        behavior=behavior,
        role=role,
        br=br,
        category=category,
        obs=obs,
        action=action,
        gated=True,
    )


def create_app(
    store: ArtifactStore,
    backend: Optional[LLMBackend] = None,
    live_backend: Optional[LLMBackend] = None,
) -> FastAPI:
    """Build the service. backend answers offline (mock) requests;
    live_backend, when configured, answers requests carrying live=true."""
    offline = backend if backend is not None else MockBackend()
    app = FastAPI(title="usarx", docs_url=None, redoc_url=None)
    jobs: dict[str, DistillJob] = {}
    jobs_lock = threading.Lock()
    chat_locks: dict[str, threading.Lock] = {}
    chat_locks_guard = threading.Lock()

    def pick_backend(live: bool) -> LLMBackend:
        if not live:
            return offline
        if live_backend is None:
            raise api_backend_unavailable("no live backend configured")
        return live_backend

    def chat_lock(record_id: str) -> threading.Lock:
        with chat_locks_guard:
            return chat_locks.setdefault(record_id, threading.Lock())

    @app.exception_handler(ApiError)
    def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=ERROR_STATUS[exc.code], content=exc.to_json())

    @app.exception_handler(ArtifactNotFound)
    def handle_missing_artifact(request: Request, exc: ArtifactNotFound):
        error = api_not_found(str(exc))
        return JSONResponse(status_code=404, content=error.to_json())

    @app.exception_handler(RequestValidationError)
    def handle_validation(request: Request, exc: RequestValidationError):
        error = api_invalid(str(exc.errors()[0].get("msg", "invalid request")))
        return JSONResponse(status_code=400, content=error.to_json())

    @app.post("/episodes", status_code=201)
    def create_episode(payload: dict):
        behavior = _parse_behavior(payload.get("behavior"))
        seed = payload.get("seed", 0)
        if not isinstance(seed, int):
            raise api_invalid(f"seed must be an integer, got {seed!r}")
        env = env_config_from(payload.get("env"), seed=seed)
        policy = get_policy(behavior)
        traj = rollout(policy, policy, env)
        episode_id = store.put_episode(traj)
        return {
            "id": episode_id,
            "engineer_policy": traj.engineer_policy,
            "medic_policy": traj.medic_policy,
            "n_steps": len(traj.steps),
        }

    @app.get("/episodes/{episode_id}")
    def get_episode(episode_id: str):
        traj = store.get_episode(episode_id)
        return {
            "id": episode_id,
            "engineer_policy": traj.engineer_policy,
            "medic_policy": traj.medic_policy,
            "n_steps": len(traj.steps),
            "config": traj.config.to_json(),
        }

    @app.get("/episodes/{episode_id}/steps/{t}")
    def get_step(episode_id: str, t: int):
        traj = store.get_episode(episode_id)
        return _step_payload(episode_id, traj, t)

    @app.post("/trees", status_code=202)
    def create_tree(payload: dict):
        behavior = _parse_behavior(payload.get("behavior"))
        role = _parse_role(payload.get("role"))
        config = distill_config_from(payload.get("config"))
        job_id = content_id(
            json.dumps(
                {"behavior": behavior, "role": int(role), "config": config.to_json()},
                sort_keys=True,
            )
        )
        with jobs_lock:
            if job_id not in jobs:
                # fresh submission; identical re-POSTs poll the same job
                future = _executor().submit(_run_distill, store, behavior, role, config)
                jobs[job_id] = DistillJob(job_id=job_id, behavior=behavior, role=role, future=future)
            job = jobs[job_id]
        return job.status_json()

    @app.get("/trees/{tree_id}")
    def get_tree(tree_id: str):
        with jobs_lock:
            job = jobs.get(tree_id)
        if job is not None:
            return job.status_json()
        return store.get_tree_payload(tree_id)

    @app.post("/explanations", status_code=201)
    def create_explanation(payload: dict):
        episode_id = payload.get("episode")
        if not isinstance(episode_id, str):
            raise api_invalid("episode must be an artifact id string")
        t = payload.get("t")
        if not isinstance(t, int):
            raise api_invalid(f"t must be an integer, got {t!r}")
        role = _parse_role(payload.get("role"))
        br_kind = payload.get("br_kind")
        if br_kind not in BR_KINDS:
            raise api_invalid(f"br_kind must be one of {BR_KINDS}, got {br_kind!r}")
        live = bool(payload.get("live", False))

        record = prepare_record(store, episode_id, t, role, br_kind)
        if store.has_explanation(record.id):
            return JSONResponse(status_code=200, content=store.get_explanation(record.id).to_json())
        try:
            request_explanation(record, pick_backend(live))
        except BackendError as exc:
            raise api_backend_unavailable(str(exc)) from None
        store.put_explanation(record)
        return record.to_json()

    @app.get("/explanations/{record_id}")
    def get_explanation(record_id: str):
        return store.get_explanation(record_id).to_json()

    @app.post("/explanations/{record_id}/chat")
    def chat(record_id: str, payload: dict):
        message = payload.get("message")
        if not isinstance(message, str) or not message.strip():
            raise api_invalid("message must be a non-empty string")
        live = bool(payload.get("live", False))
        if not store.has_explanation(record_id):
            raise api_not_found(f"explanation {record_id!r} not found")
        lock = chat_lock(record_id)
        if not lock.acquire(blocking=False):
            raise api_conflict("a chat turn is already in flight for this explanation")
        try:
            record = store.get_explanation(record_id)
            try:
                reply = follow_up(record, message, pick_backend(live))
            except BackendError as exc:
                raise api_backend_unavailable(str(exc)) from None
            store.put_explanation(record)
            return {"reply": reply, "session": record.session.to_json()}
        finally:
            lock.release()

    @app.post("/explanations/{record_id}/labels", status_code=201)
    def put_labels(record_id: str, payload: dict):
        if not store.has_explanation(record_id):
            raise api_not_found(f"explanation {record_id!r} not found")
        annotator = payload.get("annotator_id")
        if not isinstance(annotator, str) or not annotator.strip():
            raise api_invalid("annotator_id must be a non-empty string")
        fields = {}
        for name in (
            "strategy",
            "category",
            "goal",
            "action",
            "intent",
            "hallucination_in_explanation",
            "hallucination_in_prediction",
        ):
            value = payload.get(name)
            if value is not None and not isinstance(value, bool):
                raise api_invalid(f"{name} must be true, false, or null")
            fields[name] = value
        labels = AnnotationLabels(record_id=record_id, annotator_id=annotator, **fields)
        labels_id = store.put_labels(labels)
        return {"labels_id": labels_id, "record_id": record_id}

    @app.get("/reports/accuracy")
    def report_accuracy():
        cells = score_cells(store.all_explanations(), store.all_labels())
        return {"cells": [c.to_json() for c in cells], "text": render_accuracy_table(cells)}

    @app.get("/reports/hallucination")
    def report_hallucination():
        cells = hallucination_rates(store.all_explanations(), store.all_labels())
        return {"cells": [c.to_json() for c in cells], "text": render_hallucination_table(cells)}

    return app


def _run_distill(store: ArtifactStore, behavior: str, role: Role, config: DistillConfig):
    result = dagger_distill(behavior, role, config)
    tree_id = store.put_tree(result)
    return tree_id, result.history[result.best_iteration - 1].holdout_fidelity
