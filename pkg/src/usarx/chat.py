"""Explanation chat sessions over a pluggable completion backend.

A session is the full message history for one explained state: one system
message (environment + representation descriptions), then strictly
alternating user/assistant turns. The whole history is resent on every
completion call, so any chat-completion style backend works; the mock
backend keeps everything deterministic and offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import IntEnum
from typing import Optional, Protocol

import httpx

from .grid import (
    ACTION_FROM_WIRE,
    ACTION_WIRE,
    ROLE_FROM_WIRE,
    ROLE_WIRE,
    Action,
    Observation,
    Role,
    RoomCoord,
)
from .pathrepr import BehaviorRepresentation, br_from_json, parse_action
from .prompting import PromptBundle, build_prompt, prediction_request_text

SENDER_SYSTEM = "system"
SENDER_USER = "user"
SENDER_ASSISTANT = "assistant"


class GatingError(RuntimeError):
    """Explanation requested for a state where the tree disagrees with the
    behavior being explained."""


class SessionStateError(RuntimeError):
    """Operation does not fit the session's current position."""


class BackendError(RuntimeError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class StateCategory(IntEnum):
    LONG_TERM = 0
    SHORT_TERM = 1
    AMBIGUOUS = 2


CATEGORY_WIRE = {
    StateCategory.LONG_TERM: "LongTerm",
    StateCategory.SHORT_TERM: "ShortTerm",
    StateCategory.AMBIGUOUS: "Ambiguous",
    # Goal categories are undefined for the pattern-following behavior.
    None: None,
}
CATEGORY_FROM_WIRE = {v: k for k, v in CATEGORY_WIRE.items()}


@dataclass
class Message:
    sender: str
    text: str

    def to_json(self) -> dict:
        return {"sender": self.sender, "text": self.text}

    @classmethod
    def from_json(cls, payload: dict) -> "Message":
        return cls(sender=payload["sender"], text=payload["text"])


@dataclass
class ChatSession:
    messages: list[Message]
    created_at: str
    state_ref: str

    def append(self, sender: str, text: str) -> None:
        # First message must be system; user/assistant alternate after it.
        if not self.messages:
            if sender != SENDER_SYSTEM:
                raise SessionStateError("session must start with a system message")
        else:
            expected = SENDER_USER if self.messages[-1].sender in (
                SENDER_SYSTEM,
                SENDER_ASSISTANT,
            ) else SENDER_ASSISTANT
            if sender != expected:
                raise SessionStateError(f"expected a {expected} message, got {sender}")
        self.messages.append(Message(sender, text))

    def to_json(self) -> dict:
        return {
            "created_at": self.created_at,
            "state_ref": self.state_ref,
            "messages": [m.to_json() for m in self.messages],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ChatSession":
        return cls(
            messages=[Message.from_json(m) for m in payload["messages"]],
            created_at=payload["created_at"],
            state_ref=payload["state_ref"],
        )


class LLMBackend(Protocol):
    metadata: dict

    def complete(self, messages: list[Message]) -> str: ...


@dataclass
class ExplanationRecord:
    id: str
    behavior: str
    role: Role
    br_kind: str
    state_category: Optional[StateCategory]
    observation: Observation
    action: Action
    br_payload: dict
    prompt_text: str
    session: ChatSession
    gated: bool
    explanation_text: Optional[str] = None
    prediction_text: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "behavior": self.behavior,
            "role": ROLE_WIRE[self.role],
            "br_kind": self.br_kind,
            "state_category": CATEGORY_WIRE[self.state_category],
            "observation": self.observation.to_json(),
            "action": ACTION_WIRE[self.action],
            "br_payload": self.br_payload,
            "prompt_text": self.prompt_text,
            "session": self.session.to_json(),
            "gated": self.gated,
            "explanation_text": self.explanation_text,
            "prediction_text": self.prediction_text,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExplanationRecord":
        return cls(
            id=payload["id"],
            behavior=payload["behavior"],
            role=ROLE_FROM_WIRE[payload["role"]],
            br_kind=payload["br_kind"],
            state_category=CATEGORY_FROM_WIRE[payload["state_category"]],
            observation=Observation.from_json(payload["observation"]),
            action=ACTION_FROM_WIRE[payload["action"]],
            br_payload=payload["br_payload"],
            prompt_text=payload["prompt_text"],
            session=ChatSession.from_json(payload["session"]),
            gated=payload["gated"],
            explanation_text=payload.get("explanation_text"),
            prediction_text=payload.get("prediction_text"),
        )

    def behavior_representation(self) -> BehaviorRepresentation:
        return br_from_json(self.br_payload)


def record_id(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def new_record(
    behavior: str,
    role: Role,
    br: BehaviorRepresentation,
    category: Optional[StateCategory],
    obs: Observation,
    action: Action,
    gated: bool,
) -> ExplanationRecord:
    """Build a record with its prompt rendered and the session seeded with
    the system message. The explanation itself is requested separately."""
    bundle = build_prompt(br, role, obs.pos(role), action)
    rid = record_id(
        {
            "behavior": behavior,
            "role": ROLE_WIRE[role],
            "br": br.to_json(),
            "category": CATEGORY_WIRE[category],
            "observation": obs.to_json(),
            "action": ACTION_WIRE[action],
        }
    )
    session = ChatSession(
        messages=[],
        created_at=datetime.now(timezone.utc).isoformat(),
        state_ref=rid,
    )
    session.append(SENDER_SYSTEM, bundle.system_text())
    return ExplanationRecord(
        id=rid,
        behavior=behavior,
        role=role,
        br_kind=br.kind,
        state_category=category,
        observation=obs,
        action=action,
        br_payload=br.to_json(),
        prompt_text=f"{bundle.system_text()}\n\n{bundle.user_text()}",
        session=session,
        gated=gated,
    )


def _exchange(session: ChatSession, user_text: str, backend: LLMBackend) -> str:
    session.append(SENDER_USER, user_text)
    try:
        reply = backend.complete(session.messages)
    except BackendError:
        session.messages.pop()  # keep alternation intact for a retry
        raise
    session.append(SENDER_ASSISTANT, reply)
    return reply


def request_explanation(record: ExplanationRecord, backend: LLMBackend) -> ExplanationRecord:
    if not record.gated:
        raise GatingError(
            "tree action disagrees with the behavior at this state; refusing to explain"
        )
    if record.explanation_text is not None:
        raise SessionStateError("explanation already requested for this record")
    bundle = build_prompt(
        record.behavior_representation(),
        record.role,
        record.observation.pos(record.role),
        record.action,
    )
    record.explanation_text = _exchange(record.session, bundle.user_text(), backend)
    return record


def request_action_prediction(record: ExplanationRecord, backend: LLMBackend) -> ExplanationRecord:
    if record.explanation_text is None:
        raise SessionStateError("request an explanation before a prediction")
    reply = _exchange(record.session, prediction_request_text(record.role), backend)
    record.prediction_text = reply
    return record


def follow_up(record: ExplanationRecord, user_text: str, backend: LLMBackend) -> str:
    if not record.session.messages:
        raise SessionStateError("session not initialized")
    return _exchange(record.session, user_text, backend)


def parse_prediction(text: str) -> Optional[tuple[Role, Action, RoomCoord]]:
    """Extract (role, action, room) from an 'ANSWER: ...' reply; None when
    the reply does not follow the format."""
    for line in text.splitlines():
        line = line.strip()
        if not line.startswith("ANSWER:"):
            continue
        sentence = line[len("ANSWER:"):].strip().strip('"`')
        try:
            return parse_action(sentence)
        except ValueError:
            return None
    return None


def mock_key(user_text: str) -> str:
    return hashlib.sha256(user_text.encode("utf-8")).hexdigest()[:12]


class MockBackend:
    """Deterministic offline backend.

    Scripted replies are keyed by mock_key(last user message); without a
    script entry, the default reply quotes the most recent action line found
    in the history, so prediction replies always parse.
    """

    def __init__(self, script: Optional[dict[str, str]] = None):
        self.script = dict(script or {})
        self.metadata = {"model": "mock", "temperature": 0.0}

    def _last_action_line(self, messages: list[Message]) -> str:
        found = ""
        for message in messages:
            for line in message.text.splitlines():
                line = line.strip()
                try:
                    parse_action(line)
                except ValueError:
                    continue
                found = line
        return found

    def complete(self, messages: list[Message]) -> str:
        last_user = next(
            (m for m in reversed(messages) if m.sender == SENDER_USER), None
        )
        if last_user is None:
            raise BackendError("no user message to answer", attempts=1)
        key = mock_key(last_user.text)
        if key in self.script:
            return self.script[key]
        action_line = self._last_action_line(messages)
        if last_user.text.startswith("Using the explanation above, predict"):
            return (
                f"ANSWER: {action_line}\n"
                "The features indicate this step continues the agent's current objective."
            )
        return (
            "The agent is attending to the features listed above, and they support "
            f'its current objective; that is why the action "{action_line}" was chosen.'
        )


class HttpBackend:
    """Chat-completion endpoint speaking the common JSON shape
    (model/messages in, choices[0].message.content out)."""

    def __init__(
        self,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        temperature: float = 0.0,
        timeout: float = 60.0,
        retry_delay: float = 1.0,
    ):
        self.endpoint = endpoint or os.environ.get("USARX_LLM_ENDPOINT", "")
        self.api_key = api_key or os.environ.get("USARX_LLM_API_KEY", "")
        self.model = model or os.environ.get("USARX_LLM_MODEL", "")
        if not self.endpoint:
            raise ValueError("no endpoint configured (USARX_LLM_ENDPOINT)")
        if not self.model:
            raise ValueError("no model configured (USARX_LLM_MODEL)")
        self.temperature = temperature
        self.timeout = timeout
        self.retry_delay = retry_delay
        self.metadata = {"model": self.model, "temperature": temperature}

    def complete(self, messages: list[Message]) -> str:
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": m.sender, "content": m.text} for m in messages],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Optional[Exception] = None
        for attempt in (1, 2):  # one retry with backoff
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt == 1:
                    time.sleep(self.retry_delay * attempt)
        raise BackendError(f"completion failed: {last_error}", attempts=2)
