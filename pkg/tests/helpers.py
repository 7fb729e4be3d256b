"""Hand-built world fixtures shared across test modules."""

import numpy as np

from usarx.grid import N_ROOMS, RoomCoord, Victim, WorldState


def world_with(rubble=(), open_victims=(), hidden_victims=(), explored=None,
               medic=RoomCoord(0, 0), engineer=RoomCoord(0, 0)):
    """World with the named contents; everything explored unless an explicit
    room list is given (agent rooms are always explored)."""
    r = np.zeros(N_ROOMS, dtype=np.uint8)
    v = np.zeros(N_ROOMS, dtype=np.uint8)
    e = np.zeros(N_ROOMS, dtype=np.uint8)
    for room in rubble:
        r[room.index] = 1
    for room in open_victims:
        v[room.index] = Victim.OPEN
    for room in hidden_victims:
        r[room.index] = 1
        v[room.index] = Victim.HIDDEN_UNDER_RUBBLE
    if explored is None:
        e[:] = 1
    else:
        for room in explored:
            e[room.index] = 1
    e[medic.index] = 1
    e[engineer.index] = 1
    return WorldState(rubble=r, victim=v, explored=e, medic_pos=medic,
                      engineer_pos=engineer, time=0, rng_seed=0)


def stub_record(rid, behavior, br_kind, category, role):
    """Minimal well-formed explanation record for table arithmetic; only
    id/behavior/br_kind/state_category enter the scoring."""
    from usarx.chat import ChatSession, ExplanationRecord, SENDER_SYSTEM
    from usarx.grid import Action, observe

    session = ChatSession(messages=[], created_at="2026-01-01T00:00:00+00:00",
                          state_ref=rid)
    session.append(SENDER_SYSTEM, "system text")
    return ExplanationRecord(
        id=rid,
        behavior=behavior,
        role=role,
        br_kind=br_kind,
        state_category=category,
        observation=observe(world_with()),
        action=Action.NO_OP,
        br_payload={"kind": "none"},
        prompt_text="",
        session=session,
        gated=True,
    )


def table_fixture():
    """Deterministic labeled-record set: every (behavior, category, br_kind)
    cell holds 20 records, 10 per role, each with one full label."""
    from usarx.chat import StateCategory
    from usarx.grid import Role
    from usarx.harness import AnnotationLabels

    categories = (StateCategory.LONG_TERM, StateCategory.SHORT_TERM,
                  StateCategory.AMBIGUOUS)
    cells = [("explore", c) for c in categories] + \
            [("exploit", c) for c in categories] + [("fixed", None)]

    records, labels = [], []
    for behavior, category in cells:
        for br_kind in ("path", "states", "none"):
            tag = f"{behavior}|{br_kind}|{category}"
            rng = np.random.default_rng(
                np.random.SeedSequence([42] + list(tag.encode("utf-8"))))
            for i in range(20):
                role = Role.MEDIC if i < 10 else Role.ENGINEER
                cat_tag = "na" if category is None else int(category)
                rid = f"{behavior}-{br_kind}-{cat_tag}-{i:02d}"
                records.append(stub_record(rid, behavior, br_kind, category, role))
                goal_metrics = behavior != "fixed"
                labels.append(AnnotationLabels(
                    record_id=rid,
                    annotator_id=f"annotator-{i % 2}",
                    strategy=bool(rng.random() < 0.85),
                    category=bool(rng.random() < 0.8) if goal_metrics else None,
                    goal=bool(rng.random() < 0.75) if goal_metrics else None,
                    action=bool(rng.random() < 0.9),
                    intent=bool(rng.random() < 0.7),
                    hallucination_in_explanation=bool(rng.random() < 0.15),
                    hallucination_in_prediction=bool(rng.random() < 0.25),
                ))
    return records, labels
