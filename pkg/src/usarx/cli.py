"""Command-line driver over the artifact store.

Offline by default: explanation text comes from the deterministic mock
backend unless --live routes it to the endpoint configured through the
USARX_LLM_* environment variables.
"""

from __future__ import annotations

import json
from typing import Optional

import click

from .chat import (
    BackendError,
    CATEGORY_FROM_WIRE,
    CATEGORY_WIRE,
    GatingError,
    HttpBackend,
    LLMBackend,
    MockBackend,
    SessionStateError,
    follow_up,
    parse_prediction,
    request_action_prediction,
    request_explanation,
)
from .distill import dagger_distill
from .grid import ROLE_FROM_WIRE, ROLE_WIRE
from .harness import (
    hallucination_rates,
    render_accuracy_table,
    render_hallucination_table,
    sample_eval_states,
    score_cells,
)
from .pathrepr import BR_KINDS, BR_PATH, br_from_json, render_action, render_br
from .policies import POLICIES, get_policy, rollout
from .service import (
    ApiError,
    create_app,
    distill_config_from,
    env_config_from,
    prepare_record,
)
from .store import ArtifactNotFound, ArtifactStore

ROLE_CHOICES = sorted(ROLE_FROM_WIRE)
CATEGORY_CHOICES = [k for k in CATEGORY_FROM_WIRE if k is not None] + ["none"]


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


def _backend(live: bool) -> LLMBackend:
    if not live:
        return MockBackend()
    try:
        return HttpBackend()
    except ValueError as exc:
        raise _fail(f"live backend unavailable: {exc}")


def _load_config(path: Optional[str]):
    if path is None:
        return distill_config_from(None)
    with open(path, encoding="utf-8") as fp:
        return distill_config_from(json.load(fp))


@click.group()
@click.option(
    "--store",
    "store_root",
    default="artifacts",
    envvar="USARX_STORE",
    show_default=True,
    help="Artifact store root directory.",
)
@click.pass_context
def main(ctx: click.Context, store_root: str) -> None:
    """Rollouts, tree distillation, gated explanations, and evaluation."""
    ctx.obj = ArtifactStore(store_root)


@main.command("rollout")
@click.option("--behavior", required=True, type=click.Choice(sorted(POLICIES)))
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--episodes", default=1, type=int, show_default=True)
@click.pass_obj
def rollout_cmd(store: ArtifactStore, behavior: str, seed: int, episodes: int) -> None:
    """Roll episodes with one behavior driving both roles; print artifact ids."""
    if episodes < 1:
        raise _fail("--episodes must be >= 1")
    policy = get_policy(behavior)
    for i in range(episodes):
        env = env_config_from(None, seed=seed + i)
        traj = rollout(policy, policy, env)
        episode_id = store.put_episode(traj)
        click.echo(f"{episode_id}  behavior={behavior} seed={seed + i} steps={len(traj.steps)}")


@main.command("distill")
@click.option("--behavior", required=True, type=click.Choice(sorted(POLICIES)))
@click.option("--role", required=True, type=click.Choice(ROLE_CHOICES))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def distill_cmd(store: ArtifactStore, behavior: str, role: str, config_path: Optional[str]) -> None:
    """Distill one behavior/role into a decision tree and store it."""
    try:
        config = _load_config(config_path)
    except (ApiError, json.JSONDecodeError) as exc:
        raise _fail(str(exc))
    result = dagger_distill(behavior, role=ROLE_FROM_WIRE[role], config=config)
    tree_id = store.put_tree(result)
    for stats in result.history:
        marker = "*" if stats.iteration == result.best_iteration else " "
        click.echo(
            f"iter {stats.iteration}{marker} rows={stats.dataset_rows} "
            f"fidelity={stats.holdout_fidelity:.4f} depth={stats.tree_depth} "
            f"leaves={stats.tree_leaves}"
        )
    best = result.history[result.best_iteration - 1]
    click.echo(f"{tree_id}  behavior={behavior} role={role} fidelity={best.holdout_fidelity:.4f}")


@main.command("explain")
@click.option("--trajectory", "episode_id", required=True, help="Episode artifact id.")
@click.option("--t", required=True, type=int, help="Timestep to explain.")
@click.option("--role", required=True, type=click.Choice(ROLE_CHOICES))
@click.option("--br", "br_kind", default=BR_PATH, type=click.Choice(list(BR_KINDS)), show_default=True)
@click.option("--live", is_flag=True, help="Use the configured live endpoint.")
@click.pass_obj
def explain_cmd(
    store: ArtifactStore, episode_id: str, t: int, role: str, br_kind: str, live: bool
) -> None:
    """Generate (or fetch) a gated explanation for one state-action."""
    try:
        record = prepare_record(store, episode_id, t, ROLE_FROM_WIRE[role], br_kind)
    except (ApiError, ArtifactNotFound) as exc:
        raise _fail(str(exc))
    if store.has_explanation(record.id):
        record = store.get_explanation(record.id)
    else:
        try:
            request_explanation(record, _backend(live))
        except (BackendError, GatingError) as exc:
            raise _fail(str(exc))
        store.put_explanation(record)
    click.echo(f"record {record.id}  category={CATEGORY_WIRE[record.state_category] or 'none'}")
    br_text = render_br(br_from_json(record.br_payload))
    if br_text:
        click.echo(br_text)
    click.echo(render_action(record.role, record.observation.pos(record.role), record.action))
    click.echo("")
    click.echo(record.explanation_text)


@main.command("chat")
@click.option("--record", "record_id", required=True, help="Explanation record id.")
@click.option("--message", default=None, help="Single follow-up; omit for an interactive loop.")
@click.option("--live", is_flag=True)
@click.pass_obj
def chat_cmd(store: ArtifactStore, record_id: str, message: Optional[str], live: bool) -> None:
    """Follow-up chat on an explanation record."""
    try:
        record = store.get_explanation(record_id)
    except ArtifactNotFound as exc:
        raise _fail(str(exc))
    backend = _backend(live)

    def turn(text: str) -> None:
        try:
            reply = follow_up(record, text, backend)
        except (BackendError, SessionStateError) as exc:
            raise _fail(str(exc))
        store.put_explanation(record)
        click.echo(reply)

    if message is not None:
        turn(message)
        return
    while True:
        try:
            text = click.prompt("you", prompt_suffix="> ")
        except click.Abort:
            return
        if not text.strip():
            return
        turn(text)


@main.command("eval")
@click.option("--behavior", required=True, type=click.Choice(sorted(POLICIES)))
@click.option("--category", default="none", type=click.Choice(CATEGORY_CHOICES), show_default=True)
@click.option("--n", "n_per_role", default=10, type=int, show_default=True)
@click.option("--br", "br_kind", default=BR_PATH, type=click.Choice(list(BR_KINDS)), show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--live", is_flag=True)
@click.pass_obj
def eval_cmd(
    store: ArtifactStore,
    behavior: str,
    category: str,
    n_per_role: int,
    br_kind: str,
    seed: int,
    live: bool,
) -> None:
    """Mine gated states, generate explanations and action predictions for
    them, and store the records for annotation."""
    trees = {}
    for role_name in ROLE_CHOICES:
        role = ROLE_FROM_WIRE[role_name]
        found = store.find_tree(behavior, role)
        if found is None:
            raise _fail(f"no distilled tree for behavior {behavior!r} role {role_name!r}")
        trees[role] = found[1]
    target = None if category == "none" else CATEGORY_FROM_WIRE[category]
    sample = sample_eval_states(trees, behavior, target, n_per_role=n_per_role, seed=seed)
    for role, missing in sorted(sample.shortfall.items(), key=lambda kv: int(kv[0])):
        if missing:
            click.echo(
                f"shortfall: {missing} of {n_per_role} {ROLE_WIRE[role]} states missing "
                f"after {sample.episodes_used} episodes",
                err=True,
            )

    backend = _backend(live)
    policy = get_policy(behavior)
    parseable = 0
    for state in sample.states:
        env = env_config_from(None, seed=state.episode_seed)
        episode_id = store.put_episode(rollout(policy, policy, env))
        try:
            record = prepare_record(store, episode_id, state.t, state.role, br_kind)
        except ApiError as exc:
            raise _fail(str(exc))
        if store.has_explanation(record.id):
            record = store.get_explanation(record.id)
        if record.explanation_text is None:
            try:
                request_explanation(record, backend)
            except BackendError as exc:
                raise _fail(str(exc))
        if record.prediction_text is None:
            try:
                request_action_prediction(record, backend)
            except BackendError as exc:
                raise _fail(str(exc))
        store.put_explanation(record)
        parsed = parse_prediction(record.prediction_text)
        parseable += parsed is not None
        click.echo(
            f"{record.id}  role={ROLE_WIRE[record.role]} t={state.t} "
            f"category={CATEGORY_WIRE[record.state_category] or 'none'} "
            f"prediction_parseable={parsed is not None}"
        )
    click.echo(
        f"records={len(sample.states)} parseable_predictions={parseable} "
        f"episodes_used={sample.episodes_used}"
    )


@main.command("report")
@click.pass_obj
def report_cmd(store: ArtifactStore) -> None:
    """Print stored-tree fidelity plus accuracy and hallucination tables."""
    rows = store.list_trees()
    click.echo("Distilled trees")
    if rows:
        for row in rows:
            click.echo(
                f"  {row['id']}  behavior={row['behavior']} role={row['role']} "
                f"fidelity={row['holdout_fidelity']:.4f} (iteration {row['best_iteration']})"
            )
    else:
        click.echo("  (none)")
    records = store.all_explanations()
    labels = store.all_labels()
    click.echo("")
    click.echo("Explanation accuracy")
    cells = score_cells(records, labels)
    click.echo(render_accuracy_table(cells) if cells else "  (no labeled records)")
    click.echo("")
    click.echo("Hallucination rates")
    hcells = hallucination_rates(records, labels)
    click.echo(render_hallucination_table(hcells) if hcells else "  (no labeled records)")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
@click.pass_obj
def serve_cmd(store: ArtifactStore, host: str, port: int) -> None:
    """Run the HTTP service; live requests need USARX_LLM_* configured."""
    import uvicorn

    try:
        live_backend: Optional[LLMBackend] = HttpBackend()
    except ValueError:
        live_backend = None
    app = create_app(store, live_backend=live_backend)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
