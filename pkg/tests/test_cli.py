import json

import pytest
from click.testing import CliRunner

from usarx.cli import main
from usarx.grid import Role
from usarx.store import ArtifactStore

from conftest import SMALL_CONFIG
from test_store_service import no_op_result


@pytest.fixture()
def store_root(tmp_path):
    return str(tmp_path / "store")


@pytest.fixture()
def store(store_root):
    return ArtifactStore(store_root)


@pytest.fixture()
def run(store_root):
    runner = CliRunner()

    def invoke(*args, expect_exit=0):
        result = runner.invoke(main, ["--store", store_root, *args])
        if result.exception is not None and result.exit_code not in (expect_exit, 1):
            raise result.exception
        assert result.exit_code == expect_exit, result.output
        return result.output

    return invoke


def first_episode_id(run, behavior="fixed", seed=0):
    out = run("rollout", "--behavior", behavior, "--seed", str(seed))
    return out.split()[0]


def seed_trees(store, trees, roles=(Role.MEDIC, Role.ENGINEER)):
    for role in roles:
        store.put_tree(trees[role])


class TestRollout:
    def test_prints_artifact_line(self, run, store):
        out = run("rollout", "--behavior", "exploit", "--seed", "3")
        (line,) = out.splitlines()
        episode_id, rest = line.split(maxsplit=1)
        assert rest.startswith("behavior=exploit seed=3 steps=")
        assert store.list_episodes() == [episode_id]

    def test_multiple_episodes(self, run, store):
        out = run("rollout", "--behavior", "fixed", "--episodes", "3")
        assert len(out.splitlines()) == 3
        assert len(store.list_episodes()) == 3

    def test_rejects_zero_episodes(self, run):
        out = run("rollout", "--behavior", "fixed", "--episodes", "0", expect_exit=1)
        assert "--episodes" in out

    def test_store_from_environment(self, tmp_path):
        root = tmp_path / "env-store"
        runner = CliRunner()
        result = runner.invoke(main, ["rollout", "--behavior", "fixed"],
                               env={"USARX_STORE": str(root)})
        assert result.exit_code == 0, result.output
        assert len(ArtifactStore(root).list_episodes()) == 1


class TestDistill:
    def test_stores_tree_and_reports_history(self, run, store, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(SMALL_CONFIG.to_json()))
        out = run("distill", "--behavior", "fixed", "--role", "medic",
                  "--config", str(config_path))
        lines = out.splitlines()
        assert lines[0].startswith("iter 1")
        assert "*" in lines[0]  # single iteration is the best one
        assert lines[-1].endswith("behavior=fixed role=medic fidelity=1.0000")
        (row,) = store.list_trees()
        assert row["id"] == lines[-1].split()[0]

    def test_rejects_bad_config(self, run, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"iterations": 0}))
        out = run("distill", "--behavior", "fixed", "--role", "medic",
                  "--config", str(config_path), expect_exit=1)
        assert "iterations" in out


class TestExplain:
    def test_prints_record_and_explanation(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees, roles=(Role.MEDIC,))
        episode_id = first_episode_id(run)
        out = run("explain", "--trajectory", episode_id, "--t", "0",
                  "--role", "medic")
        lines = out.splitlines()
        assert lines[0].startswith("record ")
        assert lines[0].endswith("category=none")  # fixed states are uncategorized
        assert "medic" in out
        record_id = lines[0].split()[1]
        assert store.has_explanation(record_id)

    def test_replay_reuses_stored_record(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees, roles=(Role.MEDIC,))
        episode_id = first_episode_id(run)
        first = run("explain", "--trajectory", episode_id, "--t", "0", "--role", "medic")
        second = run("explain", "--trajectory", episode_id, "--t", "0", "--role", "medic")
        assert first == second
        assert len(store.list_explanations()) == 1

    def test_gated_state_fails(self, run, store):
        store.put_tree(no_op_result("explore", Role.MEDIC))
        episode_id = first_episode_id(run, behavior="explore")
        out = run("explain", "--trajectory", episode_id, "--t", "0",
                  "--role", "medic", expect_exit=1)
        assert "refusing to explain" in out

    def test_missing_episode_fails(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees, roles=(Role.MEDIC,))
        out = run("explain", "--trajectory", "feedfacedeadbeef", "--t", "0",
                  "--role", "medic", expect_exit=1)
        assert "episode" in out

    def test_missing_tree_fails(self, run):
        episode_id = first_episode_id(run)
        out = run("explain", "--trajectory", episode_id, "--t", "0",
                  "--role", "medic", expect_exit=1)
        assert "no distilled tree" in out


class TestChat:
    def test_single_message_turn(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees, roles=(Role.MEDIC,))
        episode_id = first_episode_id(run)
        record_line = run("explain", "--trajectory", episode_id, "--t", "0",
                          "--role", "medic").splitlines()[0]
        record_id = record_line.split()[1]

        out = run("chat", "--record", record_id, "--message", "why east?")
        assert out.strip()
        # the follow-up question and answer land in the stored session
        session = store.get_explanation(record_id).session
        assert session.messages[-2].text == "why east?"
        assert session.messages[-1].text == out.strip()

    def test_unknown_record_fails(self, run):
        out = run("chat", "--record", "nope", "--message", "hi", expect_exit=1)
        assert "nope" in out


class TestEval:
    def test_fixed_behavior_end_to_end(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees)
        out = run("eval", "--behavior", "fixed", "--n", "2")
        lines = out.splitlines()
        summary = lines[-1]
        assert summary.startswith("records=4 parseable_predictions=4")
        for line in lines[:-1]:
            assert "category=none" in line
            assert "prediction_parseable=True" in line
        records = store.all_explanations()
        assert len(records) == 4
        assert all(r.prediction_text for r in records)

    def test_missing_tree_fails(self, run):
        out = run("eval", "--behavior", "explore", "--n", "1", expect_exit=1)
        assert "no distilled tree" in out


class TestReport:
    def test_empty_store_sections(self, run):
        out = run("report")
        assert "Distilled trees" in out
        assert "(none)" in out
        assert out.count("(no labeled records)") == 2

    def test_lists_trees_and_tables(self, run, store, small_fixed_trees):
        seed_trees(store, small_fixed_trees)
        run("eval", "--behavior", "fixed", "--n", "1")
        record = store.all_explanations()[0]
        from usarx.harness import AnnotationLabels
        store.put_labels(AnnotationLabels(
            record_id=record.id, annotator_id="a1",
            strategy=True, action=True, intent=False,
            hallucination_in_explanation=False))

        out = run("report")
        assert "behavior=fixed role=medic fidelity=1.0000" in out
        assert "Explanation accuracy" in out
        assert "100.0 (1/1)" in out  # strategy and action cells
        assert "  0.0 (1/1)" not in out
        assert "Hallucination rates" in out
