import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usarx.grid import (
    Action,
    Attribute,
    EnvConfig,
    FeatureVector,
    N_FEATURES,
    Role,
    RoomCoord,
    encode_features,
    new_world,
    observe,
)
from usarx.pathrepr import (
    BR_KINDS,
    DecisionPath,
    NoBR,
    PathBR,
    StatesBR,
    br_from_json,
    extract_path,
    parse_action,
    parse_predicate,
    render_action,
    render_br,
    render_observation,
    render_path,
    render_predicate,
    sample_states_br,
)
from usarx.policies import get_policy, rollout
from usarx.tree import SchemaMismatchError, tree_predict

from helpers import world_with


class TestPredicates:
    @pytest.mark.parametrize("feature,branch,text", [
        (15, True, "room (3, 0) has been explored."),
        (15, False, "room (3, 0) has not been explored."),
        (51, True, "room (2, 2) contains rubble."),
        (51, False, "room (2, 2) doesn't contain rubble."),
        (2, True, "room (0, 0) contains a victim."),
        (2, False, "room (0, 0) doesn't contain a victim."),
        (93, True, "medic is in room (2, 4)."),
        (93, False, "medic is not in room (2, 4)."),
        (99, True, "engineer is in room (3, 4)."),
        (99, False, "engineer is not in room (3, 4)."),
    ])
    def test_rendering(self, feature, branch, text):
        assert render_predicate(feature, branch) == text

    def test_every_line_parses_back(self):
        for feature in range(N_FEATURES):
            for branch in (True, False):
                line = render_predicate(feature, branch)
                assert parse_predicate(line) == (feature, branch)

    def test_parse_rejects_non_predicates(self):
        with pytest.raises(ValueError, match="not a predicate"):
            parse_predicate("room (2, 2) contains rubble")  # missing period
        with pytest.raises(ValueError, match="not a predicate"):
            parse_predicate("medic moves east to room (1, 0).")

    def test_rooms_use_spaced_coordinates(self):
        assert "(2, 2)" in render_predicate(51, True)
        assert "(2,2)" not in render_predicate(51, True)


class TestActions:
    @pytest.mark.parametrize("role,room,action,text", [
        (Role.ENGINEER, RoomCoord(0, 2), Action.MOVE_EAST,
         "engineer moves east to room (1, 2)."),
        (Role.MEDIC, RoomCoord(2, 3), Action.MOVE_NORTH,
         "medic moves north to room (2, 2)."),
        (Role.MEDIC, RoomCoord(2, 3), Action.MOVE_SOUTH,
         "medic moves south to room (2, 4)."),
        (Role.MEDIC, RoomCoord(2, 3), Action.MOVE_WEST,
         "medic moves west to room (1, 3)."),
        (Role.ENGINEER, RoomCoord(1, 1), Action.REMOVE_RUBBLE,
         "engineer removes rubble in room (1, 1)."),
        (Role.MEDIC, RoomCoord(3, 4), Action.RESCUE_VICTIM,
         "medic rescues the victim in room (3, 4)."),
        (Role.ENGINEER, RoomCoord(0, 0), Action.NO_OP,
         "engineer stays in room (0, 0)."),
        (Role.MEDIC, RoomCoord(0, 0), Action.NO_OP,
         "medic stays in room (0, 0)."),
    ])
    def test_rendering(self, role, room, action, text):
        assert render_action(role, room, action) == text

    @pytest.mark.parametrize("role,room,action,parsed_room", [
        (Role.ENGINEER, RoomCoord(0, 2), Action.MOVE_EAST, RoomCoord(1, 2)),
        (Role.ENGINEER, RoomCoord(1, 1), Action.REMOVE_RUBBLE, RoomCoord(1, 1)),
        (Role.MEDIC, RoomCoord(3, 4), Action.RESCUE_VICTIM, RoomCoord(3, 4)),
        (Role.MEDIC, RoomCoord(2, 2), Action.NO_OP, RoomCoord(2, 2)),
    ])
    def test_parse_inverts_render(self, role, room, action, parsed_room):
        line = render_action(role, room, action)
        assert parse_action(line) == (role, action, parsed_room)

    def test_out_of_bounds_move(self):
        with pytest.raises(ValueError, match="cannot move"):
            render_action(Role.MEDIC, RoomCoord(0, 0), Action.MOVE_NORTH)

    def test_wrong_role_duties(self):
        with pytest.raises(ValueError, match="engineer"):
            render_action(Role.MEDIC, RoomCoord(0, 0), Action.REMOVE_RUBBLE)
        with pytest.raises(ValueError, match="medic"):
            render_action(Role.ENGINEER, RoomCoord(0, 0), Action.RESCUE_VICTIM)

    def test_parse_rejects_other_lines(self):
        with pytest.raises(ValueError, match="not an action"):
            parse_action("room (0, 0) has been explored.")


class TestDecisionPath:
    def test_extract_follows_recorded_branches(self, small_fixed_trees):
        tree = small_fixed_trees[Role.MEDIC].tree
        world = new_world(EnvConfig(seed=5))
        features = encode_features(observe(world))
        path = extract_path(tree, features)

        assert path.role == Role.MEDIC
        assert path.leaf_action == tree_predict(tree, features)
        for feature, branch in path.steps:
            assert bool(features.bits[feature]) == branch
        # every traversal descends, so features never repeat
        assert len({f for f, _ in path.steps}) == len(path.steps)

    def test_extract_checks_schema(self, small_fixed_trees):
        tree = small_fixed_trees[Role.MEDIC].tree
        stale = FeatureVector(bits=np.zeros(N_FEATURES, dtype=np.uint8),
                              schema_version=0)
        with pytest.raises(SchemaMismatchError):
            extract_path(tree, stale)

    def test_json_round_trip(self):
        path = DecisionPath(steps=[(93, True), (51, False)],
                            leaf_action=Action.MOVE_EAST, role=Role.MEDIC)
        back = DecisionPath.from_json(path.to_json())
        assert back == path

    def test_render_is_feature_block(self):
        path = DecisionPath(steps=[(0, True), (51, False)],
                            leaf_action=Action.MOVE_SOUTH, role=Role.ENGINEER)
        assert render_path(path) == (
            "Features:\n"
            "room (0, 0) has been explored.\n"
            "room (2, 2) doesn't contain rubble."
        )

    def test_rendered_steps_parse_back(self, small_fixed_trees):
        tree = small_fixed_trees[Role.ENGINEER].tree
        features = encode_features(observe(new_world(EnvConfig(seed=3))))
        path = extract_path(tree, features)
        lines = render_path(path).splitlines()
        assert lines[0] == "Features:"
        assert [parse_predicate(line) for line in lines[1:]] == path.steps


class TestStatesBR:
    def traj(self, seed=0):
        policy = get_policy("exploit")
        return rollout(policy, policy, EnvConfig(seed=seed))

    def test_sample_is_deterministic_and_ordered(self):
        traj = self.traj()
        a = sample_states_br(traj, Role.MEDIC, k=5, seed=9)
        b = sample_states_br(traj, Role.MEDIC, k=5, seed=9)
        assert a.to_json() == b.to_json()
        times = [traj.steps.index(next(s for s in traj.steps if s.obs == obs))
                 for obs, _ in a.pairs]
        assert times == sorted(times)

    def test_sample_respects_k(self):
        br = sample_states_br(self.traj(), Role.ENGINEER, k=7, seed=0)
        assert br.k == 7
        assert len(br.pairs) == 7

    def test_sample_pairs_match_trajectory(self):
        traj = self.traj(seed=2)
        br = sample_states_br(traj, Role.MEDIC, k=6, seed=1)
        by_obs = {id(step.obs): t for t, step in enumerate(traj.steps)}
        for obs, action in br.pairs:
            t = by_obs[id(obs)]
            assert traj.action_of(t, Role.MEDIC) == action

    def test_sample_rejects_bad_k(self):
        traj = self.traj()
        with pytest.raises(ValueError):
            sample_states_br(traj, Role.MEDIC, k=0)
        with pytest.raises(ValueError):
            sample_states_br(traj, Role.MEDIC, k=len(traj) + 1)

    def test_render_blocks(self):
        traj = self.traj(seed=1)
        br = sample_states_br(traj, Role.MEDIC, k=3, seed=4)
        text = render_br(br)
        blocks = text.split("\n\n")
        assert blocks[0] == "State-action pairs sampled from the agent's behavior:"
        assert len(blocks) == 4
        for block in blocks[1:]:
            assert block.startswith("State:\n")
            action_line = block.rsplit("Action: ", 1)[1]
            parse_action(action_line)


class TestRenderObservation:
    def test_layout_and_contents(self):
        world = world_with(rubble=[RoomCoord(2, 2)],
                           open_victims=[RoomCoord(1, 0)],
                           explored=[RoomCoord(0, 0), RoomCoord(1, 0), RoomCoord(2, 2)],
                           medic=RoomCoord(0, 0), engineer=RoomCoord(2, 2))
        text = render_observation(observe(world))
        assert text == "\n".join([
            "room (0, 0) has been explored.",
            "room (0, 0) doesn't contain rubble.",
            "room (0, 0) doesn't contain a victim.",
            "room (1, 0) has been explored.",
            "room (1, 0) doesn't contain rubble.",
            "room (1, 0) contains a victim.",
            "room (2, 2) has been explored.",
            "room (2, 2) contains rubble.",
            "room (2, 2) doesn't contain a victim.",
            "medic is in room (0, 0).",
            "engineer is in room (2, 2).",
        ])

    def test_unexplored_rooms_are_silent(self):
        world = world_with(medic=RoomCoord(0, 0), engineer=RoomCoord(0, 0),
                           explored=[RoomCoord(0, 0)])
        text = render_observation(observe(world))
        assert "(0, 1)" not in text
        assert text.count("has been explored.") == 1

    def test_hidden_victims_stay_hidden(self):
        room = RoomCoord(1, 1)
        world = world_with(hidden_victims=[room], explored=[room])
        text = render_observation(observe(world))
        assert "room (1, 1) contains rubble." in text
        assert "room (1, 1) doesn't contain a victim." in text


class TestBRJson:
    def test_kinds(self):
        assert BR_KINDS == ("path", "states", "none")

    def test_path_round_trip(self):
        br = PathBR(path=DecisionPath(steps=[(0, True)],
                                      leaf_action=Action.NO_OP, role=Role.MEDIC))
        back = br_from_json(br.to_json())
        assert isinstance(back, PathBR)
        assert back.path == br.path

    def test_states_round_trip(self):
        policy = get_policy("explore")
        traj = rollout(policy, policy, EnvConfig(seed=0))
        br = sample_states_br(traj, Role.ENGINEER, k=4, seed=0)
        back = br_from_json(br.to_json())
        assert isinstance(back, StatesBR)
        assert back.k == br.k
        assert back.role == br.role
        assert [(o, a) for o, a in back.pairs] == [(o, a) for o, a in br.pairs]

    def test_none_round_trip(self):
        back = br_from_json(NoBR().to_json())
        assert isinstance(back, NoBR)
        assert render_br(back) == ""

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown behavior representation"):
            br_from_json({"kind": "saliency"})


@settings(max_examples=50, deadline=None)
@given(feature=st.integers(0, N_FEATURES - 1), branch=st.booleans())
def test_predicate_round_trip_property(feature, branch):
    assert parse_predicate(render_predicate(feature, branch)) == (feature, branch)
