"""Bit-equality between the compiled episode kernels and the pure fallback."""

import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

import usarx.kernels as kernels
from usarx.kernels import BEHAVIOR_CODE, pure, tree_arrays, world_arrays
from usarx.grid import EnvConfig, Role, new_world

try:
    from usarx.kernels import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="extension not built")

BEHAVIORS = tuple(sorted(BEHAVIOR_CODE))
ROLES = (Role.MEDIC, Role.ENGINEER)


def warr(seed, env=None):
    env = env or EnvConfig()
    return world_arrays(new_world(replace(env, seed=seed)), env.horizon)


@needs_native
class TestNativeMatchesPure:
    @pytest.mark.parametrize("behavior", BEHAVIORS)
    @pytest.mark.parametrize("role", ROLES)
    def test_collect_expert_episodes(self, behavior, role):
        code = BEHAVIOR_CODE[behavior]
        for seed in range(30):
            Xn, yn = _native.collect_episode(warr(seed), code, int(role), None)
            Xp, yp = pure.collect_episode(warr(seed), code, int(role), None)
            assert np.array_equal(Xn, Xp)
            assert np.array_equal(yn, yp)

    @pytest.mark.parametrize("behavior", BEHAVIORS)
    @pytest.mark.parametrize("role", ROLES)
    def test_tree_driven_episodes(self, behavior, role, small_fixed_trees):
        # tree drives the target role, the expert drives the partner
        code = BEHAVIOR_CODE[behavior]
        arrays = tree_arrays(small_fixed_trees[role].tree)
        for seed in range(15):
            Xn, yn = _native.collect_episode(warr(seed), code, int(role), arrays)
            Xp, yp = pure.collect_episode(warr(seed), code, int(role), arrays)
            assert np.array_equal(Xn, Xp)
            assert np.array_equal(yn, yp)

    @pytest.mark.parametrize("behavior", BEHAVIORS)
    @pytest.mark.parametrize("role", ROLES)
    def test_fidelity_counts(self, behavior, role, small_fixed_trees):
        code = BEHAVIOR_CODE[behavior]
        arrays = tree_arrays(small_fixed_trees[role].tree)
        for seed in range(30):
            assert _native.fidelity_episode(warr(seed), code, int(role), arrays) == \
                pure.fidelity_episode(warr(seed), code, int(role), arrays)

    def test_unusual_env_shapes(self):
        # rubble-heavy and victim-free worlds exercise the duty branches
        for env in (EnvConfig(n_rubble=8, n_victims=4, hidden_victim_fraction=1.0),
                    EnvConfig(n_rubble=0, n_victims=0),
                    EnvConfig(n_rubble=5, n_victims=1, horizon=37)):
            for behavior in BEHAVIORS:
                code = BEHAVIOR_CODE[behavior]
                for role in ROLES:
                    for seed in range(10):
                        Xn, yn = _native.collect_episode(
                            warr(seed, env), code, int(role), None)
                        Xp, yp = pure.collect_episode(
                            warr(seed, env), code, int(role), None)
                        assert np.array_equal(Xn, Xp)
                        assert np.array_equal(yn, yp)


class TestBackendSelection:
    def test_backend_flag_names_loaded_impl(self):
        assert kernels.BACKEND in ("native", "pure")
        if _native is not None and os.environ.get("USARX_PURE", "0") in ("", "0"):
            assert kernels.BACKEND == "native"

    def test_pure_env_var_forces_fallback(self):
        out = subprocess.run(
            [sys.executable, "-c", "import usarx.kernels as k; print(k.BACKEND)"],
            env={**os.environ, "USARX_PURE": "1"},
            capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "pure"


class TestCollectShapes:
    def test_rows_per_step_until_done(self):
        X, y = kernels.collect_episode(warr(0), BEHAVIOR_CODE["exploit"],
                                       int(Role.MEDIC), None)
        assert X.dtype == np.uint8
        assert y.dtype == np.int64
        assert X.shape == (len(y), 100)
        assert 0 < len(y) <= EnvConfig().horizon
        assert set(np.unique(X)) <= {0, 1}
