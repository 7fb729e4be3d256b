from pathlib import Path

import pytest

from usarx.distill import DistillConfig, dagger_distill
from usarx.grid import Role

GOLDEN_DIR = Path(__file__).parent / "golden"

# Big enough for perfect fidelity on the fixed behavior, cheap enough for
# plumbing tests.
SMALL_CONFIG = DistillConfig(iterations=1, episodes_per_iteration=50, holdout_episodes=10)

BEHAVIORS = ("explore", "exploit", "fixed")
ROLES = (Role.MEDIC, Role.ENGINEER)


@pytest.fixture(scope="session")
def small_fixed_trees():
    """Cheap fixed-behavior trees (fidelity 1.0 even at this size)."""
    return {role: dagger_distill("fixed", role, SMALL_CONFIG) for role in ROLES}


@pytest.fixture(scope="session")
def default_trees():
    """All six behavior/role trees at the default config; the expensive
    fixture behind the acceptance suite."""
    return {
        (behavior, role): dagger_distill(behavior, role)
        for behavior in BEHAVIORS
        for role in ROLES
    }


@pytest.fixture(scope="session")
def small_explore_trees():
    """Cheap explore-behavior trees for sampling and service plumbing."""
    return {role: dagger_distill("explore", role, SMALL_CONFIG) for role in ROLES}
