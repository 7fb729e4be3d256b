"""Episode-throughput comparison: compiled kernels vs the pure-Python
fallback.

Distills one small tree per behavior, then times fidelity_episode and
collect_episode over a fixed seed set with each implementation. Run as
`python3 benchmarks/bench_kernels.py [--episodes N]`.
"""

import argparse
import time
from dataclasses import replace

from usarx.distill import DistillConfig, dagger_distill, derive_seeds
from usarx.grid import EnvConfig, Role, new_world
from usarx.kernels import BACKEND, pure
from usarx.kernels.api import BEHAVIOR_CODE, tree_arrays, world_arrays

try:
    from usarx.kernels import _native
except ImportError:
    _native = None

BENCH_CONFIG = DistillConfig(iterations=1, episodes_per_iteration=50, holdout_episodes=10)


def bench(impl, kind: str, behavior: str, role: Role, tarr, seeds, env: EnvConfig) -> float:
    """Episodes per second for one kernel on one behavior."""
    code = BEHAVIOR_CODE[behavior]
    worlds = [world_arrays(new_world(replace(env, seed=int(s))), env.horizon) for s in seeds]
    start = time.perf_counter()
    for warr in worlds:
        if kind == "fidelity":
            impl.fidelity_episode(warr, code, int(role), tarr)
        else:
            impl.collect_episode(warr, code, int(role), tarr)
    return len(worlds) / (time.perf_counter() - start)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=300)
    args = parser.parse_args()

    env = EnvConfig()
    seeds = derive_seeds(0, "bench", args.episodes)
    impls = [("pure", pure)] + ([("native", _native)] if _native is not None else [])
    if _native is None:
        print("compiled kernel unavailable; benchmarking the fallback only")
    print(f"default backend: {BACKEND}; {args.episodes} episodes per cell\n")

    header = f"{'kernel':<9} {'behavior':<8} {'fidelity ep/s':>14} {'collect ep/s':>14}"
    print(header)
    print("-" * len(header))
    rates = {}
    for behavior in ("explore", "exploit", "fixed"):
        tarr = tree_arrays(dagger_distill(behavior, Role.ENGINEER, BENCH_CONFIG).tree)
        for name, impl in impls:
            fid = bench(impl, "fidelity", behavior, Role.ENGINEER, tarr, seeds, env)
            col = bench(impl, "collect", behavior, Role.ENGINEER, tarr, seeds, env)
            rates[(name, behavior)] = (fid, col)
            print(f"{name:<9} {behavior:<8} {fid:>14.1f} {col:>14.1f}")

    if _native is not None:
        print()
        for behavior in ("explore", "exploit", "fixed"):
            fid_speedup = rates[("native", behavior)][0] / rates[("pure", behavior)][0]
            col_speedup = rates[("native", behavior)][1] / rates[("pure", behavior)][1]
            print(f"{behavior}: native is {fid_speedup:.0f}x (fidelity), {col_speedup:.0f}x (collect)")


if __name__ == "__main__":
    main()
