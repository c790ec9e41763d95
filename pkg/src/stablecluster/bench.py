"""Wall-clock scaling of the tree solver."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .metric import build_from_points
from .objectives import Objective
from .pruning import solve


@dataclass(frozen=True)
class BenchRow:
    n: int
    k: int
    seconds: float  # best of the repeats
    cost: float


def random_plane_instance(n: int, seed: int):
    rng = np.random.default_rng([seed, n])
    return build_from_points(rng.uniform(0, 1, size=(n, 2)), name=f"uniform-square(n={n},seed={seed})")


def time_solve(n: int, k: int, obj: Objective, seed: int = 0, repeats: int = 3) -> BenchRow:
    inst = random_plane_instance(n, seed)
    best, cost = np.inf, np.nan
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = solve(inst, obj, k)
        best = min(best, time.perf_counter() - t0)
        cost = result.total_cost
    return BenchRow(n, k, best, cost)


def fit_exponent(ns, seconds) -> float | None:
    """Slope of log(time) against log(n); None with fewer than two sizes."""
    if len(ns) < 2:
        return None
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(seconds, float)), 1)
    return float(slope)


def bench(sizes=(250, 500, 1000, 2000), k: int = 10, obj: Objective | None = None, seed: int = 0, repeats: int = 3):
    """Time ``solve`` over a sweep of ``n``; returns (rows, fitted exponent)."""
    obj = obj or Objective("k_median")
    rows = [time_solve(n, k, obj, seed, repeats) for n in sizes]
    return rows, fit_exponent([r.n for r in rows], [r.seconds for r in rows])


def bench_k(n: int = 1000, ks=(2, 5, 10, 20, 40), obj: Objective | None = None, seed: int = 0, repeats: int = 3):
    """Time ``solve`` at fixed ``n`` over a sweep of ``k``."""
    obj = obj or Objective("k_median")
    return [time_solve(n, k, obj, seed, repeats) for k in ks]
