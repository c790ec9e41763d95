"""Exact optimal clusterings by exhaustive search.

Two independent exact searches are provided:

* :func:`optimal_clustering_bruteforce` enumerates every partition of the
  points into ``k`` nonempty blocks (restricted-growth strings in
  lexicographic order) and scores each with the objective.
* :func:`optimal_clustering_by_centers` enumerates every set of ``k``
  distinct data points as centers and assigns each point to its nearest
  center.  For data-point centers this reaches the same optimum with
  C(n, k) instead of S(n, k) candidates, which is what makes instances
  with a few dozen points tractable.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .exceptions import BudgetExceededError, PreconditionError
from .metric import STEINER, Instance
from .objectives import K_CENTER, K_MEANS, Objective, center_cost_matrix
from .pruning import Clustering, make_clustering

DEFAULT_BUDGET = 10**7
NEAR_TIE_RTOL = 1e-12
_CHUNK = 200_000


def default_budget() -> int:
    return int(os.environ.get("STABLECLUSTER_BUDGET", DEFAULT_BUDGET))


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, S(n, k)."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@lru_cache(maxsize=None)
def _completions(r: int, m: int, k: int) -> int:
    # ways to extend a prefix that already uses m blocks by r more labels, ending with exactly k blocks
    if r == 0:
        return int(m == k)
    if k - m > r:
        return 0
    total = m * _completions(r - 1, m, k)
    if m < k:
        total += _completions(r - 1, m + 1, k)
    return total


def _expand(prefix: tuple[int, ...], n: int, k: int) -> np.ndarray:
    """All RGS rows of length n starting with ``prefix``, lexicographically sorted."""
    rows = np.array([prefix], dtype=np.int16).reshape(1, len(prefix))
    used = np.array([max(prefix) + 1 if prefix else 0], dtype=np.int16)
    for pos in range(len(prefix), n):
        remaining = n - pos - 1
        parts, part_used = [], []
        for c in range(k):
            new_used = np.maximum(used, c + 1)
            ok = (c <= used) & (k - new_used <= remaining)
            if ok.any():
                parts.append(np.column_stack([rows[ok], np.full(ok.sum(), c, dtype=np.int16)]))
                part_used.append(new_used[ok])
        rows = np.concatenate(parts)
        used = np.concatenate(part_used)
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def rgs_chunks(n: int, k: int, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Restricted-growth strings for exactly ``k`` blocks, in lexicographic order, in chunks."""

    def walk(prefix: tuple[int, ...], m: int):
        if _completions(n - len(prefix), m, k) <= chunk or len(prefix) == n:
            yield _expand(prefix, n, k)
            return
        for c in range(min(m + 1, k)):
            nm = max(m, c + 1)
            if _completions(n - len(prefix) - 1, nm, k):
                yield from walk(prefix + (c,), nm)

    # the first label is always 0
    yield from walk((0,), 1)


@lru_cache(maxsize=64)
def _cached_rgs(n: int, k: int) -> tuple[np.ndarray, ...]:
    chunks = tuple(rgs_chunks(n, k))
    for c in chunks:
        c.setflags(write=False)
    return chunks


def _rgs(n: int, k: int) -> Iterator[np.ndarray]:
    if stirling2(n, k) <= 4 * _CHUNK:
        return iter(_cached_rgs(n, k))
    return rgs_chunks(n, k)


def _check_nk(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise PreconditionError(f"k must be in [1, {n}], got {k}")


def enumerate_partitions(n: int, k: int, budget: int | None = None) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every partition of ``range(n)`` into ``k`` nonempty blocks, exactly once.

    Blocks are ordered by their smallest element; partitions come in
    lexicographic order of their restricted-growth strings.
    """
    _check_nk(n, k)
    budget = default_budget() if budget is None else budget
    if stirling2(n, k) > budget:
        raise BudgetExceededError(f"S({n},{k}) = {stirling2(n, k)} exceeds the budget of {budget}")
    for rows in _rgs(n, k):
        for row in rows:
            yield tuple(tuple(np.flatnonzero(row == b).tolist()) for b in range(k))


@dataclass(frozen=True, eq=False)
class OracleResult:
    clustering: Clustering
    unique: bool  # no other partition reaches exactly the same cost
    near_tie: bool  # some other partition is within NEAR_TIE_RTOL (relative)
    n_optimal: int  # candidates at exactly the optimal cost
    n_candidates: int
    method: str


def _block_costs(inst: Instance, obj: Objective, rows: np.ndarray, b: int, C, P) -> np.ndarray:
    member = rows == b
    if inst.center_policy == STEINER:
        cnt = member.sum(axis=1)
        mean = (member.astype(float) @ P) / cnt[:, None]
        out = np.zeros(len(rows))
        for i in range(inst.n):
            diff = P[i] - mean
            out += member[:, i] * np.einsum("ij,ij->i", diff, diff)
        return out
    if obj.kind == K_CENTER:
        out = np.empty(len(rows))
        step = max(1, 4_000_000 // (inst.n * inst.n))
        for s in range(0, len(rows), step):
            m = member[s : s + step]
            out[s : s + step] = np.where(m[:, :, None], C[None], -np.inf).max(axis=1).min(axis=1)
        return out
    return (member.astype(float) @ C).min(axis=1)


def optimal_clustering_bruteforce(
    inst: Instance, obj: Objective, k: int, budget: int | None = None
) -> OracleResult:
    """Minimum-cost clustering over all k-partitions.

    Exact ties keep the lexicographically first partition.
    """
    n = inst.n
    _check_nk(n, k)
    budget = default_budget() if budget is None else budget
    total = stirling2(n, k)
    if total > budget:
        raise BudgetExceededError(f"S({n},{k}) = {total} partitions exceed the budget of {budget}")
    if inst.center_policy == STEINER and obj.kind != K_MEANS:
        raise PreconditionError("steiner centers are only defined for k-means")
    w = np.ones(k) if obj.weights is None else np.asarray(obj.weights, dtype=float)
    if w.shape != (k,):
        raise PreconditionError("weights length does not match k")
    C = None if inst.center_policy == STEINER else center_cost_matrix(inst, obj)
    P = inst.points

    best_cost, best_row = np.inf, None
    all_costs = []
    for rows in _rgs(n, k):
        costs = np.stack([w[b] * _block_costs(inst, obj, rows, b, C, P) for b in range(k)])
        costs = costs.max(axis=0) if obj.aggregation == "max" else costs.sum(axis=0)
        all_costs.append(costs)
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost, best_row = float(costs[j]), rows[j].copy()
    costs = np.concatenate(all_costs)
    n_opt = int(np.count_nonzero(costs == best_cost))
    near = int(np.count_nonzero(np.abs(costs - best_cost) <= NEAR_TIE_RTOL * max(abs(best_cost), 1e-300)))
    clustering = make_clustering(inst, best_row, obj)
    return OracleResult(clustering, n_opt == 1, near > 1, n_opt, total, "partitions")


def optimal_clustering_by_centers(
    inst: Instance, obj: Objective, k: int, budget: int | None = None
) -> OracleResult:
    """Minimum-cost clustering over all sets of ``k`` data-point centers.

    Each point goes to its nearest center (lowest index on ties).  The
    optimum is reported as unique when every optimal center set induces the
    same partition without assignment ties.  For k-center only
    nearest-center assignments are considered, so uniqueness there is a
    statement about those.
    """
    n = inst.n
    _check_nk(n, k)
    if inst.center_policy == STEINER:
        raise PreconditionError("center enumeration needs data-point centers")
    if obj.weights is not None and len(set(obj.weights)) > 1:
        raise PreconditionError("center enumeration does not support cluster-dependent weights")
    budget = default_budget() if budget is None else budget
    total = math.comb(n, k)
    if total > budget:
        raise BudgetExceededError(f"C({n},{k}) = {total} center sets exceed the budget of {budget}")
    C = center_cost_matrix(inst, obj)
    step = max(1, 4_000_000 // (n * k))
    combos_iter = itertools.combinations(range(n), k)
    chunks, costs = [], []
    while True:
        combos = np.array(list(itertools.islice(combos_iter, step)), dtype=np.intp).reshape(-1, k)
        if combos.size == 0:
            break
        near = C[:, combos].min(axis=2)  # (n, M)
        costs.append(near.max(axis=0) if obj.aggregation == "max" else near.sum(axis=0))
        chunks.append(combos)
    combos = np.concatenate(chunks)
    costs = np.concatenate(costs)
    best = float(costs.min())
    opt = np.flatnonzero(costs == best)
    near_idx = np.flatnonzero(np.abs(costs - best) <= NEAR_TIE_RTOL * max(abs(best), 1e-300))

    def partition_for(centers):
        A = C[:, centers]
        lab = np.argmin(A, axis=1)
        tied = (A == A.min(axis=1, keepdims=True)).sum(axis=1) > 1
        return make_clustering(inst, lab, obj), bool(tied.any())

    clustering, ambiguous = partition_for(combos[opt[0]])
    parts = {clustering.partition()}
    for j in opt[1:]:
        other, amb = partition_for(combos[j])
        ambiguous |= amb
        parts.add(other.partition())
    near_parts = set(parts)
    opt_set = set(opt.tolist())
    for j in near_idx:
        if j not in opt_set:
            near_parts.add(partition_for(combos[j])[0].partition())
    unique = len(parts) == 1 and not ambiguous
    return OracleResult(clustering, unique, len(near_parts) > 1, len(opt), total, "centers")


def optimal_clustering(inst: Instance, obj: Objective, k: int, budget: int | None = None) -> OracleResult:
    """Partition enumeration when affordable, otherwise center enumeration."""
    budget = default_budget() if budget is None else budget
    _check_nk(inst.n, k)
    if stirling2(inst.n, k) <= budget:
        return optimal_clustering_bruteforce(inst, obj, k, budget)
    if inst.center_policy != STEINER and math.comb(inst.n, k) <= budget:
        return optimal_clustering_by_centers(inst, obj, k, budget)
    raise BudgetExceededError(f"no exhaustive search fits the budget of {budget} for n={inst.n}, k={k}")
