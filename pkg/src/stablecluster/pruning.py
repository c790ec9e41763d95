"""Best k-pruning of the single-linkage tree, and the end-to-end solver."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import PreconditionError
from .linkage import Dendrogram, cut_at_k, single_linkage_tree
from .metric import STEINER, Instance
from .objectives import K_CENTER, K_MEANS, Objective, aggregate, center_cost_matrix, cluster_cost


def canonical_labels(labels) -> np.ndarray:
    """Relabel so cluster ids appear in order of their smallest member."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.intp)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.reshape(-1)]


def blocks_of(labels) -> list[np.ndarray]:
    labels = canonical_labels(labels)
    return [np.flatnonzero(labels == c) for c in range(labels.max() + 1)]


def partition_of(labels) -> frozenset:
    return frozenset(frozenset(int(i) for i in b) for b in blocks_of(labels))


@dataclass(frozen=True, eq=False)
class Clustering:
    """A k-partition with its centers and cost.

    ``labels`` are canonical (cluster 0 holds point 0, and so on).
    ``centers`` holds point indices (data policy) or a ``(k, d)`` array
    (Steiner policy).  ``objective`` is ``None`` for planted clusterings
    whose centers were designated rather than optimised; their
    ``total_cost`` is NaN.
    """

    labels: np.ndarray
    centers: object
    total_cost: float
    k: int
    objective: Objective | None
    cluster_costs: tuple[float, ...] = ()
    nodes: tuple[int, ...] | None = field(default=None)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]

    def partition(self) -> frozenset:
        return partition_of(self.labels)

    def same_partition(self, other) -> bool:
        other_labels = other.labels if isinstance(other, Clustering) else other
        return bool(np.array_equal(self.labels, canonical_labels(other_labels)))

    def center_list(self) -> list:
        if isinstance(self.centers, np.ndarray) and self.centers.ndim == 2:
            return self.centers.tolist()
        return [int(c) for c in self.centers]

    def to_dict(self) -> dict:
        return {
            "labels": [int(x) for x in self.labels],
            "centers": self.center_list(),
            "cost": None if np.isnan(self.total_cost) else float(self.total_cost),
            "k": int(self.k),
            "objective": self.objective.short_name if self.objective else "none",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def make_clustering(inst: Instance, labels, obj: Objective, nodes=None) -> Clustering:
    """Score a partition: best center per block, aggregated per the objective."""
    labels = canonical_labels(labels)
    if labels.shape != (inst.n,):
        raise PreconditionError("need one label per point")
    k = int(labels.max()) + 1
    costs = [cluster_cost(inst, np.flatnonzero(labels == c), obj) for c in range(k)]
    if inst.center_policy == STEINER:
        centers = np.array([c.center for c in costs])
    else:
        centers = tuple(int(c.center) for c in costs)
    return Clustering(
        labels=labels,
        centers=centers,
        total_cost=aggregate(costs, obj),
        k=k,
        objective=obj,
        cluster_costs=tuple(c.value for c in costs),
        nodes=nodes,
    )


def planted_clustering(inst: Instance, labels, centers) -> Clustering:
    """A clustering with designated centers (given in the original label order)."""
    labels = np.asarray(labels)
    canon = canonical_labels(labels)
    k = int(canon.max()) + 1
    # reorder centers to follow the canonical ids
    order = [int(labels[np.flatnonzero(canon == c)[0]]) for c in range(k)]
    if inst.center_policy == STEINER or (isinstance(centers, np.ndarray) and centers.ndim == 2):
        cs = np.asarray(centers, dtype=float)[order]
    else:
        cs = tuple(int(centers[o]) for o in order)
    return Clustering(canon, cs, float("nan"), k, None)


def clustering_from_dict(obj: dict, inst: Instance) -> Clustering:
    """Read the clustering JSON format; labels must lie in ``[0, k)``."""
    labels = np.asarray(obj["labels"], dtype=np.intp)
    if labels.shape != (inst.n,):
        raise PreconditionError(f"clustering has {labels.size} labels for an instance of {inst.n} points")
    centers = obj.get("centers")
    if centers is not None:
        centers = np.asarray(centers, dtype=float) if inst.center_policy == STEINER else [int(c) for c in centers]
        if len(centers) != len(np.unique(labels)):
            raise PreconditionError("number of centers does not match the number of clusters")
    name = obj.get("objective") or "none"
    if name == "none":
        if centers is None:
            raise PreconditionError("a clustering without objective needs explicit centers")
        return planted_clustering(inst, labels, centers)
    result = make_clustering(inst, labels, Objective(name))
    if centers is None:
        return result
    # keep the file's centers: they may differ from ours on ties
    return replace(result, centers=planted_clustering(inst, labels, centers).centers)


# --------------------------------------------------------------------------
# dynamic program


def node_costs(tree: Dendrogram, inst: Instance, obj: Objective) -> np.ndarray:
    """Single-cluster cost of every tree node, computed bottom-up.

    Data centers: the per-candidate-center cost vector of a node is the sum
    (max for k-center) of its children's vectors, so all nodes together cost
    O(n^2).  Steiner k-means: counts, means and sums of squared deviations
    are merged pairwise.
    """
    n = inst.n
    out = np.zeros(tree.n_nodes)
    if inst.center_policy == STEINER:
        if obj.kind != K_MEANS:
            raise PreconditionError("steiner centers are only defined for k-means")
        cnt = np.ones(tree.n_nodes)
        mean = np.zeros((tree.n_nodes, inst.points.shape[1]))
        mean[:n] = inst.points
        for v in range(n, tree.n_nodes):
            a, b = tree.left[v], tree.right[v]
            na, nb = cnt[a], cnt[b]
            delta = mean[b] - mean[a]
            cnt[v] = na + nb
            mean[v] = mean[a] + delta * (nb / cnt[v])
            out[v] = out[a] + out[b] + float(delta @ delta) * na * nb / cnt[v]
        return out

    C = center_cost_matrix(inst, obj)
    combine = np.maximum if obj.kind == K_CENTER else np.add
    vec: dict[int, np.ndarray] = {}
    for v in range(n, tree.n_nodes):
        a, b = int(tree.left[v]), int(tree.right[v])
        va = vec.pop(a) if a >= n else C[a]
        vb = vec.pop(b) if b >= n else C[b]
        vv = combine(va, vb)
        vec[v] = vv
        out[v] = vv.min()
    # leaves: a point is its own best center
    return out


@dataclass(frozen=True, eq=False)
class PruningTable:
    """Per-node DP rows: ``cost[v][kk]`` is the best kk-pruning of node ``v``.

    Rows have length ``min(count, k) + 1`` (index 0 unused); ``entry``
    reports +inf beyond that, where the node has too few points.
    """

    k: int
    cost: list
    split: list

    def entry(self, v: int, kk: int) -> float:
        row = self.cost[v]
        return float(row[kk]) if 1 <= kk < len(row) else float("inf")


def pruning_table(tree: Dendrogram, inst: Instance, obj: Objective, k: int) -> PruningTable:
    """Fill the DP bottom-up in merge order.

    A node's best k'-pruning is its own cost for k' = 1, otherwise the best
    split of k' between its two children (sum of the two sides, or their
    max for k-center).  Ties go to the smallest left share.
    """
    n = inst.n
    if tree.n != n:
        raise PreconditionError("tree and instance sizes differ")
    if not 1 <= k <= n:
        raise PreconditionError(f"k must be in [1, {n}], got {k}")
    obj.uniform_weight  # rejects cluster-dependent weights
    combine = np.maximum if obj.aggregation == "max" else np.add
    own = node_costs(tree, inst, obj)

    cost: list = [None] * tree.n_nodes
    split: list = [None] * tree.n_nodes
    leaf = np.array([np.inf, 0.0])
    leaf.setflags(write=False)
    for v in range(n):
        cost[v] = leaf
    for v in range(n, tree.n_nodes):
        tl, tr = cost[tree.left[v]], cost[tree.right[v]]
        kl, kr = len(tl) - 1, len(tr) - 1
        m = min(kl + kr, k)
        t = np.full(m + 1, np.inf)
        s = np.zeros(m + 1, dtype=np.intp)
        t[1] = own[v]
        for kk in range(2, m + 1):
            lo, hi = max(1, kk - kr), min(kk - 1, kl)
            # left takes lo..hi clusters, right the rest (kk-lo down to kk-hi)
            cand = combine(tl[lo : hi + 1], tr[kk - hi : kk - lo + 1][::-1])
            j = int(np.argmin(cand))
            t[kk], s[kk] = cand[j], lo + j
        cost[v], split[v] = t, s
    return PruningTable(k, cost, split)


def best_k_pruning(tree: Dendrogram, inst: Instance, obj: Objective, k: int) -> Clustering:
    """Cheapest partition of the points into ``k`` tree nodes."""
    table = pruning_table(tree, inst, obj, k)
    chosen = []
    stack = [(tree.root, k)]
    while stack:
        v, kk = stack.pop()
        if kk == 1:
            chosen.append(v)
            continue
        kl = int(table.split[v][kk])
        stack.append((int(tree.right[v]), kk - kl))
        stack.append((int(tree.left[v]), kl))
    # canonical cluster order is by smallest member
    chosen.sort(key=lambda v: int(tree.min_leaf[v]))
    labels = np.empty(inst.n, dtype=np.intp)
    for c, v in enumerate(chosen):
        labels[tree.members(v)] = c
    return make_clustering(inst, labels, obj, nodes=tuple(chosen))


def solve(inst: Instance, obj: Objective, k: int) -> Clustering:
    """Single-linkage tree followed by the best k-pruning."""
    if not 1 <= k <= inst.n:
        raise PreconditionError(f"k must be in [1, {inst.n}], got {k}")
    return best_k_pruning(single_linkage_tree(inst), inst, obj, k)


def naive_single_linkage_at_k(inst: Instance, k: int) -> np.ndarray:
    """Labels from halting single linkage as soon as ``k`` clusters remain."""
    if not 1 <= k <= inst.n:
        raise PreconditionError(f"k must be in [1, {inst.n}], got {k}")
    return canonical_labels(cut_at_k(single_linkage_tree(inst), k))
