"""Separable center-based objectives: k-median, k-means and k-center.

Each cluster is scored with its best center; the clustering score is the
(optionally weighted) sum of cluster scores for k-median/k-means and their
maximum for k-center.  All scores use metric distances: for a
squared-Euclidean instance the metric is the plain Euclidean distance, so
k-means reads the stored squares directly and k-median/k-center take
square roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import PreconditionError
from .metric import SQUARED_EUCLIDEAN, STEINER, Instance

K_MEDIAN = "k_median"
K_MEANS = "k_means"
K_CENTER = "k_center"
KINDS = (K_MEDIAN, K_MEANS, K_CENTER)

# short names used on the command line and in JSON
ALIASES = {"kmedian": K_MEDIAN, "kmeans": K_MEANS, "kcenter": K_CENTER}
SHORT = {v: k for k, v in ALIASES.items()}


@dataclass(frozen=True)
class Objective:
    kind: str = K_MEDIAN
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise PreconditionError(f"unknown objective {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(not np.isfinite(x) or x <= 0 for x in w):
                raise PreconditionError("objective weights must be positive")
            object.__setattr__(self, "weights", w)

    @property
    def aggregation(self) -> str:
        return "max" if self.kind == K_CENTER else "sum"

    @property
    def short_name(self) -> str:
        return SHORT[self.kind]

    @property
    def uniform_weight(self) -> float:
        """The common weight, or an error if weights differ between clusters."""
        if not self.weights:
            return 1.0
        if len(set(self.weights)) > 1:
            raise PreconditionError(
                "tree pruning needs cluster-independent weights; got non-uniform weights"
            )
        return self.weights[0]


@dataclass(frozen=True)
class ClusterCost:
    value: float
    center: int | np.ndarray


def center_cost_matrix(inst: Instance, obj: Objective) -> np.ndarray:
    """Cost of serving point ``i`` from candidate center ``j`` (data centers)."""
    if obj.kind == K_MEANS:
        if inst.source_metric == SQUARED_EUCLIDEAN:
            return inst.dist
        return inst.dist * inst.dist
    return inst.metric_matrix()


def _members(inst: Instance, members: Iterable[int]) -> np.ndarray:
    arr = members if isinstance(members, np.ndarray) else np.fromiter(members, dtype=np.intp)
    idx = np.unique(arr.astype(np.intp, copy=False))
    if idx.size == 0:
        raise PreconditionError("cluster has no members")
    if idx[0] < 0 or idx[-1] >= inst.n:
        raise PreconditionError("member index out of range")
    return idx


def sum_squared_deviation(points: np.ndarray) -> tuple[float, np.ndarray]:
    mean = points.mean(axis=0)
    return float(((points - mean) ** 2).sum()), mean


def cluster_cost(inst: Instance, members: Iterable[int], obj: Objective) -> ClusterCost:
    """Best center and score of a single cluster.

    Data-point policy: the center ranges over all ``n`` points (not only the
    members), lowest index on ties.  Steiner policy (k-means only): the
    center is the coordinate mean.
    """
    idx = _members(inst, members)
    if inst.center_policy == STEINER:
        if obj.kind != K_MEANS:
            raise PreconditionError("steiner centers are only defined for k-means")
        if inst.points is None:
            raise PreconditionError("steiner centers need coordinates")
        value, mean = sum_squared_deviation(inst.points[idx])
        return ClusterCost(value, mean)
    C = center_cost_matrix(inst, obj)[idx]
    per_center = C.max(axis=0) if obj.kind == K_CENTER else C.sum(axis=0)
    c = int(np.argmin(per_center))
    return ClusterCost(float(per_center[c]), c)


def aggregate(costs: Sequence[ClusterCost | float], obj: Objective) -> float:
    """Combine cluster scores: weighted sum, or maximum for k-center."""
    if len(costs) == 0:
        raise PreconditionError("cannot aggregate an empty list of cluster costs")
    vals = np.array([c.value if isinstance(c, ClusterCost) else float(c) for c in costs])
    if obj.weights is not None:
        if len(obj.weights) != len(vals):
            raise PreconditionError("weights length does not match the number of clusters")
        vals = vals * np.asarray(obj.weights)
    if obj.aggregation == "max":
        return float(vals.max())
    return float(vals.sum())


def assignment_costs(inst: Instance, centers, obj: Objective) -> np.ndarray:
    """(n, k) cost of each point against each given center.

    Centers are point indices for the data policy, coordinate rows for the
    Steiner policy.  Values are in metric units (plain distances) except
    for k-means, which uses squared distances.
    """
    if inst.center_policy == STEINER:
        diff = inst.points[:, None, :] - np.asarray(centers, dtype=float)[None, :, :]
        sq = (diff**2).sum(axis=2)
        return sq if obj.kind == K_MEANS else np.sqrt(sq)
    return center_cost_matrix(inst, obj)[:, np.asarray(centers, dtype=np.intp)]
