"""Stability diagnostics for a clustering.

* center proximity: how many times closer every point is to its own
  center than to any other center;
* the separation bound that proximity implies for cross-cluster pairs;
* min-stability, checked exactly by subset enumeration or structurally by
  asking whether every cluster is a node of the single-linkage tree;
* a randomized perturbation probe, which can refute but never certify
  perturbation resilience.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import BudgetExceededError, PreconditionError
from .linkage import Dendrogram, single_linkage_tree
from .metric import STEINER, Instance, PerturbationSpec, perturb
from .objectives import Objective
from .oracle import optimal_clustering
from .pruning import Clustering, solve

DEFAULT_EXACT_BUDGET = 2**20
DEFAULT_PROBE_MAX_N = 12


def _center_distances(inst: Instance, clustering: Clustering) -> np.ndarray:
    """(n, k) metric distance from every point to every center."""
    if inst.center_policy == STEINER or (
        isinstance(clustering.centers, np.ndarray) and clustering.centers.ndim == 2
    ):
        if inst.points is None:
            raise PreconditionError("coordinate centers need an instance with coordinates")
        diff = inst.points[:, None, :] - np.asarray(clustering.centers, dtype=float)[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))
    return inst.metric_matrix()[:, np.asarray(clustering.centers, dtype=np.intp)]


def _labels(inst: Instance, clustering: Clustering) -> np.ndarray:
    labels = np.asarray(clustering.labels)
    if labels.shape != (inst.n,):
        raise PreconditionError("clustering does not match the instance size")
    return labels


def proximity_factor(inst: Instance, clustering: Clustering) -> float:
    """Largest alpha for which the clustering has alpha-center proximity.

    The minimum over points ``p`` and foreign centers ``c`` of
    ``d(p, c) / d(p, home center)``.  A ratio with zero denominator counts
    as +inf, or as 1 when the numerator is zero too.
    """
    if clustering.k < 2:
        raise PreconditionError("center proximity needs at least two clusters")
    return proximity_from_distances(_center_distances(inst, clustering), _labels(inst, clustering))


def proximity_from_distances(A: np.ndarray, labels: np.ndarray) -> float:
    """Proximity factor from an (n, k) point-to-center distance table."""
    n = len(labels)
    home = A[np.arange(n), labels][:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = A / home
    ratio = np.where(home == 0, np.where(A == 0, 1.0, np.inf), ratio)
    ratio[np.arange(n), labels] = np.inf
    return float(ratio.min())


@dataclass(frozen=True)
class SeparationResult:
    ok: bool
    worst_pair: tuple[int, int] | None
    margin: float  # min over cross pairs of d(p, p') / d(p, home center)


def check_corollary_separation(inst: Instance, clustering: Clustering, alpha: float) -> SeparationResult:
    """Whether every cross-cluster pair obeys ``d(p, p') > (alpha - 1) d(p, c_home(p))``.

    ``worst_pair`` minimizes ``d(p, p') - (alpha - 1) d(p, c_home(p))``.
    """
    labels = _labels(inst, clustering)
    M = inst.metric_matrix()
    home = _center_distances(inst, clustering)[np.arange(inst.n), labels]
    cross = labels[:, None] != labels[None, :]
    if not cross.any():
        return SeparationResult(True, None, math.inf)
    slack = np.where(cross, M - (alpha - 1) * home[:, None], np.inf)
    p, q = np.unravel_index(int(np.argmin(slack)), slack.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = M / home[:, None]
    ratio = np.where(home[:, None] == 0, np.where(M == 0, 0.0, np.inf), ratio)
    margin = float(np.where(cross, ratio, np.inf).min())
    return SeparationResult(bool(slack[p, q] > 0), (int(p), int(q)), margin)


# --------------------------------------------------------------------------
# min-stability


@dataclass(frozen=True)
class MinStabilityWitness:
    cluster: int
    subset: tuple[int, ...]
    other_cluster: int
    inner: float  # d_min(A, C \ A)
    outer: float  # d_min(A, C')
    pair: tuple[int, int]  # (a in A, p' in C') at distance `outer`


@dataclass(frozen=True)
class MinStabilityResult:
    stable: bool
    witness: MinStabilityWitness | None = None
    ties: bool = False  # some subset has d_min(A, C \ A) == d_min(A, outside)

    def __bool__(self) -> bool:
        return self.stable


def _subset_min(values: np.ndarray) -> np.ndarray:
    """``out[mask] = min(values[i] for bits i of mask)``, +inf for the empty mask."""
    out = np.full(1 << len(values), np.inf)
    for b, v in enumerate(values):
        lo = 1 << b
        np.minimum(out[:lo], v, out=out[lo : 2 * lo])
    return out


def check_min_stability_exact(
    inst: Instance, clustering: Clustering, budget: int = DEFAULT_EXACT_BUDGET
) -> MinStabilityResult:
    """Check ``d_min(A, C \\ A) <= d_min(A, C')`` for every proper subset ``A`` of every cluster.

    All subsets of a cluster are scored at once with bitmask tables, so the
    cost is ``O(|C| 2^|C|)`` per cluster.  Only the nearest foreign cluster
    matters for each ``A``, so the test runs against the distance to all
    other clusters together and names the offending cluster afterwards.
    """
    labels = _labels(inst, clustering)
    D = inst.dist
    blocks = [np.flatnonzero(labels == c) for c in range(int(labels.max()) + 1)]
    work = sum(1 << len(b) for b in blocks if len(b) > 1)
    if work > budget:
        raise BudgetExceededError(
            f"exact min-stability check needs {work} subset evaluations (budget {budget}); "
            "use check_min_stability_via_tree instead"
        )
    ties = False
    for c, members in enumerate(blocks):
        m = len(members)
        if m < 2 or m == inst.n:
            continue
        outside = np.flatnonzero(labels != c)
        full = (1 << m) - 1
        to_outside = _subset_min(D[np.ix_(members, outside)].min(axis=1))
        masks = np.arange(1 << m)
        inner = np.full(1 << m, np.inf)
        for b in range(m):
            # min over q in the complement of the mask, for p = members[b] in the mask
            cm = _subset_min(D[members[b], members])
            has_b = (masks >> b) & 1 == 1
            np.minimum(inner, np.where(has_b, cm[full ^ masks], np.inf), out=inner)
        inner, outer = inner[1:full], to_outside[1:full]
        ties = ties or bool(np.any(inner == outer))
        bad = np.flatnonzero(inner > outer)
        if bad.size:
            mask = int(bad[0]) + 1
            subset = members[[(mask >> b) & 1 == 1 for b in range(m)]]
            sub = D[np.ix_(subset, outside)]
            a, q = np.unravel_index(int(np.argmin(sub)), sub.shape)
            # lowest cluster id among those reaching the minimum
            hits = np.argwhere(sub == sub[a, q])
            cands = sorted((int(labels[outside[j]]), int(subset[i]), int(outside[j])) for i, j in hits)
            other, pa, pq = cands[0]
            witness = MinStabilityWitness(
                cluster=c,
                subset=tuple(int(x) for x in subset),
                other_cluster=other,
                inner=float(inner[mask - 1]),
                outer=float(sub[a, q]),
                pair=(pa, pq),
            )
            return MinStabilityResult(False, witness, ties)
    return MinStabilityResult(True, None, ties)


def witness_violates(inst: Instance, clustering: Clustering, witness: MinStabilityWitness) -> bool:
    """Re-evaluate a witness from scratch."""
    labels = _labels(inst, clustering)
    A = np.asarray(witness.subset)
    rest = np.setdiff1d(np.flatnonzero(labels == witness.cluster), A)
    other = np.flatnonzero(labels == witness.other_cluster)
    if rest.size == 0 or other.size == 0 or np.any(labels[A] != witness.cluster):
        return False
    return bool(inst.dist[np.ix_(A, rest)].min() > inst.dist[np.ix_(A, other)].min())


def clusters_are_tree_nodes(tree: Dendrogram, labels) -> bool:
    labels = np.asarray(labels)
    parent = tree.parent()
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        v = int(members[0])
        while tree.count[v] < len(members):
            v = int(parent[v])
        if tree.count[v] != len(members) or not np.array_equal(tree.members(v), members):
            return False
    return True


def check_min_stability_via_tree(inst: Instance, clustering: Clustering, tree: Dendrogram | None = None) -> bool:
    """Whether every cluster is the member set of some single-linkage tree node."""
    labels = _labels(inst, clustering)
    if tree is None:
        tree = single_linkage_tree(inst)
    return clusters_are_tree_nodes(tree, labels)


# --------------------------------------------------------------------------
# perturbation probe


@dataclass
class ProbeReport:
    """Outcome of sampling random perturbations.

    Zero failures is necessary evidence of resilience at ``alpha``, not a
    proof: resilience quantifies over every perturbation.
    """

    trials: int
    alpha: float
    failures: int
    failing_seeds: list[int] = field(default_factory=list)
    non_unique: int = 0
    resolver: str = "oracle"
    label: str = "necessary-condition sampling"


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial perturbation seed, independent of the order trials run in."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, dtype=np.uint64)[0])


def resilience_probe(
    inst: Instance,
    obj: Objective,
    k: int,
    alpha: float,
    trials: int,
    seed: int = 0,
    *,
    allow_solver: bool = False,
    max_oracle_n: int = DEFAULT_PROBE_MAX_N,
    budget: int | None = None,
) -> ProbeReport:
    """Re-solve ``trials`` random alpha-perturbations and count changed partitions.

    The exhaustive oracle is the re-solver for ``n <= max_oracle_n``.  Beyond
    that the caller must pass ``allow_solver=True`` to use the tree solver,
    which is exact only on min-stable inputs.
    """
    if inst.center_policy == STEINER:
        raise PreconditionError("perturbation probes need data-point centers")
    if trials < 0:
        raise PreconditionError("trials must be non-negative")
    use_oracle = inst.n <= max_oracle_n
    if not use_oracle and not allow_solver:
        raise BudgetExceededError(
            f"n={inst.n} exceeds the oracle limit of {max_oracle_n}; pass allow_solver=True to re-solve with the tree"
        )

    def optimum(instance):
        if use_oracle:
            res = optimal_clustering(instance, obj, k, budget)
            return res.clustering, res.unique
        return solve(instance, obj, k), True

    base, _ = optimum(inst)
    report = ProbeReport(trials=trials, alpha=float(alpha), failures=0, resolver="oracle" if use_oracle else "tree")
    for t in range(trials):
        s = trial_seed(seed, t)
        result, unique = optimum(perturb(inst, PerturbationSpec(alpha=alpha, seed=s)))
        if not unique:
            report.non_unique += 1
        if not result.same_partition(base):
            report.failures += 1
            report.failing_seeds.append(s)
    return report


# --------------------------------------------------------------------------
# combined report


@dataclass
class StabilityReport:
    proximity_factor: float
    min_stable: bool | None
    witness: MinStabilityWitness | None
    corollary_margin: float
    ties: bool = False
    tree_consistent: bool | None = None
    separation_ok: bool | None = None
    alpha: float | None = None
    probe: ProbeReport | None = None

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return "inf" if x > 0 else "-inf" if x < 0 else "nan"
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x

        return clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def stability_report(
    inst: Instance,
    clustering: Clustering,
    alpha: float | None = None,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    probe_trials: int = 0,
    seed: int = 0,
) -> StabilityReport:
    """Everything the checkers can say about one clustering.

    The exact min-stability check is skipped (``min_stable=None``) when it
    would exceed ``exact_budget``; the tree-based check always runs.
    """
    factor = proximity_factor(inst, clustering) if clustering.k >= 2 else math.inf
    try:
        ms = check_min_stability_exact(inst, clustering, exact_budget)
        min_stable, witness, ties = ms.stable, ms.witness, ms.ties
    except BudgetExceededError:
        min_stable, witness, ties = None, None, False
    sep = check_corollary_separation(inst, clustering, alpha if alpha is not None else 1.0)
    report = StabilityReport(
        proximity_factor=factor,
        min_stable=min_stable,
        witness=witness,
        corollary_margin=sep.margin,
        ties=ties,
        tree_consistent=check_min_stability_via_tree(inst, clustering),
        separation_ok=sep.ok if alpha is not None else None,
        alpha=alpha,
    )
    if probe_trials and alpha is not None and clustering.objective is not None:
        report.probe = resilience_probe(inst, clustering.objective, clustering.k, alpha, probe_trials, seed)
    return report
