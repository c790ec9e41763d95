"""Instance generators.

``gen_fig2`` and ``gen_fig3`` rebuild the two counterexamples for the tree
algorithm and for halting single linkage at k clusters.  Only their
qualitative properties are known, so the distances here are constants
chosen to have exactly those properties; every property is re-checked when
the instance is built.  They need not match any other rendering of the
same examples.

``gen_resilient`` plants ``k`` groups with a prescribed center-proximity
factor, and ``gen_coverage_reduction`` builds the shortest-path metric of
a set system's membership graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import floyd_warshall, shortest_path
from scipy.spatial.distance import cdist

from .exceptions import GeneratorError, InstanceError, PreconditionError
from .metric import (
    DATA_CENTERS,
    EUCLIDEAN,
    SQUARED_EUCLIDEAN,
    STEINER,
    Instance,
    build_from_points,
    validate_metric,
)
from .objectives import K_MEANS, K_MEDIAN, Objective
from .oracle import optimal_clustering, stirling2
from .pruning import Clustering, naive_single_linkage_at_k, partition_of, planted_clustering, solve
from .stability import proximity_factor, proximity_from_distances

# --------------------------------------------------------------------------
# tree algorithm fails: optimum {c, p, q}, {c', p'} is not a pruning of the tree

FIG2_LABELS = ("c", "p", "q", "c'", "p'")
FIG2_OPTIMUM = ((0, 1, 2), (3, 4))
_FIG2 = np.array(
    [
        # c    p    q    c'   p'
        [0.0, 1.0, 2.2, 3.5, 2.5],  # c
        [1.0, 0.0, 3.0, 2.5, 2.0],  # p
        [2.2, 3.0, 0.0, 5.5, 4.7],  # q
        [3.5, 2.5, 5.5, 0.0, 1.1],  # c'
        [2.5, 2.0, 4.7, 1.1, 0.0],  # p'
    ]
)


def gen_fig2() -> Instance:
    """Five points c, p, q, c', p' where tree pruning misses the 2-median optimum.

    Single linkage joins {c, p} and {c', p'} at height 2 before q arrives
    at 2.2, so no 2-pruning of the tree separates {c, p, q} from {c', p'},
    which is the unique optimum (cost 4.3).  The optimum has center
    proximity 2.5 / 1.1 (about 2.27).
    """
    return Instance(name="fig2", dist=_FIG2)


# --------------------------------------------------------------------------
# halting single linkage at k fails


@dataclass(frozen=True)
class Fig3Layout:
    sizes: tuple[int, int, int, int]  # |A|, |B|, |C|, |D|
    eps: float
    d_ac: float = 20.0
    d_bd: float = 19.0
    far: float = 100.0

    def slices(self) -> dict[str, range]:
        out, start = {}, 0
        for name, size in zip("ABCD", self.sizes):
            out[name] = range(start, start + size)
            start += size
        return out

    def target_labels(self) -> np.ndarray:
        """Labels of {A u C}, {B}, {D}."""
        s = self.slices()
        labels = np.empty(sum(self.sizes), dtype=np.intp)
        labels[s["A"]] = 0
        labels[s["C"]] = 0
        labels[s["B"]] = 1
        labels[s["D"]] = 2
        return labels

    def analytic_cost(self) -> tuple[float, float]:
        """(constant, eps coefficient) of the optimal 3-median cost.

        C joins a center inside A at distance d_ac each; every other point
        of A, B and D sits eps from its own center.
        """
        a, b, c, d = self.sizes
        return c * self.d_ac, float((a - 1) + (b - 1) + (d - 1))


def _fig3_matrix(layout: Fig3Layout) -> np.ndarray:
    comp = np.repeat(np.arange(4), layout.sizes)
    between = np.full((4, 4), layout.far)
    between[0, 2] = between[2, 0] = layout.d_ac
    between[1, 3] = between[3, 1] = layout.d_bd
    np.fill_diagonal(between, layout.eps)
    D = between[comp][:, comp]
    np.fill_diagonal(D, 0.0)
    return D


@lru_cache(maxsize=32)
def _verify_fig3(layout: Fig3Layout) -> None:
    inst = Instance(name="fig3-check", dist=_fig3_matrix(layout))
    report = validate_metric(inst)
    if not report.ok:
        raise GeneratorError(f"fig3 distances are not a metric: {report.violations[:3]}")
    target = layout.target_labels()
    if not solve(inst, Objective(K_MEDIAN), 3).same_partition(target):
        raise GeneratorError("fig3: tree pruning does not recover {A u C}, {B}, {D}")
    if partition_of(target) == partition_of(naive_single_linkage_at_k(inst, 3)):
        raise GeneratorError("fig3: halting single linkage at 3 clusters unexpectedly succeeds")
    res = optimal_clustering(inst, Objective(K_MEDIAN), 3)
    if not (res.unique and res.clustering.same_partition(target)):
        raise GeneratorError("fig3: {A u C}, {B}, {D} is not the unique 3-median optimum")


FIG3_CHECK_SIZES = (10, 10, 2, 10)


def gen_fig3(
    size_big: int = 100,
    size_small: int = 10,
    eps: float = 0.01,
    *,
    sizes: Sequence[int] | None = None,
    verify: bool = True,
) -> Instance:
    """Four tight components A, B, C, D; points are laid out A, B, C, D in order.

    Inside a component every distance is ``eps``; d(A, C) = 20,
    d(B, D) = 19 and every other cross distance is 100.  C is small, so
    the 3-median optimum is {A u C}, {B}, {D}, yet single linkage joins B
    with D before A with C.  ``sizes`` overrides (|A|, |B|, |C|, |D|).
    Verification runs the exhaustive oracle, at (10, 10, 2, 10) when the
    requested instance is too big for it.
    """
    sizes = tuple(int(s) for s in sizes) if sizes is not None else (size_big, size_big, size_small, size_big)
    if len(sizes) != 4 or min(sizes) < 2:
        raise PreconditionError("fig3 needs four component sizes, each at least 2")
    layout = Fig3Layout(sizes, float(eps))
    if not (0 < eps < layout.d_bd / (2 * max(sizes))):
        raise PreconditionError(f"eps must lie in (0, {layout.d_bd / (2 * max(sizes)):g}) for these sizes")
    if verify:
        small = sum(sizes) <= 40
        check = layout if small else Fig3Layout(FIG3_CHECK_SIZES, min(float(eps), layout.d_bd / 40))
        _verify_fig3(check)
    return Instance(name=f"fig3(sizes={sizes},eps={eps:g})", dist=_fig3_matrix(layout))


# --------------------------------------------------------------------------
# planted instances with a given center-proximity factor

METRIC_FAMILIES = ("euclidean", "cityblock", "chebyshev", "snowflake", "closure")


@dataclass(frozen=True, eq=False)
class Planted:
    instance: Instance
    clustering: Clustering  # planted labels with designated centers
    factor: float  # proximity_factor(instance, clustering)


def _group_sizes(rng, n: int, k: int) -> np.ndarray:
    return 2 + rng.multinomial(n - 2 * k, np.full(k, 1.0 / k))


def _unit_ball(rng, m: int, dim: int) -> np.ndarray:
    g = rng.normal(size=(m, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(0, 1, size=(m, 1)) ** (1.0 / dim)


def _matrix(points: np.ndarray, family: str, warp: np.ndarray | None) -> np.ndarray:
    if family == "euclidean":
        return cdist(points, points)
    if family == "cityblock":
        return cdist(points, points, "cityblock")
    if family == "chebyshev":
        return cdist(points, points, "chebyshev")
    if family == "snowflake":
        return np.sqrt(cdist(points, points))
    if family == "closure":
        d = cdist(points, points) * warp
        return floyd_warshall(d, directed=False)
    raise PreconditionError(f"unknown metric family {family!r}")


def gen_resilient(
    n: int,
    k: int,
    target_factor: float,
    center_policy: str = DATA_CENTERS,
    seed: int = 0,
    *,
    metric: str = "euclidean",
    dim: int = 2,
    tight: bool = False,
    safety: float = 1.5,
    verify_optimal: bool | None = None,
    max_retries: int = 20,
) -> Planted:
    """Plant ``k`` groups whose designated centers have proximity >= ``target_factor``.

    Each group is drawn inside a ball of radius ``r <= 1`` around an
    anchor; anchors are spread so that the closest two are
    ``(target_factor + 1) * safety`` apart.  With the data policy the
    designated center of a group is the member sitting on its anchor; with
    the Steiner policy (Euclidean only) it is the group centroid.  Points
    are shuffled, so groups are not contiguous.

    ``tight=True`` instead shrinks the anchor spread by bisection until the
    factor is just above the target, which produces boundary cases.
    ``verify_optimal`` (default: on for non-tight instances the oracle can
    afford) also requires the planted partition to be the unique optimum
    (k-median, or k-means for the Steiner policy).

    Metric families for the data policy: ``euclidean``, ``cityblock``,
    ``chebyshev``, ``snowflake`` (square root of Euclidean) and
    ``closure`` (randomly warped Euclidean, then shortest-path closed).
    """
    if not target_factor > 1:
        raise PreconditionError("target_factor must exceed 1")
    if k < 2:
        raise PreconditionError("center proximity needs at least two clusters")
    if n < 2 * k:
        raise PreconditionError("need at least two points per group (n >= 2k)")
    if center_policy not in (DATA_CENTERS, STEINER):
        raise PreconditionError(f"unknown center policy {center_policy!r}")
    if center_policy == STEINER and metric != "euclidean":
        raise PreconditionError("steiner centers need the euclidean family")
    if metric not in METRIC_FAMILIES:
        raise PreconditionError(f"unknown metric family {metric!r}")
    if verify_optimal is None:
        verify_optimal = not tight and stirling2(n, k) <= 100_000
    obj = Objective(K_MEANS if center_policy == STEINER else K_MEDIAN)

    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        sizes = _group_sizes(rng, n, k)
        labels = np.repeat(np.arange(k), sizes)
        radius = rng.uniform(0.3, 1.0, size=k)
        offsets = np.concatenate([_unit_ball(rng, s, dim) * r for s, r in zip(sizes, radius)])
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        if center_policy == STEINER:
            for g in range(k):
                block = slice(starts[g], starts[g] + sizes[g])
                offsets[block] -= offsets[block].mean(axis=0)
        else:
            offsets[starts] = 0.0  # the designated center sits on the anchor
        anchors = rng.normal(size=(k, dim))
        spread = cdist(anchors, anchors)[np.triu_indices(k, 1)].min()
        anchors /= spread  # closest anchor pair now at distance 1
        perm = rng.permutation(n)
        warp = None
        if metric == "closure":
            w = rng.uniform(1.0, 2.0, size=(n, n))
            warp = np.triu(w, 1) + np.triu(w, 1).T
            warp = warp[np.ix_(perm, perm)]
        inv = np.empty(n, dtype=np.intp)
        inv[perm] = np.arange(n)
        shuffled_labels = labels[perm]
        center_idx = inv[starts]  # designated center of group g sits at shuffled index center_idx[g]

        def raw(scale: float):
            """Points, metric matrix and proximity factor, without building an Instance."""
            pts = (anchors[labels] * scale + offsets)[perm]
            if center_policy == STEINER:
                cents = np.stack([pts[shuffled_labels == g].mean(axis=0) for g in range(k)])
                return pts, None, proximity_from_distances(cdist(pts, cents), shuffled_labels)
            D = _matrix(pts, metric, warp)
            D = np.triu(D, 1) + np.triu(D, 1).T
            return pts, D, proximity_from_distances(D[:, center_idx], shuffled_labels)

        scale = (target_factor + 1) * safety * 1.5**attempt
        pts, D, factor = raw(scale)
        if tight:
            hi = scale
            while factor < target_factor and hi <= 1e6:
                hi *= 2
                pts, D, factor = raw(hi)
            lo = 0.0
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                cand = raw(mid)
                if cand[2] >= target_factor:
                    hi, (pts, D, factor) = mid, cand
                else:
                    lo = mid
        if center_policy == STEINER:
            inst = build_from_points(pts, SQUARED_EUCLIDEAN, center_policy=STEINER, name="resilient")
            cents = np.stack([pts[shuffled_labels == g].mean(axis=0) for g in range(k)])
            cl = planted_clustering(inst, shuffled_labels, cents)
        else:
            inst = (
                build_from_points(pts, EUCLIDEAN, name="resilient")
                if metric == "euclidean"
                else Instance(name="resilient", dist=D)
            )
            cl = planted_clustering(inst, shuffled_labels, center_idx)
        # the factor is recomputed on the stored matrix, which is what callers see
        factor = proximity_factor(inst, cl)
        if factor < target_factor:
            continue
        if center_policy == DATA_CENTERS and not validate_metric(inst).ok:
            continue
        if verify_optimal:
            res = optimal_clustering(inst, obj, k)
            if not (res.unique and res.clustering.same_partition(cl)):
                continue
        name = (
            f"resilient(n={n},k={k},target={target_factor:g},policy={center_policy},"
            f"metric={metric},seed={seed},attempt={attempt},tight={tight})"
        )
        return Planted(inst.with_name(name), cl, factor)
    raise GeneratorError(
        f"no instance with proximity >= {target_factor} after {max_retries} attempts (n={n}, k={k}, seed={seed})"
    )


# --------------------------------------------------------------------------
# set systems to k-median


@dataclass(frozen=True)
class CoverageLayout:
    n_sets: int
    universe_size: int

    def set_vertex(self, s: int) -> int:
        return s

    def element_vertex(self, e: int) -> int:
        return self.n_sets + e


def gen_coverage_reduction(sets: Sequence[Iterable[int]], universe_size: int, k: int) -> Instance:
    """Shortest-path metric of the set/element membership graph (unit edges).

    Vertices ``0 .. m-1`` are the sets, ``m .. m+u-1`` the elements.  An
    element is 1 from each set containing it, so it is at least 3 from
    every other set.  Vertices in different connected components are put
    at distance (largest finite distance) + 2, which keeps the triangle
    inequality and the gap of 3.
    """
    sets = [sorted(set(int(e) for e in s)) for s in sets]
    m, u = len(sets), int(universe_size)
    if m == 0 or any(len(s) == 0 for s in sets):
        raise PreconditionError("need at least one set, and no empty sets")
    if k < 1:
        raise PreconditionError("k must be positive")
    covered = set()
    for s in sets:
        if s[0] < 0 or s[-1] >= u:
            raise PreconditionError(f"element ids must lie in [0, {u})")
        covered.update(s)
    if len(covered) != u:
        missing = sorted(set(range(u)) - covered)
        raise PreconditionError(f"elements {missing[:5]} belong to no set (isolated vertices)")
    rows, cols = [], []
    for i, s in enumerate(sets):
        for e in s:
            rows.append(i)
            cols.append(m + e)
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m + u, m + u))
    D = shortest_path(graph, directed=False, unweighted=True)
    finite = np.isfinite(D)
    if not finite.all():
        D[~finite] = D[finite].max() + 2
    inst = Instance(name=f"coverage(m={m},u={u},k={k})", dist=D)
    if not validate_metric(inst).ok:
        raise GeneratorError("coverage metric violates the triangle inequality")
    return inst


def read_set_system(path) -> tuple[list[list[int]], int]:
    """Parse ``m u`` followed by ``m`` lines of space-separated element ids."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        m, u = int(lines[0][0]), int(lines[0][1])
        sets = [[int(x) for x in ln] for ln in lines[1 : 1 + m]]
    except (IndexError, ValueError) as exc:
        raise InstanceError(f"{path}: malformed set system ({exc})") from None
    if len(sets) != m:
        raise InstanceError(f"{path}: expected {m} sets, found {len(sets)}")
    return sets, u
