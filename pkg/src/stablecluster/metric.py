"""Clustering instances, metric validation and multiplicative perturbations.

An :class:`Instance` is a dense symmetric distance matrix over ``n`` points,
optionally backed by coordinates.  Instances are immutable: the arrays they
hold are flagged read-only, and every operation that changes distances
returns a new instance.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InstanceError, PreconditionError

EXPLICIT = "explicit_matrix"
EUCLIDEAN = "euclidean"
SQUARED_EUCLIDEAN = "squared_euclidean"
SOURCE_METRICS = (EXPLICIT, EUCLIDEAN, SQUARED_EUCLIDEAN)

DATA_CENTERS = "data_points_only"
STEINER = "steiner_centroid"
CENTER_POLICIES = (DATA_CENTERS, STEINER)

RANDOM_UNIFORM = "random_uniform"
WITHIN_CLUSTER = "within_cluster_blowup"
CUSTOM_MASK = "custom_mask"
PERTURBATION_MODES = (RANDOM_UNIFORM, WITHIN_CLUSTER, CUSTOM_MASK)

#: Hard cap on instance size; the tree algorithm is quadratic in n anyway.
MAX_POINTS = int(os.environ.get("STABLECLUSTER_MAX_POINTS", 20_000))

# names used in the JSON instance format
_JSON_METRIC = {"euclidean": EUCLIDEAN, "sq_euclidean": SQUARED_EUCLIDEAN}
_JSON_METRIC_INV = {v: k for k, v in _JSON_METRIC.items()}
_JSON_POLICY = {"data": DATA_CENTERS, "steiner": STEINER}
_JSON_POLICY_INV = {v: k for k, v in _JSON_POLICY.items()}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """``n`` points with a symmetric distance matrix and a center policy.

    Parameters
    ----------
    dist : (n, n) array
        Symmetric, non-negative, zero diagonal.
    points : (n, d) array, optional
        Coordinates; when given, ``dist`` must be their pairwise distance
        under ``source_metric``.
    source_metric : str
        One of ``explicit_matrix``, ``euclidean``, ``squared_euclidean``.
    center_policy : str
        ``data_points_only`` (centers are input points) or
        ``steiner_centroid`` (k-means with coordinate-mean centers).
    perturbed : bool
        Set on outputs of :func:`perturb`; such matrices need not be metrics.
    """

    name: str
    dist: np.ndarray
    points: np.ndarray | None = None
    source_metric: str = EXPLICIT
    center_policy: str = DATA_CENTERS
    perturbed: bool = False

    def __post_init__(self):
        d = _frozen(self.dist)
        object.__setattr__(self, "dist", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InstanceError(f"distance matrix must be square, got shape {d.shape}")
        n = d.shape[0]
        if n < 1:
            raise InstanceError("instance needs at least one point")
        if n > MAX_POINTS:
            raise InstanceError(f"n={n} exceeds the configured cap of {MAX_POINTS} points")
        if not np.all(np.isfinite(d)):
            raise InstanceError("distance matrix has non-finite entries")
        if np.any(d < 0):
            raise InstanceError("distance matrix has negative entries")
        if np.any(np.diagonal(d) != 0):
            raise InstanceError("distance matrix must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise InstanceError("distance matrix is not symmetric")
        if self.source_metric not in SOURCE_METRICS:
            raise InstanceError(f"unknown source metric {self.source_metric!r}")
        if self.center_policy not in CENTER_POLICIES:
            raise InstanceError(f"unknown center policy {self.center_policy!r}")
        if self.points is not None:
            p = _frozen(self.points)
            if p.ndim != 2 or p.shape[0] != n:
                raise InstanceError("points must be an (n, d) array matching the matrix")
            object.__setattr__(self, "points", p)
        if self.center_policy == STEINER and (
            self.points is None or self.source_metric != SQUARED_EUCLIDEAN
        ):
            raise InstanceError(
                "steiner_centroid centers need coordinates and squared_euclidean distances"
            )

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def metric_matrix(self) -> np.ndarray:
        """Distances in metric units (square root of a squared-Euclidean matrix)."""
        if self.source_metric == SQUARED_EUCLIDEAN:
            return np.sqrt(self.dist)
        return self.dist

    def with_name(self, name: str) -> "Instance":
        return replace(self, name=name)


def pairwise(points: np.ndarray, source_metric: str = EUCLIDEAN) -> np.ndarray:
    if source_metric == EUCLIDEAN:
        d = cdist(points, points, "euclidean")
    elif source_metric == SQUARED_EUCLIDEAN:
        d = cdist(points, points, "sqeuclidean")
    else:
        raise InstanceError(f"cannot derive distances for source metric {source_metric!r}")
    # cdist is not bit-symmetric for every input; mirror the upper triangle
    iu = np.triu_indices(len(d), 1)
    d.T[iu] = d[iu]
    np.fill_diagonal(d, 0.0)
    return d


def build_from_points(
    points: Sequence[Sequence[float]] | np.ndarray,
    source_metric: str = EUCLIDEAN,
    *,
    name: str = "points",
    center_policy: str = DATA_CENTERS,
) -> Instance:
    """Build an instance from coordinates.

    Raises :class:`InstanceError` for fewer than two points, ragged
    dimensions, or non-finite coordinates.
    """
    try:
        p = np.asarray(points, dtype=np.float64)
    except ValueError as exc:
        raise InstanceError(f"points have mismatched dimensions: {exc}") from None
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise InstanceError("points must form an (n, d) array")
    if p.shape[0] < 2:
        raise InstanceError("need at least two points")
    if not np.all(np.isfinite(p)):
        raise InstanceError("non-finite coordinate")
    return Instance(
        name=name,
        dist=pairwise(p, source_metric),
        points=p,
        source_metric=source_metric,
        center_policy=center_policy,
    )


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class MetricViolation:
    kind: str  # "triangle", "points_mismatch", "policy"
    indices: tuple[int, ...]
    excess: float = 0.0


@dataclass
class MetricReport:
    violations: list[MetricViolation] = field(default_factory=list)
    n_triangle_violations: int = 0
    tol: float = 0.0
    skipped_triangle: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:  # truthy iff there is something to report
        return not self.ok


def default_tolerance(dist: np.ndarray) -> float:
    return 1e-9 * float(dist.max(initial=0.0))


def validate_metric(inst: Instance, tol: float | None = None, max_report: int = 100) -> MetricReport:
    """Check the instance invariants that construction does not enforce.

    Structural invariants (square, symmetric, zero diagonal, non-negative)
    are guaranteed by :class:`Instance` itself.  This checks the triangle
    inequality (explicit and Euclidean matrices only; squared Euclidean is
    not a metric, perturbed matrices need not be) and, when coordinates are
    present, that the matrix matches them.  Reports at most ``max_report``
    triangle triples but counts all of them.
    """
    D = inst.dist
    if tol is None:
        tol = default_tolerance(D)
    report = MetricReport(tol=tol)

    if inst.points is not None and inst.source_metric != EXPLICIT:
        ref = pairwise(inst.points, inst.source_metric)
        bad = np.argwhere(np.abs(ref - D) > tol)
        for i, j in bad[bad[:, 0] < bad[:, 1]][:max_report]:
            report.violations.append(
                MetricViolation("points_mismatch", (int(i), int(j)), float(abs(ref[i, j] - D[i, j])))
            )

    if inst.perturbed or inst.source_metric == SQUARED_EUCLIDEAN:
        report.skipped_triangle = True
        return report

    for j in range(inst.n):
        # D[i, k] > D[i, j] + D[j, k] + tol
        excess = D - (D[:, j, None] + D[None, j, :]) - tol
        hits = np.argwhere(excess > 0)
        hits = hits[hits[:, 0] < hits[:, 1]]
        report.n_triangle_violations += len(hits)
        room = max_report - len(report.violations)
        for i, k in hits[: max(room, 0)]:
            report.violations.append(
                MetricViolation("triangle", (int(i), j, int(k)), float(excess[i, k] + tol))
            )
    return report


# --------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class PerturbationSpec:
    """How to draw an alpha-perturbation of a distance matrix.

    ``random_uniform`` multiplies each unordered pair by an independent
    factor drawn from U[1, alpha].  ``within_cluster_blowup`` multiplies the
    pairs inside one member set (``members``, or block ``cluster_index`` of
    the clustering passed to :func:`perturb`) by exactly alpha.
    ``custom_mask`` multiplies the pairs selected by ``mask`` (a boolean
    (n, n) array or a list of index pairs) by exactly alpha.
    """

    alpha: float
    mode: str = RANDOM_UNIFORM
    seed: int = 0
    cluster_index: int | None = None
    members: tuple[int, ...] | None = None
    mask: object = None

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 1:
            raise PreconditionError(f"alpha must be >= 1, got {self.alpha}")
        if self.mode not in PERTURBATION_MODES:
            raise PreconditionError(f"unknown perturbation mode {self.mode!r}")


def _scaled(inst: Instance, dist: np.ndarray, tag: str) -> Instance:
    return Instance(
        name=f"{inst.name}|{tag}",
        dist=dist,
        points=None,
        source_metric=inst.source_metric,
        center_policy=DATA_CENTERS,
        perturbed=True,
    )


def _mask_matrix(n: int, mask) -> np.ndarray:
    if mask is None:
        raise PreconditionError("custom_mask mode needs a mask")
    m = np.asarray(mask)
    if m.dtype == bool and m.shape == (n, n):
        out = m | m.T
    else:
        out = np.zeros((n, n), dtype=bool)
        for i, j in m.reshape(-1, 2):
            out[i, j] = out[j, i] = True
    np.fill_diagonal(out, False)
    return out


def perturb(inst: Instance, spec: PerturbationSpec, clustering=None) -> Instance:
    """Return an alpha-perturbation of ``inst`` (symmetric, not necessarily a metric).

    Every entry satisfies ``d <= d' <= alpha * d`` exactly in floating
    point: factors are drawn, clipped to ``[1, alpha]`` and then multiplied,
    and rounding is monotone.  Deterministic given ``spec.seed``.
    """
    n, D, alpha = inst.n, inst.dist, float(spec.alpha)
    if spec.mode == RANDOM_UNIFORM:
        rng = np.random.default_rng(spec.seed)
        iu = np.triu_indices(n, 1)
        u = np.clip(rng.uniform(1.0, alpha, size=len(iu[0])), 1.0, alpha)
        factors = np.ones((n, n))
        factors[iu] = u
        factors.T[iu] = u
        return _scaled(inst, D * factors, f"perturb(uniform,alpha={alpha:g},seed={spec.seed})")
    if spec.mode == WITHIN_CLUSTER:
        members = spec.members
        if members is None:
            if clustering is None or spec.cluster_index is None:
                raise PreconditionError("within_cluster_blowup needs members or a clustering + cluster_index")
            members = np.flatnonzero(np.asarray(clustering.labels) == spec.cluster_index)
        return blowup_within_cluster(inst, members, alpha)
    m = _mask_matrix(n, spec.mask)
    out = np.where(m, D * alpha, D)
    return _scaled(inst, out, f"perturb(mask,alpha={alpha:g})")


def blowup_within_cluster(inst: Instance, members: Iterable[int], alpha: float) -> Instance:
    """Multiply every distance between two points of ``members`` by ``alpha``."""
    idx = np.unique(np.asarray(list(members), dtype=np.intp))
    if idx.size == 0:
        raise PreconditionError("member set is empty")
    if idx[0] < 0 or idx[-1] >= inst.n:
        raise PreconditionError("member index out of range")
    if alpha < 1:
        raise PreconditionError(f"alpha must be >= 1, got {alpha}")
    D = inst.dist.copy()
    block = np.ix_(idx, idx)
    D[block] = D[block] * alpha
    return _scaled(inst, D, f"blowup({len(idx)} pts,alpha={alpha:g})")


def d_min(inst: Instance, A: Iterable[int], B: Iterable[int]) -> float:
    """Smallest distance between a point of ``A`` and a point of ``B``."""
    a = np.unique(np.asarray(list(A), dtype=np.intp))
    b = np.unique(np.asarray(list(B), dtype=np.intp))
    if a.size == 0 or b.size == 0:
        raise PreconditionError("d_min needs two nonempty sets")
    if np.intersect1d(a, b).size:
        raise PreconditionError("d_min sets must be disjoint")
    return float(inst.dist[np.ix_(a, b)].min())


# --------------------------------------------------------------------------
# JSON


def instance_to_dict(inst: Instance) -> dict:
    if inst.points is not None and inst.source_metric in _JSON_METRIC_INV:
        return {
            "name": inst.name,
            "points": inst.points.tolist(),
            "metric": _JSON_METRIC_INV[inst.source_metric],
            "center_policy": _JSON_POLICY_INV[inst.center_policy],
        }
    return {
        "name": inst.name,
        "matrix": inst.dist.tolist(),
        "center_policy": _JSON_POLICY_INV[inst.center_policy],
    }


def instance_from_dict(obj: dict) -> Instance:
    if not isinstance(obj, dict):
        raise InstanceError("instance JSON must be an object")
    name = str(obj.get("name", "instance"))
    policy = _JSON_POLICY.get(obj.get("center_policy", "data"))
    if policy is None:
        raise InstanceError(f"unknown center_policy {obj.get('center_policy')!r}")
    if "points" in obj:
        metric = _JSON_METRIC.get(obj.get("metric", "euclidean"))
        if metric is None:
            raise InstanceError(f"unknown metric {obj.get('metric')!r}")
        return build_from_points(obj["points"], metric, name=name, center_policy=policy)
    if "matrix" in obj:
        if policy != DATA_CENTERS:
            raise InstanceError("matrix instances only support center_policy 'data'")
        rows = obj["matrix"]
        if not isinstance(rows, list) or any(not isinstance(r, list) or len(r) != len(rows) for r in rows):
            raise InstanceError("matrix must be a square list of lists")
        try:
            m = np.asarray(rows, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InstanceError(f"matrix entries must be numbers: {exc}") from None
        return Instance(name=name, dist=m)
    raise InstanceError("instance JSON needs either 'points' or 'matrix'")


def load_instance(path: str | os.PathLike) -> Instance:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: invalid JSON ({exc})") from None
    return instance_from_dict(obj)


def save_instance(inst: Instance, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)), encoding="utf-8")
