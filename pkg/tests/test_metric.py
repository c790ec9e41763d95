import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablecluster.exceptions import InstanceError, PreconditionError
from stablecluster.metric import (
    CUSTOM_MASK,
    SQUARED_EUCLIDEAN,
    STEINER,
    WITHIN_CLUSTER,
    Instance,
    PerturbationSpec,
    blowup_within_cluster,
    build_from_points,
    d_min,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    perturb,
    save_instance,
    validate_metric,
)

from conftest import integer_metric, plane_instance


def test_two_point_line():
    inst = build_from_points([[0], [3]])
    np.testing.assert_array_equal(inst.dist, [[0, 3], [3, 0]])


def test_345_triangle():
    assert build_from_points([(0, 0), (3, 4)]).dist[0, 1] == 5


def test_squared_euclidean():
    inst = build_from_points([[0], [1], [3]], SQUARED_EUCLIDEAN)
    assert inst.dist[0, 2] == 9
    np.testing.assert_allclose(inst.metric_matrix()[0, 2], 3)


@pytest.mark.parametrize(
    "matrix",
    [
        [[0, 1], [2, 0]],  # asymmetric
        [[0, -1], [-1, 0]],
        [[1, 1], [1, 0]],  # nonzero diagonal
        [[0, np.nan], [np.nan, 0]],
        [[0, 1, 2], [1, 0, 1]],
    ],
)
def test_instance_rejects_bad_matrices(matrix):
    with pytest.raises(InstanceError):
        Instance(name="bad", dist=np.array(matrix, dtype=float))


def test_points_validation():
    with pytest.raises(InstanceError):
        build_from_points([[0.0]])
    with pytest.raises(InstanceError):
        build_from_points([[0.0, np.inf], [1.0, 1.0]])
    with pytest.raises(InstanceError):
        build_from_points([[0, 1], [2]])


def test_steiner_requires_squared_coordinates():
    pts = [[0.0], [1.0], [5.0]]
    with pytest.raises(InstanceError):
        build_from_points(pts, center_policy=STEINER)
    inst = build_from_points(pts, SQUARED_EUCLIDEAN, center_policy=STEINER)
    assert inst.center_policy == STEINER


def test_instances_are_read_only():
    inst = build_from_points([[0], [1]])
    with pytest.raises(ValueError):
        inst.dist[0, 1] = 7


def test_triangle_violation_reported():
    D = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    rep = validate_metric(Instance(name="t", dist=D))
    assert not rep.ok
    assert rep.n_triangle_violations == 1
    v = rep.violations[0]
    assert v.kind == "triangle" and v.indices == (0, 1, 2)
    assert v.excess == pytest.approx(3.0)


def test_validation_passes_on_metrics(rng):
    assert validate_metric(plane_instance(rng, 30)).ok
    assert validate_metric(integer_metric(rng, 15)).ok


def test_validation_skips_squared_and_perturbed(rng):
    sq = build_from_points([[0], [1], [3]], SQUARED_EUCLIDEAN)
    rep = validate_metric(sq)
    assert rep.ok and rep.skipped_triangle
    p = perturb(plane_instance(rng, 8), PerturbationSpec(alpha=5, seed=1))
    assert validate_metric(p).skipped_triangle


def test_validation_catches_points_mismatch():
    inst = build_from_points([[0], [1], [2]])
    bad = Instance(name="x", dist=inst.dist * 2, points=inst.points, source_metric=inst.source_metric)
    rep = validate_metric(bad)
    assert {v.kind for v in rep.violations} == {"points_mismatch"}


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 15),
    alpha=st.floats(1.0, 10.0),
    seed=st.integers(0, 2**63 - 1),
)
def test_perturbation_envelope(n, alpha, seed):
    inst = plane_instance(np.random.default_rng(n), n)
    out = perturb(inst, PerturbationSpec(alpha=alpha, seed=seed))
    assert np.all(inst.dist <= out.dist)
    assert np.all(out.dist <= alpha * inst.dist)
    assert np.array_equal(out.dist, out.dist.T)
    assert out.perturbed


def test_alpha_one_is_identity(rng):
    inst = plane_instance(rng, 20)
    out = perturb(inst, PerturbationSpec(alpha=1.0, seed=99))
    assert np.array_equal(out.dist, inst.dist)


def test_perturb_is_deterministic(rng):
    inst = plane_instance(rng, 10)
    a = perturb(inst, PerturbationSpec(alpha=2, seed=7)).dist
    b = perturb(inst, PerturbationSpec(alpha=2, seed=7)).dist
    c = perturb(inst, PerturbationSpec(alpha=2, seed=8)).dist
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_perturb_rejects_alpha_below_one():
    with pytest.raises(PreconditionError):
        PerturbationSpec(alpha=0.5)


def test_within_cluster_blowup(rng):
    inst = plane_instance(rng, 6)
    out = perturb(inst, PerturbationSpec(alpha=3, mode=WITHIN_CLUSTER, members=(0, 2, 4)))
    inside = np.ix_([0, 2, 4], [0, 2, 4])
    np.testing.assert_array_equal(out.dist[inside], inst.dist[inside] * 3)
    np.testing.assert_array_equal(out.dist[0, 1], inst.dist[0, 1])
    via_helper = blowup_within_cluster(inst, [4, 2, 0], 3)
    np.testing.assert_array_equal(via_helper.dist, out.dist)


def test_within_cluster_from_clustering(rng):
    from stablecluster.objectives import Objective
    from stablecluster.pruning import make_clustering

    inst = plane_instance(rng, 6)
    c = make_clustering(inst, [0, 0, 1, 1, 1, 0], Objective())
    out = perturb(inst, PerturbationSpec(alpha=2, mode=WITHIN_CLUSTER, cluster_index=1), clustering=c)
    assert out.dist[2, 3] == 2 * inst.dist[2, 3]
    assert out.dist[0, 1] == inst.dist[0, 1]


def test_custom_mask(rng):
    inst = plane_instance(rng, 5)
    out = perturb(inst, PerturbationSpec(alpha=4, mode=CUSTOM_MASK, mask=[(0, 1), (3, 2)]))
    assert out.dist[1, 0] == 4 * inst.dist[0, 1]
    assert out.dist[2, 3] == 4 * inst.dist[2, 3]
    assert out.dist[0, 2] == inst.dist[0, 2]


def test_d_min():
    inst = build_from_points([[0], [1], [3], [7]])
    assert d_min(inst, [0, 1], [2, 3]) == 2
    with pytest.raises(PreconditionError):
        d_min(inst, [0], [0, 1])


def test_json_round_trip(tmp_path, rng):
    for inst in (
        plane_instance(rng, 5),
        integer_metric(rng, 5),
        build_from_points(rng.normal(size=(4, 3)), SQUARED_EUCLIDEAN, center_policy=STEINER),
    ):
        path = tmp_path / "i.json"
        save_instance(inst, path)
        back = load_instance(path)
        np.testing.assert_array_equal(back.dist, inst.dist)
        assert back.center_policy == inst.center_policy
        assert back.source_metric == inst.source_metric or inst.points is None


@pytest.mark.parametrize(
    "obj",
    [
        {"matrix": [[0, 1], [2, 0]]},
        {"matrix": [[0, 1, 2], [1, 0]]},
        {"matrix": [[0, 1], [1, 0]], "center_policy": "steiner"},
        {"points": [[0], [1]], "metric": "manhattan"},
        {"name": "nothing"},
        [1, 2, 3],
    ],
)
def test_loader_rejects(obj):
    with pytest.raises(InstanceError):
        instance_from_dict(obj)


def test_loader_reads_points_format():
    inst = instance_from_dict({"name": "p", "points": [[0, 0], [3, 4]], "metric": "euclidean", "center_policy": "data"})
    assert inst.dist[0, 1] == 5
    assert json.loads(json.dumps(instance_to_dict(inst)))["metric"] == "euclidean"


def test_loader_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(InstanceError):
        load_instance(p)
