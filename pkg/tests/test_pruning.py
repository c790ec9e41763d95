import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablecluster.exceptions import PreconditionError
from stablecluster.generators import FIG3_CHECK_SIZES, Fig3Layout, gen_fig2, gen_fig3, gen_resilient
from stablecluster.linkage import single_linkage_tree
from stablecluster.metric import SQUARED_EUCLIDEAN, STEINER, build_from_points
from stablecluster.objectives import K_CENTER, K_MEANS, K_MEDIAN, KINDS, Objective, aggregate, cluster_cost
from stablecluster.oracle import optimal_clustering
from stablecluster.pruning import (
    Clustering,
    best_k_pruning,
    canonical_labels,
    clustering_from_dict,
    make_clustering,
    naive_single_linkage_at_k,
    node_costs,
    partition_of,
    planted_clustering,
    pruning_table,
    solve,
)

from conftest import integer_metric, plane_instance


def all_prunings(tree, v):
    if tree.is_leaf(v):
        return [(v,)]
    out = [(v,)]
    for a in all_prunings(tree, int(tree.left[v])):
        for b in all_prunings(tree, int(tree.right[v])):
            out.append(a + b)
    return out


def brute_best(tree, inst, obj, k):
    best = np.inf
    for p in all_prunings(tree, tree.root):
        if len(p) == k:
            best = min(best, aggregate([cluster_cost(inst, tree.members(v), obj) for v in p], obj))
    return best


LINE = build_from_points([[0], [1], [3], [7]])


def test_line_k2():
    c = solve(LINE, Objective(K_MEDIAN), 2)
    assert c.partition() == {frozenset({0, 1, 2}), frozenset({3})}
    assert c.total_cost == 3 and c.centers == (1, 3)


def test_k1_is_root(rng):
    inst = plane_instance(rng, 9)
    for kind in KINDS:
        c = solve(inst, Objective(kind), 1)
        assert c.total_cost == cluster_cost(inst, range(9), Objective(kind)).value
        assert np.all(c.labels == 0)


def test_k_equals_n(rng):
    inst = plane_instance(rng, 7)
    for kind in KINDS:
        c = solve(inst, Objective(kind), 7)
        assert c.total_cost == 0
        np.testing.assert_array_equal(c.labels, np.arange(7))


def test_bad_k():
    for k in (0, 5):
        with pytest.raises(PreconditionError):
            solve(LINE, Objective(), k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 10), st.sampled_from(KINDS), st.booleans())
def test_dp_matches_exhaustive_prunings(seed, n, kind, ties):
    rng = np.random.default_rng(seed)
    inst = integer_metric(rng, n, high=4) if ties else plane_instance(rng, n)
    tree = single_linkage_tree(inst)
    obj = Objective(kind)
    for k in range(1, n + 1):
        c = best_k_pruning(tree, inst, obj, k)
        assert c.total_cost == pytest.approx(brute_best(tree, inst, obj, k), rel=1e-12, abs=1e-12)
        assert c.k == k


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 9))
def test_dp_matches_exhaustive_prunings_steiner(seed, n):
    rng = np.random.default_rng(seed)
    inst = build_from_points(rng.normal(size=(n, 2)), SQUARED_EUCLIDEAN, center_policy=STEINER)
    tree = single_linkage_tree(inst)
    for k in range(1, n + 1):
        c = best_k_pruning(tree, inst, Objective(K_MEANS), k)
        assert c.total_cost == pytest.approx(brute_best(tree, inst, Objective(K_MEANS), k), rel=1e-9, abs=1e-12)


def test_laminar_output(rng):
    inst = plane_instance(rng, 40)
    tree = single_linkage_tree(inst)
    c = best_k_pruning(tree, inst, Objective(K_MEDIAN), 6)
    for cluster, v in zip(c.blocks(), c.nodes):
        np.testing.assert_array_equal(cluster, tree.members(v))


def test_node_costs_match_direct(rng):
    inst = plane_instance(rng, 15)
    tree = single_linkage_tree(inst)
    for kind in KINDS:
        own = node_costs(tree, inst, Objective(kind))
        for v in range(tree.n_nodes):
            assert own[v] == pytest.approx(cluster_cost(inst, tree.members(v), Objective(kind)).value)


def test_table_infeasible_entries(rng):
    inst = plane_instance(rng, 5)
    tree = single_linkage_tree(inst)
    table = pruning_table(tree, inst, Objective(), 3)
    assert table.entry(0, 2) == np.inf
    assert table.entry(0, 1) == 0
    assert table.entry(tree.root, 3) < np.inf


def test_total_cost_is_recomputable(rng):
    inst = plane_instance(rng, 20)
    for kind in KINDS:
        c = solve(inst, Objective(kind), 4)
        again = aggregate([cluster_cost(inst, b, Objective(kind)) for b in c.blocks()], Objective(kind))
        assert c.total_cost == again
        assert sorted(np.unique(c.labels)) == list(range(4))


def test_uniform_weights_scale_cost(rng):
    inst = plane_instance(rng, 10)
    plain = solve(inst, Objective(K_MEDIAN), 3)
    heavy = solve(inst, Objective(K_MEDIAN, weights=(2, 2, 2)), 3)
    assert heavy.same_partition(plain)
    assert heavy.total_cost == pytest.approx(2 * plain.total_cost)
    with pytest.raises(PreconditionError):
        solve(inst, Objective(K_MEDIAN, weights=(1, 2, 3)), 3)


def test_resilient_instances_match_oracle():
    for seed in range(15):
        planted = gen_resilient(10, 3, 3.0, seed=seed)
        got = solve(planted.instance, Objective(K_MEDIAN), 3)
        res = optimal_clustering(planted.instance, Objective(K_MEDIAN), 3)
        assert got.same_partition(res.clustering)
        assert got.same_partition(planted.clustering)


def test_fig3_scaled():
    layout = Fig3Layout(FIG3_CHECK_SIZES, 0.01)
    inst = gen_fig3(sizes=FIG3_CHECK_SIZES)
    c = solve(inst, Objective(K_MEDIAN), 3)
    assert c.same_partition(layout.target_labels())
    const, coef = layout.analytic_cost()
    assert c.total_cost == pytest.approx(const + coef * 0.01)


def test_fig3_default_naive_fails():
    inst = gen_fig3()
    target = partition_of(Fig3Layout((100, 100, 10, 100), 0.01).target_labels())
    assert partition_of(naive_single_linkage_at_k(inst, 3)) != target
    assert solve(inst, Objective(K_MEDIAN), 3).partition() == target


def test_fig2_tree_fails():
    inst = gen_fig2()
    c = solve(inst, Objective(K_MEDIAN), 2)
    assert c.total_cost == pytest.approx(5.5)
    assert c.partition() != {frozenset({0, 1, 2}), frozenset({3, 4})}


def test_naive_line():
    np.testing.assert_array_equal(naive_single_linkage_at_k(LINE, 2), [0, 0, 0, 1])
    np.testing.assert_array_equal(naive_single_linkage_at_k(LINE, 4), [0, 1, 2, 3])


def test_canonical_labels():
    np.testing.assert_array_equal(canonical_labels([5, 5, 2, 9, 2]), [0, 0, 1, 2, 1])
    assert partition_of([1, 0, 1]) == {frozenset({0, 2}), frozenset({1})}


def test_clustering_json_round_trip(rng):
    inst = plane_instance(rng, 8)
    c = solve(inst, Objective(K_CENTER), 3)
    d = json.loads(c.to_json())
    assert set(d) == {"labels", "centers", "cost", "k", "objective"}
    assert d["objective"] == "kcenter"
    back = clustering_from_dict(d, inst)
    assert back.same_partition(c) and back.total_cost == c.total_cost


def test_planted_clustering_reorders_centers():
    c = planted_clustering(LINE, [1, 1, 0, 0], [3, 0])
    np.testing.assert_array_equal(c.labels, [0, 0, 1, 1])
    assert c.centers == (0, 3)
    assert np.isnan(c.total_cost) and c.to_dict()["cost"] is None


def test_clustering_from_dict_errors():
    with pytest.raises(PreconditionError):
        clustering_from_dict({"labels": [0, 1], "objective": "kmedian"}, LINE)
    with pytest.raises(PreconditionError):
        clustering_from_dict({"labels": [0, 0, 1, 1], "objective": "none"}, LINE)


def test_steiner_centers_are_means():
    inst = build_from_points([[0], [2], [10], [14]], SQUARED_EUCLIDEAN, center_policy=STEINER)
    c = solve(inst, Objective(K_MEANS), 2)
    np.testing.assert_allclose(c.centers, [[1.0], [12.0]])
    assert c.total_cost == pytest.approx(2 + 8)
    assert isinstance(c, Clustering) and make_clustering(inst, c.labels, Objective(K_MEANS)).total_cost == c.total_cost
