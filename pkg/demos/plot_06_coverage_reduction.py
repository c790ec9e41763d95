"""
From set systems to k-median
============================

Each set and each element becomes a vertex, with an edge between a set
and each of its elements; distances are shortest paths.  An element is 1
from the sets containing it and at least 3 from every other set.  When k
disjoint sets cover the universe, putting the k centers on them costs
exactly one per element.
"""

from stablecluster import Objective, gen_coverage_reduction, optimal_clustering
from stablecluster.generators import CoverageLayout

sets = [[0, 1], [2, 3, 4], [5]]
inst = gen_coverage_reduction(sets, 6, 3)
layout = CoverageLayout(len(sets), 6)
print(inst.dist.astype(int))

# %%
res = optimal_clustering(inst, Objective("kmedian"), 3)
print("cost:", res.clustering.total_cost, "= universe size 6")
print("centers:", res.clustering.centers, "set vertices are", [layout.set_vertex(s) for s in range(len(sets))])
