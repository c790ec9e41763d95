"""
Why stopping single linkage at k clusters is not enough
=======================================================

Four tight groups A, B, C and D.  A and C sit 20 apart, B and D 19 apart,
and everything else is far away.  C is tiny, so the cheapest 3-median
clustering folds it into A.  Single linkage, however, joins B with D
first, and halting it at three clusters gives the wrong answer.  Keeping
the whole tree and choosing the best 3 nodes fixes this.
"""

from stablecluster import Objective, gen_fig3, naive_single_linkage_at_k, solve
from stablecluster.generators import Fig3Layout
from stablecluster.pruning import make_clustering, partition_of

# %%
# The full-size instance has 310 points.
inst = gen_fig3()
layout = Fig3Layout((100, 100, 10, 100), 0.01)
const, coef = layout.analytic_cost()
print(f"n = {inst.n}; optimal cost = {const:g} + {coef:g} * eps")

# %%
# Halting single linkage at k = 3.
obj = Objective("kmedian")
naive = make_clustering(inst, naive_single_linkage_at_k(inst, 3), obj)
print("halted single linkage, cluster sizes:", sorted(len(b) for b in naive.blocks()), "cost", round(naive.total_cost, 2))

# %%
# The best 3-pruning of the full tree.
best = solve(inst, obj, 3)
print("tree + dynamic program, cluster sizes:", sorted(len(b) for b in best.blocks()), "cost", round(best.total_cost, 2))
print("recovers {A u C}, {B}, {D}:", best.partition() == partition_of(layout.target_labels()))
