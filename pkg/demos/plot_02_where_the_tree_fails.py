"""
A center-proximity factor below 3 is not enough
================================================

Five points c, p, q, c', p'.  The optimal 2-median clustering is
{c, p, q}, {c', p'} with centers c and c', and every point is more than
twice as close to its own center as to the other one.  Still, single
linkage links p to p' before q joins c, so no pruning of the tree is
optimal.
"""

from stablecluster import (
    Objective,
    check_min_stability_exact,
    check_min_stability_via_tree,
    gen_fig2,
    optimal_clustering,
    proximity_factor,
    single_linkage_tree,
    solve,
)
from stablecluster.generators import FIG2_LABELS

inst = gen_fig2()
obj = Objective("kmedian")

# %%
# Exhaustive optimum and its proximity factor.
opt = optimal_clustering(inst, obj, 2)
names = lambda block: "{" + ", ".join(FIG2_LABELS[i] for i in block) + "}"
print("optimum:", " ".join(names(b) for b in opt.clustering.blocks()), "cost", opt.clustering.total_cost)
print("unique:", opt.unique)
print("proximity factor: %.4f" % proximity_factor(inst, opt.clustering))

# %%
# The merge sequence shows the problem.
for left, right, h in single_linkage_tree(inst).merges():
    print(f"  merge {names(sorted(left))} + {names(sorted(right))} at {h:g}")

# %%
# Both stability checks say the optimum is not min-stable, and the tree
# solver pays for it.
res = check_min_stability_exact(inst, opt.clustering)
print("min-stable:", res.stable, "| tree nodes:", check_min_stability_via_tree(inst, opt.clustering))
print("witness subset:", names(res.witness.subset), "inner", res.witness.inner, "outer", res.witness.outer)
print("solve() cost:", solve(inst, obj, 2).total_cost)
