"""
Running time of the tree solver
===============================

Single linkage is an O(n^2) minimum spanning tree, node costs are built
bottom-up in O(n^2), and the pruning table adds O(n k^2).  The fitted
exponent in n should be close to 2 or below, since small sizes are
dominated by constant overhead.
"""

from stablecluster.bench import bench, bench_k

rows, exponent = bench(sizes=(250, 500, 1000, 2000), k=10, repeats=3)
for r in rows:
    print(f"n={r.n:5d}  k={r.k}  {r.seconds * 1e3:8.1f} ms")
print(f"fitted exponent: {exponent:.2f}")

# %%
# At fixed n the k^2 term is small next to the n^2 term.
for r in bench_k(n=1000, ks=(2, 10, 40, 80), repeats=3):
    print(f"n={r.n}  k={r.k:3d}  {r.seconds * 1e3:8.1f} ms")
