"""Full single-linkage merge tree.

The tree is built in O(n^2) time: Prim's algorithm over the dense matrix
yields the merge heights, and the merges are replayed in height order with
a union-find.  Heights that occur once are unambiguous.  Heights shared by
several merges are replayed exactly as the textbook agglomerative procedure
would do them: among all cluster pairs at distance ``h``, merge the pair
whose (smaller min-leaf, larger min-leaf) is lexicographically smallest,
then repeat.  Those levels need every point pair at distance ``h``, not
just the MST edges, so they cost one extra pass over the matrix.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

from .metric import Instance


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Binary merge tree with ``2n - 1`` nodes.

    Nodes ``0 .. n-1`` are the leaves (node ``i`` is point ``i``); internal
    node ``n + t`` is the ``t``-th merge.  ``left``/``right`` are ``-1`` for
    leaves.  The left child of a merge is the cluster with the smaller
    minimum leaf index.
    """

    n: int
    left: np.ndarray
    right: np.ndarray
    height: np.ndarray
    count: np.ndarray
    min_leaf: np.ndarray
    tie_heights: tuple[float, ...] = field(default=())

    @property
    def root(self) -> int:
        return 2 * self.n - 2

    @property
    def n_nodes(self) -> int:
        return 2 * self.n - 1

    def is_leaf(self, node: int) -> bool:
        return node < self.n

    @property
    def has_ties(self) -> bool:
        return bool(self.tie_heights)

    def parent(self) -> np.ndarray:
        par = np.full(self.n_nodes, -1, dtype=np.intp)
        internal = np.arange(self.n, self.n_nodes)
        par[self.left[internal]] = internal
        par[self.right[internal]] = internal
        return par

    def members(self, node: int) -> np.ndarray:
        """Sorted point indices under ``node``."""
        out, stack = [], [node]
        while stack:
            v = stack.pop()
            if v < self.n:
                out.append(v)
            else:
                stack.append(self.left[v])
                stack.append(self.right[v])
        return np.sort(np.asarray(out, dtype=np.intp))

    def merges(self) -> list[tuple[frozenset, frozenset, float]]:
        """Merge sequence as (left members, right members, height) triples."""
        sets: list[frozenset] = [frozenset([i]) for i in range(self.n)]
        out = []
        for v in range(self.n, self.n_nodes):
            a, b = sets[self.left[v]], sets[self.right[v]]
            out.append((a, b, float(self.height[v])))
            sets.append(a | b)
        return out

    def to_linkage(self) -> np.ndarray:
        """scipy-style ``(n-1, 4)`` linkage matrix."""
        internal = np.arange(self.n, self.n_nodes)
        return np.column_stack(
            [self.left[internal], self.right[internal], self.height[internal], self.count[internal]]
        ).astype(float)

    def to_json(self) -> str:
        nodes = []
        for v in range(self.n_nodes):
            if v < self.n:
                nodes.append({"id": v, "kind": "leaf", "children": [], "height": 0.0})
            else:
                nodes.append(
                    {
                        "id": v,
                        "kind": "internal",
                        "children": [int(self.left[v]), int(self.right[v])],
                        "height": float(self.height[v]),
                    }
                )
        return json.dumps(nodes)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra


def mst_edges(D: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Prim's algorithm on a dense matrix; returns (u, v, weight) arrays of n-1 edges."""
    n = D.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = D[0].copy()
    via = np.zeros(n, dtype=np.intp)
    in_tree[0] = True
    best[0] = np.inf
    us = np.empty(n - 1, dtype=np.intp)
    vs = np.empty(n - 1, dtype=np.intp)
    ws = np.empty(n - 1)
    for t in range(n - 1):
        v = int(np.argmin(best))
        us[t], vs[t], ws[t] = via[v], v, D[via[v], v]
        in_tree[v] = True
        best[v] = np.inf
        closer = (D[v] < best) & ~in_tree
        best[closer] = D[v][closer]
        via[closer] = v
    return us, vs, ws


def single_linkage_tree(inst: Instance) -> Dendrogram:
    """Run single linkage until one cluster remains and return the whole tree.

    Ties are broken deterministically: among all cluster pairs at the
    current minimum distance, the pair with the lexicographically smallest
    (smaller min-leaf index, larger min-leaf index) merges first.  Heights
    at which more than one merge happens are listed in ``tie_heights``.
    """
    D = inst.dist
    n = inst.n
    size = 2 * n - 1
    left = np.full(size, -1, dtype=np.intp)
    right = np.full(size, -1, dtype=np.intp)
    height = np.zeros(size)
    count = np.ones(size, dtype=np.intp)
    min_leaf = np.arange(size, dtype=np.intp)

    if n == 1:
        return Dendrogram(1, left, right, height, count, min_leaf)

    us, vs, ws = mst_edges(D)
    order = np.argsort(ws, kind="stable")
    us, vs, ws = us[order], vs[order], ws[order]
    levels, starts, mult = np.unique(ws, return_index=True, return_counts=True)
    tie_levels = levels[mult > 1]

    # all point pairs at a tied height, grouped by height
    tie_pairs: dict[float, np.ndarray] = {}
    if tie_levels.size:
        iu, ju = np.triu_indices(n, 1)
        vals = D[iu, ju]
        hit = np.isin(vals, tie_levels)
        iu, ju, vals = iu[hit], ju[hit], vals[hit]
        srt = np.argsort(vals, kind="stable")
        iu, ju, vals = iu[srt], ju[srt], vals[srt]
        bounds = np.searchsorted(vals, tie_levels, side="left")
        ends = np.searchsorted(vals, tie_levels, side="right")
        for h, a, b in zip(tie_levels, bounds, ends):
            tie_pairs[float(h)] = np.column_stack([iu[a:b], ju[a:b]])

    uf = _UnionFind(n)
    node_of = list(range(n))  # union-find root -> current tree node
    next_id = n

    def merge(ra: int, rb: int, h: float) -> None:
        nonlocal next_id
        a, b = node_of[ra], node_of[rb]
        if min_leaf[a] > min_leaf[b]:
            a, b = b, a
        v = next_id
        next_id += 1
        left[v], right[v], height[v] = a, b, h
        count[v] = count[a] + count[b]
        min_leaf[v] = min_leaf[a]
        node_of[uf.union(ra, rb)] = v

    for h, start, m in zip(levels, starts, mult):
        h = float(h)
        if m == 1:
            merge(uf.find(int(us[start])), uf.find(int(vs[start])), h)
            continue
        # level with several merges: graph on the clusters alive at height h
        adj: dict[int, set[int]] = {}
        for i, j in tie_pairs[h]:
            ri, rj = uf.find(int(i)), uf.find(int(j))
            if ri != rj:
                adj.setdefault(ri, set()).add(rj)
                adj.setdefault(rj, set()).add(ri)
        key = {r: int(min_leaf[node_of[r]]) for r in adj}
        seen: set[int] = set()
        # a cluster with the globally smallest min-leaf keeps absorbing its
        # smallest-min-leaf neighbour until its component at this level is used up
        for start_root in sorted(adj, key=key.__getitem__):
            if start_root in seen:
                continue
            seen.add(start_root)
            current = start_root
            frontier = [(key[r], r) for r in adj[start_root]]
            heapq.heapify(frontier)
            while frontier:
                _, r = heapq.heappop(frontier)
                if r in seen:
                    continue
                seen.add(r)
                merge(uf.find(current), uf.find(r), h)
                current = uf.find(current)
                for s in adj[r]:
                    if s not in seen:
                        heapq.heappush(frontier, (key[s], s))
    assert next_id == size
    return Dendrogram(
        n, left, right, height, count, min_leaf, tie_heights=tuple(float(t) for t in tie_levels)
    )


def cut_at_k(tree: Dendrogram, k: int) -> np.ndarray:
    """Labels obtained by stopping the merge sequence when ``k`` clusters remain."""
    n = tree.n
    labels = np.empty(n, dtype=np.intp)
    # the k clusters are the nodes created before merge n-k whose parent is created at or after it
    limit = n + (n - k)  # node ids >= limit were never created
    par = tree.parent()
    tops = [v for v in range(limit) if par[v] == -1 or par[v] >= limit]
    tops.sort(key=lambda v: tree.min_leaf[v])
    for c, v in enumerate(tops):
        labels[tree.members(v)] = c
    return labels
