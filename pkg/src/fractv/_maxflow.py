"""Integer max-flow / min-cut backends.

Both backends solve the same binary labeling problem: cells carry a
label-0 cost (capacity source->cell) and a label-1 cost (capacity
cell->sink); symmetric pair capacities are paid when the labels across
a pair differ.  All capacities are nonnegative integers, so minimum
cuts are exact and ties resolve canonically:

* the *minimal* optimal labeling is the set of cells reachable from the
  source in the residual graph,
* the *maximal* one is the complement of the cells that reach the sink.

Every optimal labeling is sandwiched between the two.

The pure-Python Dinic backend works on int64 capacities and is used for
small instances where oracle-grade precision matters; large instances
go through ``scipy.sparse.csgraph.maximum_flow``, whose capacities are
int32 internally.
"""

from __future__ import annotations

import time
from collections import deque

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

__all__ = ["DinicGraph", "ScipyGraph", "MaxflowResult"]

_INT32_CAP = 2**31 - 1


class MaxflowResult:
    """Flow value plus the two extreme min-cut source sides."""

    __slots__ = ("flow_int", "minimal", "maximal", "stats")

    def __init__(self, flow_int: int, minimal: np.ndarray, maximal: np.ndarray, stats: dict):
        self.flow_int = flow_int
        self.minimal = minimal
        self.maximal = maximal
        self.stats = stats


class DinicGraph:
    """Dinic max-flow on int64 capacities, pure Python.

    Arcs are stored in twin pairs (arc ``2k`` and ``2k+1`` are reverses
    of each other).  Pair arcs get equal capacity on both twins; unary
    arcs get a zero-capacity twin.
    """

    def __init__(self, n_cells: int, pair_u: np.ndarray, pair_v: np.ndarray):
        self.n_cells = n_cells
        self.source = n_cells
        self.sink = n_cells + 1
        n_nodes = n_cells + 2
        m = len(pair_u)
        # arc layout: [2m pair twins][2n source twins][2n sink twins]
        heads = np.empty(2 * m + 4 * n_cells, dtype=np.int64)
        tails = np.empty_like(heads)
        heads[0 : 2 * m : 2] = pair_v
        tails[0 : 2 * m : 2] = pair_u
        heads[1 : 2 * m : 2] = pair_u
        tails[1 : 2 * m : 2] = pair_v
        cells = np.arange(n_cells)
        base = 2 * m
        tails[base : base + 2 * n_cells : 2] = self.source
        heads[base : base + 2 * n_cells : 2] = cells
        tails[base + 1 : base + 2 * n_cells : 2] = cells
        heads[base + 1 : base + 2 * n_cells : 2] = self.source
        base += 2 * n_cells
        tails[base : base + 2 * n_cells : 2] = cells
        heads[base : base + 2 * n_cells : 2] = self.sink
        tails[base + 1 : base + 2 * n_cells : 2] = self.sink
        heads[base + 1 : base + 2 * n_cells : 2] = cells
        self.heads = heads
        self.n_arcs = len(heads)
        self._m = m
        # adjacency: arc indices grouped by tail node
        order = np.argsort(tails, kind="stable")
        self._adj_arcs = [a.tolist() for a in np.split(order, np.searchsorted(tails[order], np.arange(1, n_nodes)))]
        self._heads_list = heads.tolist()

    def solve(self, pair_cap: np.ndarray, unary0: np.ndarray, unary1: np.ndarray) -> MaxflowResult:
        t0 = time.perf_counter()
        n_cells, m = self.n_cells, self._m
        res = np.zeros(self.n_arcs, dtype=np.int64)
        res[0 : 2 * m] = np.repeat(np.asarray(pair_cap, dtype=np.int64), 2)
        res[2 * m : 2 * m + 2 * n_cells : 2] = unary0
        res[2 * m + 2 * n_cells : : 2] = unary1
        res_l = res.tolist()
        heads = self._heads_list
        adj = self._adj_arcs
        source, sink = self.source, self.sink
        n_nodes = n_cells + 2
        total = 0
        augmentations = 0

        while True:
            # BFS layering on the residual graph
            level = [-1] * n_nodes
            level[source] = 0
            queue = deque([source])
            while queue:
                u = queue.popleft()
                lu = level[u] + 1
                for a in adj[u]:
                    if res_l[a] > 0:
                        v = heads[a]
                        if level[v] < 0:
                            level[v] = lu
                            queue.append(v)
            if level[sink] < 0:
                break
            # blocking flow: iterative DFS with per-node arc pointers
            ptr = [0] * n_nodes
            path: list[int] = []
            u = source
            while True:
                if u == sink:
                    bottleneck = min(res_l[a] for a in path)
                    for a in path:
                        res_l[a] -= bottleneck
                        res_l[a ^ 1] += bottleneck
                    total += bottleneck
                    augmentations += 1
                    for i, a in enumerate(path):
                        if res_l[a] == 0:
                            del path[i:]
                            break
                    u = heads[path[-1]] if path else source
                    continue
                arcs = adj[u]
                advanced = False
                pu = ptr[u]
                lu1 = level[u] + 1
                while pu < len(arcs):
                    a = arcs[pu]
                    if res_l[a] > 0 and level[heads[a]] == lu1:
                        advanced = True
                        break
                    pu += 1
                ptr[u] = pu
                if advanced:
                    path.append(a)
                    u = heads[a]
                else:
                    if u == source:
                        break
                    a = path.pop()
                    u = heads[path[-1]] if path else source
                    ptr[u] += 1  # skip the arc leading to the dead end

        minimal = self._reach_forward(res_l)
        maximal = ~self._reach_backward(res_l)
        stats = {
            "backend": "dinic-int64",
            "nodes": n_cells,
            "arcs": self.n_arcs,
            "augmentations": augmentations,
            "runtime_s": time.perf_counter() - t0,
        }
        return MaxflowResult(total, minimal[:n_cells], maximal[:n_cells], stats)

    def _reach_forward(self, res_l) -> np.ndarray:
        seen = np.zeros(self.n_cells + 2, dtype=bool)
        seen[self.source] = True
        queue = deque([self.source])
        heads, adj = self._heads_list, self._adj_arcs
        while queue:
            u = queue.popleft()
            for a in adj[u]:
                if res_l[a] > 0:
                    v = heads[a]
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
        return seen

    def _reach_backward(self, res_l) -> np.ndarray:
        # nodes that can reach the sink through residual arcs
        seen = np.zeros(self.n_cells + 2, dtype=bool)
        seen[self.sink] = True
        queue = deque([self.sink])
        heads, adj = self._heads_list, self._adj_arcs
        while queue:
            v = queue.popleft()
            # arcs into v are the twins of arcs out of v
            for a in adj[v]:
                if res_l[a ^ 1] > 0:
                    u = heads[a]
                    if not seen[u]:
                        seen[u] = True
                        queue.append(u)
        return seen


class ScipyGraph:
    """Wrapper over ``scipy.sparse.csgraph.maximum_flow`` (int32 capacities).

    The CSR capacity matrix is built once with explicit slots for all
    unary arcs, so successive solves with new unary terms only rewrite
    the data array.
    """

    def __init__(self, n_cells: int, pair_u: np.ndarray, pair_v: np.ndarray, pair_cap: np.ndarray):
        if np.any(pair_cap > _INT32_CAP):
            raise OverflowError("pair capacity exceeds int32 range")
        self.n_cells = n_cells
        self.source = n_cells
        self.sink = n_cells + 1
        n_nodes = n_cells + 2
        cells = np.arange(n_cells, dtype=np.int64)
        rows = np.concatenate([pair_u, pair_v, np.full(n_cells, self.source), cells])
        cols = np.concatenate([pair_v, pair_u, cells, np.full(n_cells, self.sink)])
        caps = np.concatenate(
            [pair_cap, pair_cap, np.zeros(n_cells, np.int64), np.zeros(n_cells, np.int64)]
        ).astype(np.int32)
        g = csr_matrix((caps, (rows, cols)), shape=(n_nodes, n_nodes))
        g.sort_indices()
        self._g = g
        indptr = g.indptr
        # source arcs: the whole row `source`, columns sorted = 0..n-1
        self._src_slice = slice(indptr[self.source], indptr[self.source + 1])
        assert self._src_slice.stop - self._src_slice.start == n_cells
        # sink arc of row x is its last entry (sink has the largest column id)
        self._snk_pos = indptr[1 : n_cells + 1] - 1
        assert np.all(g.indices[self._snk_pos] == self.sink)
        self.n_arcs = g.nnz

    def solve(self, unary0: np.ndarray, unary1: np.ndarray) -> MaxflowResult:
        if np.any(unary0 > _INT32_CAP) or np.any(unary1 > _INT32_CAP):
            raise OverflowError("unary capacity exceeds int32 range")
        t0 = time.perf_counter()
        g = self._g
        g.data[self._src_slice] = unary0.astype(np.int32)
        g.data[self._snk_pos] = unary1.astype(np.int32)
        result = maximum_flow(g, self.source, self.sink)
        flow = result.flow
        # the flow matrix carries reverse entries too, so address it by its
        # own indptr; the source row holds only forward arcs
        fp = flow.indptr
        flow_int = int(np.sum(flow.data[fp[self.source] : fp[self.source + 1]], dtype=np.int64))
        residual = g - flow
        residual.data = np.maximum(residual.data, 0)
        residual.eliminate_zeros()
        fwd = breadth_first_order(residual, self.source, directed=True, return_predecessors=False)
        minimal = np.zeros(self.n_cells + 2, dtype=bool)
        minimal[fwd] = True
        bwd = breadth_first_order(residual.T.tocsr(), self.sink, directed=True, return_predecessors=False)
        reaches_sink = np.zeros(self.n_cells + 2, dtype=bool)
        reaches_sink[bwd] = True
        stats = {
            "backend": "scipy-int32",
            "nodes": self.n_cells,
            "arcs": self.n_arcs,
            "augmentations": None,
            "runtime_s": time.perf_counter() - t0,
        }
        return MaxflowResult(flow_int, minimal[: self.n_cells], ~reaches_sink[: self.n_cells], stats)
