"""Configuration-model networks over a population's true degree sequence."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .types import Population, ValidationError


class NetworkError(RuntimeError):
    """Stub matching could not produce a graph with the requested properties."""


class Graph:
    """Undirected multigraph in CSR form.

    ``neighbors(i)`` lists one entry per incident edge end, so a self-loop
    contributes ``i`` twice and the list length always equals the degree.
    """

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, edges: np.ndarray):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        for a in (self.indptr, self.indices, self.edges):
            a.setflags(write=False)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Sequence[Tuple[int, int]]) -> "Graph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_nodes), out=indptr[1:])
        return cls(indptr, dst[order], e)

    @property
    def n_nodes(self) -> int:
        return self.indptr.size - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @cached_property
    def adjacency(self) -> List[List[int]]:
        ind = self.indices.tolist()
        ptr = self.indptr.tolist()
        return [ind[ptr[i] : ptr[i + 1]] for i in range(self.n_nodes)]

    @cached_property
    def self_loops(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))

    @cached_property
    def multi_edges(self) -> int:
        """Number of surplus parallel edges (an edge of multiplicity m adds m - 1)."""
        lo = np.minimum(self.edges[:, 0], self.edges[:, 1])
        hi = np.maximum(self.edges[:, 0], self.edges[:, 1])
        _, counts = np.unique(lo * self.n_nodes + hi, return_counts=True)
        return int((counts - 1).sum())

    @property
    def is_simple(self) -> bool:
        return self.self_loops == 0 and self.multi_edges == 0

    @cached_property
    def component_labels(self) -> np.ndarray:
        n = self.n_nodes
        m = csr_matrix(
            (np.ones(self.indices.size), self.indices, self.indptr), shape=(n, n)
        )
        _, labels = connected_components(m, directed=False)
        return labels

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max()) + 1 if self.n_nodes else 0

    @property
    def connected(self) -> bool:
        return self.n_components == 1

    @cached_property
    def bipartite(self) -> bool:
        adj = self.adjacency
        color = [-1] * self.n_nodes
        for root in range(self.n_nodes):
            if color[root] >= 0:
                continue
            color[root] = 0
            queue = deque([root])
            while queue:
                u = queue.popleft()
                for v in adj[u]:
                    if color[v] < 0:
                        color[v] = 1 - color[u]
                        queue.append(v)
                    elif color[v] == color[u]:
                        return False
        return True

    def group_assortativity(self, group: np.ndarray) -> float:
        """Newman's categorical assortativity of the realized edges."""
        g = np.asarray(group)
        labels = np.unique(g)
        idx = np.searchsorted(labels, g)
        e = np.zeros((labels.size, labels.size))
        a, b = idx[self.edges[:, 0]], idx[self.edges[:, 1]]
        np.add.at(e, (a, b), 1.0)
        np.add.at(e, (b, a), 1.0)
        total = e.sum()
        if total == 0:
            return float("nan")
        e /= total
        ab = e.sum(axis=1) @ e.sum(axis=0)
        if np.isclose(ab, 1.0):
            return float("nan")
        return float((np.trace(e) - ab) / (1.0 - ab))

    def cross_group_edges(self, group: np.ndarray) -> int:
        g = np.asarray(group)
        return int(np.count_nonzero(g[self.edges[:, 0]] != g[self.edges[:, 1]]))

    def summary(self) -> dict:
        return {
            "nodes": self.n_nodes,
            "edges": int(self.edges.shape[0]),
            "components": self.n_components,
            "connected": self.connected,
            "bipartite": self.bipartite,
            "self_loops": self.self_loops,
            "multi_edges": self.multi_edges,
        }


@dataclass(frozen=True)
class Bottleneck:
    """Two communities (group labels 0 and 1) joined by few edges.

    At most ``cross_fraction`` of all stubs are spent on cross-community
    edges (one more if needed to keep both sides' stub counts even).
    """

    cross_fraction: float
    communities: int = 2

    def __post_init__(self):
        if self.communities != 2:
            raise ValidationError("bottleneck mode supports exactly two communities")
        if not 0 <= self.cross_fraction <= 1:
            raise ValidationError("cross_fraction must lie in [0, 1]")


def _pair_uniform(stubs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(stubs).reshape(-1, 2)


def _pair_homophilous(
    stub_node: np.ndarray, stub_group: np.ndarray, h: float, rng: np.random.Generator
) -> np.ndarray:
    """Sequential matching: each stub draws a same-group partner w.p. h, else any."""
    S = stub_node.size
    order = rng.permutation(S)
    pool = order.tolist()
    pos = [0] * S
    for i, s in enumerate(pool):
        pos[s] = i
    grp = stub_group.tolist()
    gpools = {}
    gpos = [0] * S
    for s in pool:
        lst = gpools.setdefault(grp[s], [])
        gpos[s] = len(lst)
        lst.append(s)

    def remove(s):
        i = pos[s]
        last = pool.pop()
        if last != s:
            pool[i] = last
            pos[last] = i
        lst = gpools[grp[s]]
        j = gpos[s]
        last = lst.pop()
        if last != s:
            lst[j] = last
            gpos[last] = j

    u = rng.random(2 * S).tolist()
    ui = 0
    edges = []
    while pool:
        s = pool[-1]
        remove(s)
        same = gpools[grp[s]]
        if same and u[ui] < h:
            partner = same[int(u[ui + 1] * len(same))]
        else:
            partner = pool[int(u[ui + 1] * len(pool))]
        ui += 2
        remove(partner)
        edges.append((stub_node[s], stub_node[partner]))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def _pair_bottleneck(
    stub_node: np.ndarray, stub_group: np.ndarray, bn: Bottleneck, rng: np.random.Generator
) -> np.ndarray:
    a = stub_node[stub_group == 0]
    b = stub_node[stub_group == 1]
    if a.size + b.size != stub_node.size:
        raise ValidationError("bottleneck mode needs group labels 0 and 1 on every unit")
    S = stub_node.size
    cap = int(np.floor(bn.cross_fraction * S / 2))
    m = min(cap, a.size, b.size)
    if (a.size - m) % 2:
        m = m - 1 if m > 0 else 1
    a = rng.permutation(a)
    b = rng.permutation(b)
    cross = np.stack([a[:m], b[:m]], axis=1)
    within_a = _pair_uniform(a[m:], rng)
    within_b = _pair_uniform(b[m:], rng)
    return np.concatenate([cross, within_a, within_b])


def build_network(
    pop: Population,
    homophily: float = 0.0,
    bottleneck: Optional[Bottleneck] = None,
    rng_seed=None,
    simple: bool = False,
    max_retries: int = 1000,
) -> Graph:
    """Realize the population's true degree sequence by configuration-model stub matching.

    Self-loops and parallel edges are kept in multigraph mode. With
    ``simple=True`` the matching is redrawn until it is simple, failing with
    :class:`NetworkError` after ``max_retries`` attempts.
    """
    if not 0.0 <= homophily <= 1.0:
        raise ValidationError("homophily must lie in [0, 1]")
    d = pop.true_degree
    if int(d.sum()) % 2:
        raise ValidationError("sum of true degrees is odd; no network realization exists")
    if (homophily > 0 or bottleneck is not None) and pop.group is None:
        raise ValidationError("homophily and bottleneck modes need group labels")
    rng = np.random.default_rng(rng_seed)
    stub_node = np.repeat(np.arange(pop.size, dtype=np.int64), d)
    stub_group = None if pop.group is None else np.repeat(pop.group, d)

    for _ in range(max_retries if simple else 1):
        if bottleneck is not None:
            edges = _pair_bottleneck(stub_node, stub_group, bottleneck, rng)
        elif homophily > 0:
            edges = _pair_homophilous(stub_node, stub_group, homophily, rng)
        else:
            edges = _pair_uniform(stub_node, rng)
        graph = Graph.from_edges(pop.size, edges)
        if not simple or graph.is_simple:
            return graph
    raise NetworkError(
        f"no simple realization found after {max_retries} stub-matching attempts; "
        "lower the maximum degree or use multigraph mode"
    )

