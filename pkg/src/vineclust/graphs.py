"""Undirected graphs: components, maximum spanning trees and separation."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


def _edge(a, b):
    if a == b:
        raise ValueError(f"self-loop on node {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class UndirectedGraph:
    """Immutable simple graph on hashable, orderable node ids.

    ``weights`` is optional and keyed by the sorted node pair.
    """

    nodes: frozenset
    edges: frozenset = frozenset()
    weights: dict = field(default=None, compare=False)

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(_edge(a, b) for a, b in self.edges)
        for a, b in edges:
            if a not in nodes or b not in nodes:
                raise ValueError(f"edge ({a}, {b}) references a node outside the graph")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        if self.weights is not None:
            w = {_edge(*k): float(v) for k, v in self.weights.items()}
            missing = edges - set(w)
            if missing:
                raise ValueError(f"edges without weight: {sorted(missing)[:5]}")
            object.__setattr__(self, "weights", w)
        adj = {v: set() for v in nodes}
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", {v: frozenset(s) for v, s in adj.items()})

    @classmethod
    def from_adjacency(cls, adjacency, labels=None):
        """Graph from a symmetric 0/1 (or boolean) matrix; labels default to 1..d."""
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a != 0, (a != 0).T):
            raise ValueError("adjacency matrix is not symmetric")
        d = a.shape[0]
        labels = list(labels) if labels is not None else list(range(1, d + 1))
        iu, ju = np.nonzero(np.triu(a != 0, 1))
        return cls(frozenset(labels), frozenset((labels[i], labels[j]) for i, j in zip(iu, ju)))

    def neighbors(self, v):
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    def has_edge(self, a, b):
        return a != b and _edge(a, b) in self.edges

    def subgraph(self, keep):
        keep = frozenset(keep)
        w = None
        edges = frozenset(e for e in self.edges if e[0] in keep and e[1] in keep)
        if self.weights is not None:
            w = {e: self.weights[e] for e in edges}
        return UndirectedGraph(keep, edges, w)

    def adjacency(self, order=None):
        """0/1 adjacency matrix in ``order`` (default: sorted nodes)."""
        order = list(order) if order is not None else sorted(self.nodes)
        pos = {v: k for k, v in enumerate(order)}
        out = np.zeros((len(order), len(order)), dtype=int)
        for a, b in self.edges:
            out[pos[a], pos[b]] = out[pos[b], pos[a]] = 1
        return out

    def __len__(self):
        return len(self.nodes)


def connected_components(g: UndirectedGraph) -> list:
    """Components as sorted tuples, largest first, ties by smallest member."""
    seen = set()
    parts = []
    for start in sorted(g.nodes):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in g.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        parts.append(tuple(sorted(comp)))
    parts.sort(key=lambda c: (-len(c), c[0]))
    return parts


def component_sizes(g):
    return [len(c) for c in connected_components(g)]


class DisconnectedGraphError(ValueError):
    def __init__(self, unreachable):
        self.unreachable = frozenset(unreachable)
        super().__init__(f"edge list does not connect nodes {sorted(self.unreachable)}")


class _DisjointSet:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def max_spanning_tree(nodes: Iterable, weighted_edges: Iterable) -> list:
    """Kruskal maximum spanning tree.

    ``weighted_edges`` yields ``(a, b, weight)``.  Equal weights are broken
    by the lexicographically smallest sorted pair so the result does not
    depend on input order.  Returns sorted pairs in selection order.
    """
    nodes = list(nodes)
    items = []
    for a, b, w in weighted_edges:
        e = _edge(a, b)
        items.append((-float(w), e))
    items.sort()
    ds = _DisjointSet(nodes)
    tree = []
    for _, e in items:
        if ds.union(*e):
            tree.append(e)
            if len(tree) == len(nodes) - 1:
                break
    if len(tree) < len(nodes) - 1:
        root = ds.find(min(nodes))
        raise DisconnectedGraphError(v for v in nodes if ds.find(v) != root)
    return tree


def separates(g: UndirectedGraph, j, l, cond=()) -> bool:
    """True iff every path from ``j`` to ``l`` passes through ``cond``."""
    if j not in g.nodes or l not in g.nodes:
        raise KeyError(f"node {j if j not in g.nodes else l} not in graph")
    if j == l:
        raise ValueError("separation query needs two distinct nodes")
    blocked = set(cond)
    if j in blocked or l in blocked:
        raise ValueError("query nodes must not belong to the separating set")
    seen = {j}
    queue = deque([j])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if w == l:
                return False
            if w not in seen and w not in blocked:
                seen.add(w)
                queue.append(w)
    return True


# ---------------------------------------------------------------------------
# Text formats


def write_edge_list(g: UndirectedGraph, fh):
    """One ``i j [weight]`` line per edge, sorted."""
    for a, b in sorted(g.edges):
        if g.weights is not None:
            fh.write(f"{a} {b} {g.weights[(a, b)]!r}\n")
        else:
            fh.write(f"{a} {b}\n")


def read_edge_list(fh, nodes=None):
    edges = []
    weights = {}
    seen_nodes = set()
    for lineno, line in enumerate(fh, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'i j [weight]', got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
            if len(parts) == 3:
                weights[_edge(a, b)] = float(parts[2])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        edges.append((a, b))
        seen_nodes.update((a, b))
    nodes = frozenset(nodes) if nodes is not None else frozenset(seen_nodes)
    if weights and len(weights) != len({_edge(a, b) for a, b in edges}):
        raise ValueError("either all edges or none must carry a weight")
    return UndirectedGraph(nodes, frozenset(edges), weights or None)
