import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXAMPLE_S
from vineclust.glasso import screening_graph
from vineclust.graphs import (DisconnectedGraphError, UndirectedGraph, connected_components,
                              max_spanning_tree, read_edge_list, separates, write_edge_list)


def graph(n, edges):
    return UndirectedGraph(frozenset(range(1, n + 1)), frozenset(edges))


def spanning_trees(nodes, edges):
    # every subset of |V|-1 edges without a cycle
    nodes = list(nodes)
    for subset in itertools.combinations(edges, len(nodes) - 1):
        if len(connected_components(UndirectedGraph(frozenset(nodes), frozenset(subset)))) == 1:
            yield subset


def graphs_strategy(max_nodes=7):
    return st.integers(2, max_nodes).flatmap(lambda n: st.tuples(
        st.just(n),
        st.sets(st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda e: e[0] != e[1]),
                max_size=n * (n - 1) // 2)))


class TestGraph:
    def test_self_loop(self):
        with pytest.raises(ValueError):
            graph(3, [(1, 1)])

    def test_symmetric_adjacency(self):
        g = graph(4, [(1, 2), (3, 2)])
        a = g.adjacency()
        np.testing.assert_array_equal(a, a.T)
        assert g.has_edge(2, 1) and not g.has_edge(1, 3)
        assert UndirectedGraph.from_adjacency(a).edges == g.edges

    def test_from_adjacency_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            UndirectedGraph.from_adjacency(np.array([[0, 1], [0, 0]]))

    def test_subgraph(self):
        g = graph(4, [(1, 2), (2, 3), (3, 4)])
        assert g.subgraph({2, 3, 4}).edges == {(2, 3), (3, 4)}


class TestComponents:
    def test_edgeless(self):
        assert connected_components(graph(6, [])) == [(1,), (2,), (3,), (4,), (5,), (6,)]

    def test_screening_example(self):
        g = screening_graph(EXAMPLE_S, 0.7438)
        assert connected_components(g) == [(4, 5, 6), (1,), (2,), (3,)]

    def test_screening_example_dense(self):
        assert connected_components(screening_graph(EXAMPLE_S, 0.2070)) == [(1, 2, 3, 4, 5, 6)]

    def test_order(self):
        g = graph(7, [(6, 7), (1, 2), (2, 3), (4, 5)])
        assert connected_components(g) == [(1, 2, 3), (4, 5), (6, 7)]

    @settings(max_examples=50, deadline=None)
    @given(graphs_strategy(), st.randoms())
    def test_permutation_invariant(self, g_spec, rnd):
        n, edges = g_spec
        edges = list(edges)
        shuffled = edges[:]
        rnd.shuffle(shuffled)
        assert connected_components(graph(n, edges)) == connected_components(graph(n, shuffled))

    @settings(max_examples=50, deadline=None)
    @given(graphs_strategy())
    def test_partition_matches_reachability(self, g_spec):
        n, edges = g_spec
        g = graph(n, edges)
        parts = connected_components(g)
        assert sorted(v for c in parts for v in c) == list(range(1, n + 1))
        where = {v: k for k, c in enumerate(parts) for v in c}
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                assert (where[a] == where[b]) == (not separates(g, a, b, ()))


class TestSpanningTree:
    def test_three_nodes(self):
        tree = max_spanning_tree([1, 2, 3], [(1, 2, 0.6), (1, 3, 0.5), (2, 3, 0.1)])
        assert set(tree) == {(1, 2), (1, 3)}

    def test_path(self):
        tree = max_spanning_tree(range(1, 5), [(1, 2, 0.1), (2, 3, 0.2), (3, 4, 0.3)])
        assert set(tree) == {(1, 2), (2, 3), (3, 4)}

    def test_ties_lexicographic(self):
        edges = [(a, b, 1.0) for a in range(1, 5) for b in range(a + 1, 5)]
        assert max_spanning_tree(range(1, 5), edges[::-1]) == [(1, 2), (1, 3), (1, 4)]

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraphError) as err:
            max_spanning_tree([1, 2, 3, 4], [(1, 2, 1.0), (3, 4, 1.0)])
        assert err.value.unreachable == {3, 4}

    @pytest.mark.parametrize("seed", range(100))
    def test_cayley_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        edges = [(a, b) for a in range(1, 5) for b in range(a + 1, 5)]
        w = dict(zip(edges, rng.random(len(edges))))
        trees = list(spanning_trees(range(1, 5), edges))
        assert len(trees) == 16
        best = max(trees, key=lambda t: sum(w[e] for e in t))
        got = max_spanning_tree(range(1, 5), [(a, b, w[(a, b)]) for a, b in edges])
        assert set(got) == set(best)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 10_000))
    def test_weight_dominates_all_trees(self, n, seed):
        rng = np.random.default_rng(seed)
        edges = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < 0.7]
        edges += [(k, k + 1) for k in range(1, n) if (k, k + 1) not in edges]
        w = {e: float(rng.integers(0, 4)) for e in edges}  # many ties
        got = max_spanning_tree(range(1, n + 1), [(a, b, w[(a, b)]) for a, b in edges])
        total = sum(w[e] for e in got)
        assert all(total >= sum(w[e] for e in t) - 1e-12 for t in spanning_trees(range(1, n + 1), edges))


class TestSeparation:
    # five nodes where {1, 4} reach 5 only through 2 or 3
    G5 = graph(5, [(1, 2), (1, 4), (2, 3), (3, 4), (2, 5), (3, 5)])

    def test_five_node_graph(self):
        assert separates(self.G5, 1, 5, {2, 3})
        assert separates(self.G5, 4, 5, {2, 3})
        assert not separates(self.G5, 1, 5, {2})

    def test_component_example(self):
        H = graph(4, [(1, 3), (1, 4), (2, 3), (3, 4)])
        assert separates(H, 2, 4, {3})
        assert not separates(H, 1, 3, {4})

    def test_different_components(self):
        assert separates(graph(4, [(1, 2), (3, 4)]), 1, 3, ())

    def test_errors(self):
        with pytest.raises(KeyError):
            separates(self.G5, 1, 9, ())
        with pytest.raises(ValueError):
            separates(self.G5, 1, 1, ())
        with pytest.raises(ValueError):
            separates(self.G5, 1, 5, {1})

    @settings(max_examples=60, deadline=None)
    @given(graphs_strategy(), st.data())
    def test_monotone_in_conditioning_set(self, g_spec, data):
        n, edges = g_spec
        if n < 3:
            return
        g = graph(n, edges)
        j, l = data.draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
        rest = [v for v in range(1, n + 1) if v not in (j, l)]
        D = set(data.draw(st.lists(st.sampled_from(rest), unique=True)))
        extra = set(data.draw(st.lists(st.sampled_from(rest), unique=True)))
        if separates(g, j, l, D):
            assert separates(g, j, l, D | extra)


class TestEdgeList:
    def test_round_trip(self):
        g = UndirectedGraph(frozenset(range(1, 6)), frozenset([(1, 2), (2, 5)]), {(1, 2): 0.25, (5, 2): -1.5})
        buf = io.StringIO()
        write_edge_list(g, buf)
        assert buf.getvalue() == "1 2 0.25\n2 5 -1.5\n"
        back = read_edge_list(io.StringIO(buf.getvalue()), nodes=range(1, 6))
        assert back == g and back.weights == g.weights

    def test_unweighted(self):
        back = read_edge_list(io.StringIO("# comment\n1 3\n\n3 2\n"))
        assert back.edges == {(1, 3), (2, 3)} and back.weights is None

    def test_malformed(self):
        with pytest.raises(ValueError):
            read_edge_list(io.StringIO("1 2 3 4\n"))
        with pytest.raises(ValueError):
            read_edge_list(io.StringIO("1 2 0.5\n2 3\n"))
