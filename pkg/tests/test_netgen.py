from __future__ import annotations

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgdkit.netgen import (
    Graph,
    GraphError,
    complete_graph,
    dump_edge_list,
    edge_count,
    generate_random_graph,
    is_connected,
    load_edge_list,
    path_graph,
)


def test_two_agents_single_edge():
    for seed in range(5):
        assert generate_random_graph(2, 1.0, seed).edges == ((0, 1),)


def test_three_agents_full_density_is_triangle():
    assert generate_random_graph(3, 1.0, 9).edges == ((0, 1), (0, 2), (1, 2))


def test_hundred_agents_density_point_three():
    g = generate_random_graph(100, 0.3, 7)
    assert len(g.edges) == 1485
    assert is_connected(g)


def test_is_connected_examples():
    assert is_connected(complete_graph(3))
    assert not is_connected(Graph(4, ((0, 1), (2, 3))))
    assert is_connected(path_graph(3))


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError):
        Graph(3, ((0, 0),))
    with pytest.raises(GraphError):
        Graph(3, ((0, 1), (1, 0)))
    with pytest.raises(GraphError):
        Graph(3, ((0, 3),))


def test_generator_rejects_impossible_density():
    with pytest.raises(GraphError):
        generate_random_graph(10, 0.1, 0)  # 4 edges < 9
    with pytest.raises(GraphError):
        generate_random_graph(1, 0.5, 0)
    with pytest.raises(GraphError):
        generate_random_graph(5, 0.0, 0)


def test_retry_bound_reported():
    # 9 of 45 edges on 10 agents is almost never a tree
    with pytest.raises(GraphError, match="retries"):
        generate_random_graph(10, 0.2, 0, max_retries=0)


def test_determinism():
    a = generate_random_graph(30, 0.2, 42)
    b = generate_random_graph(30, 0.2, 42)
    assert a.edges == b.edges
    assert a.edges != generate_random_graph(30, 0.2, 43).edges


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), eta=st.floats(0.15, 1.0), seed=st.integers(0, 2**63 - 1))
def test_generated_graphs_connected_with_exact_edge_count(n, eta, seed):
    m = edge_count(n, eta)
    if m < n - 1:
        with pytest.raises(GraphError):
            generate_random_graph(n, eta, seed)
        return
    g = generate_random_graph(n, eta, seed)
    assert len(g.edges) == m
    assert is_connected(g)
    ref = nx.Graph()
    ref.add_nodes_from(range(n))
    ref.add_edges_from(g.edges)
    assert nx.is_connected(ref)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 15), data=st.data())
def test_is_connected_matches_networkx(n, data):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    ref = nx.Graph()
    ref.add_nodes_from(range(n))
    ref.add_edges_from(chosen)
    assert is_connected(Graph(n, tuple(chosen))) == nx.is_connected(ref)


def test_edge_list_round_trip(tmp_path):
    g = generate_random_graph(12, 0.4, 5)
    path = tmp_path / "g.txt"
    dump_edge_list(g, path)
    text = path.read_text().splitlines()
    assert text[0] == "n=12"
    assert load_edge_list(path) == g
