import itertools
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kscontext.graphs import (
    BudgetExceeded,
    ExclusivityGraph,
    InvalidCharacter,
    LengthMismatch,
    NonzeroPadding,
    all_cliques,
    automorphism_generators,
    canonical_form,
    complement,
    enumerate_nonisomorphic_graphs,
    graph_counts,
    is_clique,
    is_independent,
    mask_of,
    maximal_cliques,
    maximal_independent_sets,
    members,
    parse_graph6,
    read_graph6_file,
    write_graph6,
)

from conftest import graphs, random_graph


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


class TestGraph6:
    def test_known_strings(self):
        assert write_graph6(ExclusivityGraph.complete(3)) == "Bw"
        assert write_graph6(ExclusivityGraph.cycle(5)) == "Dhc"
        assert parse_graph6("Bw") == ExclusivityGraph.complete(3)
        assert parse_graph6(">>graph6<<Dhc") == ExclusivityGraph.cycle(5)
        assert parse_graph6("@").n == 1

    def test_long_size_form(self):
        g = ExclusivityGraph.cycle(63)
        s = write_graph6(g)
        assert s.startswith("~")
        assert parse_graph6(s) == g
        assert s.encode() == nx.to_graph6_bytes(to_nx(g), header=False).strip()

    def test_round_trip_random(self, rng):
        for _ in range(10_000):
            g = random_graph(rng, rng.randint(1, 12), rng.random())
            s = write_graph6(g)
            assert parse_graph6(s) == g

    @settings(max_examples=200, deadline=None)
    @given(graphs(max_n=12))
    def test_agrees_with_networkx(self, g):
        ours = write_graph6(g)
        theirs = nx.to_graph6_bytes(to_nx(g), header=False).decode().strip()
        assert ours == theirs
        back = nx.from_graph6_bytes(ours.encode())
        assert sorted(tuple(sorted(e)) for e in back.edges()) == g.edges()

    def test_errors(self):
        with pytest.raises(InvalidCharacter):
            parse_graph6("D h")
        with pytest.raises(LengthMismatch):
            parse_graph6("Dh")
        with pytest.raises(LengthMismatch):
            parse_graph6("")
        with pytest.raises(NonzeroPadding):
            parse_graph6("Bx")

    def test_read_file(self, tmp_path):
        p = tmp_path / "g.g6"
        p.write_text(">>graph6<<\nBw\n\nDhc\n")
        assert [g.n for g in read_graph6_file(p)] == [3, 5]


class TestGraph:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExclusivityGraph(2, (0b10, 0))  # not symmetric
        with pytest.raises(ValueError):
            ExclusivityGraph(1, (0b1,))  # self-loop

    def test_induced_and_relabel(self):
        g = ExclusivityGraph.cycle(5)
        sub = g.induced_subgraph([0, 1, 2])
        assert sub.edges() == [(0, 1), (1, 2)]
        r = g.relabel([1, 2, 3, 4, 0])
        assert r.has_edge(1, 2) and r.has_edge(0, 1)


class TestCliques:
    @settings(max_examples=150, deadline=None)
    @given(graphs(max_n=10))
    def test_maximal_cliques_match_networkx(self, g):
        ours = sorted(maximal_cliques(g))
        theirs = sorted(mask_of(c) for c in nx.find_cliques(to_nx(g)))
        assert ours == theirs
        for i in maximal_independent_sets(g):
            assert is_independent(g, i)
        assert sorted(maximal_independent_sets(g)) == sorted(maximal_cliques(complement(g)))

    @settings(max_examples=100, deadline=None)
    @given(graphs(max_n=8))
    def test_all_cliques_complete(self, g):
        expect = [
            m for m in range(1, 1 << g.n) if is_clique(g, m)
        ]
        assert sorted(all_cliques(g)) == sorted(expect)


class TestCanonical:
    @settings(max_examples=200, deadline=None)
    @given(graphs(max_n=10), st.randoms(use_true_random=False))
    def test_relabeling_invariance(self, g, r):
        perm = list(range(g.n))
        r.shuffle(perm)
        h = g.relabel(perm)
        lab, key = canonical_form(g)
        assert canonical_form(h)[1] == key
        assert write_graph6(g.relabel(lab)) == key
        assert nx.is_isomorphic(to_nx(parse_graph6(key)), to_nx(g))

    @settings(max_examples=100, deadline=None)
    @given(graphs(max_n=8))
    def test_automorphisms_are_automorphisms(self, g):
        for p in automorphism_generators(g):
            assert g.relabel(p) == g

    def test_distinguishes_non_isomorphic(self):
        keys = {canonical_form(g)[1] for g in enumerate_nonisomorphic_graphs(6)}
        assert len(keys) == 156


class TestGeneration:
    def test_counts_small(self):
        assert graph_counts(7) == [1, 2, 4, 11, 34, 156, 1044]

    def test_representatives_are_canonical_and_pairwise_non_isomorphic(self):
        gs = list(enumerate_nonisomorphic_graphs(5))
        for g in gs:
            assert canonical_form(g)[1] == write_graph6(g)
        for a, b in itertools.combinations(gs, 2):
            assert not nx.is_isomorphic(to_nx(a), to_nx(b))

    def test_budget(self, monkeypatch):
        with pytest.raises(BudgetExceeded):
            list(enumerate_nonisomorphic_graphs(10))
        monkeypatch.setenv("KSCONTEXT_MAX_GEN_VERTICES", "4")
        with pytest.raises(BudgetExceeded):
            list(enumerate_nonisomorphic_graphs(5))
