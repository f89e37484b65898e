import pytest

from kscontext.catalog import (
    CEG_CONTEXTS,
    GHZ10_EVENTS,
    HARDY_FAMILIES,
    CatalogError,
    ceg18,
    ceg18_contexts,
    context_index,
    get_entry,
    ghz10_instance,
    hardy_graph,
    list_entries,
    validate_catalog,
)
from kscontext.graphs import mask_of, maximal_cliques, members, write_graph6
from kscontext.kssets import orthogonality_graph


def test_validates():
    assert validate_catalog()


def test_ceg18_shape():
    vs = ceg18()
    assert (vs.n, vs.dim) == (18, 4)
    # each named context is a set of four mutually orthogonal vectors
    g = orthogonality_graph(vs)
    for c in ceg18_contexts():
        vs_c = members(c)
        assert len(vs_c) == 4
        assert all(g.adj[a] >> b & 1 for a in vs_c for b in vs_c if a != b)


@pytest.mark.parametrize("name,idx", [("C1", 0), ("c7", 6), ("9", 8), (3, 2)])
def test_context_index(name, idx):
    assert context_index(name) == idx


@pytest.mark.parametrize("name", ["C0", "C10", "X", ""])
def test_context_index_rejects(name):
    with pytest.raises(CatalogError):
        context_index(name)


def test_hardy_graph():
    g = hardy_graph()
    assert g.n == 10
    assert members(g.adj[9]) == (1, 2, 6, 7)
    # the three measurement contexts of the conditions are triangles
    for tri in ((0, 1, 2), (3, 4, 5), (6, 7, 8)):
        assert all(g.adj[a] >> b & 1 for a in tri for b in tri if a != b)


def test_ghz10_labels():
    inst = ghz10_instance()
    assert inst.labels == GHZ10_EVENTS
    assert inst.covers_all


def test_entries():
    ids = [e.id for e in list_entries()]
    assert ids == ["ceg18", "hardy", "hardy-family-1", "hardy-family-2", "hardy-family-3", "ghz10"]
    assert get_entry("catalog:hardy").to_dict()["payload"] == write_graph6(hardy_graph())
    d = get_entry("ghz10").to_dict()
    assert d["kind"] == "proof-instance"
    assert d["payload"]["labels"] == list(GHZ10_EVENTS)
    assert len(get_entry("ceg18").to_dict()["payload"]) == 18
    assert len(CEG_CONTEXTS) == 9


def test_unknown_entry():
    with pytest.raises(CatalogError):
        get_entry("nope")


def test_hardy_family_conditions_are_maximal_cliques():
    g = hardy_graph()
    maximal = set(maximal_cliques(g))
    for _, conds in HARDY_FAMILIES:
        for c in conds:
            assert mask_of(c) in maximal
