"""Built-in datasets: the 18-vector CEG set, the Hardy graph and the 10-event GHZ instance."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any

from .graphs import ExclusivityGraph, is_clique, mask_of, members
from .kssets import VectorSet, find_complete_contexts, ks_to_ghz, orthogonality_graph, verify_ks_set
from .proofsearch import ProofInstance

__all__ = [
    "CEG_VECTORS",
    "CEG_CONTEXTS",
    "HARDY_EVENTS",
    "HARDY_FAMILIES",
    "GHZ10_EVENTS",
    "CatalogEntry",
    "CatalogError",
    "ceg18",
    "ceg18_contexts",
    "context_index",
    "hardy_graph",
    "hardy_instance",
    "ghz10_instance",
    "get_entry",
    "list_entries",
    "validate_catalog",
]

CEG_VECTORS: tuple[tuple[int, ...], ...] = (
    (1, 0, 0, 0),
    (0, 0, 0, 1),
    (0, 1, 1, 0),
    (0, 1, -1, 0),
    (1, 0, 0, 1),
    (1, 1, 1, -1),
    (-1, 1, 1, 1),
    (1, 1, -1, 1),
    (1, 0, 1, 0),
    (0, 1, 0, -1),
    (1, 0, -1, 0),
    (1, -1, 1, -1),
    (1, 1, 1, 1),
    (1, 1, -1, -1),
    (1, -1, 0, 0),
    (0, 0, 1, -1),
    (0, 0, 1, 1),
    (0, 1, 0, 0),
)

# the nine complete contexts, by name
CEG_CONTEXTS: dict[str, tuple[int, ...]] = {
    "C1": (0, 1, 2, 3),
    "C2": (3, 4, 5, 6),
    "C3": (6, 7, 8, 9),
    "C4": (9, 10, 11, 12),
    "C5": (12, 13, 14, 15),
    "C6": (15, 16, 17, 0),
    "C7": (17, 1, 8, 10),
    "C8": (2, 4, 11, 13),
    "C9": (5, 16, 14, 7),
}

# events [a, b | i, j]: outcomes a, b of measurements A_i, B_j
HARDY_EVENTS: tuple[tuple[int, int, int, int], ...] = (
    (0, 0, 1, 1), (1, 0, 1, 1), (1, 1, 1, 1),
    (0, 0, 2, 1), (0, 1, 2, 1), (1, 1, 2, 1),
    (0, 0, 2, 2), (1, 0, 2, 2), (1, 1, 2, 2),
    (0, 1, 1, 2),
)

# (target, conditions) of the three known Hardy families on the Hardy graph
HARDY_FAMILIES: tuple[tuple[tuple[int, ...], tuple[tuple[int, ...], ...]], ...] = (
    ((9,), ((0, 1, 2), (3, 4, 5), (6, 7, 8))),
    ((9,), ((0, 1, 2), (5, 6), (3, 4, 7, 8))),
    ((9,), ((0, 1, 4, 5), (2, 3), (5, 6), (3, 4, 7, 8))),
)

GHZ10_EVENTS: tuple[int, ...] = (4, 5, 6, 7, 8, 10, 11, 12, 13, 14)
GHZ10_CONDITIONS: tuple[tuple[int, ...], ...] = (
    (4, 5, 6), (6, 7, 8), (10, 11, 12), (12, 13, 14), (5, 7, 14), (4, 11, 13),
)
GHZ10_TARGET: tuple[int, ...] = (8, 10)


class CatalogError(LookupError):
    pass


@lru_cache(maxsize=1)
def ceg18() -> VectorSet:
    return VectorSet.from_rows(CEG_VECTORS)


def ceg18_contexts() -> list[int]:
    """Context masks in the order C1..C9."""
    return [mask_of(c) for c in CEG_CONTEXTS.values()]


def context_index(name: str | int) -> int:
    """Position of a context given as ``"C7"``, ``"7"`` or ``7`` (1-based)."""
    text = str(name).strip().upper().removeprefix("C")
    if not text.isdigit() or not 1 <= int(text) <= len(CEG_CONTEXTS):
        raise CatalogError(f"unknown context {name!r}; expected C1..C{len(CEG_CONTEXTS)}")
    return int(text) - 1


def _hardy_exclusive(e: tuple[int, int, int, int], f: tuple[int, int, int, int]) -> bool:
    a, b, i, j = e
    a2, b2, i2, j2 = f
    return (i == i2 and a != a2) or (j == j2 and b != b2)


@lru_cache(maxsize=1)
def hardy_graph() -> ExclusivityGraph:
    """Exclusivity graph of the ten Hardy events: two events are exclusive
    when they share a measurement with different outcomes."""
    n = len(HARDY_EVENTS)
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if _hardy_exclusive(HARDY_EVENTS[u], HARDY_EVENTS[v])
    ]
    return ExclusivityGraph.from_edges(n, edges)


def hardy_instance(k: int = 0) -> ProofInstance:
    target, conds = HARDY_FAMILIES[k]
    return ProofInstance(hardy_graph(), tuple(mask_of(c) for c in conds), mask_of(target))


@lru_cache(maxsize=1)
def ghz10_instance() -> ProofInstance:
    """State vector 0 with root context C7, vertices labelled by CEG index."""
    (inst,) = ks_to_ghz(ceg18(), 0, root_context=context_index("C7"), contexts=ceg18_contexts())
    return inst


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: str  # "vector-set" | "graph" | "proof-instance"
    payload: Any
    note: str

    def to_dict(self) -> dict[str, Any]:
        from .graphs import write_graph6

        if isinstance(self.payload, VectorSet):
            body: Any = [list(v) for v in self.payload.vectors]
        elif isinstance(self.payload, ExclusivityGraph):
            body = write_graph6(self.payload)
        else:
            body = self.payload.to_dict()
        return {"id": self.id, "kind": self.kind, "note": self.note, "payload": body}


def _entries() -> dict[str, CatalogEntry]:
    return {
        "ceg18": CatalogEntry("ceg18", "vector-set", ceg18(), "18 vectors in dimension 4 forming 9 complete contexts"),
        "hardy": CatalogEntry("hardy", "graph", hardy_graph(), "10 bipartite Hardy events [a,b|i,j]"),
        "hardy-family-1": CatalogEntry("hardy-family-1", "proof-instance", hardy_instance(0), "Hardy family, target (9), conditions (0,1,2) (3,4,5) (6,7,8)"),
        "hardy-family-2": CatalogEntry("hardy-family-2", "proof-instance", hardy_instance(1), "Hardy family, target (9), conditions (0,1,2) (5,6) (3,4,7,8)"),
        "hardy-family-3": CatalogEntry("hardy-family-3", "proof-instance", hardy_instance(2), "Hardy family, target (9), conditions (0,1,4,5) (2,3) (5,6) (3,4,7,8)"),
        "ghz10": CatalogEntry("ghz10", "proof-instance", ghz10_instance(), "10-event GHZ-type instance from ceg18, state 0, root C7"),
    }


def list_entries() -> list[CatalogEntry]:
    validate_catalog()
    return list(_entries().values())


def get_entry(entry_id: str) -> CatalogEntry:
    key = entry_id.removeprefix("catalog:")
    entries = _entries()
    if key not in entries:
        raise CatalogError(f"unknown catalog entry {entry_id!r}; known: {', '.join(entries)}")
    validate_catalog()
    return entries[key]


@lru_cache(maxsize=1)
def validate_catalog() -> bool:
    """Re-derive every catalog payload; raises :class:`CatalogError` on mismatch."""
    vs = ceg18()
    rep = verify_ks_set(vs)
    if not rep.is_ks:
        raise CatalogError("ceg18 is not a KS set")
    if sorted(rep.contexts) != sorted(ceg18_contexts()):
        raise CatalogError("ceg18 contexts differ from the named context table")
    for v in range(vs.n):
        if sum(1 for c in rep.contexts if c >> v & 1) != 2:
            raise CatalogError(f"ceg18 vector {v} is not in exactly two contexts")

    inst = ghz10_instance()
    if inst.labels != GHZ10_EVENTS:
        raise CatalogError(f"ghz10 events {inst.labels} differ from {GHZ10_EVENTS}")
    if inst.graph != orthogonality_graph(vs).induced_subgraph(GHZ10_EVENTS):
        raise CatalogError("ghz10 graph is not the orthogonality subgraph of ceg18")
    got = sorted(tuple(sorted(inst.label(c))) for c in inst.conditions)
    if got != sorted(GHZ10_CONDITIONS) or inst.label(inst.target) != GHZ10_TARGET:
        raise CatalogError("ghz10 conditions or target differ from the expected family")

    g = hardy_graph()
    for target, conds in HARDY_FAMILIES:
        for c in (target,) + conds:
            if not is_clique(g, mask_of(c)):
                raise CatalogError(f"hardy graph lacks clique {c}")
    if members(g.adj[9]) != (1, 2, 6, 7):
        raise CatalogError("hardy event 9 has unexpected exclusivities")
    return True
