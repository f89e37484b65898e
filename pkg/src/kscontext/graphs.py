"""Exclusivity graphs on at most 64 vertices.

Vertex sets are plain ``int`` bit masks (bit ``i`` set means vertex ``i`` is a
member).  Everything here is exact combinatorics: graph6 encoding, clique and
independent-set enumeration, canonical labelling and isomorph-free generation
of all small graphs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

MAX_VERTICES = 64
DEFAULT_GENERATION_LIMIT = 9

__all__ = [
    "ExclusivityGraph",
    "Graph6Error",
    "InvalidCharacter",
    "LengthMismatch",
    "NonzeroPadding",
    "BudgetExceeded",
    "mask_of",
    "members",
    "parse_graph6",
    "write_graph6",
    "read_graph6_file",
    "complement",
    "maximal_independent_sets",
    "maximal_cliques",
    "all_cliques",
    "is_clique",
    "is_independent",
    "canonical_form",
    "automorphism_generators",
    "enumerate_nonisomorphic_graphs",
    "graph_counts",
]


class Graph6Error(ValueError):
    """Malformed graph6 record."""


class InvalidCharacter(Graph6Error):
    pass


class LengthMismatch(Graph6Error):
    pass


class NonzeroPadding(Graph6Error):
    pass


class BudgetExceeded(RuntimeError):
    """Requested enumeration exceeds the configured vertex budget."""


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def members(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


@dataclass(frozen=True)
class ExclusivityGraph:
    """Simple undirected graph; ``adj[i]`` is the neighbour mask of vertex ``i``."""

    n: int
    adj: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.n <= MAX_VERTICES:
            raise ValueError(f"vertex count {self.n} outside 0..{MAX_VERTICES}")
        if len(self.adj) != self.n:
            raise ValueError("adjacency length does not match vertex count")
        full = (1 << self.n) - 1
        for i, row in enumerate(self.adj):
            if row & ~full:
                raise ValueError(f"vertex {i} has a neighbour out of range")
            if row >> i & 1:
                raise ValueError(f"self-loop at vertex {i}")
            for j in members(row):
                if not self.adj[j] >> i & 1:
                    raise ValueError(f"asymmetric adjacency between {i} and {j}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "ExclusivityGraph":
        adj = [0] * n
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return cls(n, tuple(adj))

    @classmethod
    def empty(cls, n: int) -> "ExclusivityGraph":
        return cls(n, (0,) * n)

    @classmethod
    def complete(cls, n: int) -> "ExclusivityGraph":
        full = (1 << n) - 1
        return cls(n, tuple(full & ~(1 << i) for i in range(n)))

    @classmethod
    def cycle(cls, n: int) -> "ExclusivityGraph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @property
    def vertex_mask(self) -> int:
        return (1 << self.n) - 1

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i] >> j & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in members(self.adj[i]) if i < j]

    def num_edges(self) -> int:
        return sum(row.bit_count() for row in self.adj) // 2

    def degrees(self) -> list[int]:
        return [row.bit_count() for row in self.adj]

    def relabel(self, perm: Sequence[int]) -> "ExclusivityGraph":
        """Graph in which old vertex ``v`` becomes ``perm[v]``."""
        adj = [0] * self.n
        for v, row in enumerate(self.adj):
            adj[perm[v]] = _remap(row, perm)
        return ExclusivityGraph(self.n, tuple(adj))

    def induced_subgraph(self, vertices: Iterable[int]) -> "ExclusivityGraph":
        """Induced subgraph on ``vertices`` (sorted), relabelled 0..k-1."""
        keep = sorted(set(vertices))
        index = {v: k for k, v in enumerate(keep)}
        adj = []
        for v in keep:
            row = 0
            for u in members(self.adj[v]):
                k = index.get(u)
                if k is not None:
                    row |= 1 << k
            adj.append(row)
        return ExclusivityGraph(len(keep), tuple(adj))

    def __str__(self) -> str:
        return write_graph6(self)


def _remap(mask: int, perm: Sequence[int]) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << perm[low.bit_length() - 1]
        mask ^= low
    return out


# ---------------------------------------------------------------------------
# graph6
# ---------------------------------------------------------------------------

_HEADER = ">>graph6<<"


def _decode_size(data: bytes) -> tuple[int, int]:
    if data[0] != 126:
        return data[0] - 63, 1
    if len(data) >= 2 and data[1] == 126:
        raise LengthMismatch("graph6 size form for n >= 258047 is beyond the 64-vertex budget")
    if len(data) < 4:
        raise LengthMismatch("truncated graph6 size field")
    n = ((data[1] - 63) << 12) | ((data[2] - 63) << 6) | (data[3] - 63)
    if n < 63:
        raise LengthMismatch(f"non-canonical long size field for n={n}")
    return n, 4


def _encode_size(n: int) -> str:
    if n <= 62:
        return chr(63 + n)
    return "~" + "".join(chr(63 + ((n >> s) & 63)) for s in (12, 6, 0))


def parse_graph6(line: str) -> ExclusivityGraph:
    text = line.strip()
    if text.startswith(_HEADER):
        text = text[len(_HEADER):]
    if not text:
        raise LengthMismatch("empty graph6 record")
    data = text.encode("ascii", errors="replace")
    for pos, byte in enumerate(data):
        if not 63 <= byte <= 126:
            raise InvalidCharacter(f"byte {byte!r} at position {pos} outside 63..126")
    n, offset = _decode_size(data)
    if n > MAX_VERTICES:
        raise LengthMismatch(f"{n} vertices exceeds the {MAX_VERTICES}-vertex budget")
    nbits = n * (n - 1) // 2
    nbytes = (nbits + 5) // 6
    body = data[offset:]
    if len(body) != nbytes:
        raise LengthMismatch(f"expected {nbytes} edge bytes for n={n}, got {len(body)}")
    bits = 0
    for byte in body:
        bits = (bits << 6) | (byte - 63)
    pad = nbytes * 6 - nbits
    if bits & ((1 << pad) - 1):
        raise NonzeroPadding("trailing padding bits are set")
    bits >>= pad
    adj = [0] * n
    k = nbits - 1
    for j in range(1, n):
        for i in range(j):
            if bits >> k & 1:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
            k -= 1
    return ExclusivityGraph(n, tuple(adj))


def write_graph6(g: ExclusivityGraph) -> str:
    n = g.n
    bits = 0
    nbits = 0
    for j in range(1, n):
        col = g.adj[j]
        for i in range(j):
            bits = (bits << 1) | (col >> i & 1)
            nbits += 1
    pad = (-nbits) % 6
    bits <<= pad
    nbits += pad
    chars = [chr(63 + ((bits >> s) & 63)) for s in range(nbits - 6, -1, -6)]
    return _encode_size(n) + "".join(chars)


def read_graph6_file(path: str | os.PathLike) -> Iterator[ExclusivityGraph]:
    """Stream graphs from a graph6 file, one record per non-blank line."""
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line == _HEADER:
                continue
            try:
                yield parse_graph6(line)
            except Graph6Error as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None


# ---------------------------------------------------------------------------
# cliques and independent sets
# ---------------------------------------------------------------------------


def complement(g: ExclusivityGraph) -> ExclusivityGraph:
    full = g.vertex_mask
    return ExclusivityGraph(g.n, tuple(full & ~row & ~(1 << i) for i, row in enumerate(g.adj)))


def is_clique(g: ExclusivityGraph, mask: int) -> bool:
    for v in members(mask):
        if (mask & ~(1 << v)) & ~g.adj[v]:
            return False
    return True


def is_independent(g: ExclusivityGraph, mask: int) -> bool:
    for v in members(mask):
        if mask & g.adj[v]:
            return False
    return True


def _bron_kerbosch(adj: Sequence[int], n: int) -> list[int]:
    out: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p:
            if not x:
                out.append(r)
            return
        # pivot: vertex of P|X with most neighbours in P, lowest index on ties
        px = p | x
        best, pivot = -1, 0
        while px:
            low = px & -px
            u = low.bit_length() - 1
            c = (adj[u] & p).bit_count()
            if c > best:
                best, pivot = c, u
            px ^= low
        cand = p & ~adj[pivot]
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            expand(r | low, p & adj[v], x & adj[v])
            p &= ~low
            x |= low
            cand ^= low

    if n:
        expand(0, (1 << n) - 1, 0)
    out.sort(key=members)
    return out


def maximal_cliques(g: ExclusivityGraph) -> list[int]:
    return _bron_kerbosch(g.adj, g.n)


def maximal_independent_sets(g: ExclusivityGraph) -> list[int]:
    return maximal_cliques(complement(g))


def all_cliques(g: ExclusivityGraph, max_size: int | None = None) -> list[int]:
    """Every non-empty clique with at most ``max_size`` vertices.

    Ordered by size, then by sorted member tuple.
    """
    if max_size is None:
        max_size = g.n
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    out: list[int] = []

    def extend(clique: int, size: int, cand: int) -> None:
        out.append(clique)
        if size == max_size:
            return
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            extend(clique | low, size + 1, cand & g.adj[v])

    for v in range(g.n):
        higher = g.adj[v] & ~((1 << (v + 1)) - 1)
        extend(1 << v, 1, higher)
    out.sort(key=lambda m: (m.bit_count(), members(m)))
    return out


# ---------------------------------------------------------------------------
# canonical labelling
# ---------------------------------------------------------------------------


def _refine(adj: Sequence[int], cells: list[list[int]]) -> list[list[int]]:
    """Coarsest equitable refinement of an ordered partition.

    Splits depend only on the ordered cell structure, never on vertex labels.
    """
    i = 0
    while i < len(cells):
        smask = 0
        for v in cells[i]:
            smask |= 1 << v
        new_cells = []
        split = False
        for cell in cells:
            if len(cell) == 1:
                new_cells.append(cell)
                continue
            groups: dict[int, list[int]] = {}
            for v in cell:
                groups.setdefault((adj[v] & smask).bit_count(), []).append(v)
            if len(groups) == 1:
                new_cells.append(cell)
            else:
                split = True
                for key in sorted(groups):
                    new_cells.append(groups[key])
        if split:
            cells = new_cells
            i = 0
        else:
            i += 1
    return cells


def _twin_masks(adj: Sequence[int], n: int) -> list[int]:
    tw = [0] * n
    for u in range(n):
        for v in range(u + 1, n):
            bu, bv = 1 << u, 1 << v
            if adj[u] & ~bv == adj[v] & ~bu:
                tw[u] |= bv
                tw[v] |= bu
    return tw


class _CanonSearch:
    __slots__ = ("adj", "n", "twins", "best", "best_perm", "autos")

    def __init__(self, adj: Sequence[int], n: int):
        self.adj = adj
        self.n = n
        self.twins = _twin_masks(adj, n)
        self.best: tuple[int, ...] | None = None
        self.best_perm: list[int] | None = None
        self.autos: list[tuple[int, ...]] = []

    def run(self) -> None:
        if self.n == 0:
            self.best, self.best_perm = (), []
            return
        degs: dict[int, list[int]] = {}
        for v in range(self.n):
            degs.setdefault(self.adj[v].bit_count(), []).append(v)
        self._search([degs[k] for k in sorted(degs)])

    def _leaf(self, order: list[int]) -> None:
        pos = [0] * self.n
        for new, old in enumerate(order):
            pos[old] = new
        enc = tuple(_remap(self.adj[old], pos) for old in order)
        if self.best is None or enc < self.best:
            self.best, self.best_perm = enc, order
        elif enc == self.best:
            # order[k] and best_perm[k] play the same role: an automorphism
            auto = [0] * self.n
            for a, b in zip(order, self.best_perm):
                auto[a] = b
            self.autos.append(tuple(auto))

    def _search(self, cells: list[list[int]]) -> None:
        cells = _refine(self.adj, cells)
        target = -1
        size = self.n + 1
        for i, cell in enumerate(cells):
            if 1 < len(cell) < size:
                target, size = i, len(cell)
        if target < 0:
            self._leaf([cell[0] for cell in cells])
            return
        cell = cells[target]
        tried = 0
        for v in cell:
            # swapping twins is an automorphism fixing the current partition
            if self.twins[v] & tried:
                continue
            tried |= 1 << v
            rest = [u for u in cell if u != v]
            self._search(cells[:target] + [[v], rest] + cells[target + 1:])


def canonical_form(g: ExclusivityGraph) -> tuple[tuple[int, ...], str]:
    """Canonical relabelling of ``g`` and the graph6 text of the canonical graph.

    ``relabeling[v]`` is the canonical label of vertex ``v``, so
    ``g.relabel(relabeling)`` is the canonical representative.
    """
    search = _CanonSearch(g.adj, g.n)
    search.run()
    perm = [0] * g.n
    for new, old in enumerate(search.best_perm):
        perm[old] = new
    return tuple(perm), write_graph6(ExclusivityGraph(g.n, search.best))


def _canonical_rows(adj: Sequence[int], n: int) -> tuple[int, ...]:
    search = _CanonSearch(adj, n)
    search.run()
    return search.best


def automorphism_generators(g: ExclusivityGraph) -> list[tuple[int, ...]]:
    """Automorphisms found during canonical search, plus all twin transpositions.

    They generate a subgroup of Aut(g), often all of it; orbit computations
    based on them are therefore at worst finer than the true orbits.
    """
    search = _CanonSearch(g.adj, g.n)
    search.run()
    gens = set(search.autos)
    for u in range(g.n):
        for v in members(search.twins[u]):
            if u < v:
                p = list(range(g.n))
                p[u], p[v] = v, u
                gens.add(tuple(p))
    ident = tuple(range(g.n))
    gens.discard(ident)
    return sorted(gens)


# ---------------------------------------------------------------------------
# isomorph-free generation
# ---------------------------------------------------------------------------


def _generation_limit() -> int:
    return int(os.environ.get("KSCONTEXT_MAX_GEN_VERTICES", DEFAULT_GENERATION_LIMIT))


def _augment(parents: Iterable[tuple[int, ...]], n: int) -> set[tuple[int, ...]]:
    """Canonical rows of every graph on ``n`` vertices with a min-degree vertex
    whose deletion leaves one of ``parents`` (canonical, on ``n - 1`` vertices)."""
    seen: set[tuple[int, ...]] = set()
    m = n - 1
    new_bit = 1 << m
    for rows in parents:
        deg = [r.bit_count() for r in rows]
        mindeg = min(deg) if deg else 0
        for k in range(0, min(m, mindeg + 1) + 1):
            # the added vertex (degree k) must have minimum degree in the child
            required = 0
            optional = []
            for v in range(m):
                if deg[v] == k - 1:
                    required |= 1 << v
                else:
                    optional.append(v)
            need = k - required.bit_count()
            if need < 0 or need > len(optional):
                continue
            for extra in combinations(optional, need):
                s = required
                for v in extra:
                    s |= 1 << v
                child = list(rows)
                for v in range(m):
                    if s >> v & 1:
                        child[v] |= new_bit
                child.append(s)
                seen.add(_canonical_rows(child, n))
    return seen


def _rows_key(rows: tuple[int, ...]) -> str:
    return write_graph6(ExclusivityGraph(len(rows), rows))


def enumerate_nonisomorphic_graphs(n: int, max_vertices: int | None = None) -> Iterator[ExclusivityGraph]:
    """One canonical representative per isomorphism class on ``n`` vertices.

    Graphs are yielded in increasing order of canonical graph6 text.  ``n``
    above ``max_vertices`` (default 9, or ``KSCONTEXT_MAX_GEN_VERTICES``)
    raises :class:`BudgetExceeded`.
    """
    limit = _generation_limit() if max_vertices is None else max_vertices
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > limit:
        raise BudgetExceeded(f"n={n} exceeds the generation budget of {limit} vertices")
    level: list[tuple[int, ...]] = [(0,)]
    for k in range(2, n + 1):
        level = sorted(_augment(level, k), key=_rows_key)
    for rows in level:
        yield ExclusivityGraph(n, rows)


def graph_counts(n_max: int, max_vertices: int | None = None) -> list[int]:
    """Number of isomorphism classes for each n = 1..n_max."""
    limit = _generation_limit() if max_vertices is None else max_vertices
    if n_max > limit:
        raise BudgetExceeded(f"n={n_max} exceeds the generation budget of {limit} vertices")
    counts = []
    level: list[tuple[int, ...]] = [(0,)]
    counts.append(1)
    for k in range(2, n_max + 1):
        level = list(_augment(level, k))
        counts.append(len(level))
    return counts
