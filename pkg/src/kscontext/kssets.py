"""Exact integer-vector layer: orthogonality, contexts and 0/1 assignments.

Vectors are stored with integer coordinates in a normal form (gcd 1, leading
nonzero coordinate positive), so every inner product and every Born
probability is computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence

from .graphs import ExclusivityGraph, all_cliques, is_clique, mask_of, members

__all__ = [
    "VectorSetError",
    "DimensionMismatch",
    "DuplicateVector",
    "ZeroVector",
    "NotAContradiction",
    "NotKS",
    "RootContainsState",
    "ConstructionFailed",
    "VectorSet",
    "KSReport",
    "normalize_vector",
    "parse_vector_set",
    "orthogonality_graph",
    "find_complete_contexts",
    "resolves_identity",
    "check_assignment",
    "find_assignment",
    "iter_assignments",
    "verify_ks_set",
    "tighten_contexts",
    "quantum_probabilities",
    "ks_to_ghz",
    "closed_neighborhood_survivors",
    "lemma_three_context_assignment",
]


class VectorSetError(ValueError):
    pass


class DimensionMismatch(VectorSetError):
    pass


class DuplicateVector(VectorSetError):
    """Two vectors are scalar multiples, i.e. the same projector."""


class ZeroVector(VectorSetError):
    pass


class NotAContradiction(ValueError):
    """The context family admits a noncontextual assignment."""


class NotKS(ValueError):
    pass


class RootContainsState(ValueError):
    pass


class ConstructionFailed(RuntimeError):
    pass


def normalize_vector(coords: Iterable) -> tuple[int, ...]:
    """Integer representative of the ray through ``coords``.

    Accepts ints or Fractions; denominators are cleared, the gcd divided out
    and the sign fixed so the first nonzero entry is positive.
    """
    fr = [Fraction(c) for c in coords]
    if not fr:
        raise ZeroVector("empty vector")
    den = 1
    for c in fr:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in fr]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    if g == 0:
        raise ZeroVector("all coordinates are zero")
    ints = [c // g for c in ints]
    lead = next(c for c in ints if c)
    if lead < 0:
        ints = [-c for c in ints]
    return tuple(ints)


def _dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


@dataclass(frozen=True)
class VectorSet:
    vectors: tuple[tuple[int, ...], ...]
    dim: int = field(default=0)

    def __post_init__(self):
        if not self.vectors:
            raise VectorSetError("empty vector set")
        dims = {len(v) for v in self.vectors}
        if len(dims) != 1:
            raise DimensionMismatch(f"vectors of differing dimensions {sorted(dims)}")
        d = dims.pop()
        if self.dim and self.dim != d:
            raise DimensionMismatch(f"declared dimension {self.dim}, vectors have {d}")
        object.__setattr__(self, "dim", d)
        normed = tuple(normalize_vector(v) for v in self.vectors)
        seen: dict[tuple[int, ...], int] = {}
        for i, v in enumerate(normed):
            if v in seen:
                raise DuplicateVector(f"vectors {seen[v]} and {i} span the same ray")
            seen[v] = i
        object.__setattr__(self, "vectors", normed)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "VectorSet":
        return cls(tuple(tuple(r) for r in rows))

    @property
    def n(self) -> int:
        return len(self.vectors)

    def __len__(self) -> int:
        return len(self.vectors)

    def subset(self, indices: Iterable[int]) -> "VectorSet":
        return VectorSet(tuple(self.vectors[i] for i in indices))


def parse_vector_set(text: str) -> VectorSet:
    """One vector per line, whitespace-separated integers, ``#`` comments."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append(tuple(int(tok) for tok in line.split()))
        except ValueError:
            raise VectorSetError(f"line {lineno}: expected integers, got {raw.strip()!r}") from None
        if rows and len(rows[-1]) != len(rows[0]):
            raise DimensionMismatch(
                f"line {lineno}: {len(rows[-1])} coordinates, expected {len(rows[0])}"
            )
    if not rows:
        raise VectorSetError("no vectors found")
    try:
        return VectorSet(tuple(rows))
    except VectorSetError as exc:
        raise type(exc)(f"{exc}") from None


def orthogonality_graph(vs: VectorSet) -> ExclusivityGraph:
    vecs = vs.vectors
    edges = [
        (i, j)
        for i in range(len(vecs))
        for j in range(i + 1, len(vecs))
        if _dot(vecs[i], vecs[j]) == 0
    ]
    return ExclusivityGraph.from_edges(len(vecs), edges)


def resolves_identity(vs: VectorSet, context: int) -> bool:
    """Exact check that the projectors of ``context`` sum to the identity."""
    d = vs.dim
    acc = [[Fraction(0)] * d for _ in range(d)]
    for i in members(context):
        v = vs.vectors[i]
        norm = _dot(v, v)
        for a in range(d):
            for b in range(d):
                acc[a][b] += Fraction(v[a] * v[b], norm)
    return all(acc[a][b] == (a == b) for a in range(d) for b in range(d))


def find_complete_contexts(vs: VectorSet, g: ExclusivityGraph | None = None) -> list[int]:
    """All sets of ``dim`` mutually orthogonal vectors, as masks in canonical order."""
    if g is None:
        g = orthogonality_graph(vs)
    out = [c for c in all_cliques(g, vs.dim) if c.bit_count() == vs.dim]
    for c in out:
        if not resolves_identity(vs, c):  # pragma: no cover - guaranteed by orthogonality
            raise AssertionError(f"context {members(c)} does not resolve the identity")
    return out


# ---------------------------------------------------------------------------
# noncontextual 0/1 assignments
# ---------------------------------------------------------------------------


def check_assignment(g: ExclusivityGraph, complete: Iterable[int], values: Sequence[int]) -> bool:
    """Exclusivity on every edge and exactly one 1 in every complete context."""
    ones = mask_of(i for i, x in enumerate(values) if x)
    if any(x not in (0, 1) for x in values) or len(values) != g.n:
        return False
    for v in members(ones):
        if g.adj[v] & ones:
            return False
    return all((c & ones).bit_count() == 1 for c in complete)


def _search_contexts(g: ExclusivityGraph, complete: Sequence[int], ones: int, zeros: int) -> Iterator[tuple[int, int]]:
    """Yield (ones, zeros) partial assignments meeting every context once."""
    best = None
    best_free = 0
    for c in complete:
        if c & ones:
            continue
        free = c & ~zeros
        if not free:
            return
        if best is None or free.bit_count() < best_free.bit_count():
            best, best_free = c, free
            if free.bit_count() == 1:
                break
    if best is None:
        yield ones, zeros
        return
    cand = best_free
    while cand:
        low = cand & -cand
        v = low.bit_length() - 1
        cand ^= low
        yield from _search_contexts(g, complete, ones | low, zeros | g.adj[v])


def find_assignment(g: ExclusivityGraph, complete: Iterable[int]) -> tuple[int, ...] | None:
    """A 0/1 assignment satisfying exclusivity and all completeness conditions.

    Exhaustive backtracking that branches on the context with fewest
    undecided members; vertices outside every context get 0.
    """
    complete = list(complete)
    for ones, _ in _search_contexts(g, complete, 0, 0):
        return tuple(ones >> i & 1 for i in range(g.n))
    return None


def iter_assignments(g: ExclusivityGraph, complete: Iterable[int]) -> Iterator[tuple[int, ...]]:
    """Every full 0/1 assignment satisfying exclusivity and completeness."""
    complete = list(complete)
    seen: set[int] = set()
    for ones, zeros in _search_contexts(g, complete, 0, 0):
        free = [v for v in range(g.n) if not ((ones | zeros) >> v & 1)]
        # completions of the undecided vertices: independent sets avoiding ones' neighbours
        for bits in product((0, 1), repeat=len(free)):
            extra = mask_of(v for v, b in zip(free, bits) if b)
            full = ones | extra
            if any(g.adj[v] & full for v in members(extra)):
                continue
            if all((c & full).bit_count() == 1 for c in complete) and full not in seen:
                seen.add(full)
                yield tuple(full >> i & 1 for i in range(g.n))


@dataclass
class KSReport:
    is_ks: bool
    contexts: list[int]
    witness: tuple[int, ...] | None


def verify_ks_set(vs: VectorSet) -> KSReport:
    g = orthogonality_graph(vs)
    contexts = find_complete_contexts(vs, g)
    witness = find_assignment(g, contexts)
    return KSReport(is_ks=witness is None, contexts=contexts, witness=witness)


def tighten_contexts(g: ExclusivityGraph, complete: Sequence[int]) -> list[int]:
    """Greedily drop contexts (ascending index) while no assignment exists.

    One pass suffices: dropping conditions only adds assignments, so a context
    that was needed when examined stays needed.
    """
    family = list(complete)
    if find_assignment(g, family) is not None:
        raise NotAContradiction("the context family admits a noncontextual assignment")
    i = 0
    while i < len(family):
        trial = family[:i] + family[i + 1:]
        if find_assignment(g, trial) is None:
            family = trial
        else:
            i += 1
    return family


# ---------------------------------------------------------------------------
# quantum side and the KS -> GHZ conversion
# ---------------------------------------------------------------------------


def quantum_probabilities(vs: VectorSet, state_index: int) -> tuple[Fraction, ...]:
    """Born probabilities of every vector in the pure state ``vs[state_index]``."""
    if not 0 <= state_index < vs.n:
        raise IndexError(f"state index {state_index} out of range")
    psi = vs.vectors[state_index]
    npsi = _dot(psi, psi)
    return tuple(Fraction(_dot(v, psi) ** 2, _dot(v, v) * npsi) for v in vs.vectors)


def closed_neighborhood_survivors(vs: VectorSet, state_index: int, g: ExclusivityGraph | None = None) -> list[int]:
    """Vectors neither equal nor orthogonal to the chosen state vector."""
    if g is None:
        g = orthogonality_graph(vs)
    gone = g.adj[state_index] | (1 << state_index)
    return [i for i in range(vs.n) if not gone >> i & 1]


def ks_to_ghz(
    vs: VectorSet,
    state_index: int,
    root_context: int | None = None,
    contexts: Sequence[int] | None = None,
):
    """State-dependent GHZ-type instances obtained from a KS set.

    For each admissible root context (all contexts avoiding the state vector,
    or only index ``root_context`` of ``contexts``): tighten the family, drop
    the state vector and everything orthogonal to it, and keep the surviving
    parts of the other contexts as conditions and of the root as the target.
    Instance vertices are labelled by the original vector indices.
    """
    from .proofsearch import ProofInstance

    g = orthogonality_graph(vs)
    if contexts is None:
        contexts = find_complete_contexts(vs, g)
    contexts = list(contexts)
    if find_assignment(g, contexts) is not None:
        raise NotKS("vector set admits a noncontextual assignment")
    state_bit = 1 << state_index
    if root_context is not None:
        if contexts[root_context] & state_bit:
            raise RootContainsState(
                f"root context {members(contexts[root_context])} contains vector {state_index}"
            )
        roots = [root_context]
    else:
        roots = [k for k, c in enumerate(contexts) if not c & state_bit]

    survivors = closed_neighborhood_survivors(vs, state_index, g)
    sub = g.induced_subgraph(survivors)
    local = {v: k for k, v in enumerate(survivors)}

    def restrict(c: int) -> int:
        return mask_of(local[v] for v in members(c) if v in local)

    out = []
    for k in roots:
        # tighten with the root first so that it is never the one dropped
        order = [contexts[k]] + [c for j, c in enumerate(contexts) if j != k]
        tight = _tighten_keeping_first(g, order)
        target = restrict(contexts[k])
        conditions = []
        for c in tight[1:]:
            r = restrict(c)
            if r and r not in conditions:
                conditions.append(r)
        out.append(ProofInstance(sub, tuple(conditions), target, labels=tuple(survivors)))
    return out


def _tighten_keeping_first(g: ExclusivityGraph, family: list[int]) -> list[int]:
    head, rest = family[0], family[1:]
    i = 0
    while i < len(rest):
        trial = rest[:i] + rest[i + 1:]
        if find_assignment(g, [head] + trial) is None:
            rest = trial
        else:
            i += 1
    return [head] + rest


# ---------------------------------------------------------------------------
# three disjoint complete contexts always admit an assignment
# ---------------------------------------------------------------------------


def lemma_three_context_assignment(c1, c2, c3) -> tuple[VectorSet, tuple[int, ...]]:
    """Explicit assignment for three pairwise-disjoint complete contexts.

    Picks non-orthogonal ``a`` in ``c1`` and ``b`` in ``c2``, then a vector of
    ``c3`` orthogonal to neither, and values exactly those three with 1.
    Returns the union vector set (``c1 + c2 + c3`` order) and the assignment.
    """
    groups = [[normalize_vector(v) for v in c] for c in (c1, c2, c3)]
    d = len(groups[0][0])
    for grp in groups:
        if len(grp) != d or any(len(v) != d for v in grp):
            raise DimensionMismatch("each context needs exactly d vectors of dimension d")
        for i, u in enumerate(grp):
            for w in grp[i + 1:]:
                if _dot(u, w):
                    raise VectorSetError("context vectors are not mutually orthogonal")
    flat = [v for grp in groups for v in grp]
    if len(set(flat)) != len(flat):
        raise VectorSetError("contexts are not pairwise disjoint")
    vs = VectorSet(tuple(flat))
    g = orthogonality_graph(vs)
    ctx = [mask_of(range(k * d, (k + 1) * d)) for k in range(3)]

    for i, a in enumerate(groups[0]):
        for j, b in enumerate(groups[1]):
            if _dot(a, b) == 0:
                continue
            for k, c in enumerate(groups[2]):
                if _dot(a, c) and _dot(b, c):
                    values = [0] * len(flat)
                    values[i] = values[d + j] = values[2 * d + k] = 1
                    values = tuple(values)
                    if not check_assignment(g, ctx, values):  # pragma: no cover
                        raise ConstructionFailed("constructed assignment fails validation")
                    return vs, values
    raise ConstructionFailed("no pairwise non-orthogonal triple across the three contexts")
