"""Hardy- and GHZ-type proof detection on exclusivity graphs.

An instance is a graph with condition cliques ``C_1..C_k`` and a target
clique ``C_0``.  Classically the target is forced to zero when every maximal
independent set meeting all conditions misses the target; quantum
achievability is then decided by the theta-body program.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence

from . import __version__
from .graphs import (
    ExclusivityGraph,
    _remap,
    all_cliques,
    automorphism_generators,
    enumerate_nonisomorphic_graphs,
    is_clique,
    mask_of,
    maximal_independent_sets,
    members,
    parse_graph6,
    write_graph6,
)
from .thetasdp import CertificationFailed, CertifiedInterval, SdpStatus, ThetaProblem, certified_bounds, solve

__all__ = [
    "VerdictKind",
    "CertificateKind",
    "ProofInstance",
    "ClassicalVerdict",
    "ProofCertificate",
    "SearchConfig",
    "CampaignReport",
    "PoolOverflow",
    "PreconditionFailed",
    "CheckpointCorrupt",
    "classical_check",
    "brute_force_check",
    "enumerate_candidates",
    "reroot",
    "quantum_check",
    "search_graph",
    "analyze_graph",
    "instance_orbit_key",
    "run_campaign",
]

CHECKPOINT_SCHEMA = "kscontext-checkpoint/1"
REPORT_SCHEMA = "kscontext-campaign-report/1"


class PoolOverflow(RuntimeError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"clique pool of size {size} exceeds limit {limit}")
        self.size = size
        self.limit = limit


class PreconditionFailed(ValueError):
    """quantum_check was given an instance that is not classically forced to zero."""


class CheckpointCorrupt(ValueError):
    pass


class VerdictKind(str, Enum):
    CONDITIONS_INFEASIBLE = "ConditionsInfeasible"
    FORCED_ZERO = "ForcedZero"
    ACHIEVABLE = "Achievable"


class CertificateKind(str, Enum):
    HARDY = "Hardy"
    GHZ = "GHZ"
    NONE = "None"
    BORDERLINE = "Borderline"


# ---------------------------------------------------------------------------
# instances and the classical check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProofInstance:
    """Conditions ``C_1..C_k`` and target ``C_0`` on a graph, all as vertex masks.

    ``labels`` optionally names the vertices (e.g. original vector indices
    when the graph is an induced subgraph).
    """

    graph: ExclusivityGraph
    conditions: tuple[int, ...]
    target: int
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(int(c) for c in self.conditions))
        full = self.graph.vertex_mask
        if not self.target or self.target & ~full:
            raise ValueError(f"target {self.target:#x} is empty or out of range")
        if not is_clique(self.graph, self.target):
            raise ValueError(f"target {members(self.target)} is not a clique")
        for c in self.conditions:
            if not c or c & ~full:
                raise ValueError(f"condition {c:#x} is empty or out of range")
            if not is_clique(self.graph, c):
                raise ValueError(f"condition {members(c)} is not a clique")
        if self.labels is not None and len(self.labels) != self.graph.n:
            raise ValueError("labels must name every vertex")

    @property
    def covers_all(self) -> bool:
        u = self.target
        for c in self.conditions:
            u |= c
        return u == self.graph.vertex_mask

    def label(self, mask: int) -> tuple[int, ...]:
        vs = members(mask)
        return tuple(self.labels[v] for v in vs) if self.labels is not None else vs

    def theta_problem(self) -> ThetaProblem:
        return ThetaProblem.with_target(self.graph, self.conditions, self.target)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "graph6": write_graph6(self.graph),
            "conditions": [list(members(c)) for c in self.conditions],
            "target": list(members(self.target)),
        }
        if self.labels is not None:
            d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProofInstance":
        labels = d.get("labels")
        return cls(
            parse_graph6(d["graph6"]),
            tuple(mask_of(c) for c in d["conditions"]),
            mask_of(d["target"]),
            labels=tuple(labels) if labels is not None else None,
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ClassicalVerdict:
    kind: VerdictKind
    surviving_sets: tuple[int, ...]
    witness: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "surviving_sets": [list(members(s)) for s in self.surviving_sets],
            "witness": list(members(self.witness)) if self.witness is not None else None,
        }


@lru_cache(maxsize=256)
def _mis(g: ExclusivityGraph) -> tuple[int, ...]:
    return tuple(maximal_independent_sets(g))


def classical_check(inst: ProofInstance) -> ClassicalVerdict:
    """Classify the instance over deterministic noncontextual assignments.

    A 0/1 assignment satisfies a clique condition exactly when its support,
    an independent set, meets the clique; extending it to a maximal
    independent set keeps every condition satisfied.
    """
    pre = tuple(i for i in _mis(inst.graph) if all(i & c for c in inst.conditions))
    if not pre:
        return ClassicalVerdict(VerdictKind.CONDITIONS_INFEASIBLE, pre)
    for i in pre:
        if i & inst.target:
            return ClassicalVerdict(VerdictKind.ACHIEVABLE, pre, witness=i)
    return ClassicalVerdict(VerdictKind.FORCED_ZERO, pre)


def brute_force_check(inst: ProofInstance) -> VerdictKind:
    """Reference verdict by scanning all ``2^n`` 0/1 assignments."""
    g = inst.graph
    feasible = positive = False
    for s in range(1 << g.n):
        if any(s >> v & 1 and s & g.adj[v] for v in range(g.n)):
            continue
        # a clique condition sums to 1 iff exactly one of its members is 1
        if any(bin(s & c).count("1") != 1 for c in inst.conditions):
            continue
        feasible = True
        if s & inst.target:
            positive = True
            break
    if not feasible:
        return VerdictKind.CONDITIONS_INFEASIBLE
    return VerdictKind.ACHIEVABLE if positive else VerdictKind.FORCED_ZERO


def reroot(inst: ProofInstance) -> list[ProofInstance]:
    """Promote each condition in turn to the target, keeping the rest as conditions.

    Used when the conditions alone are classically infeasible: the old target
    joins the conditions.
    """
    family = list(dict.fromkeys((inst.target,) + inst.conditions))
    out = []
    for k, c in enumerate(family):
        if k == 0:
            continue
        rest = tuple(x for j, x in enumerate(family) if j != k)
        out.append(ProofInstance(inst.graph, rest, c, labels=inst.labels))
    return out


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    max_clique_pool_size: int = 4096
    eps_ghz: float = 1e-6
    eps_hardy: float = 1e-6
    coverage_required: bool = True
    symmetry_pruning: bool = True
    worker_count: int = 1
    checkpoint_path: str | None = None
    # "maximal": conditions drawn from maximal cliques; "all": from every clique
    condition_pool: str = "maximal"

    def __post_init__(self):
        if self.condition_pool not in ("maximal", "all"):
            raise ValueError(f"condition_pool must be 'maximal' or 'all', got {self.condition_pool!r}")
        for name in ("eps_ghz", "eps_hardy"):
            eps = getattr(self, name)
            if not 0 < eps < 1e-3:
                raise ValueError(f"{name} must lie in (0, 1e-3), got {eps}")
        if self.max_clique_pool_size < 1:
            raise ValueError("max_clique_pool_size must be positive")
        if self.worker_count < 1:
            raise ValueError("worker_count must be positive")

    def search_dict(self) -> dict[str, Any]:
        """Settings that affect results (not where or how fast they are computed)."""
        return {
            "max_clique_pool_size": self.max_clique_pool_size,
            "eps_ghz": self.eps_ghz,
            "eps_hardy": self.eps_hardy,
            "coverage_required": self.coverage_required,
            "symmetry_pruning": self.symmetry_pruning,
            "condition_pool": self.condition_pool,
        }


# ---------------------------------------------------------------------------
# candidate enumeration
# ---------------------------------------------------------------------------

_GROUP_CAP = 50_000


def _group_closure(gens: Sequence[tuple[int, ...]], n: int, cap: int = _GROUP_CAP) -> list[tuple[int, ...]] | None:
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for s in gens:
                q = tuple(s[p[v]] for v in range(n))
                if q not in seen:
                    seen.add(q)
                    if len(seen) > cap:
                        return None
                    nxt.append(q)
        frontier = nxt
    return sorted(seen)


def _mask_orbit(mask: int, gens: Sequence[tuple[int, ...]]) -> set[int]:
    orbit = {mask}
    stack = [mask]
    while stack:
        m = stack.pop()
        for s in gens:
            r = _remap(m, s)
            if r not in orbit:
                orbit.add(r)
                stack.append(r)
    return orbit


def _minimal_transversals(edges: list[int], feasible: Callable[[int], bool]) -> Iterator[int]:
    """Minimal hitting sets of ``edges`` (bitmasks over an item universe).

    Depth-first MMCS: branch on the items of the uncovered edge with fewest
    candidates, keep only extensions where every chosen item still has a
    private edge, and cut any branch rejected by the downward-closed
    ``feasible`` predicate.
    """
    universe = 0
    for e in edges:
        universe |= e

    def private_ok(sel: int) -> bool:
        need = sel
        for e in edges:
            h = e & sel
            if h and h & (h - 1) == 0:
                need &= ~h
                if not need:
                    return True
        return not need

    def rec(sel: int, cand: int, uncov: list[int]) -> Iterator[int]:
        if not uncov:
            yield sel
            return
        pick = min(uncov, key=lambda e: bin(e & cand).count("1"))
        branch = pick & cand
        cand &= ~branch
        while branch:
            low = branch & -branch
            branch ^= low
            nsel = sel | low
            if feasible(nsel) and private_ok(nsel):
                yield from rec(nsel, cand, [e for e in uncov if not e & low])
            cand |= low

    yield from rec(0, universe, list(edges))


def _minimal_sets(masks: Iterable[int], keep_max: bool) -> list[int]:
    items = sorted(set(masks), key=lambda m: bin(m).count("1"), reverse=keep_max)
    out: list[int] = []
    for m in items:
        if keep_max:
            if not any(m & ~o == 0 for o in out):
                out.append(m)
        elif not any(o & ~m == 0 for o in out):
            out.append(m)
    return out


def _clique_pool(g: ExclusivityGraph, cfg: SearchConfig) -> list[int]:
    pool = all_cliques(g)
    if len(pool) > cfg.max_clique_pool_size:
        raise PoolOverflow(len(pool), cfg.max_clique_pool_size)
    return pool


def enumerate_candidates(g: ExclusivityGraph, cfg: SearchConfig | None = None) -> Iterator[ProofInstance]:
    """Minimal ForcedZero condition families for every target clique of ``g``.

    For a target ``C0`` the maximal independent sets split into Bad (meeting
    ``C0``) and Good (missing it).  A family forces ``C0`` to zero while
    staying classically feasible iff it hits, for every Bad set, some clique
    that set misses, and some Good set meets all of it.  The minimal such
    families are the minimal transversals of the Bad hypergraph, restricted
    by Good-set feasibility.  With coverage required, one more edge per
    vertex outside ``C0`` (the cliques containing it) makes the families
    minimal for ForcedZero and coverage jointly.  Cliques disjoint from
    ``C0`` whose union with ``C0`` is a clique are left out: as a condition
    such a clique pins the target to zero in every theory.

    Conditions come from the maximal cliques by default.  A non-maximal
    condition zeroes every common neighbour of its clique in both theories,
    so such an instance is equivalent to one on the induced subgraph without
    those vertices, in which every condition is maximal.
    """
    cfg = cfg or SearchConfig()
    pool = _clique_pool(g, cfg)
    if cfg.condition_pool == "maximal":
        conditions = [c for c in pool if not any(g.adj[v] & c == c for v in members(g.vertex_mask & ~c))]
    else:
        conditions = pool
    mis = _mis(g)
    full = g.vertex_mask
    gens = automorphism_generators(g) if cfg.symmetry_pruning else []
    group = _group_closure(gens, g.n) if gens else None
    seen_targets: set[int] = set()

    for t in pool:
        if cfg.symmetry_pruning and gens:
            if t in seen_targets:
                continue
            seen_targets |= _mask_orbit(t, gens)
        bad = [i for i in mis if i & t]
        good = [i for i in mis if not i & t]
        if not good:
            continue
        items = [c for c in conditions if c & t or not is_clique(g, c | t)]
        edges = []
        for b in bad:
            e = 0
            for k, c in enumerate(items):
                if not b & c:
                    e |= 1 << k
            if not e:
                break
            edges.append(e)
        else:
            if cfg.coverage_required:
                # every vertex outside the target must lie in some condition
                for v in members(full & ~t):
                    e = 0
                    for k, c in enumerate(items):
                        if c >> v & 1:
                            e |= 1 << k
                    if not e:
                        break
                    edges.append(e)
                else:
                    e = -1
                if e == 0:
                    continue
            hits = []
            for gd in good:
                h = 0
                for k, c in enumerate(items):
                    if gd & c:
                        h |= 1 << k
                hits.append(h)
            hits = _minimal_sets(hits, keep_max=True)
            edges = _minimal_sets(edges, keep_max=False)

            def feasible(sel: int) -> bool:
                return any(sel & ~h == 0 for h in hits)

            stab = None
            if group is not None and cfg.symmetry_pruning:
                stab = [p for p in group if _remap(t, p) == t]
            seen_families: set[tuple[int, ...]] = set()
            for sel in _minimal_transversals(edges, feasible):
                conds = tuple(items[k] for k in members(sel))
                if stab is not None:
                    key = min(tuple(sorted(_remap(c, p) for c in conds)) for p in stab)
                    if key in seen_families:
                        continue
                    seen_families.add(key)
                yield ProofInstance(g, conds, t)


def instance_orbit_key(inst: ProofInstance) -> tuple:
    """Invariant of the instance under the automorphisms used for pruning."""
    gens = automorphism_generators(inst.graph)
    group = _group_closure(gens, inst.graph.n) or [tuple(range(inst.graph.n))]
    return min(
        (_remap(inst.target, p), tuple(sorted(_remap(c, p) for c in set(inst.conditions))))
        for p in group
    )


# ---------------------------------------------------------------------------
# quantum side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProofCertificate:
    instance: ProofInstance
    classical: ClassicalVerdict
    quantum: CertifiedInterval
    kind: CertificateKind
    sdp_status: SdpStatus
    primal_value: float
    residuals: dict[str, float] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance": self.instance.to_dict(),
            "classical": self.classical.kind.value,
            "kind": self.kind.value,
            "sdp_status": self.sdp_status.value,
            "lower": self.quantum.lower,
            "upper": self.quantum.upper,
            "primal_value": self.primal_value,
            "residuals": dict(self.residuals),
        }

    def digest(self) -> str:
        return f"{self.kind.value}:{self.instance.digest()}"


def quantum_check(inst: ProofInstance, cfg: SearchConfig | None = None, classical: ClassicalVerdict | None = None) -> ProofCertificate:
    """Certify the quantum maximum of the target under the conditions and classify."""
    cfg = cfg or SearchConfig()
    classical = classical or classical_check(inst)
    if classical.kind is not VerdictKind.FORCED_ZERO:
        raise PreconditionFailed(f"classical verdict is {classical.kind.value}, not ForcedZero")
    p = inst.theta_problem()
    sol = solve(p)
    try:
        iv = certified_bounds(p, sol)
    except CertificationFailed as exc:
        up = exc.upper if exc.upper is not None else float("inf")
        iv = CertifiedInterval(float("-inf"), up)
    if iv.lower >= 1 - cfg.eps_ghz:
        kind = CertificateKind.GHZ
    elif iv.lower >= cfg.eps_hardy:
        kind = CertificateKind.HARDY
    elif iv.upper < cfg.eps_hardy:
        kind = CertificateKind.NONE
    else:
        kind = CertificateKind.BORDERLINE
    return ProofCertificate(
        inst, classical, iv, kind, sol.status, sol.primal_value,
        residuals={k: float(v) for k, v in sol.residuals.items()},
    )


def _search(g: ExclusivityGraph, cfg: SearchConfig) -> tuple[list[ProofCertificate], int]:
    found = []
    tested = 0
    for inst in enumerate_candidates(g, cfg):
        tested += 1
        cert = quantum_check(inst, cfg)
        if cert.kind is not CertificateKind.NONE:
            found.append(cert)
    return found, tested


def search_graph(g: ExclusivityGraph, cfg: SearchConfig | None = None) -> list[ProofCertificate]:
    """Hardy, GHZ and borderline certificates over all candidate instances of ``g``."""
    return _search(g, cfg or SearchConfig())[0]


# ---------------------------------------------------------------------------
# campaign
# ---------------------------------------------------------------------------


def analyze_graph(g6: str, cfg: SearchConfig) -> dict[str, Any]:
    """One checkpoint record for the graph with canonical graph6 ``g6``."""
    t0 = time.perf_counter()
    g = parse_graph6(g6)
    rec: dict[str, Any] = {"key": g6, "n": g.n}
    try:
        certs, tested = _search(g, cfg)
    except PoolOverflow as exc:
        rec.update(status="pool_overflow", pool_size=exc.size, instances=0, ghz=[], hardy=[], borderline=[])
    else:
        by = {k: sorted(c.digest() for c in certs if c.kind is k) for k in CertificateKind}
        rec.update(
            status="ok",
            instances=tested,
            ghz=by[CertificateKind.GHZ],
            hardy=by[CertificateKind.HARDY],
            borderline=by[CertificateKind.BORDERLINE],
        )
    rec["seconds"] = round(time.perf_counter() - t0, 6)
    return rec


def _analyze_star(args):
    return analyze_graph(*args)


@dataclass
class CampaignReport:
    n_max: int
    config: dict[str, Any]
    graphs_per_n: dict[int, int]
    instances_per_n: dict[int, int]
    hardy_per_n: dict[int, int]
    ghz_per_n: dict[int, int]
    ghz_graphs: list[str]
    hardy_graphs: list[str]
    borderline_graphs: list[str]
    overflow_graphs: list[str]
    seconds_total: float = 0.0
    seconds_max: float = 0.0
    slowest_graph: str | None = None

    @property
    def total_graphs(self) -> int:
        return sum(self.graphs_per_n.values())

    @property
    def total_ghz(self) -> int:
        return sum(self.ghz_per_n.values())

    @property
    def total_hardy(self) -> int:
        return sum(self.hardy_per_n.values())

    @property
    def complete(self) -> bool:
        """True when no graph was left unresolved."""
        return not self.borderline_graphs and not self.overflow_graphs

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        d = {
            "schema": REPORT_SCHEMA,
            "n_max": self.n_max,
            "config": self.config,
            "graphs_per_n": {str(k): v for k, v in sorted(self.graphs_per_n.items())},
            "instances_per_n": {str(k): v for k, v in sorted(self.instances_per_n.items())},
            "hardy_per_n": {str(k): v for k, v in sorted(self.hardy_per_n.items())},
            "ghz_per_n": {str(k): v for k, v in sorted(self.ghz_per_n.items())},
            "total_graphs": self.total_graphs,
            "total_hardy": self.total_hardy,
            "total_ghz": self.total_ghz,
            "ghz_graphs": self.ghz_graphs,
            "hardy_graphs": self.hardy_graphs,
            "borderline_graphs": self.borderline_graphs,
            "overflow_graphs": self.overflow_graphs,
        }
        if timing:
            d["timing"] = {
                "seconds_total": self.seconds_total,
                "seconds_max": self.seconds_max,
                "slowest_graph": self.slowest_graph,
            }
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_records(cls, n_max: int, cfg: SearchConfig, records: Iterable[dict[str, Any]]) -> "CampaignReport":
        rep = cls(n_max, cfg.search_dict(), {}, {}, {}, {}, [], [], [], [])
        for n in range(1, n_max + 1):
            for tbl in (rep.graphs_per_n, rep.instances_per_n, rep.hardy_per_n, rep.ghz_per_n):
                tbl[n] = 0
        for r in sorted(records, key=lambda r: (r["n"], r["key"])):
            n = r["n"]
            rep.graphs_per_n[n] += 1
            rep.instances_per_n[n] += r["instances"]
            rep.hardy_per_n[n] += len(r["hardy"])
            rep.ghz_per_n[n] += len(r["ghz"])
            if r["ghz"]:
                rep.ghz_graphs.append(r["key"])
            if r["hardy"]:
                rep.hardy_graphs.append(r["key"])
            if r["borderline"]:
                rep.borderline_graphs.append(r["key"])
            if r["status"] == "pool_overflow":
                rep.overflow_graphs.append(r["key"])
            s = float(r.get("seconds", 0.0))
            rep.seconds_total += s
            if s > rep.seconds_max:
                rep.seconds_max, rep.slowest_graph = s, r["key"]
        rep.seconds_total = round(rep.seconds_total, 6)
        return rep


_RECORD_FIELDS = {"key", "n", "status", "instances", "ghz", "hardy", "borderline"}


def _read_checkpoint(path: Path, cfg: SearchConfig, n_max: int) -> dict[str, dict[str, Any]]:
    """Completed records keyed by graph6.

    A final line without its newline is an interrupted write and is dropped;
    anything else malformed raises :class:`CheckpointCorrupt`.
    """
    done: dict[str, dict[str, Any]] = {}
    raw = path.read_text()
    lines = raw.split("\n")
    if lines and lines[-1] != "":
        lines = lines[:-1]  # interrupted final write
        with open(path, "w") as fh:
            fh.write("".join(line + "\n" for line in lines if line))
    lines = [line for line in lines if line]
    if not lines:
        return done
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CheckpointCorrupt(f"{path}:1: unreadable header") from exc
    if header.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointCorrupt(f"{path}:1: unknown schema {header.get('schema')!r}")
    if header.get("config") != cfg.search_dict():
        raise CheckpointCorrupt(f"{path}:1: checkpoint was written with a different search configuration")
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CheckpointCorrupt(f"{path}:{lineno}: unreadable record") from exc
        if not isinstance(rec, dict) or not _RECORD_FIELDS <= rec.keys():
            raise CheckpointCorrupt(f"{path}:{lineno}: record is missing fields")
        if rec["key"] in done:
            raise CheckpointCorrupt(f"{path}:{lineno}: duplicate record for {rec['key']}")
        if rec["n"] <= n_max:
            done[rec["key"]] = rec
    return done


def run_campaign(
    n_max: int,
    cfg: SearchConfig | None = None,
    progress: Callable[[dict[str, Any]], None] | None = None,
    stop_after: int | None = None,
) -> CampaignReport:
    """Search every graph on 1..``n_max`` vertices.

    With ``cfg.checkpoint_path`` set, each finished graph is appended as one
    JSON line and already-recorded graphs are skipped on the next run.
    ``stop_after`` ends the run after that many new graphs (for testing
    interruption); the returned report then covers only what is recorded.
    """
    cfg = cfg or SearchConfig()
    if n_max > 9 and not os.environ.get("KSCONTEXT_ALLOW_LARGE_CAMPAIGN"):
        raise ValueError("n_max > 9 needs KSCONTEXT_ALLOW_LARGE_CAMPAIGN=1")
    done: dict[str, dict[str, Any]] = {}
    sink = None
    if cfg.checkpoint_path:
        path = Path(cfg.checkpoint_path)
        if path.exists() and path.stat().st_size:
            done = _read_checkpoint(path, cfg, n_max)
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps({"schema": CHECKPOINT_SCHEMA, "config": cfg.search_dict(), "version": __version__}) + "\n")
        sink = open(path, "a")

    def todo() -> Iterator[tuple[str, SearchConfig]]:
        for n in range(1, n_max + 1):
            for g in enumerate_nonisomorphic_graphs(n, max_vertices=max(n_max, 9)):
                key = write_graph6(g)
                if key not in done:
                    yield key, cfg

    records = dict(done)
    new = 0
    pool = multiprocessing.Pool(cfg.worker_count) if cfg.worker_count > 1 else None
    try:
        results = pool.imap_unordered(_analyze_star, todo(), chunksize=8) if pool else map(_analyze_star, todo())
        for rec in results:
            records[rec["key"]] = rec
            if sink:
                sink.write(json.dumps(rec, sort_keys=True) + "\n")
                sink.flush()
            if progress:
                progress(rec)
            new += 1
            if stop_after is not None and new >= stop_after:
                break
    finally:
        if pool:
            pool.terminate()
        if sink:
            sink.close()
    return CampaignReport.from_records(n_max, cfg, records.values())
