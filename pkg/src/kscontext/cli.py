"""Command-line front end.

Every command prints one JSON result record on stdout (``--format json``,
the default, with a one-line summary on stderr) or just the summary
(``--format text``).  Exit codes: 0 success (KS set, certified),
1 negative verdict (not a KS set, replay mismatch), 2 input error,
3 numerical limit.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .catalog import CatalogError, ceg18_contexts, context_index, get_entry, list_entries
from .graphs import Graph6Error, enumerate_nonisomorphic_graphs, members, parse_graph6, write_graph6
from .kssets import (
    KSReport,
    NotKS,
    RootContainsState,
    VectorSet,
    VectorSetError,
    find_complete_contexts,
    ks_to_ghz,
    parse_vector_set,
    quantum_probabilities,
    verify_ks_set,
)
from .proofsearch import (
    CertificateKind,
    CheckpointCorrupt,
    PoolOverflow,
    SearchConfig,
    classical_check,
    quantum_check,
    run_campaign,
    search_graph,
)
from .thetasdp import CertificationFailed, SdpStatus, ThetaProblem, certified_bounds, solve

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
CHECKPOINT_DIR_ENV = "KSCONTEXT_CHECKPOINT_DIR"
RECORD_SCHEMA = "kscontext-result/1"


class InputError(Exception):
    pass


@dataclass
class ResultRecord:
    command: str
    inputs: dict[str, Any]
    outputs: dict[str, Any]
    residuals: dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0
    version: str = __version__
    wall_time: float = 0.0
    schema: str = RECORD_SCHEMA

    @property
    def inputs_digest(self) -> str:
        blob = json.dumps(self.inputs, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["inputs_digest"] = self.inputs_digest
        return _jsonable(d)

    def comparable(self) -> dict[str, Any]:
        """The record without run-dependent fields (timings)."""
        d = self.to_dict()
        d.pop("wall_time")
        return _strip_timing(d)


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in ("timing", "seconds", "wall_time")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _jsonable(obj.item())
    return obj


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _load_vectors(spec: str) -> tuple[VectorSet, dict[str, Any], list[int] | None]:
    """Vector set from ``catalog:<id>`` or a file; also the replayable input."""
    if spec.startswith("catalog:"):
        try:
            entry = get_entry(spec)
        except CatalogError as exc:
            raise InputError(str(exc)) from None
        if entry.kind != "vector-set":
            raise InputError(f"{spec} is a {entry.kind}, not a vector set")
        ctx = ceg18_contexts() if entry.id == "ceg18" else None
        return entry.payload, {"catalog": entry.id}, ctx
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {spec}: {exc.strerror}") from None
    return _vectors_from_text(text), {"vectors_text": text}, None


def _vectors_from_text(text: str) -> VectorSet:
    try:
        return parse_vector_set(text)
    except VectorSetError as exc:
        raise InputError(str(exc)) from None


def _vectors_from_input(inp: dict[str, Any]) -> tuple[VectorSet, list[int] | None]:
    if "catalog" in inp:
        entry = get_entry(inp["catalog"])
        return entry.payload, (ceg18_contexts() if entry.id == "ceg18" else None)
    return _vectors_from_text(inp["vectors_text"]), None


def _config(inp: dict[str, Any]) -> SearchConfig:
    try:
        return SearchConfig(
            max_clique_pool_size=inp["max_clique_pool"],
            eps_ghz=inp["eps_ghz"],
            eps_hardy=inp["eps_hardy"],
            coverage_required=inp["coverage"],
            symmetry_pruning=inp["symmetry"],
            condition_pool=inp["condition_pool"],
            worker_count=inp.get("workers", 1),
            checkpoint_path=inp.get("checkpoint"),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _config_inputs(args) -> dict[str, Any]:
    return {
        "max_clique_pool": args.max_clique_pool,
        "eps_ghz": args.eps_ghz,
        "eps_hardy": args.eps_hardy,
        "coverage": not args.no_coverage,
        "symmetry": not args.no_symmetry,
        "condition_pool": args.condition_pool,
    }


def _context_label(mask: int, labels=None) -> list[int]:
    vs = members(mask)
    return [labels[v] for v in vs] if labels is not None else list(vs)


# ---------------------------------------------------------------------------
# commands: each takes the replayable ``inputs`` dict and returns a record
# ---------------------------------------------------------------------------


def run_verify_ks(inp: dict[str, Any]) -> ResultRecord:
    vs, ctx_order = _vectors_from_input(inp)
    rep: KSReport = verify_ks_set(vs)
    contexts = rep.contexts
    if ctx_order is not None and sorted(ctx_order) == sorted(contexts):
        contexts = ctx_order
    per_vector = [sum(1 for c in contexts if c >> v & 1) for v in range(vs.n)]
    out = {
        "is_ks": rep.is_ks,
        "n_vectors": vs.n,
        "dimension": vs.dim,
        "contexts": [list(members(c)) for c in contexts],
        "n_contexts": len(contexts),
        "contexts_per_vector": per_vector,
        "witness": list(rep.witness) if rep.witness is not None else None,
    }
    return ResultRecord("verify-ks", inp, out, exit_code=EXIT_OK if rep.is_ks else EXIT_NEGATIVE)


def run_ks_to_ghz(inp: dict[str, Any]) -> ResultRecord:
    vs, ctx_order = _vectors_from_input(inp)
    contexts = ctx_order if ctx_order is not None else find_complete_contexts(vs)
    root = inp.get("root")
    root_idx = None
    if root is not None:
        try:
            root_idx = context_index(root) if ctx_order is not None else int(str(root).lstrip("Cc")) - 1
        except (CatalogError, ValueError):
            raise InputError(f"bad root context {root!r}") from None
        if not 0 <= root_idx < len(contexts):
            raise InputError(f"root context {root!r} out of range 1..{len(contexts)}")
    state = inp["state"]
    if not 0 <= state < vs.n:
        raise InputError(f"state index {state} out of range 0..{vs.n - 1}")
    try:
        instances = ks_to_ghz(vs, state, root_context=root_idx, contexts=contexts)
    except RootContainsState as exc:
        raise InputError(str(exc)) from None
    probs = quantum_probabilities(vs, state)
    cfg = SearchConfig()
    emitted = []
    worst = EXIT_OK
    residuals = {}
    for inst in instances:
        lab = inst.labels
        classical = classical_check(inst)
        record = {
            "root": f"C{contexts.index(_root_mask(inst, contexts)) + 1}",
            "events": list(lab),
            "conditions": [_context_label(c, lab) for c in inst.conditions],
            "target": _context_label(inst.target, lab),
            "classical": classical.kind.value,
            "exact_target_value": str(sum(probs[lab[v]] for v in members(inst.target))),
            "exact_conditions_hold": all(
                sum(probs[lab[v]] for v in members(c)) == 1 for c in inst.conditions
            ),
        }
        if classical.kind.value == "ForcedZero":
            cert = quantum_check(inst, cfg, classical)
            record.update(kind=cert.kind.value, lower=cert.quantum.lower, upper=cert.quantum.upper)
            residuals[record["root"]] = cert.residuals
            if cert.kind is CertificateKind.BORDERLINE:
                worst = max(worst, EXIT_NUMERICAL)
        else:
            record.update(kind="None", lower=None, upper=None)
        emitted.append(record)
    out = {"state": state, "instances": emitted, "all_ghz": all(r["kind"] == "GHZ" for r in emitted)}
    return ResultRecord("ks-to-ghz", inp, out, residuals=residuals, exit_code=worst)


def _root_mask(inst, contexts: Sequence[int]) -> int:
    want = set(inst.label(inst.target))
    for c in contexts:
        if want <= set(members(c)):
            rest = set(members(c)) - want
            if not rest & set(inst.labels):
                return c
    raise InputError("root context of emitted instance not found")  # pragma: no cover


def _cert_dict(cert) -> dict[str, Any]:
    inst = cert.instance
    return {
        "kind": cert.kind.value,
        "target": list(members(inst.target)),
        "conditions": [list(members(c)) for c in inst.conditions],
        "lower": cert.quantum.lower,
        "upper": cert.quantum.upper,
        "sdp_status": cert.sdp_status.value,
    }


def run_search(inp: dict[str, Any]) -> ResultRecord:
    try:
        g = parse_graph6(inp["graph"])
    except Graph6Error as exc:
        raise InputError(f"bad graph6: {exc}") from None
    cfg = _config(inp)
    try:
        certs = search_graph(g, cfg)
    except PoolOverflow as exc:
        out = {"graph": write_graph6(g), "pool_overflow": exc.size, "certificates": []}
        return ResultRecord("search", inp, out, exit_code=EXIT_NUMERICAL)
    out = {
        "graph": write_graph6(g),
        "n": g.n,
        "certificates": [_cert_dict(c) for c in certs],
        "hardy": sum(c.kind is CertificateKind.HARDY for c in certs),
        "ghz": sum(c.kind is CertificateKind.GHZ for c in certs),
        "borderline": sum(c.kind is CertificateKind.BORDERLINE for c in certs),
    }
    code = EXIT_NUMERICAL if out["borderline"] else EXIT_OK
    return ResultRecord("search", inp, out, exit_code=code)


def run_campaign_cmd(inp: dict[str, Any]) -> ResultRecord:
    cfg = _config(inp)
    n_max = inp["nmax"]
    if not 1 <= n_max <= 9:
        raise InputError("--nmax must lie in 1..9")
    done = [0]

    def progress(rec):
        done[0] += 1
        if done[0] % 500 == 0:
            _say(f"  {done[0]} graphs analysed (last n={rec['n']})")

    try:
        rep = run_campaign(n_max, cfg, progress=progress)
    except CheckpointCorrupt as exc:
        raise InputError(f"checkpoint corrupt: {exc}") from None
    out = rep.to_dict(timing=True)
    code = EXIT_OK if rep.complete else EXIT_NUMERICAL
    # the checkpoint location does not change results
    inp = {k: v for k, v in inp.items() if k not in ("checkpoint", "workers")}
    return ResultRecord("campaign", inp, out, exit_code=code)


def run_solve(inp: dict[str, Any]) -> ResultRecord:
    try:
        p = ThetaProblem.from_dict(inp["problem"])
    except (KeyError, ValueError, TypeError, Graph6Error) as exc:
        raise InputError(f"bad problem: {exc}") from None
    sol = solve(p)
    out: dict[str, Any] = {"status": sol.status.value, "primal_value": sol.primal_value, "dual_bound": sol.dual_bound}
    try:
        iv = certified_bounds(p, sol)
        out.update(lower=iv.lower, upper=iv.upper, certified=True)
    except CertificationFailed as exc:
        out.update(lower=None, upper=exc.upper, certified=False, reason=str(exc))
    code = EXIT_NUMERICAL if sol.status is SdpStatus.NUMERICAL_LIMIT else EXIT_OK
    return ResultRecord("solve", inp, out, residuals=dict(sol.residuals), exit_code=code)


def run_gen_graphs(inp: dict[str, Any]) -> ResultRecord:
    n = inp["n"]
    if not 1 <= n <= 9:
        raise InputError("n must lie in 1..9")
    if inp.get("count_only"):
        out = {"n": n, "count": sum(1 for _ in enumerate_nonisomorphic_graphs(n))}
    else:
        gs = [write_graph6(g) for g in enumerate_nonisomorphic_graphs(n)]
        out = {"n": n, "count": len(gs), "graphs": gs}
    return ResultRecord("gen-graphs", inp, out)


def run_catalog(inp: dict[str, Any]) -> ResultRecord:
    if inp.get("id"):
        try:
            out = get_entry(inp["id"]).to_dict()
        except CatalogError as exc:
            raise InputError(str(exc)) from None
    else:
        out = {"entries": [{"id": e.id, "kind": e.kind, "note": e.note} for e in list_entries()]}
    return ResultRecord("catalog", inp, out)


RUNNERS = {
    "verify-ks": run_verify_ks,
    "ks-to-ghz": run_ks_to_ghz,
    "search": run_search,
    "campaign": run_campaign_cmd,
    "solve": run_solve,
    "gen-graphs": run_gen_graphs,
    "catalog": run_catalog,
}


def execute(command: str, inp: dict[str, Any]) -> ResultRecord:
    t0 = time.perf_counter()
    rec = RUNNERS[command](inp)
    rec.wall_time = round(time.perf_counter() - t0, 6)
    return rec


def run_replay(inp: dict[str, Any]) -> ResultRecord:
    old = inp["record"]
    if old.get("schema") != RECORD_SCHEMA or old.get("command") not in RUNNERS:
        raise InputError("not a replayable result record")
    new = execute(old["command"], old["inputs"])
    same = new.comparable() == _strip_timing({k: v for k, v in old.items() if k != "wall_time"})
    out = {"command": old["command"], "identical": same}
    return ResultRecord("replay", {"record_digest": old.get("inputs_digest")}, out, exit_code=EXIT_OK if same else EXIT_NEGATIVE)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_search_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--eps-ghz", type=float, default=1e-6)
    sp.add_argument("--eps-hardy", type=float, default=1e-6)
    sp.add_argument("--max-clique-pool", type=int, default=4096)
    sp.add_argument("--no-coverage", action="store_true", help="do not require conditions and target to cover all vertices")
    sp.add_argument("--no-symmetry", action="store_true", help="disable automorphism pruning")
    sp.add_argument("--condition-pool", choices=("maximal", "all"), default="maximal")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--checkpoint", help=f"JSONL checkpoint (default: ${CHECKPOINT_DIR_ENV}/campaign-n<N>.jsonl if set)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kscontext", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--format", choices=("json", "text"), default="json")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-ks", help="check whether a vector set is a KS set")
    sp.add_argument("input", help="vector file or catalog:<id>")

    sp = sub.add_parser("ks-to-ghz", help="derive state-dependent GHZ-type instances from a KS set")
    sp.add_argument("input")
    sp.add_argument("--state", type=int, required=True)
    sp.add_argument("--root", help="root context, e.g. C7 (default: all admissible roots)")

    sp = sub.add_parser("search", help="search one graph, or all graphs up to --nmax")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--graph", help="graph6 string")
    grp.add_argument("--nmax", type=int)
    _add_search_flags(sp)

    sp = sub.add_parser("campaign", help="search all graphs on 1..nmax vertices")
    sp.add_argument("--nmax", type=int, required=True)
    _add_search_flags(sp)

    sp = sub.add_parser("solve", help="solve a serialized theta-body problem")
    sp.add_argument("--problem", required=True, help="JSON file with graph6, conditions, objective or target")

    sp = sub.add_parser("gen-graphs", help="list non-isomorphic graphs on n vertices")
    sp.add_argument("n", type=int)
    sp.add_argument("--count", action="store_true", help="print only the count")

    sp = sub.add_parser("catalog", help="list or show built-in datasets")
    sp.add_argument("id", nargs="?")

    sp = sub.add_parser("replay", help="re-run a JSON result record and compare")
    sp.add_argument("record", help="file holding a JSON result record ('-' for stdin)")
    return ap


def _inputs_from_args(args) -> tuple[str, dict[str, Any]]:
    cmd = args.command
    if cmd == "verify-ks":
        _, inp, _ = _load_vectors(args.input)
        return cmd, inp
    if cmd == "ks-to-ghz":
        _, inp, _ = _load_vectors(args.input)
        inp.update(state=args.state, root=args.root)
        return cmd, inp
    if cmd in ("search", "campaign"):
        inp = _config_inputs(args)
        if cmd == "search" and args.graph is not None:
            inp["graph"] = args.graph
            return "search", inp
        inp["nmax"] = args.nmax
        inp["workers"] = args.workers
        ckpt = args.checkpoint
        if ckpt is None and os.environ.get(CHECKPOINT_DIR_ENV):
            ckpt = str(Path(os.environ[CHECKPOINT_DIR_ENV]) / f"campaign-n{args.nmax}.jsonl")
        inp["checkpoint"] = ckpt
        return "campaign", inp
    if cmd == "solve":
        try:
            return cmd, {"problem": json.loads(Path(args.problem).read_text())}
        except OSError as exc:
            raise InputError(f"cannot read {args.problem}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.problem}: invalid JSON ({exc})") from None
    if cmd == "gen-graphs":
        return cmd, {"n": args.n, "count_only": args.count}
    if cmd == "catalog":
        return cmd, {"id": args.id}
    raise AssertionError(cmd)


def _summary(rec: ResultRecord) -> str:
    o = rec.outputs
    if rec.command == "verify-ks":
        return f"is_ks={o['is_ks']} contexts={o['n_contexts']} vectors={o['n_vectors']}"
    if rec.command == "ks-to-ghz":
        parts = [f"{r['root']}: {len(r['events'])} events target={r['target']} {r['kind']}" for r in o["instances"]]
        return "\n".join(parts) or "no instances"
    if rec.command == "search":
        return f"{o.get('hardy', 0)} Hardy, {o.get('ghz', 0)} GHZ, {o.get('borderline', 0)} borderline certificates"
    if rec.command == "campaign":
        return (
            f"{o['total_graphs']} graphs, {o['total_hardy']} Hardy, {o['total_ghz']} GHZ, "
            f"{len(o['borderline_graphs'])} borderline, {len(o['overflow_graphs'])} overflow"
        )
    if rec.command == "solve":
        return f"{o['status']} interval [{o['lower']}, {o['upper']}]"
    if rec.command == "gen-graphs":
        return f"{o['count']} graphs on {o['n']} vertices"
    if rec.command == "catalog":
        if "entries" in o:
            return "\n".join(f"{e['id']:16} {e['kind']:15} {e['note']}" for e in o["entries"])
        return f"{o['id']} ({o['kind']}): {o['note']}"
    if rec.command == "replay":
        return f"replay of {o['command']}: {'identical' if o['identical'] else 'DIFFERENT'}"
    return rec.command


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "replay":
            text = sys.stdin.read() if args.record == "-" else Path(args.record).read_text()
            try:
                rec = run_replay({"record": json.loads(text)})
            except json.JSONDecodeError as exc:
                raise InputError(f"record is not JSON: {exc}") from None
        else:
            cmd, inp = _inputs_from_args(args)
            rec = execute(cmd, inp)
    except (InputError, OSError) as exc:
        _say(f"error: {exc}")
        if args.format == "json":
            print(json.dumps({"schema": RECORD_SCHEMA, "command": args.command, "error": str(exc), "exit_code": EXIT_INPUT}))
        return EXIT_INPUT
    except NotKS as exc:
        _say(f"error: {exc}")
        return EXIT_NEGATIVE

    if args.format == "json":
        _say(_summary(rec))
        print(json.dumps(rec.to_dict(), indent=2, sort_keys=True))
    else:
        print(_summary(rec))
    return rec.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
