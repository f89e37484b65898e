"""Acceptance criteria, one recorded PASS/FAIL line each (see the terminal summary)."""

import itertools
import math
import random
import time

import numpy as np

from conftest import random_graph
from test_kssets import dot, random_basis
from kscontext.catalog import (
    GHZ10_CONDITIONS,
    GHZ10_EVENTS,
    GHZ10_TARGET,
    HARDY_FAMILIES,
    ceg18,
    ceg18_contexts,
    context_index,
    hardy_graph,
    hardy_instance,
)
from kscontext.graphs import (
    ExclusivityGraph,
    all_cliques,
    canonical_form,
    graph_counts,
    mask_of,
    maximal_independent_sets,
    members,
    parse_graph6,
    write_graph6,
)
from kscontext.kssets import (
    check_assignment,
    closed_neighborhood_survivors,
    find_assignment,
    ks_to_ghz,
    lemma_three_context_assignment,
    orthogonality_graph,
    quantum_probabilities,
    tighten_contexts,
    verify_ks_set,
)
from kscontext.proofsearch import (
    CertificateKind,
    ProofInstance,
    VerdictKind,
    brute_force_check,
    classical_check,
    instance_orbit_key,
    quantum_check,
    run_campaign,
    search_graph,
)
from kscontext.thetasdp import ThetaProblem, certified_bounds, solve

SEED = 20240611

CEG_SECONDS = 1.0
GHZ_SECONDS = 5.0
GHZ_LOWER_TOL = 1e-6
HARDY_SECONDS = 30.0
HARDY_OUTER = (0.11110, 0.11113)
HARDY_INNER = (0.11111, 0.11112)
C5_TOL = 1e-6
EXACT_TOL = 1e-9
GAP_TOL = 1e-8
GRAPH_COUNTS = [1, 2, 4, 11, 34, 156, 1044, 12346, 274668]
COUNT_SECONDS_8 = 60.0
COUNT_SECONDS_9 = 30 * 60.0
CAMPAIGN_SECONDS_7 = 2 * 3600.0
STAB_TOL = 1e-9


def test_1_ceg18(accept):
    t0 = time.perf_counter()
    rep = verify_ks_set(ceg18())
    dt = time.perf_counter() - t0
    per_vector = {sum(1 for c in rep.contexts if c >> v & 1) for v in range(18)}
    ok = rep.is_ks and len(rep.contexts) == 9 and per_vector == {2} and dt < CEG_SECONDS
    accept(
        "1 CEG-18 is KS",
        ok,
        f"is_ks={rep.is_ks} contexts={len(rep.contexts)} per-vector={sorted(per_vector)} {dt:.3f}s < {CEG_SECONDS}s",
    )


def test_2_ks_to_ghz(accept):
    t0 = time.perf_counter()
    vs = ceg18()
    (inst,) = ks_to_ghz(vs, 0, root_context=context_index("C7"), contexts=ceg18_contexts())
    verdict = classical_check(inst).kind
    cert = quantum_check(inst)
    dt = time.perf_counter() - t0
    probs = quantum_probabilities(vs, 0)
    lab = inst.labels
    exact = sum(probs[lab[v]] for v in members(inst.target))
    conds = sorted(inst.label(c) for c in inst.conditions)
    checks = {
        "events": lab == GHZ10_EVENTS,
        "conditions": conds == sorted(GHZ10_CONDITIONS),
        "target": inst.label(inst.target) == GHZ10_TARGET,
        "ForcedZero": verdict is VerdictKind.FORCED_ZERO,
        "exact=1": exact == 1,
        "lower": cert.quantum.lower >= 1 - GHZ_LOWER_TOL,
        "time": dt < GHZ_SECONDS,
    }
    accept(
        "2 KS->GHZ on CEG-18, state 0, root C7",
        all(checks.values()),
        f"{checks} exact={exact} lower={cert.quantum.lower:.12f} >= 1-{GHZ_LOWER_TOL:g} {dt:.2f}s < {GHZ_SECONDS}s",
    )


def test_3a_hardy_interval(accept):
    p = hardy_instance(0).theta_problem()
    iv = certified_bounds(p, solve(p))
    inside = HARDY_OUTER[0] <= iv.lower and iv.upper <= HARDY_OUTER[1]
    meets = iv.lower <= HARDY_INNER[1] and iv.upper >= HARDY_INNER[0]
    accept(
        "3a Hardy interval",
        inside and meets,
        f"[{iv.lower:.12f}, {iv.upper:.12f}] within {HARDY_OUTER}, meets {HARDY_INNER}",
    )


def test_3b_hardy_search(accept):
    t0 = time.perf_counter()
    certs = search_graph(hardy_graph())
    dt = time.perf_counter() - t0
    keys = {instance_orbit_key(c.instance) for c in certs}
    found = [instance_orbit_key(hardy_instance(k)) in keys for k in range(len(HARDY_FAMILIES))]
    ghz = sum(c.kind is CertificateKind.GHZ for c in certs)
    hardy = sum(c.kind is CertificateKind.HARDY for c in certs)
    accept(
        "3b Hardy graph search",
        all(found) and ghz == 0 and dt < HARDY_SECONDS,
        f"families found={found} hardy={hardy} ghz={ghz} {dt:.2f}s < {HARDY_SECONDS}s",
    )


def test_4_calibration(accept):
    lines = []
    ok = True
    p = ThetaProblem.lovasz(ExclusivityGraph.cycle(5))
    sol = solve(p)
    iv = certified_bounds(p, sol)
    err = max(abs(iv.lower - math.sqrt(5)), abs(iv.upper - math.sqrt(5)))
    ok &= err <= C5_TOL
    gap = sol.residuals["duality_gap"]
    lines.append(f"C5 err={err:.1e}")
    worst = 0.0
    for n in range(1, 9):
        for g, want in ((ExclusivityGraph.empty(n), n), (ExclusivityGraph.complete(n), 1)):
            s = solve(ThetaProblem.lovasz(g))
            worst = max(worst, abs(s.primal_value - want), abs(s.dual_bound - want))
            gap = max(gap, s.residuals["duality_gap"])
    ok &= worst <= EXACT_TOL and gap <= GAP_TOL
    lines.append(f"edgeless/complete n<=8 err={worst:.1e} <= {EXACT_TOL:g}")
    lines.append(f"max gap={gap:.1e} <= {GAP_TOL:g}")
    accept("4 theta calibration", ok, "; ".join(lines))


def test_5_graph_counts(accept):
    t0 = time.perf_counter()
    c8 = graph_counts(8)
    t8 = time.perf_counter() - t0
    t0 = time.perf_counter()
    c9 = graph_counts(9)
    t9 = time.perf_counter() - t0
    ok = c8 == GRAPH_COUNTS[:8] and c9 == GRAPH_COUNTS and sum(c9) == 288266
    ok &= t8 < COUNT_SECONDS_8 and t9 < COUNT_SECONDS_9
    accept(
        "5 graph counts n<=9",
        ok,
        f"{c9} total={sum(c9)}; n<=8 {t8:.1f}s < {COUNT_SECONDS_8:g}s; n<=9 {t9:.1f}s < {COUNT_SECONDS_9:g}s",
    )


def test_6_campaign_n7(accept):
    t0 = time.perf_counter()
    rep = run_campaign(7)
    dt = time.perf_counter() - t0
    ok = rep.total_graphs == 1252 and rep.total_ghz == 0 and not rep.borderline_graphs
    ok &= not rep.overflow_graphs and dt < CAMPAIGN_SECONDS_7
    accept(
        "6 campaign n<=7",
        ok,
        f"graphs={rep.total_graphs} hardy={rep.total_hardy} ghz={rep.total_ghz} "
        f"borderline={len(rep.borderline_graphs)} overflow={len(rep.overflow_graphs)} {dt:.1f}s < {CAMPAIGN_SECONDS_7:g}s",
    )


def test_7a_classical_vs_brute_force(accept):
    rng = random.Random(SEED)
    bad = 0
    for _ in range(500):
        n = rng.randint(1, 12)
        g = random_graph(rng, n, rng.uniform(0.15, 0.8))
        cl = all_cliques(g)
        inst = ProofInstance(g, tuple(rng.sample(cl, rng.randint(0, min(4, len(cl))))), rng.choice(cl))
        bad += classical_check(inst).kind is not brute_force_check(inst)
    accept("7a classical_check vs brute force", bad == 0, f"500 instances n<=12, {bad} disagreements")


def test_7b_stab_in_th(accept):
    rng = random.Random(SEED)
    bad = 0
    for _ in range(200):
        n = rng.randint(1, 8)
        g = random_graph(rng, n, rng.random())
        w = tuple(rng.random() for _ in range(n))
        p = ThetaProblem(g, (), w)
        upper = certified_bounds(p, solve(p)).upper
        best = max(sum(w[v] for v in members(m)) for m in maximal_independent_sets(g))
        bad += upper < best - STAB_TOL
    accept("7b STAB inside TH", bad == 0, f"200 instances, {bad} with certified upper < classical - {STAB_TOL:g}")


def test_7c_graph6_round_trip(accept):
    rng = random.Random(SEED)
    bad = 0
    for _ in range(10_000):
        g = random_graph(rng, rng.randint(1, 12), rng.random())
        bad += parse_graph6(write_graph6(g)) != g
    accept("7c graph6 round trip", bad == 0, f"10000 graphs, {bad} mismatches")


def test_7d_canonical_invariance(accept):
    rng = random.Random(SEED)
    bad = 0
    for _ in range(500):
        g = random_graph(rng, rng.randint(1, 10), rng.random())
        perm = list(range(g.n))
        rng.shuffle(perm)
        bad += canonical_form(g.relabel(perm))[1] != canonical_form(g)[1]
    accept("7d canonical form under relabeling", bad == 0, f"500 graphs n<=10, {bad} mismatches")


def test_7e_tighten_minimal(accept):
    rng = random.Random(SEED)
    g = orthogonality_graph(ceg18())
    bad = 0
    for _ in range(20):
        ctx = ceg18_contexts()
        rng.shuffle(ctx)
        tight = tighten_contexts(g, ctx)
        bad += find_assignment(g, tight) is not None
        bad += any(find_assignment(g, tight[:k] + tight[k + 1:]) is None for k in range(len(tight)))
    accept("7e tighten minimality", bad == 0, f"20 context orders of CEG-18, {bad} failures")


def test_7f_lemma(accept):
    rng = random.Random(SEED)
    done = bad = 0
    while done < 100:
        d = rng.choice([2, 3, 4, 5])
        ctx = [random_basis(rng, d) for _ in range(3)]
        if len({tuple(v) for c in ctx for v in c}) != 3 * d:
            continue
        vs, values = lemma_three_context_assignment(*ctx)
        flat = [v for c in ctx for v in c]
        ok = all(sum(values[k * d:(k + 1) * d]) == 1 for k in range(3))
        ok &= not any(
            values[i] and values[j] and dot(flat[i], flat[j]) == 0
            for i, j in itertools.combinations(range(3 * d), 2)
        )
        ok &= check_assignment(orthogonality_graph(vs), [mask_of(range(k * d, (k + 1) * d)) for k in range(3)], values)
        bad += not ok
        done += 1
    accept("7f three-context lemma", bad == 0, f"100 triples d in 2..5, {bad} invalid")


def test_8_closed_neighbourhood(accept):
    vs = ceg18()
    sizes = [len(closed_neighborhood_survivors(vs, k)) for k in range(vs.n)]
    accept("8 closed neighbourhood survivors", min(sizes) >= 10, f"sizes={sizes} min={min(sizes)} >= 10")
