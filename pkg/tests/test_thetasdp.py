import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from kscontext.catalog import HARDY_FAMILIES, hardy_graph, hardy_instance
from kscontext.graphs import ExclusivityGraph, mask_of, parse_graph6, maximal_cliques, maximal_independent_sets, members
from kscontext.thetasdp import (
    CertificationFailed,
    SdpStatus,
    ThetaProblem,
    certified_bounds,
    lifted_moment,
    realization_from_moment,
    solve,
)
from kscontext.thetasdp import _is_positive_definite, _rational_nullspace

from conftest import random_graph
from sdp_oracle import cvxopt_theta


def solved(p):
    sol = solve(p)
    return sol, certified_bounds(p, sol)


class TestCalibration:
    def test_pentagon(self):
        sol, iv = solved(ThetaProblem.lovasz(ExclusivityGraph.cycle(5)))
        assert sol.status is SdpStatus.OPTIMAL
        assert abs(sol.primal_value - math.sqrt(5)) <= 1e-6
        assert iv.lower <= math.sqrt(5) + 1e-9 and iv.upper >= math.sqrt(5) - 1e-9
        assert sol.residuals["duality_gap"] <= 1e-8

    @pytest.mark.parametrize("n", range(1, 8))
    def test_edgeless_and_complete(self, n):
        for g, want in ((ExclusivityGraph.empty(n), n), (ExclusivityGraph.complete(n), 1)):
            sol, iv = solved(ThetaProblem.lovasz(g))
            assert abs(sol.primal_value - want) <= 1e-9
            assert abs(iv.lower - want) <= 1e-9 and abs(iv.upper - want) <= 1e-9
            assert sol.residuals["duality_gap"] <= 1e-8

    def test_single_vertex(self):
        sol, iv = solved(ThetaProblem.lovasz(ExclusivityGraph.empty(1)))
        assert abs(sol.primal_value - 1) <= 1e-9


class TestHardy:
    @pytest.mark.parametrize("k", range(3))
    def test_families_give_one_ninth(self, k):
        inst = hardy_instance(k)
        sol, iv = solved(inst.theta_problem())
        assert sol.status is SdpStatus.OPTIMAL
        assert 0.11110 <= iv.lower <= iv.upper <= 0.11113
        assert iv.contains(1 / 9) or abs(iv.lower - 1 / 9) < 1e-8

    def test_matches_cvxopt(self):
        p = hardy_instance(0).theta_problem()
        ref, _ = cvxopt_theta(p)
        assert abs(solve(p).primal_value - ref) < 1e-6


class TestInfeasible:
    def test_disjoint_conditions_in_clique(self):
        p = ThetaProblem.with_target(ExclusivityGraph.complete(4), [mask_of([0, 1]), mask_of([2, 3])], 1)
        sol = solve(p)
        assert sol.status is SdpStatus.INFEASIBLE
        with pytest.raises(CertificationFailed) as err:
            certified_bounds(p, sol)
        assert err.value.upper == -math.inf

    def test_condition_must_be_clique(self):
        with pytest.raises(ValueError):
            ThetaProblem(ExclusivityGraph.empty(2), (mask_of([0, 1]),))


def test_random_instances_agree_with_cvxopt(rng):
    checked = 0
    while checked < 40:
        n = rng.randint(2, 7)
        g = random_graph(rng, n, rng.uniform(0.2, 0.7))
        cl = maximal_cliques(g)
        conds = rng.sample(cl, rng.randint(0, min(3, len(cl))))
        w = [rng.choice([0.0, 1.0, rng.random()]) for _ in range(n)]
        p = ThetaProblem(g, tuple(conds), tuple(w))
        ref = cvxopt_theta(p)
        sol = solve(p)
        if ref is None:
            assert sol.status is SdpStatus.INFEASIBLE
        else:
            assert sol.status is SdpStatus.OPTIMAL
            iv = certified_bounds(p, sol)
            assert iv.lower - 1e-6 <= ref[0] <= iv.upper + 1e-6
        checked += 1


def test_stab_inside_th(rng):
    for _ in range(200):
        n = rng.randint(1, 8)
        g = random_graph(rng, n, rng.random())
        mis = maximal_independent_sets(g)
        # random convex combination of lifted independent sets is a feasible moment matrix
        lam = np.array([rng.random() for _ in mis])
        lam /= lam.sum()
        T = sum(l * lifted_moment([m >> v & 1 for v in range(n)]) for l, m in zip(lam, mis))
        assert T[0, 0] == pytest.approx(1)
        assert np.allclose(np.diag(T)[1:], T[0, 1:])
        for i, j in g.edges():
            assert T[i + 1, j + 1] == 0
        assert np.linalg.eigvalsh(T)[0] >= -1e-12
        # so the theta value dominates every classical value
        w = tuple(rng.random() for _ in range(n))
        p = ThetaProblem(g, (), w)
        sol = solve(p)
        best = max(sum(w[v] for v in members(m)) for m in mis)
        assert certified_bounds(p, sol).upper >= best - 1e-9


def test_realization_reproduces_moment():
    p = hardy_instance(0).theta_problem()
    sol = solve(p)
    us = realization_from_moment(sol)
    g = hardy_graph()
    for i, j in g.edges():
        assert abs(us[i] @ us[j]) < 1e-6
    for i, u in enumerate(us):
        assert u[0] == pytest.approx(sol.v[i], abs=1e-6)
        assert u @ u == pytest.approx(sol.v[i], abs=1e-6)


def test_problem_json_round_trip():
    p = hardy_instance(1).theta_problem()
    q = ThetaProblem.from_json(p.to_json())
    assert q == p
    t = ThetaProblem.from_dict({"graph6": "Dhc", "target": [0, 2]})
    assert t.objective == (1.0, 0.0, 1.0, 0.0, 0.0)


class TestHiddenFace:
    # zero-value programs whose face is not visible to linear algebra alone;
    # without the semidefinite reduction they stall near 1e-6
    CASES = [
        ("G?DdU_", [[0, 6], [1, 7], [2, 5], [3, 4]], [6]),
        ("GAw|nk", [[0, 6, 7], [1, 3, 7], [2, 4, 5]], [6]),
        ("GODzus", [[0, 2], [1, 5], [3, 4, 6, 7]], [7]),
    ]

    @pytest.mark.parametrize("key,conds,target", CASES)
    def test_value_zero(self, key, conds, target):
        g = parse_graph6(key)
        w = tuple(1.0 if v in target else 0.0 for v in range(g.n))
        sol, iv = solved(ThetaProblem(g, tuple(mask_of(c) for c in conds), w))
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.face
        assert iv.lower - 1e-9 <= 0 <= iv.upper <= 1e-8

    def test_face_vectors_are_kernel_vectors(self):
        key, conds, target = self.CASES[0]
        g = parse_graph6(key)
        w = tuple(1.0 if v in target else 0.0 for v in range(g.n))
        sol = solve(ThetaProblem(g, tuple(mask_of(c) for c in conds), w))
        T = sol.moment
        for f in sol.face:
            assert np.abs(T @ np.array([float(x) for x in f])).max() <= 1e-9


def test_rational_nullspace_and_definiteness(rng):
    for _ in range(50):
        m, n = rng.randint(0, 4), rng.randint(1, 5)
        rows = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(m)]
        basis = _rational_nullspace(rows, n)
        rank = np.linalg.matrix_rank(np.array(rows, dtype=float)) if rows else 0
        assert len(basis) == n - rank
        assert all(sum(a * b for a, b in zip(r, x)) == 0 for r in rows for x in basis)
        A = np.array([[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)])
        M = A @ A.T
        exact = [[Fraction(int(x)) for x in r] for r in M]
        assert _is_positive_definite(exact) == (np.linalg.eigvalsh(M).min() > 1e-9)
