"""Reference theta-body solver built on cvxopt (test-only second route)."""

import numpy as np
from cvxopt import matrix, solvers

from kscontext.graphs import members


def cvxopt_theta(p):
    """Optimum of ``p`` via cvxopt, or None if cvxopt reports infeasibility."""
    g = p.graph
    n = g.n
    N = n + 1
    pairs = [(a, b) for b in range(N) for a in range(b + 1)]
    idx = {ab: k for k, ab in enumerate(pairs)}

    def var(a, b):
        return idx[(min(a, b), max(a, b))]

    m = len(pairs)
    G = np.zeros((N * N, m))
    for a in range(N):
        for b in range(N):
            G[b * N + a, var(a, b)] = -1.0
    rows, rhs = [], []

    def eq(coeffs, value):
        r = np.zeros(m)
        for k, c in coeffs:
            r[k] += c
        rows.append(r)
        rhs.append(value)

    eq([(var(0, 0), 1)], 1.0)
    for i in range(1, N):
        eq([(var(i, i), 1), (var(0, i), -1)], 0.0)
    for i, j in g.edges():
        eq([(var(i + 1, j + 1), 1)], 0.0)
    for c in p.conditions:
        eq([(var(0, v + 1), 1) for v in members(c)], 1.0)
    A = np.array(rows)
    # drop dependent rows so cvxopt sees full row rank
    keep = []
    for k in range(len(rows)):
        if np.linalg.matrix_rank(A[keep + [k]]) > len(keep):
            keep.append(k)
    b = np.array(rhs)
    c = np.zeros(m)
    for i in range(n):
        c[var(0, i + 1)] -= p.objective[i]
    solvers.options["show_progress"] = False
    for tight in (1e-10, 1e-8):
        solvers.options["abstol"] = tight
        solvers.options["reltol"] = tight
        solvers.options["feastol"] = tight
        try:
            res = solvers.sdp(
                matrix(c), Gs=[matrix(G)], hs=[matrix(np.zeros((N, N)))],
                A=matrix(A[keep]), b=matrix(b[keep]),
            )
            break
        except ArithmeticError:
            # cvxopt occasionally breaks down at tight tolerances
            continue
    else:
        raise ArithmeticError("cvxopt failed at every tolerance")
    if res["status"] == "primal infeasible":
        return None
    return -res["primal objective"], res["status"]
