"""Theta-body optimisation with clique equality conditions.

Maximise ``sum_i w_i v_i`` over moment matrices

    T = [[1, v], [v^T, A]] >= 0,   diag(A) = v,   A_ij = 0 on edges,

subject to ``sum_{i in C} v_i = 1`` for every condition clique ``C``.

The solver is a dense homogeneous self-dual interior-point method with
Nesterov-Todd scaling and a Mehrotra predictor-corrector.  Every feasible
``T`` has trace at most ``n + 1`` (``0 <= v_i <= 1``), which turns any
approximately dual-feasible multiplier into a rigorous upper bound and any
approximate Farkas ray into a rigorous infeasibility proof.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np
from scipy import linalg as sla

from .graphs import ExclusivityGraph, is_clique, mask_of, members, parse_graph6, write_graph6

__all__ = [
    "SdpStatus",
    "ThetaProblem",
    "SdpSolution",
    "CertifiedInterval",
    "CertificationFailed",
    "NotPSD",
    "solve",
    "certified_bounds",
    "realization_from_moment",
    "lifted_moment",
    "GAP_TOL",
    "FEAS_TOL",
]

GAP_TOL = 1e-8
FEAS_TOL = 1e-9
RAY_MARGIN = 1e-7
# keep iterating until residuals are this fraction of the requested tolerances
_POLISH = 1e-2
_EPS = np.finfo(float).eps


class SdpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_LIMIT = "NumericalLimit"


class CertificationFailed(RuntimeError):
    def __init__(self, message: str, lower: float | None = None, upper: float | None = None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class NotPSD(ValueError):
    pass


@dataclass(frozen=True)
class ThetaProblem:
    graph: ExclusivityGraph
    conditions: tuple[int, ...] = ()
    objective: tuple[float, ...] = ()

    def __post_init__(self):
        n = self.graph.n
        if not self.objective:
            object.__setattr__(self, "objective", (0.0,) * n)
        if len(self.objective) != n:
            raise ValueError("objective needs one weight per vertex")
        object.__setattr__(self, "objective", tuple(float(w) for w in self.objective))
        object.__setattr__(self, "conditions", tuple(int(c) for c in self.conditions))
        for c in self.conditions:
            if not c or c >> n:
                raise ValueError(f"condition {members(c)} is empty or out of range")
            if not is_clique(self.graph, c):
                raise ValueError(f"condition {members(c)} is not a clique")

    @classmethod
    def with_target(cls, graph: ExclusivityGraph, conditions: Sequence[int], target: int) -> "ThetaProblem":
        w = tuple(1.0 if target >> i & 1 else 0.0 for i in range(graph.n))
        return cls(graph, tuple(conditions), w)

    @classmethod
    def lovasz(cls, graph: ExclusivityGraph) -> "ThetaProblem":
        return cls(graph, (), (1.0,) * graph.n)

    def to_dict(self) -> dict[str, Any]:
        return {
            "graph6": write_graph6(self.graph),
            "conditions": [list(members(c)) for c in self.conditions],
            "objective": list(self.objective),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ThetaProblem":
        g = parse_graph6(data["graph6"])
        conds = tuple(mask_of(c) for c in data.get("conditions", []))
        if "objective" in data:
            w = tuple(data["objective"])
        else:
            w = tuple(1.0 if i in set(data.get("target", [])) else 0.0 for i in range(g.n))
        return cls(g, conds, w)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ThetaProblem":
        return cls.from_dict(json.loads(text))


@dataclass
class SdpSolution:
    status: SdpStatus
    primal_value: float
    dual_bound: float
    v: np.ndarray
    moment: np.ndarray
    residuals: dict[str, float]
    y: np.ndarray | None = None
    ray: np.ndarray | None = None
    kept: tuple[int, ...] = ()
    conditions_used: tuple[int, ...] = ()
    iterations: int = 0
    face: tuple[tuple[int | Fraction, ...], ...] = ()
    # how infeasibility was shown: "farkas" ray, exact "linear" algebra, or empty "face"
    certificate: str = ""
    _realization: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def realization(self) -> list[np.ndarray]:
        if self._realization is None:
            self._realization = realization_from_moment(self)
        return self._realization

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "primal_value": self.primal_value,
            "dual_bound": self.dual_bound,
            "v": [float(x) for x in self.v],
            "residuals": {k: float(x) for k, x in sorted(self.residuals.items())},
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class CertifiedInterval:
    lower: float
    upper: float

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


# ---------------------------------------------------------------------------
# problem reduction and assembly
# ---------------------------------------------------------------------------


def _reduce(p: ThetaProblem) -> tuple[int, list[int]] | None:
    """Vertices forced to zero by nested or pinned conditions.

    ``C ⊂ D`` forces ``D \\ C`` to zero; a condition reduced to a single
    vertex pins it to one and its neighbours to zero.  Returns
    ``(zero_mask, reduced_conditions)`` or ``None`` when some condition
    empties out (left for the solver to certify infeasible).
    """
    g = p.graph
    zeros = 0
    conds = list(dict.fromkeys(p.conditions))
    changed = True
    while changed:
        changed = False
        live = [c & ~zeros for c in conds]
        if any(c == 0 for c in live):
            return None
        for a in live:
            for b in live:
                if a != b and a & b == a and b & ~a & ~zeros:
                    zeros |= b & ~a
                    changed = True
            if a.bit_count() == 1:
                v = a.bit_length() - 1
                if g.adj[v] & ~zeros:
                    zeros |= g.adj[v]
                    changed = True
    live = list(dict.fromkeys(c & ~zeros for c in conds))
    return zeros, live


def _eliminate(rows: list[tuple[dict, Fraction]]):
    """Reduced row echelon form of sparse rational equations ``row . x = rhs``.

    Returns ``(pivots, consistent)`` with ``pivots`` mapping a pivot
    variable to its normalised row.
    """
    pivots: dict[Any, tuple[dict, Fraction]] = {}
    for row, rhs in rows:
        row, rhs = _reduce_row(pivots, dict(row), rhs)
        if not row:
            if rhs != 0:
                return pivots, False
            continue
        var = min(row, key=repr)
        c = row[var]
        row = {k: v / c for k, v in row.items()}
        rhs = rhs / c
        for pv, (prow, prhs) in list(pivots.items()):
            f = prow.get(var)
            if f:
                for k, v in row.items():
                    nv = prow.get(k, 0) - f * v
                    if nv:
                        prow[k] = nv
                    else:
                        prow.pop(k, None)
                pivots[pv] = (prow, prhs - f * rhs)
        pivots[var] = (row, rhs)
    return pivots, True


def _reduce_row(pivots, row: dict, rhs: Fraction):
    for var in [k for k in row if k in pivots]:
        f = row.get(var)
        if not f:
            continue
        prow, prhs = pivots[var]
        for k, v in prow.items():
            nv = row.get(k, 0) - f * v
            if nv:
                row[k] = nv
            else:
                row.pop(k, None)
        rhs -= f * prhs
    return row, rhs


def _rational_nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Exact basis of ``{x : row . x = 0 for every row}``."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        k = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if k is None:
            continue
        m[r], m[k] = m[k], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        x = [Fraction(0)] * ncols
        x[free] = Fraction(1)
        for i, c in enumerate(pivots):
            x[c] = -m[i][free]
        basis.append(x)
    return basis


def _is_positive_definite(M: list[list[Fraction]]) -> bool:
    """Exact test by symmetric Gaussian elimination."""
    a = [list(r) for r in M]
    k = len(a)
    for i in range(k):
        if a[i][i] <= 0:
            return False
        for j in range(i + 1, k):
            f = a[j][i] / a[i][i]
            if f:
                a[j] = [x - f * y for x, y in zip(a[j], a[i])]
    return True


_ROUNDING = ((1e-7, 1000), (1e-5, 200), (1e-3, 40))


def _rationalize_row(row: np.ndarray) -> list[Fraction] | None:
    """Smallest common denominator that fits the row, coarser tolerances only for small denominators.

    Only a guess: every use is followed by an exact check.
    """
    for tol, max_den in _ROUNDING:
        for den in range(1, max_den + 1):
            num = np.rint(row * den)
            if np.max(np.abs(num / den - row)) <= tol:
                return [Fraction(int(x), den) for x in num]
    return None


def _psd_reduction(live: list[int], var, pivots, kernel: list[dict], n: int) -> list[tuple]:
    """New kernel vectors from an exactly verified reducing certificate.

    Feasible ``T`` form an affine family ``T_0 + sum_f t_f E_f`` on the face
    ``F`` cut out by the known kernel.  A psd ``Z = F B^T N B F^T`` with
    ``<Z, T_0> = <Z, E_f> = 0`` for all ``f`` satisfies ``<Z, T> = 0`` for
    every feasible ``T``, so the range of ``Z`` lies in the kernel of ``T``.
    The range ``B`` is guessed from a numerical solve and rounded to small
    rationals; ``N`` positive definite is then checked in exact arithmetic.
    """
    L = len(live)
    pos = {a: i for i, a in enumerate(live)}
    krows = [[Fraction(w.get(a, 0)) for a in live] for w in kernel]
    F = _rational_nullspace(krows, L)  # columns of the face, as rows here
    d = len(F)
    if d == 0:
        return []
    const = [[Fraction(0)] * L for _ in range(L)]
    free: dict[Any, list[list[Fraction]]] = {}

    def slot(f):
        if f not in free:
            free[f] = [[Fraction(0)] * L for _ in range(L)]
        return free[f]

    for a in live:
        for b in live:
            k, vv = var(a, b)
            i, j = pos[a], pos[b]
            if vv is None:
                const[i][j] += k
            elif vv in pivots:
                prow, prhs = pivots[vv]
                const[i][j] += prhs
                for f, c in prow.items():
                    if f != vv:
                        slot(f)[i][j] -= c
            else:
                slot(vv)[i][j] += 1

    def on_face(G):
        # F G F^T with F stored row-wise
        GF = [[sum(G[i][t] * F[q][t] for t in range(L) if F[q][t]) for q in range(d)] for i in range(L)]
        return [[sum(F[p][i] * GF[i][q] for i in range(L) if F[p][i]) for q in range(d)] for p in range(d)]

    mats = [on_face(G) for G in [const, *free.values()]]
    rows = [np.array([[float(x) for x in r] for r in G]).ravel() for G in mats]
    rows.append(np.eye(d).ravel())
    rhs = np.zeros(len(rows))
    rhs[-1] = 1.0
    aux = _Assembly.raw(np.array(rows), rhs, np.zeros((d, d)))
    if aux.inconsistent is not None:
        return []
    status, M, _, _, _ = _hsde(aux, GAP_TOL, FEAS_TOL, 100)
    if status is not SdpStatus.OPTIMAL:
        return []
    lam, Q = np.linalg.eigh((M + M.T) / 2)
    Ff = np.array([[float(x) for x in r] for r in F])
    # F[q] is the unit vector on its own free column
    pivot_cols = [next(c for c in range(L) if F[q][c] == 1 and all(F[r][c] == 0 for r in range(d) if r != q))
                  for q in range(d)]
    for thr in (1e-9, 1e-7, 1e-5, 1e-3):
        rng = Q[:, lam > thr]
        k = rng.shape[1]
        if k == 0:
            continue
        # round in moment coordinates, where kernel vectors tend to be small integers
        W = _rational_range(rng.T @ Ff)
        if W is None:
            continue
        B = [[w[c] for c in pivot_cols] for w in W]
        if any(w[i] != sum(b[q] * F[q][i] for q in range(d)) for w, b in zip(W, B) for i in range(L)):
            continue
        # unknown symmetric N (k x k), one equation per constraint matrix
        pairs = [(i, j) for i in range(k) for j in range(i, k)]
        eqs = []
        for G in mats:
            H = [[sum(B[p][s] * G[s][t] * B[q][t] for s in range(d) if B[p][s] for t in range(d) if B[q][t])
                  for q in range(k)] for p in range(k)]
            eqs.append([H[i][j] * (1 if i == j else 2) for i, j in pairs])
        basis = _rational_nullspace(eqs, len(pairs))
        if not basis:
            continue
        Bf = np.array([[float(x) for x in r] for r in B])
        pinv = np.linalg.pinv(Bf.T)
        Nn = pinv @ M @ pinv.T
        target = np.array([Nn[i, j] for i, j in pairs])
        Bm = np.array([[float(x) for x in b] for b in basis]).T
        coef, *_ = np.linalg.lstsq(Bm, target, rcond=None)
        cs = [Fraction(c).limit_denominator(10**6) for c in coef]
        vec = [sum(c * b[t] for c, b in zip(cs, basis)) for t in range(len(pairs))]
        N = [[Fraction(0)] * k for _ in range(k)]
        for (i, j), x in zip(pairs, vec):
            N[i][j] = N[j][i] = x
        if not _is_positive_definite(N):
            continue
        out = []
        for wl in W:
            w = [Fraction(0)] * (n + 1)
            for i, x in enumerate(wl):
                w[live[i]] = x
            out.append(tuple(w))
        return out
    return []


def _rational_range(R: np.ndarray) -> list[list[Fraction]] | None:
    """Row-reduced rational basis of the row space of ``R``, if it has one with small denominators."""
    k = R.shape[0]
    _, _, piv = sla.qr(R, pivoting=True)
    P = sorted(piv[:k].tolist())
    try:
        E = np.linalg.solve(R[:, P], R)
    except np.linalg.LinAlgError:
        return None
    out = []
    for row in E:
        rr = _rationalize_row(row)
        if rr is None:
            return None
        out.append(rr)
    return out


def _linear_closure(g: ExclusivityGraph, zeros: int, conds: list[int], extra: Sequence[tuple] = (), deep: bool = False):
    """Kernel vectors of every feasible moment matrix derivable by linear algebra.

    Starting from the condition kernel ``e_0 - 1_C``, the relations
    ``T w = 0`` together with the orthogonality zeros and ``T_00 = 1`` form a
    rational linear system in the remaining entries of ``T``.  Whenever it
    pins a quadratic form ``w^T T w`` to zero, positivity puts ``w`` in the
    kernel too; this repeats to a fixed point.  With ``deep`` set, exactly
    verified semidefinite reducing certificates extend the kernel as well.
    Returns ``(zeros, conditions, extra_kernel)`` or ``None`` if the system
    is inconsistent (no feasible point exists).
    """
    n = g.n
    extra = list(extra)
    while True:
        conds = list(dict.fromkeys(c & ~zeros for c in conds))
        if any(c == 0 for c in conds):
            return None
        live = [0] + [v + 1 for v in range(n) if not zeros >> v & 1]
        liveset = set(live)

        def var(a: int, b: int):
            # entry T_ab as (constant, variable); T_0j and T_jj share a variable
            if a > b:
                a, b = b, a
            if a == 0 and b == 0:
                return 1, None
            if a not in liveset or b not in liveset:
                return 0, None
            if a == 0 or a == b:
                return 0, (b, b)
            if g.adj[a - 1] >> (b - 1) & 1:
                return 0, None
            return 0, (a, b)

        kernel: list[dict[int, int]] = []
        for c in conds:
            w = {0: 1}
            for v in members(c):
                w[v + 1] = -1
            kernel.append(w)
        for w in extra:
            kernel.append({i: x for i, x in enumerate(w) if x and i in liveset})
        eqs = []
        for w in kernel:
            for a in live:
                row: dict = {}
                const = 0
                for b, x in w.items():
                    k, vv = var(a, b)
                    const += x * k
                    if vv is not None:
                        row[vv] = row.get(vv, 0) + Fraction(x)
                row = {k: v for k, v in row.items() if v}
                eqs.append((row, Fraction(-const)))
        pivots, ok = _eliminate(eqs)
        if not ok:
            return None

        def pinned_zero(pairs) -> bool:
            row: dict = {}
            const = Fraction(0)
            for (a, b), x in pairs:
                k, vv = var(a, b)
                const += x * k
                if vv is not None:
                    row[vv] = row.get(vv, 0) + x
            row = {k: v for k, v in row.items() if v}
            row, rhs = _reduce_row(pivots, row, Fraction(0))
            return not row and rhs + const == 0

        new_zero = 0
        for i in live[1:]:
            if pinned_zero([((i, i), 1)]):
                new_zero |= 1 << (i - 1)
        if new_zero:
            zeros |= new_zero
            continue
        basis = np.zeros((len(kernel), n + 1))
        for r, w in enumerate(kernel):
            for i, x in w.items():
                basis[r, i] = x
        rank = np.linalg.matrix_rank(basis) if len(kernel) else 0
        grew = False
        for ia, a in enumerate(live):
            for b in live[ia + 1:]:
                for sgn in (-1, 1):
                    if not pinned_zero([((a, a), 1), ((b, b), 1), ((a, b), 2 * sgn)]):
                        continue
                    w = [0] * (n + 1)
                    w[a], w[b] = 1, sgn
                    trial = np.vstack([basis, w])
                    if np.linalg.matrix_rank(trial) > rank:
                        basis, rank = trial, rank + 1
                        extra.append(tuple(w))
                        grew = True
        if not grew and deep:
            found = _psd_reduction(live, var, pivots, kernel, n)
            if found:
                extra.extend(found)
                grew = True
        if not grew:
            return zeros, conds, extra


class _Assembly:
    """Constraint data for the kept vertices (matrix index = local + 1).

    Every condition clique ``C`` gives a vector ``e_0 - 1_C`` in the kernel
    of any feasible moment matrix, so the program is solved on the face
    ``X = V S V^T`` with ``V`` an orthonormal basis of their complement;
    rows that become dependent on the face are dropped.
    """

    def __init__(self, p: ThetaProblem, kept: list[int], conds: list[int], extra: Sequence[Sequence[int]] = ()):
        self.kept = kept
        self.conditions = list(conds)
        self.extra = [tuple(w) for w in extra]
        k = len(kept)
        N = k + 1
        self.N = N
        local = {v: i + 1 for i, v in enumerate(kept)}
        rows: list[np.ndarray] = []
        b: list[float] = []

        def unit(a: int, c: int) -> np.ndarray:
            e = np.zeros((N, N))
            if a == c:
                e[a, a] = 1.0
            else:
                e[a, c] = e[c, a] = 0.5
            return e

        rows.append(unit(0, 0))
        b.append(1.0)
        for v in kept:
            i = local[v]
            rows.append(unit(i, i) - unit(0, i))
            b.append(0.0)
        for v in kept:
            for u in members(p.graph.adj[v]):
                if u > v and u in local:
                    rows.append(unit(local[v], local[u]))
                    b.append(0.0)
        self.n_structural = len(rows)
        for c in conds:
            e = np.zeros((N, N))
            for v in members(c):
                e += unit(0, local[v])
            rows.append(e)
            b.append(1.0)
        self.A = np.array([r.ravel() for r in rows])
        self.b = np.array(b)
        C = np.zeros((N, N))
        for v in kept:
            w = p.objective[v]
            if w:
                C += -w * unit(0, local[v])
        self.C = C  # minimisation form

        if conds or self.extra:
            kern = np.zeros((N, len(conds) + len(self.extra)))
            kern[0, : len(conds)] = 1.0
            for j, c in enumerate(conds):
                for v in members(c):
                    kern[local[v], j] = -1.0
            for j, w in enumerate(self.extra, start=len(conds)):
                kern[0, j] = w[0]
                for v, i in local.items():
                    kern[i, j] = w[v + 1]
            self.V = sla.null_space(kern.T)
        else:
            self.V = np.eye(N)
        Nr = self.V.shape[1]
        self.Nr = Nr
        proj = np.array([self.project(r.reshape(N, N)).ravel() for r in self.A]) if Nr else np.zeros((len(b), 0))
        self.rows, self.inconsistent = _select_rows(proj, self.b)
        self.Ar = proj[self.rows]
        self.br = self.b[self.rows]
        self.Cr = self.project(C)

    @classmethod
    def raw(cls, A: np.ndarray, b: np.ndarray, C: np.ndarray) -> "_Assembly":
        """Plain standard-form program ``min <C,X>, A X = b, X psd``."""
        self = cls.__new__(cls)
        self.kept, self.conditions, self.extra = [], [], []
        self.N = self.Nr = C.shape[0]
        self.V = np.eye(self.N)
        self.A, self.b, self.C, self.Cr = A, b, C, C
        self.rows, self.inconsistent = _select_rows(A, b)
        self.Ar, self.br = A[self.rows], b[self.rows]
        return self

    def project(self, M: np.ndarray) -> np.ndarray:
        return self.V.T @ M @ self.V

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return (self.A.T @ y).reshape(self.N, self.N)

    def lift(self, S: np.ndarray) -> np.ndarray:
        return self.V @ S @ self.V.T

    def expand(self, y_r: np.ndarray) -> np.ndarray:
        y = np.zeros(len(self.b))
        y[self.rows] = y_r
        return y


def _select_rows(M: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    """Maximal independent row subset of ``M`` (pivoted QR).

    Also returns a combination ``y`` with ``y @ M ~ 0`` and ``y @ b = 1`` if
    the dropped rows are inconsistent with the kept ones, else ``None``.
    """
    if M.shape[1] == 0:
        rows = []
    else:
        _, R, piv = sla.qr(M.T, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > tol * max(1.0, d[0] if len(d) else 1.0)))
        rows = sorted(piv[:rank].tolist())
    dropped = [k for k in range(len(b)) if k not in set(rows)]
    if not dropped:
        return rows, None
    Mk = M[rows]
    for k in dropped:
        if rows:
            coef, *_ = np.linalg.lstsq(Mk.T, M[k], rcond=None)
        else:
            coef = np.zeros(0)
        resid = b[k] - (coef @ b[rows] if rows else 0.0)
        if abs(resid) > 1e-7:
            y = np.zeros(len(b))
            y[k] = 1.0
            y[rows] = -coef
            return rows, y / resid
    return rows, None


# ---------------------------------------------------------------------------
# homogeneous self-dual interior point
# ---------------------------------------------------------------------------


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    Lx = np.linalg.cholesky(X)
    Lz = np.linalg.cholesky(Z)
    _, s, Vt = np.linalg.svd(Lz.T @ Lx)
    G = (Lx @ Vt.T) / np.sqrt(s)
    # G^{-1} = D^{1/2} V^T Lx^{-1}
    Ginv = (np.sqrt(s)[:, None] * Vt) @ sla.solve_triangular(Lx, np.eye(len(s)), lower=True)
    return G, Ginv, s


def _max_step(lam: np.ndarray, dS: np.ndarray) -> float:
    r = 1.0 / np.sqrt(lam)
    H = (r[:, None] * dS) * r[None, :]
    e = np.linalg.eigvalsh((H + H.T) / 2)[0]
    return -1.0 / e if e < 0 else math.inf


def _fuzz(asm: _Assembly, S: np.ndarray) -> float:
    # eigenvalue and basis rounding allowance
    return asm.N * asm.N * _EPS * (np.linalg.norm(S) + 1.0) * 16


def _rigorous_upper(asm: _Assembly, y: np.ndarray) -> tuple[float, float]:
    """Upper bound on the max-form optimum from any multiplier ``y``.

    Feasible X lie on the face X = V S V^T with tr S = tr X <= N, so
    <C,X> = <V^T (C - A*y) V, S> + b.y >= b.y + min(0, lmin) N.
    Returns (bound, lmin).
    """
    S = asm.project(asm.C - asm.adjoint(y))
    S = (S + S.T) / 2
    lmin = float(np.linalg.eigvalsh(S)[0]) if S.size else 0.0
    slack = asm.N * max(0.0, -lmin) + _fuzz(asm, S)
    return float(-(asm.b @ y) + slack), lmin


def _ray_margin(asm: _Assembly, y: np.ndarray) -> float:
    """``1 - N * lmax^+(V^T A* y V)`` for ``y`` scaled to ``b.y = 1``.

    Positive means no feasible X exists: 1 = b.y = <A*y, X> <= lmax^+ tr X.
    """
    by = float(asm.b @ y)
    if not by > 0:
        return -math.inf
    S = asm.project(asm.adjoint(y / by))
    S = (S + S.T) / 2
    lmax = float(np.linalg.eigvalsh(S)[-1]) if S.size else 0.0
    return 1.0 - asm.N * max(0.0, lmax) - _fuzz(asm, S)


def _hsde(asm: _Assembly, gap_tol: float, feas_tol: float, max_iter: int):
    A, b, C, N = asm.Ar, asm.br, asm.Cr, asm.Nr
    m = len(b)
    c = C.ravel()

    def adj(y):
        return (A.T @ y).reshape(N, N)

    X = np.eye(N)
    Z = np.eye(N)
    y = np.zeros(m)
    tau = kappa = 1.0
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(C)
    info: dict[str, Any] = {}
    best = None
    for it in range(max_iter + 1):
        rp = A @ X.ravel() - b * tau
        Rd = adj(y) + Z - C * tau
        rg = float(c @ X.ravel() - b @ y + kappa)
        mu = (float(np.sum(X * Z)) + tau * kappa) / (N + 1)

        xs, ys = X / tau, y / tau
        pres = float(np.linalg.norm(A @ xs.ravel() - b) / bnorm)
        dres = float(np.linalg.norm(adj(ys) + Z / tau - C) / cnorm)
        gap = abs(float(c @ xs.ravel()) - float(b @ ys))
        info = dict(pres=pres, dres=dres, gap=gap, iterations=it)
        score = max(pres / feas_tol, dres / feas_tol, gap / gap_tol)
        if best is None or score < best[0]:
            best = (score, xs, ys, dict(info))
        if score <= _POLISH:
            return SdpStatus.OPTIMAL, xs, ys, None, info
        if tau < kappa and float(b @ y) > 0:
            ray = asm.expand(y)
            if _ray_margin(asm, ray) >= RAY_MARGIN:
                return SdpStatus.INFEASIBLE, xs, ys, ray / float(asm.b @ ray), info
        if it == max_iter:
            break

        try:
            G, Ginv, lam = _nt_scaling(X, Z)
        except np.linalg.LinAlgError:
            break
        W = G @ G.T
        M = A @ np.kron(W, W) @ A.T
        WCW = W @ C @ W
        g = A @ WCW.ravel()
        h = float(np.sum(C * WCW))
        K = np.empty((m + 1, m + 1))
        K[:m, :m] = M
        K[:m, m] = -(g + b)
        K[m, :m] = g - b
        K[m, m] = -(h + kappa / tau)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu = sla.lu_factor(K)
        except (ValueError, np.linalg.LinAlgError):
            break
        WRdW = W @ Rd @ W

        def direction(Rc, r_tk, eta):
            T1 = Rc + eta * WRdW
            rhs = np.empty(m + 1)
            rhs[:m] = -eta * rp - A @ T1.ravel()
            rhs[m] = -eta * rg - float(np.sum(C * T1)) - r_tk / tau
            with np.errstate(all="ignore"):
                sol = sla.lu_solve(lu, rhs, check_finite=False)
                for _ in range(2):
                    sol += sla.lu_solve(lu, rhs - K @ sol, check_finite=False)
            if not np.all(np.isfinite(sol)):
                # near-singular system late in the run
                try:
                    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
                except np.linalg.LinAlgError:
                    sol = np.full(m + 1, np.nan)
            dy, dtau = sol[:m], float(sol[m])
            Ay = adj(dy)
            dX = T1 + W @ Ay @ W - dtau * WCW
            dZ = -eta * Rd - Ay + C * dtau
            dkappa = (r_tk - kappa * dtau) / tau
            return (dX + dX.T) / 2, dy, (dZ + dZ.T) / 2, dtau, dkappa

        def step_length(dX, dZ, dtau, dkappa):
            dXs = Ginv @ dX @ Ginv.T
            dZs = G.T @ dZ @ G
            amax = min(_max_step(lam, dXs), _max_step(lam, dZs))
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            return amax, dXs, dZs

        if not np.all(np.isfinite(lu[0])):
            break
        # predictor
        dXa, _, dZa, dta, dka = direction(-X, -tau * kappa, 1.0)
        if not (np.all(np.isfinite(dXa)) and np.all(np.isfinite(dZa)) and math.isfinite(dta)):
            break
        amax, dXs_a, dZs_a = step_length(dXa, dZa, dta, dka)
        alpha = min(1.0, amax)
        mu_aff = (
            float(np.sum((X + alpha * dXa) * (Z + alpha * dZa)))
            + (tau + alpha * dta) * (kappa + alpha * dka)
        ) / (N + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        cross = dXs_a @ dZs_a
        rhs_s = sigma * mu * np.eye(N) - np.diag(lam * lam) - (cross + cross.T) / 2
        Rc = G @ (2.0 * rhs_s / (lam[:, None] + lam[None, :])) @ G.T
        r_tk = sigma * mu - tau * kappa - dta * dka
        dX, dy, dZ, dtau, dkappa = direction(Rc, r_tk, 1.0 - sigma)
        if not (np.all(np.isfinite(dX)) and np.all(np.isfinite(dZ)) and math.isfinite(dtau)):
            break
        amax, _, _ = step_length(dX, dZ, dtau, dkappa)
        alpha = min(1.0, 0.99 * amax)
        if alpha < 1e-12:
            break
        X = X + alpha * dX
        Z = Z + alpha * dZ
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa
        X = (X + X.T) / 2
        Z = (Z + Z.T) / 2
    score, xs, ys, info = best
    status = SdpStatus.OPTIMAL if score <= 1.0 else SdpStatus.NUMERICAL_LIMIT
    return status, xs, ys, None, info


def solve(p: ThetaProblem, tol: float = GAP_TOL, feas_tol: float = FEAS_TOL, max_iter: int = 100) -> SdpSolution:
    """Solve the theta-body program ``p``.

    ``Optimal`` carries the optimal moment matrix, ``primal_value`` and a
    rigorous ``dual_bound``; ``Infeasible`` carries a verified Farkas ray;
    ``NumericalLimit`` reports the residuals actually achieved.
    """
    n = p.graph.n
    red = _reduce(p)
    extra: list[tuple[int, ...]] = []
    if red is None:
        zeros, conds = 0, list(dict.fromkeys(p.conditions))
    else:
        zeros, conds = red
        closed = _linear_closure(p.graph, zeros, conds)
        if closed is None:
            asm = _Assembly(p, list(range(n)), list(dict.fromkeys(p.conditions)))
            return _infeasible(p, asm, None, {}, 0, certificate="linear")
        zeros, conds, extra = closed
    kept = [v for v in range(n) if not zeros >> v & 1]
    asm = _Assembly(p, kept, conds, extra)

    if asm.inconsistent is not None and _ray_margin(asm, asm.inconsistent) >= RAY_MARGIN:
        return _infeasible(p, asm, asm.inconsistent, {}, 0)
    if asm.Nr == 0:
        return _infeasible(p, asm, None, {}, 0, certificate="face")
    status, S, y_r, ray, info = _hsde(asm, tol, feas_tol, max_iter)
    if status is SdpStatus.NUMERICAL_LIMIT and red is not None:
        # a stall usually means a hidden face; look for it exactly and retry
        closed = _linear_closure(p.graph, zeros, conds, extra, deep=True)
        if closed is None:
            return _infeasible(p, asm, None, {}, info["iterations"], certificate="linear")
        if closed[0] != zeros or len(closed[2]) != len(extra):
            zeros, conds, extra = closed
            kept = [v for v in range(n) if not zeros >> v & 1]
            asm = _Assembly(p, kept, conds, extra)
            if asm.Nr == 0:
                return _infeasible(p, asm, None, {}, info["iterations"], certificate="face")
            status, S, y_r, ray, info = _hsde(asm, tol, feas_tol, max_iter)
    if status is SdpStatus.INFEASIBLE:
        return _infeasible(p, asm, ray, info, info["iterations"])

    X = asm.lift(S)
    X = (X + X.T) / 2
    y = asm.expand(y_r)
    T = np.zeros((n + 1, n + 1))
    idx = [0] + [v + 1 for v in kept]
    T[np.ix_(idx, idx)] = X
    v = T[0, 1:].copy()
    primal = float(np.dot(p.objective, v))
    upper, lmin_dual = _rigorous_upper(asm, y)
    residuals = {
        "min_eigenvalue": float(np.linalg.eigvalsh(X)[0]),
        "max_equality_violation": float(np.max(np.abs(asm.A @ X.ravel() - asm.b))),
        "duality_gap": info["gap"],
        "primal_residual": info["pres"],
        "dual_residual": info["dres"],
        "dual_min_eigenvalue": lmin_dual,
    }
    if status is SdpStatus.OPTIMAL and primal > upper + tol:
        status = SdpStatus.NUMERICAL_LIMIT
    return SdpSolution(
        status=status,
        primal_value=primal,
        dual_bound=upper,
        v=v,
        moment=T,
        residuals=residuals,
        y=y,
        kept=tuple(kept),
        conditions_used=tuple(conds),
        face=tuple(extra),
        iterations=info["iterations"],
    )


def _infeasible(p: ThetaProblem, asm: _Assembly, ray, info: dict, iterations: int, certificate: str = "farkas") -> SdpSolution:
    n = p.graph.n
    margin = _ray_margin(asm, ray) if ray is not None else math.nan
    return SdpSolution(
        status=SdpStatus.INFEASIBLE,
        primal_value=-math.inf,
        dual_bound=-math.inf,
        v=np.full(n, math.nan),
        moment=np.full((n + 1, n + 1), math.nan),
        residuals={
            "ray_margin": margin,
            "duality_gap": info.get("gap", math.nan),
            "primal_residual": info.get("pres", math.nan),
            "dual_residual": info.get("dres", math.nan),
        },
        ray=ray,
        kept=tuple(asm.kept),
        conditions_used=tuple(asm.conditions),
        iterations=iterations,
        face=tuple(asm.extra),
        certificate=certificate,
    )


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def _overshoot_scale(p: ThetaProblem) -> float:
    return (p.graph.n + 1) * (1.0 + sum(abs(w) for w in p.objective))


def _full_constraints(p: ThetaProblem) -> _Assembly:
    return _Assembly(p, list(range(p.graph.n)), list(dict.fromkeys(p.conditions)))


def certified_bounds(p: ThetaProblem, sol: SdpSolution, tol: float = FEAS_TOL) -> CertifiedInterval:
    """Independently re-verified interval around the optimum of ``p``.

    The upper end comes from the solver's multiplier, re-checked by a direct
    eigenvalue computation; the lower end is the objective of the solver's
    moment matrix after an exact-arithmetic-free projection onto the
    equality constraints, accepted only if its equality residual is within
    ``tol`` and its most negative eigenvalue within ``tol * (n + 1)``.  Raises
    :class:`CertificationFailed` if the lower end cannot be verified; the
    exception carries whatever upper bound was verified.
    """
    upper: float | None = None
    red_asm = _Assembly(p, list(sol.kept), list(sol.conditions_used), sol.face)
    if sol.status is SdpStatus.INFEASIBLE:
        if sol.certificate in ("linear", "face"):
            upper = -math.inf
        elif sol.ray is not None and _ray_margin(red_asm, sol.ray) >= RAY_MARGIN:
            upper = -math.inf
        raise CertificationFailed("primal problem is infeasible", upper=upper)
    if sol.y is not None and len(sol.y) == len(red_asm.b):
        upper, _ = _rigorous_upper(red_asm, sol.y)

    full = _full_constraints(p)
    X = sol.moment
    if not np.all(np.isfinite(X)):
        raise CertificationFailed("no finite moment matrix to certify", upper=upper)
    r = full.A @ X.ravel() - full.b
    corr, *_ = np.linalg.lstsq(full.A @ full.A.T, r, rcond=None)
    Xp = X - full.adjoint(corr)
    Xp = (Xp + Xp.T) / 2
    eqv = float(np.max(np.abs(full.A @ Xp.ravel() - full.b)))
    lmin = float(np.linalg.eigvalsh(Xp)[0])
    # eigenvalues of an (n+1)-square projection carry error growing with n
    eig_tol = tol * (p.graph.n + 1)
    if eqv > tol or lmin < -eig_tol:
        raise CertificationFailed(
            f"projected primal point not feasible within {tol:g} "
            f"(equality {eqv:.2e}, min eigenvalue {lmin:.2e} vs {-eig_tol:.2e})",
            upper=upper,
        )
    lower = float(np.dot(p.objective, Xp[0, 1:]))
    if upper is None:
        upper = math.inf
    if lower > upper:
        # the projected point is feasible only up to tol, so it may overshoot
        if lower - upper > tol * _overshoot_scale(p):
            raise CertificationFailed(f"lower {lower!r} exceeds upper {upper!r}", lower=lower, upper=upper)
        lower = upper
    return CertifiedInterval(lower, upper)


# ---------------------------------------------------------------------------
# realisation and lifting
# ---------------------------------------------------------------------------


def realization_from_moment(sol_or_moment, tol: float = 1e-6) -> list[np.ndarray]:
    """Vectors ``u_i`` with ``u_i . u_j = A_ij`` and ``u_i . s = v_i``, ``s = e_0``.

    Factorises the moment matrix ``T = P^T P`` and rotates the state column
    onto ``s``.  Raises :class:`NotPSD` if ``T`` has an eigenvalue below
    ``-tol``.
    """
    T = sol_or_moment.moment if isinstance(sol_or_moment, SdpSolution) else np.asarray(sol_or_moment, float)
    T = (T + T.T) / 2
    lam, Q = np.linalg.eigh(T)
    if lam[0] < -tol:
        raise NotPSD(f"moment matrix has eigenvalue {lam[0]:.3e}")
    P = np.sqrt(np.clip(lam, 0.0, None))[:, None] * Q.T  # columns p_k, T = P^T P
    s = P[:, 0]
    norm = np.linalg.norm(s)
    if norm == 0:
        raise NotPSD("state column has zero norm")
    s = s / norm
    e0 = np.zeros_like(s)
    e0[0] = 1.0
    # Householder reflection taking s to e0
    w = s - e0
    if np.linalg.norm(w) > 1e-15:
        w = w / np.linalg.norm(w)
        P = P - 2.0 * np.outer(w, w @ P)
    return [P[:, k].copy() for k in range(1, P.shape[1])]


def lifted_moment(v: Sequence[float], graph: ExclusivityGraph | None = None) -> np.ndarray:
    """Rank-one moment matrix ``[1, v]^T [1, v]`` of a 0/1 point.

    For the characteristic vector of an independent set this is a feasible
    theta-body moment matrix.
    """
    x = np.concatenate([[1.0], np.asarray(v, float)])
    return np.outer(x, x)
