"""Polynomial-time solver for the non-convex relaxation.

The relaxation ``max c.x  s.t.  g(x) <= b, x in [0, 1]^n`` with
``g(x) = a.x + kappa * sqrt(sigma2.x)`` is solved through a single parameter
``delta`` (the selected variance).  For each ``delta`` the items are ranked
by the linearised density ``p_j(delta) = c_j / a_j(delta)`` and filled
greedily until ``g`` hits ``b``.  The ranking only changes at pairwise
crossing points, so it suffices to evaluate one greedy point per crossing
inside ``[delta_L, delta_U]``.

All item indices are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConstructionError, FractionalSolution, Instance, check

RATIO_TOL = 1e-12     # strictness of the crossing condition
MERGE_RTOL = 1e-12    # crossing points closer than this are merged
FILTER_RTOL = 1e-12   # inclusive filter to [delta_L, delta_U]
THETA_TOL = 1e-9

_BLOCK = 256


@dataclass(frozen=True)
class ReversePoint:
    k: int
    l: int
    q: float


@dataclass(frozen=True, eq=False)
class Ordering:
    perm: np.ndarray
    delta: float


@dataclass(frozen=True, eq=False)
class DeltaCandidates:
    delta_L: float
    delta_U: float
    gamma: float
    candidates: np.ndarray
    n_reverse: int

    @property
    def delta_count(self) -> int:
        """Size of the full candidate set ``{0, gamma} + Q``."""
        return 2 + self.n_reverse

    @property
    def delta_star_count(self) -> int:
        return int(self.candidates.size)


@dataclass(frozen=True, eq=False)
class NCRResult:
    solution: FractionalSolution
    z_nc: float
    deltas: DeltaCandidates
    best_delta: float

    def __iter__(self):
        return iter((self.solution, self.z_nc, self.deltas))


# --------------------------------------------------------------------------
# per-item quantities
# --------------------------------------------------------------------------

def item_cost(inst: Instance, j: int, delta: float) -> float:
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return float(inst.a[j])
    return float(inst.a[j] + inst.kappa * inst.sigma2[j] / (2.0 * math.sqrt(delta)))


def profit_density(inst: Instance, j: int, delta: float) -> float:
    return float(inst.c[j]) / item_cost(inst, j, delta)


def _order(c, a, s2, kappa, delta) -> np.ndarray:
    idx = np.arange(c.size)
    beta = s2 / c
    if delta == 0:
        # zero-variance items first, each block by descending c/a
        return np.lexsort((idx, -beta, a / c, s2 > 0))
    cost = (a + (kappa / (2.0 * math.sqrt(delta))) * s2) / c
    return np.lexsort((idx, -beta, cost))


def ordering(inst: Instance, delta: float) -> Ordering:
    """Descending ``p_j(delta)``; ties by descending ``sigma2/c``, then index."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    perm = _order(inst.c, inst.a, inst.sigma2, inst.kappa, float(delta))
    return Ordering(perm=perm, delta=float(delta))


# --------------------------------------------------------------------------
# greedy boundary point
# --------------------------------------------------------------------------

def boundary_theta(a_t, s2_t, kappa, room, var_before) -> float:
    """Smaller root of the boundary quadratic for the last (partial) item.

    Solves ``a_t*theta + kappa*sqrt(var_before + s2_t*theta) = room`` where
    ``room = b - (mean load before)``.  The discriminant is expanded so that
    it is a sum of non-negative terms, and the small root is taken through
    the product of roots to avoid cancellation.
    """
    quad = a_t * a_t
    lin = 2.0 * a_t * room + kappa * kappa * s2_t
    const = room * room - kappa * kappa * var_before
    disc = kappa * kappa * (4.0 * a_t * room * s2_t + kappa * kappa * s2_t * s2_t
                            + 4.0 * quad * var_before)
    if const <= 0.0:
        return 0.0
    return 2.0 * const / (lin + math.sqrt(max(disc, 0.0)))


def greedy_fill(a, s2, perm, kappa, b, a0=0.0, v0=0.0):
    """Fill ``perm`` greedily until ``a0 + a.x + kappa*sqrt(v0 + s2.x) = b``.

    Returns ``(x, t)`` with ``t`` the index of the partial item, or ``None``
    when every item fits (then ``x`` is all ones) or the last full item hits
    the boundary exactly.
    """
    n = a.size
    x = np.zeros(n)
    mean = a0 + np.cumsum(a[perm])
    var = v0 + np.cumsum(s2[perm])
    load = mean + kappa * np.sqrt(var)
    hit = load >= b
    if not hit.any():
        x[:] = 1.0
        return x, None
    pos = int(np.argmax(hit))
    t = int(perm[pos])
    mean_before = mean[pos - 1] if pos else a0
    var_before = var[pos - 1] if pos else v0
    theta = boundary_theta(a[t], s2[t], kappa, b - mean_before, var_before)
    if theta > 1.0 + THETA_TOL:
        raise ConstructionError(f"boundary root {theta!r} exceeds 1 for item {t}")
    x[perm[:pos]] = 1.0
    if theta >= 1.0 - 1e-12:
        x[t] = 1.0
        return x, None
    if theta <= 0.0:
        return x, None
    x[t] = theta
    return x, t


def _solution(c, s2, x, t) -> FractionalSolution:
    return FractionalSolution(x=x, objective=float(c @ x), delta=float(s2 @ x), frac_index=t)


def build_x(inst: Instance, delta: float) -> FractionalSolution:
    """Greedy boundary point ``x(delta)`` following ``ordering(delta)``."""
    perm = ordering(inst, delta).perm
    x, t = greedy_fill(inst.a, inst.sigma2, perm, inst.kappa, inst.b)
    if t is None and np.all(x == 1.0):
        raise ConstructionError("all items fit in the knapsack; no boundary point exists")
    return _solution(inst.c, inst.sigma2, x, t)


# --------------------------------------------------------------------------
# crossing points
# --------------------------------------------------------------------------

def _crossing(alpha_k, beta_k, alpha_l, beta_l, kappa):
    """Crossing ``q`` for a canonical pair (``beta_k <= beta_l``) or ``None``."""
    dbeta = beta_l - beta_k
    dalpha = alpha_k - alpha_l
    if kappa <= 0:
        return None
    if dbeta <= RATIO_TOL * max(abs(beta_k), abs(beta_l), 1e-300):
        return None
    if dalpha <= RATIO_TOL * max(abs(alpha_k), abs(alpha_l), 1e-300):
        return None
    root = kappa * dbeta / (2.0 * dalpha)
    return root * root


def reverse_point(inst: Instance, k: int, l: int) -> Optional[ReversePoint]:
    """Crossing point of ``p_k`` and ``p_l`` if the pair ever swaps order."""
    if k == l:
        raise ValueError("need two distinct items")
    beta_k, beta_l = inst.sigma2[k] / inst.c[k], inst.sigma2[l] / inst.c[l]
    if beta_k > beta_l:
        k, l = l, k
        beta_k, beta_l = beta_l, beta_k
    q = _crossing(inst.a[k] / inst.c[k], beta_k, inst.a[l] / inst.c[l], beta_l, inst.kappa)
    if q is None:
        return None
    return ReversePoint(k=int(k), l=int(l), q=float(q))


def crossing_values(c, a, s2, kappa) -> np.ndarray:
    """All crossing values over unordered pairs, sorted (duplicates kept)."""
    n = c.size
    if kappa <= 0 or n < 2:
        return np.empty(0)
    alpha = a / c
    beta = s2 / c
    chunks = []
    for start in range(0, n - 1, _BLOCK):
        stop = min(start + _BLOCK, n - 1)
        ak = alpha[start:stop, None]
        bk = beta[start:stop, None]
        al = alpha[None, start + 1:]
        bl = beta[None, start + 1:]
        # only pairs k < l: column offset j corresponds to l = start + 1 + j
        upper = (np.arange(start + 1, n)[None, :] > np.arange(start, stop)[:, None])
        dbeta = bl - bk
        dalpha = ak - al
        tb = RATIO_TOL * np.maximum(np.abs(bk), np.abs(bl))
        ta = RATIO_TOL * np.maximum(np.abs(ak), np.abs(al))
        ok = upper & (((dbeta > tb) & (dalpha > ta)) | ((dbeta < -tb) & (dalpha < -ta)))
        if ok.any():
            root = kappa * dbeta[ok] / (2.0 * dalpha[ok])
            chunks.append(root * root)
    if not chunks:
        return np.empty(0)
    q = np.concatenate(chunks)
    q.sort()
    return q


def merge_close(q: np.ndarray, rtol: float = MERGE_RTOL) -> np.ndarray:
    if q.size < 2:
        return q
    keep = np.empty(q.size, dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(q) > rtol * q[1:]
    return q[keep]


def reverse_points(inst: Instance) -> np.ndarray:
    """Sorted distinct crossing values ``Q``."""
    return merge_close(crossing_values(inst.c, inst.a, inst.sigma2, inst.kappa))


# --------------------------------------------------------------------------
# bounds on the optimal variance
# --------------------------------------------------------------------------

def _delta_upper(a, s2, kappa, b, a0=0.0, v0=0.0) -> float:
    # Relaxation with profits sigma2: the two admissible rankings are
    # "zero-variance items first" and "zero-variance items last", positive
    # variance items by ascending a/sigma2 in both.
    idx = np.arange(a.size)
    pos = s2 > 0
    ratio = np.where(pos, a / np.where(pos, s2, 1.0), 0.0)
    best = -math.inf
    for zero_first in (True, False):
        block = ~pos if zero_first else pos
        perm = np.lexsort((idx, ratio, ~block))
        x, _ = greedy_fill(a, s2, perm, kappa, b, a0, v0)
        best = max(best, float(s2 @ x))
    return v0 + best


def _delta_lower(a, s2, kappa, b, a0=0.0, v0=0.0) -> float:
    idx = np.arange(a.size)
    perm = np.lexsort((idx, s2 / a))
    x, t = greedy_fill(a, s2, perm, kappa, b, a0, v0)
    return v0 + float(s2 @ x)


def delta_upper(inst: Instance) -> float:
    """Largest variance ``sigma2.x`` over the relaxation's feasible set."""
    return _delta_upper(inst.a, inst.sigma2, inst.kappa, inst.b)


def delta_lower(inst: Instance) -> float:
    """Smallest variance ``sigma2.x`` among points with ``g(x) >= b``."""
    a, s2 = inst.a, inst.sigma2
    if a.sum() + inst.kappa * math.sqrt(s2.sum()) < inst.b:
        raise ConstructionError("no point reaches the capacity")
    return _delta_lower(a, s2, inst.kappa, inst.b)


# --------------------------------------------------------------------------
# Algorithm
# --------------------------------------------------------------------------

def _representative(q: np.ndarray, i: int, gamma: float) -> float:
    """A delta strictly inside the i-th interval between crossing values."""
    if i == 0:
        return gamma
    if i == q.size:
        return 4.0 * q[-1]
    return math.sqrt(q[i - 1] * q[i])


def solve_arrays(c, a, s2, kappa, b, a0=0.0, v0=0.0):
    """Solve the relaxation for raw arrays, with optional fixed offsets.

    ``a0`` and ``v0`` are the mean load and variance of items already fixed
    to one; ``b`` is the full capacity.  Returns ``(x, t, z, deltas,
    best_delta)``.  When every item fits, ``x`` is all ones and the
    candidate set is empty.
    """
    full_load = a0 + a.sum() + kappa * math.sqrt(v0 + s2.sum())
    if full_load <= b:
        deltas = DeltaCandidates(v0 + s2.sum(), v0 + s2.sum(), 1.0, np.empty(0), 0)
        return np.ones(c.size), None, float(c.sum()), deltas, v0 + float(s2.sum())

    q = merge_close(crossing_values(c, a, s2, kappa))
    gamma = q[0] / 2.0 if q.size else 1.0
    d_lo = _delta_lower(a, s2, kappa, b, a0, v0)
    d_hi = _delta_upper(a, s2, kappa, b, a0, v0)

    lo_i = np.searchsorted(q, d_lo * (1.0 - FILTER_RTOL), side="left")
    hi_i = np.searchsorted(q, d_hi * (1.0 + FILTER_RTOL), side="right")
    inside = np.arange(lo_i, hi_i)
    extra = max(d_lo, gamma)
    cand = set(q[inside].tolist())
    cand.add(extra)
    if d_lo <= 0.0:
        cand.add(0.0)
    candidates = np.array(sorted(cand))
    deltas = DeltaCandidates(d_lo, d_hi, gamma, candidates, int(q.size))

    # Evaluate each ordering once, at a point strictly inside its interval,
    # so floating ties at a crossing cannot select the wrong side.
    jobs = {}  # interval index (or -1 for delta = 0) -> smallest candidate
    for i in inside.tolist():
        jobs.setdefault(i + 1, float(q[i]))
    for d in ((0.0,) if d_lo <= 0.0 else ()) + (extra,):
        if d == 0.0:
            keys = [-1]
        else:
            keys = {int(np.searchsorted(q, d * (1.0 - MERGE_RTOL), side="right")),
                    int(np.searchsorted(q, d * (1.0 + MERGE_RTOL), side="right"))}
        for key in keys:
            jobs[key] = min(jobs.get(key, math.inf), d)

    best = None
    for key, d in sorted(jobs.items(), key=lambda kv: (kv[1], kv[0])):
        rep = 0.0 if key == -1 else _representative(q, key, gamma)
        perm = _order(c, a, s2, kappa, rep)
        x, t = greedy_fill(a, s2, perm, kappa, b, a0, v0)
        z = float(c @ x)
        if best is None or z > best[2]:
            best = (x, t, z, d)
    x, t, z, d = best
    return x, t, z, deltas, d


def solve_ncr(inst: Instance, force: bool = False) -> NCRResult:
    """Optimal point of the non-convex relaxation.

    The returned point lies on the capacity boundary and has at most one
    fractional coordinate.  Ties in objective go to the smallest candidate.
    """
    check(inst, force=force)
    x, t, z, deltas, d = solve_arrays(inst.c, inst.a, inst.sigma2, inst.kappa, inst.b)
    if deltas.candidates.size == 0:
        raise ConstructionError("all items fit in the knapsack; no boundary point exists")
    sol = _solution(inst.c, inst.sigma2, x, t)
    return NCRResult(solution=sol, z_nc=z, deltas=deltas, best_delta=d)
