"""Exact optima: exhaustive enumeration and a relaxation-bounded branch-and-bound."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .approx import solve_approx
from .core import FEAS_ATOL, FEAS_RTOL, CKPError, ConstructionError, Instance, check
from .ncr import solve_arrays

MAX_BRUTE_N = 25
PRUNE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class ExactResult:
    z_opt: float
    x_opt: np.ndarray
    nodes: int
    proven: bool


def _cap(inst: Instance) -> float:
    return inst.b * (1.0 + FEAS_RTOL) + FEAS_ATOL


def _subset_table(c, a, s2):
    """Sums of ``c``, ``a``, ``s2`` over all subsets (row = bitmask)."""
    k = c.size
    bits = ((np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1).astype(float)
    return bits @ c, bits @ a, bits @ s2


def brute_force(inst: Instance) -> ExactResult:
    """Enumerate all ``2**n`` subsets (split in two halves to stay vectorised)."""
    n = inst.n
    if n > MAX_BRUTE_N:
        raise CKPError(f"brute force limited to n <= {MAX_BRUTE_N}; use branch_and_bound")
    cap = _cap(inst)
    lo_n = n - n // 2
    c_lo, a_lo, v_lo = _subset_table(inst.c[:lo_n], inst.a[:lo_n], inst.sigma2[:lo_n])
    c_hi, a_hi, v_hi = _subset_table(inst.c[lo_n:], inst.a[lo_n:], inst.sigma2[lo_n:])
    best, best_mask = 0.0, (0, 0)
    for h in range(c_hi.size):
        load = a_lo + a_hi[h] + inst.kappa * np.sqrt(v_lo + v_hi[h])
        val = np.where(load <= cap, c_lo + c_hi[h], -1.0)
        i = int(np.argmax(val))
        if val[i] > best:
            best, best_mask = float(val[i]), (i, h)
    x = np.zeros(n)
    lo_mask, hi_mask = best_mask
    for j in range(lo_n):
        x[j] = (lo_mask >> j) & 1
    for j in range(n - lo_n):
        x[lo_n + j] = (hi_mask >> j) & 1
    return ExactResult(z_opt=float(inst.c @ x), x_opt=x, nodes=1 << n, proven=True)


def node_bound(inst: Instance, fixed_one, fixed_zero=()):
    """Relaxation bound with some items fixed to one and others to zero.

    Fixed-one items enter the load as a constant mean and variance offset;
    the free items are handled by the same parametric solver.  Returns
    ``(bound, x_free_full, frac_item)`` where ``x_free_full`` is a length-n
    vector, or ``(-inf, None, None)`` when the fixed items overflow.
    """
    state = np.full(inst.n, -1)
    state[list(fixed_zero)] = 0
    state[list(fixed_one)] = 1
    return _bound(inst, state, _cap(inst))


def _bound(inst: Instance, state, cap):
    ones = state == 1
    free = np.flatnonzero(state == -1)
    a0 = float(inst.a[ones].sum())
    v0 = float(inst.sigma2[ones].sum())
    c0 = float(inst.c[ones].sum())
    if a0 + inst.kappa * math.sqrt(v0) > cap:
        return -math.inf, None, None
    x = ones.astype(float)
    if free.size == 0:
        return c0, x, None
    xf, t, z, _, _ = solve_arrays(inst.c[free], inst.a[free], inst.sigma2[free],
                                  inst.kappa, cap, a0, v0)
    x[free] = xf
    return c0 + z, x, (None if t is None else int(free[t]))


def _fits_with(inst: Instance, state, t: int, cap: float) -> bool:
    ones = state == 1
    load = (inst.a[ones].sum() + inst.a[t]
            + inst.kappa * math.sqrt(inst.sigma2[ones].sum() + inst.sigma2[t]))
    return load <= cap


def branch_and_bound(inst: Instance, node_limit: int = 1_000_000,
                     time_limit: Optional[float] = None, force: bool = False) -> ExactResult:
    """Depth-first search branching on the relaxation's fractional item.

    The incumbent starts from the 1/2-approximation; the one-branch is
    explored first.  When fixing the fractional item to one overflows, the
    item is fixed to zero within the same node.  ``proven`` is False when a limit stopped the search.
    """
    check(inst, force=force)
    cap = _cap(inst)
    start = time.perf_counter()
    try:
        inc, _ = solve_approx(inst, force=force)
        best_val, best_x = inc.objective, inc.x.copy()
    except ConstructionError:
        # everything fits (only reachable with force); the root settles it
        best_val, best_x = 0.0, np.zeros(inst.n)

    stack = [np.full(inst.n, -1)]
    nodes = 0
    proven = True
    while stack:
        if nodes >= node_limit or (time_limit is not None
                                   and time.perf_counter() - start > time_limit):
            proven = False
            break
        state = stack.pop()
        nodes += 1
        while True:
            bound, x, t = _bound(inst, state, cap)
            if t is None or _fits_with(inst, state, t, cap):
                break
            # the one-branch is empty: fix in place instead of branching
            state = state.copy()
            state[t] = 0
        if bound <= best_val + PRUNE_RTOL * max(1.0, abs(best_val)):
            continue
        if t is None:
            best_val, best_x = bound, np.round(x)
            continue
        zero = state.copy()
        zero[t] = 0
        one = state.copy()
        one[t] = 1
        stack.append(zero)
        stack.append(one)
    return ExactResult(z_opt=float(inst.c @ best_x), x_opt=best_x, nodes=nodes, proven=proven)
