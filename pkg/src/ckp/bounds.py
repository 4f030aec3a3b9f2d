"""Independent upper-bound machinery used for cross-validation.

* ``submodular_F`` / ``separate``: the mean-risk set function and the greedy
  separation oracle for the polyhedral relaxation built from it.
* ``convex_bound``: the second-order-cone relaxation value, obtained from
  its Lagrangian dual without an external conic solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .core import CKPError, Instance, eval_g_convex, subset_load

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SEARCH_RTOL = 1e-10
MAX_ITER = 200


class BoundQualityError(CKPError):
    """Dual search hit its iteration cap; ``best`` is still a valid upper bound."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class SeparationResult:
    eta: float
    pi: np.ndarray
    order: np.ndarray

    def member(self, b: float, tol: float = 1e-9) -> bool:
        return self.eta <= b + tol * max(1.0, abs(b))


@dataclass(frozen=True, eq=False)
class ConvexBound:
    z_c: float
    lambda_star: float
    primal_x: np.ndarray
    primal_value: float
    iterations: int

    @property
    def duality_gap(self) -> float:
        return self.z_c - self.primal_value


def submodular_F(inst: Instance, items: Iterable[int]) -> float:
    """Mean load plus ``kappa`` times the standard deviation of a subset."""
    return subset_load(inst, items)


def separate(inst: Instance, x) -> SeparationResult:
    """Edmonds' greedy over the extended polymatroid of ``F``.

    Items are visited by descending ``x`` (ties by index) and receive the
    marginal increase of ``F``.  ``eta > b`` certifies that ``x`` violates
    the polyhedral relaxation; ``eta <= b`` certifies membership.
    """
    x = np.asarray(x, dtype=float)
    order = np.lexsort((np.arange(inst.n), -x))
    root = np.sqrt(np.cumsum(inst.sigma2[order]))
    pi = np.empty(inst.n)
    pi[order] = inst.a[order] + inst.kappa * np.diff(root, prepend=0.0)
    return SeparationResult(eta=float(pi @ x), pi=pi, order=order)


# --------------------------------------------------------------------------
# convex relaxation through its Lagrangian dual
# --------------------------------------------------------------------------

def _inner(lam: float, inst: Instance):
    """max over the box of ``(c - lam a).x - lam*kappa*||sigma x||``.

    Uses ``sqrt(s) = min_u s/(2u) + u/2``; for fixed ``u`` the problem is
    separable with a clipped closed form, and the optimal ``u`` satisfies
    ``u**2 = sum sigma2 x(u)**2``, whose sign change is bracketed.
    """
    c, a, s2 = inst.c, inst.a, inst.sigma2
    w = c - lam * a
    mu = lam * inst.kappa
    pos = s2 > 0
    x = np.where(w > 0, 1.0, 0.0)
    if mu <= 0.0 or not pos.any():
        return float(np.maximum(w, 0.0).sum() - mu * math.sqrt(float(s2 @ x))), x
    wp, sp = w[pos], s2[pos]
    coef = wp / (mu * sp)

    def xs(u):
        return np.clip(coef * u, 0.0, 1.0)

    def psi(u):
        xp = xs(u)
        return float(sp @ (xp * xp)) - u * u

    lo, hi = 1e-12, math.sqrt(float(sp.sum())) + 1.0
    if psi(lo) <= 0.0:
        u = lo
    else:
        u = brentq(psi, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    x[pos] = xs(u)
    value = float(w @ x) - mu * math.sqrt(float(s2 @ (x * x)))
    return value, x


def _dual(lam: float, inst: Instance):
    value, x = _inner(lam, inst)
    return lam * inst.b + value, x


def _scaled(inst: Instance, x):
    load = eval_g_convex(inst, x)
    t = 1.0 if load <= inst.b else inst.b / load
    return x * t


def _mix(inst: Instance, x_lo, x_hi):
    """Largest feasible point on the segment from ``x_hi`` towards ``x_lo``."""
    if eval_g_convex(inst, x_hi) > inst.b:
        return _scaled(inst, x_hi)
    lo, hi = 0.0, 1.0
    if eval_g_convex(inst, x_lo) <= inst.b:
        return x_lo
    for _ in range(80):
        m = 0.5 * (lo + hi)
        if eval_g_convex(inst, m * x_lo + (1 - m) * x_hi) <= inst.b:
            lo = m
        else:
            hi = m
    return lo * x_lo + (1 - lo) * x_hi


def convex_bound(inst: Instance) -> ConvexBound:
    """Optimal value of the second-order-cone relaxation.

    Golden-section search over the multiplier on ``[0, max c/a]``, where the
    dual function is convex.  Strong duality holds because ``x = 0`` is
    strictly feasible.
    """
    lam_max = float(np.max(inst.c / inst.a))
    lo, hi = 0.0, lam_max
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, _ = _dual(x1, inst)
    f2, _ = _dual(x2, inst)
    it = 0
    while hi - lo > SEARCH_RTOL * max(1.0, abs(lo) + abs(hi)):
        it += 1
        if it > MAX_ITER:
            best = min(f1, f2)
            raise BoundQualityError("multiplier search did not converge", best)
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1, _ = _dual(x1, inst)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2, _ = _dual(x2, inst)

    evaluated = [(_dual(lam, inst), lam) for lam in (lo, 0.5 * (lo + hi), hi, 0.0, lam_max)]
    (z_c, _), lam_star = min(evaluated, key=lambda e: e[0][0])

    # primal recovery from the final bracket
    _, x_lo = _dual(lo, inst)
    _, x_hi = _dual(hi, inst)
    _, x_mid = _dual(lam_star, inst)
    points = [_mix(inst, x_lo, x_hi), _scaled(inst, x_mid), _scaled(inst, x_lo)]
    primal = max(points, key=lambda p: float(inst.c @ p))
    return ConvexBound(
        z_c=float(z_c),
        lambda_star=float(lam_star),
        primal_x=primal,
        primal_value=float(inst.c @ primal),
        iterations=it,
    )
