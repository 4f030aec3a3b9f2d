"""Instance model, standing-assumption checks and chance-constraint evaluation.

A chance-constrained knapsack with independent normal weights
``w_j ~ N(a_j, sigma2_j)`` and threshold ``rho`` is represented by its
deterministic equivalent::

    sum_j a_j x_j + kappa * sqrt(sum_j sigma2_j x_j^2) <= b,   kappa = Phi^-1(rho)

On binary ``x`` the squares can be dropped, which gives the (concave) load
function ``g`` used by the non-convex relaxation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

FEAS_RTOL = 1e-9
FEAS_ATOL = 1e-12


class CKPError(Exception):
    """Base class for solver errors."""


class DomainError(CKPError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidInstanceError(CKPError):
    """The instance violates one of the standing assumptions."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConstructionError(CKPError):
    """A greedy boundary solution could not be built."""


# --------------------------------------------------------------------------
# normal quantile
# --------------------------------------------------------------------------

# Acklam's rational approximation (relative error ~1.15e-9 before refinement).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(rho: float) -> float:
    """Inverse standard normal CDF.

    Acklam's approximation followed by one Halley step against the
    ``erfc``-based CDF, which brings the absolute error well below 1e-9
    over the whole open unit interval.
    """
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho!r}")
    if rho == 0.5:
        return 0.0
    z = _acklam(rho)
    err = normal_cdf(z) - rho
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def worst_case_kappa(rho: float) -> float:
    """Safety coefficient for the moment-based (distribution-free) model."""
    rho = float(rho)
    if not 0.5 < rho < 1.0:
        raise DomainError(f"rho must lie in (0.5, 1), got {rho!r}")
    return math.sqrt(rho / (1.0 - rho))


# --------------------------------------------------------------------------
# data model
# --------------------------------------------------------------------------

def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """A chance-constrained knapsack instance.

    ``kappa`` is stored directly; ``rho`` is kept only as provenance, so the
    same object also covers the robust-ellipsoidal and distribution-free
    models which differ only in how the safety coefficient is chosen.
    """

    c: np.ndarray
    a: np.ndarray
    sigma2: np.ndarray
    b: float
    kappa: float
    rho: Optional[float] = None
    name: str = "instance"

    def __post_init__(self):
        c = _frozen(self.c, "c")
        a = _frozen(self.a, "a")
        s2 = _frozen(self.sigma2, "sigma2")
        if not (c.shape == a.shape == s2.shape):
            raise DomainError("c, a and sigma2 must have the same length")
        if c.size == 0:
            raise DomainError("instance needs at least one item")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "kappa", float(self.kappa))
        if self.rho is not None:
            object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def from_rho(cls, c, a, sigma2, b, rho, name="instance") -> "Instance":
        return cls(c, a, sigma2, b, normal_quantile(rho), rho=rho, name=name)

    @property
    def n(self) -> int:
        return int(self.c.size)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "rho": self.rho,
            "kappa": self.kappa,
            "b": self.b,
            "items": [
                {"c": float(c), "a": float(a), "sigma2": float(s)}
                for c, a, s in zip(self.c, self.a, self.sigma2)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        items = d["items"]
        if "n" in d and int(d["n"]) != len(items):
            raise DomainError(f"n={d['n']} does not match {len(items)} items")
        return cls(
            c=[it["c"] for it in items],
            a=[it["a"] for it in items],
            sigma2=[it["sigma2"] for it in items],
            b=d["b"],
            kappa=d["kappa"],
            rho=d.get("rho"),
            name=d.get("name", "instance"),
        )

    def to_json(self) -> str:
        # repr-based float output round-trips every double exactly
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """Point of the relaxation with at most one fractional coordinate."""

    x: np.ndarray
    objective: float
    delta: float
    frac_index: Optional[int] = None

    @classmethod
    def from_x(cls, inst: Instance, x, tol: float = 1e-12) -> "FractionalSolution":
        x = np.asarray(x, dtype=float)
        frac = np.flatnonzero((x > tol) & (x < 1.0 - tol))
        if frac.size > 1:
            raise ConstructionError(f"{frac.size} fractional coordinates")
        return cls(
            x=x,
            objective=float(inst.c @ x),
            delta=float(inst.sigma2 @ x),
            frac_index=int(frac[0]) if frac.size else None,
        )


@dataclass(frozen=True, eq=False)
class BinarySolution:
    x: np.ndarray
    objective: float
    g_value: float

    @classmethod
    def from_x(cls, inst: Instance, x) -> "BinarySolution":
        x = np.asarray(np.round(x), dtype=float)
        return cls(x=x, objective=float(inst.c @ x), g_value=eval_g(inst, x))

    @property
    def items(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.x > 0.5)]


# --------------------------------------------------------------------------
# constraint evaluation
# --------------------------------------------------------------------------

def _as_point(inst: Instance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DomainError(f"expected a vector of length {inst.n}, got shape {x.shape}")
    return x


def eval_g(inst: Instance, x) -> float:
    """Load of ``x`` with variance linear in ``x`` (exact on binary points)."""
    x = _as_point(inst, x)
    return float(inst.a @ x + inst.kappa * math.sqrt(max(float(inst.sigma2 @ x), 0.0)))


def eval_g_convex(inst: Instance, x) -> float:
    """Second-order-cone load, with ``x_j**2`` under the root."""
    x = _as_point(inst, x)
    return float(inst.a @ x + inst.kappa * math.sqrt(float(inst.sigma2 @ (x * x))))


def is_feasible(inst: Instance, x, convex: bool = False) -> bool:
    load = eval_g_convex(inst, x) if convex else eval_g(inst, x)
    return load <= inst.b * (1.0 + FEAS_RTOL) + FEAS_ATOL


def subset_load(inst: Instance, items) -> float:
    idx = np.asarray(list(items), dtype=int)
    if idx.size == 0:
        return 0.0
    return float(inst.a[idx].sum() + inst.kappa * math.sqrt(float(inst.sigma2[idx].sum())))


# --------------------------------------------------------------------------
# standing assumptions
# --------------------------------------------------------------------------

def validate(inst: Instance) -> list[str]:
    """Return every violated standing assumption (empty list means ok)."""
    out = []
    if inst.kappa < 0:
        out.append(f"kappa = {inst.kappa} < 0 (rho below 0.5)")
    if inst.b <= 0:
        out.append(f"capacity b = {inst.b} is not positive")
    for name, arr in (("c", inst.c), ("a", inst.a)):
        bad = np.flatnonzero(arr <= 0)
        if bad.size:
            out.append(f"{name}_j <= 0 for items {bad.tolist()}")
    bad = np.flatnonzero(inst.sigma2 < 0)
    if bad.size:
        out.append(f"sigma2_j < 0 for items {bad.tolist()}")
        return out
    total = float(inst.a.sum() + inst.kappa * math.sqrt(float(inst.sigma2.sum())))
    if not total > inst.b:
        out.append(f"all items fit: sum a + kappa*sqrt(sum sigma2) = {total:.12g} <= b = {inst.b:.12g}")
    single = inst.a + inst.kappa * np.sqrt(inst.sigma2)
    bad = np.flatnonzero(single > inst.b * (1.0 + FEAS_RTOL) + FEAS_ATOL)
    if bad.size:
        out.append(f"singleton infeasible for items {bad.tolist()}")
    return out


def check(inst: Instance, force: bool = False) -> None:
    """Raise on violated assumptions, or only warn when ``force`` is set."""
    violations = validate(inst)
    if not violations:
        return
    if force:
        warnings.warn("instance violates standing assumptions: " + "; ".join(violations),
                      stacklevel=2)
        return
    raise InvalidInstanceError(violations)
