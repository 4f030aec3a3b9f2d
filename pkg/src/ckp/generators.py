"""Seeded benchmark families (SC / IC / SS) and the two worked examples.

Random streams come from numpy's counter-based Philox bit generator keyed
by ``SeedSequence(seed, spawn_key=(family, n, attempt))``.  Draw order per
instance is fixed: the integer column (``a`` for SC/SS, ``c`` for IC),
then the standard deviations.  ``attempt`` increases only when a draw
violates the standing assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, Instance, check, normal_quantile, validate

FAMILIES = ("SC", "IC", "SS")
MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    rho: float = 0.9
    seed: int = 0
    capacity_factor: float = 1.0

    def __post_init__(self):
        fam = self.family.upper()
        if fam not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if not 0.5 <= self.rho < 1.0:
            raise DomainError("rho must lie in [0.5, 1)")
        if not self.capacity_factor > 0:
            raise DomainError("capacity_factor must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def name(self) -> str:
        name = f"{self.family.lower()}-n{self.n}-rho{self.rho:g}-s{self.seed}"
        if self.capacity_factor != 1.0:
            name += f"-f{self.capacity_factor:g}"
        return name


def _rng(spec: GenSpec, attempt: int) -> np.random.Generator:
    key = (FAMILIES.index(spec.family), spec.n, attempt)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed, spawn_key=key)))


def _draw(spec: GenSpec, kappa: float, attempt: int) -> Instance:
    rng = _rng(spec, attempt)
    ints = rng.integers(1, 101, size=spec.n).astype(float)
    if spec.family == "SC":
        a, c = ints, ints + 100.0
    elif spec.family == "IC":
        c = ints
        a = np.minimum(100.0, c + 10.0)
    else:
        a, c = ints, ints.copy()
    sigma = rng.uniform(0.1 * a, 0.2 * a)
    b = spec.capacity_factor * math.floor(a.sum())
    return Instance(c=c, a=a, sigma2=sigma * sigma, b=b, kappa=kappa, rho=spec.rho, name=spec.name)


def generate(spec: GenSpec) -> Instance:
    kappa = normal_quantile(spec.rho)
    for attempt in range(MAX_ATTEMPTS):
        inst = _draw(spec, kappa, attempt)
        if not validate(inst):
            return inst
    raise DomainError(f"no valid instance for {spec} after {MAX_ATTEMPTS} attempts")


def example1(n: int) -> Instance:
    """Identical unit-profit items with mean 1/sqrt(n), unit variance, b = 3, kappa = 1.5."""
    if n < 56:
        raise DomainError("example1 needs n >= 56")
    return Instance(c=np.ones(n), a=np.full(n, 1.0 / math.sqrt(n)), sigma2=np.ones(n),
                    b=3.0, kappa=1.5, name=f"example1-n{n}")


def example2(b: float, force: bool = False) -> Instance:
    """Three items whose density orderings change at delta = 1, 4 and 9 (kappa = 2)."""
    inst = Instance(c=[1.0, 1.0, 1.0], a=[2.0, 3.0, 2.5], sigma2=[3.0, 1.0, 1.5],
                    b=b, kappa=2.0, name=f"example2-b{b:g}")
    check(inst, force=force)
    return inst
