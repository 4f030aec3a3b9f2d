"""Rounding the relaxation optimum into a 1/2-approximate binary solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinarySolution, FractionalSolution, Instance
from .ncr import solve_ncr


@dataclass(frozen=True)
class ApproxCertificate:
    z_a: float
    z_nc: float

    @property
    def ratio(self) -> float:
        return self.z_a / self.z_nc if self.z_nc > 0 else 1.0

    @property
    def gap_percent(self) -> float:
        """Relative gap to the relaxation bound, in percent."""
        return 100.0 * (self.z_nc - self.z_a) / self.z_nc if self.z_nc > 0 else 0.0


def round_down(inst: Instance, xs: FractionalSolution) -> BinarySolution:
    x = np.floor(xs.x + 1e-12)
    return BinarySolution.from_x(inst, x)


def single_item(inst: Instance, xs: FractionalSolution) -> BinarySolution:
    """Indicator of the fractional item, or the empty set if ``xs`` is integral."""
    x = np.zeros(inst.n)
    if xs.frac_index is not None:
        x[xs.frac_index] = 1.0
    return BinarySolution.from_x(inst, x)


def solve_approx(inst: Instance, force: bool = False):
    """Better of round-down and single-item; ties keep the round-down.

    Returns ``(solution, certificate)``; the certificate's ratio is at
    least 1/2 by construction since both candidates together cover the
    relaxation value.
    """
    res = solve_ncr(inst, force=force)
    down = round_down(inst, res.solution)
    up = single_item(inst, res.solution)
    best = down if up.objective <= down.objective else up
    return best, ApproxCertificate(z_a=best.objective, z_nc=res.z_nc)
