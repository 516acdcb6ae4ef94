"""The five location objectives and their normalized/deviation forms.

Orientation is fixed: f1 (mean closest distance), f2 (worst closest
distance) and f5 (variance of closest distances) are minimized; f3 and f4
(population covered within s1 and s2) are maximized. s1 < s2 guarantees
f3 <= f4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFault
from .instance import Instance, ObjectiveBounds, Solution

# Index-aligned orientation for f1..f5.
ORIENTATION: tuple[str, ...] = ("min", "min", "max", "max", "min")
N_OBJECTIVES = 5


@dataclass(frozen=True)
class ObjectiveVector:
    f1: float
    f2: float
    f3: float
    f4: float
    f5: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4, self.f5)


@dataclass(frozen=True)
class NormalizedVector:
    """Cost-oriented values in [0, 1]: 0 is each objective's ideal."""

    nf: tuple[float, float, float, float, float]

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return self.nf

    def benefit(self) -> tuple[float, float, float, float, float]:
        """Benefit orientation (1 = ideal) used as value-model input."""
        return tuple(1.0 - v for v in self.nf)


def closest_distances(inst: Instance, dm: np.ndarray, sol: Solution) -> np.ndarray:
    """Distance from each demand point to its nearest selected facility."""
    cols = [s - 1 for s in sol.sites]
    return dm[:, cols].min(axis=1)


def evaluate(inst: Instance, dm: np.ndarray, sol: Solution) -> ObjectiveVector:
    inst.validate_solution(sol)
    closest = closest_distances(inst, dm, sol)
    pops = inst.populations()
    f1 = float(closest.mean())
    f2 = float(closest.max())
    f3 = float(pops[closest <= inst.s1].sum())
    f4 = float(pops[closest <= inst.s2].sum())
    f5 = float(((closest - f1) ** 2).mean())
    return ObjectiveVector(f1, f2, f3, f4, f5)


def normalize(ov: ObjectiveVector, bounds: ObjectiveBounds) -> NormalizedVector:
    """Scale each objective into cost-oriented [0, 1].

    Degenerate bounds (fmax == fmin) map to 0: a constant objective carries
    no preference signal. Values are clamped because evolutionary bounds may
    be undershot by solutions encountered later.
    """
    raw = ov.as_tuple()
    out = []
    for k in range(N_OBJECTIVES):
        lo, hi = bounds.fmin[k], bounds.fmax[k]
        span = hi - lo
        if span <= 0.0:
            out.append(0.0)
            continue
        if ORIENTATION[k] == "min":
            v = (raw[k] - lo) / span
        else:
            v = (hi - raw[k]) / span
        out.append(min(1.0, max(0.0, v)))
    return NormalizedVector(tuple(out))


def deviation(ov: ObjectiveVector, bounds: ObjectiveBounds) -> tuple[float, ...]:
    """Relative deviation of each objective from its optimum f*.

    f* is fmin for minimized and fmax for maximized objectives; f* = 0 makes
    the ratio undefined and is reported as a fault rather than guessed around.
    """
    raw = ov.as_tuple()
    out = []
    for k in range(N_OBJECTIVES):
        star = bounds.fmin[k] if ORIENTATION[k] == "min" else bounds.fmax[k]
        if star == 0.0:
            raise NumericalFault(
                f"deviation undefined for objective {k + 1}: optimal value is 0"
            )
        if ORIENTATION[k] == "min":
            out.append((raw[k] - star) / star)
        else:
            out.append((star - raw[k]) / star)
    return tuple(out)
