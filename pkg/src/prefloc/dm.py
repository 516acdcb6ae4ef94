"""Decision makers: simulated value-function families and the interactive
rendezvous used by the session service.

All simulated families are cost-oriented (lower value = preferred) and are
zero exactly at simultaneous per-objective optima. The twelve families are
the max-deviation form, its five four-criterion restrictions, the weighted
normalized form, and its five four-criterion restrictions.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass

from .errors import EnumerationCapError, ValidationError
from .instance import (
    EXHAUSTIVE_CAP,
    Instance,
    ObjectiveBounds,
    Solution,
    distances,
    iter_solutions,
    subset_count,
)
from .objectives import ObjectiveVector, deviation, evaluate, normalize

U_D = "U_D"
U_D_V = "U_D_v"
U_N = "U_N"
U_N_V = "U_N_v"
FAMILIES = (U_D, U_D_V, U_N, U_N_V)

# Fixed weights of the normalized families.
WEIGHTS_FULL = (0.1, 0.15, 0.2, 0.25, 0.3)
WEIGHTS_RESTRICTED = (0.1, 0.2, 0.3, 0.4)

# The five admissible four-criterion subsets (1-based criterion labels).
CRITERION_SUBSETS = ((1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 4, 5), (1, 3, 4, 5), (2, 3, 4, 5))

LEFT = "left"
RIGHT = "right"
INDIFFERENT_ANSWER = "indifferent"


@dataclass(frozen=True)
class DmAnswer:
    verdict: str
    latency: float = 0.0


@dataclass(frozen=True)
class SimulatedDm:
    """A perfectly consistent user driven by one fixed value function."""

    family: str
    bounds: ObjectiveBounds
    v: tuple[int, ...] | None = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        if self.family in (U_D_V, U_N_V):
            if self.v is None or tuple(sorted(self.v)) not in CRITERION_SUBSETS:
                raise ValidationError(f"restricted families need v from {CRITERION_SUBSETS}")
            object.__setattr__(self, "v", tuple(sorted(self.v)))
        elif self.v is not None:
            raise ValidationError("full families take no criterion subset")

    @property
    def label(self) -> str:
        if self.v is None:
            return self.family.replace("_v", "")
        return f"{self.family[:3]}_{''.join(str(k) for k in self.v)}"

    def value(self, ov: ObjectiveVector) -> float:
        if self.family == U_D:
            return max(deviation(ov, self.bounds))
        if self.family == U_D_V:
            dev = deviation(ov, self.bounds)
            return max(dev[k - 1] for k in self.v)
        nf = normalize(ov, self.bounds).as_tuple()
        if self.family == U_N:
            return sum(w * f for w, f in zip(WEIGHTS_FULL, nf))
        # Restricted weights attach to the chosen criteria in index order.
        return sum(w * nf[k - 1] for w, k in zip(WEIGHTS_RESTRICTED, self.v))

    def compare(self, left: ObjectiveVector, right: ObjectiveVector, context=None) -> DmAnswer:
        vl = self.value(left)
        vr = self.value(right)
        if vl < vr - self.tolerance:
            return DmAnswer(LEFT)
        if vr < vl - self.tolerance:
            return DmAnswer(RIGHT)
        return DmAnswer(INDIFFERENT_ANSWER)


def parse_family(label: str, bounds: ObjectiveBounds) -> SimulatedDm:
    """Build a simulated user from a label like "U_N", "U_D_1235"."""
    if label in ("U_N", "U_D"):
        return SimulatedDm("U_N" if label == "U_N" else "U_D", bounds)
    for prefix, family in (("U_N_", U_N_V), ("U_D_", U_D_V)):
        if label.startswith(prefix):
            digits = label[len(prefix):]
            if digits.isdigit() and len(digits) == 4:
                return SimulatedDm(family, bounds, v=tuple(int(c) for c in digits))
    raise ValidationError(f"cannot parse user family label {label!r}")


def all_family_labels() -> list[str]:
    labels = ["U_D", "U_N"]
    labels += [f"U_D_{''.join(map(str, v))}" for v in CRITERION_SUBSETS]
    labels += [f"U_N_{''.join(map(str, v))}" for v in CRITERION_SUBSETS]
    return labels


def best_subset(dm: SimulatedDm, inst: Instance, p: int, strategy: str = "exhaustive",
                seed: int = 0) -> Solution:
    """The user's optimal p-subset (argmin of the value function).

    Exhaustive enumeration breaks ties toward the lexicographically
    smallest subset; the evolutionary strategy returns the best found.
    """
    d = distances(inst)
    if strategy == "exhaustive":
        count = subset_count(inst.m, p)
        if count > EXHAUSTIVE_CAP:
            raise EnumerationCapError(
                f"C({inst.m},{p}) = {count} exceeds the exhaustive cap {EXHAUSTIVE_CAP}"
            )
        best = None
        best_val = None
        for sol in iter_solutions(inst.m, p):
            val = dm.value(evaluate(inst, d, sol))
            if best_val is None or val < best_val:
                best, best_val = sol, val
        return best
    if strategy == "evolutionary":
        from .evolution import optimize_single_objective

        sol, _ = optimize_single_objective(
            inst.m, p,
            lambda s: dm.value(evaluate(inst, d, s)),
            "min", seed=seed,
        )
        return sol
    raise ValidationError(f"unknown strategy {strategy!r}")


class QueryTimeout(Exception):
    """Raised internally when an interactive answer did not arrive in time."""


@dataclass
class QueryContext:
    """Everything a human-facing surface needs to render one query."""

    generation: int
    left_solution: Solution
    right_solution: Solution
    left_objectives: ObjectiveVector
    right_objectives: ObjectiveVector
    left_normalized: tuple[float, ...]
    right_normalized: tuple[float, ...]
    model_kind: str


class InteractiveDm:
    """Blocking rendezvous between a run worker and an external answerer.

    compare() publishes the pending query through on_query and waits for an
    answer posted via post_answer. After timeout seconds without an answer
    the on_pause callback fires (once per quiet period) and waiting
    continues: a silent human pauses the run, never corrupts it.
    """

    def __init__(self, on_query=None, on_pause=None, on_resume=None, timeout: float = 3600.0):
        self._answers: queue.Queue[str] = queue.Queue()
        self._on_query = on_query
        self._on_pause = on_pause
        self._on_resume = on_resume
        self.timeout = timeout
        self._cancelled = threading.Event()
        self.replay: list[str] = []

    def cancel(self) -> None:
        self._cancelled.set()
        self._answers.put("__cancelled__")

    def post_answer(self, verdict: str) -> None:
        if verdict not in (LEFT, RIGHT, INDIFFERENT_ANSWER):
            raise ValidationError(f"unknown verdict {verdict!r}")
        self._answers.put(verdict)

    def compare(self, left: ObjectiveVector, right: ObjectiveVector,
                context: QueryContext | None = None) -> DmAnswer:
        if self.replay:
            return DmAnswer(self.replay.pop(0))
        if self._on_query is not None:
            self._on_query(context)
        paused = False
        while True:
            try:
                verdict = self._answers.get(timeout=self.timeout)
            except queue.Empty:
                if not paused and self._on_pause is not None:
                    self._on_pause()
                paused = True
                continue
            if verdict == "__cancelled__" or self._cancelled.is_set():
                raise RunCancelled()
            if paused and self._on_resume is not None:
                self._on_resume()
            return DmAnswer(verdict)


class RunCancelled(Exception):
    """The interactive session was deleted while a run was in flight."""
