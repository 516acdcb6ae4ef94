"""Problem data model: demand points, candidate sites, distances, solutions.

An instance couples a weighted set of demand points with a set of candidate
facility sites and two covering radii s1 < s2. Instances are immutable after
construction and validated eagerly so downstream code can trust them.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCapError, ValidationError

# Refuse exhaustive enumeration beyond this many p-subsets.
EXHAUSTIVE_CAP = 5_000_000

BOUND_METHODS = ("exhaustive", "evolutionary", "provided")


@dataclass(frozen=True)
class DemandPoint:
    id: int
    x: float
    y: float
    pop: float


@dataclass(frozen=True)
class CandidateSite:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class ObjectiveBounds:
    """Per-objective [min, max] envelope over all p-subsets.

    Under method="exhaustive" the values are exact optima; under
    "evolutionary" they are best-found; "provided" means they came
    verbatim from an instance file.
    """

    fmin: tuple[float, float, float, float, float]
    fmax: tuple[float, float, float, float, float]
    method: str

    def __post_init__(self):
        if self.method not in BOUND_METHODS:
            raise ValidationError(f"unknown bounds method: {self.method!r}")
        if len(self.fmin) != 5 or len(self.fmax) != 5:
            raise ValidationError("bounds must cover exactly 5 objectives")
        for k, (lo, hi) in enumerate(zip(self.fmin, self.fmax), start=1):
            if lo > hi:
                raise ValidationError(f"objective {k}: fmin {lo} > fmax {hi}")


@dataclass(frozen=True)
class Solution:
    """A p-subset of candidate sites stored in canonical (sorted) form."""

    sites: tuple[int, ...]

    def __post_init__(self):
        canon = tuple(sorted(self.sites))
        if len(set(canon)) != len(canon):
            raise ValidationError(f"duplicate site indices in solution: {self.sites}")
        if canon and canon[0] < 1:
            raise ValidationError(f"site indices must be >= 1: {self.sites}")
        object.__setattr__(self, "sites", canon)

    def __len__(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class Instance:
    demand: tuple[DemandPoint, ...]
    sites: tuple[CandidateSite, ...]
    s1: float
    s2: float
    bounds: ObjectiveBounds | None = None

    def __post_init__(self):
        if len(self.demand) < 1:
            raise ValidationError("instance needs at least one demand point")
        if len(self.sites) < 2:
            raise ValidationError("instance needs at least two candidate sites")
        if not self.s1 < self.s2:
            raise ValidationError(f"covering radii must satisfy s1 < s2, got {self.s1} >= {self.s2}")
        for i, d in enumerate(self.demand, start=1):
            if d.id != i:
                raise ValidationError(f"demand ids must be dense 1..q, got {d.id} at position {i}")
            if d.pop < 0:
                raise ValidationError(f"demand point {d.id} has negative population {d.pop}")
        for j, s in enumerate(self.sites, start=1):
            if s.id != j:
                raise ValidationError(f"site ids must be dense 1..m, got {s.id} at position {j}")

    @property
    def q(self) -> int:
        return len(self.demand)

    @property
    def m(self) -> int:
        return len(self.sites)

    def populations(self) -> np.ndarray:
        return np.array([d.pop for d in self.demand], dtype=float)

    def validate_solution(self, sol: Solution, p: int | None = None) -> None:
        if p is not None and len(sol) != p:
            raise ValidationError(f"solution has {len(sol)} sites, expected {p}")
        if sol.sites and sol.sites[-1] > self.m:
            raise ValidationError(f"site index {sol.sites[-1]} exceeds m={self.m}")

    def to_dict(self) -> dict:
        doc = {
            "demand": [{"id": d.id, "x": d.x, "y": d.y, "pop": d.pop} for d in self.demand],
            "sites": [{"id": s.id, "x": s.x, "y": s.y} for s in self.sites],
            "s1": self.s1,
            "s2": self.s2,
        }
        if self.bounds is not None:
            doc["bounds"] = {
                str(k + 1): {"min": self.bounds.fmin[k], "max": self.bounds.fmax[k]}
                for k in range(5)
            }
        return doc


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for synthetic instances standing in for real survey data."""

    scale: float = 100.0
    pop_low: int = 1
    pop_high: int = 100
    s1: float | None = None
    s2: float | None = None
    s1_percentile: float = 10.0
    s2_percentile: float = 25.0


_TOP_LEVEL_KEYS = {"demand", "sites", "s1", "s2", "bounds"}
_DEMAND_KEYS = {"id", "x", "y", "pop"}
_SITE_KEYS = {"id", "x", "y"}


def instance_from_dict(doc: dict) -> Instance:
    """Build a validated Instance from a parsed JSON document (strict schema)."""
    if not isinstance(doc, dict):
        raise ValidationError("instance document must be a JSON object")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys in instance file: {sorted(unknown)}")
    for key in ("demand", "sites", "s1", "s2"):
        if key not in doc:
            raise ValidationError(f"instance file missing required key {key!r}")
    try:
        demand = []
        for row in doc["demand"]:
            extra = set(row) - _DEMAND_KEYS
            if extra:
                raise ValidationError(f"unknown demand keys: {sorted(extra)}")
            demand.append(DemandPoint(int(row["id"]), float(row["x"]), float(row["y"]), float(row["pop"])))
        sites = []
        for row in doc["sites"]:
            extra = set(row) - _SITE_KEYS
            if extra:
                raise ValidationError(f"unknown site keys: {sorted(extra)}")
            sites.append(CandidateSite(int(row["id"]), float(row["x"]), float(row["y"])))
        s1 = float(doc["s1"])
        s2 = float(doc["s2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance file: {exc}") from exc

    bounds = None
    if "bounds" in doc and doc["bounds"] is not None:
        raw = doc["bounds"]
        if set(raw) != {"1", "2", "3", "4", "5"}:
            raise ValidationError("bounds must provide entries for objectives 1..5")
        try:
            fmin = tuple(float(raw[str(k)]["min"]) for k in range(1, 6))
            fmax = tuple(float(raw[str(k)]["max"]) for k in range(1, 6))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed bounds block: {exc}") from exc
        bounds = ObjectiveBounds(fmin, fmax, "provided")
    return Instance(tuple(demand), tuple(sites), s1, s2, bounds)


def load_instance(path) -> Instance:
    """Load and validate an instance JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read instance file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"instance file {path} is not valid JSON: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(inst.to_dict(), fh, indent=2)
        fh.write("\n")


def generate_instance(q: int, m: int, seed: int, spec: GeneratorConfig | None = None) -> Instance:
    """Sample a synthetic instance; pure function of (q, m, seed, spec).

    Demand and site coordinates are uniform in the square [0, scale]^2 and
    populations are uniform integers. Unless overridden, s1/s2 are the
    10th/25th percentiles of all demand-site distances, which keeps both
    covering objectives non-degenerate.
    """
    if q < 1 or m < 2:
        raise ValidationError(f"need q >= 1 and m >= 2, got q={q}, m={m}")
    spec = spec or GeneratorConfig()
    rng = random.Random(seed)
    demand = tuple(
        DemandPoint(
            i + 1,
            rng.uniform(0.0, spec.scale),
            rng.uniform(0.0, spec.scale),
            float(rng.randint(spec.pop_low, spec.pop_high)),
        )
        for i in range(q)
    )
    sites = tuple(
        CandidateSite(j + 1, rng.uniform(0.0, spec.scale), rng.uniform(0.0, spec.scale))
        for j in range(m)
    )
    if spec.s1 is not None and spec.s2 is not None:
        s1, s2 = spec.s1, spec.s2
    else:
        dx = np.array([d.x for d in demand])[:, None] - np.array([s.x for s in sites])[None, :]
        dy = np.array([d.y for d in demand])[:, None] - np.array([s.y for s in sites])[None, :]
        dist = np.hypot(dx, dy)
        s1 = float(np.percentile(dist, spec.s1_percentile))
        s2 = float(np.percentile(dist, spec.s2_percentile))
        if not s1 < s2:
            # Degenerate distance distribution; nudge apart deterministically.
            s2 = s1 + max(1e-9, abs(s1) * 1e-6)
    return Instance(demand, sites, s1, s2)


def distances(inst: Instance) -> np.ndarray:
    """Euclidean q x m distance matrix between demand points and sites."""
    dx = np.array([d.x for d in inst.demand])[:, None] - np.array([s.x for s in inst.sites])[None, :]
    dy = np.array([d.y for d in inst.demand])[:, None] - np.array([s.y for s in inst.sites])[None, :]
    return np.hypot(dx, dy)


def subset_count(m: int, p: int) -> int:
    return math.comb(m, p)


def iter_solutions(m: int, p: int):
    """Yield every p-subset of 1..m in lexicographic order."""
    for combo in itertools.combinations(range(1, m + 1), p):
        yield Solution(combo)


@dataclass(frozen=True)
class BoundsBudget:
    """Budget for the evolutionary bounds path (per objective, per direction)."""

    generations: int = 150
    pop_size: int = 30
    restarts: int = 5
    seed: int = 0


def compute_bounds(inst: Instance, p: int, method: str = "exhaustive",
                   budget: BoundsBudget | None = None) -> ObjectiveBounds:
    """Per-objective min/max over p-subsets (exact or best-found).

    method="provided" passes the instance's file bounds through unchanged.
    """
    if method not in BOUND_METHODS:
        raise ValidationError(f"unknown bounds method: {method!r}")
    if p < 1 or p > inst.m:
        raise ValidationError(f"need 1 <= p <= m, got p={p}, m={inst.m}")

    if method == "provided":
        if inst.bounds is None:
            raise ValidationError("method='provided' but the instance carries no bounds")
        return inst.bounds

    from . import objectives  # local import: objectives depends on this module

    dm = distances(inst)
    if method == "exhaustive":
        count = subset_count(inst.m, p)
        if count > EXHAUSTIVE_CAP:
            raise EnumerationCapError(
                f"C({inst.m},{p}) = {count} exceeds the exhaustive cap {EXHAUSTIVE_CAP}"
            )
        lo = [math.inf] * 5
        hi = [-math.inf] * 5
        for sol in iter_solutions(inst.m, p):
            vec = objectives.evaluate(inst, dm, sol).as_tuple()
            for k in range(5):
                if vec[k] < lo[k]:
                    lo[k] = vec[k]
                if vec[k] > hi[k]:
                    hi[k] = vec[k]
        return ObjectiveBounds(tuple(lo), tuple(hi), "exhaustive")

    budget = budget or BoundsBudget()
    from .evolution import optimize_single_objective

    lo = [math.inf] * 5
    hi = [-math.inf] * 5
    for k in range(5):
        def score(sol, _k=k):
            return objectives.evaluate(inst, dm, sol).as_tuple()[_k]

        for sense, slot in (("min", lo), ("max", hi)):
            best_val = None
            for r in range(budget.restarts):
                seed = budget.seed * 1_000_003 + k * 101 + (0 if sense == "min" else 50) + r
                _, val = optimize_single_objective(
                    inst.m, p, score, sense,
                    generations=budget.generations, pop_size=budget.pop_size, seed=seed,
                )
                if best_val is None or (val < best_val if sense == "min" else val > best_val):
                    best_val = val
            slot[k] = best_val
    return ObjectiveBounds(tuple(lo), tuple(hi), "evolutionary")
