"""The four run loops: the interactive preference-learning search and the
three full-information baselines.

All loops share the same evolutionary skeleton (tournament or roulette
mating, one-point subset crossover, random-resetting mutation, duplicate
killing, elitist truncation) and the same stopping rule: quit as soon as
the known optimum enters the population, or after max_generations.
"""

from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass, field

from .dm import INDIFFERENT_ANSWER, LEFT, RIGHT, QueryContext
from .errors import ValidationError
from .evolution import (
    Individual,
    RngStream,
    crossover,
    crowding_distance,
    initial_population,
    merge_and_truncate,
    mutate,
    nondominated_sort,
    roulette_select,
    tournament_select,
)
from .instance import Instance, ObjectiveBounds, Solution, distances
from .numerics import SimplexSearchConfig
from .objectives import N_OBJECTIVES, ORIENTATION, evaluate, normalize
from .preference import (
    INDIFFERENT,
    LEFT_PREFERRED,
    MODEL_CHOQUET,
    MODEL_LINEAR,
    RIGHT_PREFERRED,
    PreferenceStore,
    check_choquet,
    check_linear,
    rank_fronts_by_potential_optimality,
    repair,
)

log = logging.getLogger(__name__)

ALGO_NEMO = "nemo2ch"
ALGO_EA_UVF = "ea_uvf"
ALGO_EA_UVF1 = "ea_uvf1"
ALGO_EA_UVF2 = "ea_uvf2"
ALGORITHMS = (ALGO_NEMO, ALGO_EA_UVF, ALGO_EA_UVF1, ALGO_EA_UVF2)


@dataclass
class RunConfig:
    algorithm: str
    p: int
    seed: int
    dm: object
    bounds: ObjectiveBounds | None = None
    pb: Solution | None = None
    interaction_period: int = 10
    max_generations: int = 1000
    pop_size: int = 30
    search: SimplexSearchConfig = field(default_factory=SimplexSearchConfig)
    observer: object | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}")
        if self.interaction_period < 1:
            raise ValidationError("interaction_period must be >= 1")
        if self.pop_size < 2:
            raise ValidationError("pop_size must be >= 2")
        if self.max_generations < 0:
            raise ValidationError("max_generations must be >= 0")


@dataclass
class RunRecord:
    """Per-run trace; the canonical form (wall time excluded) is the
    determinism surface: identical seed and config reproduce it byte for
    byte."""

    algorithm: str
    seed: int
    converged: bool
    generations_used: int
    comparisons_asked: int
    model_escalations: int
    repairs: int
    best_solution: tuple[int, ...]
    best_true_value: float | None
    brsd: float | None
    wall_time: float

    def canonical_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "converged": self.converged,
            "generations_used": self.generations_used,
            "comparisons_asked": self.comparisons_asked,
            "model_escalations": self.model_escalations,
            "repairs": self.repairs,
            "best_solution": list(self.best_solution),
            "best_true_value": self.best_true_value,
            "brsd": self.brsd,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True)

    def to_json_line(self) -> str:
        doc = self.canonical_dict()
        doc["wall_time"] = self.wall_time
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "RunRecord":
        doc = json.loads(line)
        return cls(
            algorithm=doc["algorithm"],
            seed=doc["seed"],
            converged=doc["converged"],
            generations_used=doc["generations_used"],
            comparisons_asked=doc["comparisons_asked"],
            model_escalations=doc["model_escalations"],
            repairs=doc["repairs"],
            best_solution=tuple(doc["best_solution"]),
            best_true_value=doc["best_true_value"],
            brsd=doc["brsd"],
            wall_time=doc.get("wall_time", 0.0),
        )


def brsd(best_value: float, pb_value: float) -> float | None:
    """Relative score distance of the best found solution from the optimum.

    Undefined when the optimum's value is zero; that case is reported as
    None with a diagnostic instead of a guessed ratio.
    """
    if pb_value == 0.0:
        log.warning("relative score distance undefined: optimal value is 0")
        return None
    return abs(best_value - pb_value) / pb_value


class _RunState:
    def __init__(self):
        self.comparisons = 0
        self.escalations = 0
        self.repairs = 0
        self.model_kind = MODEL_LINEAR
        self.last_linear_w = None


def _notify(cfg: RunConfig, event: str, **payload) -> None:
    if cfg.observer is not None:
        cfg.observer(event, payload)


def _evolve(inst, cfg, d, rng, pop, rank, select, query_step, state) -> RunRecord:
    """Shared generation loop; rank/select/query_step close over their own
    algorithm-specific machinery."""
    start_time = time.perf_counter()
    capacity = len(pop)
    converged_gen = None
    pb_key = cfg.pb.sites if cfg.pb is not None else None
    if pb_key is not None and any(ind.solution.sites == pb_key for ind in pop):
        converged_gen = 0
    rank(pop)
    _notify(cfg, "generation", generation=0, pop=pop, state=state)

    g = 0
    while converged_gen is None and g < cfg.max_generations:
        g += 1
        if query_step is not None and g % cfg.interaction_period == 0:
            query_step(g, pop)
        parents = select(pop, rng)
        offspring = []
        for a, b in zip(parents[0::2], parents[1::2]):
            for child in crossover(a.solution, b.solution, rng):
                child = mutate(child, inst.m, rng)
                offspring.append(Individual(child, evaluate(inst, d, child)))
        if pb_key is not None and any(ch.solution.sites == pb_key for ch in offspring):
            converged_gen = g
        pop = merge_and_truncate(pop, offspring, rank, rng, capacity=capacity)
        _notify(cfg, "generation", generation=g, pop=pop, state=state)

    converged = converged_gen is not None
    generations = converged_gen if converged else cfg.max_generations

    # On discovery the record reports the optimum itself; otherwise the best
    # member of the final population (by true value when one is available,
    # else by the current ranking).
    best_solution = cfg.pb if converged and cfg.pb is not None else pop[0].solution
    best_value = None
    rel = None
    if hasattr(cfg.dm, "value"):
        if converged and cfg.pb is not None:
            best_value = float(cfg.dm.value(evaluate(inst, d, cfg.pb)))
            rel = 0.0
        else:
            by_value = min(pop, key=lambda ind: (cfg.dm.value(ind.objectives), ind.solution.sites))
            best_solution = by_value.solution
            best_value = float(cfg.dm.value(by_value.objectives))
            if cfg.pb is not None:
                rel = brsd(best_value, float(cfg.dm.value(evaluate(inst, d, cfg.pb))))

    record = RunRecord(
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        converged=converged,
        generations_used=generations,
        comparisons_asked=state.comparisons,
        model_escalations=state.escalations,
        repairs=state.repairs,
        best_solution=best_solution.sites,
        best_true_value=best_value,
        brsd=rel,
        wall_time=time.perf_counter() - start_time,
    )
    _notify(cfg, "finished", record=record, pop=pop, state=state)
    return record


def _start(inst: Instance, cfg: RunConfig):
    d = distances(inst)
    rng = RngStream(cfg.seed)
    pop = [
        Individual(s, evaluate(inst, d, s))
        for s in initial_population(inst.m, cfg.p, cfg.pop_size, rng)
    ]
    return d, rng, pop


def _require_bounds(cfg: RunConfig) -> ObjectiveBounds:
    if cfg.bounds is None:
        raise ValidationError("this algorithm needs objective bounds in the run config")
    return cfg.bounds


def _require_simulated(cfg: RunConfig):
    if not hasattr(cfg.dm, "value"):
        raise ValidationError("this algorithm needs a simulated user (true value accessible)")
    return cfg.dm


def run_nemo2ch(inst: Instance, cfg: RunConfig) -> RunRecord:
    """Interactive run: learn the user's value function from sparse pairwise
    comparisons, escalate from a weighted sum to a 2-additive aggregation
    when the simpler family cannot reproduce the answers, and rank the
    population by potential optimality under all compatible models."""
    bounds = _require_bounds(cfg)
    d, rng, pop = _start(inst, cfg)
    state = _RunState()
    store = PreferenceStore()
    asked: set[frozenset] = set()
    benefit_cache: dict[tuple[int, ...], tuple[float, ...]] = {}

    def benefit(ind: Individual) -> tuple[float, ...]:
        key = ind.solution.sites
        vec = benefit_cache.get(key)
        if vec is None:
            vec = normalize(ind.objectives, bounds).benefit()
            benefit_cache[key] = vec
        return vec

    def checker(st: PreferenceStore):
        if state.model_kind == MODEL_LINEAR:
            result = check_linear(st, n=N_OBJECTIVES)
            if result.compatible:
                state.last_linear_w = result.model.w
            return result
        return check_choquet(st, cfg.search, seed=cfg.seed, n=N_OBJECTIVES)

    def rank(members: list[Individual]) -> None:
        vectors = [benefit(ind) for ind in members]
        hints = [state.last_linear_w] if state.last_linear_w is not None else None
        fronts = rank_fronts_by_potential_optimality(
            vectors, store, state.model_kind, cfg.search, cfg.seed, rng=rng,
            stop_after=cfg.pop_size, hint_weights=hints,
        )
        for level, front in enumerate(fronts, start=1):
            cds = crowding_distance([vectors[i] for i in front], ("max",) * N_OBJECTIVES)
            for i, cd in zip(front, cds):
                members[i].front = level
                members[i].second = cd

    def query_step(g: int, pop: list[Individual]) -> None:
        fronts = nondominated_sort([ind.objectives.as_tuple() for ind in pop], ORIENTATION)
        pair = None
        for front in fronts:
            if len(front) < 2:
                continue
            fresh = [
                (i, j)
                for i, j in itertools.combinations(sorted(front), 2)
                if frozenset((pop[i].solution.sites, pop[j].solution.sites)) not in asked
            ]
            if fresh:
                pair = fresh[rng.randrange(len(fresh))]
                break
        if pair is None:
            return  # complete order, or every pair already asked
        left, right = pop[pair[0]], pop[pair[1]]
        context = QueryContext(
            generation=g,
            left_solution=left.solution,
            right_solution=right.solution,
            left_objectives=left.objectives,
            right_objectives=right.objectives,
            left_normalized=normalize(left.objectives, bounds).as_tuple(),
            right_normalized=normalize(right.objectives, bounds).as_tuple(),
            model_kind=state.model_kind,
        )
        answer = cfg.dm.compare(left.objectives, right.objectives, context=context)
        verdict = {
            LEFT: LEFT_PREFERRED,
            RIGHT: RIGHT_PREFERRED,
            INDIFFERENT_ANSWER: INDIFFERENT,
        }[answer.verdict]
        store.add(left.solution.sites, right.solution.sites, benefit(left), benefit(right), verdict)
        asked.add(frozenset((left.solution.sites, right.solution.sites)))
        state.comparisons += 1

        result = checker(store)
        if not result.compatible and state.model_kind == MODEL_LINEAR:
            state.model_kind = MODEL_CHOQUET
            state.escalations += 1
            result = checker(store)
        if not result.compatible:
            state.repairs += 1
            repair(store, checker)
        rank(pop)

    return _evolve(inst, cfg, d, rng, pop, rank, tournament_select, query_step, state)


def run_ea_uvf(inst: Instance, cfg: RunConfig) -> RunRecord:
    """Full-information baseline: fronts are the distinct true-value levels
    (best level first), so selection pressure is pure utility."""
    user = _require_simulated(cfg)
    d, rng, pop = _start(inst, cfg)
    values: dict[tuple[int, ...], float] = {}

    def value_of(ind: Individual) -> float:
        key = ind.solution.sites
        if key not in values:
            values[key] = float(user.value(ind.objectives))
        return values[key]

    def rank(members: list[Individual]) -> None:
        levels = {v: i + 1 for i, v in enumerate(sorted({value_of(ind) for ind in members}))}
        for ind in members:
            ind.front = levels[value_of(ind)]
            ind.second = 0.0

    return _evolve(inst, cfg, d, rng, pop, rank, tournament_select, None, _RunState())


def run_ea_uvf1(inst: Instance, cfg: RunConfig) -> RunRecord:
    """Dominance fronts with the true value replacing crowding distance as
    the within-front score (better value ranks higher)."""
    user = _require_simulated(cfg)
    d, rng, pop = _start(inst, cfg)

    def rank(members: list[Individual]) -> None:
        fronts = nondominated_sort([ind.objectives.as_tuple() for ind in members], ORIENTATION)
        for level, front in enumerate(fronts, start=1):
            for i in front:
                members[i].front = level
                # The families are cost-oriented; negate so greater = better.
                members[i].second = -float(user.value(members[i].objectives))

    return _evolve(inst, cfg, d, rng, pop, rank, tournament_select, None, _RunState())


def run_ea_uvf2(inst: Instance, cfg: RunConfig) -> RunRecord:
    """Roulette-wheel mating driven by the true value; plain dominance plus
    crowding distance for ranking and truncation."""
    user = _require_simulated(cfg)
    d, rng, pop = _start(inst, cfg)

    def rank(members: list[Individual]) -> None:
        vectors = [ind.objectives.as_tuple() for ind in members]
        fronts = nondominated_sort(vectors, ORIENTATION)
        for level, front in enumerate(fronts, start=1):
            cds = crowding_distance([vectors[i] for i in front], ORIENTATION)
            for i, cd in zip(front, cds):
                members[i].front = level
                members[i].second = cd

    def select(pop, rng):
        return roulette_select(pop, lambda ind: user.value(ind.objectives), "min", rng)

    return _evolve(inst, cfg, d, rng, pop, rank, select, None, _RunState())


_RUNNERS = {
    ALGO_NEMO: run_nemo2ch,
    ALGO_EA_UVF: run_ea_uvf,
    ALGO_EA_UVF1: run_ea_uvf1,
    ALGO_EA_UVF2: run_ea_uvf2,
}


def run(inst: Instance, cfg: RunConfig) -> RunRecord:
    """Dispatch on cfg.algorithm."""
    return _RUNNERS[cfg.algorithm](inst, cfg)
