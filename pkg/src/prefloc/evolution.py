"""Evolutionary machinery over fixed-size site subsets.

Population capacity is 30 by default, individuals are canonical p-subsets,
and every operator is a deterministic function of its inputs plus a seeded
random stream. Offspring duplicating an existing solution are killed, so a
population never holds two copies of the same subset.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass

from .errors import NumericalFault, ValidationError
from .instance import Solution, subset_count
from .objectives import ObjectiveVector


class RngStream(random.Random):
    """Seeded deterministic stream; identical seeds yield identical draws."""

    def __init__(self, seed: int):
        super().__init__(seed)
        self.seed_value = seed


@dataclass
class Individual:
    solution: Solution
    objectives: ObjectiveVector | None = None
    front: int = 1
    second: float = 0.0


def _as_cost(vector, orientation):
    return tuple(v if o == "min" else -v for v, o in zip(vector, orientation))


def _dominates(a, b) -> bool:
    """Cost-space Pareto dominance: no worse everywhere, better somewhere."""
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def nondominated_sort(vectors, orientation) -> list[list[int]]:
    """Iterative peeling into dominance fronts (indices, front 1 first)."""
    costs = [_as_cost(v, orientation) for v in vectors]
    n = len(costs)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if _dominates(costs[i], costs[j]):
                dominated_by[i].append(j)
                counts[j] += 1
            elif _dominates(costs[j], costs[i]):
                dominated_by[j].append(i)
                counts[i] += 1
    current = [i for i in range(n) if counts[i] == 0]
    fronts = []
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(j)
        current = nxt
    return fronts


def crowding_distance(vectors, orientation) -> list[float]:
    """Per-member isolation score within one front.

    Boundary members of each objective get +inf; interior members
    accumulate the neighbor gap normalized by the front's range. Objectives
    with zero range contribute nothing.
    """
    n = len(vectors)
    if n == 0:
        return []
    dist = [0.0] * n
    for k in range(len(orientation)):
        order = sorted(range(n), key=lambda i: (vectors[i][k], i))
        lo = vectors[order[0]][k]
        hi = vectors[order[-1]][k]
        span = hi - lo
        if span <= 0.0:
            continue
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        for pos in range(1, n - 1):
            i = order[pos]
            if dist[i] != math.inf:
                gap = vectors[order[pos + 1]][k] - vectors[order[pos - 1]][k]
                dist[i] += gap / span
    if n <= 2:
        return [math.inf] * n
    return dist


def tournament_select(pop: list[Individual], rng: random.Random) -> list[Individual]:
    """One shuffled pairing pass: each slot s duels the permuted slot.

    Lower front wins; ties go to the higher second score, then to a coin
    flip. Winners come back in slot order and are mated consecutively.
    """
    size = len(pop)
    perm = list(range(size))
    rng.shuffle(perm)
    winners = []
    for s in range(size):
        a = pop[s]
        b = pop[perm[s]]
        if a.front != b.front:
            winners.append(a if a.front < b.front else b)
        elif a.second != b.second:
            winners.append(a if a.second > b.second else b)
        else:
            winners.append(a if rng.random() < 0.5 else b)
    return winners


def roulette_select(pop: list[Individual], trueval, sense: str, rng: random.Random) -> list[Individual]:
    """Fitness-proportional sampling of parents.

    Probabilities are value/total when maximizing and reciprocal-value
    weights when minimizing; a zero value under minimization has no defined
    weight and faults.
    """
    values = [float(trueval(ind)) for ind in pop]
    if sense == "min":
        if any(v == 0.0 for v in values):
            raise NumericalFault("roulette weight 1/U undefined: U = 0 in population")
        weights = [1.0 / v for v in values]
    elif sense == "max":
        if any(v < 0.0 for v in values):
            raise NumericalFault("roulette weights need nonnegative values")
        weights = values
    else:
        raise ValidationError(f"unknown sense {sense!r}")
    total = sum(weights)
    if total <= 0.0:
        raise NumericalFault("roulette weights sum to zero")
    cumulative = []
    acc = 0.0
    for w in weights:
        acc += w
        cumulative.append(acc)
    parents = []
    for _ in range(len(pop)):
        r = rng.random() * total
        parents.append(pop[min(bisect.bisect_right(cumulative, r), len(pop) - 1)])
    return parents


def crossover(p1: Solution, p2: Solution, rng: random.Random) -> tuple[Solution, Solution]:
    """One-point crossover on the uncommon site vectors.

    Sites shared by both parents go to both children; the leftover vectors
    are cut at one random interior point and their tails exchanged. With at
    most one uncommon site there is no interior cut and the children equal
    the parents.
    """
    common = set(p1.sites) & set(p2.sites)
    u1 = [s for s in p1.sites if s not in common]
    u2 = [s for s in p2.sites if s not in common]
    u = len(u1)
    if u <= 1:
        return Solution(p1.sites), Solution(p2.sites)
    cut = rng.randint(1, u - 1)
    shared = tuple(common)
    c1 = Solution(shared + tuple(u1[:cut]) + tuple(u2[cut:]))
    c2 = Solution(shared + tuple(u2[:cut]) + tuple(u1[cut:]))
    return c1, c2


def mutate(child: Solution, m: int, rng: random.Random) -> Solution:
    """Random-resetting mutation at rate 1/p per position.

    A reset position draws uniformly from the sites absent from the child,
    preserving distinctness; with no spare sites the position is kept.
    """
    sites = list(child.sites)
    p = len(sites)
    for i in range(p):
        if rng.random() < 1.0 / p:
            pool = [s for s in range(1, m + 1) if s not in sites]
            if pool:
                sites[i] = pool[rng.randrange(len(pool))]
    return Solution(tuple(sites))


def merge_and_truncate(
    pop: list[Individual],
    offspring: list[Individual],
    ranking,
    rng: random.Random,
    capacity: int | None = None,
) -> list[Individual]:
    """Kill duplicate offspring, merge, re-rank, keep the best.

    ranking(merged) must assign front and second to every individual. Order
    is front ascending, second score descending, seeded-random tie break, so
    the top individual is never lost.
    """
    capacity = capacity if capacity is not None else len(pop)
    seen = {ind.solution.sites for ind in pop}
    merged = list(pop)
    for child in offspring:
        key = child.solution.sites
        if key in seen:
            continue
        seen.add(key)
        merged.append(child)
    ranking(merged)
    decorated = sorted(
        ((ind.front, -ind.second, rng.random(), i) for i, ind in enumerate(merged)),
    )
    return [merged[i] for _, _, _, i in decorated[:capacity]]


def initial_population(m: int, p: int, pop_size: int, rng: random.Random) -> list[Solution]:
    """Distinct uniform-random p-subsets (all of them if fewer exist)."""
    total = subset_count(m, p)
    if total <= pop_size:
        import itertools

        return [Solution(c) for c in itertools.combinations(range(1, m + 1), p)]
    chosen: list[Solution] = []
    seen = set()
    while len(chosen) < pop_size:
        sites = tuple(sorted(rng.sample(range(1, m + 1), p)))
        if sites in seen:
            continue
        seen.add(sites)
        chosen.append(Solution(sites))
    return chosen


def optimize_single_objective(
    m: int,
    p: int,
    score,
    sense: str,
    generations: int = 150,
    pop_size: int = 30,
    seed: int = 0,
) -> tuple[Solution, float]:
    """Plain elitist EA on one scalar score; used for best-found bounds."""
    if sense not in ("min", "max"):
        raise ValidationError(f"unknown sense {sense!r}")
    rng = RngStream(seed)
    sign = 1.0 if sense == "min" else -1.0

    pop = [Individual(sol) for sol in initial_population(m, p, pop_size, rng)]
    values = {ind.solution.sites: float(score(ind.solution)) for ind in pop}

    def rank(members):
        ordered = sorted({sign * values[ind.solution.sites] for ind in members})
        level = {v: i + 1 for i, v in enumerate(ordered)}
        for ind in members:
            ind.front = level[sign * values[ind.solution.sites]]
            ind.second = 0.0

    rank(pop)
    for _ in range(generations):
        parents = tournament_select(pop, rng)
        offspring = []
        for a, b in zip(parents[0::2], parents[1::2]):
            for child in crossover(a.solution, b.solution, rng):
                child = mutate(child, m, rng)
                if child.sites not in values:
                    values[child.sites] = float(score(child))
                offspring.append(Individual(child))
        pop = merge_and_truncate(pop, offspring, rank, rng, capacity=pop_size)
    best = min(pop, key=lambda ind: sign * values[ind.solution.sites])
    return best.solution, values[best.solution.sites]
