"""Value models learned from sparse pairwise comparisons.

Two model families are supported: a nonnegative weight vector (weighted
sum) and a 2-additive Choquet integral expressed through its interaction
coefficients on singletons and pairs. Compatibility of a model family with
the stored comparisons is decided by maximizing a separation margin: a
linear program for the weighted sum, a penalized derivative-free search for
the Choquet family, whose comparison constraints are bilinear.

All model inputs are benefit-oriented vectors in [0, 1] (higher = better),
produced from normalized objective values; both families are increasing in
each coordinate, so a single orientation is required.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import (
    OPTIMAL,
    TARGET_REACHED,
    SimplexSearchConfig,
    margin_lp,
    nm_maximize,
)

# Positive-separation threshold: a model "reproduces" the comparisons only
# if the worst margin exceeds this (a float-realizable stand-in for > 0).
EPSILON_THRESHOLD = 1e-6
CONSTRAINT_TOL = 1e-6

LEFT_PREFERRED = "left_preferred"
RIGHT_PREFERRED = "right_preferred"
INDIFFERENT = "indifferent"
VERDICTS = (LEFT_PREFERRED, RIGHT_PREFERRED, INDIFFERENT)

MODEL_LINEAR = "linear"
MODEL_CHOQUET = "choquet"

COMPATIBLE = "compatible"
INCOMPATIBLE = "incompatible"


@dataclass(frozen=True)
class Comparison:
    """One answered pairwise query, kept verbatim for the life of a run."""

    seq: int
    left_id: tuple[int, ...]
    right_id: tuple[int, ...]
    left_vec: tuple[float, ...]
    right_vec: tuple[float, ...]
    verdict: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if self.left_id == self.right_id:
            raise ValidationError("a comparison needs two distinct solutions")
        if len(self.left_vec) != len(self.right_vec):
            raise ValidationError("comparison vectors must share arity")

    def winner_loser(self) -> tuple[tuple[float, ...], tuple[float, ...]] | None:
        if self.verdict == LEFT_PREFERRED:
            return self.left_vec, self.right_vec
        if self.verdict == RIGHT_PREFERRED:
            return self.right_vec, self.left_vec
        return None


class PreferenceStore:
    """Ordered comparison log with activation flags.

    Repair may deactivate entries; deactivated comparisons stay in the log
    for audit and can be re-activated.
    """

    def __init__(self):
        self._comps: list[Comparison] = []
        self._active: dict[int, bool] = {}
        self._next_seq = 1

    def add(self, left_id, right_id, left_vec, right_vec, verdict) -> Comparison:
        comp = Comparison(
            self._next_seq,
            tuple(left_id),
            tuple(right_id),
            tuple(float(v) for v in left_vec),
            tuple(float(v) for v in right_vec),
            verdict,
        )
        self._comps.append(comp)
        self._active[comp.seq] = True
        self._next_seq += 1
        return comp

    @property
    def comparisons(self) -> tuple[Comparison, ...]:
        return tuple(self._comps)

    def active(self) -> tuple[Comparison, ...]:
        return tuple(c for c in self._comps if self._active[c.seq])

    def is_active(self, seq: int) -> bool:
        return self._active[seq]

    def deactivate(self, seq: int) -> None:
        self._active[seq] = False

    def activate(self, seq: int) -> None:
        self._active[seq] = True

    def __len__(self) -> int:
        return len(self._comps)

    def to_json_lines(self) -> list[str]:
        return [
            json.dumps(
                {
                    "seq": c.seq,
                    "left_id": list(c.left_id),
                    "right_id": list(c.right_id),
                    "verdict": c.verdict,
                    "left_vec": list(c.left_vec),
                    "right_vec": list(c.right_vec),
                    "active": self._active[c.seq],
                },
                sort_keys=True,
            )
            for c in self._comps
        ]

    @classmethod
    def from_json_lines(cls, lines) -> "PreferenceStore":
        store = cls()
        for line in lines:
            if not line.strip():
                continue
            row = json.loads(line)
            comp = store.add(
                row["left_id"], row["right_id"], row["left_vec"], row["right_vec"], row["verdict"]
            )
            if not row.get("active", True):
                store.deactivate(comp.seq)
        return store


@dataclass(frozen=True)
class LinearModel:
    """Nonnegative weights summing to one."""

    w: tuple[float, ...]

    def __post_init__(self):
        if any(v < -CONSTRAINT_TOL for v in self.w):
            raise ValidationError(f"negative weight in {self.w}")
        if abs(sum(self.w) - 1.0) > 1e-6:
            raise ValidationError(f"weights must sum to 1, got {sum(self.w)}")

    def value(self, x) -> float:
        return float(sum(w * v for w, v in zip(self.w, x)))


def pair_order(n: int) -> tuple[tuple[int, int], ...]:
    """Canonical (i, j) order, i < j, for flattened pair coefficients."""
    return tuple(itertools.combinations(range(n), 2))


@dataclass(frozen=True)
class ChoquetModel:
    """2-additive aggregation: scaling weights plus interaction coefficients.

    pairs follows pair_order(n). Validity means: weights on the simplex,
    singleton coefficients nonnegative, coefficients summing to one, and
    every singleton surviving its worst-case negative pair sum.
    """

    w: tuple[float, ...]
    singles: tuple[float, ...]
    pairs: tuple[float, ...]

    def __post_init__(self):
        n = len(self.w)
        if len(self.singles) != n or len(self.pairs) != n * (n - 1) // 2:
            raise ValidationError("inconsistent model arity")
        self.validate()

    def validate(self, tol: float = CONSTRAINT_TOL) -> None:
        if any(v < -tol for v in self.w) or abs(sum(self.w) - 1.0) > max(tol, 1e-6):
            raise ValidationError("scaling weights must be a simplex point")
        if any(v < -tol for v in self.singles):
            raise ValidationError("singleton coefficients must be nonnegative")
        total = sum(self.singles) + sum(self.pairs)
        if abs(total - 1.0) > max(tol, 1e-6):
            raise ValidationError(f"coefficients must sum to 1, got {total}")
        n = len(self.w)
        neg = [0.0] * n
        for (i, j), v in zip(pair_order(n), self.pairs):
            if v < 0:
                neg[i] += v
                neg[j] += v
        for j in range(n):
            if self.singles[j] + neg[j] < -tol:
                raise ValidationError(
                    f"criterion {j}: worst-case pair sum {self.singles[j] + neg[j]} < 0"
                )


def induced_capacity(singles, pairs) -> dict[frozenset, float]:
    """Set function S -> sum of coefficients on subsets of S (all 2^n keys)."""
    n = len(singles)
    order = pair_order(n)
    mu: dict[frozenset, float] = {}
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            sset = frozenset(combo)
            total = sum(singles[j] for j in combo)
            total += sum(v for (i, j), v in zip(order, pairs) if i in sset and j in sset)
            mu[sset] = total
    return mu


def validate_capacity(mu: dict[frozenset, float], n: int, tol: float = 1e-9) -> None:
    """Check normalization and monotonicity of a fully-specified capacity."""
    full = frozenset(range(n))
    if abs(mu.get(frozenset(), 0.0)) > tol:
        raise ValidationError("capacity of the empty set must be 0")
    if full not in mu or abs(mu[full] - 1.0) > tol:
        raise ValidationError("capacity of the full criterion set must be 1")
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            sset = frozenset(combo)
            if sset not in mu:
                raise ValidationError(f"capacity missing subset {set(sset)}")
            for i in range(n):
                if i not in sset:
                    bigger = sset | {i}
                    if bigger in mu and mu[sset] > mu[bigger] + tol:
                        raise ValidationError(
                            f"capacity not monotone: mu({set(sset)}) > mu({set(bigger)})"
                        )


def choquet_eval_capacity(x, mu: dict[frozenset, float]) -> float:
    """Aggregate a nonnegative vector with respect to a capacity.

    Walks the coordinates in ascending order and weights every increment by
    the capacity of the criteria at or above that level (ties contribute
    zero-width increments, so their order is immaterial).
    """
    n = len(x)
    if any(v < 0 for v in x):
        raise ValidationError("inputs must be nonnegative; translate them first")
    validate_capacity(mu, n)
    asc = sorted(range(n), key=lambda i: (x[i], i))
    total = 0.0
    prev = 0.0
    for pos, i in enumerate(asc):
        upper = frozenset(asc[pos:])
        total += (x[i] - prev) * mu[upper]
        prev = x[i]
    return total


def choquet_eval_2add(x, model: ChoquetModel, pre_scaled: bool = False) -> float:
    """2-additive aggregation of x (applying the scaling weights unless
    pre_scaled): sum of singleton terms plus pairwise-minimum terms."""
    if any(v < 0 for v in x):
        raise ValidationError("inputs must be nonnegative; translate them first")
    model.validate()
    n = len(model.w)
    if len(x) != n:
        raise ValidationError("input arity differs from model arity")
    y = tuple(x) if pre_scaled else tuple(w * v for w, v in zip(model.w, x))
    total = sum(s * v for s, v in zip(model.singles, y))
    total += sum(v * min(y[i], y[j]) for (i, j), v in zip(pair_order(n), model.pairs))
    return float(total)


@dataclass(frozen=True)
class CompatResult:
    status: str
    epsilon: float
    model: LinearModel | ChoquetModel | None = None

    @property
    def compatible(self) -> bool:
        return self.status == COMPATIBLE


def _store_arity(store: PreferenceStore, n: int | None) -> int:
    # Deactivated comparisons still witness the arity (repair may empty the
    # active set entirely).
    if store.comparisons:
        return len(store.comparisons[0].left_vec)
    if n is None:
        raise ValidationError("empty store: criterion count must be given explicitly")
    return n


def _store_diffs(comparisons, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack (winner - loser) rows and (left - right) equality rows."""
    strict = []
    equal = []
    for comp in comparisons:
        wl = comp.winner_loser()
        if wl is None:
            equal.append([a - b for a, b in zip(comp.left_vec, comp.right_vec)])
        else:
            winner, loser = wl
            strict.append([a - b for a, b in zip(winner, loser)])
    S = np.array(strict, dtype=float) if strict else np.zeros((0, n))
    E = np.array(equal, dtype=float) if equal else np.zeros((0, n))
    return S, E


def check_linear(store: PreferenceStore, n: int | None = None) -> CompatResult:
    """Is some weighted sum consistent with every active comparison?

    Maximizes the slack eps by which strict preferences are reproduced
    (indifferences become equalities); compatible iff the optimum exceeds
    the positive-separation threshold. The empty store is vacuously
    compatible at the cap eps = 1.
    """
    n = _store_arity(store, n)
    S, E = _store_diffs(store.active(), n)
    status, eps, w = margin_lp(S, E, None, n)
    if status != OPTIMAL or eps <= EPSILON_THRESHOLD:
        return CompatResult(INCOMPATIBLE, eps if status == OPTIMAL else 0.0)
    w = np.maximum(w, 0.0)
    model = LinearModel(tuple(float(v) for v in w / w.sum()))
    return CompatResult(COMPATIBLE, float(eps), model)


class _ChoquetSearchSpace:
    """Shared machinery for the penalized Choquet feasibility searches.

    A parameter vector theta holds raw weight scores (mapped through a
    softmax), raw singleton coefficients, and raw pair coefficients. The
    raw coefficients are repaired into a valid model before every
    evaluation: singletons are clipped nonnegative, negative pairs are
    shrunk just enough to keep every criterion's worst-case pair sum
    nonnegative, and the result is rescaled to total mass one (a positive
    rescaling preserves the sign structure). Every point the search visits
    is therefore a genuine candidate model; only the indifference
    constraints remain penalized, with an L1 weight large enough to make
    the penalty exact.
    """

    def __init__(self, n: int, penalty_weight: float):
        self.n = n
        self.order = pair_order(n)
        self.pi = np.array([i for i, _ in self.order], dtype=int)
        self.pj = np.array([j for _, j in self.order], dtype=int)
        self.rho = penalty_weight
        self.dim = 2 * n + len(self.order)

    def start(self) -> np.ndarray:
        theta = np.zeros(self.dim)
        theta[self.n:2 * self.n] = 1.0 / self.n
        return theta

    def box(self):
        n = self.n
        return [(-8.0, 8.0)] * n + [(0.0, 2.0)] * n + [(-2.0, 2.0)] * len(self.order)

    def decode(self, theta: np.ndarray):
        n = self.n
        a = theta[:n]
        s = np.maximum(np.asarray(theta[n:2 * n], dtype=float), 0.0)
        p = np.asarray(theta[2 * n:], dtype=float).copy()
        e = np.exp(a - a.max())
        w = e / e.sum()
        # Shrink negative pairs so s_j plus its negative pair mass stays >= 0.
        negsum = np.zeros(n)
        pneg = np.minimum(p, 0.0)
        np.add.at(negsum, self.pi, pneg)
        np.add.at(negsum, self.pj, pneg)
        scale = np.ones(n)
        deficit = negsum < -s
        scale[deficit] = s[deficit] / (-negsum[deficit])
        pair_scale = np.minimum(scale[self.pi], scale[self.pj])
        p = np.where(p < 0.0, p * pair_scale, p)
        total = s.sum() + p.sum()
        if total > 1e-9:
            s = s / total
            p = p / total
        else:
            s = np.full(n, 1.0 / n)
            p = np.zeros_like(p)
        return w, s, p

    def batch_values(self, V: np.ndarray, w, s, p) -> np.ndarray:
        Vs = V * w
        return Vs @ s + np.minimum(Vs[:, self.pi], Vs[:, self.pj]) @ p

    def model(self, w, s, p) -> ChoquetModel:
        return ChoquetModel(
            tuple(float(v) for v in w),
            tuple(float(v) for v in s),
            tuple(float(v) for v in p),
        )


def _choquet_margin_search(
    n: int,
    strict_pairs: list[tuple[tuple[float, ...], tuple[float, ...]]],
    equal_pairs: list[tuple[tuple[float, ...], tuple[float, ...]]],
    cfg: SimplexSearchConfig,
    seed: int,
) -> tuple[float, float, ChoquetModel | None]:
    """Maximize the worst strict margin under the validity penalties.

    Returns (best margin, worst constraint violation at the best point,
    model built from the best point). The margin is capped at 1, matching
    the benefit-input scale.
    """
    space = _ChoquetSearchSpace(n, cfg.penalty_weight)
    if strict_pairs:
        SW = np.array([a for a, _ in strict_pairs], dtype=float)
        SL = np.array([b for _, b in strict_pairs], dtype=float)
    else:
        SW = SL = None
    if equal_pairs:
        EA = np.array([a for a, _ in equal_pairs], dtype=float)
        EB = np.array([b for _, b in equal_pairs], dtype=float)
    else:
        EA = EB = None

    def evaluate(theta):
        w, s, p = space.decode(theta)
        eqs = []
        if EA is not None:
            eqs = list(space.batch_values(EA, w, s, p) - space.batch_values(EB, w, s, p))
        if SW is not None:
            margin = float((space.batch_values(SW, w, s, p) - space.batch_values(SL, w, s, p)).min())
            margin = min(margin, 1.0)
        else:
            margin = 1.0
        return margin, eqs

    def objective(theta):
        margin, eqs = evaluate(theta)
        return margin - space.rho * sum(abs(v) for v in eqs)

    best_theta, _ = nm_maximize(objective, space.start(), space.box(), cfg, seed=seed)
    margin, eqs = evaluate(best_theta)
    worst = max((abs(v) for v in eqs), default=0.0)
    model = None
    if worst < CONSTRAINT_TOL:
        w, s, p = space.decode(best_theta)
        try:
            model = space.model(w, s, p)
        except ValidationError:
            model = None
    return margin, worst, model


def check_choquet(
    store: PreferenceStore,
    cfg: SimplexSearchConfig | None = None,
    seed: int = 0,
    n: int | None = None,
) -> CompatResult:
    """Is some valid 2-additive aggregation consistent with the store?

    The comparison constraints are bilinear in (weights, coefficients), so
    the margin is maximized by the penalized derivative-free search; an
    exhausted budget conservatively reports incompatible.
    """
    cfg = cfg or SimplexSearchConfig()
    n = _store_arity(store, n)
    strict = []
    equal = []
    for comp in store.active():
        wl = comp.winner_loser()
        if wl is None:
            equal.append((comp.left_vec, comp.right_vec))
        else:
            strict.append(wl)
    margin, worst, model = _choquet_margin_search(n, strict, equal, cfg, seed)
    if margin > EPSILON_THRESHOLD and worst < CONSTRAINT_TOL and model is not None:
        return CompatResult(COMPATIBLE, margin, model)
    return CompatResult(INCOMPATIBLE, margin)


def repair(store: PreferenceStore, checker) -> PreferenceStore:
    """Restore compatibility by dropping comparisons, oldest first.

    Deactivates active comparisons in age order until the checker passes,
    then walks the removed ones newest-first, keeping each re-activated
    only if the checker still passes. The store ends compatible (the empty
    store always is).
    """
    if checker(store).compatible:
        return store
    removed: list[int] = []
    for comp in store.active():
        store.deactivate(comp.seq)
        removed.append(comp.seq)
        if checker(store).compatible:
            break
    for seq in reversed(removed):
        store.activate(seq)
        if not checker(store).compatible:
            store.deactivate(seq)
    return store


def _choquet_potentially_optimal(idx, pool, vectors, store, cfg, seed) -> bool:
    n = len(vectors[idx])
    strict = []
    equal = []
    for comp in store.active():
        wl = comp.winner_loser()
        if wl is None:
            equal.append((comp.left_vec, comp.right_vec))
        else:
            strict.append(wl)
    x = vectors[idx]
    for other in pool:
        if other == idx:
            continue
        strict.append((x, vectors[other]))
    margin, worst, _ = _choquet_margin_search(n, strict, equal, cfg, seed)
    return margin > EPSILON_THRESHOLD and worst < CONSTRAINT_TOL


class _LinearFrontTester:
    """Per-ranking state for the weighted-sum potential-optimality tests.

    Keeps a pool of witness weight vectors known to reproduce the store
    with a safe margin; a witness whose unique argmax over the level beats
    the runner-up by more than the threshold certifies that member without
    a solve. Everything else falls through to the margin LP, stopped early
    once eps provably exceeds the threshold.
    """

    def __init__(self, V: np.ndarray, store: PreferenceStore, hint_weights=None):
        self.V = V
        self.n = V.shape[1]
        self.S, self.E = _store_diffs(store.active(), self.n)
        self.pool: list[np.ndarray] = []
        candidates = [np.full(self.n, 1.0 / self.n)]
        candidates += [np.eye(self.n)[j] for j in range(self.n)]
        for w in hint_weights or []:
            candidates.append(np.asarray(w, dtype=float))
        for w in candidates:
            if self._store_margin(w) > EPSILON_THRESHOLD:
                self.pool.append(w)

    def _store_margin(self, w: np.ndarray) -> float:
        if self.E.shape[0] and np.abs(self.E @ w).max() > 1e-9:
            return -1.0
        if self.S.shape[0]:
            return min(1.0, float((self.S @ w).min()))
        return 1.0

    def certified(self, remaining: list[int]) -> set[int]:
        """Members provably potentially optimal via some pooled witness."""
        if not self.pool or len(remaining) < 1:
            return set()
        VR = self.V[remaining]
        out: set[int] = set()
        for w in self.pool:
            margin = self._store_margin(w)
            if margin <= EPSILON_THRESHOLD:
                continue
            scores = VR @ w
            top = int(np.argmax(scores))
            if len(scores) > 1:
                gap = scores[top] - np.max(np.delete(scores, top))
                margin = min(margin, float(gap))
            if margin > EPSILON_THRESHOLD:
                out.add(remaining[top])
        return out

    def solve(self, idx: int, remaining: list[int]) -> bool:
        others = [j for j in remaining if j != idx]
        gaps = self.V[idx] - self.V[others] if others else None
        status, eps, w = margin_lp(self.S, self.E, gaps, self.n, target=EPSILON_THRESHOLD)
        if status == TARGET_REACHED:
            if w is not None:
                self.pool.append(w)
            return True
        if status == OPTIMAL and eps > EPSILON_THRESHOLD:
            if w is not None:
                self.pool.append(w)
            return True
        return False


def rank_fronts_by_potential_optimality(
    vectors,
    store: PreferenceStore,
    model_kind: str,
    cfg: SimplexSearchConfig | None = None,
    seed: int = 0,
    rng: random.Random | None = None,
    stop_after: int | None = None,
    hint_weights=None,
) -> list[list[int]]:
    """Partition solution indices into preference fronts.

    Front 1 holds every solution that some compatible model ranks strictly
    above all others; peeling repeats on the remainder. If no remaining
    solution passes the test, the rest collapse into one equal-preference
    front. Within a front, indices are ordered by descending crowding
    distance with seeded random tie-breaks.

    stop_after, when set, lumps everything still unpeeled into one final
    front as soon as at least that many members have been assigned; callers
    that only consume the top of the ranking (elitist truncation) use it to
    skip solves whose outcome cannot matter.
    """
    from .evolution import crowding_distance

    cfg = cfg or SimplexSearchConfig()
    rng = rng or random.Random(seed)
    V = np.asarray([list(v) for v in vectors], dtype=float)
    count = len(vectors)
    n = V.shape[1] if count else 0

    def order_front(members: list[int]) -> list[int]:
        vecs = [tuple(V[i]) for i in members]
        cds = crowding_distance(vecs, ("max",) * n)
        decorated = sorted(((-cd, rng.random(), i) for cd, i in zip(cds, members)))
        return [i for _, _, i in decorated]

    if model_kind not in (MODEL_LINEAR, MODEL_CHOQUET):
        raise ValidationError(f"unknown model kind {model_kind!r}")
    tester = _LinearFrontTester(V, store, hint_weights) if model_kind == MODEL_LINEAR else None
    # ge[b, a]: b at least as good as a everywhere (covers it).
    ge = (V[:, None, :] >= V[None, :, :]).all(axis=2) if count else None

    remaining = list(range(count))
    fronts: list[list[int]] = []
    assigned = 0
    while remaining:
        ridx = np.array(remaining)
        sub = ge[np.ix_(ridx, ridx)].copy()
        np.fill_diagonal(sub, False)
        covered = sub.any(axis=0)
        certified = tester.certified(remaining) if tester is not None else set()
        passed = []
        for pos, idx in enumerate(remaining):
            if covered[pos]:
                continue
            if idx in certified:
                passed.append(idx)
                continue
            if tester is not None:
                ok = tester.solve(idx, remaining)
            else:
                ok = _choquet_potentially_optimal(idx, remaining, [tuple(v) for v in V], store, cfg, seed)
            if ok:
                passed.append(idx)
        if not passed:
            fronts.append(order_front(remaining))
            return fronts
        fronts.append(order_front(passed))
        assigned += len(passed)
        chosen = set(passed)
        remaining = [i for i in remaining if i not in chosen]
        if stop_after is not None and assigned >= stop_after and remaining:
            fronts.append(order_front(remaining))
            return fronts
    return fronts
