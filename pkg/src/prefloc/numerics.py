"""Small dense LP solver and a derivative-free simplex-reflection maximizer.

Both routines serve the preference module's feasibility programs, which are
tiny (about twenty variables at five criteria), so exactness and determinism
matter far more than speed. The LP path is a two-phase tableau simplex that
falls back to Bland's rule for anti-cycling; the derivative-free path is a
reflection/expansion/contraction search with seeded multi-restart and hard
box projection.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "failed"


@dataclass(frozen=True)
class LinearProgram:
    """maximize c.x subject to rows (a, rel, b) with rel in {<=, =, >=}.

    bounds[j] = (lo, hi); lo None means unbounded below, hi None unbounded
    above. Rows must all have the arity of the objective.
    """

    objective: tuple[float, ...]
    rows: tuple[tuple[tuple[float, ...], str, float], ...]
    bounds: tuple[tuple[float | None, float | None], ...]

    def __post_init__(self):
        n = len(self.objective)
        if len(self.bounds) != n:
            raise ValidationError("bounds arity differs from objective arity")
        for coeffs, rel, _ in self.rows:
            if len(coeffs) != n:
                raise ValidationError("constraint arity differs from objective arity")
            if rel not in ("<=", "=", ">="):
                raise ValidationError(f"unknown relation {rel!r}")


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: float | None = None
    point: tuple[float, ...] | None = None


TARGET_REACHED = "target_reached"


def _simplex_iterate(T: np.ndarray, basis: list[int], ncols: int,
                     target: float | None = None) -> str:
    """Run primal simplex on tableau T (objective in last row, rhs last col).

    Entering rule is Dantzig's most-positive reduced profit with an automatic
    switch to Bland's smallest-index rule after a stall, which prevents
    cycling on degenerate vertices. With a target, iteration stops as soon
    as the (monotone) objective value exceeds it.
    """
    m = T.shape[0] - 1
    max_iters = 200 + 20 * (m + ncols)
    bland_after = 50 + 5 * (m + ncols)
    basis_arr = np.asarray(basis)
    for it in range(max_iters):
        if target is not None and -T[-1, -1] > target:
            return TARGET_REACHED
        zrow = T[-1, :ncols]
        if it < bland_after:
            col = int(np.argmax(zrow))
            if zrow[col] <= _PIVOT_TOL:
                return OPTIMAL
        else:
            pos = np.nonzero(zrow > _PIVOT_TOL)[0]
            if pos.size == 0:
                return OPTIMAL
            col = int(pos[0])
        colvals = T[:m, col]
        ok = colvals > _PIVOT_TOL
        if not ok.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[ok] = T[:m, -1][ok] / colvals[ok]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12)[0]
        row = int(ties[np.argmin(basis_arr[ties])])
        T[row, :] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row, :])
        basis[row] = col
        basis_arr[row] = col
    return FAILED


def lp_solve(lp: LinearProgram) -> LpOutcome:
    """Classify the program as optimal/infeasible/unbounded and return an
    optimal point when one exists. Deterministic for identical input."""
    n = len(lp.objective)

    # Map each variable to nonnegative standard-form columns.
    col_of: list[tuple[int, int | None]] = []  # (plus column, minus column)
    shift = [0.0] * n
    ncols = 0
    extra_rows: list[tuple[list[float], str, float]] = []
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is None:
            col_of.append((ncols, ncols + 1))
            ncols += 2
        else:
            shift[j] = lo
            col_of.append((ncols, None))
            ncols += 1
        if hi is not None:
            row = [0.0] * n
            row[j] = 1.0
            extra_rows.append((row, "<=", hi))

    def expand(coeffs) -> np.ndarray:
        out = np.zeros(ncols)
        for j, a in enumerate(coeffs):
            plus, minus = col_of[j]
            out[plus] += a
            if minus is not None:
                out[minus] -= a
        return out

    rows = [(list(c), rel, b) for c, rel, b in lp.rows] + extra_rows
    A = np.zeros((len(rows), ncols))
    b = np.zeros(len(rows))
    rels = []
    for i, (coeffs, rel, rhs) in enumerate(rows):
        A[i] = expand(coeffs)
        b[i] = rhs - sum(a * s for a, s in zip(coeffs, shift))
        rels.append(rel)
    for i in range(len(rows)):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            rels[i] = {"<=": ">=", ">=": "<=", "=": "="}[rels[i]]

    m = len(rows)
    n_slack = sum(1 for r in rels if r in ("<=", ">="))
    n_art = sum(1 for r in rels if r in ("=", ">="))
    total = ncols + n_slack + n_art
    T = np.zeros((m + 1, total + 1))
    basis = [-1] * m
    s_at = ncols
    a_at = ncols + n_slack
    si = ai = 0
    art_cols = []
    for i in range(m):
        T[i, :ncols] = A[i]
        T[i, -1] = b[i]
        if rels[i] == "<=":
            T[i, s_at + si] = 1.0
            basis[i] = s_at + si
            si += 1
        elif rels[i] == ">=":
            T[i, s_at + si] = -1.0
            si += 1
            T[i, a_at + ai] = 1.0
            basis[i] = a_at + ai
            art_cols.append(a_at + ai)
            ai += 1
        else:
            T[i, a_at + ai] = 1.0
            basis[i] = a_at + ai
            art_cols.append(a_at + ai)
            ai += 1

    if n_art:
        # Phase 1: maximize -sum(artificials).
        for i in range(m):
            if basis[i] in art_cols:
                T[-1, :] += T[i, :]
        for c in art_cols:
            T[-1, c] = 0.0
        status = _simplex_iterate(T, basis, total)
        if status == FAILED:
            return LpOutcome(FAILED)
        if T[-1, -1] > 1e-7:
            return LpOutcome(INFEASIBLE)
        # Drive leftover artificials out of the basis (degenerate rows).
        for i in range(m):
            if basis[i] in art_cols:
                pivoted = False
                for c in range(ncols + n_slack):
                    if abs(T[i, c]) > 1e-7:
                        piv = T[i, c]
                        T[i, :] /= piv
                        for r in range(m + 1):
                            if r != i and abs(T[r, c]) > 1e-13:
                                T[r, :] -= T[r, c] * T[i, :]
                        basis[i] = c
                        pivoted = True
                        break
                if not pivoted:
                    basis[i] = -1  # redundant row
        T[:, a_at:a_at + n_art] = 0.0

    # Phase 2 objective: reduced profits for maximize c.x on expanded columns.
    cexp = np.zeros(total)
    cexp[:ncols] = expand(lp.objective)
    T[-1, :] = 0.0
    T[-1, :total] = cexp
    for i in range(m):
        if basis[i] >= 0 and abs(cexp[basis[i]]) > 1e-13:
            T[-1, :] -= cexp[basis[i]] * T[i, :]
    for c in art_cols:
        T[-1, c] = -1.0  # keep artificials out
    status = _simplex_iterate(T, basis, ncols + n_slack)
    if status in (FAILED, UNBOUNDED):
        return LpOutcome(status)

    xstd = np.zeros(total)
    for i in range(m):
        if basis[i] >= 0:
            xstd[basis[i]] = T[i, -1]
    point = []
    for j in range(n):
        plus, minus = col_of[j]
        v = xstd[plus] - (xstd[minus] if minus is not None else 0.0)
        point.append(float(v + shift[j]))
    value = float(sum(c * x for c, x in zip(lp.objective, point)))
    return LpOutcome(OPTIMAL, value, tuple(point))


def margin_lp(
    strict: np.ndarray | None,
    equal: np.ndarray | None,
    gaps: np.ndarray | None,
    n: int,
    target: float | None = None,
) -> tuple[str, float, np.ndarray | None]:
    """Maximize eps subject to row.w >= eps (strict and gap rows),
    row.w = 0 (equality rows), sum(w) = 1, w >= 0, eps in [0, 1].

    This is the shared algebra of the preference-compatibility and
    potential-optimality programs, solved by the same two-phase tableau
    simplex as lp_solve but built directly from arrays. With a target the
    solve stops as soon as eps provably exceeds it (the simplex objective
    is monotone), which is all a feasibility test needs.

    Returns (status, eps, w); status "optimal" carries the exact maximum,
    "target_reached" a certified lower bound > target.
    """
    blocks = [b for b in (strict, gaps) if b is not None and len(b)]
    ge = np.vstack(blocks) if blocks else np.zeros((0, n))
    eq = equal if equal is not None and len(equal) else np.zeros((0, n))
    k = ge.shape[0]
    e = eq.shape[0]
    m = k + e + 2  # + simplex row + eps cap row
    n_art = e + 1
    total = (n + 1) + (k + 1) + n_art
    s_at = n + 1
    a_at = n + 1 + k + 1

    T = np.zeros((m + 1, total + 1))
    basis: list[int] = []
    # ge rows: a.w - eps >= 0 rewritten as -a.w + eps + s = 0 (s basic at 0).
    for i in range(k):
        T[i, :n] = -ge[i]
        T[i, n] = 1.0
        T[i, s_at + i] = 1.0
        basis.append(s_at + i)
    # equality rows carry artificials.
    for i in range(e):
        row = k + i
        T[row, :n] = eq[i]
        T[row, a_at + i] = 1.0
        basis.append(a_at + i)
    # simplex row: sum w = 1 (artificial), eps cap: eps + s = 1 (slack).
    T[k + e, :n] = 1.0
    T[k + e, a_at + e] = 1.0
    T[k + e, -1] = 1.0
    basis.append(a_at + e)
    T[k + e + 1, n] = 1.0
    T[k + e + 1, s_at + k] = 1.0
    T[k + e + 1, -1] = 1.0
    basis.append(s_at + k)

    # Phase 1: drive the artificials (equality rows + simplex row) to zero.
    for row in range(k, k + e + 1):
        T[-1, :] += T[row, :]
    T[-1, a_at:a_at + n_art] = 0.0
    status = _simplex_iterate(T, basis, total)
    if status == FAILED:
        return FAILED, 0.0, None
    if T[-1, -1] > 1e-7:
        return INFEASIBLE, 0.0, None
    for i in range(m):
        if a_at <= basis[i] < a_at + n_art:
            for c in range(a_at):
                if abs(T[i, c]) > 1e-7:
                    T[i, :] /= T[i, c]
                    factors = T[:, c].copy()
                    factors[i] = 0.0
                    T -= np.outer(factors, T[i, :])
                    basis[i] = c
                    break
            else:
                basis[i] = -1
    T[:, a_at:a_at + n_art] = 0.0

    # Phase 2: maximize eps.
    T[-1, :] = 0.0
    T[-1, n] = 1.0
    for i in range(m):
        if basis[i] == n:
            T[-1, :] -= T[i, :]
    status = _simplex_iterate(T, basis, a_at, target=target)
    if status == FAILED:
        return FAILED, 0.0, None
    w = np.zeros(n)
    eps = 0.0
    for i in range(m):
        if 0 <= basis[i] < n:
            w[basis[i]] = T[i, -1]
        elif basis[i] == n:
            eps = float(T[i, -1])
    if status == TARGET_REACHED:
        return TARGET_REACHED, eps, w
    return OPTIMAL, eps, w


def check_feasible(lp: LinearProgram, point, tol: float = _FEAS_TOL * 10) -> bool:
    """Validate a point against every constraint and bound of the program."""
    for coeffs, rel, rhs in lp.rows:
        lhs = sum(a * x for a, x in zip(coeffs, point))
        if rel == "<=" and lhs > rhs + tol:
            return False
        if rel == ">=" and lhs < rhs - tol:
            return False
        if rel == "=" and abs(lhs - rhs) > tol:
            return False
    for x, (lo, hi) in zip(point, lp.bounds):
        if lo is not None and x < lo - tol:
            return False
        if hi is not None and x > hi + tol:
            return False
    return True


@dataclass(frozen=True)
class SimplexSearchConfig:
    """Hyperparameters of the derivative-free feasibility search."""

    max_evaluations: int = 500
    restarts: int = 10
    initial_step: float = 0.25
    tolerance: float = 1e-10
    penalty_weight: float = 1e4

    def __post_init__(self):
        if min(self.max_evaluations, self.restarts) < 1 or min(
            self.initial_step, self.tolerance, self.penalty_weight
        ) <= 0:
            raise ValidationError("search config fields must all be positive")


def _clip(x: np.ndarray, box) -> np.ndarray:
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    return np.minimum(np.maximum(x, lo), hi)


def nm_maximize(f, x0, box, cfg: SimplexSearchConfig, seed: int = 0):
    """Maximize f over a box via reflection-simplex search with restarts.

    Candidates are projected onto the box before every evaluation, so the
    returned point always lies inside it, and the start point's value is a
    floor for the result. Deterministic for fixed (x0, cfg, seed).
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    box = list(box)
    if len(box) != dim:
        raise ValidationError("box arity differs from start point")
    x0 = _clip(x0, box)

    best_x = x0.copy()
    best_val = f(x0)

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    for r in range(cfg.restarts):
        rng = random.Random(seed * 1_000_003 + r)
        if r == 0:
            start = x0.copy()
        else:
            noise = np.array([rng.uniform(-1.0, 1.0) for _ in range(dim)])
            start = _clip(x0 + cfg.initial_step * noise, box)
        evals = 0

        def ev(x):
            nonlocal evals, best_x, best_val
            xc = _clip(x, box)
            v = f(xc)
            evals += 1
            if v > best_val:
                best_val = v
                best_x = xc.copy()
            return v

        simplex = [start.copy()]
        for i in range(dim):
            v = start.copy()
            step = cfg.initial_step
            lo, hi = box[i]
            if v[i] + step > hi:
                step = -step
            v[i] += step
            simplex.append(_clip(v, box))
        values = [ev(v) for v in simplex]

        while evals < cfg.max_evaluations:
            order = sorted(range(dim + 1), key=lambda i: -values[i])
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]
            if values[0] - values[-1] < cfg.tolerance:
                break
            centroid = np.mean(simplex[:-1], axis=0)
            xr = centroid + alpha * (centroid - simplex[-1])
            fr = ev(xr)
            if fr > values[0]:
                xe = centroid + gamma * (centroid - simplex[-1])
                fe = ev(xe)
                if fe > fr:
                    simplex[-1], values[-1] = _clip(xe, box), fe
                else:
                    simplex[-1], values[-1] = _clip(xr, box), fr
            elif fr > values[-2]:
                simplex[-1], values[-1] = _clip(xr, box), fr
            else:
                xc = centroid + rho * (simplex[-1] - centroid)
                fc = ev(xc)
                if fc > values[-1]:
                    simplex[-1], values[-1] = _clip(xc, box), fc
                else:
                    for i in range(1, dim + 1):
                        simplex[i] = _clip(
                            simplex[0] + sigma * (simplex[i] - simplex[0]), box
                        )
                        values[i] = ev(simplex[i])
                        if evals >= cfg.max_evaluations:
                            break
    return best_x, float(best_val)
