import itertools
import random

import numpy as np
import pytest

from prefloc.numerics import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    SimplexSearchConfig,
    check_feasible,
    lp_solve,
    margin_lp,
    nm_maximize,
)


def vertex_oracle(lp):
    """Enumerate basic solutions of all tight-constraint subsets.

    Only valid for programs whose feasible region is bounded (all variables
    boxed), where nonempty implies a vertex exists.
    """
    n = len(lp.objective)
    rows = [(np.array(c, float), rel, float(b)) for c, rel, b in lp.rows]
    for j, (lo, hi) in enumerate(lp.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if lo is not None:
            rows.append((e.copy(), ">=", lo))
        if hi is not None:
            rows.append((e.copy(), "<=", hi))

    def feasible(x):
        for a, rel, b in rows:
            v = float(a @ x)
            if rel == "<=" and v > b + 1e-8:
                return False
            if rel == ">=" and v < b - 1e-8:
                return False
            if rel == "=" and abs(v - b) > 1e-8:
                return False
        return True

    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        A = np.array([rows[i][0] for i in combo])
        b = np.array([rows[i][2] for i in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        if feasible(x):
            val = float(np.dot(lp.objective, x))
            if best is None or val > best:
                best = val
    if best is None:
        return INFEASIBLE, None
    return OPTIMAL, best


def random_boxed_lp(rng):
    n = rng.randint(2, 4)
    m = rng.randint(1, 6)
    rows = []
    for _ in range(m):
        coeffs = tuple(float(rng.randint(-3, 3)) for _ in range(n))
        rel = rng.choice(["<=", ">=", "="])
        rhs = float(rng.randint(-2, 6))
        rows.append((coeffs, rel, rhs))
    objective = tuple(float(rng.randint(-3, 3)) for _ in range(n))
    bounds = tuple((0.0, 5.0) for _ in range(n))
    return LinearProgram(objective, tuple(rows), bounds)


class TestLpSolve:
    def test_boundary_of_simplex(self):
        lp = LinearProgram(
            objective=(0.0, 0.0, 1.0),
            rows=(((1.0, -1.0, -1.0), ">=", 0.0), ((1.0, 1.0, 0.0), "=", 1.0)),
            bounds=((0.0, None), (0.0, None), (0.0, 1.0)),
        )
        out = lp_solve(lp)
        assert out.status == OPTIMAL
        assert out.value == pytest.approx(1.0)
        assert out.point[0] == pytest.approx(1.0)
        assert out.point[1] == pytest.approx(0.0)

    def test_contradiction_infeasible(self):
        lp = LinearProgram((1.0,), (((1.0,), "<=", -1.0),), ((0.0, None),))
        assert lp_solve(lp).status == INFEASIBLE

    def test_unbounded(self):
        lp = LinearProgram((1.0,), (), ((0.0, None),))
        assert lp_solve(lp).status == UNBOUNDED

    def test_free_variable(self):
        lp = LinearProgram((-1.0,), (((1.0,), ">=", -5.0),), ((None, None),))
        out = lp_solve(lp)
        assert out.status == OPTIMAL
        assert out.value == pytest.approx(5.0)

    def test_agrees_with_vertex_enumeration(self):
        rng = random.Random(20240)
        optimal = infeasible = 0
        for _ in range(200):
            lp = random_boxed_lp(rng)
            got = lp_solve(lp)
            want_status, want_value = vertex_oracle(lp)
            assert got.status == want_status
            if want_status == OPTIMAL:
                optimal += 1
                assert got.value == pytest.approx(want_value, abs=1e-8)
                assert check_feasible(lp, got.point)
            else:
                infeasible += 1
        # the random suite must exercise both outcomes to mean anything
        assert optimal >= 40 and infeasible >= 40

    def test_deterministic(self):
        rng = random.Random(7)
        lp = random_boxed_lp(rng)
        assert lp_solve(lp) == lp_solve(lp)


class TestMarginLp:
    def test_matches_general_solver(self):
        rng = random.Random(99)
        for _ in range(100):
            n = rng.randint(2, 4)
            strict = np.array(
                [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(rng.randint(0, 3))]
            )
            equal = np.array(
                [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(rng.randint(0, 1))]
            )
            gaps = np.array(
                [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(rng.randint(0, 3))]
            )
            status, eps, w = margin_lp(strict, equal, gaps, n)
            rows = []
            for block in (strict, gaps):
                for r in block:
                    rows.append((tuple(r) + (-1.0,), ">=", 0.0))
            for r in equal:
                rows.append((tuple(r) + (0.0,), "=", 0.0))
            rows.append(((1.0,) * n + (0.0,), "=", 1.0))
            lp = LinearProgram(
                (0.0,) * n + (1.0,),
                tuple(rows),
                tuple([(0.0, None)] * n + [(0.0, 1.0)]),
            )
            want = lp_solve(lp)
            if want.status == OPTIMAL:
                assert status == OPTIMAL
                assert eps == pytest.approx(want.value, abs=1e-8)
                assert w is not None and abs(sum(w) - 1.0) < 1e-8
            else:
                assert status == want.status

    def test_target_short_circuit_is_consistent(self):
        rng = random.Random(5)
        for _ in range(50):
            n = 3
            strict = np.array([[rng.uniform(-0.5, 1) for _ in range(n)] for _ in range(2)])
            full_status, full_eps, _ = margin_lp(strict, None, None, n)
            status, eps, w = margin_lp(strict, None, None, n, target=1e-6)
            passed = status in (OPTIMAL, "target_reached") and eps > 1e-6
            want = full_status == OPTIMAL and full_eps > 1e-6
            assert passed == want
            if passed:
                assert np.all(strict @ np.array(w) >= eps - 1e-9)


class TestNmMaximize:
    def test_quadratic_1d(self):
        cfg = SimplexSearchConfig(max_evaluations=300, restarts=3)
        x, val = nm_maximize(lambda v: -((v[0] - 0.3) ** 2), [0.0], [(0.0, 1.0)], cfg)
        assert abs(x[0] - 0.3) < 1e-4

    def test_constant_function(self):
        cfg = SimplexSearchConfig(max_evaluations=100, restarts=2)
        x, val = nm_maximize(lambda v: 4.25, [0.5], [(0.0, 1.0)], cfg)
        assert val == 4.25

    def test_quadratic_2d_matches_grid_oracle(self):
        # Grid oracle: exhaustive search on [-1, 1]^2 with step 1e-3.
        grid = np.arange(-1.0, 1.0 + 1e-3, 1e-3)
        best_grid = -min(g * g for g in grid) * 2.0
        cfg = SimplexSearchConfig(max_evaluations=500, restarts=5)
        _, val = nm_maximize(
            lambda v: -(v[0] ** 2 + v[1] ** 2), [1.0, 1.0],
            [(-1.0, 1.0), (-1.0, 1.0)], cfg,
        )
        assert val >= best_grid - 1e-6
        assert abs(val) < 1e-6

    def test_never_leaves_box(self):
        seen = []
        cfg = SimplexSearchConfig(max_evaluations=200, restarts=4, initial_step=0.9)
        def f(v):
            seen.append(tuple(v))
            return v[0] + v[1]
        x, _ = nm_maximize(f, [0.5, 0.5], [(0.0, 1.0), (0.0, 1.0)], cfg, seed=3)
        for pt in seen:
            assert all(-1e-12 <= c <= 1.0 + 1e-12 for c in pt)
        assert all(0.0 <= c <= 1.0 for c in x)

    def test_deterministic(self):
        cfg = SimplexSearchConfig(max_evaluations=250, restarts=4)
        f = lambda v: -abs(v[0] - 0.2) - abs(v[1] + 0.4)
        a = nm_maximize(f, [0.9, 0.9], [(-1.0, 1.0)] * 2, cfg, seed=11)
        b = nm_maximize(f, [0.9, 0.9], [(-1.0, 1.0)] * 2, cfg, seed=11)
        assert a[1] == b[1] and np.allclose(a[0], b[0])

    def test_start_value_is_floor(self):
        cfg = SimplexSearchConfig(max_evaluations=60, restarts=1)
        x0 = [0.7]
        _, val = nm_maximize(lambda v: -((v[0] - 0.7) ** 2), x0, [(0.0, 1.0)], cfg)
        assert val >= -1e-30
