import itertools

import pytest

from prefloc.dm import (
    SimulatedDm,
    all_family_labels,
    best_subset,
    parse_family,
)
from prefloc.errors import ValidationError
from prefloc.instance import ObjectiveBounds, Solution, distances, generate_instance
from prefloc.objectives import ObjectiveVector, evaluate

# Bounds engineered so nf_k equals the raw value for minimized objectives
# (span 1 from 0) and deviations are easy to read off.
UNIT = ObjectiveBounds((0.0,) * 5, (1.0,) * 5, "provided")


def vector_with_deviations(devs):
    """Build (ov, bounds) whose per-objective deviations equal devs."""
    fmin = (1.0, 1.0, 0.0, 0.0, 1.0)
    fmax = (10.0, 10.0, 1.0, 1.0, 10.0)
    raw = []
    for k, d in enumerate(devs):
        if k in (0, 1, 4):  # minimized: f = f*(1 + d)
            raw.append(1.0 * (1.0 + d))
        else:  # maximized: f = f*(1 - d)
            raw.append(1.0 * (1.0 - d))
    return ObjectiveVector(*raw), ObjectiveBounds(fmin, fmax, "provided")


def vector_with_normalized(nf):
    """Build ov whose normalized cost vector equals nf under UNIT bounds."""
    raw = []
    for k, v in enumerate(nf):
        raw.append(v if k in (0, 1, 4) else 1.0 - v)
    return ObjectiveVector(*raw)


class TestValue:
    def test_max_deviation_family(self):
        ov, bounds = vector_with_deviations((0.1, 0.4, 0.2, 0.0, 0.3))
        dm = SimulatedDm("U_D", bounds)
        assert dm.value(ov) == pytest.approx(0.4)

    def test_max_deviation_restricted(self):
        ov, bounds = vector_with_deviations((0.9, 0.1, 0.2, 0.0, 0.3))
        dm = SimulatedDm("U_D_v", bounds, v=(2, 3, 4, 5))
        assert dm.value(ov) == pytest.approx(0.3)  # criterion 1 excluded

    def test_weighted_family_ideal_and_anti_ideal(self):
        dm = SimulatedDm("U_N", UNIT)
        assert dm.value(vector_with_normalized((0.0,) * 5)) == pytest.approx(0.0)
        assert dm.value(vector_with_normalized((1.0,) * 5)) == pytest.approx(1.0)

    def test_weighted_family_weights(self):
        dm = SimulatedDm("U_N", UNIT)
        for k, w in enumerate((0.1, 0.15, 0.2, 0.25, 0.3)):
            nf = [0.0] * 5
            nf[k] = 1.0
            assert dm.value(vector_with_normalized(nf)) == pytest.approx(w)

    def test_restricted_weights_attach_in_index_order(self):
        dm = SimulatedDm("U_N_v", UNIT, v=(1, 3, 4, 5))
        nf = [1.0, 0.7, 0.0, 0.0, 0.0]  # the excluded criterion gets no weight
        assert dm.value(vector_with_normalized(nf)) == pytest.approx(0.1)
        nf = [0.0, 0.0, 1.0, 0.0, 0.0]
        assert dm.value(vector_with_normalized(nf)) == pytest.approx(0.2)
        nf = [0.0, 0.0, 0.0, 0.0, 1.0]
        assert dm.value(vector_with_normalized(nf)) == pytest.approx(0.4)

    def test_linearity_in_scale(self):
        dm = SimulatedDm("U_N", UNIT)
        nf = (0.2, 0.4, 0.6, 0.8, 1.0)
        base = dm.value(vector_with_normalized(nf))
        for lam in (0.25, 0.5, 0.75):
            scaled = tuple(lam * v for v in nf)
            assert dm.value(vector_with_normalized(scaled)) == pytest.approx(lam * base)

    def test_twelve_families(self):
        labels = all_family_labels()
        assert len(labels) == 12
        for label in labels:
            dm = parse_family(label, UNIT)
            assert dm.label == label

    def test_all_families_nonnegative_and_zero_only_at_ideal(self):
        import random

        rng = random.Random(5)
        bounds = ObjectiveBounds((1.0,) * 5, (9.0,) * 5, "provided")
        ideal = ObjectiveVector(1.0, 1.0, 9.0, 9.0, 1.0)
        for label in all_family_labels():
            dm = parse_family(label, bounds)
            assert dm.value(ideal) == 0.0
            for _ in range(40):
                raw = [rng.uniform(1.0, 9.0) for _ in range(5)]
                ov = ObjectiveVector(*raw)
                v = dm.value(ov)
                assert v >= 0.0
                if v == 0.0:
                    # zero only when every covered objective sits at its optimum
                    dev = [(raw[0] - 1) / 1, (raw[1] - 1) / 1, (9 - raw[2]) / 9,
                           (9 - raw[3]) / 9, (raw[4] - 1) / 1]
                    covered = dm.v or (1, 2, 3, 4, 5)
                    assert all(abs(dev[k - 1]) < 1e-12 for k in covered)

    def test_invalid_subset_rejected(self):
        with pytest.raises(ValidationError):
            SimulatedDm("U_N_v", UNIT, v=(1, 2, 3))
        with pytest.raises(ValidationError):
            SimulatedDm("U_N_v", UNIT, v=(1, 2, 3, 3))
        with pytest.raises(ValidationError):
            parse_family("U_X_1234", UNIT)


class TestCompare:
    def test_left_when_lower_value(self):
        dm = SimulatedDm("U_N", UNIT)
        low = vector_with_normalized((0.1,) * 5)
        high = vector_with_normalized((0.9,) * 5)
        assert dm.compare(low, high).verdict == "left"
        assert dm.compare(high, low).verdict == "right"

    def test_equal_values_indifferent(self):
        dm = SimulatedDm("U_N", UNIT)
        v = vector_with_normalized((0.5,) * 5)
        assert dm.compare(v, v).verdict == "indifferent"

    def test_tolerance_band(self):
        dm = SimulatedDm("U_N", UNIT, tolerance=1e-9)
        a = vector_with_normalized((0.5, 0.0, 0.0, 0.0, 0.0))
        b = vector_with_normalized((0.5 + 5e-9, 0.0, 0.0, 0.0, 0.0))
        # value difference = 0.1 * 5e-9 = tol / 2
        assert dm.compare(a, b).verdict == "indifferent"


class TestBestSubset:
    def test_exhaustive_matches_value_oracle(self, tiny_instance):
        bounds = ObjectiveBounds((0.0,) * 5, (3.0,) * 5, "provided")
        dm = SimulatedDm("U_N", bounds)
        d = distances(tiny_instance)
        values = {
            sol.sites: dm.value(evaluate(tiny_instance, d, sol))
            for sol in (Solution((1,)), Solution((2,)))
        }
        want = min(values, key=values.get)
        assert best_subset(dm, tiny_instance, 1).sites == want

    def test_dominant_subset_chosen_by_every_family(self, desk_instance, desk_bounds):
        # Find a subset weakly dominating some other; every family must
        # rank the global best consistently with its own value function.
        d = distances(desk_instance)
        for label in all_family_labels():
            dm = parse_family(label, desk_bounds)
            pb = best_subset(dm, desk_instance, 3)
            vals = []
            for combo in itertools.combinations(range(1, 21), 3):
                vals.append(dm.value(evaluate(desk_instance, d, Solution(combo))))
            assert dm.value(evaluate(desk_instance, d, pb)) == pytest.approx(min(vals))

    def test_exhaustive_vs_evolutionary_agreement(self, desk_instance, desk_bounds):
        dm = SimulatedDm("U_N", desk_bounds)
        exact = best_subset(dm, desk_instance, 3, "exhaustive")
        hits = 0
        seeds = 50
        for seed in range(seeds):
            approx = best_subset(dm, desk_instance, 3, "evolutionary", seed=seed)
            hits += approx == exact
        assert hits >= 48

    def test_enumeration_cap(self):
        inst = generate_instance(5, 141, seed=1)
        dm = SimulatedDm("U_N", UNIT)
        from prefloc.errors import EnumerationCapError

        with pytest.raises(EnumerationCapError):
            best_subset(dm, inst, 4)
