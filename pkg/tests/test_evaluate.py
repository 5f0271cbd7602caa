import functools
import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from platebench import fixtures
from platebench.evaluate import (
    DISCOURAGE,
    AmountMatrix,
    DegenerateRange,
    StepAssignment,
    amount_matrix,
    assign,
    evaluate,
    levenshtein,
    match_chemicals,
    nrmse,
    spearman_of_matched,
    step_distance,
    step_metrics,
)
from platebench.steps import Action, NormalizedStep, Procedure, normalize_step, parse_step


# --- independent oracles -----------------------------------------------------


def levenshtein_oracle(a: str, b: str) -> int:
    """Recursive-with-memo edit distance, structured unlike the library's DP."""

    @functools.lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    return go(0, 0)


def brute_force_min_cost(matrix: np.ndarray) -> float:
    """Exhaustive-permutation minimum assignment cost (inf as big sentinel)."""
    solver = np.where(np.isinf(matrix), 1e9, matrix)
    rows, cols = solver.shape
    best = math.inf
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            best = min(best, sum(solver[i, perm[i]] for i in range(rows)))
    else:
        for perm in itertools.permutations(range(rows), cols):
            best = min(best, sum(solver[perm[j], j] for j in range(cols)))
    return best


class TestLevenshtein:
    def test_basics(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("methanol", "methanol") == 0
        assert levenshtein("kitten", "sitting") == 3

    def test_against_oracle_random(self):
        rng = random.Random(7)
        alphabet = "abcde "
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
            assert levenshtein(a, b) == levenshtein_oracle(a, b)

    @given(st.text(max_size=10), st.text(max_size=10))
    def test_metric_properties(self, a, b):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert (levenshtein(a, b) == 0) == (a == b)


class TestStepDistance:
    def test_action_mismatch_is_infinite(self):
        g = NormalizedStep(Action.ADD, "methanol", "Plate 1")
        t = NormalizedStep(Action.SET, "HeatingTemp", "Plate 1")
        assert step_distance(g, t) == math.inf

    def test_plate_mismatch_is_infinite(self):
        g = NormalizedStep(Action.ADD, "methanol", "Plate 1")
        t = NormalizedStep(Action.ADD, "methanol", "Plate 2")
        assert step_distance(g, t) == math.inf

    def test_canonicalization_absorbs_case_and_spacing(self):
        g = NormalizedStep(Action.ADD, "Methanol ", "Plate 1")
        t = NormalizedStep(Action.ADD, "methanol", "plate 1")
        assert step_distance(g, t) == 0

    def test_beyond_budget_is_discouraged(self):
        g = NormalizedStep(Action.ADD, "water", "Plate 1")
        t = NormalizedStep(Action.ADD, "acetonitrile", "Plate 1")
        assert levenshtein_oracle("water", "acetonitrile") > 5
        assert step_distance(g, t) == DISCOURAGE

    def test_within_budget_is_the_distance(self):
        g = NormalizedStep(Action.ADD, "aq ammonia", "Plate 1")
        t = NormalizedStep(Action.ADD, "aqueous ammonia", "Plate 1")
        assert step_distance(g, t) == 5.0


class TestAssignment:
    def test_identity_matrix(self):
        costs = np.full((4, 4), DISCOURAGE)
        np.fill_diagonal(costs, 0.0)
        result = assign(costs)
        assert result.pairs == tuple((i, i, 0.0) for i in range(4))

    def test_rectangular_cardinality(self):
        result = assign(np.zeros((2, 3)))
        assert result.matched == 2
        assert len(result.unmatched_gt) == 1

    def test_discouraged_pairs_are_demoted(self):
        costs = np.array([[0.0, DISCOURAGE], [DISCOURAGE, DISCOURAGE]])
        result = assign(costs)
        assert result.pairs == ((0, 0, 0.0),)
        assert result.unmatched_gen == (1,)
        assert result.unmatched_gt == (1,)

    def test_infinite_entries_never_match(self):
        costs = np.array([[math.inf, math.inf], [math.inf, math.inf]])
        result = assign(costs)
        assert result.pairs == ()

    def test_brute_force_oracle(self):
        rng = random.Random(41)
        for _ in range(120):
            rows = rng.randint(1, 7)
            cols = rng.randint(1, 7)
            matrix = np.empty((rows, cols))
            for i in range(rows):
                for j in range(cols):
                    roll = rng.random()
                    if roll < 0.15:
                        matrix[i, j] = math.inf
                    elif roll < 0.3:
                        matrix[i, j] = DISCOURAGE
                    else:
                        matrix[i, j] = rng.randint(0, 9)
            result = assign(matrix)
            assert result.total_cost == pytest.approx(brute_force_min_cost(matrix))

    def test_lexicographic_tie_break(self):
        # both diagonals cost 0; the pair list must start with (0, 0)
        costs = np.zeros((2, 2))
        assert assign(costs).pairs == ((0, 0, 0.0), (1, 1, 0.0))
        # row 0 can take column 1 at equal total; smallest column wins
        costs = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert assign(costs).pairs == ((0, 0, 1.0), (1, 1, 1.0))

    def test_lexicographic_against_enumeration(self):
        rng = random.Random(99)
        for _ in range(60):
            rows, cols = rng.randint(1, 5), rng.randint(1, 5)
            matrix = np.array(
                [[rng.choice([0, 0, 1, 2]) for _ in range(cols)] for _ in range(rows)],
                dtype=float,
            )
            expected_total = brute_force_min_cost(matrix)
            # lexicographically smallest optimal pair list by enumeration
            best_pairs = None
            if rows <= cols:
                for perm in itertools.permutations(range(cols), rows):
                    total = sum(matrix[i, perm[i]] for i in range(rows))
                    if total == expected_total:
                        pairs = tuple((i, perm[i]) for i in range(rows))
                        if best_pairs is None or pairs < best_pairs:
                            best_pairs = pairs
            else:
                for perm in itertools.permutations(range(rows), cols):
                    total = sum(matrix[perm[j], j] for j in range(cols))
                    if total == expected_total:
                        pairs = tuple(sorted((perm[j], j) for j in range(cols)))
                        if best_pairs is None or pairs < best_pairs:
                            best_pairs = pairs
            got = tuple((i, j) for i, j, _ in assign(matrix).pairs)
            assert got == best_pairs


class TestStepMetrics:
    def test_self_comparison(self, ground_truths):
        for proc in ground_truths.values():
            precision, recall, f1, _ = step_metrics(proc, proc)
            assert (precision, recall, f1) == (1.0, 1.0, 1.0)

    def test_deleting_two_steps_drops_recall(self, ground_truths):
        gt = ground_truths["exp1"]
        gen = Procedure(gt.steps[:4])
        precision, recall, f1, _ = step_metrics(gen, gt)
        assert precision == 1.0
        assert recall == pytest.approx(4 / 6)
        assert f1 == pytest.approx(0.8)

    def test_empty_generated(self, ground_truths):
        precision, recall, f1, _ = step_metrics(Procedure(()), ground_truths["exp1"])
        assert (precision, recall, f1) == (0.0, 0.0, 0.0)

    def test_exp3_figure_style_errors(self, ground_truths):
        """Extra ammonia addition, dropped stir pair and second heating step."""
        gt = ground_truths["exp3"]
        keep = []
        for step in gt.steps:
            label = normalize_step(step)
            if label.parameter == "StirRate":
                continue
            keep.append(step)
        # drop the heating step that returns the plate to 25 C (the second one)
        heat_indices = [
            i for i, s in enumerate(keep) if normalize_step(s).parameter == "HeatingTemp"
        ]
        del keep[heat_indices[1]]
        extra = parse_step("Add aqueous ammonia (uL) to vials in Plate 1. {A1: 10}")
        gen = Procedure(tuple(keep) + (extra,))
        report = evaluate(gen, gt)
        assert report.true_positives == 14
        assert report.false_positives == 1
        assert report.false_negatives == 3
        assert report.precision == pytest.approx(14 / 15)
        assert report.recall == pytest.approx(14 / 17)


class TestSpearman:
    def _assignment(self, gen_positions, gt_positions):
        pairs = tuple(
            (g, t, 0.0) for g, t in zip(gen_positions, gt_positions)
        )
        return StepAssignment(pairs, (), ())

    def test_identical_order(self):
        assert spearman_of_matched(self._assignment([0, 1, 2], [0, 1, 2])) == pytest.approx(1.0)

    def test_reversed_order(self):
        assert spearman_of_matched(self._assignment([0, 1, 2], [2, 1, 0])) == pytest.approx(-1.0)

    def test_hand_computed_rho(self):
        # gen order (1,3,2,4) against (1,2,3,4): rho = 1 - 6*2/(4*15) = 0.8
        value = spearman_of_matched(self._assignment([1, 3, 2, 4], [1, 2, 3, 4]))
        assert value == pytest.approx(0.8)

    def test_undefined_below_two_pairs(self):
        assert spearman_of_matched(self._assignment([0], [0])) is None
        assert spearman_of_matched(StepAssignment((), (), ())) is None


class TestChemicalMatching:
    def test_case_insensitive_identity(self):
        assert match_chemicals(["Methanol"], ["methanol"]) == {"methanol": "methanol"}

    def test_close_names_map(self):
        mapping = match_chemicals(["aq ammonia"], ["aqueous ammonia"])
        assert mapping == {"aq ammonia": "aqueous ammonia"}

    def test_distant_names_stay_unmatched(self):
        assert match_chemicals(["water"], ["glycerol"]) == {}


class TestAmountMatrix:
    def test_exp1_matches_reference_table(self, ground_truths):
        matrix = amount_matrix(ground_truths["exp1"])
        assert matrix.get("naphthalene", "Plate 1:A1") == 5
        assert matrix.get("methanol", "Plate 1:B4") == pytest.approx(9956.14)
        assert len(matrix.chemicals) == 2 and len(matrix.vials) == 8

    def test_empty_procedure(self):
        matrix = amount_matrix(Procedure(()))
        assert matrix.chemicals == () and matrix.vials == ()

    def test_additivity(self):
        first = parse_step("Add methanol (uL) to vials in Plate 1. {A1: 100}")
        second = parse_step("Add Methanol (uL) to vials in Plate 1. {A1: 50}")
        matrix = amount_matrix(Procedure((first, second)))
        assert matrix.get("methanol", "Plate 1:A1") == 150

    def test_transfers_do_not_contribute(self, ground_truths):
        gt = ground_truths["exp5"]
        matrix = amount_matrix(gt)
        assert all(v.startswith("Plate 1:") for v in matrix.vials)


def nrmse_literal(gen_values, gt_values, chems, vials):
    """Direct transcription of the normalized-RMSE definition."""
    n = len(chems) * len(vials)
    squared = 0.0
    for c in chems:
        for v in vials:
            squared += (gen_values.get((c, v), 0.0) - gt_values.get((c, v), 0.0)) ** 2
    gt_grid = [gt_values.get((c, v), 0.0) for c in chems for v in vials]
    spread = max(gt_grid) - min(gt_grid)
    return math.sqrt(squared / n) / spread


def _random_matrix_pair(rng):
    chems = [f"chem{i}" for i in range(rng.randint(1, 5))]
    vials = [f"Plate 1:A{i}" for i in range(1, rng.randint(2, 7))]
    gt_vals, gen_vals = {}, {}
    for c in chems:
        for v in vials:
            if rng.random() < 0.8:
                gt_vals[(c, v)] = round(rng.uniform(0, 500), 2)
            if rng.random() < 0.8:
                gen_vals[(c, v)] = round(rng.uniform(0, 500), 2)
    gt = AmountMatrix(tuple(chems), tuple(vials), gt_vals)
    gen = AmountMatrix(tuple(chems), tuple(vials), gen_vals)
    return gen, gt, chems, vials, gen_vals, gt_vals


class TestNrmse:
    def test_identity_is_zero(self, ground_truths):
        for proc in ground_truths.values():
            matrix = amount_matrix(proc)
            assert nrmse(matrix, matrix) == 0.0

    def test_hand_computed_example(self):
        gt = AmountMatrix(("c",), ("v1", "v2"), {("c", "v1"): 0.0, ("c", "v2"): 10.0})
        gen = AmountMatrix(("c",), ("v1", "v2"), {("c", "v1"): 0.0, ("c", "v2"): 12.0})
        assert nrmse(gen, gt) == pytest.approx(math.sqrt(4 / 2) / 10)

    def test_oracle_and_scale_invariance(self):
        rng = random.Random(11)
        for _ in range(100):
            gen, gt, chems, vials, gen_vals, gt_vals = _random_matrix_pair(rng)
            try:
                value = nrmse(gen, gt)
            except DegenerateRange:
                grid = [gt_vals.get((c, v), 0.0) for c in chems for v in vials]
                assert max(grid) == min(grid)
                continue
            assert value == pytest.approx(
                nrmse_literal(gen_vals, gt_vals, chems, vials), rel=1e-10
            )
            for scale in (0.1, 3, 1000):
                scaled_gen = AmountMatrix(
                    gen.chemicals, gen.vials, {k: scale * v for k, v in gen.values.items()}
                )
                scaled_gt = AmountMatrix(
                    gt.chemicals, gt.vials, {k: scale * v for k, v in gt.values.items()}
                )
                assert nrmse(scaled_gen, scaled_gt) == pytest.approx(value, abs=1e-12, rel=1e-12)

    def test_degenerate_range_is_loud(self):
        flat = AmountMatrix(("c",), ("v",), {("c", "v"): 3.0})
        with pytest.raises(DegenerateRange):
            nrmse(flat, flat)

    def test_missing_chemical_counts_as_zero(self):
        gt = AmountMatrix(("a", "b"), ("v",), {("a", "v"): 10.0, ("b", "v"): 4.0})
        gen = AmountMatrix(("a",), ("v",), {("a", "v"): 10.0})
        # generated lacks chemical b entirely: the error is b's full amount
        assert nrmse(gen, gt) == pytest.approx(math.sqrt(16 / 2) / 6)


class TestEvaluate:
    def test_self_identity_all_experiments(self, ground_truths):
        for proc in ground_truths.values():
            report = evaluate(proc, proc)
            assert report.precision == report.recall == report.f1 == 1.0
            assert report.spearman == pytest.approx(1.0)
            assert report.nrmse == 0.0

    def test_alternative_ordering_keeps_f1_lowers_spearman(self, ground_truths):
        alt = fixtures.load_ground_truth("exp3", alt_order=True)
        report = evaluate(alt, ground_truths["exp3"])
        assert report.f1 == pytest.approx(1.0)
        assert report.spearman is not None and report.spearman < 1.0
        assert report.nrmse == pytest.approx(0.0, abs=1e-12)
        self_report = evaluate(alt, alt)
        assert self_report.spearman == pytest.approx(1.0)

    def test_report_serializes(self, ground_truths):
        report = evaluate(ground_truths["exp1"], ground_truths["exp1"])
        data = report.to_dict()
        assert data["f1"] == 1.0
        assert len(data["matched"]) == 6
        assert data["unmatched_generated"] == []

    def test_determinism(self, ground_truths):
        gt = ground_truths["exp4"]
        first = evaluate(gt, gt)
        second = evaluate(gt, gt)
        assert first.to_dict() == second.to_dict()

    def test_unusual_plate_ids_are_noted_not_fatal(self):
        odd = Procedure((parse_step("Add water (uL) to vials in Plate 7. {A1: 1}"),))
        report = evaluate(odd, odd)
        assert report.f1 == 1.0
        assert any("Plate 7" in note for note in report.notes)


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6), st.randoms())
def test_assignment_cardinality_property(rows, cols, rng):
    matrix = np.array([[rng.randint(0, 12) for _ in range(cols)] for _ in range(rows)], dtype=float)
    result = assign(matrix)
    assert result.matched <= min(rows, cols)
    assert all(cost < DISCOURAGE for _, _, cost in result.pairs)
    gen_indices = [i for i, _, _ in result.pairs]
    gt_indices = [j for _, j, _ in result.pairs]
    assert len(set(gen_indices)) == len(gen_indices)
    assert len(set(gt_indices)) == len(gt_indices)
