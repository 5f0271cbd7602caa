"""Quantitative comparison of a generated procedure against ground truth.

Matching pipeline: steps are projected to ``Action | Parameter | Plate``
triples, pairwise distances are Levenshtein on the parameter (infinite on
action/plate mismatch, 1e6 beyond an edit budget of 5), and a minimum-cost
assignment pairs the two sides. Precision/recall/F1 count matched steps,
Spearman rank correlation scores the ordering of matched steps, and nRMSE
scores per-chemical per-vial amounts normalized by the ground-truth range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import spearmanr

from .steps import Action, AddStep, NormalizedStep, Procedure, normalize_step

# Distance thresholds. A parameter edit distance above MAX_EDIT_DISTANCE is
# punished with DISCOURAGE rather than infinity so the assignment stays
# solvable; such pairs are demoted to unmatched afterwards.
MAX_EDIT_DISTANCE = 5
DISCOURAGE = 1e6
_SOLVER_SENTINEL = 1e9


class DegenerateRange(ValueError):
    """Ground-truth amounts have zero range; nRMSE is undefined, not 0."""


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit-cost insert/delete/substitute."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        row = [i]
        for j, cb in enumerate(b, start=1):
            row.append(min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = row
    return prev[-1]


def canonical_text(text: str) -> str:
    """Case-fold, trim and collapse whitespace before distance computation."""
    return " ".join(text.split()).casefold()


def step_distance(gen: NormalizedStep, gt: NormalizedStep) -> float:
    """Custom step distance: inf on action/plate mismatch, else Levenshtein."""
    if gen.action is not gt.action or gen.action is Action.UNKNOWN:
        return math.inf
    if canonical_text(gen.plate) != canonical_text(gt.plate):
        return math.inf
    d = levenshtein(canonical_text(gen.parameter), canonical_text(gt.parameter))
    return float(d) if d <= MAX_EDIT_DISTANCE else DISCOURAGE


@dataclass(frozen=True)
class StepAssignment:
    """A partial bijection between generated and ground-truth indices.

    ``total_cost`` is the optimal assignment total before demotion, with
    infinite entries counted at the solver sentinel; it exists so optimality
    can be audited against an exhaustive search.
    """

    pairs: tuple[tuple[int, int, float], ...]  # (gen_index, gt_index, cost)
    unmatched_gen: tuple[int, ...]
    unmatched_gt: tuple[int, ...]
    total_cost: float = 0.0

    @property
    def matched(self) -> int:
        return len(self.pairs)


def _lsap_total(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(matrix)
    return float(matrix[rows, cols].sum())


def assign(costs: np.ndarray) -> StepAssignment:
    """Minimum-total-cost assignment over a rectangular cost matrix.

    Infinite entries are replaced by a dominating sentinel for the solver.
    Among equally optimal assignments the lexicographically smallest pair
    list (ordered by generated index, then ground-truth index) is returned,
    so downstream order statistics are deterministic. Pairs whose true cost
    reaches the discourage threshold are demoted to unmatched.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2:
        raise ValueError("cost matrix must be two-dimensional")
    n_gen, n_gt = costs.shape
    if n_gen == 0 or n_gt == 0:
        return StepAssignment((), tuple(range(n_gen)), tuple(range(n_gt)))

    solver = np.where(np.isinf(costs), _SOLVER_SENTINEL, costs)
    target = _lsap_total(solver)
    cardinality = min(n_gen, n_gt)
    tol = 1e-9 * (1.0 + abs(target))

    chosen: list[tuple[int, int]] = []
    free_cols = list(range(n_gt))
    fixed = 0.0
    for i in range(n_gen):
        rows_after = np.arange(i + 1, n_gen)
        matched_here = None
        for j in free_cols:
            cols_after = [c for c in free_cols if c != j]
            rest = _lsap_total(solver[np.ix_(rows_after, cols_after)])
            total_pairs = len(chosen) + 1 + min(len(rows_after), len(cols_after))
            if total_pairs == cardinality and abs(fixed + solver[i, j] + rest - target) <= tol:
                matched_here = j
                break
        if matched_here is None:
            continue  # row stays unmatched (only possible when n_gen > n_gt)
        chosen.append((i, matched_here))
        free_cols.remove(matched_here)
        fixed += solver[i, matched_here]

    pairs = []
    unmatched_gen = set(range(n_gen)) - {i for i, _ in chosen}
    unmatched_gt = set(range(n_gt)) - {j for _, j in chosen}
    for i, j in chosen:
        cost = costs[i, j]
        if math.isinf(cost) or cost >= DISCOURAGE:
            unmatched_gen.add(i)
            unmatched_gt.add(j)
        else:
            pairs.append((i, j, float(cost)))
    return StepAssignment(
        tuple(pairs),
        tuple(sorted(unmatched_gen)),
        tuple(sorted(unmatched_gt)),
        total_cost=fixed,
    )


def step_cost_matrix(
    gen: Sequence[NormalizedStep], gt: Sequence[NormalizedStep]
) -> np.ndarray:
    matrix = np.empty((len(gen), len(gt)))
    for i, g in enumerate(gen):
        for j, t in enumerate(gt):
            matrix[i, j] = step_distance(g, t)
    return matrix


def step_metrics(
    gen: Procedure, gt: Procedure
) -> tuple[float, float, float, StepAssignment]:
    """Precision, recall, F1 and the underlying step assignment."""
    gen_norm = [normalize_step(s) for s in gen.steps]
    gt_norm = [normalize_step(s) for s in gt.steps]
    assignment = assign(step_cost_matrix(gen_norm, gt_norm))
    precision = assignment.matched / len(gen_norm) if gen_norm else 0.0
    recall = assignment.matched / len(gt_norm) if gt_norm else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1, assignment


def spearman_of_matched(assignment: StepAssignment) -> float | None:
    """Rank correlation of matched step positions; None when undefined."""
    if assignment.matched < 2:
        return None
    gen_pos = [i for i, _, _ in assignment.pairs]
    gt_pos = [j for _, j, _ in assignment.pairs]
    if len(set(gen_pos)) < 2 or len(set(gt_pos)) < 2:
        return None
    rho = spearmanr(gen_pos, gt_pos).correlation
    return float(rho)


def match_chemicals(
    gen_names: Sequence[str], gt_names: Sequence[str]
) -> dict[str, str]:
    """Optimal fuzzy pairing of chemical names; unmatched names stay distinct.

    Returns a map from canonical generated names to canonical ground-truth
    names for every pair within the edit budget.
    """
    gen_unique = list(dict.fromkeys(canonical_text(n) for n in gen_names))
    gt_unique = list(dict.fromkeys(canonical_text(n) for n in gt_names))
    matrix = np.empty((len(gen_unique), len(gt_unique)))
    for i, g in enumerate(gen_unique):
        for j, t in enumerate(gt_unique):
            d = levenshtein(g, t)
            matrix[i, j] = float(d) if d <= MAX_EDIT_DISTANCE else DISCOURAGE
    assignment = assign(matrix)
    return {gen_unique[i]: gt_unique[j] for i, j, _ in assignment.pairs}


@dataclass(frozen=True)
class AmountMatrix:
    """Per-chemical, per-vial totals summed over all addition steps.

    Vial ids are plate-qualified ("Plate 1:A1"); combinations that never
    received an addition are zeros.
    """

    chemicals: tuple[str, ...]
    vials: tuple[str, ...]
    values: dict[tuple[str, str], float]

    def get(self, chemical: str, vial: str) -> float:
        return self.values.get((chemical, vial), 0.0)


def amount_matrix(p: Procedure, mapping: Mapping[str, str] | None = None) -> AmountMatrix:
    """Sum addition amounts per (chemical, plate-qualified vial).

    ``mapping`` renames generated chemicals onto their matched ground-truth
    names so both matrices share one chemical axis. Transfers contribute
    nothing: only additions define vial contents here.
    """
    mapping = mapping or {}
    chemicals: dict[str, None] = {}
    vials: dict[str, None] = {}
    values: dict[tuple[str, str], float] = {}
    for step in p.steps:
        if not isinstance(step, AddStep):
            continue
        chem = canonical_text(step.chemical)
        chem = mapping.get(chem, chem)
        chemicals.setdefault(chem)
        for vial, value in step.vials.items():
            vial_id = f"{step.plate}:{vial}"
            vials.setdefault(vial_id)
            key = (chem, vial_id)
            values[key] = values.get(key, 0.0) + value
    return AmountMatrix(tuple(chemicals), tuple(vials), values)


def _aligned_axes(gen: AmountMatrix, gt: AmountMatrix) -> tuple[list[str], list[str]]:
    chems = list(dict.fromkeys((*gt.chemicals, *gen.chemicals)))
    vials = list(dict.fromkeys((*gt.vials, *gen.vials)))
    return chems, vials


def nrmse(gen: AmountMatrix, gt: AmountMatrix) -> float:
    """Root-mean-square amount error over the full chemical-vial grid,
    divided by the range of the ground-truth amounts."""
    chems, vials = _aligned_axes(gen, gt)
    if not chems or not vials:
        raise DegenerateRange("no chemical-vial observations")
    gt_values = [gt.get(c, v) for c in chems for v in vials]
    spread = max(gt_values) - min(gt_values)
    if spread == 0:
        raise DegenerateRange("ground-truth amounts have zero range")
    squares = [
        (gen.get(c, v) - gt.get(c, v)) ** 2 for c in chems for v in vials
    ]
    return math.sqrt(sum(squares) / len(squares)) / spread


@dataclass(frozen=True)
class MetricsReport:
    """Full comparison of a generated procedure against ground truth."""

    precision: float
    recall: float
    f1: float
    spearman: float | None
    nrmse: float | None
    assignment: StepAssignment
    name_mapping: dict[str, str]
    gen_steps: tuple[NormalizedStep, ...] = ()
    gt_steps: tuple[NormalizedStep, ...] = ()
    gen_amounts: AmountMatrix | None = None
    gt_amounts: AmountMatrix | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def true_positives(self) -> int:
        return self.assignment.matched

    @property
    def false_positives(self) -> int:
        return len(self.assignment.unmatched_gen)

    @property
    def false_negatives(self) -> int:
        return len(self.assignment.unmatched_gt)

    def to_dict(self) -> dict:
        def norm(s: NormalizedStep) -> str:
            return f"{s.action.value} | {s.parameter} | {s.plate}"

        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "spearman": self.spearman,
            "nrmse": self.nrmse,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "matched": [
                {
                    "generated_index": i,
                    "ground_truth_index": j,
                    "cost": cost,
                    "generated": norm(self.gen_steps[i]) if self.gen_steps else None,
                    "ground_truth": norm(self.gt_steps[j]) if self.gt_steps else None,
                }
                for i, j, cost in self.assignment.pairs
            ],
            "unmatched_generated": [
                {"index": i, "step": norm(self.gen_steps[i]) if self.gen_steps else None}
                for i in self.assignment.unmatched_gen
            ],
            "unmatched_ground_truth": [
                {"index": j, "step": norm(self.gt_steps[j]) if self.gt_steps else None}
                for j in self.assignment.unmatched_gt
            ],
            "name_mapping": dict(self.name_mapping),
            "notes": list(self.notes),
        }


def _plate_note(steps) -> list[str]:
    odd = sorted(
        {
            s.plate
            for s in steps
            if s.plate not in ("Plate 1", "Plate 2")
        }
    )
    return [f"plate id {p!r} is outside the usual Plate 1/Plate 2 pair" for p in odd]


def evaluate(gen: Procedure, gt: Procedure) -> MetricsReport:
    """Run the full metric pipeline and assemble the report."""
    precision, recall, f1, assignment = step_metrics(gen, gt)
    rho = spearman_of_matched(assignment)

    gen_add_names = [s.chemical for s in gen.steps if isinstance(s, AddStep)]
    gt_add_names = [s.chemical for s in gt.steps if isinstance(s, AddStep)]
    mapping = match_chemicals(gen_add_names, gt_add_names)

    gen_amounts = amount_matrix(gen, mapping)
    gt_amounts = amount_matrix(gt)
    notes = []
    try:
        error = nrmse(gen_amounts, gt_amounts)
    except DegenerateRange as exc:
        error = None
        notes.append(f"nrmse undefined: {exc}")

    gen_norm = tuple(normalize_step(s) for s in gen.steps)
    gt_norm = tuple(normalize_step(s) for s in gt.steps)
    notes.extend(_plate_note(gen_norm + gt_norm))

    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        spearman=rho,
        nrmse=error,
        assignment=assignment,
        name_mapping=mapping,
        gen_steps=gen_norm,
        gt_steps=gt_norm,
        gen_amounts=gen_amounts,
        gt_amounts=gt_amounts,
        notes=tuple(notes),
    )
