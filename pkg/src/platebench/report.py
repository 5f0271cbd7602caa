"""Report rendering: metrics JSON, a delimited amount table, and figures.

The figures mirror how the metrics are defined: a bipartite step-matching
diagram (matched pairs, false positives, false negatives) and amount-error
heatmaps over the chemical x vial grid.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import MetricsReport


def _norm_label(step) -> str:
    return f"{step.action.value} | {step.parameter} | {step.plate}"


def write_report(report: MetricsReport, out_dir: str | Path, figures: bool = True) -> list[Path]:
    """Write metrics.json, amounts.csv and the PNG figures; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    metrics_path = out / "metrics.json"
    metrics_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    written.append(metrics_path)

    amounts_path = out / "amounts.csv"
    with open(amounts_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chemical", "vial", "ground_truth", "generated", "difference"])
        if report.gen_amounts is not None and report.gt_amounts is not None:
            chems = list(dict.fromkeys((*report.gt_amounts.chemicals, *report.gen_amounts.chemicals)))
            vials = list(dict.fromkeys((*report.gt_amounts.vials, *report.gen_amounts.vials)))
            for chem in chems:
                for vial in vials:
                    gt = report.gt_amounts.get(chem, vial)
                    gen = report.gen_amounts.get(chem, vial)
                    writer.writerow([chem, vial, f"{gt:g}", f"{gen:g}", f"{gen - gt:g}"])
    written.append(amounts_path)

    if figures:
        written.append(_step_matching_figure(report, out / "step_matching.png"))
        if report.gen_amounts is not None and report.gt_amounts is not None:
            written.append(_amount_figure(report, out / "amount_error.png"))
    return written


def _step_matching_figure(report: MetricsReport, path: Path) -> Path:
    n_gen, n_gt = len(report.gen_steps), len(report.gt_steps)
    height = max(3.0, 0.28 * max(n_gen, n_gt) + 1.2)
    fig, ax = plt.subplots(figsize=(10, height))
    matched_gen = {i for i, _, _ in report.assignment.pairs}
    matched_gt = {j for _, j, _ in report.assignment.pairs}

    for i, step in enumerate(report.gen_steps):
        color = "tab:green" if i in matched_gen else "tab:red"
        ax.text(0.02, -i, f"{i + 1}. {_norm_label(step)}", fontsize=7, va="center", color=color)
    for j, step in enumerate(report.gt_steps):
        color = "tab:green" if j in matched_gt else "tab:orange"
        ax.text(0.62, -j, f"{j + 1}. {_norm_label(step)}", fontsize=7, va="center", color=color)
    for i, j, _ in report.assignment.pairs:
        ax.plot([0.46, 0.60], [-i, -j], color="tab:green", lw=0.8, alpha=0.7)

    ax.text(0.02, 1.5, f"generated ({n_gen})", fontsize=9, weight="bold")
    ax.text(0.62, 1.5, f"ground truth ({n_gt})", fontsize=9, weight="bold")
    ax.set_title(
        f"step matching: TP={report.true_positives} FP={report.false_positives} "
        f"FN={report.false_negatives}  P={report.precision:.2f} R={report.recall:.2f} "
        f"F1={report.f1:.2f}",
        fontsize=9,
    )
    ax.set_xlim(0, 1)
    ax.set_ylim(-max(n_gen, n_gt) - 1, 2.5)
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _amount_figure(report: MetricsReport, path: Path) -> Path:
    gen, gt = report.gen_amounts, report.gt_amounts
    chems = list(dict.fromkeys((*gt.chemicals, *gen.chemicals)))
    vials = list(dict.fromkeys((*gt.vials, *gen.vials)))
    gt_grid = np.array([[gt.get(c, v) for v in vials] for c in chems])
    gen_grid = np.array([[gen.get(c, v) for v in vials] for c in chems])
    diff = np.abs(gen_grid - gt_grid)

    fig, axes = plt.subplots(
        3, 1, figsize=(max(6, 0.22 * len(vials) + 2), 1.1 * len(chems) + 4), sharex=True
    )
    for ax, grid, title in (
        (axes[0], gt_grid, "ground-truth amounts"),
        (axes[1], gen_grid, "generated amounts"),
        (axes[2], diff, "absolute difference"),
    ):
        im = ax.imshow(grid, aspect="auto", cmap="viridis")
        ax.set_yticks(range(len(chems)), chems, fontsize=7)
        ax.set_title(title, fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.8)
    axes[-1].set_xticks(range(len(vials)), vials, fontsize=6, rotation=90)
    nrmse_txt = "undefined" if report.nrmse is None else f"{report.nrmse:.4f}"
    fig.suptitle(f"chemical-vial amounts (nRMSE = {nrmse_txt})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def format_table(report: MetricsReport) -> str:
    """Human-readable summary of a metrics report."""
    lines = [
        f"precision : {report.precision:.4f}",
        f"recall    : {report.recall:.4f}",
        f"f1        : {report.f1:.4f}",
        f"spearman  : {'undefined' if report.spearman is None else f'{report.spearman:.4f}'}",
        f"nrmse     : {'undefined' if report.nrmse is None else f'{report.nrmse:.4f}'}",
        f"matched   : TP={report.true_positives} FP={report.false_positives} FN={report.false_negatives}",
    ]
    if report.assignment.unmatched_gen:
        lines.append("unmatched generated steps:")
        for i in report.assignment.unmatched_gen:
            lines.append(f"  {i + 1}. {_norm_label(report.gen_steps[i])}")
    if report.assignment.unmatched_gt:
        lines.append("unmatched ground-truth steps:")
        for j in report.assignment.unmatched_gt:
            lines.append(f"  {j + 1}. {_norm_label(report.gt_steps[j])}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)
