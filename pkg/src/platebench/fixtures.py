"""Access to the bundled benchmark experiment fixtures.

Each experiment directory holds ``steps.txt`` (the reference procedure as a
final-steps block), ``amounts.csv`` (per-vial chemical totals; vial ids are
plate-qualified for two-plate experiments), ``stub.json`` (a scripted session
for deterministic runs) and ``meta.json`` (plate bindings, target volumes,
description). An alternative, equally valid step ordering for experiment 3
ships as ``steps_alt.txt``.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

from .checks import CheckContext
from .evaluate import AmountMatrix, canonical_text
from .llm import ScriptedClient
from .steps import ArraySpec, Procedure, array_for_vial_volume, extract_final_steps

EXPERIMENT_IDS = ("exp1", "exp2", "exp3", "exp4", "exp5")


def fixtures_root():
    return resources.files("platebench").joinpath("fixtures")


def _experiment_dir(exp_id: str, fixture_dir: str | Path | None = None):
    if fixture_dir is not None:
        return Path(fixture_dir) / exp_id
    return fixtures_root().joinpath(exp_id)


def is_experiment_id(value: str) -> bool:
    return value in EXPERIMENT_IDS


def load_meta(exp_id: str, fixture_dir: str | Path | None = None) -> dict:
    return json.loads(_experiment_dir(exp_id, fixture_dir).joinpath("meta.json").read_text("utf-8"))


def plate_arrays(meta: dict) -> dict[str, ArraySpec]:
    return {plate: array_for_vial_volume(vol) for plate, vol in meta.get("plates", {}).items()}


def parse_procedure_text(text: str, arrays: dict[str, ArraySpec] | None = None) -> Procedure:
    proc = extract_final_steps(text)
    if proc is None:
        raise ValueError("no <final-steps> block found")
    return Procedure(proc.steps, dict(arrays or {}))


def load_procedure_file(path: str | Path, arrays: dict[str, ArraySpec] | None = None) -> Procedure:
    return parse_procedure_text(Path(path).read_text("utf-8"), arrays)


def load_ground_truth(
    exp_id: str,
    alt_order: bool = False,
    fixture_dir: str | Path | None = None,
) -> Procedure:
    folder = _experiment_dir(exp_id, fixture_dir)
    name = "steps_alt.txt" if alt_order else "steps.txt"
    entry = folder.joinpath(name)
    if alt_order and not entry.is_file():
        raise FileNotFoundError(f"{exp_id} has no alternative ordering fixture")
    meta = load_meta(exp_id, fixture_dir)
    return parse_procedure_text(entry.read_text("utf-8"), plate_arrays(meta))


def _matrix_from_rows(header: list[str], rows: list[list[str]]) -> AmountMatrix:
    chems = [canonical_text(name) for name in header[1:]]
    vials: list[str] = []
    values: dict[tuple[str, str], float] = {}
    for row in rows:
        vial = row[0] if ":" in row[0] else f"Plate 1:{row[0]}"
        vials.append(vial)
        for chem, cell in zip(chems, row[1:]):
            values[(chem, vial)] = float(cell)
    return AmountMatrix(tuple(chems), tuple(vials), values)


def load_amounts_csv(path: str | Path) -> AmountMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return _matrix_from_rows(header, [row for row in reader if row])


def load_amounts(exp_id: str, fixture_dir: str | Path | None = None) -> AmountMatrix:
    text = _experiment_dir(exp_id, fixture_dir).joinpath("amounts.csv").read_text("utf-8")
    rows = [row for row in csv.reader(text.splitlines()) if row]
    return _matrix_from_rows(rows[0], rows[1:])


def check_context_for(
    exp_id: str,
    auto_fix: bool = False,
    fixture_dir: str | Path | None = None,
) -> CheckContext:
    meta = load_meta(exp_id, fixture_dir)
    return CheckContext(
        arrays=plate_arrays(meta),
        target_volumes_ul=dict(meta.get("target_volumes_ul", {})),
        auto_fix=auto_fix,
    )


def stub_client(exp_id: str, fixture_dir: str | Path | None = None) -> ScriptedClient:
    data = json.loads(_experiment_dir(exp_id, fixture_dir).joinpath("stub.json").read_text("utf-8"))
    return ScriptedClient(replies=list(data["replies"]))


def description_for(exp_id: str, fixture_dir: str | Path | None = None) -> str:
    return load_meta(exp_id, fixture_dir)["description"]
