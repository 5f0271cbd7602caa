#!/usr/bin/env python3
"""Regenerate the bundled benchmark fixtures under src/platebench/fixtures/.

Each experiment ships four files:
  steps.txt    reference procedure as a <final-steps> block
  amounts.csv  per-vial chemical totals (vial ids plate-qualified when the
               experiment uses two plates)
  stub.json    scripted chat replies that replay a full design session
  meta.json    plate/array bindings, per-plate target volumes, description

The amount tables are transcriptions of the reference tables and are the
source of truth; the step dictionaries are derived from them here so the two
files can never drift apart.
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "platebench" / "fixtures"

ROWS = "ABCDEFGH"


def fmt(v: float) -> str:
    return f"{v:g}"


def vials_in(rows: str, cols: range) -> list[str]:
    return [f"{r}{c}" for r in rows for c in cols]


def dict_text(values: dict[str, float]) -> str:
    return "{" + ", ".join(f"{k}: {fmt(v)}" for k, v in values.items()) + "}"


def add(chem: str, unit: str, plate: str, values: dict[str, float]) -> str:
    return f"Add {chem} ({unit}) to vials in {plate}. {dict_text(values)}"


def set_(param: str, plate: str, values: dict[str, float]) -> str:
    return f"Set {param} in vials in {plate}. {dict_text(values)}"


def transfer(mode: str, src: str, dst: str, flags: list[str], values: dict[str, str]) -> str:
    flag_txt = f" ({', '.join(flags)})" if flags else ""
    body = "{" + ", ".join(f"{k}: {v}" for k, v in values.items()) + "}"
    return f"{mode} transfer from {src} to {dst}.{flag_txt} {body}"


def write_experiment(name, steps, amounts, meta, stub, alt_steps=None):
    exp = OUT / name
    exp.mkdir(parents=True, exist_ok=True)
    block = "\n".join(["<final-steps>"] + [f"<step> {s} </step>" for s in steps] + ["</final-steps>"])
    (exp / "steps.txt").write_text(block + "\n", encoding="utf-8")
    if alt_steps:
        alt = "\n".join(["<final-steps>"] + [f"<step> {s} </step>" for s in alt_steps] + ["</final-steps>"])
        (exp / "steps_alt.txt").write_text(alt + "\n", encoding="utf-8")

    chems = list(amounts)
    vials: list[str] = []
    for per_vial in amounts.values():
        for v in per_vial:
            if v not in vials:
                vials.append(v)
    lines = ["vial," + ",".join(chems)]
    for v in vials:
        lines.append(v + "," + ",".join(fmt(amounts[c].get(v, 0)) for c in chems))
    (exp / "amounts.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (exp / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    (exp / "stub.json").write_text(json.dumps(stub, indent=2) + "\n", encoding="utf-8")


def make_stub(understand, calc_tool, calc_summary, vials_note, processing, final_block):
    """A scripted multi-agent session: route, reply, route, reply, ... final."""
    return {
        "replies": [
            {"content": "Understand_And_Refine", "usage": {"prompt": 410, "completion": 6}},
            {"content": understand, "usage": {"prompt": 520, "completion": 64}},
            {"content": "Chemical_Calculations", "usage": {"prompt": 610, "completion": 5}},
            {
                "content": "Running the calculation.",
                "tool_calls": [calc_tool],
                "usage": {"prompt": 700, "completion": 31},
            },
            {"content": calc_summary, "usage": {"prompt": 780, "completion": 58}},
            {"content": "Vial_Arrangement", "usage": {"prompt": 840, "completion": 5}},
            {"content": vials_note, "usage": {"prompt": 910, "completion": 47}},
            {"content": "Processing_Steps", "usage": {"prompt": 960, "completion": 5}},
            {"content": processing, "usage": {"prompt": 1020, "completion": 41}},
            {"content": "Generate_Final_Steps", "usage": {"prompt": 1080, "completion": 5}},
            {
                "content": "All checks done. Final steps below.\n" + final_block,
                "usage": {"prompt": 1200, "completion": 380},
            },
            {"content": "NO_CHANGES", "usage": {"prompt": 1300, "completion": 4}},
            {"content": "NO_CHANGES", "usage": {"prompt": 1310, "completion": 4}},
        ]
    }


def block_of(steps: list[str]) -> str:
    return "\n".join(["<final-steps>"] + [f"<step> {s} </step>" for s in steps] + ["</final-steps>"])


# ---------------------------------------------------------------------------
# Experiment 1: calibration samples, naphthalene in methanol
# ---------------------------------------------------------------------------

def exp1():
    vials = ["A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4"]
    naph = dict(zip(vials, [5, 10, 15, 20, 25, 30, 35, 50]))
    meoh = dict(zip(vials, [9995.61, 9991.23, 9986.84, 9982.46, 9978.07, 9973.68, 9969.30, 9956.14]))
    ones = {v: 1 for v in vials}
    steps = [
        add("naphthalene", "mg", "Plate 1", naph),
        add("methanol", "uL", "Plate 1", meoh),
        set_("Cap", "Plate 1", ones),
        set_("VortexRate", "Plate 1", {v: 500 for v in vials}),
        set_("Delay", "Plate 1", {v: 10 for v in vials}),
        set_("VortexRate", "Plate 1", {v: 0 for v in vials}),
    ]
    amounts = {"naphthalene": naph, "methanol": meoh}
    meta = {
        "plates": {"Plate 1": 20.0},
        "target_volumes_ul": {"Plate 1": 10000.0},
        "description": (
            "Prepare eight calibration samples of naphthalene in methanol, "
            "10 mL total each, with 5, 10, 15, 20, 25, 30, 35 and 50 mg of "
            "naphthalene and methanol making up the remainder. Cap the vials "
            "and vortex for 10 minutes; no heating."
        ),
    }
    stub = make_stub(
        "Eight single-solvent calibration samples in 20 mL vials; naphthalene "
        "masses are fixed and methanol fills to 10 mL. Shall I proceed?",
        {"name": "get_chem_volume", "arguments": {"name": "naphthalene", "weight_mg": 5}},
        "5 mg of naphthalene displaces 4.39 uL, so vial A1 takes 9995.61 uL of methanol.",
        "A 2x4 array of 20 mL vials holds all eight samples: A1-A4 and B1-B4.",
        "Cap all vials, vortex at 500 rpm for 10 minutes, then zero the vortex rate.",
        block_of(steps),
    )
    write_experiment("exp1", steps, amounts, meta, stub)


# ---------------------------------------------------------------------------
# Experiment 2: electrolyte solutions with a 1% modifier stock
# ---------------------------------------------------------------------------

def exp2():
    vials = vials_in("ABCD", range(1, 7))
    stock_by_col = {1: 0, 2: 100, 3: 200, 4: 300, 5: 400, 6: 500}
    pc_by_col = {c: 500 - v for c, v in stock_by_col.items()}
    lp = {f"A{c}": 20 for c in range(1, 7)}
    lt = {f"B{c}": 20 for c in range(1, 7)}
    lh = {f"C{c}": 20 for c in range(1, 7)} | {f"D{c}": 50 for c in range(1, 7)}
    stock = {v: stock_by_col[int(v[1:])] for v in vials if stock_by_col[int(v[1:])] > 0}
    pc = {v: pc_by_col[int(v[1:])] for v in vials if pc_by_col[int(v[1:])] > 0}
    ones = {v: 1 for v in vials}
    steps = [
        add("lithium perchlorate", "mg", "Plate 1", lp),
        add("lithium tetrafluoroborate", "mg", "Plate 1", lt),
        add("lithium hexafluorophosphate", "mg", "Plate 1", lh),
        add("1% ethylene carbonate", "uL", "Plate 1", stock),
        add("propylene carbonate", "uL", "Plate 1", pc),
        set_("Cap", "Plate 1", ones),
        set_("StirRate", "Plate 1", {v: 700 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 40 for v in vials}),
        set_("Delay", "Plate 1", {v: 30 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 25 for v in vials}),
        set_("StirRate", "Plate 1", {v: 0 for v in vials}),
    ]
    amounts = {
        "lithium perchlorate": lp,
        "propylene carbonate": {v: pc_by_col[int(v[1:])] for v in vials},
        "1% ethylene carbonate": {v: stock_by_col[int(v[1:])] for v in vials},
        "lithium tetrafluoroborate": lt,
        "lithium hexafluorophosphate": lh,
    }
    meta = {
        "plates": {"Plate 1": 2.0},
        "target_volumes_ul": {"Plate 1": 500.0},
        "description": (
            "Prepare 24 electrolyte solutions of 500 uL each: rows with 20 mg "
            "lithium perchlorate, 20 mg lithium tetrafluoroborate, and 20 or "
            "50 mg lithium hexafluorophosphate. The solvent is propylene "
            "carbonate; the modifier, ethylene carbonate, is dispensed only as "
            "a 1% ethylene carbonate in propylene carbonate stock, varying the "
            "modifier from 0% to 1.0% in 0.2% increments. Heat to 40 C for 30 "
            "minutes with stirring."
        ),
    }
    stub = make_stub(
        "Three salts across rows A-D, modifier varied by column via the 1% "
        "stock; final volume 500 uL per vial. Shall I proceed?",
        {
            "name": "find_the_concentration_of_n_percent_solution",
            "arguments": {"name": "1% ethylene carbonate"},
        },
        "A 0.4% target takes 200 uL of the 1% stock plus 300 uL of neat propylene carbonate.",
        "A 6x8 array of 2 mL vials; salts by row (A: perchlorate, B: tetrafluoroborate, C/D: hexafluorophosphate), modifier by column.",
        "Cap, stir at 700 rpm, heat to 40 C, hold 30 minutes, then return to 25 C and zero the stir rate.",
        block_of(steps),
    )
    write_experiment("exp2", steps, amounts, meta, stub)


# ---------------------------------------------------------------------------
# Experiment 3: imine synthesis with aqueous ammonia loadings
# ---------------------------------------------------------------------------

R2_NAMES = [
    "1-bromobutane",
    "1-iodobutane",
    "1-chlorobutane",
    "3-bromopropene",
    "benzyl bromide",
    "3-bromobut-1-ene",
    "3-bromobut-2-ene",
    "2-bromoethyl cyanide",
]
R2_VOLUMES = [81.06, 85.35, 78.01, 64.46, 86.86, 76.70, 75.57, 71.39]

WATER_BY_LEVEL = {
    "3M": [664.45, 660.16, 667.50, 681.05, 658.65, 668.81, 669.94, 674.11],
    "9M": [257.15, 252.86, 260.20, 273.75, 251.35, 261.51, 262.64, 266.81],
    "12M": [53.50, 49.20, 56.55, 70.10, 47.69, 57.86, 58.99, 63.16],
}
NH3_BY_LEVEL = {"3M": 203.67, "9M": 610.97, "12M": 814.62}
ROW_LEVELS = {"A": "3M", "B": "9M", "C": "12M", "D": "3M", "E": "9M", "F": "12M"}


def exp3():
    vials = vials_in("ABCDEF", range(1, 9))
    water = {v: WATER_BY_LEVEL[ROW_LEVELS[v[0]]][int(v[1:]) - 1] for v in vials}
    nh3 = {v: NH3_BY_LEVEL[ROW_LEVELS[v[0]]] for v in vials}
    benz = {v: 50.83 for v in vials}
    r2 = {
        name: {f"{row}{col}": R2_VOLUMES[col - 1] for row in "ABCDEF"}
        for col, name in enumerate(R2_NAMES, start=1)
    }
    ones = {v: 1 for v in vials}
    adds_original = [
        add("water", "uL", "Plate 1", water),
        add("aqueous ammonia", "uL", "Plate 1", nh3),
        add("benzaldehyde", "uL", "Plate 1", benz),
    ] + [add(name, "uL", "Plate 1", r2[name]) for name in R2_NAMES]
    adds_alternative = (
        [add("benzaldehyde", "uL", "Plate 1", benz)]
        + [add(name, "uL", "Plate 1", r2[name]) for name in R2_NAMES]
        + [
            add("aqueous ammonia", "uL", "Plate 1", nh3),
            add("water", "uL", "Plate 1", water),
        ]
    )
    processing = [
        set_("Cap", "Plate 1", ones),
        set_("StirRate", "Plate 1", {v: 700 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 60 for v in vials}),
        set_("Delay", "Plate 1", {v: 480 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 25 for v in vials}),
        set_("StirRate", "Plate 1", {v: 0 for v in vials}),
    ]
    steps = adds_original + processing
    alt_steps = adds_alternative + processing
    amounts = {"water": water, "aqueous ammonia": nh3, "benzaldehyde": benz}
    for name in R2_NAMES:
        amounts[name] = r2[name]
    meta = {
        "plates": {"Plate 1": 2.0},
        "target_volumes_ul": {"Plate 1": 1000.0},
        "description": (
            "Imine synthesis in duplicate: benzaldehyde at 0.5 mmol with one of "
            "eight halide partners at 0.75 mmol per vial, in aqueous ammonia. "
            "Water and 28% aqueous ammonia volumes must hit ammonia loadings of "
            "3 M, 9 M and 12 M in a total volume of 1 mL. Heat to 60 C overnight."
        ),
    }
    stub = make_stub(
        "48 vials: eight halides by column, ammonia loading by row pair, each "
        "condition duplicated. Shall I proceed?",
        {"name": "find_the_concentration_of_n_percent_solution", "arguments": {"name": "28% ammonia"}},
        "The 28% ammonia stock is 14.73 M; diluting to 3 M in 1 mL takes 203.67 uL.",
        "A 6x8 array of 2 mL vials; rows A-C and duplicates D-F.",
        "Cap, stir at 700 rpm, heat to 60 C, hold 480 minutes, cool to 25 C, zero the stir rate.",
        block_of(steps),
    )
    write_experiment("exp3", steps, amounts, meta, stub, alt_steps=alt_steps)


# ---------------------------------------------------------------------------
# Experiment 4: esterification screen with HPLC dilution plate
# ---------------------------------------------------------------------------

EXP4_TABLE = {
    # vial: water, acetic, methanol, sulfuric, propanoic, ethanol, propanol, benzoic, glycerol
    "A1": (1531.32, 152.65, 216.03, 100, 0, 0, 0, 0, 0),
    "A2": (1485.03, 0, 216.03, 100, 198.94, 0, 0, 0, 0),
    "A3": (1509.00, 228.98, 162.02, 100, 0, 0, 0, 0, 0),
    "A4": (1439.57, 0, 162.02, 100, 298.41, 0, 0, 0, 0),
    "A5": (1486.68, 305.31, 108.02, 100, 0, 0, 0, 0, 0),
    "A6": (1394.11, 0, 108.02, 100, 397.88, 0, 0, 0, 0),
    "B1": (1435.93, 152.65, 0, 100, 0, 311.42, 0, 0, 0),
    "B2": (1389.65, 0, 0, 100, 198.94, 311.42, 0, 0, 0),
    "B3": (1437.46, 228.98, 0, 100, 0, 233.56, 0, 0, 0),
    "B4": (1368.03, 0, 0, 100, 298.41, 233.56, 0, 0, 0),
    "B5": (1438.99, 305.31, 0, 100, 0, 155.71, 0, 0, 0),
    "B6": (1346.41, 0, 0, 100, 397.88, 155.71, 0, 0, 0),
    "C1": (1347.58, 152.65, 0, 100, 0, 0, 399.77, 0, 0),
    "C2": (1683.97, 0, 216.03, 100, 0, 0, 0, 325.65, 0),
    "C3": (1371.19, 228.98, 0, 100, 0, 0, 299.83, 0, 0),
    "C4": (1737.98, 0, 162.02, 100, 0, 0, 0, 488.48, 0),
    "C5": (1394.81, 305.31, 0, 100, 0, 0, 199.88, 0, 0),
    "C6": (1791.98, 0, 108.02, 100, 0, 0, 0, 651.31, 0),
    "D1": (1357.86, 152.65, 0, 100, 0, 0, 0, 0, 389.49),
    "D2": (1588.58, 0, 0, 100, 0, 311.42, 0, 325.65, 0),
    "D3": (1378.90, 228.98, 0, 100, 0, 0, 0, 0, 292.12),
    "D4": (1666.44, 0, 0, 100, 0, 233.56, 0, 488.48, 0),
    "D5": (1399.95, 305.31, 0, 100, 0, 0, 0, 0, 194.74),
    "D6": (1744.29, 0, 0, 100, 0, 155.71, 0, 651.31, 0),
}
EXP4_CHEMS = [
    "water", "acetic acid", "methanol", "sulfuric acid", "propanoic acid",
    "ethanol", "propanol", "benzoic acid", "glycerol",
]


def exp4():
    vials = list(EXP4_TABLE)
    col = {name: i for i, name in enumerate(EXP4_CHEMS)}

    def on_plate1(name: str) -> dict[str, float]:
        return {v: EXP4_TABLE[v][col[name]] for v in vials if EXP4_TABLE[v][col[name]] > 0}

    ones = {v: 1 for v in vials}
    water_p2 = {v: 900 for v in vials}
    steps = [
        add("benzoic acid", "mg", "Plate 1", on_plate1("benzoic acid")),
        add("water", "uL", "Plate 1", on_plate1("water")),
        add("acetic acid", "uL", "Plate 1", on_plate1("acetic acid")),
        add("propanoic acid", "uL", "Plate 1", on_plate1("propanoic acid")),
        add("methanol", "uL", "Plate 1", on_plate1("methanol")),
        add("ethanol", "uL", "Plate 1", on_plate1("ethanol")),
        add("propanol", "uL", "Plate 1", on_plate1("propanol")),
        add("glycerol", "uL", "Plate 1", on_plate1("glycerol")),
        add("sulfuric acid", "uL", "Plate 1", on_plate1("sulfuric acid")),
        set_("Cap", "Plate 1", ones),
        set_("StirRate", "Plate 1", {v: 700 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 80 for v in vials}),
        set_("Delay", "Plate 1", {v: 30 for v in vials}),
        set_("HeatingTemp", "Plate 1", {v: 25 for v in vials}),
        set_("StirRate", "Plate 1", {v: 0 for v in vials}),
        add("water", "uL", "Plate 2", water_p2),
        transfer("Discrete", "Plate 1", "Plate 2", [], {v: f"[{v}, 100uL]" for v in vials}),
        set_("Cap", "Plate 2", ones),
        set_("VortexRate", "Plate 2", {v: 500 for v in vials}),
        set_("Delay", "Plate 2", {v: 20 for v in vials}),
        set_("VortexRate", "Plate 2", {v: 0 for v in vials}),
    ]
    amounts = {}
    for name in EXP4_CHEMS:
        amounts[name] = {f"Plate 1:{v}": EXP4_TABLE[v][col[name]] for v in vials}
    for v in vials:
        amounts["water"][f"Plate 2:{v}"] = 900
    meta = {
        "plates": {"Plate 1": 4.0, "Plate 2": 2.0},
        "target_volumes_ul": {"Plate 1": 2000.0, "Plate 2": 900.0},
        "description": (
            "Esterification screen: acetic, propanoic and benzoic acid against "
            "methanol, ethanol, propanol and glycerol at alcohol/acid molar "
            "ratios 0.5, 1.0 and 2.0 with total molarity 4 M in 2 mL, plus "
            "100 uL of a 0.5 M sulfuric acid stock (0.025 M in solution) and "
            "water as remainder. Heat to 80 C for 30 minutes, cool to 25 C, "
            "then dilute 10x into 1 mL HPLC vials on a second plate and vortex "
            "20 minutes."
        ),
    }
    stub = make_stub(
        "Acid/alcohol pairs by vial with three molar ratios, catalyst stock, "
        "water remainder, then a 10x dilution plate. Shall I proceed?",
        {
            "name": "find_chemical_amounts_in_a_solution",
            "arguments": {
                "total_molarity": 4.0,
                "molar_ratio": 0.5,
                "chem1": "acetic acid",
                "chem2": "methanol",
                "volume_l": 0.002,
            },
        },
        "At ratio 0.5 the vial takes 305.31 uL acetic acid and 108.02 uL methanol.",
        "Plate 1 is a 4x6 array of 4 mL vials; the HPLC plate is a 6x8 array of 2 mL vials.",
        "Cap, stir 700 rpm, heat 80 C for 30 minutes, cool to 25 C, zero stirring; "
        "prefill plate 2 with 900 uL water, transfer 100 uL, cap and vortex 20 minutes.",
        block_of(steps),
    )
    write_experiment("exp4", steps, amounts, meta, stub)


# ---------------------------------------------------------------------------
# Experiment 5: timed esterification with vial moves between plates
# ---------------------------------------------------------------------------

EXP5_ROW_DATA = {
    # row: (alcohol, alcohol volume, water volume)
    "A": ("methanol", 162.02, 1509.00),
    "B": ("ethanol", 233.56, 1437.46),
    "C": ("propanol", 299.83, 1371.19),
    "D": ("glycerol", 292.12, 1378.90),
}
EXP5_TIMES = {1: 15, 2: 30, 3: 60, 4: 90, 5: 120, 6: 150}


def exp5():
    vials = vials_in("ABCD", range(1, 7))
    acetic = {v: 228.98 for v in vials}
    sulfuric = {v: 100 for v in vials}
    water = {v: EXP5_ROW_DATA[v[0]][2] for v in vials}
    alcohols = {
        name: {f"{row}{c}": vol for c in range(1, 7)}
        for row, (name, vol, _) in EXP5_ROW_DATA.items()
    }
    timers = {v: EXP5_TIMES[int(v[1:])] for v in vials}
    ones = {v: 1 for v in vials}
    move = {v: f"[{v}, 2000uL]" for v in vials}
    steps = [
        add("acetic acid", "uL", "Plate 1", acetic),
        add("methanol", "uL", "Plate 1", alcohols["methanol"]),
        add("ethanol", "uL", "Plate 1", alcohols["ethanol"]),
        add("propanol", "uL", "Plate 1", alcohols["propanol"]),
        add("glycerol", "uL", "Plate 1", alcohols["glycerol"]),
        add("sulfuric acid", "uL", "Plate 1", sulfuric),
        add("water", "uL", "Plate 1", water),
        set_("Cap", "Plate 1", ones),
        set_("HeatingTemp", "Plate 2", {v: 80 for v in vials}),
        set_("VialTimers", "Plate 1", timers),
        set_("StirRate", "Plate 2", {v: 700 for v in vials}),
        transfer("Uniform", "Plate 1", "Plate 2", ["MoveVial", "StartVialTimer"], move),
        transfer("Uniform", "Plate 2", "Plate 1", ["MoveVial", "WaitVialTimer"], move),
        set_("StirRate", "Plate 2", {v: 0 for v in vials}),
        set_("HeatingTemp", "Plate 2", {v: 25 for v in vials}),
    ]
    amounts = {
        "water": {f"Plate 1:{v}": water[v] for v in vials},
        "acetic acid": {f"Plate 1:{v}": 228.98 for v in vials},
        "methanol": {f"Plate 1:{v}": alcohols["methanol"].get(v, 0) for v in vials},
        "sulfuric acid": {f"Plate 1:{v}": 100 for v in vials},
        "ethanol": {f"Plate 1:{v}": alcohols["ethanol"].get(v, 0) for v in vials},
        "propanol": {f"Plate 1:{v}": alcohols["propanol"].get(v, 0) for v in vials},
        "glycerol": {f"Plate 1:{v}": alcohols["glycerol"].get(v, 0) for v in vials},
    }
    meta = {
        "plates": {"Plate 1": 4.0, "Plate 2": 4.0},
        "target_volumes_ul": {"Plate 1": 2000.0},
        "description": (
            "Time study of acetic acid esterification with methanol, ethanol, "
            "propanol and glycerol at a 1:1 molar ratio, 4 M total, 0.025 M "
            "sulfuric acid from a 0.5 M stock, water remainder to 2 mL. React "
            "at 80 C for 15, 30, 60, 90, 120 and 150 minutes using vial timers "
            "and moves between the preparation and heating plates."
        ),
    }
    stub = make_stub(
        "One alcohol per row, six reaction times per column, vials move to a "
        "heated plate and return when their timers expire. Shall I proceed?",
        {
            "name": "find_chemical_amounts_in_a_solution",
            "arguments": {
                "total_molarity": 4.0,
                "molar_ratio": 1.0,
                "chem1": "acetic acid",
                "chem2": "methanol",
                "volume_l": 0.002,
            },
        },
        "At ratio 1.0 each vial takes 228.98 uL acetic acid and 162.02 uL methanol.",
        "Two 4x6 arrays of 4 mL vials: Plate 1 for preparation, Plate 2 heated.",
        "Cap plate 1, heat plate 2 to 80 C with stirring, set the six vial "
        "timers, move vials across and back on their timers, then zero "
        "stirring and cool.",
        block_of(steps),
    )
    write_experiment("exp5", steps, amounts, meta, stub)


if __name__ == "__main__":
    for build in (exp1, exp2, exp3, exp4, exp5):
        build()
    print(f"fixtures written under {OUT}")
