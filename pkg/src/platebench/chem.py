"""Stoichiometry engine: the four calculation tools plus dilution math.

All functions take lab-scale units at the boundary (mg, uL, mol/L, L) and
state them in their signatures. Chemical constants come from a pluggable
property provider; the bundled static table covers every chemical used by
the five benchmark experiments so tests never need a hosted model.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Protocol


class UnknownChemical(KeyError):
    """The property provider cannot resolve a chemical name."""


class NonPositiveDensity(ValueError):
    pass


class MissingWeightPercent(ValueError):
    """Name carries no n% specification.

    Raised instead of silently assuming full strength: passing "ammonia"
    where "28% ammonia" was meant is a real, observed failure mode.
    """


class ImpossibleDilution(ValueError):
    pass


class Overfill(ValueError):
    pass


class TargetExceedsStock(ValueError):
    pass


@dataclass(frozen=True)
class ChemicalProperties:
    name: str
    molecular_weight: float  # g/mol
    density: float  # g/mL
    state: str  # "solid" | "liquid"
    weight_percent: float | None = None  # present for "n% X" solutions
    aqueous: bool = False
    water_miscible: bool = False

    def __post_init__(self):
        if self.molecular_weight <= 0:
            raise ValueError(f"molecular weight must be positive: {self.name}")
        if self.density <= 0:
            raise NonPositiveDensity(f"density must be positive: {self.name}")
        if self.state not in ("solid", "liquid"):
            raise ValueError(f"state must be solid or liquid: {self.state!r}")


class PropertyProvider(Protocol):
    def lookup(self, name: str) -> ChemicalProperties: ...


def canonical_name(name: str) -> str:
    return " ".join(name.split()).casefold()


_PERCENT_NAME_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*%\s*(.+)$")


def parse_percent_name(name: str) -> tuple[float, str] | None:
    """Split "28% ammonia" into (28.0, "ammonia"); None when no n% prefix."""
    m = _PERCENT_NAME_RE.match(name)
    if not m:
        return None
    return float(m.group(1)), m.group(2).strip()


class StaticTableProvider:
    """Property lookup from the bundled CSV table.

    Names are matched case-insensitively. Unknown "n% X [in Y]" names fall
    back to the base chemical X with the percent attached and, when a solvent
    Y is named, Y's bulk density (a dilute solution is mostly solvent).
    """

    def __init__(self, rows: dict[str, ChemicalProperties] | None = None):
        self._rows = rows if rows is not None else _load_bundled_table()

    def lookup(self, name: str) -> ChemicalProperties:
        key = canonical_name(name)
        props = self._rows.get(key)
        if props is not None:
            return props
        parsed = parse_percent_name(key)
        if parsed is not None:
            percent, rest = parsed
            solute_name, _, solvent_name = rest.partition(" in ")
            solute = self._rows.get(canonical_name(solute_name))
            solvent = self._rows.get(canonical_name(solvent_name)) if solvent_name else None
            if solute is not None:
                base = solvent or solute
                return ChemicalProperties(
                    name=" ".join(name.split()),
                    molecular_weight=solute.molecular_weight,
                    density=base.density,
                    state="liquid",
                    weight_percent=percent,
                    aqueous=base.aqueous,
                    water_miscible=base.water_miscible,
                )
        raise UnknownChemical(name)

    def names(self) -> tuple[str, ...]:
        return tuple(self._rows)


def _load_bundled_table() -> dict[str, ChemicalProperties]:
    rows: dict[str, ChemicalProperties] = {}
    data = resources.files("platebench.data").joinpath("chemicals.csv").read_text("utf-8")
    for row in csv.DictReader(data.splitlines()):
        props = ChemicalProperties(
            name=row["name"],
            molecular_weight=float(row["molecular_weight"]),
            density=float(row["density"]),
            state=row["state"],
            weight_percent=float(row["weight_percent"]) if row["weight_percent"] else None,
            aqueous=row["aqueous"] == "yes",
            water_miscible=row["water_miscible"] == "yes",
        )
        rows[canonical_name(props.name)] = props
    return rows


def load_property_table(path) -> StaticTableProvider:
    """Load a property table CSV from disk (same columns as the bundled one)."""
    rows: dict[str, ChemicalProperties] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            props = ChemicalProperties(
                name=row["name"],
                molecular_weight=float(row["molecular_weight"]),
                density=float(row["density"]),
                state=row["state"],
                weight_percent=float(row["weight_percent"]) if row.get("weight_percent") else None,
                aqueous=row.get("aqueous") == "yes",
                water_miscible=row.get("water_miscible") == "yes",
            )
            rows[canonical_name(props.name)] = props
    return StaticTableProvider(rows)


class LLMPropertyProvider:
    """Resolve properties by asking a chat model; answers are cached.

    ``ask`` maps a prompt to the model's text reply. Opt-in: deterministic
    work should use the static table.
    """

    _REPLY_RE = re.compile(
        r"molecular_weight\s*=\s*([\d.]+).*?density\s*=\s*([\d.]+).*?state\s*=\s*(solid|liquid)",
        re.IGNORECASE | re.DOTALL,
    )

    def __init__(self, ask: Callable[[str], str]):
        self._ask = ask
        self._cache: dict[str, ChemicalProperties] = {}

    def lookup(self, name: str) -> ChemicalProperties:
        key = canonical_name(name)
        if key in self._cache:
            return self._cache[key]
        reply = self._ask(
            f"Give the molecular weight (g/mol), density (g/mL) and physical "
            f"state of {name}. Answer exactly in the form: "
            f"molecular_weight=<x>; density=<y>; state=<solid|liquid>"
        )
        m = self._REPLY_RE.search(reply)
        if not m:
            raise UnknownChemical(name)
        percent = parse_percent_name(name)
        props = ChemicalProperties(
            name=name,
            molecular_weight=float(m.group(1)),
            density=float(m.group(2)),
            state=m.group(3).lower(),
            weight_percent=percent[0] if percent else None,
        )
        self._cache[key] = props
        return props


# ---------------------------------------------------------------------------
# Calculation tools
# ---------------------------------------------------------------------------


def get_chem_volume(provider: PropertyProvider, name: str, weight_mg: float) -> float:
    """Volume (uL) occupied by ``weight_mg`` of a chemical: weight / density."""
    if weight_mg < 0:
        raise ValueError("weight must be nonnegative")
    props = provider.lookup(name)
    return weight_mg / props.density  # mg / (g/mL) == uL


def find_the_volume_corresponding_to_moles(
    provider: PropertyProvider, name: str, moles: float
) -> float:
    """Volume (uL) of ``moles`` of a chemical: moles x MW / density."""
    if moles < 0:
        raise ValueError("moles must be nonnegative")
    props = provider.lookup(name)
    grams = moles * props.molecular_weight
    return grams / props.density * 1000.0


def find_the_concentration_of_n_percent_solution(
    provider: PropertyProvider, name: str
) -> float:
    """Molarity (mol/L) of the solute in an n% (weight/volume) solution.

    One litre of solution weighs 1000 x density grams; n% of that mass is
    solute; moles of solute per litre is the molarity.
    """
    props = provider.lookup(name)
    percent = props.weight_percent
    if percent is None:
        parsed = parse_percent_name(name)
        percent = parsed[0] if parsed else None
    if percent is None:
        raise MissingWeightPercent(
            f"{name!r} carries no n% specification; pass the full solution "
            f"name (e.g. '28% ammonia', not 'ammonia')"
        )
    mass_per_litre = 1000.0 * props.density
    solute_mass = percent * mass_per_litre / 100.0
    return solute_mass / props.molecular_weight


@dataclass(frozen=True)
class SolutionSpec:
    """Two-component solution target: total molarity, ratio, final volume.

    ``molar_ratio`` is [component2]/[component1]; component molarities are
    total/(R+1) and R*total/(R+1).
    """

    total_molarity: float  # mol/L
    molar_ratio: float  # dimensionless, [chem2]/[chem1]
    volume_l: float  # L

    def __post_init__(self):
        if self.total_molarity <= 0 or self.molar_ratio <= 0 or self.volume_l <= 0:
            raise ValueError("solution spec values must be positive")

    def component_molarities(self) -> tuple[float, float]:
        m1 = self.total_molarity / (self.molar_ratio + 1.0)
        return m1, self.molar_ratio * m1


@dataclass(frozen=True)
class ChemicalAmount:
    """One component of a prepared solution, in both mass and volume."""

    name: str
    mass_mg: float
    volume_ul: float
    state: str

    @property
    def canonical_value(self) -> float:
        """mg for solids, uL for liquids."""
        return self.mass_mg if self.state == "solid" else self.volume_ul

    @property
    def canonical_unit(self) -> str:
        return "mg" if self.state == "solid" else "uL"


def find_chemical_amounts_in_a_solution(
    provider: PropertyProvider, spec: SolutionSpec, chem1: str, chem2: str
) -> tuple[ChemicalAmount, ChemicalAmount]:
    """Amounts of two chemicals for a solution of given molarity, ratio, volume."""
    m1, m2 = spec.component_molarities()
    out = []
    for name, molarity in ((chem1, m1), (chem2, m2)):
        props = provider.lookup(name)
        moles = molarity * spec.volume_l
        mass_mg = moles * props.molecular_weight * 1000.0
        volume_ul = mass_mg / props.density
        out.append(ChemicalAmount(name, mass_mg, volume_ul, props.state))
    return out[0], out[1]


def dilution_volume(c1: float, c2: float, v2_l: float) -> float:
    """Stock volume (uL) to dilute from c1 to c2 mol/L in v2_l litres (C1V1=C2V2)."""
    if c1 <= 0:
        raise ValueError("stock concentration must be positive")
    if c2 < 0 or v2_l < 0:
        raise ValueError("target concentration and volume must be nonnegative")
    if c2 > c1:
        raise ImpossibleDilution(f"cannot dilute {c1} M up to {c2} M")
    return c2 * v2_l / c1 * 1e6


def solvent_remainder(total_volume_ul: float, component_volumes_ul: list[float]) -> float:
    """Solvent volume left after all other components: total minus their sum."""
    used = sum(component_volumes_ul)
    if used > total_volume_ul:
        raise Overfill(
            f"components sum to {used:g} uL, exceeding the {total_volume_ul:g} uL total"
        )
    return total_volume_ul - used


def modifier_stock_split(
    total_volume_ul: float, modifier_target_percent: float, stock_percent: float
) -> tuple[float, float]:
    """Split a vial between n% modifier stock and neat solvent.

    Returns (stock volume, neat solvent volume) so the final vial holds the
    target modifier concentration: stock = (target/stock%) x total.
    """
    if stock_percent <= 0:
        raise ValueError("stock percent must be positive")
    if modifier_target_percent < 0:
        raise ValueError("target percent must be nonnegative")
    if modifier_target_percent > stock_percent:
        raise TargetExceedsStock(
            f"target {modifier_target_percent}% exceeds the {stock_percent}% stock"
        )
    stock = modifier_target_percent / stock_percent * total_volume_ul
    return stock, total_volume_ul - stock
