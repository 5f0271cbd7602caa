"""Rule-based translation of a finalized procedure into the hardware document.

The document has three fixed sections -- chemicals, instrument parameters,
steps -- serialized as deterministic XML: identical inputs produce identical
bytes. No model is involved in emission; one procedure step becomes exactly
one document step. The structure is validated against the bundled schema.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping

import jsonschema

from .chem import ChemicalProperties, PropertyProvider, UnknownChemical, canonical_name
from .steps import (
    AddStep,
    Procedure,
    SetStep,
    Step,
    TransferStep,
    validate_procedure,
)


class InvalidTagSet(ValueError):
    pass


class ValidationFailed(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def load_tag_rules() -> dict:
    """The machine-readable tag vocabulary (also served to UI clients)."""
    text = resources.files("platebench.data").joinpath("tag_rules.json").read_text("utf-8")
    return json.loads(text)


_RULES = load_tag_rules()


@dataclass(frozen=True)
class TagSet:
    """Dispense options for one step.

    ``core`` is required for additions (Powder for solids, SyringePump or PDT
    for liquids); ``tip_size`` accompanies PDT. Set steps carry no tags;
    transfers may carry timer tags.
    """

    core: str | None = None
    tip_size: str | None = None
    optional: frozenset[str] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "core": self.core,
            "tip_size": self.tip_size,
            "optional": sorted(self.optional),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TagSet":
        return cls(
            core=data.get("core"),
            tip_size=data.get("tip_size"),
            optional=frozenset(data.get("optional", ())),
        )


def validate_tag_set(step: Step, tags: TagSet, provider: PropertyProvider) -> list[str]:
    """Check a tag selection against the vocabulary rules; problems as text."""
    problems: list[str] = []
    if isinstance(step, AddStep):
        try:
            state = provider.lookup(step.chemical).state
        except UnknownChemical:
            return [f"unknown chemical {step.chemical!r}; tags cannot be validated"]
        allowed_cores = _RULES["core_by_state"][state]
        if tags.core is None:
            problems.append(f"addition of {step.chemical} needs a core tag")
        elif tags.core not in allowed_cores:
            problems.append(
                f"core tag {tags.core} is invalid for a {state} "
                f"(allowed: {', '.join(allowed_cores)})"
            )
        if tags.core in _RULES["tip_required_for"]:
            if not tags.tip_size:
                problems.append("PDT additions require a tip size")
            elif tags.tip_size not in _RULES["tip_sizes"]:
                problems.append(f"unknown tip size {tags.tip_size!r}")
        elif tags.tip_size:
            problems.append("tip size applies only to PDT additions")
        if tags.core in _RULES["optional_by_core"]:
            allowed = set(_RULES["optional_by_core"][tags.core])
            for tag in sorted(tags.optional - allowed):
                problems.append(f"optional tag {tag} is not valid for {tags.core}")
    else:
        if tags.core or tags.tip_size:
            problems.append("core/tip tags apply only to addition steps")
        allowed = set(_RULES["transfer_tags"]) if isinstance(step, TransferStep) else set()
        for tag in sorted(tags.optional - allowed):
            problems.append(f"optional tag {tag} is not valid here")
    return problems


def suggest_tags(
    step: Step,
    provider: PropertyProvider,
    ask: Callable[[str], str] | None = None,
) -> TagSet:
    """Deterministic default tags, with an optional model hook.

    Solids dispense as Powder, water-miscible liquids via SyringePump,
    immiscible liquids via PDT with a volume-appropriate tip. The hook may
    only refine optional tags; core validity is never delegated.
    """
    if isinstance(step, TransferStep):
        optional = frozenset(step.flags & {"StartVialTimer", "WaitVialTimer"})
        return TagSet(optional=optional)
    if not isinstance(step, AddStep):
        return TagSet()

    props = provider.lookup(step.chemical)
    if props.state == "solid":
        tags = TagSet(core="Powder")
    elif props.aqueous or props.water_miscible:
        tags = TagSet(core="SyringePump")
    else:
        largest = max(step.vials.values(), default=0.0)
        tip = "1000uLTip" if largest <= 1000 else "10mLTip"
        tags = TagSet(core="PDT", tip_size=tip)

    if ask is not None:
        reply = ask(
            f"Optional dispensing tags for adding {step.chemical} "
            f"({props.state}) with core {tags.core}? Reply with a comma-"
            f"separated subset of: "
            + ", ".join(_RULES["optional_by_core"].get(tags.core, []))
        )
        allowed = set(_RULES["optional_by_core"].get(tags.core, []))
        extra = {t.strip() for t in reply.split(",")} & allowed
        tags = TagSet(core=tags.core, tip_size=tags.tip_size, optional=frozenset(extra))
    return tags


def extract_chemicals(p: Procedure, provider: PropertyProvider) -> list[ChemicalProperties]:
    """Deduplicated properties for every chemical the procedure adds."""
    seen: dict[str, ChemicalProperties] = {}
    for step in p.steps:
        if isinstance(step, AddStep):
            key = canonical_name(step.chemical)
            if key not in seen:
                try:
                    seen[key] = provider.lookup(step.chemical)
                except UnknownChemical:
                    raise UnknownChemical(
                        f"cannot emit hardware file: unknown chemical {step.chemical!r}"
                    ) from None
    return list(seen.values())


def _fmt(value: float) -> str:
    return f"{value:g}"


def _sorted_vials(vials):
    return sorted(vials, key=lambda v: (v.row, v.col))


def emit(
    p: Procedure,
    tags: Mapping[int, TagSet],
    provider: PropertyProvider,
    settings: Mapping[str, str] | None = None,
) -> bytes:
    """Serialize the three-section hardware document as deterministic XML."""
    violations = validate_procedure(p)
    if violations:
        raise ValidationFailed([str(v) for v in violations])
    tag_problems: list[str] = []
    for idx, step in enumerate(p.steps):
        step_tags = tags.get(idx, TagSet())
        tag_problems += [f"step {idx + 1}: {m}" for m in validate_tag_set(step, step_tags, provider)]
    if tag_problems:
        raise InvalidTagSet("; ".join(tag_problems))

    root = ET.Element("experiment")

    chem_el = ET.SubElement(root, "chemicals")
    for props in extract_chemicals(p, provider):
        ET.SubElement(
            chem_el,
            "chemical",
            {
                "name": props.name,
                "molecular-weight": _fmt(props.molecular_weight),
                "density": _fmt(props.density),
                "state": props.state,
            },
        )

    params_el = ET.SubElement(root, "parameters")
    for plate in sorted(p.arrays):
        array = p.arrays[plate]
        ET.SubElement(
            params_el,
            "plate",
            {
                "id": plate,
                "rows": str(array.rows),
                "cols": str(array.cols),
                "vial-volume-ml": _fmt(array.vial_volume_ml),
                "cappable": "true" if array.cappable else "false",
            },
        )
    for name in sorted(settings or {}):
        ET.SubElement(params_el, "setting", {"name": name, "value": str(settings[name])})

    steps_el = ET.SubElement(root, "steps")
    for idx, step in enumerate(p.steps):
        step_tags = tags.get(idx, TagSet())
        if isinstance(step, AddStep):
            el = ET.SubElement(
                steps_el,
                "step",
                {
                    "index": str(idx + 1),
                    "type": "Add",
                    "plate": step.plate,
                    "chemical": step.chemical,
                    "unit": step.unit,
                },
            )
            _append_tags(el, step_tags)
            for vial in _sorted_vials(step.vials):
                ET.SubElement(el, "vial", {"position": str(vial), "value": _fmt(step.vials[vial])})
        elif isinstance(step, SetStep):
            el = ET.SubElement(
                steps_el,
                "step",
                {
                    "index": str(idx + 1),
                    "type": "Set",
                    "plate": step.plate,
                    "parameter": step.parameter.value,
                },
            )
            _append_tags(el, step_tags)
            for vial in _sorted_vials(step.vials):
                ET.SubElement(el, "vial", {"position": str(vial), "value": _fmt(step.vials[vial])})
        elif isinstance(step, TransferStep):
            attrs = {
                "index": str(idx + 1),
                "type": "Transfer",
                "mode": step.mode,
                "source-plate": step.source_plate,
                "dest-plate": step.dest_plate,
            }
            if step.flags:
                attrs["flags"] = ",".join(sorted(step.flags))
            el = ET.SubElement(steps_el, "step", attrs)
            _append_tags(el, step_tags)
            for vial in _sorted_vials(step.mapping):
                dest, amount = step.mapping[vial]
                ET.SubElement(
                    el,
                    "move",
                    {
                        "source": str(vial),
                        "dest": str(dest),
                        "amount": _fmt(amount.value),
                        "unit": amount.unit,
                    },
                )

    ET.indent(root, space="  ")
    document = ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"
    problems = validate_document(document)
    if problems:
        raise ValidationFailed(problems)
    return document


def _append_tags(el: ET.Element, tags: TagSet) -> None:
    if not (tags.core or tags.tip_size or tags.optional):
        return
    attrs: dict[str, str] = {}
    if tags.core:
        attrs["core"] = tags.core
    if tags.tip_size:
        attrs["tip-size"] = tags.tip_size
    if tags.optional:
        attrs["optional"] = ",".join(sorted(tags.optional))
    ET.SubElement(el, "tags", attrs)


def _dictify(el: ET.Element) -> dict:
    return {
        "tag": el.tag,
        "attributes": dict(el.attrib),
        "children": [_dictify(child) for child in el],
    }


def _load_schema() -> dict:
    text = resources.files("platebench.data").joinpath("hardware_schema.json").read_text("utf-8")
    return json.loads(text)


_SCHEMA = _load_schema()


def validate_document(document: bytes) -> list[str]:
    """Structural validation against the bundled schema plus cross-references."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        return [f"not well-formed XML: {exc}"]
    problems: list[str] = []
    validator = jsonschema.Draft202012Validator(_SCHEMA)
    for error in validator.iter_errors(_dictify(root)):
        path = "/".join(str(p) for p in error.absolute_path)
        problems.append(f"{path or '<root>'}: {error.message}")

    declared = {
        canonical_name(chem.get("name", ""))
        for chem in root.findall("./chemicals/chemical")
    }
    for step in root.findall("./steps/step"):
        name = step.get("chemical")
        if name and canonical_name(name) not in declared:
            problems.append(f"step {step.get('index')}: chemical {name!r} not declared")
    return problems
