"""Protocol step language: types, parser, printer and structural validation.

A procedure is an ordered list of steps. There are three step shapes:

    Add <chemical> (<unit>) to vials in Plate N. {A1: 5, A2: 10}
    Set <Parameter> in vials in Plate N. {A1: 60, A2: 60}
    Uniform transfer from Plate 1 to Plate 2. (MoveVial, StartVialTimer) {A1: [A1, 5uL]}

The parser is line/tag oriented and deliberately strict: anything outside the
documented sentence shapes raises ``StepSyntaxError``. Casing and spacing are
tolerated ("plate 1" == "Plate 1", "{A1:.5}" == "{A1: 0.5}") because real
inputs vary, but the structure is not negotiable -- downstream evaluation
needs deterministic step objects, not best-effort guesses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Union


class StepSyntaxError(ValueError):
    """Malformed step structure: bad tags, braces, nesting, missing plate."""


class StepValueError(ValueError):
    """Structurally valid step with a bad value (non-numeric, unknown word)."""


class UnknownVialSize(ValueError):
    """Requested vial volume is not one of the seven catalog sizes."""


# ---------------------------------------------------------------------------
# Vials and arrays
# ---------------------------------------------------------------------------

_ROWS = "ABCDEFGH"


@dataclass(frozen=True, order=True)
class VialIndex:
    """A single vial position, row letter (A-H) plus 1-based column."""

    row: str
    col: int

    def __post_init__(self):
        if self.row not in _ROWS:
            raise StepValueError(f"vial row must be one of A-H, got {self.row!r}")
        if not 1 <= self.col <= 12:
            raise StepValueError(f"vial column must be 1-12, got {self.col}")

    @classmethod
    def parse(cls, text: str) -> "VialIndex":
        m = re.fullmatch(r"\s*([A-Za-z])\s*(\d{1,2})\s*", text)
        if not m:
            raise StepSyntaxError(f"not a vial index: {text!r}")
        return cls(m.group(1).upper(), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.row}{self.col}"


# The seven standard vial sizes and their array footprints. The 1, 1.2 and
# 125 mL arrays cannot be capped or uncapped automatically.
_ARRAY_CATALOG: dict[float, tuple[int, int, bool]] = {
    1.0: (8, 12, False),
    1.2: (8, 12, False),
    2.0: (6, 8, True),
    4.0: (4, 6, True),
    8.0: (4, 6, True),
    20.0: (2, 4, True),
    125.0: (1, 2, False),
}


@dataclass(frozen=True)
class ArraySpec:
    """A vial array: grid dimensions, per-vial volume, cappability."""

    rows: int
    cols: int
    vial_volume_ml: float
    cappable: bool

    def __post_init__(self):
        entry = _ARRAY_CATALOG.get(float(self.vial_volume_ml))
        if entry is None or entry != (self.rows, self.cols, self.cappable):
            raise UnknownVialSize(
                f"{self.rows}x{self.cols} / {self.vial_volume_ml} mL "
                f"(cappable={self.cappable}) is not a catalog array"
            )

    def contains(self, vial: VialIndex) -> bool:
        return _ROWS.index(vial.row) < self.rows and vial.col <= self.cols


def array_for_vial_volume(volume_ml: float) -> ArraySpec:
    """Return the catalog array for one of the seven standard vial volumes."""
    entry = _ARRAY_CATALOG.get(float(volume_ml))
    if entry is None:
        raise UnknownVialSize(f"no standard vial size of {volume_ml} mL")
    rows, cols, cappable = entry
    return ArraySpec(rows, cols, float(volume_ml), cappable)


def catalog_volumes() -> tuple[float, ...]:
    return tuple(sorted(_ARRAY_CATALOG))


# ---------------------------------------------------------------------------
# Amounts, actions, parameters
# ---------------------------------------------------------------------------

_UNIT_ALIASES = {"mg": "mg", "ul": "uL", "µl": "uL", "μl": "uL"}


def format_value(v: float) -> str:
    """Shortest exact decimal form: float(format_value(v)) == v always."""
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e16 else repr(float(v))


def _canon_unit(text: str) -> str:
    unit = _UNIT_ALIASES.get(text.strip().lower())
    if unit is None:
        raise StepSyntaxError(f"unknown unit {text!r} (expected mg or uL)")
    return unit


@dataclass(frozen=True)
class Amount:
    """A dispensed quantity: mg for solids, uL for liquids."""

    value: float
    unit: str  # "mg" | "uL"

    def __post_init__(self):
        if self.unit not in ("mg", "uL"):
            raise StepValueError(f"amount unit must be mg or uL, got {self.unit!r}")
        if self.value < 0:
            raise StepValueError(f"amount must be nonnegative, got {self.value}")

    def __str__(self) -> str:
        return f"{format_value(self.value)}{self.unit}"


class Action(Enum):
    ADD = "Add"
    SET = "Set"
    TRANSFER = "Transfer"
    UNKNOWN = "Unknown"


class ProcessingParameter(Enum):
    HEATING_TEMP = "HeatingTemp"
    CAP = "Cap"
    UNCAP = "Uncap"
    DELAY = "Delay"
    STIR_RATE = "StirRate"
    VORTEX_RATE = "VortexRate"
    VIAL_TIMERS = "VialTimers"


_PARAM_BY_WORD = {p.value.lower(): p for p in ProcessingParameter}

TRANSFER_FLAGS = ("MoveVial", "StartVialTimer", "WaitVialTimer")
_FLAG_BY_WORD = {f.lower(): f for f in TRANSFER_FLAGS}
# The prose around timer examples pluralizes the flag names; accept both.
_FLAG_BY_WORD.update({f.lower() + "s": f for f in TRANSFER_FLAGS if f != "MoveVial"})


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AddStep:
    chemical: str
    unit: str  # "mg" | "uL"
    plate: str
    vials: dict[VialIndex, float]

    def plates(self) -> tuple[str, ...]:
        return (self.plate,)


@dataclass(frozen=True)
class SetStep:
    parameter: ProcessingParameter
    plate: str
    vials: dict[VialIndex, float]

    def plates(self) -> tuple[str, ...]:
        return (self.plate,)


@dataclass(frozen=True)
class TransferStep:
    mode: str  # "Uniform" | "Discrete"
    source_plate: str
    dest_plate: str
    mapping: dict[VialIndex, tuple[VialIndex, Amount]]
    flags: frozenset[str] = field(default_factory=frozenset)

    def plates(self) -> tuple[str, ...]:
        return (self.source_plate, self.dest_plate)


Step = Union[AddStep, SetStep, TransferStep]


@dataclass(frozen=True)
class Procedure:
    """An ordered list of steps plus optional plate -> array bindings."""

    steps: tuple[Step, ...]
    arrays: dict[str, ArraySpec] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.steps)

    def referenced_plates(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for step in self.steps:
            for plate in step.plates():
                seen.setdefault(plate)
        return tuple(seen)

    def with_steps(self, steps: Iterable[Step]) -> "Procedure":
        return Procedure(tuple(steps), dict(self.arrays))


@dataclass(frozen=True)
class NormalizedStep:
    """The ``Action | Parameter | Plate`` projection used for step matching."""

    action: Action
    parameter: str
    plate: str


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_STEP_TAG_RE = re.compile(r"<step>(.*?)</step>", re.DOTALL | re.IGNORECASE)
_FINAL_TAG_RE = re.compile(r"<final-steps>(.*?)</final-steps>", re.DOTALL | re.IGNORECASE)
_PLATE_RE = re.compile(r"\bplate\s*(\d+)\b", re.IGNORECASE)
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def _canon_plate(text: str) -> str:
    m = _PLATE_RE.search(text)
    if not m:
        raise StepSyntaxError(f"missing plate reference in {text!r}")
    return f"Plate {int(m.group(1))}"


def _strip_step_tags(text: str) -> str:
    m = _STEP_TAG_RE.fullmatch(text.strip())
    if m:
        return m.group(1).strip()
    if "<step>" in text or "</step>" in text:
        raise StepSyntaxError("unbalanced <step> tags")
    return text.strip()


def _split_braces(text: str) -> tuple[str, str]:
    """Split a step into (sentence, brace body); rejects nested dictionaries."""
    open_idx = text.find("{")
    if open_idx < 0:
        raise StepSyntaxError("step has no { } vial dictionary")
    depth = 0
    close_idx = -1
    for i, ch in enumerate(text[open_idx:], start=open_idx):
        if ch == "{":
            depth += 1
            if depth > 1:
                raise StepSyntaxError("vial dictionary must not be nested")
        elif ch == "}":
            depth -= 1
            if depth == 0:
                close_idx = i
                break
            if depth < 0:
                raise StepSyntaxError("unbalanced braces in vial dictionary")
    if close_idx < 0:
        raise StepSyntaxError("unterminated vial dictionary")
    if text[close_idx + 1 :].strip():
        raise StepSyntaxError("unexpected text after vial dictionary")
    return text[:open_idx].strip(), text[open_idx + 1 : close_idx]


def _split_entries(body: str) -> list[str]:
    """Split dictionary body on top-level commas (commas in [..] are values)."""
    entries: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise StepSyntaxError("unbalanced brackets in vial dictionary")
        if ch == "," and depth == 0:
            entries.append("".join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise StepSyntaxError("unbalanced brackets in vial dictionary")
    entries.append("".join(current))
    return [e for e in (e.strip() for e in entries) if e]


def _parse_value(text: str) -> float:
    text = text.strip()
    if not text or text.startswith("."):
        # Leading-dot decimals (".5") are legal and common in real inputs.
        if re.fullmatch(r"\.\d+", text):
            return float("0" + text)
    if _NUMBER_RE.fullmatch(text):
        return float(text)
    raise StepValueError(f"non-numeric vial value {text!r}")


def _parse_vial_map(body: str) -> dict[VialIndex, float]:
    entries = _split_entries(body)
    if not entries:
        raise StepSyntaxError("empty vial dictionary")
    vials: dict[VialIndex, float] = {}
    for entry in entries:
        if "..." in entry or entry.strip(". ") == "":
            raise StepSyntaxError(f"ambiguous placeholder entry {entry!r}")
        key, sep, value = entry.partition(":")
        if not sep:
            raise StepSyntaxError(f"entry {entry!r} is not key: value")
        vial = VialIndex.parse(key)
        if vial in vials:
            raise StepSyntaxError(f"duplicate vial key {vial}")
        vials[vial] = _parse_value(value)
    return vials


_AMOUNT_RE = re.compile(
    r"(?P<value>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?P<unit>mg|ul|µl|μl)",
    re.IGNORECASE,
)


def _parse_transfer_map(body: str) -> dict[VialIndex, tuple[VialIndex, Amount]]:
    entries = _split_entries(body)
    if not entries:
        raise StepSyntaxError("empty transfer dictionary")
    mapping: dict[VialIndex, tuple[VialIndex, Amount]] = {}
    for entry in entries:
        key, sep, value = entry.partition(":")
        if not sep:
            raise StepSyntaxError(f"entry {entry!r} is not key: value")
        source = VialIndex.parse(key)
        if source in mapping:
            raise StepSyntaxError(f"duplicate vial key {source}")
        value = value.strip()
        m = re.fullmatch(r"\[\s*([A-Za-z]\s*\d{1,2})\s*,\s*([^\]]+?)\s*\]", value)
        if not m:
            raise StepSyntaxError(
                f"transfer entry for {source} must be [dest_vial, amount], got {value!r}"
            )
        dest = VialIndex.parse(m.group(1))
        amount_text = m.group(2)
        am = _AMOUNT_RE.fullmatch(amount_text.strip())
        if not am:
            # Bare numbers are rejected on purpose: a transfer amount without a
            # unit cannot be dispatched to hardware.
            raise StepSyntaxError(
                f"transfer amount {amount_text!r} must include a unit (mg or uL)"
            )
        mapping[source] = (dest, Amount(float(am.group("value")), _canon_unit(am.group("unit"))))
    return mapping


_ADD_SENTENCE_RE = re.compile(
    r"^add\s+(?P<name>.+?)\s*\(\s*(?P<unit>mg|ul|µl|μl)\s*\)\s*"
    r"(?:to|in)\s+(?:the\s+)?(?:vials?\s+(?:in|of)\s+)?(?P<plate>plate\s*\d+)\s*\.?$",
    re.IGNORECASE,
)

_TRANSFER_SENTENCE_RE = re.compile(
    r"^(?:(?P<mode>uniform|discrete)\s+)?transfer\s+(?:\w+\s+)?from\s+"
    r"(?P<src>plate\s*\d+)\s+to\s+(?P<dst>plate\s*\d+)\s*\.?$",
    re.IGNORECASE,
)

_FLAGS_RE = re.compile(r"\(([^()]*)\)\s*$")


def parse_step(text: str) -> Step:
    """Parse one step (with or without surrounding ``<step>`` tags)."""
    inner = _strip_step_tags(text)
    sentence, body = _split_braces(inner)
    if not sentence:
        raise StepSyntaxError("step has no sentence before the vial dictionary")

    first_word = sentence.split(None, 1)[0].lower()

    if first_word == "add":
        m = _ADD_SENTENCE_RE.fullmatch(sentence)
        if not m:
            raise StepSyntaxError(f"not a valid Add step: {sentence!r}")
        return AddStep(
            chemical=" ".join(m.group("name").split()),
            unit=_canon_unit(m.group("unit")),
            plate=_canon_plate(m.group("plate")),
            vials=_parse_vial_map(body),
        )

    if first_word == "set":
        rest = sentence.split(None, 1)
        if len(rest) < 2:
            raise StepSyntaxError("Set step names no parameter")
        words = rest[1].split()
        param = _PARAM_BY_WORD.get(words[0].rstrip(".,").lower())
        if param is None:
            raise StepValueError(f"unknown processing parameter {words[0]!r}")
        plates = _PLATE_RE.findall(sentence)
        if not plates:
            raise StepSyntaxError(f"missing plate reference in {sentence!r}")
        if len(set(plates)) > 1:
            raise StepSyntaxError("Set step references more than one plate")
        return SetStep(
            parameter=param,
            plate=f"Plate {int(plates[-1])}",
            vials=_parse_vial_map(body),
        )

    if first_word in ("uniform", "discrete", "transfer"):
        flags: set[str] = set()
        fm = _FLAGS_RE.search(sentence)
        if fm:
            for word in fm.group(1).split(","):
                word = word.strip()
                if not word:
                    continue
                flag = _FLAG_BY_WORD.get(word.lower())
                if flag is None:
                    raise StepSyntaxError(f"unknown transfer flag {word!r}")
                flags.add(flag)
            sentence = sentence[: fm.start()].strip()
        m = _TRANSFER_SENTENCE_RE.fullmatch(sentence)
        if not m:
            raise StepSyntaxError(f"not a valid transfer step: {sentence!r}")
        mode = (m.group("mode") or "discrete").capitalize()
        return TransferStep(
            mode=mode,
            source_plate=_canon_plate(m.group("src")),
            dest_plate=_canon_plate(m.group("dst")),
            mapping=_parse_transfer_map(body),
            flags=frozenset(flags),
        )

    raise StepSyntaxError(f"step must start with Add, Set or Transfer: {sentence!r}")


def extract_final_steps(message: str) -> Procedure | None:
    """Extract and parse a ``<final-steps>`` block; None when absent.

    The block is accepted or rejected as a whole: if any inner step fails to
    parse, a ``StepSyntaxError`` carrying per-step diagnostics is raised.
    """
    m = _FINAL_TAG_RE.search(message)
    if not m:
        return None
    steps: list[Step] = []
    problems: list[str] = []
    for i, sm in enumerate(_STEP_TAG_RE.finditer(m.group(1)), start=1):
        try:
            steps.append(parse_step(sm.group(1)))
        except ValueError as exc:
            problems.append(f"step {i}: {exc}")
    if problems:
        raise StepSyntaxError(
            "final-steps block rejected:\n" + "\n".join(problems)
        )
    return Procedure(tuple(steps))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _sorted_vials(vials: Mapping[VialIndex, object]) -> list[VialIndex]:
    return sorted(vials, key=lambda v: (v.row, v.col))


def render_step(step: Step) -> str:
    """Print a step in canonical form; ``parse_step(render_step(s)) == s``."""
    if isinstance(step, AddStep):
        body = ", ".join(f"{v}: {format_value(step.vials[v])}" for v in _sorted_vials(step.vials))
        return f"Add {step.chemical} ({step.unit}) to vials in {step.plate}. {{{body}}}"
    if isinstance(step, SetStep):
        body = ", ".join(f"{v}: {format_value(step.vials[v])}" for v in _sorted_vials(step.vials))
        return f"Set {step.parameter.value} in vials in {step.plate}. {{{body}}}"
    if isinstance(step, TransferStep):
        body = ", ".join(
            f"{v}: [{step.mapping[v][0]}, {step.mapping[v][1]}]"
            for v in _sorted_vials(step.mapping)
        )
        flags = ""
        if step.flags:
            ordered = [f for f in TRANSFER_FLAGS if f in step.flags]
            flags = f" ({', '.join(ordered)})"
        return (
            f"{step.mode} transfer from {step.source_plate} to "
            f"{step.dest_plate}.{flags} {{{body}}}"
        )
    raise TypeError(f"not a step: {step!r}")


def render_procedure(p: Procedure) -> str:
    lines = ["<final-steps>"]
    lines += [f"<step> {render_step(s)} </step>" for s in p.steps]
    lines.append("</final-steps>")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Normalization and validation
# ---------------------------------------------------------------------------


def normalize_step(step: object) -> NormalizedStep:
    """Project a step onto the ``Action | Parameter | Plate`` triple."""
    if isinstance(step, AddStep):
        return NormalizedStep(Action.ADD, step.chemical, step.plate)
    if isinstance(step, SetStep):
        return NormalizedStep(Action.SET, step.parameter.value, step.plate)
    if isinstance(step, TransferStep):
        return NormalizedStep(Action.TRANSFER, "transfer", step.source_plate)
    return NormalizedStep(Action.UNKNOWN, "", "")


@dataclass(frozen=True)
class Violation:
    rule: str
    step_index: int | None
    message: str

    def __str__(self) -> str:
        where = f"step {self.step_index + 1}: " if self.step_index is not None else ""
        return f"[{self.rule}] {where}{self.message}"


# Physical limits for processing parameters.
HEATING_TEMP_RANGE = (25.0, 180.0)
STIR_RATE_MAX = 700.0
VORTEX_RATE_MAX = 1000.0


def _check_parameter_values(param: ProcessingParameter, values, idx, out):
    for vial, value in values.items():
        if param is ProcessingParameter.HEATING_TEMP:
            lo, hi = HEATING_TEMP_RANGE
            if not lo <= value <= hi:
                out.append(Violation(
                    "heating-temp-range", idx,
                    f"HeatingTemp {value:g} for {vial} outside {lo:g}-{hi:g} degC"))
        elif param is ProcessingParameter.STIR_RATE:
            if not 0 <= value <= STIR_RATE_MAX:
                out.append(Violation(
                    "stir-rate-limit", idx,
                    f"StirRate {value:g} for {vial} exceeds {STIR_RATE_MAX:g} rpm"))
        elif param is ProcessingParameter.VORTEX_RATE:
            if not 0 <= value <= VORTEX_RATE_MAX:
                out.append(Violation(
                    "vortex-rate-limit", idx,
                    f"VortexRate {value:g} for {vial} exceeds {VORTEX_RATE_MAX:g} rpm"))
        elif param in (ProcessingParameter.CAP, ProcessingParameter.UNCAP):
            if value not in (0.0, 1.0):
                out.append(Violation(
                    "cap-value", idx,
                    f"{param.value} value for {vial} must be 0 or 1, got {value:g}"))
        else:  # Delay, VialTimers: nonnegative minutes
            if value < 0:
                out.append(Violation(
                    "negative-duration", idx,
                    f"{param.value} for {vial} must be nonnegative, got {value:g}"))


def validate_procedure(p: Procedure) -> list[Violation]:
    """Structural validation; violations are data, an empty list means valid."""
    out: list[Violation] = []
    for idx, step in enumerate(p.steps):
        if isinstance(step, SetStep):
            _check_parameter_values(step.parameter, step.vials, idx, out)
            array = p.arrays.get(step.plate)
            if (
                array is not None
                and not array.cappable
                and step.parameter in (ProcessingParameter.CAP, ProcessingParameter.UNCAP)
                and any(v == 1.0 for v in step.vials.values())
            ):
                out.append(Violation(
                    "uncappable-array", idx,
                    f"{step.plate} uses {array.vial_volume_ml:g} mL vials which "
                    "cannot be capped or uncapped automatically"))
        if isinstance(step, TransferStep) and step.source_plate == step.dest_plate:
            out.append(Violation(
                "transfer-plates", idx,
                f"transfer must reference two distinct plates, got {step.source_plate}"))
        # Bounds against bound arrays, for every vial the step touches.
        touched: list[tuple[str, VialIndex]] = []
        if isinstance(step, (AddStep, SetStep)):
            touched = [(step.plate, v) for v in step.vials]
        elif isinstance(step, TransferStep):
            touched = [(step.source_plate, v) for v in step.mapping]
            touched += [(step.dest_plate, d) for d, _ in step.mapping.values()]
        for plate, vial in touched:
            array = p.arrays.get(plate)
            if array is not None and not array.contains(vial):
                out.append(Violation(
                    "vial-bounds", idx,
                    f"vial {vial} outside the {array.rows}x{array.cols} array of {plate}"))
    return out
