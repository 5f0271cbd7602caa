"""Post-generation validation and repair of final steps.

Seven guided checks run as deterministic rules in a fixed order (efficiency,
units, delays, plates, solvents, transfer, additions); each returns findings,
and merge-style fixes can be applied automatically. The unguided mode hands
the whole procedure to a chat model for holistic review, bounded at five
iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .chem import PropertyProvider, StaticTableProvider, UnknownChemical
from .evaluate import canonical_text
from .hardware import TagSet
from .llm import ChatClient, Message
from .steps import (
    AddStep,
    ArraySpec,
    Procedure,
    ProcessingParameter,
    SetStep,
    Step,
    TransferStep,
    extract_final_steps,
    render_procedure,
    validate_procedure,
)

CHECK_ORDER = ("efficiency", "units", "delays", "plates", "solvents", "transfer", "additions")

UNGUIDED_ITERATION_LIMIT = 5
NO_CHANGES_TOKEN = "NO_CHANGES"


@dataclass(frozen=True)
class CheckFinding:
    check_id: str
    severity: str  # "error" | "warning"
    step_index: int | None
    message: str
    # A deterministic repair, when one exists: the steps at ``replaces`` are
    # substituted by ``suggested_steps`` (in place of the first index).
    replaces: tuple[int, ...] = ()
    suggested_steps: tuple[Step, ...] = ()

    def to_dict(self) -> dict:
        return {
            "check": self.check_id,
            "severity": self.severity,
            "step_index": self.step_index,
            "message": self.message,
            "has_fix": bool(self.replaces),
        }


@dataclass
class CheckContext:
    """Experiment facts the checks need beyond the steps themselves."""

    arrays: dict[str, ArraySpec] = field(default_factory=dict)
    target_volumes_ul: dict[str, float] = field(default_factory=dict)
    solvent_tolerance: float = 0.01  # fraction of the target volume
    tags: Mapping[int, TagSet] | None = None
    auto_fix: bool = False
    # Working-volume screening (10-80% of vial volume) is advisory only and
    # off by default; the bound is unit-ambiguous in the source material.
    check_working_volume: bool = False


@dataclass(frozen=True)
class SelfCheckOutcome:
    revised: Procedure
    findings: tuple[CheckFinding, ...]
    iterations: int
    converged: bool

    @property
    def errors(self) -> tuple[CheckFinding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")


def _plates_of(step: Step) -> tuple[str, ...]:
    return step.plates()


# ---------------------------------------------------------------------------
# The seven guided checks
# ---------------------------------------------------------------------------


def refine_efficiency(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Each chemical should be added to a plate in as few steps as possible."""
    findings: list[CheckFinding] = []
    last_add: dict[tuple[str, str], int] = {}
    for idx, step in enumerate(p.steps):
        if not isinstance(step, AddStep):
            continue
        key = (canonical_text(step.chemical), step.plate)
        prev = last_add.get(key)
        if prev is not None and not _processing_between(p, prev, idx, step.plate):
            first = p.steps[prev]
            merged_vials = dict(first.vials)
            for vial, value in step.vials.items():
                merged_vials[vial] = merged_vials.get(vial, 0.0) + value
            fix: tuple[Step, ...] = ()
            if first.unit == step.unit:
                fix = (replace(first, vials=merged_vials),)
            findings.append(
                CheckFinding(
                    "efficiency",
                    "error",
                    idx,
                    f"{step.chemical} is added to {step.plate} in more than one "
                    f"step (steps {prev + 1} and {idx + 1}) with nothing in "
                    f"between; merge the vial maps",
                    replaces=(prev, idx) if fix else (),
                    suggested_steps=fix,
                )
            )
        last_add[key] = idx
    return findings


def _processing_between(p: Procedure, start: int, end: int, plate: str) -> bool:
    for step in p.steps[start + 1 : end]:
        if isinstance(step, (SetStep, TransferStep)) and plate in _plates_of(step):
            return True
    return False


def refine_units(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Solids are added in mg, liquids in uL."""
    findings: list[CheckFinding] = []
    for idx, step in enumerate(p.steps):
        if not isinstance(step, AddStep):
            continue
        try:
            state = props.lookup(step.chemical).state
        except UnknownChemical:
            findings.append(
                CheckFinding(
                    "units", "warning", idx,
                    f"cannot verify units for unknown chemical {step.chemical!r}",
                )
            )
            continue
        if state == "solid" and step.unit != "mg":
            findings.append(
                CheckFinding(
                    "units", "error", idx,
                    f"{step.chemical} is a solid and must be added in mg, not {step.unit}",
                )
            )
        elif state == "liquid" and step.unit != "uL":
            findings.append(
                CheckFinding(
                    "units", "error", idx,
                    f"{step.chemical} is a liquid and must be added in uL, not {step.unit}",
                )
            )
    return findings


_RATE_PARAMS = (ProcessingParameter.STIR_RATE, ProcessingParameter.VORTEX_RATE)


def _is_active_setting(step: SetStep) -> bool:
    peak = max(step.vials.values(), default=0.0)
    if step.parameter is ProcessingParameter.HEATING_TEMP:
        return peak > 25.0
    if step.parameter in _RATE_PARAMS:
        return peak > 0.0
    return False


def _wait_satisfied(p: Procedure, idx: int, plate: str, param: ProcessingParameter) -> bool:
    """A later Delay on the plate, or a timed-wait transfer touching it,
    before the parameter is changed again."""
    for step in p.steps[idx + 1 :]:
        if isinstance(step, SetStep) and step.plate == plate:
            if step.parameter is ProcessingParameter.DELAY and max(step.vials.values()) > 0:
                return True
            if step.parameter is param:
                return False
        if (
            isinstance(step, TransferStep)
            and plate in _plates_of(step)
            and "WaitVialTimer" in step.flags
        ):
            return True
    return False


def refine_delays(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Heating, stirring and vortexing need time to act, and rates need zeroing."""
    findings: list[CheckFinding] = []
    for idx, step in enumerate(p.steps):
        if not isinstance(step, SetStep) or not _is_active_setting(step):
            continue
        if not _wait_satisfied(p, idx, step.plate, step.parameter):
            findings.append(
                CheckFinding(
                    "delays", "error", idx,
                    f"{step.parameter.value} on {step.plate} has no subsequent "
                    f"delay (or timed wait) before it changes or the procedure ends",
                )
            )
        if step.parameter in _RATE_PARAMS and not _reset_later(p, idx, step):
            findings.append(
                CheckFinding(
                    "delays", "error", idx,
                    f"{step.parameter.value} on {step.plate} is never zeroed "
                    f"after its delay",
                )
            )
        if step.parameter is ProcessingParameter.STIR_RATE:
            findings.append(
                CheckFinding(
                    "delays", "warning", idx,
                    "vortexing is preferred to stirring unless the user asked for it",
                )
            )
    return findings


def _reset_later(p: Procedure, idx: int, setting: SetStep) -> bool:
    for step in p.steps[idx + 1 :]:
        if (
            isinstance(step, SetStep)
            and step.plate == setting.plate
            and step.parameter is setting.parameter
            and max(step.vials.values(), default=0.0) == 0.0
        ):
            return True
    return False


def refine_plates(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Vials must sit inside their plate's array and caps must be possible."""
    findings: list[CheckFinding] = []
    arrays = ctx.arrays or p.arrays
    bound = Procedure(p.steps, dict(arrays))
    for violation in validate_procedure(bound):
        if violation.rule in ("vial-bounds", "uncappable-array"):
            findings.append(
                CheckFinding("plates", "error", violation.step_index, violation.message)
            )
    for idx, step in enumerate(p.steps):
        for plate in _plates_of(step):
            if not plate.startswith("Plate "):
                findings.append(
                    CheckFinding(
                        "plates", "error", idx,
                        f"inconsistent plate name {plate!r}; use 'Plate N'",
                    )
                )
            elif arrays and plate not in arrays:
                findings.append(
                    CheckFinding(
                        "plates", "warning", idx,
                        f"{plate} has no bound vial array",
                    )
                )
    return findings


def refine_solvents(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Per-vial liquid volumes should hit the target, and solvents are named."""
    findings: list[CheckFinding] = []
    for idx, step in enumerate(p.steps):
        if isinstance(step, AddStep) and canonical_text(step.chemical) == "solvent":
            findings.append(
                CheckFinding(
                    "solvents", "error", idx,
                    "name the solvent explicitly (e.g. 'water solvent', not 'solvent')",
                )
            )
    totals: dict[tuple[str, str], float] = {}
    for step in p.steps:
        if isinstance(step, AddStep) and step.unit == "uL":
            for vial, value in step.vials.items():
                key = (step.plate, str(vial))
                totals[key] = totals.get(key, 0.0) + value
    if not ctx.target_volumes_ul:
        if totals:
            findings.append(
                CheckFinding(
                    "solvents", "warning", None,
                    "no target volume supplied; solvent volume checks skipped",
                )
            )
        return findings
    for plate, target in ctx.target_volumes_ul.items():
        vials = sorted(v for (pl, v) in totals if pl == plate)
        for vial in vials:
            total = totals[(plate, vial)]
            if target > 0 and abs(total - target) / target > ctx.solvent_tolerance:
                findings.append(
                    CheckFinding(
                        "solvents", "error", None,
                        f"{plate} vial {vial} sums to {total:g} uL, off the "
                        f"{target:g} uL target by more than "
                        f"{ctx.solvent_tolerance:.0%}",
                    )
                )
        if ctx.check_working_volume:
            array = (ctx.arrays or p.arrays).get(plate)
            if array is not None:
                capacity = array.vial_volume_ml * 1000.0
                if not 0.10 * capacity <= target <= 0.80 * capacity:
                    findings.append(
                        CheckFinding(
                            "solvents", "warning", None,
                            f"{plate} working volume {target:g} uL is outside "
                            f"10-80% of the {capacity:g} uL vials",
                        )
                    )
    return findings


def refine_transfer(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Transfers must be self-consistent and timer flags must pair up."""
    findings: list[CheckFinding] = []
    arrays = ctx.arrays or p.arrays
    timers_set_before: list[int] = [
        idx
        for idx, step in enumerate(p.steps)
        if isinstance(step, SetStep) and step.parameter is ProcessingParameter.VIAL_TIMERS
    ]
    starts: list[int] = []
    for idx, step in enumerate(p.steps):
        if not isinstance(step, TransferStep):
            continue
        amounts = {(a.value, a.unit) for _, a in step.mapping.values()}
        if step.mode == "Uniform" and len(amounts) > 1:
            findings.append(
                CheckFinding(
                    "transfer", "error", idx,
                    "uniform transfer moves unequal amounts; use Discrete or fix the map",
                )
            )
        if arrays:
            for plate in _plates_of(step):
                if plate not in arrays:
                    findings.append(
                        CheckFinding(
                            "transfer", "warning", idx,
                            f"transfer references unbound plate {plate}",
                        )
                    )
        if "StartVialTimer" in step.flags:
            if not any(t < idx for t in timers_set_before):
                findings.append(
                    CheckFinding(
                        "transfer", "error", idx,
                        "StartVialTimer transfer has no prior Set VialTimers step",
                    )
                )
            starts.append(idx)
        if "WaitVialTimer" in step.flags and not any(s < idx for s in starts):
            findings.append(
                CheckFinding(
                    "transfer", "error", idx,
                    "WaitVialTimer transfer has no earlier StartVialTimer transfer",
                )
            )
    return findings


def refine_additions(p: Procedure, ctx: CheckContext, props: PropertyProvider) -> list[CheckFinding]:
    """Addition structure: tags, one chemical per step, solids before liquids."""
    findings: list[CheckFinding] = []
    tags = ctx.tags or {}
    # (plate, vial) -> earliest non-aqueous liquid addition index
    first_liquid: dict[tuple[str, str], int] = {}
    for idx, step in enumerate(p.steps):
        if not isinstance(step, AddStep):
            continue
        name = canonical_text(step.chemical)
        if " and " in f" {name} " or "," in name:
            findings.append(
                CheckFinding(
                    "additions", "error", idx,
                    f"{step.chemical!r} looks like several chemicals; add one per step",
                )
            )
        try:
            props_entry = props.lookup(step.chemical)
        except UnknownChemical:
            continue
        step_tags = tags.get(idx)
        if step_tags is not None:
            if props_entry.state == "solid" and step_tags.core != "Powder":
                findings.append(
                    CheckFinding(
                        "additions", "error", idx,
                        f"solid {step.chemical} must carry the Powder tag",
                    )
                )
            if props_entry.state == "liquid" and step_tags.core not in ("SyringePump", "PDT"):
                findings.append(
                    CheckFinding(
                        "additions", "error", idx,
                        f"liquid {step.chemical} needs a dispense method (SyringePump or PDT)",
                    )
                )
        for vial in step.vials:
            key = (step.plate, str(vial))
            if props_entry.state == "liquid" and not props_entry.aqueous:
                first_liquid.setdefault(key, idx)
            if props_entry.state == "solid" and key in first_liquid:
                findings.append(
                    CheckFinding(
                        "additions", "error", idx,
                        f"solid {step.chemical} is added to {step.plate} {vial} "
                        f"after a non-aqueous liquid (step "
                        f"{first_liquid[key] + 1}); solids go first",
                    )
                )
                break
    return findings


_CHECKS = {
    "efficiency": refine_efficiency,
    "units": refine_units,
    "delays": refine_delays,
    "plates": refine_plates,
    "solvents": refine_solvents,
    "transfer": refine_transfer,
    "additions": refine_additions,
}


def _apply_fix(p: Procedure, finding: CheckFinding) -> Procedure:
    keep_from = finding.replaces[0]
    drop = set(finding.replaces)
    steps: list[Step] = []
    for idx, step in enumerate(p.steps):
        if idx == keep_from:
            steps.extend(finding.suggested_steps)
        elif idx not in drop:
            steps.append(step)
    return p.with_steps(steps)


def run_guided(
    p: Procedure,
    ctx: CheckContext | None = None,
    props: PropertyProvider | None = None,
) -> SelfCheckOutcome:
    """Run the seven checks in order; optionally apply deterministic fixes.

    With auto-fix enabled, applying a fix restarts the sequence on the revised
    procedure so later checks always see earlier repairs; the result is a
    fixed point of the fixer.
    """
    ctx = ctx or CheckContext()
    props = props or StaticTableProvider()
    current = p
    iterations = 0
    max_passes = len(p.steps) + 2  # every fix removes a step; this bounds passes
    findings: list[CheckFinding] = []
    while iterations < max_passes:
        iterations += 1
        findings = []
        fixed_this_pass = False
        for check_id in CHECK_ORDER:
            result = _CHECKS[check_id](current, ctx, props)
            if ctx.auto_fix:
                fixable = next((f for f in result if f.replaces), None)
                if fixable is not None:
                    current = _apply_fix(current, fixable)
                    fixed_this_pass = True
                    break
            findings.extend(result)
        if not fixed_this_pass:
            break
    converged = not any(f.severity == "error" for f in findings)
    return SelfCheckOutcome(current, tuple(findings), iterations, converged)


# ---------------------------------------------------------------------------
# Unguided holistic review
# ---------------------------------------------------------------------------

_REVIEW_INSTRUCTIONS = (
    "Review the final steps below against the system requirements and the "
    "conversation. If they fully adhere, reply with exactly "
    f"{NO_CHANGES_TOKEN}. Otherwise reply with a complete corrected "
    "<final-steps> block (all steps, not a diff)."
)


def run_unguided(
    p: Procedure,
    transcript: Sequence[Message],
    system_prompt: str,
    client: ChatClient,
    model: str = "",
    limit: int = UNGUIDED_ITERATION_LIMIT,
) -> SelfCheckOutcome:
    """Holistic model review, looping while revisions come back (at most 5).

    A revision must parse as a complete final-steps block; a malformed reply
    is retried once within its iteration, then the previous version stands.
    """
    revised = p
    findings: list[CheckFinding] = []
    iterations = 0
    converged = False
    conversation = "\n".join(f"[{m.role}] {m.content}" for m in transcript if m.content)
    while iterations < limit:
        iterations += 1
        prompt = (
            f"{_REVIEW_INSTRUCTIONS}\n\nConversation so far:\n{conversation}\n\n"
            f"Final steps:\n{render_procedure(revised)}"
        )
        reply = client.complete(system_prompt, [Message("user", prompt)], model=model)
        outcome = _interpret_revision(reply.content)
        if outcome == "no-changes":
            converged = True
            break
        if outcome is None:
            retry = client.complete(
                system_prompt,
                [
                    Message("user", prompt),
                    reply,
                    Message(
                        "user",
                        "That reply was not parseable. Reply with exactly "
                        f"{NO_CHANGES_TOKEN} or a complete <final-steps> block.",
                    ),
                ],
                model=model,
            )
            outcome = _interpret_revision(retry.content)
            if outcome == "no-changes":
                converged = True
                break
            if outcome is None:
                findings.append(
                    CheckFinding(
                        "unguided", "warning", None,
                        f"iteration {iterations}: revision was malformed; "
                        f"keeping the previous version",
                    )
                )
                continue
        revised = Procedure(outcome.steps, dict(p.arrays))
    return SelfCheckOutcome(revised, tuple(findings), max(iterations, 1), converged)


def _interpret_revision(text: str):
    """NO_CHANGES token, a parsed Procedure, or None when unusable."""
    if NO_CHANGES_TOKEN in text:
        return "no-changes"
    try:
        proc = extract_final_steps(text)
    except ValueError:
        return None
    return proc
