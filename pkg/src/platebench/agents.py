"""Supervisor/sub-agent session orchestration.

A session is one logical thread: route to a sub-agent (or straight to the
supervisor in single-agent topology), run it with tool dispatch, watch every
assistant message for a final-steps block, then run the configured
self-check stage and collect hardware tags. Fully-automated mode answers
every non-final assistant message with a fixed canned reply; interactive
mode parks the session until user input arrives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping, Sequence

from . import chem
from .chem import PropertyProvider, SolutionSpec, StaticTableProvider
from .checks import (
    CheckContext,
    SelfCheckOutcome,
    run_guided,
    run_unguided,
)
from .hardware import InvalidTagSet, TagSet, suggest_tags, validate_tag_set
from .llm import ChatClient, Message
from .steps import Procedure, extract_final_steps

CANNED_REPLY = "Please use your best judgment and proceed"
DEFAULT_TURN_LIMIT = 40
_MAX_TOOL_ROUNDS = 10


class TurnLimitExceeded(RuntimeError):
    pass


class InvalidRoute(ValueError):
    pass


class AgentId(Enum):
    SUPERVISOR = "Supervisor"
    UNDERSTAND_REFINE = "UnderstandRefine"
    CHEMICAL_CALCULATIONS = "ChemicalCalculations"
    VIAL_ARRANGEMENT = "VialArrangement"
    PROCESSING_STEPS = "ProcessingSteps"
    FINAL_STEPS = "FinalSteps"
    SELF_CHECKS = "SelfChecks"


SUB_AGENTS = (
    AgentId.UNDERSTAND_REFINE,
    AgentId.CHEMICAL_CALCULATIONS,
    AgentId.VIAL_ARRANGEMENT,
    AgentId.PROCESSING_STEPS,
    AgentId.FINAL_STEPS,
)

_AGENT_ROLES = {
    AgentId.UNDERSTAND_REFINE: (
        "Refine and correct experimental steps according to user instructions. "
        "Confirm with the user your understanding of the experiment and source chemicals."
    ),
    AgentId.CHEMICAL_CALCULATIONS: "For each reaction or mixture, perform calculations.",
    AgentId.VIAL_ARRANGEMENT: (
        "Determine the vial organization and assign reactions to specific vials."
    ),
    AgentId.PROCESSING_STEPS: "Determine additional processing steps.",
    AgentId.FINAL_STEPS: (
        "Gather, organize and generate final steps using <final-steps> tags."
    ),
}

RESPOND_TO_USER = "respond-to-user"

# Loose keyword matching for routing replies: models phrase agent names in
# several ways ("Chemical_Calculations", "Calculate_Chemical_Amounts_For_
# Reactions"); the match is restricted to a short first line.
_ROUTE_KEYWORDS: tuple[tuple[AgentId | str, tuple[str, ...]], ...] = (
    (AgentId.UNDERSTAND_REFINE, ("understand",)),
    (AgentId.UNDERSTAND_REFINE, ("refine",)),
    (AgentId.CHEMICAL_CALCULATIONS, ("calculation",)),
    (AgentId.CHEMICAL_CALCULATIONS, ("calculate",)),
    (AgentId.VIAL_ARRANGEMENT, ("vial",)),
    (AgentId.PROCESSING_STEPS, ("processing",)),
    (AgentId.FINAL_STEPS, ("final",)),
    (RESPOND_TO_USER, ("respond",)),
)


def parse_route(text: str) -> AgentId | str | None:
    """Map a routing reply to a sub-agent id or respond-to-user; None if free text."""
    first_line = text.strip().splitlines()[0].strip() if text.strip() else ""
    if len(first_line) > 80:
        return None
    tokens = "".join(c if c.isalnum() else " " for c in first_line.lower())
    words = set(tokens.split())
    for target, keywords in _ROUTE_KEYWORDS:
        if all(any(w.startswith(k) for w in words) for k in keywords):
            return target
    return None


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArchitectureConfig:
    topology: str  # "SingleAgent" | "MultiAgent"
    cognition: str  # "NR" | "PR" | "FR"
    tools_enabled: bool
    self_check: str | None  # None | "Guided" | "Unguided"

    def __post_init__(self):
        if self.topology not in ("SingleAgent", "MultiAgent"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.cognition not in ("NR", "PR", "FR"):
            raise ValueError(f"unknown cognition level {self.cognition!r}")
        if self.self_check not in (None, "Guided", "Unguided"):
            raise ValueError(f"unknown self-check mode {self.self_check!r}")
        if self.cognition == "PR" and self.topology != "MultiAgent":
            raise ValueError(
                "partial reasoning assigns the reasoning model to the "
                "Understand-and-Refine agent and therefore requires the "
                "multi-agent topology"
            )

    @property
    def label(self) -> str:
        base = "SA" if self.topology == "SingleAgent" else "MA"
        if self.tools_enabled:
            base += "-TU"
        if self.self_check == "Guided":
            base += "-GSC"
        elif self.self_check == "Unguided":
            base += "-UGSC"
        return base


_VARIANTS = (
    (False, None),
    (True, None),
    (True, "Guided"),
    (True, "Unguided"),
)


def parse_config_label(label: str, cognition: str) -> ArchitectureConfig:
    """Build a config from a label like "MA-TU-GSC" plus a cognition level."""
    parts = label.upper().split("-")
    if parts[0] == "SA":
        topology = "SingleAgent"
    elif parts[0] == "MA":
        topology = "MultiAgent"
    else:
        raise ValueError(f"config label must start with SA or MA: {label!r}")
    suffix = parts[1:]
    known = {"TU", "GSC", "UGSC"}
    if any(part not in known for part in suffix) or len(set(suffix)) != len(suffix):
        raise ValueError(f"unknown configuration label {label!r}")
    if "GSC" in suffix and "UGSC" in suffix:
        raise ValueError(f"{label!r} names both self-check modes; pick one")
    tools = "TU" in suffix
    check = "Guided" if "GSC" in suffix else "Unguided" if "UGSC" in suffix else None
    if (tools, check) not in _VARIANTS:
        raise ValueError(f"unknown configuration label {label!r}")
    return ArchitectureConfig(topology, cognition, tools, check)


def evaluation_grid_configurations() -> tuple[ArchitectureConfig, ...]:
    """The full evaluated grid: 8 single-agent and 12 multi-agent configs."""
    configs = []
    for topology, cognitions in (
        ("SingleAgent", ("NR", "FR")),
        ("MultiAgent", ("NR", "PR", "FR")),
    ):
        for cognition in cognitions:
            for tools, check in _VARIANTS:
                configs.append(ArchitectureConfig(topology, cognition, tools, check))
    return tuple(configs)


@dataclass(frozen=True)
class ModelAssignment:
    """Per-agent model names; the names are opaque configuration strings."""

    models: Mapping[AgentId, str]
    reasoning_effort: str | None = None

    def model_for(self, agent: AgentId) -> str:
        return self.models.get(agent, "")

    @classmethod
    def for_cognition(
        cls,
        cognition: str,
        chat_model: str = "chat-default",
        reasoning_model: str = "reasoning-default",
        reasoning_effort: str | None = None,
    ) -> "ModelAssignment":
        if cognition == "FR":
            models = {agent: reasoning_model for agent in AgentId}
        elif cognition == "PR":
            models = {agent: chat_model for agent in AgentId}
            models[AgentId.UNDERSTAND_REFINE] = reasoning_model
        else:
            models = {agent: chat_model for agent in AgentId}
        return cls(models=models, reasoning_effort=reasoning_effort)


# ---------------------------------------------------------------------------
# Tool registry
# ---------------------------------------------------------------------------


def tool_registry() -> list[dict]:
    """Machine-readable schemas for the four calculation tools."""
    return [
        {
            "name": "get_chem_volume",
            "description": (
                "Volume (uL) occupied by a chemical, from its name and weight "
                "in mg, using the chemical's density."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "description": "chemical name"},
                    "weight_mg": {"type": "number", "description": "weight in mg"},
                },
                "required": ["name", "weight_mg"],
            },
        },
        {
            "name": "find_the_volume_corresponding_to_moles",
            "description": (
                "Volume (uL) of a chemical from its name and an amount in "
                "moles, via molecular weight and density."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "description": "chemical name"},
                    "moles": {"type": "number", "description": "amount in mol"},
                },
                "required": ["name", "moles"],
            },
        },
        {
            "name": "find_the_concentration_of_n_percent_solution",
            "description": (
                "Molar concentration (mol/L) of the solute in an n% "
                "(weight/volume) solution; the percentage is read from the "
                "chemical name, e.g. '28% ammonia'."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "name": {
                        "type": "string",
                        "description": "full solution name including the n% prefix",
                    }
                },
                "required": ["name"],
            },
        },
        {
            "name": "find_chemical_amounts_in_a_solution",
            "description": (
                "Milligrams/microliters of two chemicals needed for a solution "
                "with a given total molarity, molar ratio ([chem2]/[chem1]) and "
                "volume in litres."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "total_molarity": {"type": "number", "description": "mol/L"},
                    "molar_ratio": {"type": "number", "description": "[chem2]/[chem1]"},
                    "chem1": {"type": "string", "description": "first chemical name"},
                    "chem2": {"type": "string", "description": "second chemical name"},
                    "volume_l": {"type": "number", "description": "solution volume in L"},
                },
                "required": ["total_molarity", "molar_ratio", "chem1", "chem2", "volume_l"],
            },
        },
    ]


def dispatch_tool(provider: PropertyProvider, name: str, arguments: dict) -> dict:
    """Run one tool call; errors come back as data, never as exceptions."""
    try:
        if name == "get_chem_volume":
            value = chem.get_chem_volume(provider, arguments["name"], float(arguments["weight_mg"]))
            return {"ok": True, "result": {"volume_ul": round(value, 2)}}
        if name == "find_the_volume_corresponding_to_moles":
            value = chem.find_the_volume_corresponding_to_moles(
                provider, arguments["name"], float(arguments["moles"])
            )
            return {"ok": True, "result": {"volume_ul": round(value, 2)}}
        if name == "find_the_concentration_of_n_percent_solution":
            value = chem.find_the_concentration_of_n_percent_solution(provider, arguments["name"])
            return {"ok": True, "result": {"molarity": round(value, 2)}}
        if name == "find_chemical_amounts_in_a_solution":
            spec = SolutionSpec(
                total_molarity=float(arguments["total_molarity"]),
                molar_ratio=float(arguments["molar_ratio"]),
                volume_l=float(arguments["volume_l"]),
            )
            first, second = chem.find_chemical_amounts_in_a_solution(
                provider, spec, arguments["chem1"], arguments["chem2"]
            )
            return {
                "ok": True,
                "result": {
                    amount.name: {
                        "mass_mg": round(amount.mass_mg, 2),
                        "volume_ul": round(amount.volume_ul, 2),
                        "unit": amount.canonical_unit,
                    }
                    for amount in (first, second)
                },
            }
        return {"ok": False, "error": f"unknown tool {name!r}"}
    except (KeyError, TypeError, ValueError) as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# Session state
# ---------------------------------------------------------------------------


def default_system_prompt() -> str:
    return resources.files("platebench.data").joinpath("system_prompt.txt").read_text("utf-8")


_ROLES_TABLE_MARKER = "The role of each agent is listed below."


def single_agent_prompt(prompt: str) -> str:
    """The single-agent prompt is the shared one minus the agent-roles table."""
    head, _, _ = prompt.partition(_ROLES_TABLE_MARKER)
    return head.rstrip() + "\n"


STATUS_ORDER = ("active", "awaiting_user", "self_checking", "awaiting_tags", "done", "failed")


@dataclass
class SessionState:
    config: ArchitectureConfig
    models: ModelAssignment
    mode: str = "auto"  # "auto" | "interactive"
    system_prompt: str = ""
    transcript: list[Message] = field(default_factory=list)
    path: list[AgentId] = field(default_factory=list)
    finalized: Procedure | None = None
    tags: dict[int, TagSet] | None = None
    status: str = "active"
    turns: int = 0
    turn_limit: int = DEFAULT_TURN_LIMIT
    token_prompt: int = 0
    token_completion: int = 0
    self_check: SelfCheckOutcome | None = None
    error: str | None = None
    check_context: CheckContext | None = None
    unguided_limit: int = 5

    def append(self, message: Message) -> None:
        self.transcript.append(message)
        if message.token_usage:
            self.token_prompt += message.token_usage[0]
            self.token_completion += message.token_usage[1]

    def chat_messages(self) -> list[Message]:
        return [m for m in self.transcript if m.role != "system"]

    def active_prompt(self) -> str:
        if self.config.topology == "SingleAgent":
            return single_agent_prompt(self.system_prompt)
        return self.system_prompt


def new_session(
    description: str,
    config: ArchitectureConfig,
    mode: str = "auto",
    *,
    models: ModelAssignment | None = None,
    system_prompt: str | None = None,
    turn_limit: int = DEFAULT_TURN_LIMIT,
    check_context: CheckContext | None = None,
    unguided_limit: int = 5,
) -> SessionState:
    state = SessionState(
        config=config,
        models=models or ModelAssignment.for_cognition(config.cognition),
        mode=mode,
        system_prompt=system_prompt if system_prompt is not None else default_system_prompt(),
        turn_limit=turn_limit,
        check_context=check_context,
        unguided_limit=unguided_limit,
    )
    state.append(Message("system", state.active_prompt()))
    state.append(Message("user", description))
    return state


# ---------------------------------------------------------------------------
# The session loop
# ---------------------------------------------------------------------------


def route(state: SessionState, client: ChatClient) -> AgentId | str:
    """Ask the supervisor which sub-agent acts next (multi-agent only)."""
    if state.config.topology == "SingleAgent":
        return AgentId.SUPERVISOR
    instruction = Message(
        "user",
        "Name the next agent to act: one of Understand_And_Refine, "
        "Chemical_Calculations, Vial_Arrangement, Processing_Steps, "
        "Generate_Final_Steps, or Respond_To_User if the user must answer "
        "first. Reply with the name on the first line; for Respond_To_User "
        "add the message to the user below it.",
    )
    model = state.models.model_for(AgentId.SUPERVISOR)
    reply = client.complete(
        state.active_prompt(), state.chat_messages() + [instruction], model=model
    )
    choice = parse_route(reply.content)
    if choice is None:
        retry = client.complete(
            state.active_prompt(),
            state.chat_messages() + [instruction, reply, Message("user", "Reply with only the agent name.")],
            model=model,
        )
        state.append(Message("assistant", reply.content, agent=AgentId.SUPERVISOR.value,
                             token_usage=reply.token_usage))
        reply = retry
        choice = parse_route(retry.content)
        if choice is None:
            choice = RESPOND_TO_USER
    state.append(
        Message(
            "assistant",
            reply.content,
            agent=AgentId.SUPERVISOR.value,
            token_usage=reply.token_usage,
        )
    )
    if isinstance(choice, AgentId):
        state.path.append(choice)
    return choice


def run_subagent(
    state: SessionState,
    agent: AgentId,
    client: ChatClient,
    provider: PropertyProvider,
) -> Message:
    """One sub-agent activation, dispatching tool calls until a text reply."""
    role_line = _AGENT_ROLES.get(agent, "")
    system = state.active_prompt()
    if role_line:
        system = f"{system}\nYou are acting as this agent: {role_line}"
    model = state.models.model_for(agent)
    tools_allowed = state.config.tools_enabled and agent in (
        AgentId.CHEMICAL_CALCULATIONS,
        AgentId.SUPERVISOR,
    )
    schemas = tool_registry() if tools_allowed else None

    reply = client.complete(system, state.chat_messages(), tool_schemas=schemas, model=model)
    refused_once = False
    for _ in range(_MAX_TOOL_ROUNDS):
        if not reply.tool_calls:
            break
        state.append(
            Message(
                "assistant",
                reply.content,
                agent=agent.value,
                tool_calls=reply.tool_calls,
                token_usage=reply.token_usage,
            )
        )
        if tools_allowed:
            for call in reply.tool_calls:
                result = dispatch_tool(provider, call.name, call.arguments)
                state.append(
                    Message("tool", json.dumps(result, sort_keys=True), tool_call_id=call.call_id)
                )
        else:
            for call in reply.tool_calls:
                state.append(
                    Message(
                        "tool",
                        json.dumps({"ok": False, "error": "tool use is disabled in this configuration"}),
                        tool_call_id=call.call_id,
                    )
                )
            if refused_once:
                break
            refused_once = True
        reply = client.complete(system, state.chat_messages(), tool_schemas=schemas, model=model)

    final = Message(
        "assistant", reply.content, agent=agent.value, token_usage=reply.token_usage
    )
    state.append(final)
    return final


def _finalize(state: SessionState, proc: Procedure, client: ChatClient, provider: PropertyProvider) -> None:
    if state.finalized is not None:
        raise RuntimeError("final steps were already recorded for this session")
    ctx = state.check_context or CheckContext()
    if ctx.arrays and not proc.arrays:
        proc = Procedure(proc.steps, dict(ctx.arrays))
    state.finalized = proc
    state.status = "self_checking"

    if state.config.self_check == "Guided":
        outcome = run_guided(proc, ctx, provider)
        state.self_check = outcome
        state.finalized = outcome.revised
    elif state.config.self_check == "Unguided":
        outcome = run_unguided(
            proc,
            state.transcript,
            state.active_prompt(),
            client,
            model=state.models.model_for(AgentId.SELF_CHECKS),
            limit=state.unguided_limit,
        )
        state.self_check = outcome
        state.finalized = outcome.revised

    if state.mode == "interactive":
        state.status = "awaiting_tags"
    else:
        state.tags = {
            idx: suggest_tags(step, provider)
            for idx, step in enumerate(state.finalized.steps)
        }
        state.status = "done"


def set_tags(state: SessionState, tags: Mapping[int, TagSet], provider: PropertyProvider | None = None) -> None:
    """Record user-selected hardware tags; only valid selections are accepted."""
    if state.status != "awaiting_tags":
        raise RuntimeError(f"session is not awaiting tags (status {state.status})")
    assert state.finalized is not None
    provider = provider or StaticTableProvider()
    problems: list[str] = []
    for idx, step in enumerate(state.finalized.steps):
        problems += [
            f"step {idx + 1}: {m}"
            for m in validate_tag_set(step, tags.get(idx, TagSet()), provider)
        ]
    if problems:
        raise InvalidTagSet("; ".join(problems))
    state.tags = dict(tags)
    state.status = "done"


def step_session(
    state: SessionState,
    client: ChatClient,
    user_input: str | None = None,
    provider: PropertyProvider | None = None,
) -> SessionState:
    """Advance the session by one routing + agent turn."""
    provider = provider or StaticTableProvider()
    if state.status == "awaiting_user":
        if user_input is None:
            return state
        state.append(Message("user", user_input))
        state.status = "active"
    if state.status != "active":
        return state
    if state.turns >= state.turn_limit:
        state.status = "failed"
        state.error = f"turn limit of {state.turn_limit} exceeded without final steps"
        return state
    state.turns += 1

    if state.config.topology == "SingleAgent":
        state.path.append(AgentId.SUPERVISOR)
        message = run_subagent(state, AgentId.SUPERVISOR, client, provider)
    else:
        choice = route(state, client)
        if choice == RESPOND_TO_USER:
            message = state.transcript[-1]
        else:
            message = run_subagent(state, choice, client, provider)

    proc = extract_final_steps(message.content)
    if proc is not None:
        _finalize(state, proc, client, provider)
        return state

    if state.mode == "auto":
        state.append(Message("user", CANNED_REPLY))
    else:
        state.status = "awaiting_user"
    return state


def run_session(
    description: str,
    config: ArchitectureConfig,
    mode: str = "auto",
    client: ChatClient | None = None,
    *,
    models: ModelAssignment | None = None,
    system_prompt: str | None = None,
    turn_limit: int = DEFAULT_TURN_LIMIT,
    check_context: CheckContext | None = None,
    provider: PropertyProvider | None = None,
) -> SessionState:
    """Run a session until it finishes or needs outside input."""
    if client is None:
        raise ValueError("a chat client is required")
    state = new_session(
        description,
        config,
        mode,
        models=models,
        system_prompt=system_prompt,
        turn_limit=turn_limit,
        check_context=check_context,
    )
    return resume_session(state, client, provider=provider)


def resume_session(
    state: SessionState,
    client: ChatClient,
    user_input: str | None = None,
    provider: PropertyProvider | None = None,
) -> SessionState:
    step_session(state, client, user_input, provider)
    while state.status == "active":
        step_session(state, client, None, provider)
    return state


# ---------------------------------------------------------------------------
# Path and token accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathReport:
    length: int
    visits: dict[str, int]
    token_prompt: int
    token_completion: int

    @property
    def token_total(self) -> int:
        return self.token_prompt + self.token_completion

    def to_dict(self) -> dict:
        return {
            "path_length": self.length,
            "node_visits": dict(self.visits),
            "tokens": {
                "prompt": self.token_prompt,
                "completion": self.token_completion,
                "total": self.token_total,
            },
        }


def path_and_token_report(state: SessionState) -> PathReport:
    if state.status not in ("done", "failed"):
        raise RuntimeError("path report requires a finished session")
    visits: dict[str, int] = {}
    for agent in state.path:
        visits[agent.value] = visits.get(agent.value, 0) + 1
    return PathReport(
        length=len(state.path),
        visits=visits,
        token_prompt=state.token_prompt,
        token_completion=state.token_completion,
    )


def aggregate_reports(reports: Sequence[PathReport]) -> PathReport:
    visits: dict[str, int] = {}
    for report in reports:
        for agent, count in report.visits.items():
            visits[agent] = visits.get(agent, 0) + count
    return PathReport(
        length=sum(r.length for r in reports),
        visits=visits,
        token_prompt=sum(r.token_prompt for r in reports),
        token_completion=sum(r.token_completion for r in reports),
    )
