"""HTTP session service: REST + SSE shell around the session orchestrator.

Sessions are event-sourced: every transcript delta, status change and
decision is appended to a newline-delimited JSON log, one file per session,
and replaying a log reconstructs the session snapshot exactly. The service
keeps no other state across restarts.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel

from . import agents, fixtures
from .agents import (
    AgentId,
    ArchitectureConfig,
    ModelAssignment,
    SessionState,
    parse_config_label,
)
from .chem import StaticTableProvider
from .checks import CheckFinding, SelfCheckOutcome
from .evaluate import evaluate
from .hardware import InvalidTagSet, TagSet, emit, load_tag_rules, suggest_tags
from .llm import ChatClient, HTTPChatClient, Message, ScriptedClient
from .report import format_table
from .steps import Procedure, extract_final_steps, render_procedure


class CorruptLog(RuntimeError):
    """The event log is damaged beyond the trailing line."""


@dataclass
class AppConfig:
    """Service/CLI configuration; secrets come from the environment only."""

    client_kind: str = "stub"  # "stub" | "http"
    base_url: str = "https://api.openai.com/v1"
    chat_model: str = "chat-default"
    reasoning_model: str = "reasoning-default"
    reasoning_effort: Optional[str] = None
    turn_limit: int = agents.DEFAULT_TURN_LIMIT
    self_check_limit: int = 5
    solvent_tolerance: float = 0.01
    fixture_dir: Optional[str] = None
    log_dir: str = "sessions"
    host: str = "127.0.0.1"
    port: int = 8131

    @property
    def api_key(self) -> str:
        return os.environ.get("PLATEBENCH_API_KEY", os.environ.get("OPENAI_API_KEY", ""))

    @classmethod
    def from_env(cls, **overrides) -> "AppConfig":
        env = os.environ
        values: dict = {
            "client_kind": env.get("PLATEBENCH_CLIENT", "stub"),
            "base_url": env.get("PLATEBENCH_BASE_URL", "https://api.openai.com/v1"),
            "chat_model": env.get("PLATEBENCH_CHAT_MODEL", "chat-default"),
            "reasoning_model": env.get("PLATEBENCH_REASONING_MODEL", "reasoning-default"),
            "log_dir": env.get("PLATEBENCH_LOG_DIR", "sessions"),
        }
        values.update(overrides)
        return cls(**values)

    def models_for(self, cognition: str) -> ModelAssignment:
        return ModelAssignment.for_cognition(
            cognition, self.chat_model, self.reasoning_model, self.reasoning_effort
        )

    def http_client(self) -> HTTPChatClient:
        extra = {"reasoning_effort": self.reasoning_effort} if self.reasoning_effort else None
        return HTTPChatClient(self.base_url, self.api_key, extra_payload=extra)


def _self_check_summary(outcome: SelfCheckOutcome | None) -> dict | None:
    if outcome is None:
        return None
    return {
        "iterations": outcome.iterations,
        "converged": outcome.converged,
        "findings": [f.to_dict() for f in outcome.findings],
    }


def snapshot(state: SessionState, session_id: str = "", created_at: float = 0.0,
             experiment: str | None = None) -> dict:
    """The canonical JSON view of a session; replayed logs must equal it."""
    return {
        "session_id": session_id,
        "created_at": created_at,
        "experiment": experiment,
        "config": state.config.label,
        "cognition": state.config.cognition,
        "mode": state.mode,
        "status": state.status,
        "turns": state.turns,
        "path": [a.value for a in state.path],
        "tokens": {"prompt": state.token_prompt, "completion": state.token_completion},
        "transcript": [m.to_dict() for m in state.transcript],
        "final_steps": render_procedure(state.finalized) if state.finalized else None,
        "tags": {str(i): t.to_dict() for i, t in (state.tags or {}).items()} or None,
        "self_check": _self_check_summary(state.self_check),
        "error": state.error,
    }


# ---------------------------------------------------------------------------
# Event-sourced session store
# ---------------------------------------------------------------------------


@dataclass
class SessionRuntime:
    session_id: str
    state: SessionState
    client: ChatClient
    created_at: float
    experiment: str | None = None
    events: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    # delta-capture cursors
    _messages_seen: int = 0
    _path_seen: int = 0
    _status_seen: str = ""
    _turns_seen: int = 0
    _finalized_seen: bool = False
    _tags_seen: bool = False


class SessionStore:
    def __init__(
        self,
        log_dir: str | Path,
        config: AppConfig | None = None,
        id_factory: Callable[[], str] | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or AppConfig()
        self._ids = id_factory or (lambda: uuid.uuid4().hex)
        self._clock = clock or time.time
        self._sessions: dict[str, SessionRuntime] = {}
        self._provider = StaticTableProvider()

    # -- creation and progression ------------------------------------------

    def create(
        self,
        description: str | None,
        config_label: str,
        cognition: str,
        mode: str,
        client_kind: str | None = None,
        experiment: str | None = None,
    ) -> SessionRuntime:
        if experiment is not None and not fixtures.is_experiment_id(experiment):
            raise KeyError(experiment)
        if description is None:
            if experiment is None:
                raise ValueError("either a description or an experiment id is required")
            description = fixtures.description_for(experiment, self.config.fixture_dir)
        config = parse_config_label(config_label, cognition)
        kind = client_kind or self.config.client_kind
        if kind == "stub":
            if experiment is None:
                raise ValueError("the stub client needs an experiment id")
            client: ChatClient = fixtures.stub_client(experiment, self.config.fixture_dir)
        else:
            client = self.config.http_client()
        context = (
            fixtures.check_context_for(experiment, auto_fix=True, fixture_dir=self.config.fixture_dir)
            if experiment
            else None
        )
        if context is not None:
            context.solvent_tolerance = self.config.solvent_tolerance

        state = agents.new_session(
            description,
            config,
            mode,
            models=self.config.models_for(cognition),
            turn_limit=self.config.turn_limit,
            check_context=context,
            unguided_limit=self.config.self_check_limit,
        )
        runtime = SessionRuntime(
            session_id=self._ids(),
            state=state,
            client=client,
            created_at=self._clock(),
            experiment=experiment,
        )
        self._sessions[runtime.session_id] = runtime
        self._append(runtime, {
            "type": "created",
            "session_id": runtime.session_id,
            "created_at": runtime.created_at,
            "experiment": experiment,
            "description": description,
            "config": {
                "topology": config.topology,
                "cognition": config.cognition,
                "tools_enabled": config.tools_enabled,
                "self_check": config.self_check,
            },
            "mode": mode,
            "turn_limit": state.turn_limit,
            "client_kind": kind,
            "models": {a.value: state.models.model_for(a) for a in AgentId},
        })
        self._record(runtime)
        return runtime

    def get(self, session_id: str) -> SessionRuntime:
        runtime = self._sessions.get(session_id)
        if runtime is None:
            raise KeyError(session_id)
        return runtime

    def advance(self, runtime: SessionRuntime, user_input: str | None = None) -> None:
        with runtime.lock:
            agents.resume_session(runtime.state, runtime.client, user_input, self._provider)
            self._record(runtime)

    def set_tags(self, runtime: SessionRuntime, tags: dict[int, TagSet]) -> None:
        with runtime.lock:
            agents.set_tags(runtime.state, tags, self._provider)
            self._record(runtime)

    # -- event log -----------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.log_dir / f"{session_id}.ndjson"

    def _append(self, runtime: SessionRuntime, event: dict) -> None:
        event = {"seq": len(runtime.events), **event}
        runtime.events.append(event)
        with open(self._log_path(runtime.session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _record(self, runtime: SessionRuntime) -> None:
        """Persist everything that changed since the last capture."""
        state = runtime.state
        for message in state.transcript[runtime._messages_seen:]:
            self._append(runtime, {"type": "message", "message": message.to_dict()})
        runtime._messages_seen = len(state.transcript)
        for agent in state.path[runtime._path_seen:]:
            self._append(runtime, {"type": "path", "agent": agent.value})
        runtime._path_seen = len(state.path)
        if state.turns != runtime._turns_seen:
            self._append(runtime, {"type": "turns", "value": state.turns})
            runtime._turns_seen = state.turns
        if state.finalized is not None and not runtime._finalized_seen:
            self._append(runtime, {
                "type": "finalized",
                "steps": render_procedure(state.finalized),
                "self_check": _self_check_summary(state.self_check),
            })
            runtime._finalized_seen = True
        if state.tags is not None and not runtime._tags_seen:
            self._append(runtime, {
                "type": "tags",
                "tags": {str(i): t.to_dict() for i, t in state.tags.items()},
            })
            runtime._tags_seen = True
        if isinstance(runtime.client, ScriptedClient):
            self._append(runtime, {"type": "client_cursor", "value": runtime.client.cursor})
        if state.status != runtime._status_seen:
            self._append(runtime, {"type": "status", "value": state.status, "error": state.error})
            runtime._status_seen = state.status

    # -- restore --------------------------------------------------------------

    def read_events(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.is_file():
            raise KeyError(session_id)
        events: list[dict] = []
        lines = path.read_text("utf-8").splitlines()
        for lineno, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                if lineno == len(lines) - 1:
                    break  # torn final write: restore up to the previous event
                raise CorruptLog(
                    f"event {lineno} of session {session_id} is unreadable; "
                    f"last good event is {lineno - 1}"
                ) from None
        return events

    def restore(self, session_id: str) -> SessionRuntime:
        """Rebuild a session (state and client) from its event log."""
        events = self.read_events(session_id)
        if not events or events[0].get("type") != "created":
            raise CorruptLog(f"session {session_id} log has no creation event")
        created = events[0]
        config = ArchitectureConfig(**created["config"])
        state = SessionState(
            config=config,
            models=ModelAssignment(
                models={AgentId(k): v for k, v in created.get("models", {}).items()}
            ),
            mode=created["mode"],
            system_prompt=agents.default_system_prompt(),
            turn_limit=created.get("turn_limit", agents.DEFAULT_TURN_LIMIT),
        )
        experiment = created.get("experiment")
        if experiment:
            state.check_context = fixtures.check_context_for(
                experiment, auto_fix=True, fixture_dir=self.config.fixture_dir
            )
        cursor = 0
        for event in events[1:]:
            kind = event["type"]
            if kind == "message":
                state.append(Message.from_dict(event["message"]))
            elif kind == "path":
                state.path.append(AgentId(event["agent"]))
            elif kind == "turns":
                state.turns = event["value"]
            elif kind == "status":
                state.status = event["value"]
                state.error = event.get("error")
            elif kind == "finalized":
                proc = extract_final_steps(event["steps"])
                arrays = state.check_context.arrays if state.check_context else {}
                state.finalized = Procedure(proc.steps, dict(arrays))
                summary = event.get("self_check")
                if summary is not None:
                    state.self_check = SelfCheckOutcome(
                        revised=state.finalized,
                        findings=tuple(
                            CheckFinding(
                                f["check"], f["severity"], f.get("step_index"), f["message"]
                            )
                            for f in summary["findings"]
                        ),
                        iterations=summary["iterations"],
                        converged=summary["converged"],
                    )
            elif kind == "tags":
                state.tags = {
                    int(i): TagSet.from_dict(t) for i, t in event["tags"].items()
                }
            elif kind == "client_cursor":
                cursor = event["value"]

        if created.get("client_kind") == "stub" and experiment:
            client: ChatClient = fixtures.stub_client(experiment, self.config.fixture_dir)
            client.cursor = cursor
        else:
            client = self.config.http_client()
        runtime = SessionRuntime(
            session_id=session_id,
            state=state,
            client=client,
            created_at=created["created_at"],
            experiment=experiment,
            events=events,
        )
        runtime._messages_seen = len(state.transcript)
        runtime._path_seen = len(state.path)
        runtime._status_seen = state.status
        runtime._turns_seen = state.turns
        runtime._finalized_seen = state.finalized is not None
        runtime._tags_seen = state.tags is not None
        self._sessions[session_id] = runtime
        return runtime

    def snapshot(self, runtime: SessionRuntime) -> dict:
        return snapshot(
            runtime.state, runtime.session_id, runtime.created_at, runtime.experiment
        )


# ---------------------------------------------------------------------------
# HTTP API
# ---------------------------------------------------------------------------


class CreateSessionBody(BaseModel):
    description: Optional[str] = None
    experiment: Optional[str] = None
    config: str = "MA-TU-GSC"
    cognition: str = "FR"
    mode: str = "interactive"
    client: Optional[str] = None


class MessageBody(BaseModel):
    content: str


class TagsBody(BaseModel):
    tags: dict[str, dict]


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="platebench session service")
    provider = StaticTableProvider()

    def _get(session_id: str) -> SessionRuntime:
        try:
            return store.get(session_id)
        except KeyError:
            try:
                return store.restore(session_id)
            except (KeyError, CorruptLog):
                raise HTTPException(404, f"unknown session {session_id!r}") from None

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.mode not in ("auto", "interactive"):
            raise HTTPException(422, "mode must be auto or interactive")
        try:
            runtime = store.create(
                body.description, body.config, body.cognition, body.mode,
                client_kind=body.client, experiment=body.experiment,
            )
        except KeyError as exc:
            raise HTTPException(404, f"unknown experiment {exc.args[0]!r}") from None
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        store.advance(runtime)
        return store.snapshot(runtime)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.snapshot(_get(session_id))

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        runtime = _get(session_id)
        if runtime.state.status != "awaiting_user":
            raise HTTPException(
                409, f"session is {runtime.state.status}, not awaiting user input"
            )
        store.advance(runtime, body.content)
        return store.snapshot(runtime)

    @app.post("/sessions/{session_id}/tags")
    def post_tags(session_id: str, body: TagsBody):
        runtime = _get(session_id)
        if runtime.state.status != "awaiting_tags":
            raise HTTPException(
                409, f"session is {runtime.state.status}, not awaiting tags"
            )
        try:
            tags = {int(i): TagSet.from_dict(t) for i, t in body.tags.items()}
        except (TypeError, ValueError):
            raise HTTPException(422, "tags must map step indices to tag objects") from None
        try:
            store.set_tags(runtime, tags)
        except InvalidTagSet as exc:
            raise HTTPException(422, str(exc)) from None
        return store.snapshot(runtime)

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str, experiment: Optional[str] = None, alt_order: bool = False):
        runtime = _get(session_id)
        if runtime.state.finalized is None:
            raise HTTPException(409, "session has no final steps yet")
        exp = experiment or runtime.experiment
        if exp is None or not fixtures.is_experiment_id(exp):
            raise HTTPException(404, f"unknown experiment {exp!r}")
        gt = fixtures.load_ground_truth(exp, alt_order=alt_order, fixture_dir=store.config.fixture_dir)
        result = evaluate(runtime.state.finalized, gt)
        return {"experiment": exp, "table": format_table(result), **result.to_dict()}

    @app.get("/sessions/{session_id}/hardware")
    def get_hardware(session_id: str):
        runtime = _get(session_id)
        state = runtime.state
        if state.status != "done" or state.finalized is None:
            raise HTTPException(409, f"session is {state.status}; hardware needs a finished session")
        tags = state.tags or {
            idx: suggest_tags(step, provider) for idx, step in enumerate(state.finalized.steps)
        }
        document = emit(state.finalized, tags, provider)
        return Response(content=document, media_type="application/xml")

    @app.get("/sessions/{session_id}/events")
    async def get_events(session_id: str, request: Request):
        runtime = _get(session_id)
        start = 0
        header = request.headers.get("last-event-id") or request.query_params.get("last_event_id")
        if header is not None:
            try:
                start = int(header) + 1
            except ValueError:
                raise HTTPException(422, "last event id must be an integer") from None

        async def stream():
            cursor = start
            while True:
                while cursor < len(runtime.events):
                    event = runtime.events[cursor]
                    payload = json.dumps(event, sort_keys=True)
                    yield f"id: {event['seq']}\nevent: {event['type']}\ndata: {payload}\n\n"
                    cursor += 1
                if runtime.state.status in ("done", "failed") and cursor >= len(runtime.events):
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/tag-rules")
    def tag_rules():
        return load_tag_rules()

    @app.get("/experiments")
    def experiments():
        return [
            {"id": exp, "description": fixtures.description_for(exp, store.config.fixture_dir)}
            for exp in fixtures.EXPERIMENT_IDS
        ]

    @app.exception_handler(RuntimeError)
    def runtime_error(request: Request, exc: RuntimeError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    return app


def serve(config: AppConfig) -> None:
    import uvicorn

    store = SessionStore(config.log_dir, config)
    app = create_app(store)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
