"""Chat-client contract plus the two implementations.

``HTTPChatClient`` speaks the JSON chat-completions wire format against any
compatible endpoint; ``ScriptedClient`` replays an authored or recorded reply
sequence so whole sessions run deterministically with no network.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import requests


class LLMUnavailable(RuntimeError):
    """The chat backend failed after the configured retries."""


@dataclass(frozen=True)
class ToolCall:
    call_id: str
    name: str
    arguments: dict


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user" | "assistant" | "tool"
    content: str = ""
    agent: str | None = None
    tool_calls: tuple[ToolCall, ...] = ()
    tool_call_id: str | None = None
    token_usage: tuple[int, int] | None = None  # (prompt, completion)

    def to_dict(self) -> dict:
        out: dict = {"role": self.role, "content": self.content}
        if self.agent:
            out["agent"] = self.agent
        if self.tool_calls:
            out["tool_calls"] = [
                {"id": tc.call_id, "name": tc.name, "arguments": tc.arguments}
                for tc in self.tool_calls
            ]
        if self.tool_call_id:
            out["tool_call_id"] = self.tool_call_id
        if self.token_usage:
            out["token_usage"] = {
                "prompt": self.token_usage[0],
                "completion": self.token_usage[1],
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Message":
        usage = data.get("token_usage")
        return cls(
            role=data["role"],
            content=data.get("content", ""),
            agent=data.get("agent"),
            tool_calls=tuple(
                ToolCall(tc["id"], tc["name"], tc["arguments"])
                for tc in data.get("tool_calls", ())
            ),
            tool_call_id=data.get("tool_call_id"),
            token_usage=(usage["prompt"], usage["completion"]) if usage else None,
        )


class ChatClient(Protocol):
    def complete(
        self,
        system: str,
        messages: Sequence[Message],
        tool_schemas: Sequence[dict] | None = None,
        model: str = "",
    ) -> Message: ...


class HTTPChatClient:
    """Chat-completions client for any compatible HTTP endpoint."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        timeout: float = 60.0,
        max_retries: int = 3,
        extra_payload: dict | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        # endpoint-specific knobs (e.g. reasoning effort) merged into requests
        self.extra_payload = dict(extra_payload or {})

    def complete(self, system, messages, tool_schemas=None, model=""):
        payload: dict = {
            **self.extra_payload,
            "model": model,
            "messages": [{"role": "system", "content": system}]
            + [self._wire_message(m) for m in messages],
        }
        if tool_schemas:
            payload["tools"] = [
                {"type": "function", "function": schema} for schema in tool_schemas
            ]
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                response = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                response.raise_for_status()
                return self._parse_reply(response.json())
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                time.sleep(min(2**attempt, 8))
        raise LLMUnavailable(f"chat request failed after {self.max_retries} attempts: {last_error}")

    @staticmethod
    def _wire_message(m: Message) -> dict:
        out: dict = {"role": m.role, "content": m.content}
        if m.tool_calls:
            out["tool_calls"] = [
                {
                    "id": tc.call_id,
                    "type": "function",
                    "function": {"name": tc.name, "arguments": json.dumps(tc.arguments)},
                }
                for tc in m.tool_calls
            ]
        if m.tool_call_id:
            out["tool_call_id"] = m.tool_call_id
        return out

    @staticmethod
    def _parse_reply(body: dict) -> Message:
        choice = body["choices"][0]["message"]
        calls = []
        for i, tc in enumerate(choice.get("tool_calls") or ()):
            fn = tc.get("function", {})
            try:
                arguments = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError:
                arguments = {}
            calls.append(ToolCall(tc.get("id", f"call_{i}"), fn.get("name", ""), arguments))
        usage = body.get("usage") or {}
        return Message(
            role="assistant",
            content=choice.get("content") or "",
            tool_calls=tuple(calls),
            token_usage=(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)),
        )


@dataclass
class ScriptedClient:
    """Replays an authored reply sequence; every run is byte-identical.

    The fixture format is a JSON object with a "replies" array; each entry has
    "content" and optionally "tool_calls" ([{name, arguments}]) and "usage"
    ({prompt, completion}). Replies are consumed strictly in order, no matter
    which agent asks.
    """

    replies: list[dict] = field(default_factory=list)
    cursor: int = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedClient":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(replies=list(data["replies"]))

    @classmethod
    def from_replies(cls, replies: Sequence[dict | str]) -> "ScriptedClient":
        return cls(
            replies=[r if isinstance(r, dict) else {"content": r} for r in replies]
        )

    def complete(self, system, messages, tool_schemas=None, model=""):
        if self.cursor >= len(self.replies):
            raise LLMUnavailable(
                f"scripted client exhausted after {len(self.replies)} replies"
            )
        entry = self.replies[self.cursor]
        self.cursor += 1
        usage = entry.get("usage") or {"prompt": 100, "completion": 20}
        calls = tuple(
            ToolCall(tc.get("id", f"call_{self.cursor}_{i}"), tc["name"], tc.get("arguments", {}))
            for i, tc in enumerate(entry.get("tool_calls", ()))
        )
        return Message(
            role="assistant",
            content=entry.get("content", ""),
            tool_calls=calls,
            token_usage=(usage["prompt"], usage["completion"]),
        )

    def reset(self) -> None:
        self.cursor = 0


def transcript_to_stub(messages: Sequence[Message]) -> dict:
    """Convert a recorded transcript into the scripted-client fixture format.

    Assistant messages become replies, in order, so a live session can be
    replayed deterministically afterwards.
    """
    replies = []
    for message in messages:
        if message.role != "assistant":
            continue
        entry: dict = {"content": message.content}
        if message.tool_calls:
            entry["tool_calls"] = [
                {"id": tc.call_id, "name": tc.name, "arguments": tc.arguments}
                for tc in message.tool_calls
            ]
        if message.token_usage:
            entry["usage"] = {
                "prompt": message.token_usage[0],
                "completion": message.token_usage[1],
            }
        replies.append(entry)
    return {"replies": replies}
