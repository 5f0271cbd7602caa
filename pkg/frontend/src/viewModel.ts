/** Session view model: a reducer over the server's event stream.
 *
 * The event stream is the single source of truth; optimistic snapshot
 * responses are reconciled by replaying any events the stream delivers
 * afterwards (events carry monotonic ids, so replay is idempotent).
 */

import type { Message, SessionSnapshot, TagSelection } from "./api.js";
import type { SseEvent } from "./sse.js";

export interface ViewState {
  sessionId: string | null;
  experiment: string | null;
  status: SessionSnapshot["status"] | "connecting";
  transcript: Message[];
  path: string[];
  turns: number;
  finalSteps: string | null;
  tags: Record<string, TagSelection> | null;
  selfCheck: SessionSnapshot["self_check"];
  error: string | null;
  lastEventId: number;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    experiment: null,
    status: "connecting",
    transcript: [],
    path: [],
    turns: 0,
    finalSteps: null,
    tags: null,
    selfCheck: null,
    error: null,
    lastEventId: -1,
  };
}

interface CreatedEvent {
  session_id: string;
  experiment: string | null;
}

export function applyEvent(state: ViewState, event: SseEvent): ViewState {
  if (event.id <= state.lastEventId) return state; // replayed duplicate
  const next: ViewState = { ...state, lastEventId: event.id };
  const data = event.data as Record<string, unknown>;
  switch (event.type) {
    case "created": {
      const created = data as unknown as CreatedEvent;
      next.sessionId = created.session_id;
      next.experiment = created.experiment;
      next.status = "active";
      break;
    }
    case "message":
      next.transcript = [...state.transcript, data["message"] as unknown as Message];
      break;
    case "path":
      next.path = [...state.path, String(data["agent"])];
      break;
    case "turns":
      next.turns = Number(data["value"]);
      break;
    case "finalized":
      next.finalSteps = String(data["steps"]);
      next.selfCheck = (data["self_check"] ?? null) as ViewState["selfCheck"];
      break;
    case "tags":
      next.tags = data["tags"] as Record<string, TagSelection>;
      break;
    case "status":
      next.status = String(data["value"]) as ViewState["status"];
      next.error = (data["error"] as string | null) ?? null;
      break;
    default:
      break; // client_cursor and future event types carry no view state
  }
  return next;
}

export function applyAll(state: ViewState, events: Iterable<SseEvent>): ViewState {
  let current = state;
  for (const event of events) current = applyEvent(current, event);
  return current;
}

/** Chat is writable only while the session waits on the user. */
export function inputEnabled(state: ViewState): boolean {
  return state.status === "awaiting_user";
}

/** The tag editor opens once final steps exist and the session waits on tags. */
export function taggingEnabled(state: ViewState): boolean {
  return state.status === "awaiting_tags" && state.finalSteps !== null;
}

export function hardwareReady(state: ViewState): boolean {
  return state.status === "done" && state.finalSteps !== null;
}

/** Messages the transcript pane shows (system prompt and tool plumbing stay
 * hidden behind a toggle by default). */
export function visibleMessages(state: ViewState, showInternal = false): Message[] {
  return state.transcript.filter((m) => {
    if (m.role === "system") return false;
    if (!showInternal && m.role === "tool") return false;
    if (!showInternal && m.role === "assistant" && m.agent === "Supervisor" && m.content.length < 80) {
      // routing tokens: short supervisor lines naming the next agent
      return false;
    }
    return m.content.length > 0;
  });
}
