/** Fetch-based server-sent-events reader.
 *
 * Built on fetch + ReadableStream rather than EventSource so the same code
 * runs in the browser and under node tests. Tracks the last delivered event
 * id and resumes from it on reconnect, so a dropped stream never loses or
 * repeats events.
 */

export interface SseEvent {
  id: number;
  type: string;
  data: unknown;
}

export interface StreamOptions {
  lastEventId?: number;
  signal?: AbortSignal;
  /** reconnect attempts after a drop; the stream ends server-side when the
   * session reaches a terminal status */
  retries?: number;
  retryDelayMs?: number;
}

function parseFrame(frame: string): SseEvent | null {
  let id = -1;
  let type = "message";
  const dataLines: string[] = [];
  for (const line of frame.split("\n")) {
    if (line.startsWith("id:")) id = Number(line.slice(3).trim());
    else if (line.startsWith("event:")) type = line.slice(6).trim();
    else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
  }
  if (id < 0 && dataLines.length === 0) return null;
  let data: unknown = dataLines.join("\n");
  try {
    data = JSON.parse(dataLines.join("\n"));
  } catch {
    // leave as text
  }
  return { id, type, data };
}

async function* readFrames(body: ReadableStream<Uint8Array>): AsyncGenerator<SseEvent> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let split;
      while ((split = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, split);
        buffer = buffer.slice(split + 2);
        const event = parseFrame(frame);
        if (event) yield event;
      }
    }
    const tail = parseFrame(buffer);
    if (tail) yield tail;
  } finally {
    reader.releaseLock();
  }
}

/** Stream session events, resuming from the last seen id across drops. */
export async function* streamEvents(
  baseUrl: string,
  sessionId: string,
  options: StreamOptions = {},
): AsyncGenerator<SseEvent> {
  let lastId = options.lastEventId ?? -1;
  let attempt = 0;
  const retries = options.retries ?? 3;
  for (;;) {
    const headers: Record<string, string> = {};
    if (lastId >= 0) headers["Last-Event-ID"] = String(lastId);
    let response: Response;
    try {
      response = await fetch(`${baseUrl}/sessions/${sessionId}/events`, {
        headers,
        signal: options.signal,
      });
    } catch (error) {
      if (options.signal?.aborted) return;
      if (attempt++ >= retries) throw error;
      await new Promise((r) => setTimeout(r, options.retryDelayMs ?? 250));
      continue;
    }
    if (!response.ok || !response.body) {
      throw new Error(`event stream failed: HTTP ${response.status}`);
    }
    attempt = 0;
    for await (const event of readFrames(response.body)) {
      if (event.id <= lastId) continue; // duplicate after resume
      lastId = event.id;
      yield event;
    }
    // The server closes the stream once the session is terminal; a clean
    // close after a terminal status event means we are done.
    return;
  }
}

/** Collect every event currently available (the server closes the stream
 * when the session is done or failed). */
export async function collectEvents(
  baseUrl: string,
  sessionId: string,
  options: StreamOptions = {},
): Promise<SseEvent[]> {
  const events: SseEvent[] = [];
  for await (const event of streamEvents(baseUrl, sessionId, options)) {
    events.push(event);
  }
  return events;
}
