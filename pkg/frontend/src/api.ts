/** Typed client for the session service. The UI talks to the documented
 * HTTP+JSON API exclusively; every mutation here is re-validated by the
 * server, so this module never enforces more than request shape. */

export interface Message {
  role: "system" | "user" | "assistant" | "tool";
  content: string;
  agent?: string;
  tool_call_id?: string;
  token_usage?: { prompt: number; completion: number };
}

export interface TagSelection {
  core: string | null;
  tip_size: string | null;
  optional: string[];
}

export interface SessionSnapshot {
  session_id: string;
  experiment: string | null;
  config: string;
  cognition: string;
  mode: string;
  status:
    | "active"
    | "awaiting_user"
    | "self_checking"
    | "awaiting_tags"
    | "done"
    | "failed";
  turns: number;
  path: string[];
  tokens: { prompt: number; completion: number };
  transcript: Message[];
  final_steps: string | null;
  tags: Record<string, TagSelection> | null;
  self_check: {
    iterations: number;
    converged: boolean;
    findings: { check: string; severity: string; message: string }[];
  } | null;
  error: string | null;
}

export interface TagRules {
  core_by_state: Record<string, string[]>;
  tip_required_for: string[];
  tip_sizes: string[];
  optional_by_core: Record<string, string[]>;
  transfer_tags: string[];
}

export interface MetricsReport {
  experiment: string;
  precision: number;
  recall: number;
  f1: number;
  spearman: number | null;
  nrmse: number | null;
  true_positives: number;
  false_positives: number;
  false_negatives: number;
  matched: { generated_index: number; ground_truth_index: number; cost: number }[];
  unmatched_generated: { index: number; step: string | null }[];
  unmatched_ground_truth: { index: number; step: string | null }[];
  table: string;
}

export interface ExperimentInfo {
  id: string;
  description: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class SessionApi {
  constructor(private readonly baseUrl: string) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createSession(body: {
    experiment?: string;
    description?: string;
    config?: string;
    cognition?: string;
    mode?: string;
    client?: string;
  }): Promise<SessionSnapshot> {
    return this.json("/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.json(`/sessions/${id}`);
  }

  postMessage(id: string, content: string): Promise<SessionSnapshot> {
    return this.json(`/sessions/${id}/messages`, {
      method: "POST",
      body: JSON.stringify({ content }),
    });
  }

  postTags(id: string, tags: Record<string, TagSelection>): Promise<SessionSnapshot> {
    return this.json(`/sessions/${id}/tags`, {
      method: "POST",
      body: JSON.stringify({ tags }),
    });
  }

  getMetrics(id: string, experiment?: string, altOrder = false): Promise<MetricsReport> {
    const params = new URLSearchParams();
    if (experiment) params.set("experiment", experiment);
    if (altOrder) params.set("alt_order", "true");
    const query = params.size ? `?${params}` : "";
    return this.json(`/sessions/${id}/metrics${query}`);
  }

  async getHardwareXml(id: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/hardware`);
    if (!response.ok) await parseError(response);
    return await response.text();
  }

  hardwareUrl(id: string): string {
    return `${this.baseUrl}/sessions/${id}/hardware`;
  }

  getTagRules(): Promise<TagRules> {
    return this.json("/tag-rules");
  }

  getExperiments(): Promise<ExperimentInfo[]> {
    return this.json("/experiments");
  }
}
