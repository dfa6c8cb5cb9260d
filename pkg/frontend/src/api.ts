/**
 * Typed client for the knowledge-base service. Every verdict shown in the
 * UI comes from these endpoints; nothing is re-derived in the browser.
 */

export interface CaseNode {
  types: string[];
  name?: string | null;
  attrs: Record<string, unknown[]>;
}

export interface FiredRule {
  id: string;
  condition: string;
}

export interface ConflictPayload {
  session: string;
  case_index: number;
  kind: "new_rule" | "refinement";
  case: CaseNode;
  cornerstone: CaseNode | null;
  fired_rule: FiredRule | null;
  wrong_conclusion: unknown;
  expected_conclusion: unknown;
  target: { attribute: string; type: string; mutually_exclusive: boolean };
}

export interface Verdict {
  accepted: boolean;
  true_on_case?: boolean;
  true_on_cornerstone?: boolean | null;
  error?: string;
  state?: string;
}

export interface QueryResponse {
  columns: string[];
  rows: unknown[][];
}

export interface SessionState {
  id: string;
  state: "idle" | "awaiting_expert" | "done";
  case_index: number;
  total_cases: number;
}

export interface TraceResponse {
  conclusions: unknown[];
  entries: { rule: string; fired: boolean; conclusion: unknown; path: string[] }[];
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly payload: Record<string, unknown> = {},
  ) {
    super(message);
  }

  get position(): number | null {
    const p = this.payload["position"];
    return typeof p === "number" ? p : null;
  }

  get count(): number | null {
    const c = this.payload["count"];
    return typeof c === "number" ? c : null;
  }
}

export class SessionNotFound extends ApiError {}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<{ status: number; data: unknown }> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    const ctype = resp.headers.get("Content-Type") ?? "";
    const data = text && ctype.includes("json") ? JSON.parse(text) : text;
    if (resp.status === 404) {
      const msg = asRecord(data)["error"];
      throw new SessionNotFound(String(msg ?? "not found"), 404, asRecord(data));
    }
    if (resp.status >= 400) {
      const payload = asRecord(data);
      throw new ApiError(String(payload["error"] ?? resp.status), resp.status, payload);
    }
    return { status: resp.status, data };
  }

  async health(): Promise<{ status: string; generation: number }> {
    const { data } = await this.request("GET", "/health");
    return data as { status: string; generation: number };
  }

  async query(text: string): Promise<QueryResponse> {
    const { data } = await this.request("POST", "/query", { text });
    return data as QueryResponse;
  }

  async createSession(body: unknown): Promise<{ id: string; state: string }> {
    const { data } = await this.request("POST", "/fit/sessions", body);
    return data as { id: string; state: string };
  }

  async sessionState(id: string): Promise<SessionState> {
    const { data } = await this.request("GET", `/fit/sessions/${id}`);
    return data as SessionState;
  }

  async pending(id: string): Promise<ConflictPayload | null> {
    const { status, data } = await this.request("GET", `/fit/sessions/${id}/pending`);
    if (status === 204) return null;
    return data as ConflictPayload;
  }

  async validateCondition(id: string, eqlText: string): Promise<Verdict> {
    const { data } = await this.request(
      "POST",
      `/fit/sessions/${id}/condition/validate`,
      { eql_text: eqlText },
    );
    return data as Verdict;
  }

  async submitCondition(
    id: string,
    eqlText: string,
    conclusionText: string | null,
  ): Promise<Verdict> {
    try {
      const { data } = await this.request("POST", `/fit/sessions/${id}/condition`, {
        eql_text: eqlText,
        conclusion_text: conclusionText,
      });
      return data as Verdict;
    } catch (err) {
      // a rejected condition is a structured verdict, not a transport error
      if (err instanceof ApiError && err.status === 422) {
        return { accepted: false, ...err.payload } as Verdict;
      }
      throw err;
    }
  }

  async ruleTree(name: string): Promise<string> {
    const { data } = await this.request("GET", `/ruletree/${name}`);
    return data as string;
  }

  async trace(sessionId: string, caseIndex: number): Promise<TraceResponse> {
    const { data } = await this.request("GET", `/trace/${sessionId}/${caseIndex}`);
    return data as TraceResponse;
  }
}

function asRecord(v: unknown): Record<string, unknown> {
  return typeof v === "object" && v !== null ? (v as Record<string, unknown>) : {};
}

/** Render a service value (entity, type tag, conclusion, scalar) as text. */
export function formatValue(v: unknown): string {
  if (v === null || v === undefined) return "";
  if (typeof v === "object") {
    const rec = v as Record<string, unknown>;
    if ("$entity" in rec) {
      const ent = rec["$entity"] as { id: string; iri?: string | null };
      return ent.iri ?? ent.id;
    }
    if ("$type" in rec) return String(rec["$type"]);
    if ("$conclusion" in rec) {
      const c = rec["$conclusion"] as { type: string; fields: Record<string, unknown> };
      const inner = Object.entries(c.fields)
        .map(([k, val]) => `${k}=${formatValue(val)}`)
        .join(", ");
      return `${c.type}{${inner}}`;
    }
    if ("types" in rec && "attrs" in rec) {
      const node = rec as unknown as CaseNode;
      return node.name ?? `<${node.types.join(",")}>`;
    }
  }
  return String(v);
}
