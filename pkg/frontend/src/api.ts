// Typed client for the convrec session API. Methods return the parsed
// JSON payload or throw ApiError carrying the server's detail string.

export interface AnswerOption {
  id: string;
  label: string;
}

export interface QuestionPayload {
  id: string;
  prompt: string;
  answers: AnswerOption[];
}

export interface TopEntry {
  id: string;
  probability: number;
}

export type SessionStatus = "active" | "stopped" | "contradiction";

export interface SessionPayload {
  session_id: string;
  status: SessionStatus;
  stop_reason: string | null;
  entropy: number;
  nri: number;
  n_items: number;
  questions_asked: number;
  top: TopEntry[];
  question: QuestionPayload | null;
}

export interface RecommendationItem {
  id: string;
  label: string;
  probability: number;
}

export interface RecommendationsPayload {
  session_id: string;
  status: SessionStatus;
  interim: boolean;
  stop_reason: string | null;
  items: RecommendationItem[];
}

export interface HealthPayload {
  status: string;
  kernel_backend: string;
  n_items: number;
  n_questions: number;
  sessions: number;
}

export interface SessionConfig {
  stop_s?: number | null;
  max_questions?: number | null;
  mode?: string;
  order?: string;
}

export interface ChoiceResult {
  session_id: string;
  chosen_item: string;
}

/** The slice of the client the conversation controller needs; tests
 * substitute scripted fakes through this interface. */
export interface SessionApi {
  createSession(config?: SessionConfig): Promise<SessionPayload>;
  nextQuestion(sessionId: string): Promise<SessionPayload>;
  submitAnswer(sessionId: string, questionId: string, answerId: string): Promise<SessionPayload>;
  recommendations(sessionId: string, k?: number): Promise<RecommendationsPayload>;
  choose(sessionId: string, itemId: string): Promise<ChoiceResult>;
  health(): Promise<HealthPayload>;
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }

  /** The 409 the server sends when the answered question is not the posed one. */
  get stale(): boolean {
    return this.status === 409;
  }

  /** True when the request never reached the service at all. */
  get unreachable(): boolean {
    return this.status === 0;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements SessionApi {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // wrap the global so the call keeps its expected receiver in browsers
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  createSession(config: SessionConfig = {}): Promise<SessionPayload> {
    return this.request<SessionPayload>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  nextQuestion(sessionId: string): Promise<SessionPayload> {
    return this.request<SessionPayload>(`/sessions/${sessionId}/next-question`);
  }

  submitAnswer(sessionId: string, questionId: string, answerId: string): Promise<SessionPayload> {
    return this.request<SessionPayload>(`/sessions/${sessionId}/answers`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ question_id: questionId, answer_id: answerId }),
    });
  }

  recommendations(sessionId: string, k = 0): Promise<RecommendationsPayload> {
    return this.request<RecommendationsPayload>(`/sessions/${sessionId}/recommendations?k=${k}`);
  }

  choose(sessionId: string, itemId: string): Promise<ChoiceResult> {
    return this.request<ChoiceResult>(`/sessions/${sessionId}/choice`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ item_id: itemId }),
    });
  }

  health(): Promise<HealthPayload> {
    return this.request<HealthPayload>("/health");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // not a JSON error body, fall back to the bare status
  }
  return `HTTP ${response.status}`;
}
