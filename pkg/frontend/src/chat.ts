// Conversation controller: one session per page, strictly sequential.
// The server picks every question; this side only posts the chosen
// answer and re-renders from whatever comes back. On a stale-question
// conflict it resyncs from the next-question endpoint instead of
// guessing at local state.

import { ApiError } from "./api.js";
import type { SessionApi, SessionConfig, SessionPayload } from "./api.js";
import { initialState, withError, withLabels, withSession } from "./state.js";
import type { ChatState, TranscriptEntry } from "./state.js";

export class ChatController {
  state: ChatState = initialState();

  constructor(
    private readonly client: SessionApi,
    private readonly onChange: (state: ChatState) => void,
    private readonly config: SessionConfig = {},
  ) {}

  async start(): Promise<void> {
    this.emit({ ...initialState(), phase: "loading", busy: true });
    try {
      const payload = await this.client.createSession(this.config);
      this.apply(payload);
    } catch (err) {
      this.emit(withError(this.state, messageOf(err)));
    }
  }

  /**
   * Post the answer for the currently posed question. Calls made while a
   * request is already in flight are dropped, so a double click sends
   * one request, not two.
   */
  async answer(questionId: string, answerId: string, answerLabel: string): Promise<void> {
    const session = this.state.session;
    if (!session || this.state.busy || this.state.phase !== "question") return;
    const prompt = session.question?.prompt ?? questionId;
    this.emit({ ...this.state, busy: true });
    try {
      const payload = await this.client.submitAnswer(session.session_id, questionId, answerId);
      this.apply(payload, { prompt, answer: answerLabel });
    } catch (err) {
      if (err instanceof ApiError && err.stale) {
        // the server has moved past this question; fetch its view
        await this.resync();
        return;
      }
      this.emit(withError(this.state, messageOf(err)));
    }
  }

  /** Replace local state with the server's authoritative view. */
  async resync(): Promise<void> {
    const session = this.state.session;
    if (!session) return this.start();
    try {
      this.apply(await this.client.nextQuestion(session.session_id));
    } catch (err) {
      this.emit(withError(this.state, messageOf(err)));
    }
  }

  async choose(itemId: string): Promise<void> {
    const session = this.state.session;
    if (!session || this.state.busy || this.state.chosen) return;
    this.emit({ ...this.state, busy: true });
    try {
      const result = await this.client.choose(session.session_id, itemId);
      this.emit({ ...this.state, busy: false, chosen: result.chosen_item });
    } catch (err) {
      this.emit(withError(this.state, messageOf(err)));
    }
  }

  retry(): Promise<void> {
    return this.state.session ? this.resync() : this.start();
  }

  private apply(payload: SessionPayload, entry?: TranscriptEntry): void {
    const next = withSession(this.state, payload, entry);
    this.emit(next);
    // Item labels live in the recommendations payload, not the session
    // one. The final card renders immediately from ids and swaps labels
    // in when this follow-up lands; a failure here is cosmetic.
    if (next.phase === "final" || next.phase === "contradiction") {
      this.client
        .recommendations(payload.session_id, 0)
        .then((rec) => {
          const labels: Record<string, string> = {};
          for (const item of rec.items) labels[item.id] = item.label;
          this.emit(withLabels(this.state, labels));
        })
        .catch(() => {});
    }
  }

  private emit(next: ChatState): void {
    this.state = next;
    this.onChange(next);
  }
}

function messageOf(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
