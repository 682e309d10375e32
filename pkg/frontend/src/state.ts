// View state for the chat page. The DOM is rebuilt from this record on
// every change, and the record itself derives from the last service
// response, so the client can always resync from GET next-question
// without losing anything (the transcript is the only local history).

import type { SessionPayload } from "./api.js";

export type Phase = "idle" | "loading" | "question" | "final" | "contradiction" | "error";

export interface TranscriptEntry {
  prompt: string;
  answer: string;
}

export interface ChatState {
  phase: Phase;
  session: SessionPayload | null;
  transcript: TranscriptEntry[];
  /** item id -> catalogue label, filled lazily from the recommendations endpoint */
  itemLabels: Record<string, string>;
  chosen: string | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): ChatState {
  return {
    phase: "idle",
    session: null,
    transcript: [],
    itemLabels: {},
    chosen: null,
    busy: false,
    error: null,
  };
}

export function phaseFor(payload: SessionPayload): Phase {
  if (payload.status === "contradiction") return "contradiction";
  if (payload.status === "stopped") return "final";
  // an active session always carries a posed question; treat a missing
  // one as final rather than rendering an empty card
  return payload.question ? "question" : "final";
}

export function withSession(
  state: ChatState,
  payload: SessionPayload,
  entry?: TranscriptEntry,
): ChatState {
  return {
    ...state,
    phase: phaseFor(payload),
    session: payload,
    transcript: entry ? [...state.transcript, entry] : state.transcript,
    busy: false,
    error: null,
  };
}

export function withLabels(state: ChatState, labels: Record<string, string>): ChatState {
  return { ...state, itemLabels: { ...state.itemLabels, ...labels } };
}

export function withError(state: ChatState, message: string): ChatState {
  return { ...state, phase: "error", busy: false, error: message };
}

/** Gauge fractions, both clamped to [0, 1]. Entropy arrives from the
 * server already normalized to that range; candidates is NRI over the
 * catalogue size. No probability math happens client-side. */
export function gauges(payload: SessionPayload): { entropy: number; candidates: number } {
  const candidates = payload.n_items > 0 ? payload.nri / payload.n_items : 0;
  return { entropy: clamp01(payload.entropy), candidates: clamp01(candidates) };
}

function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}

export function percent(p: number): string {
  return `${+(p * 100).toFixed(1)}%`;
}
