// Canned payloads matching what the service returns for the bundled
// entertainer catalogue, captured from a live run and trimmed to the
// fields the client reads.

import type { QuestionPayload, RecommendationsPayload, SessionPayload } from "../src/api.js";

export const SID = "ab12cd34ef56";

export const ENTERTAINMENT_QUESTION: QuestionPayload = {
  id: "entertainment_type",
  prompt: "Which entertainment are you looking for?",
  answers: [
    { id: "dj", label: "DJ" },
    { id: "band", label: "Band" },
    { id: "musician", label: "Musician" },
    { id: "entertainer", label: "Entertainer" },
  ],
};

export const EVENT_QUESTION: QuestionPayload = {
  id: "event_type",
  prompt: "Which event are you organizing?",
  answers: [
    { id: "wedding", label: "Wedding" },
    { id: "corporate", label: "Corporate event" },
    { id: "birthday", label: "Birthday" },
    { id: "kids_party", label: "Party for kids" },
  ],
};

/** Fresh session, first question posed. */
export const FRESH: SessionPayload = {
  session_id: SID,
  status: "active",
  stop_reason: null,
  entropy: 0.9463946713954506,
  nri: 3,
  n_items: 3,
  questions_asked: 0,
  top: [
    { id: "i1", probability: 0.5 },
    { id: "i2", probability: 0.25 },
    { id: "i3", probability: 0.25 },
  ],
  question: ENTERTAINMENT_QUESTION,
};

/** After answering "dj" with the default stop threshold. */
export const STOPPED_DJ: SessionPayload = {
  session_id: SID,
  status: "stopped",
  stop_reason: "threshold",
  entropy: 0,
  nri: 1,
  n_items: 3,
  questions_asked: 1,
  top: [
    { id: "i1", probability: 1 },
    { id: "i2", probability: 0 },
    { id: "i3", probability: 0 },
  ],
  question: null,
};

/** Same answer under stop_s=null: the session keeps going and poses the
 * remaining question. This is what a stale client resyncs into after
 * another tab answered first. */
export const EVENT_POSED: SessionPayload = {
  session_id: SID,
  status: "active",
  stop_reason: null,
  entropy: 0,
  nri: 1,
  n_items: 3,
  questions_asked: 1,
  top: [
    { id: "i1", probability: 1 },
    { id: "i2", probability: 0 },
    { id: "i3", probability: 0 },
  ],
  question: EVENT_QUESTION,
};

/** band followed by birthday under strict mode: belief frozen at the
 * post-band posterior, conversation flagged. */
export const CONTRADICTION: SessionPayload = {
  session_id: SID,
  status: "contradiction",
  stop_reason: "contradiction",
  entropy: 0,
  nri: 1,
  n_items: 3,
  questions_asked: 2,
  top: [
    { id: "i2", probability: 1 },
    { id: "i1", probability: 0 },
    { id: "i3", probability: 0 },
  ],
  question: null,
};

export const RECS: RecommendationsPayload = {
  session_id: SID,
  status: "stopped",
  interim: false,
  stop_reason: "threshold",
  items: [
    { id: "i1", label: "DJ available for all types of events", probability: 1 },
    { id: "i2", label: "Band available for weddings and corporate events", probability: 0 },
    { id: "i3", label: "Magician available for birthdays and parties for kids", probability: 0 },
  ],
};

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
