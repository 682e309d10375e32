// DOM rendering. Every call rebuilds the view from scratch; with this
// few nodes that is cheaper than it sounds and keeps the page an exact
// mirror of the chat state.

import type { SessionPayload } from "./api.js";
import { gauges, percent } from "./state.js";
import type { ChatState } from "./state.js";

export interface Handlers {
  onAnswer(questionId: string, answerId: string, label: string): void;
  onChoose(itemId: string): void;
  onRetry(): void;
  onRestart(): void;
}

export function render(root: HTMLElement, state: ChatState, handlers: Handlers): void {
  root.replaceChildren();
  if (state.transcript.length) root.appendChild(renderTranscript(state));
  switch (state.phase) {
    case "idle":
      break;
    case "loading":
      root.appendChild(el("p", "loading", "Contacting the recommendation service..."));
      break;
    case "question":
      root.appendChild(renderQuestion(state, handlers));
      break;
    case "final":
    case "contradiction":
      root.appendChild(renderFinal(state, handlers));
      break;
    case "error":
      root.appendChild(renderError(state, handlers));
      break;
  }
}

function renderTranscript(state: ChatState): HTMLElement {
  const box = el("section", "transcript");
  for (const turn of state.transcript) {
    const row = el("div", "turn");
    row.appendChild(el("span", "turn-q", turn.prompt));
    row.appendChild(el("span", "turn-a", turn.answer));
    box.appendChild(row);
  }
  return box;
}

function renderQuestion(state: ChatState, handlers: Handlers): HTMLElement {
  const session = state.session as SessionPayload;
  const question = session.question;
  const card = el("section", "question-card");
  if (!question) return card;
  card.appendChild(el("h2", "prompt", question.prompt));
  const answers = el("div", "answers");
  for (const option of question.answers) {
    const button = el("button", "answer", option.label) as HTMLButtonElement;
    button.dataset.answerId = option.id;
    button.disabled = state.busy;
    button.addEventListener("click", () => handlers.onAnswer(question.id, option.id, option.label));
    answers.appendChild(button);
  }
  card.appendChild(answers);
  card.appendChild(renderGauges(session));
  if (session.top.length) card.appendChild(renderLeaders(state, session));
  return card;
}

function renderGauges(session: SessionPayload): HTMLElement {
  const { entropy, candidates } = gauges(session);
  const wrap = el("div", "gauges");
  wrap.appendChild(gaugeRow("Uncertainty", "gauge-entropy", entropy, percent(entropy)));
  wrap.appendChild(
    gaugeRow("Candidates", "gauge-candidates", candidates, `${session.nri} of ${session.n_items}`),
  );
  return wrap;
}

function gaugeRow(label: string, cls: string, fraction: number, text: string): HTMLElement {
  const row = el("div", `gauge ${cls}`);
  row.appendChild(el("span", "gauge-label", label));
  const track = el("div", "gauge-track");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${fraction * 100}%`;
  track.appendChild(fill);
  row.appendChild(track);
  row.appendChild(el("span", "gauge-value", text));
  return row;
}

function renderLeaders(state: ChatState, session: SessionPayload): HTMLElement {
  const box = el("div", "leaders");
  box.appendChild(el("h3", undefined, "Current leaders"));
  const list = el("ol", "leader-list");
  for (const entry of session.top) {
    const li = el("li");
    li.dataset.itemId = entry.id;
    li.appendChild(el("span", "item-name", state.itemLabels[entry.id] ?? entry.id));
    li.appendChild(el("span", "prob", percent(entry.probability)));
    list.appendChild(li);
  }
  box.appendChild(list);
  return box;
}

function renderFinal(state: ChatState, handlers: Handlers): HTMLElement {
  const session = state.session as SessionPayload;
  const contradiction = state.phase === "contradiction";
  const card = el("section", contradiction ? "final-card contradiction" : "final-card");
  card.appendChild(el("h2", undefined, contradiction ? "No exact match" : "Recommendation"));
  const note = stopNote(state);
  if (note) card.appendChild(el("p", "stop-note", note));
  const list = el("ol", "final-list");
  for (const entry of session.top) {
    const li = el("li");
    li.dataset.itemId = entry.id;
    li.appendChild(el("span", "item-name", state.itemLabels[entry.id] ?? entry.id));
    li.appendChild(el("span", "prob", percent(entry.probability)));
    const pick = el("button", "choose", "This one") as HTMLButtonElement;
    pick.disabled = state.busy || state.chosen !== null;
    pick.addEventListener("click", () => handlers.onChoose(entry.id));
    li.appendChild(pick);
    list.appendChild(li);
  }
  card.appendChild(list);
  if (state.chosen) {
    const label = state.itemLabels[state.chosen] ?? state.chosen;
    card.appendChild(el("p", "chosen-note", `Choice saved: ${label}`));
  }
  const restart = el("button", "restart", "Start over") as HTMLButtonElement;
  restart.addEventListener("click", () => handlers.onRestart());
  card.appendChild(restart);
  return card;
}

function stopNote(state: ChatState): string {
  if (state.phase === "contradiction") {
    return "Your answers rule out every item; these are the last standing probabilities.";
  }
  switch (state.session?.stop_reason) {
    case "threshold":
      return "Confident enough to stop.";
    case "max-questions":
      return "Question budget used up.";
    case "exhausted":
      return "Asked everything there is to ask.";
    default:
      return "";
  }
}

function renderError(state: ChatState, handlers: Handlers): HTMLElement {
  const banner = el("section", "error-banner");
  banner.appendChild(el("p", undefined, state.error ?? "Something went wrong."));
  const retry = el("button", "retry", "Retry") as HTMLButtonElement;
  retry.addEventListener("click", () => handlers.onRetry());
  banner.appendChild(retry);
  return banner;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
