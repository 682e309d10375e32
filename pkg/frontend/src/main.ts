// Page entry point. A few knobs come from the query string so the same
// static page can drive different setups:
//   ?s=2          stop once the top 2 items carry enough of the mass
//   ?s=none       never stop on entropy, ask until questions run out
//   ?max=4        cap the number of questions
//   ?mode=lenient skip contradictory answers instead of halting
//   ?api=http://host:port   service on another origin (CORS is open)

import { ApiClient } from "./api.js";
import type { FetchLike, SessionConfig } from "./api.js";
import { ChatController } from "./chat.js";
import { render } from "./ui.js";
import type { Handlers } from "./ui.js";

export function configFromQuery(search: string): { base: string; session: SessionConfig } {
  const params = new URLSearchParams(search);
  const session: SessionConfig = {};
  const s = params.get("s");
  if (s === "none") session.stop_s = null;
  else if (s !== null) session.stop_s = Number(s);
  const max = params.get("max");
  if (max !== null) session.max_questions = Number(max);
  const mode = params.get("mode");
  if (mode) session.mode = mode;
  const order = params.get("order");
  if (order) session.order = order;
  return { base: params.get("api") ?? "", session };
}

export function boot(root: HTMLElement, search: string, fetchFn?: FetchLike): ChatController {
  const { base, session } = configFromQuery(search);
  const client = new ApiClient(base, fetchFn);
  let controller: ChatController;
  const handlers: Handlers = {
    onAnswer: (qid, aid, label) => void controller.answer(qid, aid, label),
    onChoose: (itemId) => void controller.choose(itemId),
    onRetry: () => void controller.retry(),
    onRestart: () => void controller.start(),
  };
  controller = new ChatController(client, (state) => render(root, state, handlers), session);
  void controller.start();
  return controller;
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot) boot(appRoot, location.search);
