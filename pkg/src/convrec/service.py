"""HTTP session API over the conversation engine.

Sessions are strictly sequential: the server poses one question at a
time and only the posed question may be answered, so the adaptive
controller stays authoritative over question order. Every state change
is appended to a JSONL event log; restarting the service replays that
log and reproduces the exact same posteriors. Stopped sessions also get
a JSON snapshot, which doubles as input for the learning pipeline.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .adaptive import Stop, StoppingConfig, next_question, stopping_threshold
from .catalog import Question
from .engine import EngineModel
from .errors import InferenceError
from .inference import ConversationState, init_session, ranked_items, retained, update
from .kernels import backend_name


@dataclass
class Session:
    id: str
    state: ConversationState
    config: StoppingConfig
    status: str = "active"  # active | stopped | contradiction
    posed: str | None = None
    stop_reason: str | None = None
    unasked: list[str] = field(default_factory=list)
    chosen_item: str | None = None
    created_at: float = 0.0
    updated_at: float = 0.0


class SessionStore:
    """All live sessions plus their on-disk event log.

    A single lock serializes mutations; the model itself is immutable
    and shared, so reads of finished state need no coordination beyond
    the dict access.
    """

    def __init__(self, model: EngineModel, persist_dir: str | Path | None = None):
        self.model = model
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._persist_dir = Path(persist_dir) if persist_dir else None
        self._replaying = False
        if self._persist_dir:
            self._persist_dir.mkdir(parents=True, exist_ok=True)
            self._replay_events()

    # -- persistence ------------------------------------------------------

    @property
    def events_path(self) -> Path | None:
        return self._persist_dir / "events.jsonl" if self._persist_dir else None

    def _append_event(self, event: dict) -> None:
        if self._persist_dir is None or self._replaying:
            return
        event = {"ts": time.time(), **event}
        with open(self.events_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def _snapshot(self, session: Session) -> None:
        if self._persist_dir is None or self._replaying:
            return
        snap_dir = self._persist_dir / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        payload = {
            "session_id": session.id,
            "status": session.status,
            "stop_reason": session.stop_reason,
            "answered": [list(p) for p in session.state.answered],
            "skipped": [list(p) for p in session.state.skipped],
            "posterior": {
                iid: float(p)
                for iid, p in zip(self.model.item_ids, session.state.posterior)
            },
            "entropy": session.state.entropy,
            "nri": retained(session.state)[1],
            "chosen_item": session.chosen_item,
        }
        (snap_dir / f"{session.id}.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )

    def _replay_events(self) -> None:
        path = self.events_path
        if path is None or not path.exists():
            return
        self._replaying = True
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    kind = event.get("type")
                    if kind == "created":
                        cfg = event.get("config", {})
                        self.create(
                            StoppingConfig(
                                stop_s=cfg.get("stop_s", 1),
                                max_questions=cfg.get("max_questions"),
                                mode=cfg.get("mode", "strict"),
                                order=cfg.get("order", "adaptive"),
                            ),
                            session_id=event["session_id"],
                        )
                    elif kind == "answer":
                        self.answer(
                            event["session_id"], event["question_id"], event["answer_id"]
                        )
                    elif kind == "choice":
                        self.choose(event["session_id"], event["item_id"])
                    # "stopped" events are derived state; replay recomputes them
        finally:
            self._replaying = False

    # -- operations -------------------------------------------------------

    def _advance(self, session: Session) -> None:
        """Refresh the posed question / stop status from the controller."""
        picked = next_question(session.state, session.unasked, session.config)
        if isinstance(picked, Stop):
            session.posed = None
            session.stop_reason = picked.reason
            session.status = (
                "contradiction" if picked.reason == "contradiction" else "stopped"
            )
            self._append_event(
                {"type": "stopped", "session_id": session.id, "reason": picked.reason}
            )
            self._snapshot(session)
        else:
            session.posed = picked

    def create(self, config: StoppingConfig, session_id: str | None = None) -> Session:
        with self._lock:
            sid = session_id or uuid.uuid4().hex[:12]
            if sid in self.sessions:
                raise ValueError(f"session id {sid!r} already exists")
            now = time.time()
            session = Session(
                id=sid,
                state=init_session(self.model),
                config=config,
                unasked=list(self.model.question_ids),
                created_at=now,
                updated_at=now,
            )
            self.sessions[sid] = session
            self._append_event(
                {
                    "type": "created",
                    "session_id": sid,
                    "config": {
                        "stop_s": config.stop_s,
                        "max_questions": config.max_questions,
                        "mode": config.mode,
                        "order": config.order,
                    },
                }
            )
            self._advance(session)
            return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def answer(self, session_id: str, question_id: str, answer_id: str) -> Session:
        with self._lock:
            session = self.get(session_id)
            if session.status != "active":
                raise StaleQuestion(
                    f"session {session_id!r} is {session.status}, not accepting answers"
                )
            if question_id != session.posed:
                raise StaleQuestion(
                    f"question {question_id!r} is not the posed one ({session.posed!r})"
                )
            # answer id validated here before any state change
            self.model.answer_position(question_id, answer_id)
            session.state = update(
                session.state, question_id, answer_id, mode=session.config.mode
            )
            session.unasked.remove(question_id)
            session.updated_at = time.time()
            self._append_event(
                {
                    "type": "answer",
                    "session_id": session_id,
                    "question_id": question_id,
                    "answer_id": answer_id,
                }
            )
            self._advance(session)
            return session

    def choose(self, session_id: str, item_id: str) -> Session:
        with self._lock:
            session = self.get(session_id)
            self.model.catalog.item(item_id)
            session.chosen_item = item_id
            session.updated_at = time.time()
            self._append_event(
                {"type": "choice", "session_id": session_id, "item_id": item_id}
            )
            self._snapshot(session)
            return session


class StaleQuestion(RuntimeError):
    pass


# -- payloads ---------------------------------------------------------------


class CreateSessionBody(BaseModel):
    stop_s: int | None = 1
    max_questions: int | None = Field(default=None, ge=0)
    mode: str = "strict"
    order: str = "adaptive"


class AnswerBody(BaseModel):
    question_id: str
    answer_id: str


class ChoiceBody(BaseModel):
    item_id: str


def _question_payload(question: Question) -> dict:
    return {
        "id": question.id,
        "prompt": question.prompt,
        "answers": [{"id": a.id, "label": a.label} for a in question.answers],
    }


def _session_payload(store: SessionStore, session: Session, k: int = 5) -> dict:
    state = session.state
    top = ranked_items(state)[:k]
    payload: dict[str, Any] = {
        "session_id": session.id,
        "status": session.status,
        "stop_reason": session.stop_reason,
        "entropy": state.entropy,
        "nri": retained(state)[1],
        "n_items": store.model.n_items,
        "questions_asked": len(state.answered) + len(state.skipped),
        "top": [{"id": iid, "probability": p} for iid, p in top],
        "question": None,
    }
    if session.posed is not None:
        payload["question"] = _question_payload(store.model.catalog.question(session.posed))
    return payload


def create_app(
    model: EngineModel,
    *,
    persist_dir: str | Path | None = None,
    top_k: int = 5,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the FastAPI app around one immutable compiled model.

    static_dir, when given, is mounted at the root so a browser client
    can be served from the same origin as the API. The API routes take
    precedence over files.
    """
    app = FastAPI(title="convrec", version="1.0")
    # the service carries no credentials and no auth, so an open CORS
    # policy just lets separately hosted pages talk to it
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(model, persist_dir)
    app.state.store = store

    def _get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "kernel_backend": backend_name(),
            "n_items": model.n_items,
            "n_questions": len(model.question_ids),
            "sessions": len(store.sessions),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        try:
            config = StoppingConfig(
                stop_s=body.stop_s,
                max_questions=body.max_questions,
                mode=body.mode,
                order=body.order,
            )
            if config.stop_s is not None:
                # range-checks s against the catalogue size up front
                stopping_threshold(config.stop_s, model.n_items)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = store.create(config)
        return _session_payload(store, session, top_k)

    @app.get("/sessions/{session_id}/next-question")
    def get_next_question(session_id: str) -> dict:
        return _session_payload(store, _get_session(session_id), top_k)

    @app.post("/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerBody) -> dict:
        _get_session(session_id)
        try:
            session = store.answer(session_id, body.question_id, body.answer_id)
        except StaleQuestion as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (ValueError, KeyError, InferenceError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _session_payload(store, session, top_k)

    @app.get("/sessions/{session_id}/recommendations")
    def get_recommendations(
        session_id: str, k: int = Query(default=0, ge=0)
    ) -> dict:
        session = _get_session(session_id)
        limit = k or model.n_items
        ranking = ranked_items(session.state)[:limit]
        return {
            "session_id": session.id,
            "status": session.status,
            "interim": session.status == "active",
            "stop_reason": session.stop_reason,
            "items": [
                {
                    "id": iid,
                    "label": model.catalog.item(iid).label,
                    "probability": p,
                }
                for iid, p in ranking
            ],
        }

    @app.post("/sessions/{session_id}/choice")
    def post_choice(session_id: str, body: ChoiceBody) -> dict:
        _get_session(session_id)
        try:
            session = store.choose(session_id, body.item_id)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session.id, "chosen_item": session.chosen_item}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webchat")

    return app


def events_to_observation_rows(events_path: str | Path) -> list[dict]:
    """Flatten a service event log into learning-ready CSV rows.

    Only sessions with a recorded item choice contribute; each of their
    answers becomes one row of session_id, chosen_item, question_id,
    answer_id.
    """
    answers: dict[str, list[tuple[str, str]]] = {}
    chosen: dict[str, str] = {}
    with open(events_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            event = json.loads(line)
            sid = event.get("session_id")
            if event.get("type") == "answer":
                answers.setdefault(sid, []).append(
                    (event["question_id"], event["answer_id"])
                )
            elif event.get("type") == "choice":
                chosen[sid] = event["item_id"]
    rows = []
    for sid, item in chosen.items():
        for qid, aid in answers.get(sid, ()):
            rows.append(
                {
                    "session_id": sid,
                    "chosen_item": item,
                    "question_id": qid,
                    "answer_id": aid,
                }
            )
    return rows
