"""Question selection, stopping rule, and the conversation controller.

The controller alternates: check stop conditions, pick the question with
the lowest conditional entropy, obtain an answer, condition the belief.
Answer sources are plain callables, so the same loop drives live
sessions (service), recorded questionnaires (evaluation replay), and
synthetic users (tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .catalog import Question
from .engine import EngineModel, score_question
from .errors import AnswerSourceError, InferenceError
from .inference import ConversationState, init_session, ranked_items, retained, update

AnswerSource = Callable[[Question], "str | None"]


@dataclass(frozen=True)
class StoppingConfig:
    """Loop parameters.

    ``stop_s`` is the concentration target: stop once the normalized
    entropy falls to that of a uniform distribution over s items
    (inclusive comparison, so s=1 halts on a pinned item). ``None``
    disables the entropy stop. ``order`` switches between adaptive
    selection and the static catalogue order.
    """

    stop_s: int | None = 1
    max_questions: int | None = None
    mode: str = "strict"  # strict | soft contradiction handling
    order: str = "adaptive"  # adaptive | static

    def __post_init__(self):
        if self.mode not in ("strict", "soft"):
            raise ValueError(f"mode must be 'strict' or 'soft', got {self.mode!r}")
        if self.order not in ("adaptive", "static"):
            raise ValueError(f"order must be 'adaptive' or 'static', got {self.order!r}")
        if self.max_questions is not None and self.max_questions < 0:
            raise ValueError("max_questions must be >= 0")


@dataclass(frozen=True)
class Stop:
    """Selection outcome when the conversation should end."""

    reason: str  # threshold | exhausted | max-questions | contradiction


@dataclass(frozen=True)
class TranscriptStep:
    question_id: str
    answer_id: str
    entropy: float
    nri: int
    skipped: bool = False  # soft-mode contradicting answer, not conditioned on


@dataclass(frozen=True)
class Transcript:
    """Full record of one conversation."""

    steps: tuple[TranscriptStep, ...]
    stop_reason: str
    ranking: tuple[tuple[str, float], ...]
    entropy_trace: tuple[float, ...]
    contradiction: bool
    state: ConversationState

    @property
    def questions_asked(self) -> int:
        return len(self.steps)


def stopping_threshold(s: int, n: int) -> float:
    """Normalized entropy of a uniform distribution over s of n items."""
    if not 1 <= s <= n:
        raise ValueError(f"s must satisfy 1 <= s <= {n}, got {s}")
    if n == 1:
        return 0.0
    return math.log(s) / math.log(n)


def conditional_entropy(state: ConversationState, question_id: str) -> float:
    """H(items | question) under the current belief, in [0, 1]."""
    return score_question(state.model, state.belief, question_id)


def next_question(
    state: ConversationState,
    unasked: Sequence[str],
    config: StoppingConfig,
) -> str | Stop:
    """Pick the next question, or a Stop with the reason.

    Stop precedence: contradiction, entropy threshold, max questions,
    exhaustion. Ties in the entropy score go to catalogue order (the
    order of ``unasked``, which callers keep catalogue-sorted).
    Relevance-gated questions whose relevant items have no posterior
    mass are unaskable and are skipped over.
    """
    if state.contradiction:
        return Stop("contradiction")
    if config.stop_s is not None:
        threshold = stopping_threshold(config.stop_s, state.model.n_items)
        if state.entropy <= threshold:
            return Stop("threshold")
    if config.max_questions is not None and len(state.answered) + len(state.skipped) >= config.max_questions:
        return Stop("max-questions")
    candidates = [q for q in unasked if q not in state.asked]
    if not candidates:
        return Stop("exhausted")
    if config.order == "static":
        return candidates[0]
    best, best_score = None, math.inf
    for qid in candidates:
        try:
            score = conditional_entropy(state, qid)
        except InferenceError:
            continue  # unaskable right now
        if score < best_score - 1e-15:
            best, best_score = qid, score
    if best is None:
        return Stop("exhausted")
    return best


def run_conversation(
    model: EngineModel,
    answer_source: AnswerSource,
    config: StoppingConfig | None = None,
) -> Transcript:
    """Drive one conversation to its stop.

    ``answer_source`` maps the posed Question to an answer id; ``None``
    means the source has no answer for it (a recorded log in replay), in
    which case the controller discards the question and moves to the
    next best. Exceptions from the source are wrapped in
    AnswerSourceError carrying the partial transcript.
    """
    config = config or StoppingConfig()
    state = init_session(model)
    unasked = list(model.question_ids)
    steps: list[TranscriptStep] = []
    while True:
        picked = next_question(state, unasked, config)
        if isinstance(picked, Stop):
            reason = picked.reason
            break
        question = model.catalog.question(picked)
        try:
            answer = answer_source(question)
        except Exception as exc:
            raise AnswerSourceError(
                f"answer source failed on question {picked!r}: {exc}",
                transcript=_transcript(steps, "aborted", state),
            ) from exc
        unasked.remove(picked)
        if answer is None:
            continue
        state = update(state, picked, answer, mode=config.mode)
        if state.skipped and state.skipped[-1] == (picked, answer):
            steps.append(
                TranscriptStep(picked, answer, state.entropy, retained(state)[1], skipped=True)
            )
        else:
            steps.append(
                TranscriptStep(picked, answer, state.entropy, retained(state)[1])
            )
    return _transcript(steps, reason, state)


def _transcript(steps: list[TranscriptStep], reason: str, state: ConversationState) -> Transcript:
    return Transcript(
        steps=tuple(steps),
        stop_reason=reason,
        ranking=ranked_items(state),
        entropy_trace=state.entropy_trace,
        contradiction=state.contradiction,
        state=state,
    )
