"""Replay harness, metrics, threshold sweeps, and synthetic data.

Replays recorded questionnaires through the adaptive controller and
reports entropy/NRI trajectories, the fraction of reference items
retained (FI), and threshold-sweep curves. Also ships generators for
synthetic catalogues and answer logs so curve shapes can be studied
without access to production data.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .adaptive import StoppingConfig, Transcript, TranscriptStep, run_conversation, stopping_threshold
from .catalog import CatalogModel, load_catalog
from .engine import EngineModel, item_posterior
from .errors import ConvrecError
from .kernels import backend_name


class EvaluationError(ConvrecError, ValueError):
    pass


@dataclass(frozen=True)
class SessionRecord:
    """One recorded questionnaire: answers given, plus optional ground truth."""

    session_id: str
    answers: tuple[tuple[str, str], ...]
    reference: tuple[str, ...] | None = None
    item: str | None = None


@dataclass(frozen=True)
class SessionMetrics:
    session_id: str
    steps: tuple[TranscriptStep, ...]
    entropy_trace: tuple[float, ...]
    nri_trace: tuple[int, ...]
    stop_reason: str
    retained_ids: tuple[str, ...]
    fraction_retained: float | None
    reference_size: int | None

    @property
    def questions_asked(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ReplayMetrics:
    """Per-session trajectories plus the padded mean curves."""

    sessions: tuple[SessionMetrics, ...]
    mean_entropy_curve: tuple[float, ...]
    mean_nri_curve: tuple[float, ...]
    mean_fraction_retained: float | None
    empty_reference_count: int
    n_items: int
    n_questions: int


@dataclass(frozen=True)
class ThresholdSweep:
    """Mean NRI/n and NQ/m as functions of the stopping size s."""

    s_values: tuple[int, ...]
    thresholds: tuple[float, ...]
    mean_nri_fraction: tuple[float, ...]
    mean_questions_fraction: tuple[float, ...]


def fraction_items_retained(retained_ids, reference_ids) -> float:
    """|retained ∩ reference| / |reference|."""
    reference = set(reference_ids)
    if not reference:
        raise EvaluationError("reference set is empty")
    return len(set(retained_ids) & reference) / len(reference)


def read_replay_log(path: str | Path) -> list[SessionRecord]:
    """Read a JSONL answer log, one session per line.

    Expected shape per line: ``{"session_id": ..., "answers": [[question,
    answer], ...]}`` with optional ``"reference"`` (item ids the session's
    advisors suggested) and ``"item"`` (the eventually chosen item).
    """
    records: list[SessionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvaluationError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(obj, dict) or "session_id" not in obj or "answers" not in obj:
                raise EvaluationError(
                    f"{path}:{lineno}: expected object with 'session_id' and 'answers'"
                )
            raw = obj["answers"]
            if not isinstance(raw, list) or not all(
                isinstance(p, (list, tuple)) and len(p) == 2 for p in raw
            ):
                raise EvaluationError(f"{path}:{lineno}: 'answers' must be [question, answer] pairs")
            answers = tuple((str(q), str(a)) for q, a in raw)
            if len({q for q, _ in answers}) != len(answers):
                raise EvaluationError(f"{path}:{lineno}: duplicate question in session")
            reference = obj.get("reference")
            if reference is not None:
                reference = tuple(str(x) for x in reference)
            records.append(
                SessionRecord(
                    session_id=str(obj["session_id"]),
                    answers=answers,
                    reference=reference,
                    item=str(obj["item"]) if obj.get("item") is not None else None,
                )
            )
    return records


def write_replay_log(records: Sequence[SessionRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {"session_id": rec.session_id, "answers": [list(p) for p in rec.answers]}
            if rec.reference is not None:
                obj["reference"] = list(rec.reference)
            if rec.item is not None:
                obj["item"] = rec.item
            fh.write(json.dumps(obj) + "\n")
    return path


def _validate_record(model: EngineModel, rec: SessionRecord) -> None:
    catalog = model.catalog
    for qid, aid in rec.answers:
        if not catalog.has_question(qid):
            raise EvaluationError(f"session {rec.session_id!r}: unknown question {qid!r}")
        catalog.question(qid).answer_index(aid)
    for iid in rec.reference or ():
        catalog.item(iid)


def _session_traces(transcript: Transcript, prior_nri: int) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Entropy and NRI after 0, 1, ... effective answers."""
    nris = [prior_nri] + [st.nri for st in transcript.steps if not st.skipped]
    return transcript.entropy_trace, tuple(nris)


def _pad_mean(traces: Sequence[Sequence[float]]) -> tuple[float, ...]:
    """Elementwise mean with carry-forward padding to the longest trace."""
    width = max(len(t) for t in traces)
    acc = np.zeros(width)
    for t in traces:
        row = np.asarray(t, dtype=float)
        acc[: len(row)] += row
        if len(row) < width:
            acc[len(row):] += row[-1]
    return tuple(acc / len(traces))


def replay(
    model: EngineModel,
    records: Sequence[SessionRecord],
    config: StoppingConfig | None = None,
) -> ReplayMetrics:
    """Replay every session through the adaptive loop and aggregate.

    The default configuration disables the entropy stop so the whole
    questionnaire is consumed, which is what FI against an external
    reference needs. Questions missing from a session's log are skipped
    to the next best candidate. FI is only computed for sessions that
    carry a non-empty reference set; sessions with an empty one are
    counted separately and excluded from the mean.
    """
    if not records:
        raise EvaluationError("no sessions in the log")
    config = config or StoppingConfig(stop_s=None)
    prior_nri = int(np.count_nonzero(item_posterior(model, model.prior) > 0.0))

    sessions: list[SessionMetrics] = []
    fis: list[float] = []
    empty_refs = 0
    for rec in records:
        _validate_record(model, rec)
        answers = dict(rec.answers)
        transcript = run_conversation(model, lambda q: answers.get(q.id), config)
        entropies, nris = _session_traces(transcript, prior_nri)
        retained_ids = tuple(iid for iid, p in transcript.ranking if p > 0.0)
        fi = None
        ref_size = None
        if rec.reference is not None:
            ref_size = len(rec.reference)
            if ref_size == 0:
                empty_refs += 1
            else:
                fi = fraction_items_retained(retained_ids, rec.reference)
                fis.append(fi)
        sessions.append(
            SessionMetrics(
                session_id=rec.session_id,
                steps=transcript.steps,
                entropy_trace=entropies,
                nri_trace=nris,
                stop_reason=transcript.stop_reason,
                retained_ids=retained_ids,
                fraction_retained=fi,
                reference_size=ref_size,
            )
        )
    return ReplayMetrics(
        sessions=tuple(sessions),
        mean_entropy_curve=_pad_mean([s.entropy_trace for s in sessions]),
        mean_nri_curve=_pad_mean([s.nri_trace for s in sessions]),
        mean_fraction_retained=(sum(fis) / len(fis)) if fis else None,
        empty_reference_count=empty_refs,
        n_items=model.n_items,
        n_questions=len(model.question_ids),
    )


def sweep_threshold(
    model: EngineModel,
    records: Sequence[SessionRecord],
    s_values: Sequence[int],
    config: StoppingConfig | None = None,
) -> ThresholdSweep:
    """Mean NRI/n and NQ/m per stopping size s.

    One stop-free replay fixes the question order and the trajectory of
    every session; each threshold's stop point is then the first index
    whose entropy falls under it (the same inclusive comparison the live
    controller uses), so the derived numbers match per-s reruns exactly.
    """
    n = model.n_items
    m = len(model.question_ids)
    for s in s_values:
        if not 1 <= s <= n:
            raise EvaluationError(f"s must satisfy 1 <= s <= {n}, got {s}")
    base = config or StoppingConfig(stop_s=None)
    metrics = replay(
        model,
        records,
        StoppingConfig(stop_s=None, max_questions=None, mode=base.mode, order=base.order),
    )
    s_values = tuple(s_values)
    thresholds = tuple(stopping_threshold(s, n) for s in s_values)
    nri_frac = []
    nq_frac = []
    for s, thr in zip(s_values, thresholds):
        nri_sum = 0.0
        nq_sum = 0.0
        for sess in metrics.sessions:
            stop_at = len(sess.entropy_trace) - 1
            for t, h in enumerate(sess.entropy_trace):
                if h <= thr:
                    stop_at = t
                    break
            nq_sum += stop_at
            nri_sum += sess.nri_trace[stop_at]
        count = len(metrics.sessions)
        nri_frac.append(nri_sum / count / n)
        nq_frac.append(nq_sum / count / m if m else 0.0)
    return ThresholdSweep(s_values, thresholds, tuple(nri_frac), tuple(nq_frac))


def emit_report(
    metrics: ReplayMetrics,
    destination: str | Path,
    sweep: ThresholdSweep | None = None,
) -> list[Path]:
    """Write the replay artifacts under ``destination``.

    Files (all overwritten deterministically):
      steps.csv    per answered question: session_id, step, question_id,
                   answer_id, entropy, nri, skipped
      sessions.csv per session: session_id, questions_asked, stop_reason,
                   retained_count, reference_size, fraction_retained
      curves.csv   plot-ready mean trajectories: step, mean_entropy, mean_nri
      sweep.csv    (when a sweep is given) s, threshold, mean_nri_fraction,
                   mean_questions_fraction
      summary.json aggregate numbers
    """
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path = dest / "steps.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["session_id", "step", "question_id", "answer_id", "entropy", "nri", "skipped"])
        for sess in metrics.sessions:
            for k, st in enumerate(sess.steps, start=1):
                w.writerow(
                    [sess.session_id, k, st.question_id, st.answer_id,
                     repr(st.entropy), st.nri, int(st.skipped)]
                )
    written.append(path)

    path = dest / "sessions.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["session_id", "questions_asked", "stop_reason",
                    "retained_count", "reference_size", "fraction_retained"])
        for sess in metrics.sessions:
            w.writerow(
                [sess.session_id, sess.questions_asked, sess.stop_reason,
                 len(sess.retained_ids),
                 "" if sess.reference_size is None else sess.reference_size,
                 "" if sess.fraction_retained is None else repr(sess.fraction_retained)]
            )
    written.append(path)

    path = dest / "curves.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "mean_entropy", "mean_nri"])
        for k, (h, r) in enumerate(zip(metrics.mean_entropy_curve, metrics.mean_nri_curve)):
            w.writerow([k, repr(h), repr(r)])
    written.append(path)

    if sweep is not None:
        path = dest / "sweep.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "threshold", "mean_nri_fraction", "mean_questions_fraction"])
            for s, thr, a, b in zip(
                sweep.s_values, sweep.thresholds, sweep.mean_nri_fraction, sweep.mean_questions_fraction
            ):
                w.writerow([s, repr(thr), repr(a), repr(b)])
        written.append(path)

    reasons: dict[str, int] = {}
    for sess in metrics.sessions:
        reasons[sess.stop_reason] = reasons.get(sess.stop_reason, 0) + 1
    summary = {
        "n_sessions": len(metrics.sessions),
        "n_items": metrics.n_items,
        "n_questions": metrics.n_questions,
        "mean_fraction_retained": metrics.mean_fraction_retained,
        "empty_reference_count": metrics.empty_reference_count,
        "mean_questions_asked": sum(s.questions_asked for s in metrics.sessions)
        / len(metrics.sessions),
        "stop_reasons": reasons,
        "kernel_backend": backend_name(),
    }
    path = dest / "summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    written.append(path)
    return written


# -- synthetic data --------------------------------------------------------------


def generate_synthetic_catalog(
    n_items: int,
    n_questions: int,
    *,
    answers_range: tuple[int, int] = (3, 5),
    strategy: str | None = None,
    balanced: bool = False,
    seed: int = 0,
) -> CatalogModel:
    """Random answer-compatibility catalogue.

    Every item gets a uniformly drawn non-empty subset of each
    question's answers, so versatilities are positive and every session
    has at least one compatible item. ``strategy`` tags every question
    ('ujs' or 'ups'); None leaves the compile-time default in charge.

    With ``balanced`` every item gets the same number of compatible
    answers per question. Versatilities are then constant, so posteriors
    stay uniform over the retained set and each session's entropy is
    exactly log(NRI)/log(n): realized entropy inherits NRI's guaranteed
    monotonicity instead of only falling in expectation, which gives
    clean descent curves.
    """
    if n_items < 1 or n_questions < 1:
        raise EvaluationError("need at least one item and one question")
    lo, hi = answers_range
    if not 2 <= lo <= hi:
        raise EvaluationError("answers_range must be within [2, ...] and ordered")
    rng = np.random.default_rng(seed)
    questions = []
    for qk in range(n_questions):
        count = int(rng.integers(lo, hi + 1))
        questions.append(
            {
                "id": f"q{qk + 1:02d}",
                "prompt": f"Synthetic question {qk + 1}",
                "answers": [{"id": f"a{j + 1}"} for j in range(count)],
                **({"strategy": strategy} if strategy else {}),
            }
        )
    fixed_size = {
        q["id"]: max(1, len(q["answers"]) // 2) for q in questions
    }
    items = []
    for ik in range(n_items):
        compat = {}
        for q in questions:
            ids = [a["id"] for a in q["answers"]]
            size = fixed_size[q["id"]] if balanced else int(rng.integers(1, len(ids) + 1))
            picked = rng.choice(len(ids), size=size, replace=False)
            compat[q["id"]] = [ids[j] for j in sorted(picked)]
        items.append({"id": f"i{ik + 1:03d}", "compatible_answers": compat})
    return load_catalog({"items": items, "questions": questions})


def generate_synthetic_log(
    model: EngineModel,
    n_sessions: int,
    *,
    seed: int = 0,
    noise: float = 0.0,
    questions_per_session: int | None = None,
) -> list[SessionRecord]:
    """Simulated questionnaires from the model's own generative story.

    Each session samples an item from the model prior, then answers each
    question uniformly over that item's compatible answers. With
    probability ``noise`` an answer is drawn uniformly from all of the
    question's answers instead (which may contradict the item). The
    reference set is the items compatible with every recorded answer,
    i.e. the generator's ground truth; it can end up empty only on noisy
    sessions. Requires a catalogue with answer-level compatibilities.
    """
    if n_sessions < 1:
        raise EvaluationError("need at least one session")
    if not 0.0 <= noise <= 1.0:
        raise EvaluationError("noise must be in [0, 1]")
    catalog = model.catalog
    rng = np.random.default_rng(seed)
    prior = np.asarray(item_posterior(model, model.prior), dtype=float)
    prior = prior / prior.sum()
    qids = list(model.question_ids)
    records: list[SessionRecord] = []
    for k in range(n_sessions):
        ipos = int(rng.choice(len(prior), p=prior))
        item_id = model.item_ids[ipos]
        chosen = qids
        if questions_per_session is not None and questions_per_session < len(qids):
            picked = rng.choice(len(qids), size=questions_per_session, replace=False)
            chosen = [qids[j] for j in sorted(picked)]
        answers = []
        for qid in chosen:
            question = catalog.question(qid)
            if noise > 0.0 and rng.random() < noise:
                aid = question.answer_ids[int(rng.integers(len(question.answer_ids)))]
            else:
                compat = sorted(catalog.compatible_answers(item_id, qid))
                if not compat:
                    continue
                aid = compat[int(rng.integers(len(compat)))]
            answers.append((qid, aid))
        reference = tuple(
            it.id
            for it in catalog.items
            if all(catalog.delta_answer(it.id, q, a) for q, a in answers)
        )
        records.append(
            SessionRecord(
                session_id=f"s{k + 1:04d}",
                answers=tuple(answers),
                reference=reference,
                item=item_id,
            )
        )
    return records
