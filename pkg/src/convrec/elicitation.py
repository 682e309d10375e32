"""Compatibility-based elicitation of the property-free probabilistic model.

Two strategies turn the 0/1 compatibility relation into probabilities:

* UJS (uniform joint): every compatible (item, answer) pair of a question
  is equally likely, so versatile items receive higher prior mass.
* UPS (uniform prior): items are a priori equally likely and each item
  spreads its mass uniformly over its compatible answers, so specialized
  items come out ahead a posteriori.

All tables in this module are exact (``fractions.Fraction``); the float
fast path lives in :mod:`convrec.engine`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .catalog import CatalogModel, answer_pair_count, versatility
from .errors import ElicitationError


@dataclass(frozen=True)
class JointTable:
    """P(item, answer) for one question; cells sum to 1 exactly."""

    question_id: str
    item_ids: tuple[str, ...]
    answer_ids: tuple[str, ...]
    cells: tuple[tuple[Fraction, ...], ...]  # items x answers

    def cell(self, item_id: str, answer_id: str) -> Fraction:
        return self.cells[self.item_ids.index(item_id)][self.answer_ids.index(answer_id)]

    def item_prior(self) -> "ItemPrior":
        return ItemPrior(self.item_ids, tuple(sum(row, Fraction(0)) for row in self.cells))

    def conditional(self) -> "ConditionalTable":
        rows, flagged = [], []
        for item_id, row in zip(self.item_ids, self.cells):
            total = sum(row, Fraction(0))
            if total == 0:
                rows.append(tuple(Fraction(0) for _ in row))
                flagged.append(item_id)
            else:
                rows.append(tuple(c / total for c in row))
        return ConditionalTable(
            scope=("item",),
            row_keys=tuple((i,) for i in self.item_ids),
            column_ids=self.answer_ids,
            rows=tuple(rows),
            flagged_rows=tuple((i,) for i in flagged),
        )

    def as_array(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.cells], dtype=np.float64)

    def total(self) -> Fraction:
        return sum((c for row in self.cells for c in row), Fraction(0))


@dataclass(frozen=True)
class ConditionalTable:
    """Rows of P(column | conditioning state), each summing to 1.

    Rows whose conditioning state is infeasible (no compatible column at
    all) are stored all-zero and listed in ``flagged_rows``.
    """

    scope: tuple[str, ...]  # names of the conditioning variables
    row_keys: tuple[tuple[str, ...], ...]
    column_ids: tuple[str, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    flagged_rows: tuple[tuple[str, ...], ...] = ()

    def row(self, *key: str) -> tuple[Fraction, ...]:
        return self.rows[self.row_keys.index(tuple(key))]

    def as_array(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.rows], dtype=np.float64)


@dataclass(frozen=True)
class ItemPrior:
    item_ids: tuple[str, ...]
    probs: tuple[Fraction, ...]

    def prob(self, item_id: str) -> Fraction:
        return self.probs[self.item_ids.index(item_id)]

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs], dtype=np.float64)

    def total(self) -> Fraction:
        return sum(self.probs, Fraction(0))


def elicit_ujs(question_id: str, catalog: CatalogModel) -> JointTable:
    """Uniform joint strategy: P(i, q) = delta(i, q) / N(Q).

    N(Q) is the number of compatible (item, answer) pairs; it must be
    positive. The implied prior is v_Q(i)/N(Q) and the implied conditional
    delta(i, q)/v_Q(i).
    """
    question = catalog.question(question_id)
    n_pairs = answer_pair_count(catalog, question_id)
    if n_pairs == 0:
        raise ElicitationError(
            f"question {question_id!r} has no compatible (item, answer) pair"
        )
    w = Fraction(1, n_pairs)
    cells = tuple(
        tuple(
            w if catalog.delta_answer(it.id, question_id, aid) else Fraction(0)
            for aid in question.answer_ids
        )
        for it in catalog.items
    )
    return JointTable(question_id, tuple(i.id for i in catalog.items), question.answer_ids, cells)


def elicit_ups(question_id: str, catalog: CatalogModel) -> JointTable:
    """Uniform prior strategy: P(i, q) = delta(i, q) / (n * v_Q(i)).

    Every item needs at least one compatible answer, otherwise its
    conditional row is undefined; offenders are listed in the error.
    """
    question = catalog.question(question_id)
    n = catalog.n_items
    stranded = [it.id for it in catalog.items if versatility(catalog, it.id, question_id) == 0]
    if stranded:
        raise ElicitationError(
            f"uniform-prior elicitation of question {question_id!r} is undefined for "
            f"items with no compatible answer: {stranded}"
        )
    cells = tuple(
        tuple(
            Fraction(1, n * versatility(catalog, it.id, question_id))
            if catalog.delta_answer(it.id, question_id, aid)
            else Fraction(0)
            for aid in question.answer_ids
        )
        for it in catalog.items
    )
    return JointTable(question_id, tuple(i.id for i in catalog.items), question.answer_ids, cells)


def prior_weights(catalog: CatalogModel, ujs_questions: Sequence[str]) -> tuple[Fraction, ...]:
    """Unnormalized prior weights: product of v_Q(i)/N(Q) over UJS questions.

    With no UJS question every item gets weight 1/n (already a mass
    function). With several, the product generally does not sum to 1.
    """
    n = catalog.n_items
    if not ujs_questions:
        return tuple(Fraction(1, n) for _ in catalog.items)
    weights = []
    for it in catalog.items:
        w = Fraction(1)
        for qid in ujs_questions:
            n_pairs = answer_pair_count(catalog, qid)
            if n_pairs == 0:
                raise ElicitationError(f"question {qid!r} has no compatible (item, answer) pair")
            w *= Fraction(versatility(catalog, it.id, qid), n_pairs)
        weights.append(w)
    return tuple(weights)


def combine_questions(
    ujs_questions: Sequence[str],
    ups_questions: Sequence[str],
    catalog: CatalogModel,
) -> tuple[ItemPrior, dict[str, ConditionalTable]]:
    """Assemble the full property-free model from per-question strategies.

    The two question sets must be disjoint and together cover the
    catalogue's questions. Every conditional is delta(i, q)/v_Q(i)
    regardless of strategy; the strategies only shape the prior, which is
    renormalized to sum to 1 (the raw product of v/N factors over several
    UJS questions is not itself a mass function).
    """
    ujs, ups = list(ujs_questions), list(ups_questions)
    overlap = set(ujs) & set(ups)
    if overlap:
        raise ElicitationError(f"questions assigned to both strategies: {sorted(overlap)}")
    covered = set(ujs) | set(ups)
    expected = {q.id for q in catalog.questions}
    if covered != expected:
        raise ElicitationError(
            f"strategy sets must cover the catalogue's questions exactly; "
            f"missing {sorted(expected - covered)}, extraneous {sorted(covered - expected)}"
        )

    weights = prior_weights(catalog, ujs)
    total = sum(weights, Fraction(0))
    if total == 0:
        raise ElicitationError("every item has zero prior weight under the UJS products")
    prior = ItemPrior(tuple(i.id for i in catalog.items), tuple(w / total for w in weights))

    tables = {}
    for q in catalog.questions:
        rows, flagged = [], []
        for it in catalog.items:
            v = versatility(catalog, it.id, q.id)
            if v == 0:
                rows.append(tuple(Fraction(0) for _ in q.answer_ids))
                flagged.append((it.id,))
            else:
                rows.append(
                    tuple(
                        Fraction(catalog.delta_answer(it.id, q.id, aid), v)
                        for aid in q.answer_ids
                    )
                )
        tables[q.id] = ConditionalTable(
            scope=("item",),
            row_keys=tuple((i.id,) for i in catalog.items),
            column_ids=q.answer_ids,
            rows=tuple(rows),
            flagged_rows=tuple(flagged),
        )
    return prior, tables


def strategy_buckets(
    catalog: CatalogModel,
    *,
    default: str = "ups",
    overrides: dict[str, str] | None = None,
) -> tuple[list[str], list[str]]:
    """Split questions into (UJS, UPS) lists from tags, default, and overrides."""
    if default not in ("ujs", "ups"):
        raise ElicitationError(f"default strategy must be 'ujs' or 'ups', got {default!r}")
    ujs, ups = [], []
    for q in catalog.questions:
        tag = (overrides or {}).get(q.id, q.strategy) or default
        if tag == "ujs":
            ujs.append(q.id)
        elif tag == "ups":
            ups.append(q.id)
        else:
            raise ElicitationError(f"unknown strategy tag {tag!r} for question {q.id!r}")
    return ujs, ups


def model_to_document(prior: ItemPrior, tables: dict[str, ConditionalTable]) -> dict:
    """Export an elicited model for inspection and diffing.

    Same document family as the catalogue format; exact cells are emitted
    as fraction strings so a re-parse loses nothing.
    """
    def enc(x: Fraction) -> str:
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)

    return {
        "item_prior": {i: enc(p) for i, p in zip(prior.item_ids, prior.probs)},
        "conditional_tables": {
            qid: {
                "columns": list(t.column_ids),
                "rows": {key[0]: [enc(c) for c in row] for key, row in zip(t.row_keys, t.rows)},
                "flagged_rows": [key[0] for key in t.flagged_rows],
            }
            for qid, t in tables.items()
        },
    }
