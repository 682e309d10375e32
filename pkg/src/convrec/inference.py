"""Sequential Bayesian updating over a compiled model, plus exact oracles.

The fast path runs on the float engine. The exact paths (Fraction
arithmetic straight from the model definition, and a brute-force joint
enumeration) exist to pin the fast path down in tests and to answer
"what does the math say" questions without float noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .catalog import CatalogModel
from .engine import (
    EngineModel,
    ExactItemModel,
    item_posterior,
    normalized_entropy,
    update_belief,
)
from .errors import InferenceError
from .property_net import PropertyModel, irrelevant_question_likelihood

ORACLE_CELL_CAP = 100_000


@dataclass(frozen=True)
class ConversationState:
    """Immutable snapshot of one conversation.

    ``belief`` lives on the engine's cells; ``posterior`` is its item
    marginal. After a contradiction in strict handling the belief is the
    frozen pre-contradiction one and ``contradiction`` is set. Soft
    handling records the offending (question, answer) in ``skipped`` and
    leaves the belief alone.
    """

    model: EngineModel
    answered: tuple[tuple[str, str], ...]
    belief: np.ndarray
    posterior: np.ndarray
    entropy_trace: tuple[float, ...]
    contradiction: bool = False
    skipped: tuple[tuple[str, str], ...] = ()

    @property
    def asked(self) -> frozenset[str]:
        return frozenset(q for q, _ in self.answered) | frozenset(q for q, _ in self.skipped)

    @property
    def entropy(self) -> float:
        return self.entropy_trace[-1]


def init_session(model: EngineModel) -> ConversationState:
    belief = model.prior.copy()
    posterior = item_posterior(model, belief)
    return ConversationState(
        model=model,
        answered=(),
        belief=belief,
        posterior=posterior,
        entropy_trace=(normalized_entropy(posterior, model.n_items),),
    )


def update(
    state: ConversationState, question_id: str, answer_id: str, *, mode: str = "strict"
) -> ConversationState:
    """Condition on one answer; returns a new state.

    Asking a question twice is an error. A contradicting answer (zero
    posterior mass) freezes the posterior and flags the state in strict
    mode; in soft mode the answer is recorded as skipped and ignored.
    """
    if mode not in ("strict", "soft"):
        raise ValueError(f"mode must be 'strict' or 'soft', got {mode!r}")
    if state.contradiction:
        raise InferenceError("conversation is already in a contradiction state")
    if question_id in state.asked:
        raise InferenceError(f"question {question_id!r} was already asked")
    # validates both ids before any arithmetic
    state.model.answer_position(question_id, answer_id)

    belief, contradicted = update_belief(state.model, state.belief, question_id, answer_id)
    if contradicted:
        if mode == "soft":
            return replace(state, skipped=state.skipped + ((question_id, answer_id),))
        return replace(
            state,
            answered=state.answered + ((question_id, answer_id),),
            contradiction=True,
            entropy_trace=state.entropy_trace + (state.entropy_trace[-1],),
        )
    posterior = item_posterior(state.model, belief)
    return replace(
        state,
        answered=state.answered + ((question_id, answer_id),),
        belief=belief,
        posterior=posterior,
        entropy_trace=state.entropy_trace + (normalized_entropy(posterior, state.model.n_items),),
    )


def entropy(distribution: Sequence | np.ndarray, base_size: int) -> float:
    """Normalized entropy −Σ p·log_base p, with 0·log 0 := 0."""
    return normalized_entropy(distribution, base_size)


def retained(state: ConversationState) -> tuple[tuple[str, ...], int]:
    """Items with positive posterior mass and their count (NRI).

    In a contradiction state this reports on the frozen posterior.
    """
    ids = tuple(
        iid for iid, p in zip(state.model.item_ids, state.posterior) if p > 0.0
    )
    return ids, len(ids)


def ranked_items(state: ConversationState) -> tuple[tuple[str, float], ...]:
    """Items by posterior descending, ties by id ascending."""
    pairs = list(zip(state.model.item_ids, (float(p) for p in state.posterior)))
    pairs.sort(key=lambda kv: (-kv[1], kv[0]))
    return tuple(pairs)


# -- exact paths ----------------------------------------------------------------


def _exact_item_rows(exact: ExactItemModel, question_id: str) -> tuple[tuple[Fraction, ...], ...]:
    return exact.tables[question_id].rows


def exact_sequential_posterior(
    model: EngineModel, answers: Sequence[tuple[str, str]]
) -> tuple[Fraction, ...]:
    """Fraction twin of the engine's sequential update over items.

    Implements the same semantics (including relevance gating against the
    current posterior and contradiction freezing) without floats, for
    equivalence testing. Returns the item posterior.
    """
    catalog = model.catalog
    exact = model.exact
    if isinstance(exact, ExactItemModel):
        belief = list(exact.prior.probs)
        cell_item = list(range(len(belief)))
        grids = {
            qid: _exact_item_rows(exact, qid) for qid in model.question_ids
        }
        cell_state = cell_item
    else:
        belief = list(exact.pair_mass)
        cell_item = list(exact.pair_items)
        cell_state = list(exact.pair_states)
        grids = {qid: exact.likelihood_grid(qid) for qid in model.question_ids}

    item_ids = model.item_ids
    n = len(item_ids)
    seen = set()
    for qid, aid in answers:
        if qid in seen:
            raise InferenceError(f"question {qid!r} was already asked")
        seen.add(qid)
        q = catalog.question(qid)
        a = q.answer_index(aid)
        base = [grids[qid][cell_state[c]][a] for c in range(len(belief))]
        if q.relevant_items is not None:
            marginal = [Fraction(0)] * n
            for c, b in enumerate(belief):
                marginal[cell_item[c]] += b
            per_item = irrelevant_question_likelihood(
                q,
                item_ids,
                _exact_item_answer_likelihood(belief, cell_item, base, n),
                marginal,
            )
            col = [
                base[c] if item_ids[cell_item[c]] in q.relevant_items else per_item[cell_item[c]]
                for c in range(len(belief))
            ]
        else:
            col = base
        new = [b * l for b, l in zip(belief, col)]
        z = sum(new, Fraction(0))
        if z == 0:
            break  # frozen posterior, same as the engine's strict flag
        belief = [w / z for w in new]
    out = [Fraction(0)] * n
    for c, b in enumerate(belief):
        out[cell_item[c]] += b
    return tuple(out)


def _exact_item_answer_likelihood(belief, cell_item, base_col, n_items):
    """Per-item P(answer | item) under the current belief (exact).

    For pair cells the item-level likelihood is the belief-weighted mean
    of its cells' likelihoods; for item cells it is the cell value.
    """
    mass = [Fraction(0)] * n_items
    acc = [Fraction(0)] * n_items
    for c, b in enumerate(belief):
        mass[cell_item[c]] += b
        acc[cell_item[c]] += b * base_col[c]
    out = []
    for m, a in zip(mass, acc):
        out.append(a / m if m > 0 else Fraction(0))
    return out


def posterior_property_inference(
    pm: PropertyModel, answers: Sequence[tuple[str, str]]
) -> tuple[Fraction, ...]:
    """Exact item posterior of a property model given an answer list.

    P(i | answers) ∝ Σ over compatible feasible states of
    P(state)·(1/N(state))·Π P(answer | state), evaluated on the pair
    support. Relevance-gated questions are conditioned sequentially in
    list order (their likelihood depends on the interim posterior).
    """
    catalog = pm.catalog
    n = catalog.n_items
    gated = [qid for qid, _ in answers if catalog.question(qid).relevant_items is not None]
    if not gated:
        # order-free closed form over the pair support
        weights = list(pm.pair_mass)
        for qid, aid in answers:
            q = catalog.question(qid)
            a = q.answer_index(aid)
            grid = pm.likelihood_grid(qid)
            weights = [
                w * grid[s][a] for w, s in zip(weights, pm.pair_states)
            ]
        out = [Fraction(0)] * n
        for w, ipos in zip(weights, pm.pair_items):
            out[ipos] += w
        z = sum(out, Fraction(0))
        if z == 0:
            raise InferenceError("answer list is incompatible with every item")
        return tuple(p / z for p in out)
    # gated questions force the sequential reading
    from .engine import compile_property_model

    return exact_sequential_posterior(compile_property_model(pm), answers)


def brute_force_oracle(
    model: EngineModel | PropertyModel | ExactItemModel,
    answers: Sequence[tuple[str, str]],
    catalog: CatalogModel | None = None,
) -> tuple[Fraction, ...]:
    """Item posterior by explicit enumeration of the full joint.

    Walks every (item, joint-state) support pair, multiplies the prior
    mass by the likelihood of every observed answer, and marginalizes.
    Deliberately naive; exact. Rejects relevance-gated questions (their
    likelihood is state-dependent, so no fixed joint exists) and models
    larger than ORACLE_CELL_CAP cells.
    """
    if isinstance(model, EngineModel):
        catalog = model.catalog
        model = model.exact
    if catalog is None and isinstance(model, PropertyModel):
        catalog = model.catalog
    if catalog is None:
        raise InferenceError("oracle needs the catalogue for an ExactItemModel")

    for qid, _ in answers:
        if catalog.question(qid).relevant_items is not None:
            raise InferenceError(
                f"oracle does not cover relevance-gated question {qid!r}"
            )

    item_ids = tuple(it.id for it in catalog.items)
    n = len(item_ids)

    if isinstance(model, ExactItemModel):
        cells = [(pos, None, p) for pos, p in enumerate(model.prior.probs)]

        def like(cell, qid, a):
            return model.tables[qid].rows[cell[0]][a]

    else:
        if n * max(len(model.joint), 1) > ORACLE_CELL_CAP:
            raise InferenceError(
                f"oracle cap exceeded: {n} items x {len(model.joint)} states"
            )
        grids = {qid: model.likelihood_grid(qid) for qid, _ in answers}
        cells = [
            (ipos, s, m)
            for ipos, s, m in zip(model.pair_items, model.pair_states, model.pair_mass)
        ]

        def like(cell, qid, a):
            return grids[qid][cell[1]][a]

    out = [Fraction(0)] * n
    for cell in cells:
        w = cell[2]
        for qid, aid in answers:
            if w == 0:
                break
            a = catalog.question(qid).answer_index(aid)
            w *= like(cell, qid, a)
        out[cell[0]] += w
    z = sum(out, Fraction(0))
    if z == 0:
        raise InferenceError("answer list is incompatible with every item")
    return tuple(p / z for p in out)
