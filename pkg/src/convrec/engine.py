"""Float64 engine compiled from the exact models.

The exact layers (elicitation, property_net) speak Fractions; this module
lowers a model to numpy arrays once, after which every conversation step
is array arithmetic. A belief is a vector over "cells": the items
themselves for a property-free model, or the (item, joint-state) support
pairs for a property model. Likelihoods are stored per state row and
gathered per cell, so clones and expert CPTs share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .catalog import CatalogModel
from .elicitation import (
    ConditionalTable,
    ItemPrior,
    combine_questions,
    strategy_buckets,
)
from .errors import InferenceError
from .property_net import FLAT_JOINT_KEY, PropertyModel, build_property_model
from . import kernels


@dataclass(frozen=True)
class ExactItemModel:
    """Exact counterpart of an item-mode engine (prior + δ/v tables)."""

    prior: ItemPrior
    tables: Mapping[str, ConditionalTable]


@dataclass
class EngineModel:
    """Arrays for one catalogue, shared read-only by all sessions."""

    catalog: CatalogModel
    kind: str  # "item" | "pair"
    item_ids: tuple[str, ...]
    question_ids: tuple[str, ...]
    prior: np.ndarray  # (n_cells,) float64, sums to 1
    cell_item: np.ndarray  # (n_cells,) int32
    cell_state: np.ndarray  # (n_cells,) int32
    grids: dict[str, np.ndarray]  # question id -> (n_rows, r) float64
    relevance: dict[str, np.ndarray | None]  # question id -> bool mask over cells
    exact: ExactItemModel | PropertyModel

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_cells(self) -> int:
        return len(self.prior)

    def answer_position(self, question_id: str, answer_id: str) -> int:
        return self.catalog.question(question_id).answer_index(answer_id)


def compile_item_model(
    catalog: CatalogModel,
    *,
    default_strategy: str = "ups",
    strategy_overrides: Mapping[str, str] | None = None,
) -> EngineModel:
    """Lower the property-free model: cells are the items themselves."""
    ujs, ups = strategy_buckets(catalog, default=default_strategy, overrides=dict(strategy_overrides or {}))
    prior, tables = combine_questions(ujs, ups, catalog)
    n = catalog.n_items
    item_ids = tuple(it.id for it in catalog.items)
    idx = np.arange(n, dtype=np.int32)
    grids = {qid: np.ascontiguousarray(t.as_array()) for qid, t in tables.items()}
    relevance = {q.id: _relevance_mask(item_ids, q.relevant_items) for q in catalog.questions}
    return EngineModel(
        catalog=catalog,
        kind="item",
        item_ids=item_ids,
        question_ids=tuple(q.id for q in catalog.questions),
        prior=prior.as_array(),
        cell_item=idx,
        cell_state=idx.copy(),
        grids=grids,
        relevance=relevance,
        exact=ExactItemModel(prior, tables),
    )


def compile_property_model(pm: PropertyModel) -> EngineModel:
    """Lower a property model: cells are (item, joint-state) pairs."""
    catalog = pm.catalog
    item_ids = tuple(it.id for it in catalog.items)
    cell_item = np.asarray(pm.pair_items, dtype=np.int32)
    cell_state = np.asarray(pm.pair_states, dtype=np.int32)
    prior = np.array([float(m) for m in pm.pair_mass], dtype=np.float64)
    grids = {}
    for q in catalog.questions:
        grid = pm.likelihood_grid(q.id)
        grids[q.id] = np.ascontiguousarray(
            [[float(c) for c in row] for row in grid], dtype=np.float64
        )
    relevance = {}
    for q in catalog.questions:
        mask = _relevance_mask(item_ids, q.relevant_items)
        relevance[q.id] = None if mask is None else mask[cell_item]
    return EngineModel(
        catalog=catalog,
        kind="pair",
        item_ids=item_ids,
        question_ids=tuple(q.id for q in catalog.questions),
        prior=prior,
        cell_item=cell_item,
        cell_state=cell_state,
        grids=grids,
        relevance=relevance,
        exact=pm,
    )


def compile_model(
    catalog: CatalogModel,
    *,
    default_strategy: str = "ups",
    strategy_overrides: Mapping[str, str] | None = None,
    mode: str | None = None,
) -> EngineModel:
    """Pick the representation a catalogue calls for.

    Catalogues without properties compile to the item engine. With
    properties, ``mode`` (default "expert" when expert factor tables are
    present, else "strategies") selects how the joint prior is built.
    """
    if not catalog.properties:
        return compile_item_model(
            catalog, default_strategy=default_strategy, strategy_overrides=strategy_overrides
        )
    if mode is None:
        has_prior_tables = any(
            catalog.has_property(k) or k == FLAT_JOINT_KEY for k in catalog.expert_tables
        )
        mode = "expert" if has_prior_tables else "strategies"
    pm = build_property_model(
        catalog, mode, default_strategy=default_strategy, strategy_overrides=strategy_overrides
    )
    return compile_property_model(pm)


def _relevance_mask(item_ids: tuple[str, ...], relevant: frozenset[str] | None) -> np.ndarray | None:
    if relevant is None:
        return None
    return np.array([iid in relevant for iid in item_ids], dtype=bool)


# -- belief arithmetic ---------------------------------------------------------


def item_posterior(model: EngineModel, belief: np.ndarray) -> np.ndarray:
    """Marginalize a cell belief down to the items."""
    if model.kind == "item":
        return belief
    return np.bincount(model.cell_item, weights=belief, minlength=model.n_items)


def effective_likelihood(
    model: EngineModel, belief: np.ndarray, question_id: str
) -> tuple[np.ndarray, np.ndarray]:
    """(grid, cell_state) pair scoring/updating should use right now.

    Ungated questions return the precompiled state grid. Gated ones get a
    materialized per-cell matrix where cells of irrelevant items carry the
    shared answer probability of the relevant group under the current
    belief, so the answer cannot move mass across the relevance boundary.
    """
    grid = model.grids[question_id]
    mask = model.relevance.get(question_id)
    if mask is None:
        return grid, model.cell_state
    like = grid[model.cell_state]
    rel_mass = float(belief[mask].sum())
    if rel_mass <= 0.0:
        raise InferenceError(
            f"question {question_id!r} has no relevant item with positive posterior mass"
        )
    shared = belief[mask] @ like[mask] / rel_mass
    like[~mask] = shared
    return np.ascontiguousarray(like), np.arange(len(belief), dtype=np.int32)


def likelihood_column(
    model: EngineModel, belief: np.ndarray, question_id: str, answer_id: str
) -> np.ndarray:
    """Per-cell likelihood of one concrete answer under the current belief."""
    a = model.answer_position(question_id, answer_id)
    grid, cell_state = effective_likelihood(model, belief, question_id)
    return grid[cell_state, a]


def update_belief(
    model: EngineModel, belief: np.ndarray, question_id: str, answer_id: str
) -> tuple[np.ndarray, bool]:
    """One Bayes step. Returns (new belief, contradiction flag).

    A contradiction (zero total mass after filtering) leaves the belief
    untouched and reports True; callers decide between strict and soft
    handling.
    """
    col = likelihood_column(model, belief, question_id, answer_id)
    w = belief * col
    z = float(w.sum())
    if z <= 0.0:
        return belief, True
    return w / z, False


def score_question(model: EngineModel, belief: np.ndarray, question_id: str) -> float:
    """Conditional entropy H(items | question) under the current belief."""
    grid, cell_state = effective_likelihood(model, belief, question_id)
    h = kernels.cond_entropy(belief, grid, cell_state, model.cell_item, model.n_items)
    return min(1.0, max(0.0, h))  # scrub float noise at both ends


def normalized_entropy(dist: np.ndarray | Sequence, base_size: int | None = None) -> float:
    """Entropy with log base |distribution|, in [0, 1]; 0·log 0 := 0."""
    p = np.asarray(
        [float(x) for x in dist] if not isinstance(dist, np.ndarray) else dist,
        dtype=np.float64,
    )
    n = base_size if base_size is not None else len(p)
    if n <= 1:
        return 0.0
    pos = p[p > 0.0]
    if len(pos) == 0:
        return 0.0
    return min(1.0, max(0.0, float(-(pos @ np.log(pos)) / np.log(n))))
