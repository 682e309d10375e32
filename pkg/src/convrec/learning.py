"""Dirichlet-multinomial blending of elicited tables with observed data.

Each conditional row (a question CPT row, or a property-factor row) gets
a pseudo-count vector alpha = ess x elicited probabilities. Observation
counts add onto alpha; the published table is the posterior mean
alpha / sum(alpha). Cells the elicitation put at exactly zero are
structural: their alpha stays 0 and counts landing there are rejected
(or skipped and reported in lenient mode), so logical constraints
survive learning.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import CatalogModel
from .errors import ObservationError
from .property_net import PropertyFactor, PropertyModel, QuestionCPT


@dataclass(frozen=True)
class DirichletParams:
    """Pseudo-counts for every row of one conditional table."""

    target_id: str
    kind: str  # "question" | "property"
    row_keys: tuple[tuple[str, ...], ...]
    column_ids: tuple[str, ...]
    alpha: tuple[tuple[Fraction, ...], ...]
    support: tuple[tuple[bool, ...], ...]
    ess: Fraction

    def row_index(self, key: tuple[str, ...]) -> int:
        try:
            return self.row_keys.index(tuple(key))
        except ValueError:
            raise ObservationError(
                f"{self.target_id!r} has no conditioning state {tuple(key)!r}"
            ) from None


def prior_to_pseudocounts(table: QuestionCPT | PropertyFactor, ess) -> DirichletParams:
    """alpha = ess x elicited row; elicited zeros become structural zeros."""
    ess = Fraction(ess)
    if ess <= 0:
        raise ValueError(f"ess must be positive, got {ess}")
    if isinstance(table, QuestionCPT):
        target, kind = table.question_id, "question"
        row_keys, columns = table.cond_states, table.answer_ids
    else:
        target, kind = table.property_id, "property"
        row_keys, columns = table.parent_states, table.value_ids
    alpha = tuple(tuple(ess * p for p in row) for row in table.rows)
    support = tuple(tuple(p > 0 for p in row) for row in table.rows)
    return DirichletParams(target, kind, row_keys, columns, alpha, support, ess)


@dataclass(frozen=True)
class Observation:
    """One observed (conditioning state, outcome) event for a target table."""

    target_id: str
    row_key: tuple[str, ...]
    column_id: str


def update_from_log(
    params: DirichletParams,
    observations: Iterable[Observation | tuple],
    *,
    lenient: bool = False,
) -> tuple[DirichletParams, list[str]]:
    """Add observation counts to alpha.

    Observations hitting a structural-zero cell raise ObservationError,
    or are skipped and reported when ``lenient``. Returns the updated
    params and the report of skipped records.
    """
    counts = [[0] * len(params.column_ids) for _ in params.row_keys]
    report: list[str] = []
    for obs in observations:
        if not isinstance(obs, Observation):
            obs = Observation(params.target_id, tuple(obs[0]), obs[1])
        if obs.target_id != params.target_id:
            raise ObservationError(
                f"observation for {obs.target_id!r} applied to table {params.target_id!r}"
            )
        r = params.row_index(obs.row_key)
        try:
            c = params.column_ids.index(obs.column_id)
        except ValueError:
            raise ObservationError(
                f"{params.target_id!r} has no column {obs.column_id!r}"
            ) from None
        if not params.support[r][c]:
            message = (
                f"observation ({obs.row_key} -> {obs.column_id!r}) hits a "
                f"structural zero of {params.target_id!r}"
            )
            if lenient:
                report.append(message)
                continue
            raise ObservationError(message)
        counts[r][c] += 1
    alpha = tuple(
        tuple(a + n for a, n in zip(row, cnt)) for row, cnt in zip(params.alpha, counts)
    )
    return replace(params, alpha=alpha), report


def posterior_mean_cpt(params: DirichletParams) -> QuestionCPT | PropertyFactor:
    """Publish the posterior mean alpha / sum(alpha) as a table again."""
    rows = []
    for key, row in zip(params.row_keys, params.alpha):
        total = sum(row, Fraction(0))
        if total == 0:
            raise ObservationError(
                f"{params.target_id!r}: row {key!r} has all-zero pseudo-counts"
            )
        rows.append(tuple(a / total for a in row))
    if params.kind == "question":
        identity = len(rows) == len(params.column_ids) and all(
            row[j] == (1 if k == j else 0)
            for k, row in enumerate(rows)
            for j in range(len(row))
        )
        # conditioning property ids are not tracked here; callers that
        # need them keep the original table around
        return QuestionCPT(
            question_id=params.target_id,
            property_ids=(),
            cond_states=params.row_keys,
            answer_ids=params.column_ids,
            rows=tuple(rows),
            identity=identity,
        )
    return PropertyFactor(
        property_id=params.target_id,
        parent_ids=(),
        parent_states=params.row_keys,
        value_ids=params.column_ids,
        rows=tuple(rows),
        revised=False,
    )


# -- observation extraction from conversation logs ------------------------------


@dataclass(frozen=True)
class LogRow:
    session_id: str
    chosen_item: str
    question_id: str
    answer_id: str


OBSERVATION_LOG_COLUMNS = ("session_id", "chosen_item", "question_id", "answer_id")


def read_observation_log(path: str | Path) -> list[LogRow]:
    """Read the observation CSV (one row per recorded answer)."""
    rows: list[LogRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(OBSERVATION_LOG_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ObservationError(
                f"{path}: observation log lacks columns {sorted(missing)}"
            )
        for k, rec in enumerate(reader, start=2):
            values = [rec.get(c, "") or "" for c in OBSERVATION_LOG_COLUMNS]
            if not all(values):
                raise ObservationError(f"{path}:{k}: incomplete record {rec!r}")
            rows.append(LogRow(*values))
    return rows


def _resolve_property_value(
    catalog: CatalogModel,
    item_id: str,
    property_id: str,
    answers: Mapping[str, str],
) -> str | None:
    """Best-effort value of a property in one recorded session.

    The chosen item pins the value when it is compatible with exactly
    one; otherwise a recorded answer to the property's clone question
    decides; otherwise the value is unknown (None).
    """
    compat = catalog.compatible_values(item_id, property_id)
    if len(compat) == 1:
        return next(iter(compat))
    prop = catalog.property(property_id)
    if prop.clone_of is not None and prop.clone_of in answers:
        return answers[prop.clone_of]
    return None


def observations_from_log(
    catalog: CatalogModel,
    pm: PropertyModel,
    rows: Sequence[LogRow],
) -> tuple[dict[str, list[Observation]], list[str]]:
    """Turn a flat conversation log into per-table observation lists.

    Learning targets the question CPTs (grouping by property value, not
    item) and the property factor rows. Sessions that leave a needed
    property value ambiguous contribute nothing to that table; such
    skips are reported, not fatal.
    """
    by_session: dict[str, dict] = {}
    for row in rows:
        rec = by_session.setdefault(row.session_id, {"item": row.chosen_item, "answers": {}})
        if rec["item"] != row.chosen_item:
            raise ObservationError(
                f"session {row.session_id!r} names two chosen items "
                f"({rec['item']!r}, {row.chosen_item!r})"
            )
        if not catalog.has_question(row.question_id):
            raise ObservationError(f"unknown question {row.question_id!r} in log")
        catalog.question(row.question_id).answer_index(row.answer_id)
        rec["answers"][row.question_id] = row.answer_id

    out: dict[str, list[Observation]] = defaultdict(list)
    report: list[str] = []
    factor_properties = {
        pid for pid in (pm.joint_prior.factors if pm.joint_prior else {})
    }
    for sid, rec in by_session.items():
        item, answers = rec["item"], rec["answers"]
        catalog.item(item)
        # question CPT observations: conditioning state from the item
        for qid, aid in answers.items():
            cpt = pm.cpts.get(qid)
            if cpt is None:
                continue
            key = []
            for pid in cpt.property_ids:
                value = _resolve_property_value(catalog, item, pid, answers)
                if value is None:
                    report.append(
                        f"session {sid!r}: value of {pid!r} ambiguous for item {item!r}; "
                        f"skipped for table {qid!r}"
                    )
                    key = None
                    break
                key.append(value)
            if key is not None:
                out[qid].append(Observation(qid, tuple(key), aid))
        # property factor observations: value and parent values from the item
        for pid in factor_properties:
            prop = catalog.property(pid)
            value = _resolve_property_value(catalog, item, pid, answers)
            if value is None:
                report.append(
                    f"session {sid!r}: value of {pid!r} ambiguous for item {item!r}; "
                    f"skipped for its factor table"
                )
                continue
            key = []
            for parent in prop.parents:
                pv = _resolve_property_value(catalog, item, parent, answers)
                if pv is None:
                    report.append(
                        f"session {sid!r}: parent {parent!r} of {pid!r} ambiguous; skipped"
                    )
                    key = None
                    break
                key.append(pv)
            if key is not None:
                out[pid].append(Observation(pid, tuple(key), value))
    return dict(out), report


def learn_tables(
    catalog: CatalogModel,
    pm: PropertyModel,
    rows: Sequence[LogRow],
    *,
    ess=1,
    lenient: bool = True,
) -> tuple[dict[str, DirichletParams], list[str]]:
    """Blend every learnable table with the log. Identity CPTs are
    unaffected by construction (their off-diagonal support is empty)."""
    observations, report = observations_from_log(catalog, pm, rows)
    out: dict[str, DirichletParams] = {}
    for qid, cpt in pm.cpts.items():
        params = prior_to_pseudocounts(cpt, ess)
        params, skipped = update_from_log(params, observations.get(qid, ()), lenient=lenient)
        report.extend(skipped)
        out[qid] = params
    if pm.joint_prior is not None:
        for pid, factor in pm.joint_prior.factors.items():
            params = prior_to_pseudocounts(factor, ess)
            params, skipped = update_from_log(params, observations.get(pid, ()), lenient=lenient)
            report.extend(skipped)
            out[pid] = params
    return out, report


def learned_tables_document(
    pm: PropertyModel, learned: Mapping[str, DirichletParams]
) -> dict:
    """Posterior-mean tables in the catalogue's expert_tables shape.

    Identity CPTs are left implicit (the clone declaration carries them);
    everything else is emitted with exact fraction strings.
    """
    def enc(x: Fraction) -> str:
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    doc: dict = {}
    for target, params in learned.items():
        mean = posterior_mean_cpt(params)
        if params.kind == "question":
            original = pm.cpts[target]
            if original.identity:
                continue
            doc[target] = {
                "given": list(original.property_ids),
                "rows": [
                    {
                        "when": dict(zip(original.property_ids, key)),
                        "probs": {c: enc(v) for c, v in zip(params.column_ids, row) if v != 0},
                    }
                    for key, row in zip(params.row_keys, mean.rows)
                ],
            }
        else:
            factor = pm.joint_prior.factors[target] if pm.joint_prior else None
            parent_ids = factor.parent_ids if factor else ()
            if not parent_ids:
                doc[target] = {
                    "probs": {c: enc(v) for c, v in zip(params.column_ids, mean.rows[0]) if v != 0}
                }
            else:
                doc[target] = {
                    "rows": [
                        {
                            "when": dict(zip(parent_ids, key)),
                            "probs": {c: enc(v) for c, v in zip(params.column_ids, row) if v != 0},
                        }
                        for key, row in zip(params.row_keys, mean.rows)
                    ]
                }
    return doc
