"""Catalogue ingestion, validation, and compatibility queries.

A catalogue document is a UTF-8 JSON file with top-level keys ``items``,
``questions``, ``properties`` and ``expert_tables`` (see README for the
schema). Items are characterized by the answers and property values they
are logically compatible with; everything downstream (priors, conditional
tables, feasible joint states) is derived from that relation.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import CatalogError, CyclicPropertyGraphError, EnumerationCapError

DEFAULT_STATE_CAP = 1_000_000

_TOP_KEYS = {"items", "questions", "properties", "expert_tables"}
_ITEM_KEYS = {"id", "label", "compatible_answers", "compatible_values"}
_QUESTION_KEYS = {"id", "prompt", "answers", "properties", "strategy", "relevant_items", "relevant_when"}
_PROPERTY_KEYS = {"id", "values", "parents", "clone_of"}
_ANSWER_KEYS = {"id", "label"}


@dataclass(frozen=True)
class Answer:
    id: str
    label: str


@dataclass(frozen=True)
class Question:
    """A user interaction with a finite, ordered answer set."""

    id: str
    prompt: str
    answers: tuple[Answer, ...]
    properties: tuple[str, ...] = ()
    strategy: str | None = None  # "ujs" | "ups" | None (unset)
    relevant_items: frozenset[str] | None = None  # None: relevant for every item

    @property
    def answer_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.answers)

    def answer_index(self, answer_id: str) -> int:
        for k, a in enumerate(self.answers):
            if a.id == answer_id:
                return k
        raise KeyError(f"question {self.id!r} has no answer {answer_id!r}")


@dataclass(frozen=True)
class Property:
    """A categorical item descriptor, possibly depending on parent properties."""

    id: str
    values: tuple[str, ...]
    parents: tuple[str, ...] = ()
    clone_of: str | None = None


@dataclass(frozen=True)
class Item:
    id: str
    label: str
    # question id -> compatible answer ids; property id -> compatible values
    answer_compat: Mapping[str, frozenset[str]] = field(default_factory=dict)
    value_compat: Mapping[str, frozenset[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class JointStates:
    """The feasible joint property-state set.

    ``states[k]`` assigns one value per property (aligned with
    ``property_ids``), ``item_sets[k]`` lists the positions of the items
    compatible with it, and ``counts[k] == len(item_sets[k]) >= 1``.
    """

    property_ids: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    item_sets: tuple[tuple[int, ...], ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.item_sets)

    def index(self) -> dict[tuple[str, ...], int]:
        return {state: k for k, state in enumerate(self.states)}

    def __len__(self) -> int:
        return len(self.states)


class CatalogModel:
    """Validated, cross-linked catalogue. Immutable after load."""

    def __init__(
        self,
        items: tuple[Item, ...],
        questions: tuple[Question, ...],
        properties: tuple[Property, ...],
        expert_tables: Mapping[str, Any],
        warnings: tuple[str, ...] = (),
        state_cap: int = DEFAULT_STATE_CAP,
    ):
        self.items = items
        self.questions = questions
        self.properties = properties
        self.expert_tables = dict(expert_tables)
        self.warnings = tuple(warnings)
        self.state_cap = state_cap
        self._item_pos = {it.id: k for k, it in enumerate(items)}
        self._question_pos = {q.id: k for k, q in enumerate(questions)}
        self._property_pos = {p.id: k for k, p in enumerate(properties)}
        self._joint_cache: JointStates | None = None

    # -- lookups ---------------------------------------------------------

    @property
    def n_items(self) -> int:
        return len(self.items)

    def item(self, item_id: str) -> Item:
        try:
            return self.items[self._item_pos[item_id]]
        except KeyError:
            raise CatalogError(f"unknown item {item_id!r}") from None

    def question(self, question_id: str) -> Question:
        try:
            return self.questions[self._question_pos[question_id]]
        except KeyError:
            raise CatalogError(f"unknown question {question_id!r}") from None

    def property(self, property_id: str) -> Property:
        try:
            return self.properties[self._property_pos[property_id]]
        except KeyError:
            raise CatalogError(f"unknown property {property_id!r}") from None

    def item_position(self, item_id: str) -> int:
        self.item(item_id)
        return self._item_pos[item_id]

    def has_question(self, qid: str) -> bool:
        return qid in self._question_pos

    def has_property(self, pid: str) -> bool:
        return pid in self._property_pos

    # -- compatibility indicators -----------------------------------------

    def delta_answer(self, item_id: str, question_id: str, answer_id: str) -> int:
        """0/1 indicator: item is compatible with this answer."""
        item = self.item(item_id)
        question = self.question(question_id)
        if answer_id not in question.answer_ids:
            raise CatalogError(f"question {question_id!r} has no answer {answer_id!r}")
        compat = item.answer_compat.get(question_id)
        if compat is None:
            raise CatalogError(
                f"question {question_id!r} has no answer-level compatibility for item {item_id!r}; "
                "it is only usable through its property tables"
            )
        return int(answer_id in compat)

    def delta_value(self, item_id: str, property_id: str, value: str) -> int:
        """0/1 indicator: item is compatible with this property value."""
        item = self.item(item_id)
        prop = self.property(property_id)
        if value not in prop.values:
            raise CatalogError(f"property {property_id!r} has no value {value!r}")
        compat = item.value_compat.get(property_id)
        if compat is None:
            # undeclared property: no logical constraint on the item
            return 1
        return int(value in compat)

    def delta_joint(self, item_id: str, assignment: Mapping[str, str]) -> int:
        """Product of per-property indicators over the given assignment."""
        out = 1
        for pid, value in assignment.items():
            out *= self.delta_value(item_id, pid, value)
            if not out:
                return 0
        return out

    def compatible_answers(self, item_id: str, question_id: str) -> frozenset[str]:
        self.question(question_id)
        compat = self.item(item_id).answer_compat.get(question_id)
        if compat is None:
            raise CatalogError(
                f"question {question_id!r} has no answer-level compatibility for item {item_id!r}"
            )
        return compat

    def compatible_values(self, item_id: str, property_id: str) -> frozenset[str]:
        prop = self.property(property_id)
        compat = self.item(item_id).value_compat.get(property_id)
        if compat is None:
            return frozenset(prop.values)
        return compat

    def has_answer_compat(self, question_id: str) -> bool:
        q = self.question(question_id)
        return all(q.id in it.answer_compat for it in self.items)

    # -- derived queries ---------------------------------------------------

    def joint_states(self, cap: int | None = None) -> JointStates:
        if cap is None and self._joint_cache is not None:
            return self._joint_cache
        out = feasible_joint_states(self, cap=cap)
        if cap is None:
            self._joint_cache = out
        return out


def versatility(catalog: CatalogModel, item_id: str, ref_id: str) -> int:
    """Number of answers (or property values) compatible with the item.

    ``ref_id`` names either a question or a property of the same catalogue.
    Zero is a legal result: the question rules the item out on any answer.
    """
    if catalog.has_question(ref_id):
        return len(catalog.compatible_answers(item_id, ref_id))
    if catalog.has_property(ref_id):
        return len(catalog.compatible_values(item_id, ref_id))
    raise CatalogError(f"unknown question or property {ref_id!r}")


def answer_pair_count(catalog: CatalogModel, question_id: str) -> int:
    """Total number of compatible (item, answer) pairs for the question."""
    return sum(versatility(catalog, it.id, question_id) for it in catalog.items)


def feasible_joint_states(catalog: CatalogModel, cap: int | None = None) -> JointStates:
    """Enumerate every joint property assignment compatible with >=1 item.

    The enumeration recurses property by property and prunes any partial
    assignment whose compatible-item set is already empty, so only (a
    superset of prefixes of) feasible states is ever visited. Exceeding
    ``cap`` feasible states (default 10**6) is a hard error.
    """
    if cap is None:
        cap = catalog.state_cap
    pids = tuple(p.id for p in catalog.properties)
    n = catalog.n_items
    if not pids:
        return JointStates((), ((),), (tuple(range(n)),))

    # per property/value: frozenset of compatible item positions
    value_items: dict[str, dict[str, frozenset[int]]] = {}
    for prop in catalog.properties:
        per_value = {}
        for value in prop.values:
            per_value[value] = frozenset(
                k for k, it in enumerate(catalog.items)
                if catalog.delta_value(it.id, prop.id, value)
            )
        value_items[prop.id] = per_value

    states: list[tuple[str, ...]] = []
    item_sets: list[tuple[int, ...]] = []

    def rec(depth: int, prefix: tuple[str, ...], alive: frozenset[int]) -> None:
        if depth == len(pids):
            if len(states) >= cap:
                raise EnumerationCapError(
                    f"feasible joint-state enumeration exceeded cap of {cap}"
                )
            states.append(prefix)
            item_sets.append(tuple(sorted(alive)))
            return
        for value in catalog.properties[depth].values:
            nxt = alive & value_items[pids[depth]][value]
            if nxt:
                rec(depth + 1, prefix + (value,), nxt)

    rec(0, (), frozenset(range(n)))
    return JointStates(pids, tuple(states), tuple(item_sets))


# -- parsing ----------------------------------------------------------------


def parse_fraction(value: Any, location: str = "") -> Fraction:
    """Parse a probability cell: int, float, or exact string like ``"2/3"``."""
    if isinstance(value, bool):
        raise CatalogError("probability must be a number or fraction string", location)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise CatalogError(f"cannot parse probability {value!r}", location) from None
    raise CatalogError(f"cannot parse probability {value!r}", location)


def _require(cond: bool, message: str, location: str) -> None:
    if not cond:
        raise CatalogError(message, location)


def _check_keys(obj: Mapping, allowed: set, location: str, allow_unknown: bool) -> None:
    if allow_unknown:
        return
    unknown = set(obj) - allowed
    if unknown:
        raise CatalogError(f"unknown keys {sorted(unknown)}", location)


def _str_field(obj: Mapping, key: str, location: str) -> str:
    _require(key in obj, f"missing required key {key!r}", location)
    value = obj[key]
    _require(isinstance(value, str) and value != "", f"{key!r} must be a non-empty string", location)
    return value


def load_catalog(
    source: str | Path | Mapping[str, Any],
    *,
    allow_unknown_keys: bool = False,
    state_cap: int = DEFAULT_STATE_CAP,
) -> CatalogModel:
    """Load and validate a catalogue document (path, JSON text, or dict).

    Raises :class:`CatalogError` with a location diagnostic on parse
    failures, dangling references, or a cyclic property graph. Non-fatal
    findings (e.g. an answer no item is compatible with) are collected on
    ``CatalogModel.warnings``.
    """
    if isinstance(source, Mapping):
        doc = source
    else:
        path = Path(source)
        if path.exists():
            text = path.read_text(encoding="utf-8")
            where = str(path)
        else:
            text, where = str(source), "<string>"
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"invalid JSON: {exc}", where) from exc
    if not isinstance(doc, Mapping):
        raise CatalogError("catalogue document must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "document", allow_unknown_keys)
    return _build_model(doc, allow_unknown_keys, state_cap)


def catalog_to_dict(catalog: CatalogModel) -> dict[str, Any]:
    """Serialize a model back to the document format (inverse of load)."""
    return {
        "items": [
            {
                "id": it.id,
                "label": it.label,
                "compatible_answers": {q: sorted(v) for q, v in it.answer_compat.items()},
                "compatible_values": {p: sorted(v) for p, v in it.value_compat.items()},
            }
            for it in catalog.items
        ],
        "questions": [
            {
                "id": q.id,
                "prompt": q.prompt,
                "answers": [{"id": a.id, "label": a.label} for a in q.answers],
                **({"properties": list(q.properties)} if q.properties else {}),
                **({"strategy": q.strategy} if q.strategy else {}),
                **(
                    {"relevant_items": sorted(q.relevant_items)}
                    if q.relevant_items is not None
                    else {}
                ),
            }
            for q in catalog.questions
        ],
        "properties": [
            {
                "id": p.id,
                "values": list(p.values),
                **({"parents": list(p.parents)} if p.parents else {}),
                **({"clone_of": p.clone_of} if p.clone_of else {}),
            }
            for p in catalog.properties
        ],
        "expert_tables": catalog.expert_tables,
    }


def _build_model(doc: Mapping, allow_unknown: bool, state_cap: int) -> CatalogModel:
    raw_items = doc.get("items", [])
    raw_questions = doc.get("questions", [])
    raw_properties = doc.get("properties", [])
    expert_tables = doc.get("expert_tables", {}) or {}
    _require(isinstance(raw_items, list), "'items' must be a list", "document")
    _require(isinstance(raw_questions, list), "'questions' must be a list", "document")
    _require(isinstance(raw_properties, list), "'properties' must be a list", "document")
    _require(len(raw_items) >= 1, "catalogue must contain >=1 item", "items")

    questions = _parse_questions(raw_questions, allow_unknown)
    properties = _parse_properties(raw_properties, questions, allow_unknown)
    prop_by_id = {p.id: p for p in properties}
    q_by_id = {q.id: q for q in questions}

    # attach questions to clone properties automatically
    attach: dict[str, list[str]] = {q.id: list(q.properties) for q in questions}
    for prop in properties:
        if prop.clone_of and prop.id not in attach[prop.clone_of]:
            attach[prop.clone_of].append(prop.id)
    questions = tuple(
        Question(q.id, q.prompt, q.answers, tuple(attach[q.id]), q.strategy, q.relevant_items)
        for q in questions
    )
    q_by_id = {q.id: q for q in questions}
    for q in questions:
        for pid in q.properties:
            _require(pid in prop_by_id, f"unknown property {pid!r}", f"questions[{q.id}].properties")

    items = _parse_items(raw_items, q_by_id, prop_by_id, allow_unknown)

    # relevance predicates declared as property filters resolve to item sets
    questions = _resolve_relevance(raw_questions, questions, items, prop_by_id, allow_unknown)

    warnings = _validate(items, questions, properties)
    model = CatalogModel(items, questions, properties, expert_tables, tuple(warnings), state_cap)
    return model


def _parse_questions(raw: list, allow_unknown: bool) -> tuple[Question, ...]:
    questions = []
    seen = set()
    for k, obj in enumerate(raw):
        loc = f"questions[{k}]"
        _require(isinstance(obj, Mapping), "question must be an object", loc)
        _check_keys(obj, _QUESTION_KEYS, loc, allow_unknown)
        qid = _str_field(obj, "id", loc)
        _require(qid not in seen, f"duplicate question id {qid!r}", loc)
        seen.add(qid)
        prompt = _str_field(obj, "prompt", loc)
        raw_answers = obj.get("answers")
        _require(isinstance(raw_answers, list) and len(raw_answers) >= 2,
                 "question needs >=2 answers", loc)
        answers, seen_a = [], set()
        for j, a in enumerate(raw_answers):
            aloc = f"{loc}.answers[{j}]"
            _require(isinstance(a, Mapping), "answer must be an object", aloc)
            _check_keys(a, _ANSWER_KEYS, aloc, allow_unknown)
            aid = _str_field(a, "id", aloc)
            _require(aid not in seen_a, f"duplicate answer id {aid!r}", aloc)
            seen_a.add(aid)
            answers.append(Answer(aid, a.get("label", aid)))
        strategy = obj.get("strategy")
        if strategy is not None:
            _require(strategy in ("ujs", "ups"), f"strategy must be 'ujs' or 'ups', got {strategy!r}", loc)
        props = tuple(obj.get("properties", ()) or ())
        questions.append(Question(qid, prompt, tuple(answers), props, strategy, None))
    return tuple(questions)


def _parse_properties(raw: list, questions: tuple[Question, ...], allow_unknown: bool) -> tuple[Property, ...]:
    q_by_id = {q.id: q for q in questions}
    properties = []
    seen = set()
    for k, obj in enumerate(raw):
        loc = f"properties[{k}]"
        _require(isinstance(obj, Mapping), "property must be an object", loc)
        _check_keys(obj, _PROPERTY_KEYS, loc, allow_unknown)
        pid = _str_field(obj, "id", loc)
        _require(pid not in seen, f"duplicate property id {pid!r}", loc)
        seen.add(pid)
        clone_of = obj.get("clone_of")
        if clone_of is not None:
            _require(clone_of in q_by_id, f"clone_of references unknown question {clone_of!r}", loc)
        values = obj.get("values")
        if values is None:
            _require(clone_of is not None, "property needs 'values' unless it clones a question", loc)
            values = list(q_by_id[clone_of].answer_ids)
        _require(isinstance(values, list) and len(values) >= 1, "value set must be non-empty", loc)
        _require(len(set(values)) == len(values), "duplicate property values", loc)
        if clone_of is not None:
            _require(set(values) == set(q_by_id[clone_of].answer_ids),
                     "clone property values must match the question's answer ids", loc)
        parents = tuple(obj.get("parents", ()) or ())
        properties.append(Property(pid, tuple(values), parents, clone_of))
    by_id = {p.id: p for p in properties}
    for p in properties:
        for parent in p.parents:
            _require(parent in by_id, f"unknown parent property {parent!r}", f"properties[{p.id}]")
    # acyclicity of the parent graph
    try:
        # static_order() is lazy; drain it so CycleError actually fires
        list(TopologicalSorter({p.id: set(p.parents) for p in properties}).static_order())
    except CycleError as exc:
        raise CyclicPropertyGraphError(
            f"property parent graph contains a cycle: {exc.args[1]}", "properties"
        ) from exc
    return tuple(properties)


def _parse_items(raw: list, q_by_id, prop_by_id, allow_unknown) -> tuple[Item, ...]:
    items = []
    seen = set()
    for k, obj in enumerate(raw):
        loc = f"items[{k}]"
        _require(isinstance(obj, Mapping), "item must be an object", loc)
        _check_keys(obj, _ITEM_KEYS, loc, allow_unknown)
        iid = _str_field(obj, "id", loc)
        _require(iid not in seen, f"duplicate item id {iid!r}", loc)
        seen.add(iid)
        label = obj.get("label", iid)

        answer_compat: dict[str, frozenset[str]] = {}
        for qid, answer_ids in (obj.get("compatible_answers") or {}).items():
            aloc = f"{loc}.compatible_answers[{qid}]"
            _require(qid in q_by_id, f"unknown question {qid!r}", aloc)
            _require(isinstance(answer_ids, list), "must be a list of answer ids", aloc)
            valid = set(q_by_id[qid].answer_ids)
            for aid in answer_ids:
                _require(aid in valid, f"unknown answer {aid!r}", aloc)
            answer_compat[qid] = frozenset(answer_ids)

        value_compat: dict[str, frozenset[str]] = {}
        for pid, values in (obj.get("compatible_values") or {}).items():
            vloc = f"{loc}.compatible_values[{pid}]"
            _require(pid in prop_by_id, f"unknown property {pid!r}", vloc)
            _require(isinstance(values, list) and len(values) >= 1,
                     "compatible-value set must be non-empty", vloc)
            valid = set(prop_by_id[pid].values)
            for v in values:
                _require(v in valid, f"unknown value {v!r}", vloc)
            value_compat[pid] = frozenset(values)

        # clone properties: answer- and value-level declarations are the
        # same relation, so each side is derived from the other
        for prop in prop_by_id.values():
            if prop.clone_of is None:
                continue
            qid = prop.clone_of
            from_answers = answer_compat.get(qid)
            from_values = value_compat.get(prop.id)
            if from_answers is not None and from_values is not None:
                _require(
                    from_answers == from_values,
                    f"item declares conflicting compatibility for question {qid!r} "
                    f"and its clone property {prop.id!r}",
                    loc,
                )
            elif from_answers is not None:
                value_compat[prop.id] = from_answers
            elif from_values is not None:
                answer_compat[qid] = from_values

        items.append(Item(iid, label, answer_compat, value_compat))
    return tuple(items)


def _resolve_relevance(raw_questions, questions, items, prop_by_id, allow_unknown):
    out = []
    item_ids = {it.id for it in items}
    for raw, q in zip(raw_questions, questions):
        relevant: frozenset[str] | None = None
        if "relevant_items" in raw and raw["relevant_items"] is not None:
            listed = raw["relevant_items"]
            _require(isinstance(listed, list), "'relevant_items' must be a list",
                     f"questions[{q.id}]")
            for iid in listed:
                _require(iid in item_ids, f"unknown item {iid!r}", f"questions[{q.id}].relevant_items")
            relevant = frozenset(listed)
        elif "relevant_when" in raw and raw["relevant_when"] is not None:
            pred = raw["relevant_when"]
            loc = f"questions[{q.id}].relevant_when"
            _require(isinstance(pred, Mapping) and set(pred) == {"property", "values"},
                     "predicate needs exactly 'property' and 'values'", loc)
            pid = pred["property"]
            _require(pid in prop_by_id, f"unknown property {pid!r}", loc)
            valid = set(prop_by_id[pid].values)
            values = pred["values"]
            _require(isinstance(values, list) and values, "'values' must be a non-empty list", loc)
            for v in values:
                _require(v in valid, f"unknown value {v!r}", loc)
            wanted = set(values)
            relevant = frozenset(
                it.id for it in items
                if it.value_compat.get(pid, frozenset(valid)) & wanted
            )
        out.append(Question(q.id, q.prompt, q.answers, q.properties, q.strategy, relevant))
    return tuple(out)


def _validate(items, questions, properties) -> list[str]:
    warnings = []
    for q in questions:
        declared = [it for it in items if q.id in it.answer_compat]
        if declared and len(declared) < len(items):
            missing = [it.id for it in items if q.id not in it.answer_compat]
            raise CatalogError(
                f"items {missing} lack answer-level compatibility for question {q.id!r} "
                "that other items declare",
                f"questions[{q.id}]",
            )
        if not declared:
            continue
        for answer in q.answers:
            if not any(answer.id in it.answer_compat[q.id] for it in items):
                warnings.append(
                    f"answer {answer.id!r} of question {q.id!r} is compatible with no item"
                )
        for it in items:
            if not it.answer_compat[q.id]:
                warnings.append(
                    f"item {it.id!r} is incompatible with every answer of question {q.id!r}"
                )
    for prop in properties:
        for value in prop.values:
            holders = [
                it for it in items
                if value in it.value_compat.get(prop.id, frozenset(prop.values))
            ]
            if not holders:
                warnings.append(
                    f"value {value!r} of property {prop.id!r} is compatible with no item"
                )
    return warnings
