"""Property-layer model: latent clones, question CPTs, dependency tables.

Properties are categorical item descriptors sitting between items and
questions. Questions are conditionally independent of the item given the
properties they attach to, so the model is fully specified by

* a prior over feasible joint property states (factorized expert tables,
  a flat expert joint, or the per-item strategy construction),
* one CPT per question, P(answer | attached property values), which is a
  one-hot identity table when the property is a latent clone of the
  question,
* the compatibility support linking items to joint states.

Everything here is exact (``fractions.Fraction``); the float engine is
compiled from this layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .catalog import (
    CatalogModel,
    Item,
    JointStates,
    Property,
    Question,
    parse_fraction,
    versatility,
)
from .elicitation import ItemPrior
from .errors import ElicitationError, InferenceError

# expert rows are accepted when they sum to 1 within this slack (floats
# like 0.9 + 0.1 do not hit 1 exactly in binary), then renormalized so the
# stored table is exact
ROW_SUM_TOL = Fraction(1, 10**9)

FLAT_JOINT_KEY = "joint"


@dataclass(frozen=True)
class PropertyFactor:
    """One factor of the property prior: P(property | parents).

    ``parent_states`` enumerates value combinations of the parents in
    declared order (a single empty tuple for root properties). After
    feasibility revision, cells incompatible with every item are zero and
    each surviving row sums to 1 again.
    """

    property_id: str
    parent_ids: tuple[str, ...]
    parent_states: tuple[tuple[str, ...], ...]
    value_ids: tuple[str, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    revised: bool = False

    def row(self, parent_state: tuple[str, ...] = ()) -> tuple[Fraction, ...]:
        try:
            return self.rows[self.parent_states.index(tuple(parent_state))]
        except ValueError:
            raise ElicitationError(
                f"factor for property {self.property_id!r} has no row for "
                f"parent state {tuple(parent_state)!r}"
            ) from None

    def cell(self, value: str, parent_state: tuple[str, ...] = ()) -> Fraction:
        return self.row(parent_state)[self.value_ids.index(value)]


@dataclass(frozen=True)
class QuestionCPT:
    """P(answer | values of the attached properties).

    ``cond_states`` runs over value combinations of ``property_ids`` in
    declared order; each row is a distribution over the question's
    answers. Latent-clone CPTs are identity matrices (``identity=True``).
    """

    question_id: str
    property_ids: tuple[str, ...]
    cond_states: tuple[tuple[str, ...], ...]
    answer_ids: tuple[str, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    identity: bool = False

    def row(self, cond_state: tuple[str, ...]) -> tuple[Fraction, ...]:
        try:
            return self.rows[self.cond_states.index(tuple(cond_state))]
        except ValueError:
            raise ElicitationError(
                f"CPT for question {self.question_id!r} has no row for "
                f"property state {tuple(cond_state)!r}"
            ) from None


@dataclass(frozen=True)
class PropertyJointPrior:
    """Feasibility-revised prior over joint property states.

    ``factors`` holds the revised factorized tables (empty when the
    expert supplied a flat joint instead); ``probs`` is the flat
    distribution over the feasible states in ``joint``, summing to 1.
    """

    joint: JointStates
    probs: tuple[Fraction, ...]
    factors: Mapping[str, PropertyFactor] = field(default_factory=dict)
    from_flat: bool = False

    def prob(self, state: tuple[str, ...]) -> Fraction:
        idx = self.joint.index().get(tuple(state))
        return self.probs[idx] if idx is not None else Fraction(0)


@dataclass(frozen=True)
class ExpertTables:
    """Parsed (unrevised) ``expert_tables`` section of a catalogue."""

    factors: dict[str, PropertyFactor]
    question_cpts: dict[str, QuestionCPT]
    flat_joint: dict[tuple[str, ...], Fraction] | None = None


@dataclass(frozen=True)
class PropertyModel:
    """Complete property-layer model over (item, joint state) pairs.

    The belief object of the engine is the list of support pairs: every
    (item, feasible state) combination with positive compatibility, with
    prior mass ``pair_mass`` summing to 1. ``mode`` records how the mass
    was built: ``"expert"`` spreads P(state) uniformly over the state's
    compatible items, ``"strategies"`` multiplies the per-item prior by
    the per-property 1/versatility factors.
    """

    catalog: CatalogModel
    mode: str
    joint: JointStates
    state_prior: tuple[Fraction, ...]
    joint_prior: PropertyJointPrior | None
    cpts: Mapping[str, QuestionCPT]
    pair_items: tuple[int, ...]
    pair_states: tuple[int, ...]
    pair_mass: tuple[Fraction, ...]
    item_prior: ItemPrior

    def question_properties(self, question_id: str) -> tuple[str, ...]:
        return self.cpts[question_id].property_ids

    def cond_state_of(self, question_id: str, state_idx: int) -> tuple[str, ...]:
        """Values of the question's attached properties within a joint state."""
        cpt = self.cpts[question_id]
        state = self.joint.states[state_idx]
        pos = {pid: k for k, pid in enumerate(self.joint.property_ids)}
        return tuple(state[pos[pid]] for pid in cpt.property_ids)

    def likelihood_grid(self, question_id: str) -> tuple[tuple[Fraction, ...], ...]:
        """P(answer | state) for every feasible state (n_states x n_answers)."""
        cpt = self.cpts[question_id]
        return tuple(
            cpt.row(self.cond_state_of(question_id, k)) for k in range(len(self.joint))
        )


# -- construction of CPTs and factors -----------------------------------------


def latent_clone(question: Question, property_id: str | None = None) -> tuple[Property, QuestionCPT]:
    """Clone a question into a latent property with an identity CPT.

    The property has one value per answer and P(q|c) = 1 exactly on
    matching pairs, so observing the question pins the property down.
    """
    pid = property_id or f"{question.id}.clone"
    values = question.answer_ids
    prop = Property(id=pid, values=values, parents=(), clone_of=question.id)
    one, zero = Fraction(1), Fraction(0)
    rows = tuple(
        tuple(one if j == k else zero for j in range(len(values)))
        for k in range(len(values))
    )
    cpt = QuestionCPT(
        question_id=question.id,
        property_ids=(pid,),
        cond_states=tuple((v,) for v in values),
        answer_ids=values,
        rows=rows,
        identity=True,
    )
    return prop, cpt


def _parse_prob_row(probs: Any, columns: tuple[str, ...], loc: str) -> tuple[Fraction, ...]:
    if not isinstance(probs, Mapping):
        raise ElicitationError(f"{loc}: 'probs' must be an object")
    unknown = set(probs) - set(columns)
    if unknown:
        raise ElicitationError(f"{loc}: unknown columns {sorted(unknown)}")
    cells = []
    for col in columns:
        cell = parse_fraction(probs.get(col, 0), loc)
        if cell < 0 or cell > 1:
            raise ElicitationError(f"{loc}: probability {float(cell)} outside [0, 1]")
        cells.append(cell)
    total = sum(cells, Fraction(0))
    if abs(total - 1) > ROW_SUM_TOL:
        raise ElicitationError(f"{loc}: row sums to {float(total)}, expected 1")
    return tuple(c / total for c in cells)


def soft_question_cpt(
    question: Question,
    properties: Sequence[Property],
    table: Mapping[str, Any],
) -> QuestionCPT:
    """Parse an expert CPT P(answer | attached property values).

    ``table`` uses the document shape {"given": [...], "rows": [{"when":
    {prop: value}, "probs": {answer: p}}]}. Rows must cover every value
    combination of the attached properties exactly once and sum to 1.
    """
    loc = f"expert_tables[{question.id}]"
    pids = tuple(p.id for p in properties)
    given = table.get("given")
    if given is not None:
        listed = (given,) if isinstance(given, str) else tuple(given)
        if tuple(listed) != pids:
            raise ElicitationError(
                f"{loc}: 'given' is {list(listed)} but the question attaches to {list(pids)}"
            )
    unknown = set(table) - {"given", "rows"}
    if unknown:
        raise ElicitationError(f"{loc}: unknown keys {sorted(unknown)}")
    combos = tuple(itertools.product(*(p.values for p in properties)))
    raw_rows = table.get("rows")
    if not isinstance(raw_rows, list):
        raise ElicitationError(f"{loc}: 'rows' must be a list")
    by_combo: dict[tuple[str, ...], tuple[Fraction, ...]] = {}
    for k, entry in enumerate(raw_rows):
        rloc = f"{loc}.rows[{k}]"
        combo = _parse_when(entry, pids, {p.id: p.values for p in properties}, rloc)
        if combo in by_combo:
            raise ElicitationError(f"{rloc}: duplicate row for state {combo!r}")
        by_combo[combo] = _parse_prob_row(entry.get("probs"), question.answer_ids, rloc)
    missing = [c for c in combos if c not in by_combo]
    if missing:
        raise ElicitationError(f"{loc}: missing rows for property states {missing}")
    rows = tuple(by_combo[c] for c in combos)
    identity = (
        len(pids) == 1
        and tuple(properties[0].values) == question.answer_ids
        and all(
            rows[k][j] == (1 if j == k else 0)
            for k in range(len(rows))
            for j in range(len(question.answer_ids))
        )
    )
    return QuestionCPT(question.id, pids, combos, question.answer_ids, rows, identity)


def _parse_when(entry: Any, keys: tuple[str, ...], valid: Mapping[str, Sequence[str]], loc: str) -> tuple[str, ...]:
    if not isinstance(entry, Mapping):
        raise ElicitationError(f"{loc}: row must be an object")
    when = entry.get("when")
    if keys == ():
        if when not in (None, {}):
            raise ElicitationError(f"{loc}: 'when' must be empty for a root table")
        return ()
    if not isinstance(when, Mapping) or set(when) != set(keys):
        raise ElicitationError(f"{loc}: 'when' must assign exactly {list(keys)}")
    combo = []
    for key in keys:
        value = when[key]
        if value not in valid[key]:
            raise ElicitationError(f"{loc}: unknown value {value!r} for {key!r}")
        combo.append(value)
    return tuple(combo)


def parse_property_factor(prop: Property, table: Mapping[str, Any], all_values: Mapping[str, tuple[str, ...]]) -> PropertyFactor:
    """Parse an expert factor table for one property.

    Root properties use {"probs": {...}}; dependent ones {"rows":
    [{"when": {parent: value}, "probs": {...}}]}. Rows for infeasible
    parent combinations may be omitted (they carry no mass anyway).
    """
    loc = f"expert_tables[{prop.id}]"
    if not isinstance(table, Mapping):
        raise ElicitationError(f"{loc}: table must be an object")
    if not prop.parents:
        unknown = set(table) - {"probs", "given"}
        if unknown:
            raise ElicitationError(f"{loc}: unknown keys {sorted(unknown)}")
        row = _parse_prob_row(table.get("probs"), prop.values, loc)
        return PropertyFactor(prop.id, (), ((),), prop.values, (row,))
    unknown = set(table) - {"rows", "given"}
    if unknown:
        raise ElicitationError(f"{loc}: unknown keys {sorted(unknown)}")
    raw_rows = table.get("rows")
    if not isinstance(raw_rows, list):
        raise ElicitationError(f"{loc}: 'rows' must be a list")
    by_combo: dict[tuple[str, ...], tuple[Fraction, ...]] = {}
    for k, entry in enumerate(raw_rows):
        rloc = f"{loc}.rows[{k}]"
        combo = _parse_when(entry, prop.parents, all_values, rloc)
        if combo in by_combo:
            raise ElicitationError(f"{rloc}: duplicate row for parent state {combo!r}")
        by_combo[combo] = _parse_prob_row(entry.get("probs"), prop.values, rloc)
    # order rows by the canonical parent-value product for stable layout
    canonical = tuple(
        c for c in itertools.product(*(all_values[p] for p in prop.parents)) if c in by_combo
    )
    return PropertyFactor(prop.id, prop.parents, canonical, prop.values,
                          tuple(by_combo[c] for c in canonical))


def parse_expert_tables(catalog: CatalogModel) -> ExpertTables:
    """Split the raw ``expert_tables`` document section by target.

    Keys name a property (factor table), a question (soft CPT), or the
    reserved ``"joint"`` key carrying a flat joint over all properties.
    """
    factors: dict[str, PropertyFactor] = {}
    cpts: dict[str, QuestionCPT] = {}
    flat: dict[tuple[str, ...], Fraction] | None = None
    all_values = {p.id: p.values for p in catalog.properties}
    for key, table in catalog.expert_tables.items():
        if key == FLAT_JOINT_KEY and not catalog.has_property(key) and not catalog.has_question(key):
            flat = _parse_flat_joint(catalog, table)
        elif catalog.has_property(key):
            factors[key] = parse_property_factor(catalog.property(key), table, all_values)
        elif catalog.has_question(key):
            q = catalog.question(key)
            if not q.properties:
                raise ElicitationError(
                    f"expert_tables[{key}]: question has no attached properties"
                )
            props = [catalog.property(pid) for pid in q.properties]
            cpts[key] = soft_question_cpt(q, props, table)
        else:
            raise ElicitationError(f"expert_tables[{key}]: no such property or question")
    if flat is not None and factors:
        raise ElicitationError(
            "expert_tables mixes a flat joint with per-property factors; supply one or the other"
        )
    return ExpertTables(factors, cpts, flat)


def _parse_flat_joint(catalog: CatalogModel, table: Mapping[str, Any]) -> dict[tuple[str, ...], Fraction]:
    loc = f"expert_tables[{FLAT_JOINT_KEY}]"
    pids = tuple(p.id for p in catalog.properties)
    if not pids:
        raise ElicitationError(f"{loc}: catalogue declares no properties")
    if not isinstance(table, Mapping) or set(table) - {"rows"}:
        raise ElicitationError(f"{loc}: expected an object with a 'rows' list")
    raw_rows = table.get("rows")
    if not isinstance(raw_rows, list):
        raise ElicitationError(f"{loc}: 'rows' must be a list")
    all_values = {p.id: p.values for p in catalog.properties}
    out: dict[tuple[str, ...], Fraction] = {}
    total = Fraction(0)
    for k, entry in enumerate(raw_rows):
        rloc = f"{loc}.rows[{k}]"
        combo = _parse_when(entry, pids, all_values, rloc)
        if combo in out:
            raise ElicitationError(f"{rloc}: duplicate state {combo!r}")
        cell = parse_fraction(entry.get("prob", 0), rloc)
        if cell < 0 or cell > 1:
            raise ElicitationError(f"{rloc}: probability {float(cell)} outside [0, 1]")
        out[combo] = cell
        total += cell
    if abs(total - 1) > ROW_SUM_TOL:
        raise ElicitationError(f"{loc}: states sum to {float(total)}, expected 1")
    return {combo: cell / total for combo, cell in out.items()}


# -- feasibility revision ------------------------------------------------------


def revise_property_factor(catalog: CatalogModel, factor: PropertyFactor) -> PropertyFactor:
    """Zero cells incompatible with every item and renormalize each row.

    A cell (value v given parent state pa) survives when some item is
    jointly compatible with {property: v} plus pa. A row whose every cell
    dies names a parent state no item supports at all; a table carrying
    such a row is rejected (it could never receive mass).
    """
    rows = []
    for pa, row in zip(factor.parent_states, factor.rows):
        base = dict(zip(factor.parent_ids, pa))
        alive = [
            any(
                catalog.delta_joint(it.id, {factor.property_id: v, **base})
                for it in catalog.items
            )
            for v in factor.value_ids
        ]
        if not any(alive):
            raise ElicitationError(
                f"factor for property {factor.property_id!r}: parent state {pa!r} "
                "is incompatible with every item; drop the row"
            )
        kept = [c if a else Fraction(0) for c, a in zip(row, alive)]
        total = sum(kept, Fraction(0))
        if total == 0:
            # feasible parent state, but the expert put all mass on
            # infeasible values; nothing to renormalize
            raise ElicitationError(
                f"factor for property {factor.property_id!r}: row for parent state "
                f"{pa!r} has zero mass on feasible values"
            )
        rows.append(tuple(c / total for c in kept))
    return replace(factor, rows=tuple(rows), revised=True)


def revise_joint_prior(
    catalog: CatalogModel,
    tables: ExpertTables | None = None,
    *,
    feasible: JointStates | None = None,
) -> PropertyJointPrior:
    """Build the prior over feasible joint states from expert tables.

    Factorized tables are revised row by row first, then the product is
    restricted to the feasible set and renormalized globally. A flat
    joint skips the row stage: it is masked to the feasible set and
    renormalized in one step. Fails if no feasible state keeps mass.
    """
    if tables is None:
        tables = parse_expert_tables(catalog)
    joint = feasible if feasible is not None else catalog.joint_states()

    if tables.flat_joint is not None:
        probs = [tables.flat_joint.get(state, Fraction(0)) for state in joint.states]
        total = sum(probs, Fraction(0))
        if total == 0:
            raise ElicitationError("flat joint assigns zero mass to every feasible state")
        return PropertyJointPrior(joint, tuple(p / total for p in probs), {}, from_flat=True)

    missing = [p.id for p in catalog.properties if p.id not in tables.factors]
    if missing:
        raise ElicitationError(f"expert_tables lacks factor tables for properties {missing}")
    revised = {pid: revise_property_factor(catalog, f) for pid, f in tables.factors.items()}

    pos = {pid: k for k, pid in enumerate(joint.property_ids)}
    probs = []
    for state in joint.states:
        mass = Fraction(1)
        for prop in catalog.properties:
            f = revised[prop.id]
            pa = tuple(state[pos[p]] for p in f.parent_ids)
            mass *= f.cell(state[pos[prop.id]], pa)
            if mass == 0:
                break
        probs.append(mass)
    total = sum(probs, Fraction(0))
    if total == 0:
        raise ElicitationError("expert tables assign zero mass to every feasible state")
    return PropertyJointPrior(joint, tuple(p / total for p in probs), revised)


def conditional_property_given_item(
    prior: PropertyJointPrior,
    catalog: CatalogModel,
    property_id: str,
    value: str,
    parent_state: Mapping[str, str],
    item_id: str,
) -> Fraction:
    """P(value | parent state, item): the factor row restricted to the
    item's compatible values and renormalized.

    Zero whenever the item is incompatible with the value or the parent
    state itself; an item compatible with the parents but with zero mass
    on all of its compatible values has no defined conditional.
    """
    if prior.from_flat or property_id not in prior.factors:
        raise ElicitationError(
            f"no factor table for property {property_id!r}; per-property "
            "conditionals need a factorized elicitation"
        )
    factor = prior.factors[property_id]
    if set(parent_state) != set(factor.parent_ids):
        raise ElicitationError(
            f"parent state must assign exactly {list(factor.parent_ids)}"
        )
    pa = tuple(parent_state[p] for p in factor.parent_ids)
    if catalog.delta_joint(item_id, dict(parent_state)) == 0:
        return Fraction(0)
    if catalog.delta_value(item_id, property_id, value) == 0:
        return Fraction(0)
    row = factor.row(pa)
    den = sum(
        (cell for v, cell in zip(factor.value_ids, row)
         if catalog.delta_value(item_id, property_id, v)),
        Fraction(0),
    )
    if den == 0:
        raise InferenceError(
            f"item {item_id!r} has zero probability on every compatible value "
            f"of property {property_id!r} given {dict(parent_state)!r}"
        )
    return factor.cell(value, pa) / den


def item_prior_from_properties(catalog: CatalogModel, prior: PropertyJointPrior) -> ItemPrior:
    """P(i) = sum over compatible feasible states of P(state)/N(state)."""
    acc = [Fraction(0)] * catalog.n_items
    for state_idx, members in enumerate(prior.joint.item_sets):
        share = prior.probs[state_idx] / len(members)
        for pos in members:
            acc[pos] += share
    return ItemPrior(tuple(it.id for it in catalog.items), tuple(acc))


def irrelevant_question_likelihood(
    question: Question,
    item_ids: Sequence[str],
    base_likelihood: Sequence,
    posterior: Sequence,
):
    """Per-item likelihood of one answer under the relevance predicate.

    Items the question is relevant for keep their model likelihood;
    the others share the posterior-weighted mean answer probability of
    the relevant group, so their mutual ratios (and the relevant vs
    irrelevant group ratio) never move. Exact for Fraction inputs.
    """
    if question.relevant_items is None:
        return list(base_likelihood)
    rel = [k for k, iid in enumerate(item_ids) if iid in question.relevant_items]
    rel_mass = sum(posterior[k] for k in rel)
    if not rel or rel_mass == 0:
        raise InferenceError(
            f"question {question.id!r} has no relevant item with positive posterior mass"
        )
    shared = sum(posterior[k] * base_likelihood[k] for k in rel) / rel_mass
    return [
        base_likelihood[k] if iid in question.relevant_items else shared
        for k, iid in enumerate(item_ids)
    ]


# -- full model assembly -------------------------------------------------------


def with_latent_clones(catalog: CatalogModel) -> CatalogModel:
    """Extend a catalogue with clone properties for property-less questions.

    Questions already attached to a property are untouched. The clone
    copies the question's answer-level compatibility, so the derived
    model is observationally equivalent to the property-free one.
    """
    new_props: list[Property] = list(catalog.properties)
    new_cpts: dict[str, str] = {}
    items = {it.id: dict(it.value_compat) for it in catalog.items}
    questions = []
    taken = {p.id for p in catalog.properties}
    for q in catalog.questions:
        if q.properties:
            questions.append(q)
            continue
        pid = f"{q.id}.clone"
        while pid in taken:
            pid += "_"
        taken.add(pid)
        prop, _ = latent_clone(q, pid)
        new_props.append(prop)
        new_cpts[q.id] = pid
        for it in catalog.items:
            compat = it.answer_compat.get(q.id)
            if compat is None:
                raise ElicitationError(
                    f"question {q.id!r} has neither attached properties nor "
                    "answer-level compatibility; cannot synthesize a clone"
                )
            items[it.id][pid] = compat
        questions.append(Question(q.id, q.prompt, q.answers, (pid,), q.strategy, q.relevant_items))
    new_items = tuple(
        Item(it.id, it.label, it.answer_compat, items[it.id]) for it in catalog.items
    )
    return CatalogModel(
        new_items, tuple(questions), tuple(new_props),
        catalog.expert_tables, catalog.warnings, catalog.state_cap,
    )


def _property_strategy_buckets(
    catalog: CatalogModel, default: str, overrides: Mapping[str, str] | None
) -> tuple[list[str], list[str]]:
    """Assign each property to UJS or UPS via its attached questions."""
    if default not in ("ujs", "ups"):
        raise ElicitationError(f"default strategy must be 'ujs' or 'ups', got {default!r}")
    tags: dict[str, set[str]] = {p.id: set() for p in catalog.properties}
    for q in catalog.questions:
        tag = (overrides or {}).get(q.id, q.strategy)
        if tag is None:
            continue
        if tag not in ("ujs", "ups"):
            raise ElicitationError(f"unknown strategy tag {tag!r} for question {q.id!r}")
        if len(q.properties) != 1:
            raise ElicitationError(
                f"strategy tag on question {q.id!r} needs exactly one attached property"
            )
        tags[q.properties[0]].add(tag)
    ujs, ups = [], []
    for p in catalog.properties:
        got = tags[p.id]
        if len(got) > 1:
            raise ElicitationError(f"conflicting strategy tags for property {p.id!r}")
        tag = got.pop() if got else default
        (ujs if tag == "ujs" else ups).append(p.id)
    return ujs, ups


def _strategy_item_prior(catalog: CatalogModel, ujs_props: Sequence[str]) -> ItemPrior:
    """Prior over items: product of v/N factors over UJS properties."""
    item_ids = tuple(it.id for it in catalog.items)
    if not ujs_props:
        n = catalog.n_items
        return ItemPrior(item_ids, tuple(Fraction(1, n) for _ in item_ids))
    weights = []
    for it in catalog.items:
        w = Fraction(1)
        for pid in ujs_props:
            n_pairs = sum(versatility(catalog, jt.id, pid) for jt in catalog.items)
            w *= Fraction(versatility(catalog, it.id, pid), n_pairs)
        weights.append(w)
    total = sum(weights, Fraction(0))
    if total == 0:
        raise ElicitationError("every item has zero prior weight under the UJS products")
    return ItemPrior(item_ids, tuple(w / total for w in weights))


def build_property_model(
    catalog: CatalogModel,
    mode: str = "expert",
    *,
    default_strategy: str = "ups",
    strategy_overrides: Mapping[str, str] | None = None,
) -> PropertyModel:
    """Assemble the full property-layer model in one of two ways.

    ``"expert"`` mode takes the prior over joint states from the
    catalogue's expert tables (revised for feasibility) and spreads each
    state's mass uniformly over its compatible items. ``"strategies"``
    mode builds the per-item prior from the UJS/UPS tags and factors the
    state mass as the product of per-property 1/versatility terms;
    expert factor tables are ignored there, soft question CPTs are not.
    """
    if mode not in ("expert", "strategies"):
        raise ElicitationError(f"mode must be 'expert' or 'strategies', got {mode!r}")

    work = with_latent_clones(catalog) if mode == "strategies" else catalog
    if not work.properties:
        raise ElicitationError("a property model needs at least one property")
    joint = work.joint_states()
    tables = parse_expert_tables(work)

    cpts: dict[str, QuestionCPT] = {}
    for q in work.questions:
        if q.id in tables.question_cpts:
            cpts[q.id] = tables.question_cpts[q.id]
            continue
        if len(q.properties) == 1:
            prop = work.property(q.properties[0])
            if prop.clone_of == q.id:
                cpts[q.id] = latent_clone(q, prop.id)[1]
                continue
        if not q.properties:
            raise ElicitationError(
                f"question {q.id!r} attaches to no property; in a property model "
                "every question needs a conditioning property"
            )
        raise ElicitationError(
            f"question {q.id!r} attaches to non-clone properties "
            f"{list(q.properties)} but expert_tables has no CPT for it"
        )

    n_states = len(joint)
    pair_items: list[int] = []
    pair_states: list[int] = []
    pair_mass: list[Fraction] = []

    if mode == "expert":
        prior = revise_joint_prior(work, tables, feasible=joint)
        for k in range(n_states):
            members = joint.item_sets[k]
            share = prior.probs[k] / len(members)
            for pos in members:
                pair_items.append(pos)
                pair_states.append(k)
                pair_mass.append(share)
        item_prior = item_prior_from_properties(work, prior)
        state_prior = prior.probs
    else:
        ujs_props, _ = _property_strategy_buckets(work, default_strategy, strategy_overrides)
        base = _strategy_item_prior(work, ujs_props)
        pos = {pid: k for k, pid in enumerate(joint.property_ids)}
        inv_v = []
        for it in work.items:
            f = Fraction(1)
            for p in work.properties:
                f /= versatility(work, it.id, p.id)
            inv_v.append(f)
        state_acc = [Fraction(0)] * n_states
        for k in range(n_states):
            for ipos in joint.item_sets[k]:
                mass = base.probs[ipos] * inv_v[ipos]
                if mass == 0:
                    continue
                pair_items.append(ipos)
                pair_states.append(k)
                pair_mass.append(mass)
                state_acc[k] += mass
        prior = None
        item_prior = base
        state_prior = tuple(state_acc)

    return PropertyModel(
        catalog=work,
        mode=mode,
        joint=joint,
        state_prior=tuple(state_prior),
        joint_prior=prior,
        cpts=cpts,
        pair_items=tuple(pair_items),
        pair_states=tuple(pair_states),
        pair_mass=tuple(pair_mass),
        item_prior=item_prior,
    )
