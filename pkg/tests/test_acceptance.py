"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line in the terminal summary via the
criterion() helper, so the suite doubles as a sign-off checklist.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import criterion
from convrec import compile_model, load_catalog
from convrec.adaptive import StoppingConfig, conditional_entropy, next_question, stopping_threshold
from convrec.elicitation import combine_questions, elicit_ujs, elicit_ups
from convrec.engine import compile_item_model
from convrec.errors import InferenceError
from convrec.evaluation import (
    generate_synthetic_catalog,
    generate_synthetic_log,
    replay,
    sweep_threshold,
)
from convrec.inference import (
    brute_force_oracle,
    exact_sequential_posterior,
    init_session,
    retained,
    update,
)
from convrec.learning import (
    LogRow,
    Observation,
    learn_tables,
    posterior_mean_cpt,
    prior_to_pseudocounts,
    update_from_log,
)
from convrec.property_net import PropertyFactor, parse_expert_tables, revise_property_factor

from randmodels import (
    compatible_answer_sequence,
    random_answer_sequence,
    random_item_doc,
    random_property_doc,
)

F = Fraction


def test_acceptance_toy_exactness(toy_catalog, ujs_catalog, ups_catalog, expert_model):
    with criterion("exact toy-catalogue arithmetic (rational, zero tolerance)"):
        start = time.perf_counter()

        ujs = elicit_ujs("event_type", ujs_catalog)
        assert ujs.cell("i1", "wedding") == F(1, 8)
        assert ujs.item_prior().probs == (F(1, 2), F(1, 4), F(1, 4))

        ups = elicit_ups("event_type", ups_catalog)
        assert ups.cell("i1", "wedding") == F(1, 12)
        assert ups.cell("i2", "wedding") == F(1, 6)
        assert ups.item_prior().probs == (F(1, 3), F(1, 3), F(1, 3))

        prior, tables = combine_questions(
            ["entertainment_type", "event_type"], [], ujs_catalog
        )
        assert prior.probs == (F(1, 2), F(1, 4), F(1, 4))
        assert set(tables) == {"entertainment_type", "event_type"}

        model = compile_model(ujs_catalog)
        assert exact_sequential_posterior(model, [("event_type", "wedding")]) == (
            F(1, 2), F(1, 2), 0,
        )

        column = [ups.cell(i, "wedding") for i in ("i1", "i2", "i3")]
        assert column == [F(1, 12), F(1, 6), 0]
        z = sum(column)
        assert [c / z for c in column] == [F(1, 3), F(2, 3), 0]

        expert = parse_expert_tables(toy_catalog)
        performer = revise_property_factor(toy_catalog, expert.factors["performer"])
        assert performer.row(("wedding",)) == (F(2, 3), F(1, 3), 0, 0)
        assert performer.row(("corporate",)) == (F(1, 3), F(2, 3), 0, 0)
        assert performer.row(("birthday",)) == (F(1, 2), 0, 0, F(1, 2))
        assert performer.row(("kids_party",)) == (F(2, 3), 0, 0, F(1, 3))
        event = revise_property_factor(toy_catalog, expert.factors["event"])
        assert event.row(()) == (F(2, 3), F(1, 9), F(1, 9), F(1, 9))

        assert expert_model.exact.item_prior.probs == (F(11, 18), F(8, 27), F(5, 54))
        assert brute_force_oracle(expert_model, [("event_type", "wedding")]) == (
            F(2, 3), F(1, 3), 0,
        )

        # the float engine reproduces the rational numbers to 1e-12
        state = update(init_session(expert_model), "event_type", "wedding")
        np.testing.assert_allclose(state.posterior, [2 / 3, 1 / 3, 0.0], atol=1e-12)

        assert time.perf_counter() - start < 1.0


def test_acceptance_selection_and_threshold(ujs_model, expert_model):
    with criterion("decisive question asked first; stop threshold exact"):
        for model in (ujs_model, expert_model):
            state = init_session(model)
            picked = next_question(
                state, list(model.question_ids), StoppingConfig(stop_s=1)
            )
            assert picked == "entertainment_type"
        assert stopping_threshold(2, 3) == pytest.approx(
            math.log(2) / math.log(3), abs=1e-12
        )


def _check_against_oracle(model, answers) -> bool:
    """True when both paths agree on a live posterior, False on a shared
    contradiction; raises when they disagree."""
    try:
        oracle = brute_force_oracle(model, answers)
    except InferenceError:
        state = init_session(model)
        for qid, aid in answers:
            state = update(state, qid, aid)
            if state.contradiction:
                return False
        raise AssertionError(f"oracle contradicted but the engine did not: {answers}")
    state = init_session(model)
    for qid, aid in answers:
        state = update(state, qid, aid)
    assert not state.contradiction
    np.testing.assert_allclose(state.posterior, [float(p) for p in oracle], atol=1e-9)
    return True


def test_acceptance_oracle_equivalence_at_scale():
    with criterion("oracle equivalence on 1000 randomized models"):
        rng = random.Random(2024)
        agreements = 0
        for k in range(1000):
            if rng.random() < 0.7:
                doc = random_property_doc(rng, expert=rng.random() < 0.5)
            else:
                doc = random_item_doc(rng)
            model = compile_model(load_catalog(doc))
            if k < 60:
                # exhaustive: every ordered sequence of <=3 distinct questions
                qids = [q.id for q in model.catalog.questions]
                for length in range(1, min(3, len(qids)) + 1):
                    for subset in itertools.permutations(qids, length):
                        pools = [model.catalog.question(q).answer_ids for q in subset]
                        for combo in itertools.product(*pools):
                            agreements += _check_against_oracle(
                                model, list(zip(subset, combo))
                            )
            else:
                agreements += _check_against_oracle(
                    model, random_answer_sequence(rng, model.catalog)
                )
        assert agreements > 1000  # contradictions must not dominate the sample


def test_acceptance_invariants(expert_model):
    with criterion("normalization, order, monotonicity, zeros, descent, clones"):
        rng = random.Random(4242)

        # posterior normalization, support shrinkage, NRI monotone
        for _ in range(25):
            doc = random_item_doc(rng)
            model = compile_model(load_catalog(doc))
            state = init_session(model)
            support = set(retained(state)[0])
            nri = retained(state)[1]
            for qid, aid in compatible_answer_sequence(rng, model.catalog):
                state = update(state, qid, aid)
                assert np.sum(state.posterior) == pytest.approx(1.0, abs=1e-12)
                now_ids, now_nri = retained(state)
                assert set(now_ids) <= support
                assert now_nri <= nri
                support, nri = set(now_ids), now_nri

        # answer order does not matter
        for _ in range(25):
            doc = random_property_doc(rng, expert=rng.random() < 0.5)
            model = compile_model(load_catalog(doc))
            answers = compatible_answer_sequence(rng, model.catalog)
            if len(answers) < 2:
                continue
            forward = init_session(model)
            for qid, aid in answers:
                forward = update(forward, qid, aid)
            shuffled = answers[:]
            rng.shuffle(shuffled)
            backward = init_session(model)
            for qid, aid in shuffled:
                backward = update(backward, qid, aid)
            np.testing.assert_allclose(
                forward.posterior, backward.posterior, atol=1e-9
            )

        # expected posterior entropy never exceeds the current entropy
        for _ in range(20):
            doc = random_property_doc(rng, expert=rng.random() < 0.5)
            model = compile_model(load_catalog(doc))
            state = init_session(model)
            for qid, aid in compatible_answer_sequence(rng, model.catalog)[:-1]:
                state = update(state, qid, aid)
            for qid in model.question_ids:
                if qid not in state.asked:
                    assert conditional_entropy(state, qid) <= state.entropy + 1e-9

        # structural zeros survive learning untouched
        rows = [
            LogRow("s1", "i2", "event_type", "wedding"),
            LogRow("s1", "i2", "entertainment_type", "band"),
            LogRow("s2", "i1", "event_type", "birthday"),
            LogRow("s2", "i1", "entertainment_type", "dj"),
        ]
        catalog = expert_model.exact.catalog
        learned, report = learn_tables(catalog, expert_model.exact, rows, ess=3)
        assert report == []
        revised = {
            pid: revise_property_factor(catalog, factor)
            for pid, factor in parse_expert_tables(catalog).factors.items()
        }
        for pid, params in learned.items():
            mean = posterior_mean_cpt(params)
            if isinstance(mean, PropertyFactor) and pid in revised:
                for got_row, prior_row in zip(mean.rows, revised[pid].rows):
                    for got, prior in zip(got_row, prior_row):
                        if prior == 0:
                            assert got == 0
        for cpt in expert_model.exact.cpts.values():
            if cpt.identity:
                params = prior_to_pseudocounts(cpt, 1)
                obs = [
                    Observation(cpt.question_id, state, cpt.answer_ids[0])
                    for state in cpt.cond_states
                    if cpt.row(state)[0] > 0
                ]
                updated, _ = update_from_log(params, obs)
                assert posterior_mean_cpt(updated).rows == cpt.rows

        # an explicit clone layer reproduces the flat item engine
        for _ in range(15):
            doc = random_item_doc(rng)
            catalog = load_catalog(doc)
            flat = compile_item_model(catalog)
            layered = compile_model(
                load_catalog({**doc, "properties": [
                    {"id": f"c_{q['id']}", "clone_of": q["id"]}
                    for q in doc["questions"]
                ]})
            )
            assert flat.exact.prior.probs == layered.exact.item_prior.probs
            for q in catalog.questions:
                for aid in q.answer_ids:
                    sa = update(init_session(flat), q.id, aid, mode="soft")
                    sb = update(init_session(layered), q.id, aid, mode="soft")
                    np.testing.assert_allclose(
                        sa.posterior, sb.posterior, atol=1e-12
                    )


def test_acceptance_learning_convergence(expert_model):
    with criterion("learning: exact prior at zero data, 0.02 recovery at 10k"):
        pm = expert_model.exact
        # zero observations: posterior mean is the prior, exactly
        for table in (*pm.cpts.values(), *pm.joint_prior.factors.values()):
            params = prior_to_pseudocounts(table, F(7, 2))
            assert posterior_mean_cpt(params).rows == table.rows

        # 10k sampled observations recover the generating row within 0.02
        truth = (F(2, 3), F(1, 9), F(1, 9), F(1, 9))
        values = ("a", "b", "c", "d")
        factor = PropertyFactor("p", (), ((),), values, (truth,))
        params = prior_to_pseudocounts(factor, 1)
        rng = random.Random(1234)
        weights = [float(t) for t in truth]
        obs = [
            Observation("p", (), rng.choices(values, weights=weights)[0])
            for _ in range(10_000)
        ]
        params, report = update_from_log(params, obs)
        assert report == []
        mean = posterior_mean_cpt(params).rows[0]
        for got, want in zip(mean, truth):
            assert abs(got - want) < F(2, 100)


def test_acceptance_evaluation_at_scale():
    with criterion("evaluation at scale: 500 items, 20 questions, 120 sessions"):
        start = time.perf_counter()
        catalog = generate_synthetic_catalog(500, 20, balanced=True, seed=7)
        model = compile_model(catalog)
        records = generate_synthetic_log(model, 120, seed=11)

        metrics = replay(model, records)
        assert metrics.mean_fraction_retained == pytest.approx(1.0, abs=1e-12)
        assert metrics.empty_reference_count == 0
        curve = metrics.mean_entropy_curve
        assert all(a >= b - 1e-12 for a, b in zip(curve, curve[1:]))

        sweep = sweep_threshold(model, records, [1, 5, 50, 500])
        assert sweep.mean_questions_fraction[-1] == 0.0
        assert sweep.mean_nri_fraction[-1] == 1.0
        assert all(
            a <= b + 1e-12
            for a, b in zip(sweep.mean_nri_fraction, sweep.mean_nri_fraction[1:])
        )
        assert all(
            a >= b - 1e-12
            for a, b in zip(
                sweep.mean_questions_fraction, sweep.mean_questions_fraction[1:]
            )
        )
        assert time.perf_counter() - start < 60.0
