import random
from fractions import Fraction

import pytest

from convrec import load_catalog
from convrec.elicitation import (
    combine_questions,
    elicit_ujs,
    elicit_ups,
    prior_weights,
    strategy_buckets,
)
from convrec.errors import ElicitationError

from randmodels import random_item_doc

F = Fraction


def test_uniform_joint_cells_on_toy(ujs_catalog):
    table = elicit_ujs("event_type", ujs_catalog)
    # eight compatible pairs, every one carrying 1/8
    assert table.total() == 1
    assert table.cell("i1", "wedding") == F(1, 8)
    assert table.cell("i1", "kids_party") == F(1, 8)
    assert table.cell("i2", "wedding") == F(1, 8)
    assert table.cell("i2", "birthday") == 0
    assert table.cell("i3", "birthday") == F(1, 8)
    assert table.cell("i3", "wedding") == 0


def test_uniform_joint_prior_on_toy(ujs_catalog):
    prior = elicit_ujs("event_type", ujs_catalog).item_prior()
    assert prior.probs == (F(1, 2), F(1, 4), F(1, 4))


def test_single_answer_question_gives_uniform_prior(ujs_catalog):
    # every item accepts exactly one entertainment answer, so both
    # strategies collapse to the same uniform table
    ujs = elicit_ujs("entertainment_type", ujs_catalog)
    ups = elicit_ups("entertainment_type", ujs_catalog)
    assert ujs.cells == ups.cells
    assert ujs.item_prior().probs == (F(1, 3), F(1, 3), F(1, 3))


def test_uniform_prior_cells_on_toy(ups_catalog):
    table = elicit_ups("event_type", ups_catalog)
    assert table.total() == 1
    assert table.cell("i1", "wedding") == F(1, 12)
    assert table.cell("i2", "wedding") == F(1, 6)
    assert table.cell("i3", "kids_party") == F(1, 6)
    assert table.cell("i2", "kids_party") == 0
    assert table.item_prior().probs == (F(1, 3), F(1, 3), F(1, 3))


def test_unnormalized_single_answer_posterior(ups_catalog):
    # conditioning on 'wedding' leaves exactly the joint column
    table = elicit_ups("event_type", ups_catalog)
    column = [table.cell(i, "wedding") for i in ("i1", "i2", "i3")]
    assert column == [F(1, 12), F(1, 6), 0]
    z = sum(column)
    posterior = [c / z for c in column]
    assert posterior == [F(1, 3), F(2, 3), 0]


def test_conditionals_are_delta_over_versatility(ujs_catalog, ups_catalog):
    for catalog in (ujs_catalog, ups_catalog):
        for elicit in (elicit_ujs, elicit_ups):
            cond = elicit("event_type", catalog).conditional()
            assert cond.row("i1") == (F(1, 4),) * 4
            assert cond.row("i2") == (F(1, 2), F(1, 2), 0, 0)
            assert cond.row("i3") == (0, 0, F(1, 2), F(1, 2))


def test_prior_weights_product(ujs_catalog):
    weights = prior_weights(ujs_catalog, ["entertainment_type", "event_type"])
    assert weights == (F(1, 6), F(1, 12), F(1, 12))


def test_combined_prior_normalizes(ujs_catalog):
    prior, tables = combine_questions(
        ["entertainment_type", "event_type"], [], ujs_catalog
    )
    assert prior.probs == (F(1, 2), F(1, 4), F(1, 4))
    assert prior.total() == 1
    assert set(tables) == {"entertainment_type", "event_type"}


def test_combined_prior_mixed_strategies(ujs_catalog):
    # the uniform-prior question contributes nothing to the prior shape
    prior, _ = combine_questions(["event_type"], ["entertainment_type"], ujs_catalog)
    assert prior.probs == (F(1, 2), F(1, 4), F(1, 4))


def test_combined_prior_all_ups_is_uniform(ups_catalog):
    prior, _ = combine_questions(
        [], ["entertainment_type", "event_type"], ups_catalog
    )
    assert prior.probs == (F(1, 3), F(1, 3), F(1, 3))


def test_strategy_sets_must_partition_questions(ujs_catalog):
    with pytest.raises(ElicitationError, match="both strategies"):
        combine_questions(["event_type"], ["event_type", "entertainment_type"], ujs_catalog)
    with pytest.raises(ElicitationError, match="missing"):
        combine_questions(["event_type"], [], ujs_catalog)
    with pytest.raises(ElicitationError, match="extraneous"):
        combine_questions(
            ["event_type", "entertainment_type"], ["bogus"], ujs_catalog
        )


def test_strategy_buckets_respect_tags_defaults_and_overrides(toy_catalog):
    ujs, ups = strategy_buckets(toy_catalog)
    assert set(ujs) == {"entertainment_type", "event_type"}  # both tagged ujs
    assert ups == []
    ujs, ups = strategy_buckets(toy_catalog, overrides={"event_type": "ups"})
    assert ujs == ["entertainment_type"]
    assert ups == ["event_type"]


def test_question_with_no_compatible_pair_rejected(toy_doc):
    from conftest import property_free

    doc = property_free(toy_doc)
    for it in doc["items"]:
        it["compatible_answers"]["event_type"] = []
    catalog = load_catalog(doc)
    with pytest.raises(ElicitationError, match="no compatible"):
        elicit_ujs("event_type", catalog)


def test_uniform_joint_equalizes_compatible_posteriors():
    # P(i | answer) is flat over the compatible items, whatever their
    # versatility, because the v factors cancel
    rng = random.Random(7)
    for _ in range(30):
        catalog = load_catalog(random_item_doc(rng))
        qid = rng.choice([q.id for q in catalog.questions])
        table = elicit_ujs(qid, catalog)
        for aid in catalog.question(qid).answer_ids:
            column = {
                iid: table.cell(iid, aid) for iid in (it.id for it in catalog.items)
            }
            positive = {v for v in column.values() if v != 0}
            assert len(positive) <= 1
            for iid, cell in column.items():
                expected = catalog.delta_answer(iid, qid, aid)
                assert (cell != 0) == bool(expected)


def test_uniform_prior_ranks_by_versatility():
    # under a uniform item prior the posterior after one answer orders
    # the compatible items by ascending versatility
    rng = random.Random(8)
    checked = 0
    for _ in range(40):
        catalog = load_catalog(random_item_doc(rng))
        qid = rng.choice([q.id for q in catalog.questions])
        table = elicit_ups(qid, catalog)
        from convrec.catalog import versatility

        for aid in catalog.question(qid).answer_ids:
            cells = [
                (iid, table.cell(iid, qid_aid))
                for iid, qid_aid in ((it.id, aid) for it in catalog.items)
            ]
            compat = [
                (iid, cell) for iid, cell in cells if cell != 0
            ]
            for (ia, ca), (ib, cb) in zip(compat, compat[1:]):
                va, vb = versatility(catalog, ia, qid), versatility(catalog, ib, qid)
                if va < vb:
                    assert ca > cb
                elif va > vb:
                    assert ca < cb
                else:
                    assert ca == cb
                checked += 1
    assert checked > 10


def test_posterior_ratio_identity(ups_catalog):
    table = elicit_ups("event_type", ups_catalog)
    # both compatible with 'wedding': ratio of cells is inverse versatility
    assert table.cell("i1", "wedding") / table.cell("i2", "wedding") == F(2, 4)


def test_flagged_rows_for_fully_incompatible_items(toy_doc):
    from conftest import property_free

    doc = property_free(toy_doc)
    doc["items"][2]["compatible_answers"]["event_type"] = []
    catalog = load_catalog(doc)
    table = elicit_ujs("event_type", catalog)
    cond = table.conditional()
    assert ("i3",) in cond.flagged_rows
    assert cond.row("i3") == (0, 0, 0, 0)
