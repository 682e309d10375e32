import copy
import random
from fractions import Fraction

import pytest

from convrec import compile_model, load_catalog
from convrec.errors import ObservationError
from convrec.learning import (
    LogRow,
    Observation,
    OBSERVATION_LOG_COLUMNS,
    learn_tables,
    learned_tables_document,
    observations_from_log,
    posterior_mean_cpt,
    prior_to_pseudocounts,
    read_observation_log,
    update_from_log,
)
from convrec.property_net import PropertyFactor, build_property_model

F = Fraction


def _volume_model():
    doc = {
        "items": [
            {"id": "a", "compatible_values": {"mood": ["calm"]}},
            {"id": "b", "compatible_values": {"mood": ["wild"]}},
        ],
        "questions": [
            {"id": "volume", "prompt": "How loud?", "properties": ["mood"],
             "answers": [{"id": "quiet"}, {"id": "loud"}]},
        ],
        "properties": [{"id": "mood", "values": ["calm", "wild"]}],
        "expert_tables": {
            "mood": {"probs": {"calm": "1/2", "wild": "1/2"}},
            "volume": {"given": ["mood"], "rows": [
                {"when": {"mood": "calm"}, "probs": {"quiet": "1/2", "loud": "1/2"}},
                {"when": {"mood": "wild"}, "probs": {"quiet": "1/10", "loud": "9/10"}},
            ]},
        },
    }
    catalog = load_catalog(doc)
    return catalog, build_property_model(catalog)


# -- pseudocounts ----------------------------------------------------------------


def test_pseudocounts_scale_prior_rows():
    factor = PropertyFactor("p", (), ((),), ("x", "y"), ((F(1, 2), F(1, 2)),))
    params = prior_to_pseudocounts(factor, 4)
    assert params.alpha == ((F(2), F(2)),)
    assert params.support == ((True, True),)


def test_pseudocounts_freeze_elicited_zeros(expert_model):
    pm = expert_model.exact
    factor = pm.joint_prior.factors["performer"]
    params = prior_to_pseudocounts(factor, 3)
    wedding = params.row_index(("wedding",))
    assert params.alpha[wedding] == (F(2), F(1), 0, 0)
    assert params.support[wedding] == (True, True, False, False)


def test_pseudocounts_require_positive_ess(expert_model):
    factor = expert_model.exact.joint_prior.factors["event"]
    with pytest.raises(ValueError, match="positive"):
        prior_to_pseudocounts(factor, 0)


# -- conjugate updates -------------------------------------------------------------


def test_counts_add_and_mean_follows():
    factor = PropertyFactor("p", (), ((),), ("x", "y"), ((F(1, 2), F(1, 2)),))
    params = prior_to_pseudocounts(factor, 4)  # alpha (2, 2)
    obs = [Observation("p", (), "x")] * 3 + [Observation("p", (), "y")]
    params, report = update_from_log(params, obs)
    assert report == []
    assert params.alpha == ((F(5), F(3)),)
    mean = posterior_mean_cpt(params)
    assert mean.rows == ((F(5, 8), F(3, 8)),)


def test_update_is_commutative_across_batches():
    factor = PropertyFactor("p", (), ((),), ("x", "y", "z"),
                            ((F(1, 3), F(1, 3), F(1, 3)),))
    base = prior_to_pseudocounts(factor, 3)
    rng = random.Random(5)
    obs = [Observation("p", (), rng.choice("xyz")) for _ in range(60)]
    first, _ = update_from_log(base, obs[:30])
    first, _ = update_from_log(first, obs[30:])
    second, _ = update_from_log(base, obs[30:])
    second, _ = update_from_log(second, obs[:30])
    assert first.alpha == second.alpha


def test_forbidden_cell_raises_or_skips():
    factor = PropertyFactor("p", (), ((),), ("x", "y"), ((F(1), F(0)),))
    params = prior_to_pseudocounts(factor, 2)
    bad = [Observation("p", (), "y")]
    with pytest.raises(ObservationError, match="structural zero"):
        update_from_log(params, bad)
    relaxed, report = update_from_log(params, bad, lenient=True)
    assert relaxed.alpha == params.alpha
    assert len(report) == 1


def test_zero_observations_reproduce_prior_exactly(expert_model):
    pm = expert_model.exact
    for table in (*pm.cpts.values(), *pm.joint_prior.factors.values()):
        params = prior_to_pseudocounts(table, F(7, 2))
        mean = posterior_mean_cpt(params)
        assert mean.rows == table.rows


def test_posterior_mean_rejects_all_zero_row():
    factor = PropertyFactor("p", (), ((),), ("x", "y"), ((F(0), F(0)),))
    params = prior_to_pseudocounts(factor, 1)
    with pytest.raises(ObservationError, match="all-zero pseudo-counts"):
        posterior_mean_cpt(params)


def test_mean_converges_to_sampling_distribution():
    truth = [F(2, 3), F(1, 9), F(1, 9), F(1, 9)]
    values = ("a", "b", "c", "d")
    factor = PropertyFactor("p", (), ((),), values, (tuple(truth),))
    params = prior_to_pseudocounts(factor, 1)
    rng = random.Random(97)
    obs = [
        Observation("p", (), rng.choices(values, weights=[float(t) for t in truth])[0])
        for _ in range(4000)
    ]
    params, _ = update_from_log(params, obs)
    mean = posterior_mean_cpt(params).rows[0]
    for got, want in zip(mean, truth):
        assert abs(got - want) < F(5, 100)


# -- identity CPTs stay pinned -----------------------------------------------------


def test_identity_cpt_unmoved_by_observations(expert_model):
    pm = expert_model.exact
    cpt = pm.cpts["event_type"]
    params = prior_to_pseudocounts(cpt, 1)
    obs = [Observation("event_type", ("wedding",), "wedding")] * 50
    params, _ = update_from_log(params, obs)
    mean = posterior_mean_cpt(params)
    assert mean.rows == cpt.rows  # a one-hot row cannot move


# -- log ingestion ------------------------------------------------------------------


def _rows(*triples):
    out = []
    for sid, item, qa in triples:
        for qid, aid in qa:
            out.append(LogRow(sid, item, qid, aid))
    return out


def test_observations_from_log_partitions_by_table(expert_model):
    catalog = expert_model.exact.catalog
    rows = _rows(
        ("s1", "i2", [("event_type", "wedding"), ("entertainment_type", "band")]),
    )
    obs, report = observations_from_log(catalog, expert_model.exact, rows)
    assert report == []
    # the factor for 'performer' learns (wedding -> band)
    assert obs["performer"] == [Observation("performer", ("wedding",), "band")]
    # the root factor learns the event
    assert obs["event"] == [Observation("event", (), "wedding")]


def test_ambiguous_property_value_skips_with_report(expert_model):
    catalog = expert_model.exact.catalog
    # i1 serves all four events and the session never named one, so the
    # event behind the choice is unknowable
    rows = _rows(("s1", "i1", [("entertainment_type", "dj")]))
    obs, report = observations_from_log(catalog, expert_model.exact, rows)
    assert obs.get("event", []) == []
    assert any("s1" in line for line in report)


def test_conflicting_chosen_items_rejected(expert_model):
    catalog = expert_model.exact.catalog
    rows = [
        LogRow("s1", "i1", "event_type", "wedding"),
        LogRow("s1", "i2", "entertainment_type", "band"),
    ]
    with pytest.raises(ObservationError, match="two chosen items"):
        observations_from_log(catalog, expert_model.exact, rows)


def test_learn_tables_blends_revised_rows(expert_model):
    catalog = expert_model.exact.catalog
    rows = _rows(
        ("s1", "i2", [("event_type", "wedding"), ("entertainment_type", "band")]),
        ("s2", "i1", [("event_type", "birthday"), ("entertainment_type", "dj")]),
    )
    learned, report = learn_tables(catalog, expert_model.exact, rows, ess=3)
    performer = learned["performer"]
    wedding = performer.row_index(("wedding",))
    # revised row (2/3, 1/3, 0, 0) at ess 3 plus one band observation
    assert performer.alpha[wedding] == (F(2), F(2), 0, 0)
    mean = posterior_mean_cpt(performer)
    assert mean.rows[wedding] == (F(1, 2), F(1, 2), 0, 0)
    event = learned["event"]
    assert event.alpha[0] == (F(2) + 1, F(1, 3), F(1, 3) + 1, F(1, 3))


def test_learned_soft_cpt_mean():
    catalog, pm = _volume_model()
    rows = _rows(
        ("s1", "a", [("volume", "quiet")]),
        ("s2", "a", [("volume", "quiet")]),
        ("s3", "a", [("volume", "quiet")]),
        ("s4", "a", [("volume", "loud")]),
    )
    learned, report = learn_tables(catalog, pm, rows, ess=4)
    assert report == []
    volume = learned["volume"]
    calm = volume.row_index(("calm",))
    assert volume.alpha[calm] == (F(5), F(3))
    assert posterior_mean_cpt(volume).rows[calm] == (F(5, 8), F(3, 8))


def test_forbidden_answer_reported_in_lenient_mode(expert_model):
    catalog = expert_model.exact.catalog
    rows = _rows(
        ("s1", "i1", [("event_type", "wedding"),
                      ("entertainment_type", "musician")]),
    )
    learned, report = learn_tables(catalog, expert_model.exact, rows, ess=1)
    assert any("structural zero" in line for line in report)
    wedding = learned["performer"].row_index(("wedding",))
    assert learned["performer"].alpha[wedding][2] == 0  # musician still frozen
    with pytest.raises(ObservationError):
        learn_tables(catalog, expert_model.exact, rows, ess=1, lenient=False)


# -- CSV log round trip ---------------------------------------------------------------


def test_read_observation_log(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(
        "session_id,chosen_item,question_id,answer_id\n"
        "s1,i2,event_type,wedding\n"
        "s1,i2,entertainment_type,band\n",
        encoding="utf-8",
    )
    rows = read_observation_log(path)
    assert rows == [
        LogRow("s1", "i2", "event_type", "wedding"),
        LogRow("s1", "i2", "entertainment_type", "band"),
    ]


def test_read_observation_log_checks_columns(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("session_id,item,question_id,answer_id\ns1,i2,q,a\n")
    with pytest.raises(ObservationError, match="column"):
        read_observation_log(path)


def test_read_observation_log_flags_incomplete_records(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(
        ",".join(OBSERVATION_LOG_COLUMNS) + "\n"
        "s1,i2,event_type,wedding\n"
        "s2,i1,entertainment_type,\n"
    )
    with pytest.raises(ObservationError, match=":3: incomplete record"):
        read_observation_log(path)


# -- publishing learned tables ---------------------------------------------------------


def test_learned_document_recompiles(expert_model, toy_doc):
    catalog = expert_model.exact.catalog
    rows = _rows(
        ("s1", "i2", [("event_type", "wedding"), ("entertainment_type", "band")]),
        ("s2", "i3", [("event_type", "kids_party"),
                      ("entertainment_type", "entertainer")]),
    )
    learned, _ = learn_tables(catalog, expert_model.exact, rows, ess=2)
    published = learned_tables_document(expert_model.exact, learned)
    # identity CPTs stay implicit in the document
    assert set(published) == {"event", "performer"}

    doc = copy.deepcopy(toy_doc)
    doc["expert_tables"] = {**doc["expert_tables"], **published}
    model = compile_model(load_catalog(doc))
    blended = model.exact.joint_prior.factors["event"].row(())
    expected = posterior_mean_cpt(learned["event"]).rows[0]
    assert blended == expected
