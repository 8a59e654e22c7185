import math

import numpy as np
import pytest

from plens.ingest import ExternalScoreTable, PairRecord, VARIANT_TAGS
from plens.scoring import (
    HIST_BINS,
    ScoreRecord,
    VariantView,
    aggregate_by_cluster,
    embedding_cosine_scorer,
    load_relative_scores,
    mock_text_bias_scorer,
    relative_scores,
    save_relative_scores,
    table_scorer,
)
from plens.textmatch import CoMatch, PairClass


def comatch(pair_id, cotr_value):
    cls = PairClass.PARROT if cotr_value > 0 else PairClass.EMB_NO_CO
    return CoMatch(id=pair_id, co_words=[], cotr=cotr_value, fuzzy_cotr=cotr_value, pair_class=cls)


def pair(pair_id, caption="a caption"):
    return PairRecord(id=pair_id, image_ref=f"{pair_id}.png", caption=caption)


# -- table scorer -----------------------------------------------------------

def test_table_scorer_lookup_and_absence():
    table = ExternalScoreTable(entries={("p1", "raw"): 0.5})
    scorer = table_scorer(table)
    assert scorer.score(VariantView("p1", "raw"), "cap") == 0.5
    assert scorer.score(VariantView("p1", "co_removed"), "cap") is None
    assert scorer.score(VariantView("p2", "raw"), "cap") is None


def test_table_scorer_rejects_raw_images():
    scorer = table_scorer(ExternalScoreTable(entries={}))
    with pytest.raises(TypeError):
        scorer.score(np.zeros((4, 4, 3), dtype=np.uint8), "cap")


# -- cosine scorer ----------------------------------------------------------

def test_cosine_scorer_matches_manual_value():
    image_vectors = {("p1", "raw"): np.array([1.0, 0.0]), ("p1", "co_removed"): np.array([0.0, 2.0])}
    text_vectors = {"p1": np.array([1.0, 1.0])}
    scorer = embedding_cosine_scorer(image_vectors, text_vectors)
    assert scorer.score(VariantView("p1", "raw"), "cap") == pytest.approx(1.0 / math.sqrt(2))
    assert scorer.score(VariantView("p1", "co_removed"), "cap") == pytest.approx(1.0 / math.sqrt(2))


def test_cosine_scorer_absent_vector_propagates():
    scorer = embedding_cosine_scorer({}, {"p1": np.array([1.0, 0.0])})
    assert scorer.score(VariantView("p1", "raw"), "cap") is None


def test_cosine_scorer_zero_norm_is_error():
    scorer = embedding_cosine_scorer(
        {("p1", "raw"): np.zeros(2)}, {"p1": np.array([1.0, 0.0])}
    )
    with pytest.raises(ValueError, match="zero-norm"):
        scorer.score(VariantView("p1", "raw"), "cap")


# -- mock scorer ------------------------------------------------------------

def test_mock_scorer_spot_values():
    scorer = mock_text_bias_scorer(base=0.2, alpha=0.5)
    cm = comatch("p1", 0.5)
    assert scorer.score(VariantView("p1", "raw", cm), "cap") == pytest.approx(0.45)
    assert scorer.score(VariantView("p1", "co_removed", cm), "cap") == pytest.approx(0.2)
    assert scorer.score(VariantView("p1", "all_removed", cm), "cap") == pytest.approx(0.2)
    assert scorer.score(VariantView("p1", "rand_all", cm), "cap") == pytest.approx(0.45)
    assert scorer.score(VariantView("p1", "rand_co", cm), "cap") == pytest.approx(0.45)


def test_mock_scorer_clamps_with_warning(caplog):
    scorer = mock_text_bias_scorer(base=0.9, alpha=0.5)
    cm = comatch("p1", 1.0)
    with caplog.at_level("WARNING"):
        value = scorer.score(VariantView("p1", "raw", cm), "cap")
    assert value == 1.0
    assert any("clamped" in message for message in caplog.messages)


def test_mock_scorer_requires_comatch_for_visible_variants():
    scorer = mock_text_bias_scorer()
    with pytest.raises(ValueError, match="comatch"):
        scorer.score(VariantView("p1", "raw", None), "cap")


# -- relative scores --------------------------------------------------------

def test_relative_scores_rsa_rsc_from_mock():
    pairs = [pair("p1")]
    comatches = {"p1": comatch("p1", 0.5)}
    records = relative_scores(pairs, comatches, mock_text_bias_scorer(0.2, 0.5))
    (rec,) = records
    assert rec.s_raw == pytest.approx(0.45)
    assert rec.rsc == pytest.approx(0.25)
    assert rec.rsa == pytest.approx(0.25)
    assert rec.error is None


def test_relative_scores_absence_leaves_relatives_unset():
    table = ExternalScoreTable(entries={("p1", "raw"): 0.4})
    records = relative_scores([pair("p1")], None, table_scorer(table))
    (rec,) = records
    assert rec.s_raw == 0.4
    assert rec.s_all_removed is None
    assert rec.rsa is None
    assert rec.rsc is None


def test_relative_scores_failure_flags_pair_and_continues():
    class Boom:
        name = "boom"

        def score(self, image, caption):
            if image.id == "p2":
                raise RuntimeError("model crashed")
            return 0.3

    records = relative_scores([pair("p1"), pair("p2"), pair("p3")], None, Boom())
    assert [r.error is None for r in records] == [True, False, True]
    assert "model crashed" in records[1].error
    assert records[0].rsa == pytest.approx(0.0)


def test_relative_scores_subset_of_variants():
    table = ExternalScoreTable(
        entries={("p1", "raw"): 0.4, ("p1", "co_removed"): 0.1, ("p1", "all_removed"): 0.9}
    )
    records = relative_scores([pair("p1")], None, table_scorer(table), variants=("raw", "co_removed"))
    (rec,) = records
    assert rec.rsc == pytest.approx(0.3)
    assert rec.s_all_removed is None  # not requested
    assert rec.rsa is None


def test_relative_scores_unknown_variant_rejected():
    with pytest.raises(ValueError, match="variant"):
        relative_scores([pair("p1")], None, mock_text_bias_scorer(), variants=("raw", "shiny"))


def test_relative_scores_group_means_match_hand_numbers():
    # eight pairs whose raw scores average 0.3358 and whose all-text-removed
    # scores average 0.2974; the mean relative score must land on 0.0384
    raw = [0.3358 + d for d in (0.01, -0.01, 0.02, -0.02, 0.03, -0.03, 0.04, -0.04)]
    removed = [0.2974 + d for d in (0.005, -0.005, 0.015, -0.015, 0.025, -0.025, 0.035, -0.035)]
    entries = {}
    for i, (r, a) in enumerate(zip(raw, removed)):
        entries[(f"p{i}", "raw")] = r
        entries[(f"p{i}", "all_removed")] = a
    pairs = [pair(f"p{i}") for i in range(8)]
    records = relative_scores(pairs, None, table_scorer(ExternalScoreTable(entries=entries)))
    mean_rsa = sum(r.rsa for r in records) / len(records)
    assert mean_rsa == pytest.approx(0.0384, abs=1e-6)


# -- aggregation ------------------------------------------------------------

def test_aggregate_population_std_fixture():
    # rsa values {0.1, 0.3}: population mean 0.2, population std 0.1
    table = ExternalScoreTable(
        entries={
            ("p1", "raw"): 0.5, ("p1", "all_removed"): 0.4,
            ("p2", "raw"): 0.5, ("p2", "all_removed"): 0.2,
        }
    )
    records = relative_scores([pair("p1"), pair("p2")], None, table_scorer(table))
    agg = aggregate_by_cluster(records, {"p1": 0, "p2": 0})
    stat = agg.clusters[0].metrics["rsa"]
    assert stat.count == 2
    assert stat.mean == pytest.approx(0.2)
    assert stat.std == pytest.approx(0.1)


def test_aggregate_std_stable_under_large_offset():
    # naive E[x^2] - E[x]^2 loses ~12 digits here; two-pass must not
    base = 1.0e6
    entries = {}
    for i, v in enumerate((0.0, 1.0, 2.0)):
        entries[(f"p{i}", "raw")] = base + v
    records = relative_scores(
        [pair(f"p{i}") for i in range(3)], None,
        table_scorer(ExternalScoreTable(entries=entries)), variants=("raw",),
    )
    agg = aggregate_by_cluster(records, {f"p{i}": 0 for i in range(3)})
    stat = agg.clusters[0].metrics["s_raw"]
    expected = math.sqrt(2.0 / 3.0)
    assert abs(stat.std - expected) / expected <= 1e-9


def test_aggregate_unlabeled_ids_error_lists_them():
    records = relative_scores([pair("pz"), pair("pa")], None, table_scorer(ExternalScoreTable(entries={})))
    with pytest.raises(ValueError) as err:
        aggregate_by_cluster(records, {})
    assert "pa" in str(err.value) and "pz" in str(err.value)


def test_aggregate_splits_by_cluster_and_counts_coverage():
    table = ExternalScoreTable(
        entries={("p1", "raw"): 0.4, ("p2", "raw"): 0.6, ("p3", "raw"): 0.8}
    )
    records = relative_scores(
        [pair("p1"), pair("p2"), pair("p3")], None, table_scorer(table), variants=("raw",)
    )
    agg = aggregate_by_cluster(records, {"p1": 0, "p2": 0, "p3": 5})
    assert [c.cluster for c in agg.clusters] == [0, 5]
    assert [c.size for c in agg.clusters] == [2, 1]
    assert agg.clusters[0].metrics["s_raw"].count == 2
    assert agg.clusters[0].metrics["rsc"].count == 0
    assert math.isnan(agg.clusters[0].metrics["rsc"].mean)


def test_aggregate_merged_mapping_relabels():
    table = ExternalScoreTable(entries={("p1", "raw"): 0.4, ("p2", "raw"): 0.6})
    records = relative_scores([pair("p1"), pair("p2")], None, table_scorer(table), variants=("raw",))
    agg = aggregate_by_cluster(records, {"p1": 3, "p2": 7}, merged={3: 0, 7: 0})
    assert len(agg.clusters) == 1
    assert agg.clusters[0].size == 2


def test_aggregate_histograms_fixed_grid():
    table = ExternalScoreTable(
        entries={
            ("p1", "raw"): 0.5, ("p1", "all_removed"): 0.5, ("p1", "co_removed"): 0.5,
            ("p2", "raw"): 0.9, ("p2", "all_removed"): 0.1, ("p2", "co_removed"): 0.2,
        }
    )
    records = relative_scores([pair("p1"), pair("p2")], None, table_scorer(table))
    agg = aggregate_by_cluster(records, {"p1": 0, "p2": 0})
    assert len(agg.rsa_hist) == HIST_BINS
    assert len(agg.hist_edges) == HIST_BINS + 1
    assert agg.hist_edges[0] == -1.0 and agg.hist_edges[-1] == 1.0
    assert sum(agg.rsa_hist) == 2
    assert sum(agg.rsc_hist) == 2
    # rsa 0.0 falls in the bin starting at 0.0; rsa 0.8 in the bin starting at 0.8
    assert agg.rsa_hist[20] == 1
    assert agg.rsa_hist[36] == 1


# -- relative csv round trip --------------------------------------------------

def test_relative_csv_roundtrip_exact(tmp_path):
    records = [
        ScoreRecord(id="p1", s_raw=0.30000000000000004, s_co_removed=0.2,
                    rsc=0.10000000000000003),
        ScoreRecord(id="p2"),
        ScoreRecord(id="p3", error="RuntimeError: model crashed, retry later"),
    ]
    path = tmp_path / "relative.csv"
    save_relative_scores(records, path)
    loaded = load_relative_scores(path)
    assert loaded == records  # repr round-trip keeps floats bit-exact


def test_relative_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,score\np1,0.5\n")
    with pytest.raises(Exception, match="header"):
        load_relative_scores(path)


def test_relative_csv_write_is_deterministic(tmp_path):
    records = [ScoreRecord(id="p1", s_raw=1 / 3, rsa=2 / 7)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_relative_scores(records, a)
    save_relative_scores(records, b)
    assert a.read_bytes() == b.read_bytes()


def test_all_variant_tags_have_score_fields():
    table = ExternalScoreTable(entries={("p1", tag): 0.1 for tag in VARIANT_TAGS})
    records = relative_scores([pair("p1")], None, table_scorer(table))
    (rec,) = records
    for tag, field_name in zip(
        VARIANT_TAGS, ("s_raw", "s_all_removed", "s_co_removed", "s_rand_all", "s_rand_co")
    ):
        assert getattr(rec, field_name) == pytest.approx(0.1), tag
