"""Metric definitions, split protocol, and TOPSIS ranking."""

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
import pytest

from garmentcast.evaluation import (
    CriteriaMatrix,
    MetricError,
    MetricReport,
    SplitError,
    accuracy,
    auc,
    binary_accuracy,
    chronological_split,
    classification_metrics,
    mae,
    pcc,
    regression_metrics,
    topsis_rank,
    wape,
)


@dataclass
class Rec:
    item_id: str
    timestamp: date


class TestRegressionMetrics:
    def test_perfect_prediction(self):
        truth = np.array([0.1, 0.5, 0.9])
        m = regression_metrics(truth, truth)
        assert m.mae == 0.0 and m.wape == 0.0
        assert m.pcc == pytest.approx(1.0)
        assert m.binary_accuracy == 1.0

    def test_hand_example(self):
        m = regression_metrics([0.2, 0.8], [0.4, 0.6])
        assert m.mae == pytest.approx(0.2)
        assert m.wape == pytest.approx(0.4)
        assert m.binary_accuracy == 1.0

    def test_perfect_anticorrelation(self):
        truth = np.array([0.0, 0.5, 1.0])
        assert pcc(1.0 - truth, truth) == pytest.approx(-1.0)

    def test_wape_scale_invariant_mae_scales(self):
        rng = np.random.default_rng(0)
        p, t = rng.random(50), rng.random(50) + 0.1
        for c in (0.5, 3.0, 17.0):
            assert wape(c * p, c * t) == pytest.approx(wape(p, t))
            assert mae(c * p, c * t) == pytest.approx(c * mae(p, t))

    def test_pcc_affine_invariant(self):
        rng = np.random.default_rng(1)
        p, t = rng.random(40), rng.random(40)
        assert pcc(2.5 * p + 0.3, t) == pytest.approx(pcc(p, t))

    def test_zero_truth_sum_wape_error(self):
        with pytest.raises(MetricError, match="wape"):
            wape([0.1, 0.2], [0.0, 0.0])

    def test_zero_variance_truth_pcc_error(self):
        with pytest.raises(MetricError, match="variance"):
            pcc([0.1, 0.2], [0.5, 0.5])

    def test_pcc_needs_two_samples(self):
        with pytest.raises(MetricError, match="2 samples"):
            pcc([0.1], [0.2])

    def test_length_mismatch(self):
        with pytest.raises(MetricError):
            mae([0.1, 0.2], [0.1])


class TestClassificationMetrics:
    def test_perfect_separation(self):
        m = classification_metrics([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
        assert m.auc == 1.0 and m.accuracy == 1.0

    def test_all_ties_auc_half(self):
        assert auc([0.4, 0.4, 0.4, 0.4], [0, 1, 0, 1]) == 0.5

    def test_enumerated_pairs(self):
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_single_class_error(self):
        with pytest.raises(MetricError, match="single class"):
            auc([0.1, 0.9], [1, 1])

    def test_accuracy_threshold(self):
        assert accuracy([0.49, 0.51], [0, 1]) == 1.0
        assert accuracy([0.51, 0.49], [0, 1]) == 0.0

    def test_auc_matches_pairwise_oracle(self):
        # rank statistic == fraction of correctly ordered (pos, neg) pairs
        rng = np.random.default_rng(2)
        for trial in range(30):
            m = int(rng.integers(5, 200))
            scores = np.round(rng.random(m), 2)  # coarse grid forces ties
            labels = rng.integers(0, 2, size=m)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            pos = scores[labels == 1]
            neg = scores[labels == 0]
            wins = (pos[:, None] > neg[None, :]).sum()
            ties = (pos[:, None] == neg[None, :]).sum()
            expected = (wins + 0.5 * ties) / (len(pos) * len(neg))
            assert auc(scores, labels) == pytest.approx(expected, abs=1e-12)

    def test_report_export_skips_missing(self):
        report = MetricReport(sample_count=5, dataset_id="d", mae=0.1)
        payload = report.to_dict()
        assert payload["mae"] == 0.1 and "auc" not in payload
        assert "0.5" in payload["notes"]


class TestChronologicalSplit:
    def test_protocol_example(self):
        records = []
        for i in range(10):
            for j in range(5):
                records.append(Rec(f"multi{i}", date(2024, 1, 1) + timedelta(days=j)))
        for i in range(4):
            records.append(Rec(f"single{i}", date(2024, 2, 1) + timedelta(days=i)))
        split = chronological_split(records)
        assert len(split.item_ids("train")) == 10
        assert len(split.item_ids("validation")) == 2
        assert len(split.item_ids("test")) == 2

    def test_validation_precedes_test_in_time(self):
        records = [Rec("m", date(2024, 1, 1)), Rec("m", date(2024, 1, 2))]
        days = [3, 9, 1, 7, 5]
        records += [Rec(f"s{i}", date(2024, 1, d)) for i, d in enumerate(days)]
        split = chronological_split(records)
        latest_val = max(r.timestamp for r in split.validation)
        earliest_test = min(r.timestamp for r in split.test)
        assert latest_val <= earliest_test
        assert len(split.validation) == 2 and len(split.test) == 3

    def test_all_singletons_error(self):
        with pytest.raises(SplitError, match="train is empty"):
            chronological_split([Rec("a", date(2024, 1, 1)), Rec("b", date(2024, 1, 2))])

    def test_no_singletons_error(self):
        records = [Rec("a", date(2024, 1, 1)), Rec("a", date(2024, 1, 2))]
        with pytest.raises(SplitError, match="single-record"):
            chronological_split(records)

    def test_partitions_disjoint_and_cover(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            records = []
            for i in range(int(rng.integers(3, 30))):
                reps = int(rng.integers(1, 5))
                for j in range(reps):
                    records.append(Rec(f"i{i}", date(2024, 1, 1)
                                       + timedelta(days=int(rng.integers(0, 60)))))
            ids = {r.item_id for r in records}
            singles = {r.item_id for r in records
                       if sum(x.item_id == r.item_id for x in records) == 1}
            if not singles or singles == ids:
                continue
            split = chronological_split(records)
            tr, va, te = (split.item_ids(p) for p in ("train", "validation", "test"))
            assert tr.isdisjoint(va) and tr.isdisjoint(te) and va.isdisjoint(te)
            assert tr | va | te == ids
            assert len(split.train) + len(split.validation) + len(split.test) \
                == len(records)


def matrix(models, criteria, values, weights=None):
    return CriteriaMatrix(models=models, criteria=criteria,
                          values=np.array(values, dtype=float), weights=weights)


class TestTopsis:
    def test_dominating_model_closeness_one(self):
        m = matrix(["best", "mid", "worst"],
                   [("err", "cost"), ("corr", "benefit")],
                   [[0.1, 0.9], [0.2, 0.5], [0.3, 0.1]])
        result = topsis_rank(m)
        assert result.ranking[0] == "best"
        assert result.closeness[result.models.index("best")] == pytest.approx(1.0)
        assert result.rank_of("worst") == 3

    def test_identical_rows_tie_alphabetical(self):
        m = matrix(["zed", "alpha", "other"],
                   [("a", "benefit")],
                   [[0.5], [0.5], [0.9]])
        result = topsis_rank(m)
        assert result.ranking == ["other", "alpha", "zed"]
        i, j = result.models.index("zed"), result.models.index("alpha")
        assert result.closeness[i] == result.closeness[j]

    def test_zero_norm_column_error_names_metric(self):
        m = matrix(["a", "b"], [("dead", "benefit"), ("live", "benefit")],
                   [[0.0, 0.1], [0.0, 0.2]])
        with pytest.raises(MetricError, match="dead"):
            topsis_rank(m)

    def test_top_choice_invariant_to_column_scaling(self):
        rng = np.random.default_rng(4)
        models = [f"m{i}" for i in range(5)]
        criteria = [("a", "benefit"), ("b", "cost"), ("c", "benefit")]
        values = rng.random((5, 3)) + 0.05
        base = topsis_rank(matrix(models, criteria, values))
        for j, c in [(0, 7.0), (1, 0.01), (2, 400.0)]:
            scaled = values.copy()
            scaled[:, j] *= c
            again = topsis_rank(matrix(models, criteria, scaled))
            assert again.ranking[0] == base.ranking[0]
            np.testing.assert_allclose(again.closeness, base.closeness, atol=1e-12)

    def test_weights_validated(self):
        with pytest.raises(MetricError, match="sum to 1"):
            matrix(["a", "b"], [("x", "benefit")], [[1.0], [2.0]],
                   weights=np.array([0.7]))

    def test_export_shape(self):
        m = matrix(["b", "a"], [("x", "benefit"), ("y", "cost")],
                   [[0.9, 0.1], [0.5, 0.5]])
        payload = topsis_rank(m).to_dict()
        assert payload["criteria"] == ["x", "y"]
        assert payload["directions"] == ["benefit", "cost"]
        assert payload["ranking"][0] == payload["closeness"][0][0] == "b"
        assert sum(payload["weights"]) == pytest.approx(1.0)

    def test_direction_flip_changes_winner(self):
        models = ["low", "high"]
        values = [[0.1], [0.9]]
        as_cost = topsis_rank(matrix(models, [("x", "cost")], values))
        as_benefit = topsis_rank(matrix(models, [("x", "benefit")], values))
        assert as_cost.ranking[0] == "low"
        assert as_benefit.ranking[0] == "high"
