import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from vngender import data_io, evaluation as ev, names_core as nc
from vngender.data_io import Dataset, DatasetRecord
from vngender.errors import EvaluationError
from vngender.evaluation import ModelSpec, SplitSpec
from vngender.featurize import VectorizerConfig


def tiny_dataset(n_male, n_female):
    records = [DatasetRecord(f"Lê Văn M{i}", 1) for i in range(n_male)]
    records += [DatasetRecord(f"Lê Thị F{i}", 0) for i in range(n_female)]
    return Dataset(records)


class TestSplitSpec:
    def test_fractions_must_sum_to_one(self):
        with pytest.raises(EvaluationError):
            SplitSpec(0.7, 0.1, 0.1)

    def test_fractions_must_be_positive(self):
        with pytest.raises(EvaluationError):
            SplitSpec(0.8, 0.2, 0.0)


class TestStratifiedSplit:
    def test_hundred_per_label_gives_exact_sizes(self):
        train, dev, test = ev.stratified_split(tiny_dataset(100, 100), SplitSpec(seed=5))
        assert (len(train), len(dev), len(test)) == (140, 20, 40)
        assert train.label_counts() == {0: 70, 1: 70}
        assert dev.label_counts() == {0: 10, 1: 10}
        assert test.label_counts() == {0: 20, 1: 20}

    @settings(max_examples=60, deadline=None)
    @given(
        n_male=st.integers(3, 60),
        n_female=st.integers(3, 60),
        seed=st.integers(0, 1000),
    )
    def test_partition_and_floor_arithmetic(self, n_male, n_female, seed):
        ds = tiny_dataset(n_male, n_female)
        spec = SplitSpec(seed=seed)
        train, dev, test = ev.stratified_split(ds, spec)
        # exact floor arithmetic, per label
        for label, n in ((1, n_male), (0, n_female)):
            c1 = math.floor(Fraction(7, 10) * n)
            c2 = math.floor(Fraction(8, 10) * n)
            assert train.label_counts()[label] == c1
            assert dev.label_counts()[label] == c2 - c1
            assert test.label_counts()[label] == n - c2
        # partition: every record exactly once
        names = sorted(r.full_name for r in ds.records)
        out = sorted(
            r.full_name for part in (train, dev, test) for r in part.records
        )
        assert names == out

    def test_same_seed_identical_output(self):
        ds = tiny_dataset(37, 23)
        a = ev.stratified_split(ds, SplitSpec(seed=9))
        b = ev.stratified_split(ds, SplitSpec(seed=9))
        for part_a, part_b in zip(a, b):
            assert part_a.records == part_b.records

    def test_different_seed_different_order(self):
        ds = tiny_dataset(37, 23)
        a = ev.stratified_split(ds, SplitSpec(seed=9))
        b = ev.stratified_split(ds, SplitSpec(seed=10))
        assert any(x.records != y.records for x, y in zip(a, b))

    def test_small_label_rejected(self):
        with pytest.raises(EvaluationError, match="label 0"):
            ev.stratified_split(tiny_dataset(5, 2), SplitSpec())


class TestConfusion:
    def test_mixed_counts(self):
        cm = ev.confusion([1, 1, 0, 0], [1, 0, 0, 1])
        assert (cm.tp, cm.fn, cm.tn, cm.fp) == (1, 1, 1, 1)

    def test_perfect_predictions(self):
        cm = ev.confusion([1, 0, 1], [1, 0, 1])
        assert cm.fp == 0 and cm.fn == 0

    def test_constant_one_on_all_zero_truth(self):
        cm = ev.confusion([0, 0, 0], [1, 1, 1])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (0, 0, 3, 0)

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            ev.confusion([1, 0], [1])

    def test_empty_rejected(self):
        with pytest.raises(EvaluationError):
            ev.confusion([], [])


class TestMacroMetrics:
    def test_hand_computed_example(self):
        m = ev.macro_metrics(ev.ConfusionMatrix(tp=50, fp=10, tn=30, fn=10))
        assert m.per_class[1].precision == pytest.approx(50 / 60)
        assert m.per_class[1].recall == pytest.approx(50 / 60)
        assert m.per_class[1].f1 == pytest.approx(5 / 6, abs=1e-12)

    def test_perfect_predictions_are_all_ones(self):
        m = ev.macro_metrics(ev.ConfusionMatrix(tp=5, fp=0, tn=7, fn=0))
        assert m.macro_precision == m.macro_recall == m.macro_f1 == 1.0

    def test_zero_over_zero_is_zero(self):
        m = ev.macro_metrics(ev.ConfusionMatrix(tp=0, fp=0, tn=3, fn=2))
        assert m.per_class[1].precision == 0.0
        assert m.per_class[1].recall == 0.0
        assert m.per_class[1].f1 == 0.0

    @given(
        tp=st.integers(0, 200), fp=st.integers(0, 200),
        tn=st.integers(0, 200), fn=st.integers(0, 200),
    )
    def test_macro_is_mean_of_per_class(self, tp, fp, tn, fn):
        if tp + fp + tn + fn == 0:
            return
        m = ev.macro_metrics(ev.ConfusionMatrix(tp, fp, tn, fn))
        assert abs(m.macro_f1 - (m.per_class[1].f1 + m.per_class[0].f1) / 2) <= 1e-12
        assert abs(
            m.macro_precision
            - (m.per_class[1].precision + m.per_class[0].precision) / 2
        ) <= 1e-12

    @given(
        y_true=st.lists(st.integers(0, 1), min_size=2, max_size=40).filter(
            lambda ys: 0 < sum(ys) < len(ys)
        ),
        constant=st.integers(0, 1),
    )
    def test_constant_predictor_macro_is_half_of_class_f1(self, y_true, constant):
        cm = ev.confusion(y_true, [constant] * len(y_true))
        m = ev.macro_metrics(cm)
        assert m.macro_f1 == pytest.approx(m.per_class[constant].f1 / 2, abs=1e-12)
        assert m.per_class[1 - constant].f1 == 0.0

    @given(
        pairs=st.lists(
            st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=30
        ),
        seed=st.integers(0, 100),
    )
    def test_joint_reordering_leaves_metrics_unchanged(self, pairs, seed):
        import random

        y_true = [t for t, _ in pairs]
        y_pred = [p for _, p in pairs]
        shuffled = pairs[:]
        random.Random(seed).shuffle(shuffled)
        a = ev.macro_metrics(ev.confusion(y_true, y_pred))
        b = ev.macro_metrics(
            ev.confusion([t for t, _ in shuffled], [p for _, p in shuffled])
        )
        assert a == b


class TestRunExperiment:
    def test_planted_rule_multinomial_reaches_perfect_macro_f1(self):
        ds = data_io.generate_synthetic(2000, 1.0, 17)
        result = ev.run_experiment(
            ds, nc.parse_mask("mn+fin"), ModelSpec("multinomial_nb"),
            VectorizerConfig("count"), SplitSpec(seed=2),
        )
        assert result.metrics.macro_f1 == 1.0
        assert result.misclassified == []

    def test_family_only_stays_near_majority_baseline(self):
        ds = data_io.generate_synthetic(2000, 1.0, 17)
        result = ev.run_experiment(
            ds, nc.parse_mask("fan"), ModelSpec("multinomial_nb"),
            VectorizerConfig("count"), SplitSpec(seed=2),
        )
        train, _, test = ev.stratified_split(ds, SplitSpec(seed=2))
        majority = 1 if train.label_counts()[1] >= train.label_counts()[0] else 0
        baseline = ev.macro_metrics(
            ev.confusion(test.labels(), [majority] * len(test))
        )
        assert abs(result.metrics.macro_f1 - baseline.macro_f1) <= 0.02

    def test_skipped_records_are_counted(self):
        records = [DatasetRecord(f"Lê Văn M{i}", 1) for i in range(15)]
        records += [DatasetRecord(f"Lê Thị F{i}", 0) for i in range(15)]
        # two-token names have no middle component
        records += [DatasetRecord(f"Trần N{i}", 1) for i in range(6)]
        ds = Dataset(records)
        result = ev.run_experiment(
            ds, nc.parse_mask("mn"), ModelSpec("multinomial_nb"),
            VectorizerConfig("count"), SplitSpec(seed=0),
        )
        assert sum(result.skipped.values()) == 6

    def test_misclassified_carries_component_text(self):
        ds = data_io.generate_synthetic(400, 0.7, 3)
        result = ev.run_experiment(
            ds, nc.parse_mask("mn+fin"), ModelSpec("multinomial_nb"),
            VectorizerConfig("count"), SplitSpec(seed=1),
        )
        assert result.misclassified
        text, truth, pred = result.misclassified[0]
        assert isinstance(text, str) and len(text.split()) == 2
        assert truth != pred

    def test_lstm_pipeline_runs(self):
        ds = data_io.generate_synthetic(300, 1.0, 4)
        spec = ModelSpec(
            "lstm", seed=3,
            options={"hidden": 8, "epochs": 1, "embedding_dim": 16,
                     "learning_rate": 0.5},
        )
        result = ev.run_experiment(ds, nc.parse_mask("mn+fin"), spec, None, SplitSpec(seed=1))
        assert 0.0 <= result.metrics.macro_f1 <= 1.0
        assert result.lstm_artifacts is not None
        assert len(result.lstm_artifacts.epoch_losses) == 1

    def test_classical_requires_vectorizer(self):
        ds = data_io.generate_synthetic(300, 1.0, 4)
        with pytest.raises(EvaluationError):
            ev.run_experiment(
                ds, nc.parse_mask("full"), ModelSpec("multinomial_nb"), None, SplitSpec()
            )


@pytest.fixture(scope="module")
def report_and_dataset():
    ds = data_io.generate_synthetic(1600, 0.9, 23)
    specs = [ModelSpec("multinomial_nb"), ModelSpec("linear_svm", seed=1)]
    cfgs = [VectorizerConfig("count"), VectorizerConfig("count")]
    report = ev.run_ablation(ds, specs, cfgs, SplitSpec(seed=6))
    return report, ds, specs, cfgs


class TestRunAblation:
    def test_exactly_seven_masks(self, report_and_dataset):
        report, *_ = report_and_dataset
        assert len(report.mask_labels) == 7
        assert set(report.mask_labels) == set(nc.MASKS)
        assert len(report.cells) == 14

    def test_middle_name_masks_dominate(self, report_and_dataset):
        report, *_ = report_and_dataset
        with_mn = [m for m in report.mask_labels if "mn" in m or m == "full"]
        without_mn = [m for m in report.mask_labels if m not in with_mn]
        for model in report.model_labels:
            floor_mn = min(report.cells[(m, model)].macro_f1 for m in with_mn)
            ceil_rest = max(report.cells[(m, model)].macro_f1 for m in without_mn)
            assert floor_mn > ceil_rest

    def test_single_cell_reproduces_run_experiment(self, report_and_dataset):
        report, ds, specs, cfgs = report_and_dataset
        result = ev.run_experiment(
            ds, nc.parse_mask("mn+fin"), specs[0], cfgs[0], SplitSpec(seed=6)
        )
        assert report.cells[("mn+fin", result.model_label)] == result.metrics

    def test_report_formats(self, report_and_dataset):
        report, *_ = report_and_dataset
        text = ev.format_ablation(report)
        assert text.count("\n") == 8  # header + 7 masks
        payload = ev.ablation_to_dict(report)
        assert len(payload["cells"]) == 14
        assert set(payload["skipped"]) == set(nc.MASKS)
