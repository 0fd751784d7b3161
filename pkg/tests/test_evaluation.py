import json
from dataclasses import replace

import numpy as np
import pytest

from oodbound import OOD_LABEL, TrainConfig, synth_blobs
from oodbound.data import Dataset
from oodbound.errors import DataError
from oodbound.evaluation import (
    MetricsReport,
    RunConfig,
    confusion_and_f1,
    emit_report,
    load_report,
    report_payload,
    run_protocol,
    train_size_sweep,
)

from oracles import confusion_reference


def test_perfect_predictions_score_one():
    labels = ["a", "b", OOD_LABEL]
    gold = ["a", "b", OOD_LABEL, "a", OOD_LABEL]
    m = confusion_and_f1(gold, gold, labels)
    assert m["accuracy"] == 1.0
    assert m["macro_f1"] == 1.0
    assert m["f1_ood"] == 1.0
    assert m["f1_ind"] == 1.0


def test_all_ood_predictions_on_balanced_thirds():
    gold = ["a"] * 4 + ["b"] * 4 + [OOD_LABEL] * 4
    preds = [OOD_LABEL] * 12
    m = confusion_and_f1(preds, gold, ["a", "b", OOD_LABEL])
    assert m["accuracy"] == pytest.approx(1 / 3)
    assert m["f1_ood"] == pytest.approx(0.5)
    assert m["f1_ind"] == 0.0
    assert m["macro_f1"] == pytest.approx(0.5 / 3)


def test_inactive_class_excluded_from_macros():
    # class "b" never appears in gold or predictions: it stays in the
    # per-class table at 0 but must not drag the macro average down
    gold = ["a", "a", OOD_LABEL]
    preds = ["a", OOD_LABEL, OOD_LABEL]
    m = confusion_and_f1(preds, gold, ["a", "b", OOD_LABEL])
    assert m["per_class_f1"]["b"] == 0.0
    a_f1 = m["per_class_f1"]["a"]
    ood_f1 = m["per_class_f1"][OOD_LABEL]
    assert m["macro_f1"] == pytest.approx((a_f1 + ood_f1) / 2)
    assert m["f1_ind"] == pytest.approx(a_f1)


def test_confusion_matches_counting_oracle():
    rng = np.random.default_rng(43)
    for _ in range(60):
        k = int(rng.integers(1, 6))
        labels = [f"c{i}" for i in range(k)] + [OOD_LABEL]
        n = int(rng.integers(1, 51))
        gold = [labels[i] for i in rng.integers(0, len(labels), size=n)]
        preds = [labels[i] for i in rng.integers(0, len(labels), size=n)]
        ours = confusion_and_f1(preds, gold, labels)
        ref = confusion_reference(preds, gold, labels)
        for key in ("accuracy", "macro_f1", "f1_ood", "f1_ind"):
            assert ours[key] == pytest.approx(ref[key], abs=1e-12)
        assert ours["per_class_f1"] == pytest.approx(ref["per_class_f1"], abs=1e-12)


def test_confusion_input_validation():
    with pytest.raises(DataError, match="predictions"):
        confusion_and_f1(["a"], ["a", "b"], ["a", "b", OOD_LABEL])
    with pytest.raises(DataError, match="empty"):
        confusion_and_f1([], [], ["a", OOD_LABEL])
    with pytest.raises(DataError, match="__ood__"):
        confusion_and_f1(["a"], ["a"], ["a", "b"])
    with pytest.raises(DataError, match="outside"):
        confusion_and_f1(["zzz"], ["a"], ["a", OOD_LABEL])


def _held_out_fixture():
    train, test = synth_blobs(k=5, dim=16, per_class=20, sigma=0.05, seed=29)
    held = train.label_vocab[-1]
    tr = Dataset.from_items([it for it in train.items if it.label != held])
    te = Dataset.from_items(
        [replace(it, label=OOD_LABEL) if it.label == held else it for it in test.items]
    )
    return tr, te


_FAST_TRAIN = TrainConfig(epochs=15, batch_size=16, seed=6)


def test_run_protocol_ratio_one_with_native_ood():
    tr, te = _held_out_fixture()
    reports = run_protocol(tr, te, RunConfig(ratios=(1.0,), runs=2, seed=3), _FAST_TRAIN)
    assert len(reports) == 1
    assert reports[0].mean["accuracy"] >= 0.95
    assert reports[0].mean["f1_ood"] >= 0.95


def test_run_protocol_single_run_reports_zero_std():
    tr, te = _held_out_fixture()
    reports = run_protocol(tr, te, RunConfig(ratios=(0.5,), runs=1, seed=3), _FAST_TRAIN)
    assert all(v == 0.0 for v in reports[0].std.values())
    assert len(reports[0].per_run) == 1


def test_run_protocol_deterministic_and_thread_invariant():
    tr, te = _held_out_fixture()
    rc = RunConfig(ratios=(0.5, 1.0), runs=2, seed=8)
    a = run_protocol(tr, te, rc, _FAST_TRAIN, threads=1)
    b = run_protocol(tr, te, rc, _FAST_TRAIN, threads=1)
    c = run_protocol(tr, te, rc, _FAST_TRAIN, threads=4)
    pa, pb, pc = (json.dumps(report_payload(x), sort_keys=True) for x in (a, b, c))
    assert pa == pb
    assert pa == pc


def test_run_protocol_propagates_split_errors():
    # 2-class data at ratio 0.25 yields a single known class, which is illegal
    train, test = synth_blobs(k=2, dim=8, per_class=6, sigma=0.05, seed=1)
    with pytest.raises(DataError, match="known class"):
        run_protocol(train, test, RunConfig(ratios=(0.25,), runs=1, seed=0), _FAST_TRAIN)


def test_train_size_sweep_shapes_and_consistency():
    train, test = synth_blobs(k=4, dim=16, per_class=20, sigma=0.05, seed=31)
    rc = RunConfig(ratios=(0.5,), runs=2, seed=5)
    sweep = train_size_sweep([0.1, 0.5, 1.0], train, test, rc, _FAST_TRAIN)
    assert [f for f, _ in sweep] == [0.1, 0.5, 1.0]
    # the full-fraction entry equals a direct protocol call with shared seeds
    direct = run_protocol(train, test, replace(rc, train_fraction=1.0), _FAST_TRAIN)
    assert json.dumps(report_payload(sweep[2][1]), sort_keys=True) == json.dumps(
        report_payload(direct), sort_keys=True
    )
    # more training data should not hurt on separable clusters
    assert sweep[2][1][0].mean["accuracy"] >= sweep[0][1][0].mean["accuracy"] - 0.02


def test_train_size_sweep_validation():
    train, test = synth_blobs(k=4, dim=8, per_class=6, sigma=0.05, seed=2)
    with pytest.raises(DataError, match="ascending"):
        train_size_sweep([1.0, 0.5], train, test)
    with pytest.raises(DataError, match="fraction"):
        train_size_sweep([0.0, 0.5], train, test)
    with pytest.raises(DataError, match="fraction"):
        train_size_sweep([], train, test)


def _toy_reports():
    return [
        MetricsReport(
            ratio=0.5,
            per_run=({"accuracy": 0.9, "macro_f1": 0.8, "f1_ood": 0.7, "f1_ind": 0.85},),
            mean={"accuracy": 0.9, "macro_f1": 0.8, "f1_ood": 0.7, "f1_ind": 0.85},
            std={"accuracy": 0.0, "macro_f1": 0.0, "f1_ood": 0.0, "f1_ind": 0.0},
            per_class_f1={"a": 0.9, OOD_LABEL: 0.7},
            config={"runs": 1, "ratio": 0.5},
        ),
        MetricsReport(
            ratio=0.75,
            per_run=({"accuracy": 1.0, "macro_f1": 1.0, "f1_ood": 1.0, "f1_ind": 1.0},),
            mean={"accuracy": 1.0, "macro_f1": 1.0, "f1_ood": 1.0, "f1_ind": 1.0},
            std={"accuracy": 0.0, "macro_f1": 0.0, "f1_ood": 0.0, "f1_ind": 0.0},
            per_class_f1={"a": 1.0, OOD_LABEL: 1.0},
            config={"runs": 1, "ratio": 0.75},
        ),
    ]


def test_emit_json_round_trip(tmp_path):
    reports = _toy_reports()
    path = tmp_path / "rep.json"
    emit_report(reports, path, "json")
    loaded = load_report(path)
    assert loaded == report_payload(reports)


def test_emit_csv_parses_back(tmp_path):
    reports = _toy_reports()
    path = tmp_path / "rep.csv"
    emit_report(reports, path, "csv")
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "ratio,metric,mean,std,runs"
    assert len(lines) == 1 + 2 * 4
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["mean"]) == pytest.approx(0.9, abs=1e-9)
    assert row["ratio"] == "0.5"


def test_emit_markdown_shape(tmp_path):
    reports = _toy_reports()
    path = tmp_path / "rep.md"
    emit_report(reports, path, "markdown")
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2 + len(reports)
    assert lines[0].startswith("| ratio |")


def test_emit_unknown_format(tmp_path):
    with pytest.raises(DataError, match="format"):
        emit_report(_toy_reports(), tmp_path / "rep.xml", "xml")


def test_load_report_guards(tmp_path):
    path = tmp_path / "rep.json"
    path.write_text('{"version": "other/1"}')
    with pytest.raises(DataError, match="report"):
        load_report(path)
    with pytest.raises(DataError, match="no such"):
        load_report(tmp_path / "missing.json")


def test_run_config_validation():
    with pytest.raises(DataError):
        RunConfig(ratios=())
    with pytest.raises(DataError):
        RunConfig(ratios=(1.5,))
    with pytest.raises(DataError):
        RunConfig(runs=0)
    with pytest.raises(DataError):
        RunConfig(train_fraction=0.0)
