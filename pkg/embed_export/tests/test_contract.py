"""Cross-package contract: exported files must be directly consumable by the
detector's loaders and training entry points."""
import numpy as np
import pytest

oodbound = pytest.importorskip("oodbound")


def test_exports_load_cleanly(export_dir):
    train = oodbound.load_dataset(export_dir / "train.jsonl")
    test = oodbound.load_dataset(export_dir / "test.jsonl")
    assert train.dim == test.dim == 64
    assert len(train) == 40 and len(test) == 22
    # the known-label vocabulary never includes the reserved label
    assert oodbound.OOD_LABEL not in train.label_vocab
    assert oodbound.OOD_LABEL not in test.label_vocab
    assert not any(it.label == oodbound.OOD_LABEL for it in train.items)
    assert sum(1 for it in test.items if it.label == oodbound.OOD_LABEL) == 7


def test_exports_feed_fit_and_predict(export_dir):
    train = oodbound.load_dataset(export_dir / "train.jsonl")
    test = oodbound.load_dataset(export_dir / "test.jsonl")
    model = oodbound.fit(train, oodbound.TrainConfig(epochs=5, batch_size=16, seed=0))
    preds = oodbound.predict_batch(model, test.matrix())
    legal = set(train.label_vocab) | {oodbound.OOD_LABEL}
    assert len(preds) == len(test)
    assert {p.label for p in preds} <= legal
    assert all(np.isfinite(p.distance) for p in preds)


def test_exports_survive_the_split_protocol(export_dir):
    train = oodbound.load_dataset(export_dir / "train.jsonl")
    test = oodbound.load_dataset(export_dir / "test.jsonl")
    split = oodbound.make_split(
        train, test, oodbound.SplitSpec(known_ratio=0.5, seed=1, run_index=0)
    )
    assert oodbound.OOD_LABEL not in {it.label for it in split.train.items}
    relabeled = {it.label for it in split.test.items}
    assert oodbound.OOD_LABEL in relabeled
