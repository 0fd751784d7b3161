"""Fixture corpora in the native upstream formats, written into a temp cache
so the real parsers run without any network access."""
import csv
import json
from pathlib import Path

import pytest

CLINC_LABELS = ("alarm_set", "balance_check", "book_flight", "change_speed", "weather_ask")


def clinc_rows(label: str, split: str, n: int) -> list[list[str]]:
    # native row order is [utterance, intent]
    return [[f"{label.replace('_', ' ')} request {split} number {i}", label] for i in range(n)]


def build_clinc_json() -> dict:
    data = {"train": [], "val": [], "test": []}
    for label in CLINC_LABELS:
        data["train"].extend(clinc_rows(label, "train", 6))
        data["val"].extend(clinc_rows(label, "val", 2))
        data["test"].extend(clinc_rows(label, "test", 3))
    data["oos_train"] = [[f"offbeat chatter number {i}", "oos"] for i in range(2)]
    data["oos_val"] = [["completely unrelated question", "oos"]]
    data["oos_test"] = [[f"nonsense inquiry number {i}", "oos"] for i in range(4)]
    return data


BANKING_LABELS = ("card_lost", "exchange_rate", "pin_change", "top_up")


def banking_rows(label: str, split: str, n: int) -> list[tuple[str, str]]:
    rows = [(f"{label.replace('_', ' ')} question {split} {i}", label) for i in range(n)]
    if label == "card_lost":
        # exercise quoted commas in the csv path
        rows[0] = (f"help, my {label.replace('_', ' ')} happened during {split}", label)
    return rows


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus-cache")

    clinc = root / "clinc150"
    clinc.mkdir()
    (clinc / "data_full.json").write_text(json.dumps(build_clinc_json()), encoding="utf-8")

    banking = root / "banking77"
    banking.mkdir()
    for split, n in (("train", 5), ("test", 2)):
        with open(banking / f"{split}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["text", "category"])
            for label in BANKING_LABELS:
                writer.writerows((text, lab) for text, lab in banking_rows(label, split, n))
    return root


@pytest.fixture()
def export_dir(cache_dir, tmp_path) -> Path:
    from embed_export import ExportSpec, run_export

    out = tmp_path / "exported"
    run_export(
        ExportSpec(
            dataset="clinc150", encoder="debug-hash", out_dir=out, batch_size=8, cache_dir=cache_dir
        )
    )
    return out
