"""Recheck an export directory against its manifest.

Every row of both JSONL files is re-read and re-counted: row counts, vector
dimensions, and label sets must all agree with the manifest. Disagreements
come back as human-readable problem strings on the report; an unreadable or
missing manifest raises, since there is nothing to compare against.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .datasets import OOD_LABEL
from .errors import ExportError
from .export import MANIFEST_FILE, TEST_FILE, TRAIN_FILE

_MAX_PROBLEMS_PER_FILE = 10
_MANIFEST_KEYS = ("dataset", "encoder", "version", "counts", "dim", "labels")


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    problems: tuple[str, ...]
    counts: dict[str, int]


def _scan_split(path: Path, dim: int, problems: list[str]) -> tuple[int, set[str], int]:
    """Return (rows, label set, ood rows), appending per-line problems."""
    local: list[str] = []
    labels: set[str] = set()
    n_rows = 0
    n_ood = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            n_rows += 1
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                local.append(f"{path.name}:{lineno}: not valid JSON")
                continue
            if not isinstance(row, dict) or not isinstance(row.get("label"), str):
                local.append(f"{path.name}:{lineno}: row needs a string 'label'")
                continue
            labels.add(row["label"])
            if row["label"] == OOD_LABEL:
                n_ood += 1
            vec = row.get("vector")
            if not isinstance(vec, list) or not all(
                isinstance(v, (int, float)) and math.isfinite(v) for v in vec
            ):
                local.append(f"{path.name}:{lineno}: 'vector' must be a list of finite numbers")
                continue
            if len(vec) != dim:
                local.append(
                    f"{path.name}:{lineno}: vector has {len(vec)} dimensions, manifest says {dim}"
                )
    if len(local) > _MAX_PROBLEMS_PER_FILE:
        kept = local[:_MAX_PROBLEMS_PER_FILE]
        kept.append(f"{path.name}: ... and {len(local) - _MAX_PROBLEMS_PER_FILE} more problems")
        local = kept
    problems.extend(local)
    return n_rows, labels, n_ood


def verify_manifest(out_dir: str | Path) -> VerifyReport:
    out = Path(out_dir)
    manifest_path = out / MANIFEST_FILE
    if not manifest_path.is_file():
        raise ExportError(f"no manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ExportError(f"{manifest_path}: unreadable manifest: {exc}") from None
    missing = [key for key in _MANIFEST_KEYS if key not in manifest]
    if missing:
        raise ExportError(f"{manifest_path}: manifest missing keys: {', '.join(missing)}")

    dim = manifest["dim"]
    declared = manifest["counts"]
    manifest_labels = set(manifest["labels"])
    problems: list[str] = []
    counts: dict[str, int] = {}

    scans: dict[str, tuple[int, set[str], int]] = {}
    for split_name, filename in (("train", TRAIN_FILE), ("test", TEST_FILE)):
        path = out / filename
        if not path.is_file():
            problems.append(f"missing file: {filename}")
            continue
        scans[split_name] = _scan_split(path, dim, problems)
        counts[split_name] = scans[split_name][0]
        if counts[split_name] != declared.get(split_name):
            problems.append(
                f"{filename}: manifest says {declared.get(split_name)} rows, "
                f"found {counts[split_name]}"
            )

    if "train" in scans:
        _, train_labels, train_ood = scans["train"]
        if train_ood:
            problems.append(f"{TRAIN_FILE}: {train_ood} rows carry the reserved label {OOD_LABEL!r}")
        if train_labels != manifest_labels:
            gone = sorted(manifest_labels - train_labels)[:5]
            extra = sorted(train_labels - manifest_labels)[:5]
            detail = "; ".join(
                part
                for part in (
                    f"missing from file: {', '.join(gone)}" if gone else "",
                    f"not in manifest: {', '.join(extra)}" if extra else "",
                )
                if part
            )
            problems.append(f"{TRAIN_FILE}: label set disagrees with manifest ({detail})")

    if "test" in scans:
        _, test_labels, test_ood = scans["test"]
        counts["test_ood"] = test_ood
        if test_ood != declared.get("test_ood"):
            problems.append(
                f"{TEST_FILE}: manifest says {declared.get('test_ood')} ood rows, found {test_ood}"
            )
        stray = sorted(test_labels - manifest_labels - {OOD_LABEL})[:5]
        if stray:
            problems.append(f"{TEST_FILE}: labels not in manifest: {', '.join(stray)}")

    return VerifyReport(ok=not problems, problems=tuple(problems), counts=counts)
