"""embed-export: turn intent corpora into embedding JSONL files.

Downloads CLINC150 or BANKING77, encodes every utterance with a pinned
frozen sentence encoder, and writes train.jsonl / test.jsonl plus a manifest
in the exact row format the oodbound detector loads.
"""
from . import cli, datasets, encoders, export, registry, verify
from .datasets import OOD_LABEL, TextCorpus, load_banking77, load_clinc150
from .encoders import Encoder, HashingEncoder
from .errors import ExportError
from .export import ExportResult, ExportSpec
from .export import export as run_export
from .registry import (
    DatasetEntry,
    EncoderEntry,
    dataset_names,
    encoder_names,
    get_dataset,
    get_encoder,
    register_dataset,
    register_encoder,
)
from .verify import VerifyReport, verify_manifest

__version__ = "0.1.0"

__all__ = [
    "OOD_LABEL",
    "DatasetEntry",
    "Encoder",
    "EncoderEntry",
    "ExportError",
    "ExportResult",
    "ExportSpec",
    "HashingEncoder",
    "TextCorpus",
    "VerifyReport",
    "cli",
    "dataset_names",
    "datasets",
    "encoder_names",
    "encoders",
    "export",
    "get_dataset",
    "get_encoder",
    "load_banking77",
    "load_clinc150",
    "register_dataset",
    "register_encoder",
    "registry",
    "run_export",
    "verify",
    "verify_manifest",
]
