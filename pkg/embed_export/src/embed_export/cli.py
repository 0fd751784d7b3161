"""Command-line surface: export, verify.

Exit codes match the detector's convention: 0 success, 1 usage error,
2 data error (including failed verification).
"""
from __future__ import annotations

import argparse
import sys

from .errors import ExportError
from .export import ExportSpec, export
from .registry import dataset_names, encoder_names
from .verify import verify_manifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse's own exit code for bad flags is 2; this contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="embed-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_export = sub.add_parser("export", help="encode a corpus to JSONL")
    p_export.add_argument("--dataset", required=True, choices=dataset_names())
    p_export.add_argument("--encoder", required=True, choices=encoder_names())
    p_export.add_argument("--out", required=True, help="output directory")
    p_export.add_argument("--batch", type=_positive_int, default=64, help="encoding batch size")
    p_export.add_argument("--cache", default=None, help="dataset cache directory")
    p_export.add_argument("--quiet", action="store_true", help="suppress summary output")

    p_verify = sub.add_parser("verify", help="recheck an export against its manifest")
    p_verify.add_argument("--dir", required=True, help="export directory to verify")
    p_verify.add_argument("--quiet", action="store_true", help="suppress summary output")
    return parser


def _cmd_export(args) -> int:
    spec = ExportSpec(
        dataset=args.dataset,
        encoder=args.encoder,
        out_dir=args.out,
        batch_size=args.batch,
        cache_dir=args.cache,
    )
    result = export(spec)
    if not args.quiet:
        counts = result.manifest["counts"]
        print(
            f"wrote {counts['train']} train rows, {counts['test']} test rows "
            f"({counts['test_ood']} ood), dim {result.manifest['dim']}"
        )
        print(f"manifest: {result.manifest_path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = verify_manifest(args.dir)
    if not args.quiet:
        for split_name in ("train", "test"):
            if split_name in report.counts:
                print(f"{split_name} rows: {report.counts[split_name]}")
        for problem in report.problems:
            print(f"problem: {problem}")
        print(f"verification: {'PASS' if report.ok else 'FAIL'}")
    return EXIT_OK if report.ok else EXIT_DATA


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            return _cmd_export(args)
        return _cmd_verify(args)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
