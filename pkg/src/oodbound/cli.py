"""Command-line surface: fit, predict, eval, synth, gradcheck.

Exit codes are part of the contract: 0 success, 1 usage error, 2 data error,
3 numeric failure. All output files are written atomically, so an aborted
run never leaves a partial file behind.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import detector, evaluation, metric_learning
from ._util import atomic_write_text
from .boundary import BoundaryParams
from .data import load_dataset, load_vectors, save_dataset, synth_blobs
from .errors import DataError, NumericError
from .evaluation import RunConfig
from .metric_learning import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse's own exit code for bad flags is 2; this contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ratio_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--quiet", action="store_true", help="suppress summary output")
    common.add_argument(
        "--threads",
        type=_positive_int,
        default=os.cpu_count() or 1,
        help="worker threads for evaluation cells",
    )

    parser = _Parser(prog="oodbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", parents=[common], help="train a detector model")
    p_fit.add_argument("--train", required=True, help="training embeddings (jsonl or csv)")
    p_fit.add_argument("--loss", choices=["lmcl", "triplet"], default="lmcl")
    p_fit.add_argument("--out", required=True, help="model file to write")
    p_fit.add_argument("--dim-out", type=_positive_int, default=None)
    p_fit.add_argument("--epochs", type=_positive_int, default=30)
    p_fit.add_argument("--batch", type=_positive_int, default=64)
    p_fit.add_argument("--lr", type=float, default=1e-3)
    p_fit.add_argument("--scale", type=float, default=64.0, help="cosine softmax scale")
    p_fit.add_argument("--margin", type=float, default=None, help="margin of the chosen loss")
    p_fit.add_argument("--step", type=float, default=0.001, help="radius search step")
    p_fit.add_argument("--max-iter", type=_positive_int, default=2000)
    p_fit.add_argument("--beta", type=float, default=None, help="override the imbalance weight")

    p_pred = sub.add_parser("predict", parents=[common], help="classify vectors with a model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", required=True, help="vectors to classify (jsonl or csv)")
    p_pred.add_argument("--out", required=True, help="predictions file (jsonl)")

    p_eval = sub.add_parser("eval", parents=[common], help="run the known-ratio protocol")
    p_eval.add_argument("--train", required=True)
    p_eval.add_argument("--test", required=True)
    p_eval.add_argument("--ratios", type=_ratio_list, default=(0.25, 0.5, 0.75))
    p_eval.add_argument("--runs", type=_positive_int, default=10)
    p_eval.add_argument("--loss", choices=["lmcl", "triplet"], default="lmcl")
    p_eval.add_argument("--report", required=True, help="report file (.json, .csv, or .md)")
    p_eval.add_argument(
        "--train-fraction",
        type=_ratio_list,
        default=(1.0,),
        help="training-set fraction; several comma-separated values run a size sweep",
    )
    p_eval.add_argument("--epochs", type=_positive_int, default=30)
    p_eval.add_argument("--batch", type=_positive_int, default=64)
    p_eval.add_argument("--lr", type=float, default=1e-3)

    p_synth = sub.add_parser("synth", parents=[common], help="generate synthetic cluster data")
    p_synth.add_argument("--classes", type=_positive_int, required=True)
    p_synth.add_argument("--dim", type=_positive_int, required=True)
    p_synth.add_argument("--per-class", type=_positive_int, required=True)
    p_synth.add_argument("--sigma", type=float, required=True)
    p_synth.add_argument("--out-train", required=True)
    p_synth.add_argument("--out-test", required=True)

    p_grad = sub.add_parser("gradcheck", parents=[common], help="verify analytic gradients")
    p_grad.add_argument("--trials", type=_positive_int, default=20)
    p_grad.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)

    return parser


def _train_config(args, loss: str) -> TrainConfig:
    margin = args.margin if getattr(args, "margin", None) is not None else None
    kwargs = dict(
        loss=loss,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
        dim_out=getattr(args, "dim_out", None),
    )
    if getattr(args, "scale", None) is not None:
        kwargs["lmcl_scale"] = args.scale
    if margin is not None:
        if loss == "lmcl":
            kwargs["lmcl_margin"] = margin
        else:
            kwargs["triplet_margin"] = margin
    return TrainConfig(**kwargs)


def _cmd_fit(args) -> int:
    train = load_dataset(args.train)
    config = _train_config(args, args.loss)
    params = BoundaryParams(step=args.step, max_iter=args.max_iter, beta_override=args.beta)
    model = detector.fit(train, config, params)
    detector.save_model(model, args.out)
    if not args.quiet:
        radii = [g.radius for g in model.geometry]
        print(f"classes: {len(model.labels)}")
        print(f"radii: min {min(radii):.6f} max {max(radii):.6f}")
        print(f"final loss: {model.metadata['final_loss']:.6f}")
        print(f"model: {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = detector.load_model(args.model)
    X = load_vectors(args.input)
    if X.shape[0] == 0:
        atomic_write_text(Path(args.out), "")
        if not args.quiet:
            print("0 predictions written")
        return EXIT_OK
    preds = detector.predict_batch(model, X)
    lines = [
        json.dumps(
            {
                "label": p.label,
                "nearest_label": p.nearest_label,
                "distance": p.distance,
                "margin": p.margin,
            },
            ensure_ascii=False,
        )
        for p in preds
    ]
    atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    if not args.quiet:
        print(f"{len(preds)} predictions written to {args.out}")
    return EXIT_OK


def _report_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".md", ".markdown"):
        return "markdown"
    return "json"


def _print_summary(reports) -> None:
    print(f"{'ratio':>6} {'accuracy':>16} {'macro_f1':>16} {'f1_ood':>16} {'f1_ind':>16}")
    for r in reports:
        cells = " ".join(
            f"{r.mean[m] * 100:7.2f} ± {r.std[m] * 100:5.2f}"
            for m in ("accuracy", "macro_f1", "f1_ood", "f1_ind")
        )
        print(f"{r.ratio:>6} {cells}")


def _cmd_eval(args) -> int:
    train = load_dataset(args.train)
    test = load_dataset(args.test)
    config = _train_config(args, args.loss)
    params = BoundaryParams()
    fractions = sorted(set(args.train_fraction))
    report_path = Path(args.report)
    fmt = _report_format(report_path)

    if len(fractions) == 1:
        run_config = RunConfig(
            ratios=args.ratios, runs=args.runs, seed=args.seed, train_fraction=fractions[0]
        )
        reports = evaluation.run_protocol(train, test, run_config, config, params, args.threads)
        evaluation.emit_report(reports, report_path, fmt)
        if not args.quiet:
            _print_summary(reports)
    else:
        if fmt != "json":
            raise DataError("train-fraction sweeps support json reports only")
        run_config = RunConfig(ratios=args.ratios, runs=args.runs, seed=args.seed)
        sweep = evaluation.train_size_sweep(
            fractions, train, test, run_config, config, params, args.threads
        )
        payload = {
            "version": evaluation.REPORT_FORMAT,
            "sweep": [
                {"fraction": f, **evaluation.report_payload(reports)}
                for f, reports in sweep
            ],
        }
        atomic_write_text(report_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        if not args.quiet:
            for f, reports in sweep:
                print(f"train fraction {f}:")
                _print_summary(reports)
    if not args.quiet:
        print(f"report: {args.report}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.sigma < 0:
        raise DataError("sigma must be non-negative")
    train, test = synth_blobs(args.classes, args.dim, args.per_class, args.sigma, args.seed)
    save_dataset(train, args.out_train)
    save_dataset(test, args.out_test)
    if not args.quiet:
        print(f"train: {len(train)} items, {len(train.labels)} classes -> {args.out_train}")
        print(f"test:  {len(test)} items -> {args.out_test}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    report = metric_learning.gradient_check(
        trials=args.trials, seed=args.seed, corrupt=args.corrupt
    )
    if not args.quiet or not report.passed:
        print(
            f"worst relative error {report.worst_rel_err:.3e} over {report.trials} trials "
            f"(tolerance {report.tolerance:.0e})"
        )
    if not report.passed:
        print("gradient check FAILED", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


_COMMANDS = {
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "gradcheck": _cmd_gradcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"oodbound: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"oodbound: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"oodbound: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
