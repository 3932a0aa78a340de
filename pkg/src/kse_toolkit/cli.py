"""Command-line front end.

Every subcommand reads its inputs from files and writes its outputs to
files or stdout::

    kse-toolkit toy out/
    kse-toolkit analyze out/toy -o out/toy.kse.jsonl
    kse-toolkit compress out/toy -r out/toy.kse.jsonl -o out/toy-g4
    kse-toolkit report out/toy out/toy-g4
    kse-toolkit eval --dataset out/test --dense out/toy --compressed out/toy-g4
    kse-toolkit finetune out/toy-g4 --dataset out/train -o out/toy-g4-ft
    kse-toolkit study out/toy --dataset out/test --layer conv3

Exit codes: 0 success, 2 usage error, 3 missing file, 4 incompatible model
stage, 5 file-format error, 6 any other toolkit error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from enum import IntEnum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict

from .analysis import analyze_model, read_reports, write_reports
from .clustering import CompressionConfig, compress_model
from .config import ToolkitSettings
from .dataset import load_dataset, save_dataset
from .enums import IndicatorKind
from .errors import (
    ConfigurationError,
    InputValidationError,
    KseToolkitError,
    LayerError,
    ModelFormatError,
    StageError,
)
from .evaluation import EvalReport, evaluate_models
from .finetune import TrainConfig, evaluate_accuracy, finetune
from .interpret import correlation_study
from .logging_config import LoggerFactory
from .metrics import RatioReport, granularity_sweep, model_report, render_sweep
from .model import load_compressed, load_dense, load_model, save_compressed, save_dense
from .render import ReportRenderer
from .toy import build_toy_model, make_quadrant_dataset, train_toy_model

PROG = "kse-toolkit"

Subcommand = Literal["analyze", "compress", "eval", "finetune", "report", "toy", "study"]


class ExitCode(IntEnum):
    """Process exit statuses."""

    OK = 0
    USAGE = 2
    MISSING_FILE = 3
    STAGE = 4
    FORMAT = 5
    TOOLKIT = 6


class CommandConfig(BaseModel):
    """Parsed arguments of one invocation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: Subcommand
    model_path: Path | None = None
    output_path: Path | None = None
    report_path: Path | None = None
    compressed_path: Path | None = None
    dataset_path: Path | None = None
    granularity: int = 4
    shift: int = 0
    alpha: float = 1.0
    k: int = 5
    quantile: float = 0.005
    seed: int = 0
    worker_count: int = 1
    indicator: IndicatorKind = IndicatorKind.KSE
    sweep: tuple[int, ...] = ()
    as_json: bool = False
    layer: str | None = None
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 5
    batch_size: int = 16
    weight_decay: float = 0.0
    n_per_class: int = 16
    verbose: bool = False

    def compression_config(self) -> CompressionConfig:
        """Return the compression settings named by the flags."""
        return CompressionConfig(
            granularity=self.granularity,
            shift=self.shift,
            k_neighbors=self.k,
            alpha=self.alpha,
            kmeans_seed=self.seed,
            indicator=self.indicator,
        )

    def train_config(self) -> TrainConfig:
        """Return the fine-tuning settings named by the flags."""
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            weight_decay=self.weight_decay,
        )


def _require(path: Path | None, flag: str) -> Path:
    if path is None:
        raise InputValidationError(f"{flag} is required for this command")
    return path


def _emit(record: RatioReport | EvalReport, as_json: bool) -> None:
    if as_json:
        print(record.to_json_line())
    else:
        print(record.render(), end="")


def _cmd_analyze(cfg: CommandConfig) -> None:
    model = load_dense(_require(cfg.model_path, "MODEL"))
    reports = analyze_model(
        model, cfg.k, cfg.alpha, indicator=cfg.indicator, worker_count=cfg.worker_count
    )
    if cfg.output_path is not None:
        write_reports(reports, cfg.output_path)
    print(ReportRenderer().render("kse_report.jinja", {"reports": reports}), end="")


def _cmd_compress(cfg: CommandConfig) -> None:
    model = load_model(_require(cfg.model_path, "MODEL"))
    output = _require(cfg.output_path, "--output")
    if not model.is_dense:
        raise StageError(f"{cfg.model_path} is already compressed")
    if cfg.report_path is not None:
        reports = read_reports(cfg.report_path)
    else:
        reports = analyze_model(
            model, cfg.k, cfg.alpha, indicator=cfg.indicator, worker_count=cfg.worker_count
        )
    compressed = compress_model(
        model, reports, cfg.compression_config(), worker_count=cfg.worker_count
    )
    manifest = save_compressed(compressed, output)
    print(f"Wrote {manifest}")


def _cmd_report(cfg: CommandConfig) -> None:
    dense = load_dense(_require(cfg.model_path, "DENSE"))
    if cfg.sweep:
        reports = analyze_model(
            dense, cfg.k, cfg.alpha, indicator=cfg.indicator, worker_count=cfg.worker_count
        )
        sweep = granularity_sweep(
            dense, reports, cfg.sweep, cfg.compression_config(), worker_count=cfg.worker_count
        )
        if cfg.as_json:
            for entry in sweep:
                print(entry.to_json_line())
        else:
            print(render_sweep(sweep), end="")
        return
    compressed = load_model(_require(cfg.compressed_path, "COMPRESSED"))
    _emit(model_report(dense, compressed), cfg.as_json)


def _cmd_eval(cfg: CommandConfig) -> None:
    dataset = load_dataset(_require(cfg.dataset_path, "--dataset"))
    dense = None if cfg.model_path is None else load_dense(cfg.model_path)
    compressed = None if cfg.compressed_path is None else load_model(cfg.compressed_path)
    if dense is None and compressed is None:
        raise InputValidationError("eval needs --dense and/or --compressed")
    _emit(evaluate_models(dataset, dense, compressed, worker_count=cfg.worker_count), cfg.as_json)


def _cmd_finetune(cfg: CommandConfig) -> None:
    model = load_compressed(_require(cfg.model_path, "MODEL"))
    output = _require(cfg.output_path, "--output")
    dataset = load_dataset(_require(cfg.dataset_path, "--dataset"))
    result = finetune(
        model, dataset, cfg.train_config(), worker_count=cfg.worker_count, progress=cfg.verbose
    )
    manifest = save_compressed(result.model, output)
    for epoch, loss in enumerate(result.loss_trace, start=1):
        print(f"epoch {epoch}: loss {loss:.6f}")
    print(f"Wrote {manifest}")


def _cmd_toy(cfg: CommandConfig) -> None:
    root = _require(cfg.output_path, "OUTDIR")
    train = make_quadrant_dataset(cfg.n_per_class, seed=cfg.seed)
    test = make_quadrant_dataset(max(1, cfg.n_per_class // 2), seed=cfg.seed + 1)
    result = train_toy_model(
        build_toy_model(cfg.seed),
        train,
        seed=cfg.seed,
        epochs=cfg.epochs,
        worker_count=cfg.worker_count,
        progress=cfg.verbose,
    )
    manifest = save_dense(result.model, root / "toy")
    save_dataset(train, root / "train")
    save_dataset(test, root / "test")
    accuracy = evaluate_accuracy(result.model, test, worker_count=cfg.worker_count)
    print(f"Wrote {manifest} (test accuracy {100 * accuracy:.2f}%)")


def _cmd_study(cfg: CommandConfig) -> None:
    model = load_dense(_require(cfg.model_path, "MODEL"))
    dataset = load_dataset(_require(cfg.dataset_path, "--dataset"))
    if cfg.layer is None:
        raise InputValidationError("--layer is required for this command")
    layer: int | str = int(cfg.layer) if cfg.layer.lstrip("-").isdigit() else cfg.layer
    result = correlation_study(
        model, dataset, layer, cfg.quantile, k=cfg.k, worker_count=cfg.worker_count
    )
    if cfg.output_path is not None:
        result.to_json_file(cfg.output_path)
    print(result.render(), end="")


_COMMANDS = {
    "analyze": _cmd_analyze,
    "compress": _cmd_compress,
    "report": _cmd_report,
    "eval": _cmd_eval,
    "finetune": _cmd_finetune,
    "toy": _cmd_toy,
    "study": _cmd_study,
}


def _exit_code(exc: BaseException) -> ExitCode:
    while isinstance(exc, LayerError) and exc.__cause__ is not None:
        exc = exc.__cause__
    if isinstance(exc, FileNotFoundError):
        return ExitCode.MISSING_FILE
    if isinstance(exc, StageError):
        return ExitCode.STAGE
    if isinstance(exc, ModelFormatError):
        return ExitCode.FORMAT
    if isinstance(exc, (ConfigurationError, InputValidationError)):
        return ExitCode.USAGE
    return ExitCode.TOOLKIT


def run(cfg: CommandConfig) -> int:
    """Execute one subcommand and return its exit status.

    Toolkit errors and missing files are reported on stderr as one
    diagnostic line; the status tells them apart.
    """
    try:
        _COMMANDS[cfg.subcommand](cfg)
    except (KseToolkitError, FileNotFoundError) as exc:
        code = _exit_code(exc)
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return int(code)
    return int(ExitCode.OK)


def _add_common(parser: argparse.ArgumentParser, settings: ToolkitSettings) -> None:
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    parser.add_argument(
        "--workers",
        type=int,
        default=settings.worker_count,
        help="Threads for parallel stages; 1 runs serially.",
    )
    parser.add_argument("--dotenv", type=Path, default=None, help="Read settings from this .env file.")


def _add_analysis(parser: argparse.ArgumentParser, settings: ToolkitSettings) -> None:
    parser.add_argument("-k", "--k-neighbors", dest="k", type=int, default=settings.k_neighbors,
                        help="Nearest neighbours of the kernel entropy.")
    parser.add_argument("--alpha", type=float, default=settings.alpha,
                        help="Entropy weight of the indicator.")
    parser.add_argument("--indicator", choices=[kind.value for kind in IndicatorKind],
                        default=settings.indicator.value, help="Channel indicator.")


def _add_budget(parser: argparse.ArgumentParser, settings: ToolkitSettings) -> None:
    parser.add_argument("-G", "--granularity", type=int, default=settings.granularity,
                        help="Compression granularity G.")
    parser.add_argument("-T", "--shift", type=int, default=settings.shift,
                        help="Budget exponent shift T.")
    parser.add_argument("--seed", type=int, default=settings.seed, help="k-means seed.")


def build_parser(settings: ToolkitSettings | None = None) -> argparse.ArgumentParser:
    """Return the argument parser; defaults come from ``settings``."""
    settings = settings or ToolkitSettings.from_env()
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Kernel sparsity and entropy based CNN compression.",
        formatter_class=formatter,
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    analyze = subparsers.add_parser("analyze", help="Score input channels.", formatter_class=formatter)
    analyze.add_argument("model", type=Path, help="Dense model base path.")
    analyze.add_argument("-o", "--output", type=Path, default=None, help="Report file (JSON lines).")
    _add_analysis(analyze, settings)

    compress = subparsers.add_parser("compress", help="Cluster kernels.", formatter_class=formatter)
    compress.add_argument("model", type=Path, help="Dense model base path.")
    compress.add_argument("-o", "--output", type=Path, required=True, help="Compressed model base path.")
    compress.add_argument("-r", "--report", type=Path, default=None,
                          help="Analysis report; analysis runs inline when omitted.")
    _add_analysis(compress, settings)
    _add_budget(compress, settings)

    report = subparsers.add_parser("report", help="Print FLOPs and #Param ratios.", formatter_class=formatter)
    report.add_argument("dense", type=Path, help="Dense model base path.")
    report.add_argument("compressed", type=Path, nargs="?", default=None, help="Compressed model base path.")
    report.add_argument("--sweep", type=int, nargs="+", default=None,
                        help="Compress at each granularity instead of reading COMPRESSED.")
    report.add_argument("--json", dest="as_json", action="store_true", help="Print JSON records.")
    _add_analysis(report, settings)
    _add_budget(report, settings)

    evaluate = subparsers.add_parser("eval", help="Compare accuracy and agreement.", formatter_class=formatter)
    evaluate.add_argument("--dataset", type=Path, required=True, help="Dataset directory.")
    evaluate.add_argument("--dense", type=Path, default=None, help="Dense model base path.")
    evaluate.add_argument("--compressed", type=Path, default=None, help="Compressed model base path.")
    evaluate.add_argument("--json", dest="as_json", action="store_true", help="Print a JSON record.")

    tune = subparsers.add_parser("finetune", help="Fine-tune centroids.", formatter_class=formatter)
    tune.add_argument("model", type=Path, help="Compressed model base path.")
    tune.add_argument("--dataset", type=Path, required=True, help="Training dataset directory.")
    tune.add_argument("-o", "--output", type=Path, required=True, help="Output model base path.")
    tune.add_argument("--lr", dest="learning_rate", type=float, default=0.01, help="Learning rate.")
    tune.add_argument("--momentum", type=float, default=0.9, help="SGD momentum.")
    tune.add_argument("--epochs", type=int, default=5, help="Training epochs.")
    tune.add_argument("--batch-size", type=int, default=16, help="Examples per update.")
    tune.add_argument("--weight-decay", type=float, default=0.0, help="L2 penalty.")
    tune.add_argument("--seed", type=int, default=settings.seed, help="Shuffling seed.")

    toy = subparsers.add_parser("toy", help="Write the trained toy model and datasets.", formatter_class=formatter)
    toy.add_argument("output", type=Path, help="Output directory.")
    toy.add_argument("--n-per-class", type=int, default=16, help="Training images per class.")
    toy.add_argument("--epochs", type=int, default=8, help="Pretraining epochs.")
    toy.add_argument("--seed", type=int, default=settings.seed, help="Data and init seed.")

    study = subparsers.add_parser("study", help="Correlate kernel and feature-map statistics.",
                                  formatter_class=formatter)
    study.add_argument("model", type=Path, help="Dense model base path.")
    study.add_argument("--dataset", type=Path, required=True, help="Image dataset directory.")
    study.add_argument("--layer", required=True, help="Layer name or index.")
    study.add_argument("--quantile", type=float, default=settings.quantile, help="Mask top quantile.")
    study.add_argument("-k", "--k-neighbors", dest="k", type=int, default=settings.k_neighbors,
                       help="Nearest neighbours of the kernel entropy.")
    study.add_argument("-o", "--output", type=Path, default=None, help="Write the study as JSON.")

    for sub in subparsers.choices.values():
        _add_common(sub, settings)
    return parser


def config_from_args(args: argparse.Namespace) -> CommandConfig:
    """Map parsed arguments onto a :class:`CommandConfig`."""
    values = vars(args)
    subcommand = values["subcommand"]
    fields: dict[str, object] = {
        "subcommand": subcommand,
        "worker_count": values["workers"],
        "verbose": values["verbose"],
    }
    paths = {
        "analyze": {"model_path": "model", "output_path": "output"},
        "compress": {"model_path": "model", "output_path": "output", "report_path": "report"},
        "report": {"model_path": "dense", "compressed_path": "compressed"},
        "eval": {"model_path": "dense", "compressed_path": "compressed", "dataset_path": "dataset"},
        "finetune": {"model_path": "model", "output_path": "output", "dataset_path": "dataset"},
        "toy": {"output_path": "output"},
        "study": {"model_path": "model", "output_path": "output", "dataset_path": "dataset"},
    }[subcommand]
    fields.update({name: values[arg] for name, arg in paths.items()})
    for name in (
        "granularity", "shift", "alpha", "k", "quantile", "seed", "indicator", "as_json", "layer",
        "learning_rate", "momentum", "epochs", "batch_size", "weight_decay", "n_per_class",
    ):
        if values.get(name) is not None:
            fields[name] = values[name]
    if values.get("sweep"):
        fields["sweep"] = tuple(values["sweep"])
    return CommandConfig(**fields)


def _dotenv_path(argv: Sequence[str]) -> Path | None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--dotenv", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    return known.dotenv


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and run the selected subcommand."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        settings = ToolkitSettings.from_env(_dotenv_path(argv))
    except KseToolkitError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)
    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except KseToolkitError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)
    level = logging.DEBUG if cfg.verbose else getattr(logging, settings.log_level.upper())
    LoggerFactory.configure(level=level)
    return run(cfg)


__all__ = ["CommandConfig", "ExitCode", "build_parser", "config_from_args", "run", "main"]
