"""
Command-line front end

    hdrvqa score REF TEST --model NAME|MODEL.json [--hdrmax H1|H2]
    hdrvqa extract MANIFEST --model NAME --out features.csv
    hdrvqa train --manifest M [--features F] --model NAME (--lambda L | --tune) --out model.json
    hdrvqa evaluate --manifest M [--features F] --model NAME [--splits N]
    hdrvqa plot-nonlinearities OUT_DIR [--svg] [--csf]
    hdrvqa synth OUT_DIR

Machine output goes to stdout or files; logs and errors go to stderr as JSON
lines. Exit codes: 0 success, 2 usage or input error, 3 numeric failure.
"""
import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from boltons.fileutils import atomic_save
from pydantic import ValidationError

from . import __version__
from .atoms.extract import extract_video, frame_json
from .bench.manifest import DatasetManifest, load_manifest
from .bench.protocol import CONDITIONS, evaluate, report_json, summary_csv, tune_lambda
from .bench.synth import synth_dataset
from .config import Settings, load_settings
from .errors import EXIT_NUMERIC, EXIT_USAGE, HdrVqaError, ManifestError, UnsupportedFormatError
from .frameio import open_pair
from .fusion import predict, save_model, train
from .metrics import write_metrics
from .model_manager import get_model_manager
from .models import AmbientCondition, HdrmaxVariant, ModelSpec, ProtocolConfig, TrainedModel
from .storage import FeatureStore, completed_rows, init_store, write_features_csv
from .transfer import NONLINEARITY_HEADER, nonlinearity_table, write_nonlinearity_csv
from .unified import CSF_TABLE_HEADER, ViewingGeometry, csf_table_rows
from .workers import run_extraction

log = structlog.get_logger()

NONLINEARITY_CSV = "hdrmax_nonlinearities.csv"
NONLINEARITY_SVG = "hdrmax_nonlinearities.svg"
CSF_CSV = "csf_weights.csv"


# ============================================================================
# LOGGING
# ============================================================================

def configure_logging(debug: bool = False):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if debug else logging.INFO,
        format="%(message)s",
        force=True,
    )
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_log_level,
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def _emit_error(detail: dict):
    sys.stderr.write(json.dumps(detail, default=str) + "\n")


# ============================================================================
# ARGUMENTS
# ============================================================================

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file of settings (flags override it)")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--threads", type=int, help="Worker threads; never changes the output")
    common.add_argument("--geometry", help="Viewing geometry D_H:HEIGHT_PX, e.g. 1.5:2160")
    common.add_argument("--levels", type=int, help="Wavelet levels")
    common.add_argument("--debug", action="store_true", default=None, help="Debug logging")
    common.add_argument("--profile", action="store_true", help="Print a pyinstrument profile to stderr")
    common.add_argument("--metrics-out", type=Path, help="Write Prometheus metrics here on exit")
    return common


def _model_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--model", required=required, help="Built-in model name or trained model file")
    p.add_argument(
        "--hdrmax",
        action="append",
        choices=[v.value for v in HdrmaxVariant],
        default=[],
        help="Add HDRMAX side-channel features (repeatable)",
    )


def _dataset_args(p: argparse.ArgumentParser):
    p.add_argument("--manifest", type=Path, required=True, help="Dataset manifest CSV")
    p.add_argument("--features", type=Path, help="Per-video features CSV (skips extraction)")
    p.add_argument("--no-cache", action="store_true", help="Do not use the feature cache")


def _lambda_grid(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid lambda grid '{value}'") from e


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="hdrvqa",
        description="HDR video quality: FUNQUE+ features, HDRMAX, fusion training and evaluation",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    score = subparsers.add_parser("score", parents=[common], help="Score one reference/test pair")
    score.add_argument("ref", type=Path, help="Reference video (.y4m or raw .yuv)")
    score.add_argument("test", type=Path, help="Test video (.y4m or raw .yuv)")
    _model_args(score)
    score.add_argument("--out", type=Path, help="JSONL output (default: stdout)")
    score.add_argument("--video-id", help="Identifier written into every line (default: test file stem)")

    extract = subparsers.add_parser("extract", parents=[common], help="Extract per-video features for a manifest")
    extract.add_argument("manifest", type=Path, help="Dataset manifest CSV")
    _model_args(extract)
    extract.add_argument("--out", type=Path, required=True, help="Features CSV; complete rows are reused")
    extract.add_argument("--no-cache", action="store_true", help="Do not use the feature cache")

    train_p = subparsers.add_parser("train", parents=[common], help="Fit a fusion model")
    _dataset_args(train_p)
    _model_args(train_p)
    train_p.add_argument(
        "--condition",
        choices=["dark", "bright", "both"],
        default="both",
        help="MOS column(s) to fit",
    )
    lam = train_p.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float, help="Ridge penalty")
    lam.add_argument("--tune", action="store_true", help="Choose the penalty by cross-validation")
    train_p.add_argument("--splits", type=int, help="Splits used by --tune")
    train_p.add_argument("--lambda-grid", type=_lambda_grid, help="Comma-separated grid for --tune")
    train_p.add_argument("--out", type=Path, required=True, help="Model JSON (per-condition suffix with --condition both)")

    evaluate_p = subparsers.add_parser("evaluate", parents=[common], help="Content-separated cross-validation")
    _dataset_args(evaluate_p)
    _model_args(evaluate_p)
    evaluate_p.add_argument("--splits", type=int, help="Number of random splits")
    evaluate_p.add_argument("--test-fraction", type=float, help="Fraction of content groups held out")
    evaluate_p.add_argument("--lambda-grid", type=_lambda_grid, help="Comma-separated ridge penalties")
    evaluate_p.add_argument("--out", type=Path, help="Report JSON (default: stdout)")
    evaluate_p.add_argument("--summary-csv", type=Path, help="Summary CSV of median accuracies")
    evaluate_p.add_argument("--compare-published", action="store_true", help="Add deltas to published accuracies")

    plot = subparsers.add_parser("plot-nonlinearities", parents=[common], help="Dump the HDRMAX curves")
    plot.add_argument("out_dir", type=Path, help="Output directory")
    plot.add_argument("--samples", type=int, default=1001, help="Samples over [-1, 1]")
    plot.add_argument("--svg", action="store_true", help="Also render an SVG (needs matplotlib)")
    plot.add_argument("--csf", action="store_true", help="Also dump the CSF subband weights for the geometry")

    synth = subparsers.add_parser("synth", parents=[common], help="Write a synthetic dataset")
    synth.add_argument("out_dir", type=Path, help="Output directory")
    synth.add_argument("--contents", type=int, default=10, help="Number of source contents")
    synth.add_argument("--distortion-levels", type=int, default=5, help="Distortion levels per content (0 = pristine)")
    synth.add_argument("--frames", type=int, default=8, help="Frames per video")
    synth.add_argument("--width", type=int, default=96)
    synth.add_argument("--height", type=int, default=96)
    synth.add_argument("--bit-depth", type=int, choices=[8, 10, 12], default=10)

    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "levels": args.levels,
        "debug": args.debug,
        "n_splits": getattr(args, "splits", None),
        "test_fraction": getattr(args, "test_fraction", None),
        "lambda_grid": getattr(args, "lambda_grid", None),
    }
    if args.geometry:
        geom = ViewingGeometry.parse(args.geometry)
        overrides["distance_to_height"] = geom.distance_to_height
        overrides["display_height_px"] = geom.display_height_px
    return load_settings(args.config, **overrides)


def protocol_from_settings(settings: Settings) -> ProtocolConfig:
    return ProtocolConfig(
        n_splits=settings.n_splits,
        test_fraction=settings.test_fraction,
        lambda_grid=settings.lambda_grid,
        seed=settings.seed,
        threads=settings.threads,
    )


# ============================================================================
# SHARED STEPS
# ============================================================================

def _resolve_spec(args: argparse.Namespace) -> ModelSpec:
    resolved = get_model_manager().resolve(args.model, args.hdrmax)
    return resolved.spec if isinstance(resolved, TrainedModel) else resolved


def _store(settings: Settings, disabled: bool) -> Optional[FeatureStore]:
    return None if disabled else init_store(settings.cache_dir)


def _dataset_features(
    args: argparse.Namespace,
    settings: Settings,
    spec: ModelSpec,
) -> Tuple[DatasetManifest, np.ndarray]:
    """Manifest plus its feature matrix, read from --features or extracted"""
    manifest = load_manifest(args.manifest, args.features)
    names = spec.all_features
    if manifest.features is not None:
        return manifest, manifest.feature_matrix(names)

    result = run_extraction(
        manifest,
        names,
        ViewingGeometry.from_settings(settings),
        settings,
        store=_store(settings, args.no_cache),
        threads=settings.threads,
    )
    if result.failures:
        raise ManifestError(
            f"Feature extraction failed for {len(result.failures)} video(s)",
            failures=result.failures,
        )
    return manifest, manifest.feature_matrix(names, result.rows)


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_score(args: argparse.Namespace, settings: Settings) -> int:
    resolved = get_model_manager().resolve(args.model, args.hdrmax)
    trained = resolved if isinstance(resolved, TrainedModel) else None
    spec = trained.spec if trained else resolved
    geom = ViewingGeometry.from_settings(settings)
    video_id = args.video_id or args.test.stem

    stream = open_pair(args.ref, args.test, settings)
    video = extract_video(stream, spec, geom, settings, video_id=video_id)

    summary = {
        "video_id": video_id,
        "model": spec.name,
        "frames": len(video.frames),
        "features": video.means,
    }
    if trained is not None and video.frames:
        summary["predicted_mos"] = predict(trained, video.means)
        summary["condition"] = trained.spec.target_condition.value
    lines = [frame_json(video_id, r) for r in video.frames]
    lines.append(json.dumps({"summary": summary}))

    if args.out:
        with atomic_save(str(args.out), text_mode=True) as f:
            f.write("".join(line + "\n" for line in lines))
    else:
        sys.stdout.write("".join(line + "\n" for line in lines))
    log.info("video_scored", video_id=video_id, model=spec.name, frames=len(video.frames),
             predicted_mos=summary.get("predicted_mos"))
    return 0


def cmd_extract(args: argparse.Namespace, settings: Settings) -> int:
    spec = _resolve_spec(args)
    names = spec.all_features
    manifest = load_manifest(args.manifest)
    done = completed_rows(args.out, names)

    result = run_extraction(
        manifest,
        names,
        ViewingGeometry.from_settings(settings),
        settings,
        store=_store(settings, args.no_cache),
        done=done,
        threads=settings.threads,
    )
    if len(result.rows) > len(result.skipped) or not args.out.exists():
        write_features_csv(args.out, result.rows, names)
    else:
        log.info("features_up_to_date", path=str(args.out), rows=len(result.rows))

    for video_id, message in result.failures.items():
        _emit_error({"error": "extraction_failed", "video_id": video_id, "message": message})
    if result.failures:
        _emit_error({
            "error": "extraction_incomplete",
            "message": f"{len(result.failures)} of {len(manifest)} videos failed",
            "failed": list(result.failures),
        })
        return EXIT_USAGE
    return 0


def _condition_path(out: Path, condition: AmbientCondition, both: bool) -> Path:
    if not both:
        return out
    return out.with_name(f"{out.stem}.{condition.value}{out.suffix or '.json'}")


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    spec = _resolve_spec(args)
    manifest, X = _dataset_features(args, settings, spec)

    if args.tune:
        lam = tune_lambda(manifest, spec, protocol_from_settings(settings), features=X)
        log.info("lambda_tuned", model=spec.name, lam=lam)
    else:
        lam = args.lam

    both = args.condition == "both"
    conditions = CONDITIONS if both else (AmbientCondition(args.condition),)
    for condition in conditions:
        model = train(spec.for_condition(condition), X, manifest.mos(condition), lam, seed=settings.seed)
        path = _condition_path(args.out, condition, both)
        with atomic_save(str(path), text_mode=False) as f:
            f.write(save_model(model))
        log.info("model_saved", path=str(path), model=spec.name, condition=condition.value, lam=lam,
                 features=len(model.features))
    return 0


def cmd_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    spec = _resolve_spec(args)
    manifest, X = _dataset_features(args, settings, spec)
    report = evaluate(manifest, spec, protocol_from_settings(settings), features=X)

    payload = report_json(report)
    if args.out:
        with atomic_save(str(args.out), text_mode=True) as f:
            f.write(payload)
    else:
        sys.stdout.write(payload)
    if args.summary_csv:
        with atomic_save(str(args.summary_csv), text_mode=True) as f:
            f.write(summary_csv([report], with_published=args.compare_published))

    for condition in CONDITIONS:
        m = report.medians[condition]
        log.info("median_accuracy", model=report.model, condition=condition.value,
                 srocc=round(m.srocc, 4), pcc=round(m.pcc, 4), rmse=round(m.rmse, 4))
    return 0


def _render_svg(path: Path, rows: Sequence[Sequence[float]]):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise UnsupportedFormatError("SVG output needs matplotlib; install the 'plot' extra") from e

    plt.rcParams["svg.hashsalt"] = "hdrvqa"
    table = np.asarray(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for col, label in enumerate(NONLINEARITY_HEADER[1:], start=1):
        ax.plot(table[:, 0], table[:, col], label=label)
    ax.set_xlabel("locally normalized luma")
    ax.set_ylabel("output")
    ax.grid(True, alpha=0.3)
    ax.legend()
    with atomic_save(str(path), text_mode=False) as f:
        fig.savefig(f, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_plot_nonlinearities(args: argparse.Namespace, settings: Settings) -> int:
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    count = write_nonlinearity_csv(out_dir / NONLINEARITY_CSV, args.samples)
    log.info("nonlinearities_written", path=str(out_dir / NONLINEARITY_CSV), rows=count)

    if args.svg:
        _render_svg(out_dir / NONLINEARITY_SVG, nonlinearity_table(args.samples))
    if args.csf:
        rows = csf_table_rows(ViewingGeometry.from_settings(settings), settings.levels, flat=settings.csf == "flat")
        with atomic_save(str(out_dir / CSF_CSV), text_mode=True) as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSF_TABLE_HEADER)
            writer.writerows([level, orientation, repr(weight)] for level, orientation, weight in rows)
    return 0


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    path = synth_dataset(
        args.out_dir,
        n_contents=args.contents,
        n_levels=args.distortion_levels,
        frames=args.frames,
        dims=(args.width, args.height),
        seed=settings.seed,
        bit_depth=args.bit_depth,
    )
    sys.stdout.write(f"{path}\n")
    return 0


COMMANDS = {
    "score": cmd_score,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "plot-nonlinearities": cmd_plot_nonlinearities,
    "synth": cmd_synth,
}


# ============================================================================
# ENTRY POINT
# ============================================================================

def run(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    configure_logging(settings.debug)
    log.debug("command_started", command=args.command, seed=settings.seed, threads=settings.threads)

    profiler = None
    if args.profile:
        from pyinstrument import Profiler

        profiler = Profiler()
        profiler.start()
    try:
        return COMMANDS[args.command](args, settings)
    finally:
        if profiler is not None:
            profiler.stop()
            sys.stderr.write(profiler.output_text(unicode=True, color=False))
        if args.metrics_out:
            write_metrics(args.metrics_out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(bool(args.debug))
    try:
        return run(args)
    except HdrVqaError as e:
        _emit_error(e.detail())
        return e.exit_code
    except ValidationError as e:
        _emit_error({"error": "invalid_settings", "message": str(e)})
        return EXIT_USAGE
    except OSError as e:
        _emit_error({"error": "io_error", "message": str(e), "path": e.filename})
        return EXIT_USAGE
    except ValueError as e:
        # malformed config files and invalid flag values
        _emit_error({"error": "invalid_input", "message": str(e)})
        return EXIT_USAGE
    except Exception as e:
        log.exception("internal_error")
        _emit_error({"error": "internal_error", "message": str(e), "type": type(e).__name__})
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
