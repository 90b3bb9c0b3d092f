"""
Evaluation protocol

Content-separated cross-validation: for every regularization value, train
one model per ambient condition on each split, score the held-out groups,
and pick the value maximizing the mean of the median PCC and SROCC across
both conditions.
"""
import csv
import io
import json
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import structlog
from boltons.fileutils import atomic_save
from tqdm.contrib.concurrent import thread_map

from ..errors import HdrVqaError, NumericFailureError
from ..fusion import predict_many, train
from ..metrics import track_split
from ..models import AmbientCondition, MetricSeries, MetricSummary, ModelSpec, ProtocolConfig, SplitReport
from .manifest import DatasetManifest
from .splits import Split, make_splits
from .stats import lower_median, pcc, rmse, srocc

log = structlog.get_logger()

CONDITIONS = (AmbientCondition.DARK, AmbientCondition.BRIGHT)

# Published LIVE-HDR medians over 1000 splits: (srocc, pcc, rmse) per condition
PUBLISHED_LIVE_HDR: Dict[str, Dict[AmbientCondition, Tuple[float, float, float]]] = {
    "PU21-PSNR": {AmbientCondition.DARK: (0.5841, 0.5767, 14.2798), AmbientCondition.BRIGHT: (0.6117, 0.5963, 13.9762)},
    "PU21-SSIM": {AmbientCondition.DARK: (0.6019, 0.6065, 13.8971), AmbientCondition.BRIGHT: (0.6403, 0.6301, 13.5188)},
    "Y-FUNQUE+": {AmbientCondition.DARK: (0.8720, 0.8301, 11.2602), AmbientCondition.BRIGHT: (0.8709, 0.8218, 11.6188)},
    "Y-FUNQUE+ +HDRMAX1": {AmbientCondition.DARK: (0.8739, 0.8326, 10.9248), AmbientCondition.BRIGHT: (0.8772, 0.8276, 11.8800)},
    "Y-FUNQUE+ +HDRMAX2": {AmbientCondition.DARK: (0.8579, 0.8080, 12.4202), AmbientCondition.BRIGHT: (0.8722, 0.8296, 15.9837)},
    "3C-FUNQUE+": {AmbientCondition.DARK: (0.8985, 0.8732, 9.4463), AmbientCondition.BRIGHT: (0.8895, 0.8576, 9.8930)},
    "3C-FUNQUE+ +HDRMAX1": {AmbientCondition.DARK: (0.9004, 0.8735, 10.5711), AmbientCondition.BRIGHT: (0.8896, 0.8524, 10.9588)},
    "3C-FUNQUE+ +HDRMAX2": {AmbientCondition.DARK: (0.9022, 0.8738, 9.2223), AmbientCondition.BRIGHT: (0.8906, 0.8583, 10.5827)},
}

SUMMARY_COLUMNS = ["model", "dark_srocc", "dark_pcc", "dark_rmse", "bright_srocc", "bright_pcc", "bright_rmse"]


class SplitOutcome(NamedTuple):
    index: int
    metrics: Optional[Dict[AmbientCondition, Tuple[float, float, float]]]
    error: Optional[str] = None


def lambda_key(lam: float) -> str:
    return repr(float(lam))


def _run_split(
    split: Split,
    spec: ModelSpec,
    X: np.ndarray,
    targets: Dict[AmbientCondition, np.ndarray],
    row_of: Dict[str, int],
    lam: float,
    seed: int,
) -> SplitOutcome:
    train_rows = [row_of[v] for v in split.train_ids]
    test_rows = [row_of[v] for v in split.test_ids]
    names = spec.all_features
    metrics = {}
    try:
        for condition in CONDITIONS:
            y = targets[condition]
            model = train(spec.for_condition(condition), X[train_rows], y[train_rows], lam, seed=seed)
            predicted = predict_many(model, X[test_rows], names)
            observed = y[test_rows]
            values = (pcc(predicted, observed), srocc(predicted, observed), rmse(predicted, observed))
            if not all(np.isfinite(values)):
                raise NumericFailureError("Non-finite split metric", [str(split.index)])
            metrics[condition] = values
    except (HdrVqaError, np.linalg.LinAlgError, FloatingPointError) as e:
        return SplitOutcome(split.index, None, str(e))
    return SplitOutcome(split.index, metrics)


def _median_summary(outcomes: List[SplitOutcome], condition: AmbientCondition) -> Tuple[MetricSeries, MetricSummary]:
    pccs = [o.metrics[condition][0] for o in outcomes]
    sroccs = [o.metrics[condition][1] for o in outcomes]
    rmses = [o.metrics[condition][2] for o in outcomes]
    series = MetricSeries(pcc=pccs, srocc=sroccs, rmse=rmses)
    summary = MetricSummary(pcc=lower_median(pccs), srocc=lower_median(sroccs), rmse=lower_median(rmses))
    return series, summary


def evaluate(
    manifest: DatasetManifest,
    spec: ModelSpec,
    protocol: ProtocolConfig = ProtocolConfig(),
    features: Optional[np.ndarray] = None,
    show_progress: bool = False,
) -> SplitReport:
    """
    Run the protocol over the lambda grid and report medians at the chosen value.

    Args:
        manifest: Videos, groups and MOS
        spec: Model to evaluate
        protocol: Splits, test fraction, lambda grid, seed, threads
        features: Per-video matrix in manifest order with columns in
            `spec.all_features` order; read from the manifest when omitted

    Raises:
        NumericFailureError: every lambda had at least one failed split
    """
    names = spec.all_features
    X = features if features is not None else manifest.feature_matrix(names)
    X = np.asarray(X, dtype=np.float64)
    targets = {c: manifest.mos(c) for c in CONDITIONS}
    row_of = {v: i for i, v in enumerate(manifest.video_ids)}
    splits = make_splits(manifest, protocol.n_splits, protocol.test_fraction, protocol.seed)

    best: Optional[Tuple[float, float, List[SplitOutcome]]] = None
    objectives: Dict[str, float] = {}
    ineligible: Dict[str, List[int]] = {}
    for lam in protocol.lambda_grid:
        outcomes = thread_map(
            lambda s: _run_split(s, spec, X, targets, row_of, lam, protocol.seed),
            splits,
            max_workers=protocol.threads,
            disable=not show_progress,
            desc=f"lambda={lam:g}",
        )
        failed = [o.index for o in outcomes if o.metrics is None]
        for condition in CONDITIONS:
            for o in outcomes:
                track_split(condition.value, failed=o.metrics is None)
        if failed:
            ineligible[lambda_key(lam)] = failed
            log.warning("lambda_ineligible", model=spec.name, lam=lam, failed_splits=failed[:20], n_failed=len(failed))
            continue

        medians = {c: _median_summary(outcomes, c)[1] for c in CONDITIONS}
        objective = float(np.mean([m for c in CONDITIONS for m in (medians[c].pcc, medians[c].srocc)]))
        objectives[lambda_key(lam)] = objective
        log.info("lambda_evaluated", model=spec.name, lam=lam, objective=objective)
        if best is None or objective > best[1]:
            best = (lam, objective, outcomes)

    if best is None:
        ids = [f"lambda={k}:split={i}" for k, idx in ineligible.items() for i in idx[:5]]
        raise NumericFailureError(f"No lambda in the grid produced finite metrics on every split for {spec.name}", ids)

    lam, _, outcomes = best
    series, medians = {}, {}
    for condition in CONDITIONS:
        series[condition], medians[condition] = _median_summary(outcomes, condition)

    report = SplitReport(
        model=spec.name,
        features=names,
        n_splits=protocol.n_splits,
        test_fraction=protocol.test_fraction,
        seed=protocol.seed,
        lambda_grid=protocol.lambda_grid,
        chosen_lambda=lam,
        objective=objectives,
        ineligible_lambdas=ineligible,
        splits=series,
        medians=medians,
    )
    log.info(
        "evaluation_completed",
        model=spec.name,
        lam=lam,
        dark_srocc=medians[AmbientCondition.DARK].srocc,
        bright_srocc=medians[AmbientCondition.BRIGHT].srocc,
    )
    return report


def tune_lambda(
    manifest: DatasetManifest,
    spec: ModelSpec,
    protocol: ProtocolConfig = ProtocolConfig(),
    features: Optional[np.ndarray] = None,
) -> float:
    """Regularization chosen by the evaluation objective"""
    return evaluate(manifest, spec, protocol, features).chosen_lambda


# ============================================================================
# REPORTS
# ============================================================================

def report_json(report: SplitReport) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def summary_row(report: SplitReport) -> List[float]:
    row = []
    for condition in CONDITIONS:
        m = report.medians[condition]
        row += [m.srocc, m.pcc, m.rmse]
    return row


def compare_to_published(report: SplitReport) -> Optional[Dict[str, float]]:
    """Measured minus published median, per summary column; None for unpublished models"""
    published = PUBLISHED_LIVE_HDR.get(report.model)
    if published is None:
        return None
    expected = [v for c in CONDITIONS for v in published[c]]
    return {col: got - want for col, got, want in zip(SUMMARY_COLUMNS[1:], summary_row(report), expected)}


def summary_csv(reports: List[SplitReport], with_published: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(SUMMARY_COLUMNS)
    if with_published:
        header += [f"delta_{c}" for c in SUMMARY_COLUMNS[1:]]
    writer.writerow(header)
    for report in reports:
        row = [report.model, *(f"{v:.4f}" for v in summary_row(report))]
        if with_published:
            deltas = compare_to_published(report)
            row += [f"{deltas[c]:+.4f}" if deltas else "" for c in SUMMARY_COLUMNS[1:]]
        writer.writerow(row)
    return buf.getvalue()


def write_report(report: SplitReport, json_path, csv_path=None, with_published: bool = False):
    with atomic_save(str(json_path), text_mode=True) as f:
        f.write(report_json(report))
    if csv_path is not None:
        with atomic_save(str(csv_path), text_mode=True) as f:
            f.write(summary_csv([report], with_published))
    log.info("report_written", json_path=str(json_path), csv_path=str(csv_path) if csv_path else None)
