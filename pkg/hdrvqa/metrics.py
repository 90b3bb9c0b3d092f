"""
Prometheus instrumentation

Counters and histograms for transforms, feature atoms, extraction jobs and
evaluation splits. Nothing is served; the registry can be dumped to a file
with --metrics-out.
"""
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Union

import structlog
from boltons.fileutils import atomic_save
from prometheus_client import REGISTRY, Counter, Gauge, Histogram, generate_latest

log = structlog.get_logger()

# ============================================================================
# METRICS DEFINITIONS
# ============================================================================

# Transform metrics
unified_transforms_total = Counter(
    "hdrvqa_unified_transforms_total",
    "Number of unified transforms computed",
    ["role", "plane", "kind"],
)

frames_processed_total = Counter(
    "hdrvqa_frames_processed_total",
    "Number of frame pairs whose features were extracted",
)

feature_seconds = Histogram(
    "hdrvqa_feature_seconds",
    "Time spent computing one feature atom on one frame pair",
    ["feature"],
    buckets=(0.0005, 0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5),
)

# ============================================================================
# EXTRACTION JOB METRICS
# ============================================================================

job_status_total = Counter(
    "hdrvqa_job_status_total",
    "Number of extraction jobs by final status",
    ["status"],
)

job_processing_duration = Histogram(
    "hdrvqa_job_processing_duration_seconds",
    "Extraction job duration in seconds",
    ["status"],
    buckets=(0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 60.0, 120.0, 300.0),
)

job_queue_length = Gauge(
    "hdrvqa_job_queue_length",
    "Number of extraction jobs not yet processed",
)

# ============================================================================
# EVALUATION METRICS
# ============================================================================

splits_evaluated_total = Counter(
    "hdrvqa_splits_evaluated_total",
    "Number of train/test splits evaluated",
    ["condition"],
)

split_failures_total = Counter(
    "hdrvqa_split_failures_total",
    "Number of train/test splits that failed to produce metrics",
    ["condition"],
)


# ============================================================================
# METRIC TRACKING FUNCTIONS
# ============================================================================

def track_transform(role: str, plane: str, kind: str):
    unified_transforms_total.labels(role=role, plane=plane, kind=kind).inc()


def track_frame():
    frames_processed_total.inc()


@contextmanager
def time_feature(name: str) -> Iterator[None]:
    """Observe the wall time of a feature computation"""
    start = time.perf_counter()
    try:
        yield
    finally:
        feature_seconds.labels(feature=name).observe(time.perf_counter() - start)


def track_job_completed(status: str, duration_seconds: float):
    job_status_total.labels(status=status).inc()
    job_processing_duration.labels(status=status).observe(duration_seconds)


def update_queue_metrics(pending_count: int):
    job_queue_length.set(pending_count)


def track_split(condition: str, failed: bool = False):
    splits_evaluated_total.labels(condition=condition).inc()
    if failed:
        split_failures_total.labels(condition=condition).inc()


def transform_count(role: str, plane: str, kind: str) -> float:
    """Current value of the unified transform counter for one label set"""
    value = REGISTRY.get_sample_value(
        "hdrvqa_unified_transforms_total", {"role": role, "plane": plane, "kind": kind}
    )
    return value or 0.0


def get_metrics() -> bytes:
    """Prometheus metrics in text exposition format"""
    log.debug("metrics_requested")
    return generate_latest()


def write_metrics(path: Union[str, Path]):
    with atomic_save(str(path), text_mode=False) as f:
        f.write(get_metrics())
    log.info("metrics_written", path=str(path))
