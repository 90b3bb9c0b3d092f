"""
Extraction Worker Module

Runs one extraction job per manifest video on a bounded thread pool.
Results are collected in manifest order, so the thread count never changes
the output.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import structlog
from tqdm.contrib.concurrent import thread_map

from .atoms.extract import extract_video
from .bench.manifest import DatasetManifest
from .errors import HdrVqaError, ManifestError
from .frameio import open_pair
from .jobs import JobBoard, utcnow
from .metrics import track_job_completed, update_queue_metrics
from .models import JobStatus
from .storage import FeatureStore
from .unified import ViewingGeometry

log = structlog.get_logger()


@dataclass
class ExtractionResult:
    """Per-video feature means of every finished job, and the failed jobs"""
    names: List[str]
    rows: Dict[str, Dict[str, float]] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    cached: List[str] = field(default_factory=list)


# ============================================================================
# SINGLE JOB
# ============================================================================

def process_job(
    job_id: str,
    board: JobBoard,
    manifest: DatasetManifest,
    names: Sequence[str],
    geom: ViewingGeometry,
    settings,
    store: Optional[FeatureStore] = None,
) -> Optional[Dict[str, float]]:
    """
    Extract per-video features for one manifest entry.

    Returns:
        Feature means keyed by name, or None if the job failed
    """
    job = board.get_job(job_id)
    if not job:
        log.warning("job_not_found_for_processing", job_id=job_id)
        return None

    started = utcnow()
    board.update_job_status(job_id, JobStatus.PROCESSING, started_at=started)
    log.info("job_processing_started", job_id=job_id, ref=job.ref_path, test=job.test_path)

    ref_path = manifest.resolve(job.ref_path)
    test_path = manifest.resolve(job.test_path)
    key = None
    try:
        if ref_path is None or test_path is None:
            raise ManifestError(f"Video '{job_id}' has no ref_path/test_path", video_id=job_id)
        if store is not None:
            key = store.fingerprint(job_id, ref_path, test_path, names, geom, settings.levels)
            cached = store.get(key)
            if cached is not None:
                board.update_job_status(job_id, JobStatus.COMPLETED, completed_at=utcnow())
                log.info("job_cache_hit", job_id=job_id)
                return cached

        stream = open_pair(ref_path, test_path, settings)
        video = extract_video(stream, list(names), geom, settings, video_id=job_id)
        if not video.frames:
            raise ManifestError(f"Video '{job_id}' has no frames", video_id=job_id)
        if store is not None:
            store.put(key, video.means)

        completed = utcnow()
        board.update_job_status(job_id, JobStatus.COMPLETED, completed_at=completed, frames=len(video.frames))
        duration = (completed - started).total_seconds()
        log.info("job_completed", job_id=job_id, frames=len(video.frames), duration=duration)
        track_job_completed("completed", duration)
        return video.means

    except Exception as e:
        completed = utcnow()
        error_message = str(e) or type(e).__name__
        board.update_job_status(job_id, JobStatus.FAILED, completed_at=completed, error_message=error_message)
        duration = (completed - started).total_seconds()
        if isinstance(e, (HdrVqaError, OSError)):
            log.error("job_failed", job_id=job_id, error=error_message, duration=duration)
        else:
            log.exception("job_crashed", job_id=job_id, error=error_message, duration=duration)
        track_job_completed("failed", duration)
        return None

    finally:
        update_queue_metrics(board.get_pending_jobs_count())


# ============================================================================
# MANIFEST EXTRACTION
# ============================================================================

def run_extraction(
    manifest: DatasetManifest,
    names: Sequence[str],
    geom: ViewingGeometry,
    settings,
    store: Optional[FeatureStore] = None,
    done: Optional[Dict[str, Dict[str, float]]] = None,
    threads: int = 1,
    show_progress: bool = False,
) -> ExtractionResult:
    """
    Extract every manifest video not already present in `done`.

    Args:
        names: Feature columns
        store: Optional per-video cache
        done: Rows completed by an earlier run; their jobs are skipped
        threads: Worker pool size
    """
    done = done or {}
    board = JobBoard()
    result = ExtractionResult(names=list(names))

    for entry in manifest.entries:
        board.create_job(entry.video_id, entry.ref_path, entry.test_path)
        if entry.video_id in done:
            board.update_job_status(entry.video_id, JobStatus.SKIPPED)
            result.rows[entry.video_id] = dict(done[entry.video_id])
            result.skipped.append(entry.video_id)

    pending = board.pending_job_ids()
    update_queue_metrics(len(pending))
    log.info("extraction_started", videos=len(manifest), pending=len(pending), skipped=len(result.skipped), threads=threads)

    outputs = thread_map(
        lambda job_id: process_job(job_id, board, manifest, names, geom, settings, store),
        pending,
        max_workers=threads,
        disable=not show_progress,
        desc="extract",
    )

    for job_id, means in zip(pending, outputs):
        job = board.get_job(job_id)
        if means is None:
            result.failures[job_id] = job.error_message or "unknown error"
            continue
        result.rows[job_id] = means
        if job.frames == 0:
            result.cached.append(job_id)

    log.info(
        "extraction_finished",
        completed=len(result.rows) - len(result.skipped),
        skipped=len(result.skipped),
        cached=len(result.cached),
        failed=len(result.failures),
        status_counts=board.status_counts(),
    )
    return result
