"""
Extraction jobs

One job per manifest video. The board is an in-memory, lock-guarded record
of job state plus a FIFO of job ids still to be processed.
"""
import threading
from datetime import datetime, timezone
from typing import Dict, List, Optional

from .models import ExtractionJob, JobStatus


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


class JobBoard:
    """Thread-safe job store and queue"""

    def __init__(self):
        self._jobs: Dict[str, ExtractionJob] = {}
        self._queue: List[str] = []
        self._lock = threading.Lock()

    # ========================================================================
    # JOB CRUD OPERATIONS
    # ========================================================================

    def create_job(self, video_id: str, ref_path: Optional[str] = None, test_path: Optional[str] = None) -> ExtractionJob:
        """
        Register a video for extraction and enqueue it.

        Args:
            video_id: Manifest video id, used as the job id
            ref_path: Reference video path
            test_path: Test video path

        Returns:
            ExtractionJob: the new pending job
        """
        job = ExtractionJob(
            job_id=video_id,
            ref_path=ref_path,
            test_path=test_path,
            status=JobStatus.PENDING,
            created_at=utcnow(),
        )
        with self._lock:
            if video_id in self._jobs:
                raise ValueError(f"Duplicate job id '{video_id}'")
            self._jobs[video_id] = job
            self._queue.append(video_id)
        return job

    def get_job(self, job_id: str) -> Optional[ExtractionJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def update_job_status(
        self,
        job_id: str,
        status: JobStatus,
        started_at: Optional[datetime] = None,
        completed_at: Optional[datetime] = None,
        frames: Optional[int] = None,
        error_message: Optional[str] = None,
    ) -> Optional[ExtractionJob]:
        """
        Update job status and related fields.

        Returns:
            Updated job if found, None otherwise
        """
        with self._lock:
            job = self._jobs.get(job_id)
            if not job:
                return None
            job.status = JobStatus(status).value
            if started_at:
                job.started_at = started_at
            if completed_at:
                job.completed_at = completed_at
            if frames is not None:
                job.frames = frames
            if error_message:
                job.error_message = error_message
            if job_id in self._queue and status != JobStatus.PENDING:
                self._queue.remove(job_id)
            return job

    def list_jobs(self, status: Optional[JobStatus] = None) -> List[ExtractionJob]:
        """Jobs in creation order, optionally filtered by status"""
        with self._lock:
            jobs = list(self._jobs.values())
        if status is not None:
            jobs = [j for j in jobs if j.status == status]
        return jobs

    def failed_jobs(self) -> List[ExtractionJob]:
        return self.list_jobs(JobStatus.FAILED)

    # ========================================================================
    # QUEUE OPERATIONS
    # ========================================================================

    def get_next_job_id(self) -> Optional[str]:
        """Pop the next job id (FIFO)"""
        with self._lock:
            if self._queue:
                return self._queue.pop(0)
            return None

    def pending_job_ids(self) -> List[str]:
        with self._lock:
            return list(self._queue)

    def get_queue_length(self) -> int:
        with self._lock:
            return len(self._queue)

    def get_pending_jobs_count(self) -> int:
        with self._lock:
            return sum(1 for job in self._jobs.values() if job.status == JobStatus.PENDING)

    def status_counts(self) -> Dict[str, int]:
        with self._lock:
            counts: Dict[str, int] = {}
            for job in self._jobs.values():
                counts[job.status] = counts.get(job.status, 0) + 1
            return counts
