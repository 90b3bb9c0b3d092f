"""
Feature Storage Module

Completed per-video feature vectors live in a diskcache keyed by a
fingerprint of everything that determines them, so reruns skip finished
videos. The per-video CSV is always rewritten atomically.
"""
import hashlib
import json
import math
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence

import diskcache as dc
import structlog

from .atoms.extract import write_feature_csv
from .bench.manifest import read_features_csv
from .errors import ManifestError
from .unified import ViewingGeometry

log = structlog.get_logger()


def _file_signature(path: Optional[Path]) -> Optional[list]:
    if path is None or not Path(path).exists():
        return None
    stat = Path(path).stat()
    return [stat.st_size, stat.st_mtime_ns]


class FeatureStore:
    """Per-video feature cache"""

    def __init__(self, cache_dir: str = ".hdrvqa_cache"):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.cache = dc.Cache(str(self.cache_dir))
        log.info("feature_store_initialized", cache_dir=str(self.cache_dir))

    def fingerprint(
        self,
        video_id: str,
        ref_path: Optional[Path],
        test_path: Optional[Path],
        names: Sequence[str],
        geom: ViewingGeometry,
        levels: int,
    ) -> str:
        """Cache key; changes whenever a video file, the feature list or the transform setup changes"""
        payload = json.dumps({
            "video_id": video_id,
            "ref": _file_signature(ref_path),
            "test": _file_signature(test_path),
            "features": list(names),
            "geometry": [geom.distance_to_height, geom.display_height_px],
            "levels": levels,
        }, sort_keys=True)
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return f"features_{video_id}_{digest[:16]}"

    def get(self, key: str) -> Optional[Dict[str, float]]:
        return self.cache.get(key)

    def put(self, key: str, values: Mapping[str, float]):
        self.cache[key] = {k: float(v) for k, v in values.items()}
        log.debug("features_cached", key=key, features=len(values))

    def delete(self, key: str) -> bool:
        return bool(self.cache.delete(key))

    def stats(self) -> dict:
        return {
            "entries": len(self.cache),
            "size_bytes": self.cache.volume(),
            "cache_dir": str(self.cache_dir),
        }

    def close(self):
        self.cache.close()


# ============================================================================
# FEATURES CSV
# ============================================================================

def completed_rows(csv_path, names: Sequence[str]) -> Dict[str, Dict[str, float]]:
    """Rows of an existing features CSV that hold a finite value for every name"""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        return {}
    try:
        rows = read_features_csv(csv_path)
    except ManifestError as e:
        log.warning("features_csv_unreadable", path=str(csv_path), error=str(e))
        return {}
    complete = {
        video_id: {n: row[n] for n in names}
        for video_id, row in rows.items()
        if all(n in row and math.isfinite(row[n]) for n in names)
    }
    log.info("features_csv_resumed", path=str(csv_path), rows=len(complete), incomplete=len(rows) - len(complete))
    return complete


def write_features_csv(path, rows: Mapping[str, Mapping[str, float]], names: Sequence[str]) -> int:
    count = write_feature_csv(path, rows, names)
    log.info("features_csv_written", path=str(path), rows=count)
    return count


# ============================================================================
# GLOBAL STORE INSTANCE
# ============================================================================

_store_instance: Optional[FeatureStore] = None


def init_store(cache_dir: str) -> FeatureStore:
    global _store_instance
    if _store_instance is not None and _store_instance.cache_dir != Path(cache_dir):
        _store_instance.close()
    _store_instance = FeatureStore(cache_dir)
    return _store_instance
