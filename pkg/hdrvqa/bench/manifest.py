"""
Dataset manifests

CSV with header `video_id,content_id,content_group,ref_path,test_path,
mos_dark,mos_bright`. In feature-matrix mode the path columns may be omitted
and per-video features come from a CSV keyed by video_id.
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from boltons.fileutils import atomic_save
from pydantic import ValidationError

from ..errors import ManifestError, MissingFeatureError
from ..models import AmbientCondition, ManifestEntry

log = structlog.get_logger()

MANIFEST_COLUMNS = ["video_id", "content_id", "content_group", "ref_path", "test_path", "mos_dark", "mos_bright"]
KEY_COLUMNS = ["video_id", "content_id", "content_group", "mos_dark", "mos_bright"]


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry]
    root: Path = field(default_factory=Path.cwd)
    features: Optional[Dict[str, Dict[str, float]]] = None

    def __post_init__(self):
        seen = set()
        groups: Dict[str, str] = {}
        for e in self.entries:
            if e.video_id in seen:
                raise ManifestError(f"Duplicate video_id '{e.video_id}'", video_id=e.video_id)
            seen.add(e.video_id)
            previous = groups.setdefault(e.content_id, e.content_group)
            if previous != e.content_group:
                raise ManifestError(
                    f"Content '{e.content_id}' appears in groups '{previous}' and '{e.content_group}'",
                    content_id=e.content_id,
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def video_ids(self) -> List[str]:
        return [e.video_id for e in self.entries]

    @property
    def groups(self) -> List[str]:
        return sorted({e.content_group for e in self.entries})

    def mos(self, condition: AmbientCondition) -> np.ndarray:
        return np.array([e.mos(AmbientCondition(condition)) for e in self.entries], dtype=np.float64)

    def resolve(self, path: Optional[str]) -> Optional[Path]:
        if not path:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    def feature_matrix(self, names: Sequence[str], rows: Optional[Dict[str, Dict[str, float]]] = None) -> np.ndarray:
        """Rows in manifest order, columns in `names` order"""
        rows = rows if rows is not None else self.features
        if rows is None:
            raise ManifestError("No per-video features are available for this manifest")
        matrix = np.empty((len(self.entries), len(names)), dtype=np.float64)
        for i, e in enumerate(self.entries):
            if e.video_id not in rows:
                raise ManifestError(f"No feature row for video '{e.video_id}'", video_id=e.video_id)
            row = rows[e.video_id]
            for j, name in enumerate(names):
                if name not in row:
                    raise MissingFeatureError(name)
                matrix[i, j] = row[name]
        return matrix


def _read_csv(path: Path) -> Tuple[List[str], List[Dict[str, str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            return header, list(reader)
    except OSError as e:
        raise ManifestError(f"Cannot read {path}: {e.strerror}", path=str(path)) from e


def read_features_csv(path) -> Dict[str, Dict[str, float]]:
    path = Path(path)
    header, rows = _read_csv(path)
    if "video_id" not in header:
        raise ManifestError(f"{path.name} is missing column 'video_id'", column="video_id")
    out = {}
    for row in rows:
        try:
            out[row["video_id"]] = {k: float(v) for k, v in row.items() if k != "video_id"}
        except (TypeError, ValueError) as e:
            raise ManifestError(f"Non-numeric feature for video '{row['video_id']}'", video_id=row["video_id"]) from e
    return out


def load_manifest(path, features_path=None) -> DatasetManifest:
    """
    Load and validate a manifest.

    Raises:
        ManifestError: missing columns, duplicate ids, bad MOS values, or
            content ids split across groups
    """
    path = Path(path)
    header, rows = _read_csv(path)
    required = list(KEY_COLUMNS) if features_path else list(MANIFEST_COLUMNS)
    for column in required:
        if column not in header:
            raise ManifestError(f"Manifest {path.name} is missing column '{column}'", column=column)

    entries = []
    for line, row in enumerate(rows, start=2):
        try:
            entries.append(ManifestEntry(
                video_id=row["video_id"],
                content_id=row["content_id"],
                content_group=row["content_group"],
                ref_path=row.get("ref_path") or None,
                test_path=row.get("test_path") or None,
                mos_dark=float(row["mos_dark"]),
                mos_bright=float(row["mos_bright"]),
            ))
        except (TypeError, ValueError, ValidationError) as e:
            raise ManifestError(f"Invalid manifest row at line {line}: {e}", line=line) from e

    features = read_features_csv(features_path) if features_path else None
    manifest = DatasetManifest(entries=entries, root=path.parent, features=features)
    log.info("manifest_loaded", path=str(path), videos=len(entries), groups=len(manifest.groups))
    return manifest


def write_manifest(path, entries: Iterable[ManifestEntry]) -> int:
    count = 0
    with atomic_save(str(path), text_mode=True) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow([
                e.video_id, e.content_id, e.content_group, e.ref_path or "", e.test_path or "",
                repr(e.mos_dark), repr(e.mos_bright),
            ])
            count += 1
    return count
