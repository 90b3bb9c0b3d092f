"""
Per-frame and per-video feature extraction

Builds only the transforms a model needs, evaluates its features in order,
back-fills temporal features of the first frame and averages over frames.
"""
import csv
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import structlog
from boltons.fileutils import atomic_save

from ..errors import DomainError
from ..frameio import PlanarFrame, VideoPairStream
from ..metrics import time_feature, track_frame
from ..models import ModelSpec
from ..unified import FrameTransforms, ViewingGeometry
from .registry import FeatureContext, get_feature

log = structlog.get_logger()

FrameLike = Union[PlanarFrame, FrameTransforms]


@dataclass(frozen=True)
class FeatureRecord:
    """Ordered feature values of one frame pair; every value is finite"""
    frame_index: int
    values: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        ordered = {}
        for name, value in self.values.items():
            get_feature(name)
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"Feature {name} is not finite at frame {self.frame_index}", feature=name)
            ordered[name] = value
        object.__setattr__(self, "values", MappingProxyType(ordered))

    @property
    def names(self) -> List[str]:
        return list(self.values)

    def as_dict(self) -> Dict[str, float]:
        return dict(self.values)


@dataclass
class VideoFeatures:
    """Frame records and their per-feature means"""
    video_id: str
    frames: List[FeatureRecord]
    means: Dict[str, float]


def feature_names(model: Union[ModelSpec, Sequence[str]]) -> List[str]:
    if isinstance(model, ModelSpec):
        return model.all_features
    names = list(model)
    for name in names:
        get_feature(name)
    return names


def _as_transforms(frame: Optional[FrameLike], geom: ViewingGeometry, role: str, settings) -> Optional[FrameTransforms]:
    if frame is None or isinstance(frame, FrameTransforms):
        return frame
    return FrameTransforms(frame, geom, role=role, settings=settings)


def extract_frame_features(
    ref: FrameLike,
    test: FrameLike,
    prev_ref: Optional[FrameLike],
    prev_test: Optional[FrameLike],
    model: Union[ModelSpec, Sequence[str]],
    geom: ViewingGeometry,
    settings=None,
) -> FeatureRecord:
    """
    Evaluate every feature of `model` on one frame pair.

    Temporal features are 0 when no previous pair is given.

    Raises:
        RegistryError: an unknown feature name
    """
    names = feature_names(model)
    ctx = FeatureContext(
        ref=_as_transforms(ref, geom, "ref", settings),
        test=_as_transforms(test, geom, "test", settings),
        prev_ref=_as_transforms(prev_ref, geom, "ref", settings),
        prev_test=_as_transforms(prev_test, geom, "test", settings),
    )
    values = {}
    for name in names:
        with time_feature(name):
            values[name] = get_feature(name).compute(ctx)
    track_frame()
    return FeatureRecord(frame_index=ctx.ref.frame.frame_index, values=values)


def backfill_first_frame(records: List[FeatureRecord]) -> List[FeatureRecord]:
    """Copy the second frame's temporal features into the first"""
    if len(records) < 2:
        return records
    first, second = records[0], records[1]
    patched = {
        name: second.values[name] if get_feature(name).temporal else value
        for name, value in first.values.items()
    }
    return [FeatureRecord(first.frame_index, patched), *records[1:]]


def aggregate(records: Sequence[FeatureRecord]) -> Dict[str, float]:
    """Arithmetic mean of each feature over frames"""
    if not records:
        return {}
    names = records[0].names
    return {name: math.fsum(r.values[name] for r in records) / len(records) for name in names}


def extract_video(
    stream: VideoPairStream,
    model: Union[ModelSpec, Sequence[str]],
    geom: ViewingGeometry,
    settings=None,
    video_id: str = "",
    on_frame: Optional[Callable[[FeatureRecord], None]] = None,
) -> VideoFeatures:
    """
    Stream a video pair and extract features frame by frame. Only the
    previous pair's transforms are kept alive.
    """
    names = feature_names(model)
    records: List[FeatureRecord] = []
    prev_ref = prev_test = None
    for ref_frame, test_frame in stream:
        ref = FrameTransforms(ref_frame, geom, role="ref", settings=settings)
        test = FrameTransforms(test_frame, geom, role="test", settings=settings)
        record = extract_frame_features(ref, test, prev_ref, prev_test, names, geom, settings)
        records.append(record)
        if on_frame is not None and record.frame_index > 0:
            on_frame(record)
        prev_ref, prev_test = ref, test

    records = backfill_first_frame(records)
    if on_frame is not None and records:
        # frame 0 is emitted last, once its temporal values are known
        on_frame(records[0])
    log.info("video_features_extracted", video_id=video_id, frames=len(records), features=len(names))
    return VideoFeatures(video_id=video_id, frames=records, means=aggregate(records))


# ============================================================================
# DUMPS
# ============================================================================

def frame_json(video_id: str, record: FeatureRecord) -> str:
    return json.dumps({"video_id": video_id, "frame_index": record.frame_index, "features": record.as_dict()})


def write_feature_csv(path, rows: Mapping[str, Mapping[str, float]], names: Sequence[str]) -> int:
    """One row per video, one column per feature"""
    with atomic_save(str(path), text_mode=True) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["video_id", *names])
        for video_id in sorted(rows):
            writer.writerow([video_id, *(repr(float(rows[video_id][n])) for n in names)])
    return len(rows)
