import math
from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MODEL_FORMAT_VERSION = 1


# ============================================================================
# ENUMERATIONS
# ============================================================================

class ChromaSubsampling(str, Enum):
    """Chroma sampling layout of a planar frame"""
    YUV420 = "420"
    YUV444 = "444"


class Plane(str, Enum):
    """Colour plane of a planar frame"""
    Y = "Y"
    CB = "Cb"
    CR = "Cr"


class HdrmaxVariant(str, Enum):
    """HDRMAX augmentation requested by a model"""
    H1 = "H1"
    H2 = "H2"


class HdrmaxChannel(str, Enum):
    """A single HDRMAX preprocessing chain"""
    H1 = "H1"
    H2_POS = "H2_POS"
    H2_NEG = "H2_NEG"


class AmbientCondition(str, Enum):
    """Viewing condition a MOS column was collected under"""
    DARK = "dark"
    BRIGHT = "bright"


class CurveName(str, Enum):
    """Curves that can be sampled for plotting"""
    HDRMAX1 = "HDRMAX1"
    HDRMAX2_POS = "HDRMAX2_POS"
    HDRMAX2_NEG = "HDRMAX2_NEG"
    PU21 = "PU21"
    PQ_EOTF = "PQ_EOTF"


class JobStatus(str, Enum):
    """Extraction job status"""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    SKIPPED = "skipped"
    FAILED = "failed"


HDRMAX_CHANNELS: Dict[HdrmaxVariant, List[HdrmaxChannel]] = {
    HdrmaxVariant.H1: [HdrmaxChannel.H1],
    HdrmaxVariant.H2: [HdrmaxChannel.H2_POS, HdrmaxChannel.H2_NEG],
}


# ============================================================================
# DATASET
# ============================================================================

class ManifestEntry(BaseModel):
    """One (reference, test) video with its subjective scores"""
    video_id: str = Field(..., min_length=1)
    content_id: str = Field(..., min_length=1)
    content_group: str = Field(..., min_length=1)
    ref_path: Optional[str] = None
    test_path: Optional[str] = None
    mos_dark: float
    mos_bright: float

    @field_validator("mos_dark", "mos_bright")
    @classmethod
    def validate_mos(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("MOS must be finite")
        return v

    def mos(self, condition: AmbientCondition) -> float:
        return self.mos_dark if condition == AmbientCondition.DARK else self.mos_bright


# ============================================================================
# FUSION MODELS
# ============================================================================

class ModelSpec(BaseModel):
    """Declarative feature list of a fusion model"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    features: List[str] = Field(..., min_length=1)
    hdrmax_variants: List[HdrmaxVariant] = Field(default_factory=list)
    target_condition: AmbientCondition = AmbientCondition.DARK

    @field_validator("features")
    @classmethod
    def validate_features(cls, v: List[str]) -> List[str]:
        from .atoms.registry import get_feature

        if len(set(v)) != len(v):
            duplicates = sorted({name for name in v if v.count(name) > 1})
            raise ValueError(f"Duplicate features: {', '.join(duplicates)}")
        for name in v:
            get_feature(name)
        return v

    def for_condition(self, condition: AmbientCondition) -> "ModelSpec":
        return self.model_copy(update={"target_condition": condition})

    def with_hdrmax(self, variant: HdrmaxVariant) -> "ModelSpec":
        """Copy augmented with one HDRMAX side channel, named e.g. `3C-FUNQUE+ +HDRMAX2`"""
        variant = HdrmaxVariant(variant)
        if variant in self.hdrmax_variants:
            return self
        suffix = "HDRMAX1" if variant == HdrmaxVariant.H1 else "HDRMAX2"
        return self.model_copy(update={
            "name": f"{self.name} +{suffix}",
            "hdrmax_variants": [*self.hdrmax_variants, variant],
        })

    @property
    def all_features(self) -> List[str]:
        """Declared features followed by the HDRMAX side-channel features"""
        from .atoms.registry import hdrmax_feature_names

        names = list(self.features)
        for variant in self.hdrmax_variants:
            names += [n for n in hdrmax_feature_names(variant) if n not in names]
        return names


class Standardization(BaseModel):
    """Per-feature training-set statistics"""
    means: List[float]
    stds: List[float]


class TrainingMetadata(BaseModel):
    training_hash: str
    n_train: int
    seed: Optional[int] = None
    dropped_features: List[str] = Field(default_factory=list)


class TrainedModel(BaseModel):
    """Fitted ridge regressor over standardized features"""
    model_config = ConfigDict(populate_by_name=True)

    version: int = MODEL_FORMAT_VERSION
    spec: ModelSpec
    features: List[str] = Field(..., description="Retained features, in spec order")
    standardization: Standardization
    weights: List[float]
    intercept: float
    lambda_: float = Field(..., alias="lambda", ge=0)
    metadata: TrainingMetadata

    @model_validator(mode="after")
    def validate_shapes(self) -> "TrainedModel":
        n = len(self.features)
        if not (len(self.weights) == len(self.standardization.means) == len(self.standardization.stds) == n):
            raise ValueError("weights and standardization must match the retained feature count")
        if any(s <= 0 for s in self.standardization.stds):
            raise ValueError("standard deviations must be positive")
        return self


# ============================================================================
# EVALUATION
# ============================================================================

class ProtocolConfig(BaseModel):
    """Content-separated cross-validation protocol"""
    n_splits: int = Field(default=1000, ge=1)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    lambda_grid: List[float] = Field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3])
    seed: int = 0
    threads: int = Field(default=1, ge=1)

    @field_validator("lambda_grid")
    @classmethod
    def validate_grid(cls, v: List[float]) -> List[float]:
        if not v or any(lam < 0 for lam in v):
            raise ValueError("lambda grid must be non-empty and non-negative")
        return sorted(set(v))


class MetricSeries(BaseModel):
    """Per-split accuracy for one ambient condition"""
    pcc: List[float]
    srocc: List[float]
    rmse: List[float]


class MetricSummary(BaseModel):
    pcc: float
    srocc: float
    rmse: float


class SplitReport(BaseModel):
    """Accuracy over all splits at the selected regularization"""
    model: str
    features: List[str]
    n_splits: int
    test_fraction: float
    seed: int
    lambda_grid: List[float]
    chosen_lambda: float
    objective: Dict[str, float]
    ineligible_lambdas: Dict[str, List[int]] = Field(default_factory=dict)
    splits: Dict[AmbientCondition, MetricSeries]
    medians: Dict[AmbientCondition, MetricSummary]


# ============================================================================
# EXTRACTION JOBS
# ============================================================================

class ExtractionJob(BaseModel):
    """Feature extraction for one manifest entry"""
    job_id: str = Field(..., description="The manifest video_id")
    ref_path: Optional[str] = None
    test_path: Optional[str] = None
    status: JobStatus = Field(default=JobStatus.PENDING)
    created_at: datetime
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    frames: int = 0
    error_message: Optional[str] = None

    model_config = ConfigDict(use_enum_values=True)
