"""Per-frame quality atoms computed on shared unified-transform pyramids"""
from .extract import FeatureRecord, VideoFeatures, aggregate, extract_frame_features, extract_video
from .registry import FeatureContext, FeatureDef, get_feature, hdrmax_feature_names, list_features

__all__ = [
    "FeatureContext",
    "FeatureDef",
    "FeatureRecord",
    "VideoFeatures",
    "aggregate",
    "extract_frame_features",
    "extract_video",
    "get_feature",
    "hdrmax_feature_names",
    "list_features",
]
