"""Manifests, content-separated splits, accuracy metrics and the evaluation protocol"""
from .manifest import DatasetManifest, load_manifest, write_manifest
from .protocol import PUBLISHED_LIVE_HDR, compare_to_published, evaluate, tune_lambda, write_report
from .splits import Split, make_splits
from .stats import lower_median, pcc, rmse, srocc
from .synth import synth_dataset

__all__ = [
    "DatasetManifest",
    "PUBLISHED_LIVE_HDR",
    "Split",
    "compare_to_published",
    "evaluate",
    "load_manifest",
    "lower_median",
    "make_splits",
    "pcc",
    "rmse",
    "srocc",
    "synth_dataset",
    "tune_lambda",
    "write_manifest",
    "write_report",
]
