"""
hdrvqa - HDR video quality toolkit

FUNQUE+ features computed on one shared CSF-weighted Haar transform,
HDRMAX preprocessing, ridge fusion models and content-separated evaluation.
"""
__version__ = "1.0.0"

from .errors import HdrVqaError
from .fusion import get_spec, list_specs, load_model, predict, save_model, train
from .models import AmbientCondition, HdrmaxVariant, ModelSpec, TrainedModel
from .unified import ViewingGeometry

__all__ = [
    "AmbientCondition",
    "HdrVqaError",
    "HdrmaxVariant",
    "ModelSpec",
    "TrainedModel",
    "ViewingGeometry",
    "__version__",
    "get_spec",
    "list_specs",
    "load_model",
    "predict",
    "save_model",
    "train",
]
