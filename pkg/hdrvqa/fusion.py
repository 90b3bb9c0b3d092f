"""
Fusion models

Built-in feature-set catalogue, closed-form ridge regression over
standardized features, and versioned JSON model files.
"""
import hashlib
import json
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import structlog
from glom import glom
from pydantic import ValidationError

from .errors import MissingFeatureError, ModelFormatError, ModelVersionError, RegistryError, SingularSystemError
from .models import (
    MODEL_FORMAT_VERSION,
    HdrmaxVariant,
    ModelSpec,
    Standardization,
    TrainedModel,
    TrainingMetadata,
)

log = structlog.get_logger()

# ============================================================================
# BUILT-IN CATALOGUE
# ============================================================================

Y_FUNQUE_PLUS = ModelSpec(
    name="Y-FUNQUE+",
    features=["Y-MS-ESSIM", "Y-MAD-Ref", "Y-DLM-S"],
)

C3_FUNQUE_PLUS = ModelSpec(
    name="3C-FUNQUE+",
    features=["Y-MS-ESSIM", "Y-MAD-Dis", "Y-DLM-S", "Y-SRRED-HV", "Y-TRRED-HV", "Cb-Edge", "Cr-MAD"],
)

PU21_PSNR = ModelSpec(name="PU21-PSNR", features=["PU21-PSNR"])
PU21_SSIM = ModelSpec(name="PU21-SSIM", features=["PU21-SSIM"])


def _catalogue() -> Dict[str, ModelSpec]:
    specs = [PU21_PSNR, PU21_SSIM]
    for base in (Y_FUNQUE_PLUS, C3_FUNQUE_PLUS):
        specs += [base, base.with_hdrmax(HdrmaxVariant.H1), base.with_hdrmax(HdrmaxVariant.H2)]
    return {spec.name: spec for spec in specs}


BUILTIN_SPECS: Dict[str, ModelSpec] = _catalogue()


def _spec_key(name: str) -> str:
    return "".join(name.split()).upper().replace("HDRMAX-", "HDRMAX")


def get_spec(name: str, hdrmax: Sequence[Union[HdrmaxVariant, str]] = ()) -> ModelSpec:
    """
    Resolve a built-in spec by name. Whitespace and case are ignored, so
    `3c-funque+ +hdrmax2` and `3C-FUNQUE++HDRMAX2` both resolve.

    Raises:
        RegistryError: no such built-in
    """
    key = _spec_key(name)
    for spec_name, spec in BUILTIN_SPECS.items():
        if _spec_key(spec_name) == key:
            for variant in hdrmax:
                spec = spec.with_hdrmax(variant)
            return spec
    raise RegistryError(name, f"Unknown model '{name}'; built-ins are: {', '.join(BUILTIN_SPECS)}")


def list_specs() -> List[str]:
    return list(BUILTIN_SPECS)


# ============================================================================
# TRAINING
# ============================================================================

def training_hash(X: np.ndarray, y: np.ndarray, names: Sequence[str]) -> str:
    digest = hashlib.sha256()
    digest.update("\x1f".join(names).encode("utf-8"))
    digest.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    digest.update(np.ascontiguousarray(y, dtype="<f8").tobytes())
    return digest.hexdigest()


def _as_matrix(X: Union[np.ndarray, Sequence[Sequence[float]]], y: Sequence[float], n_features: int):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ModelFormatError(
            f"Feature matrix must have shape (n, {n_features}), got {X.shape}",
            shape=list(X.shape),
        )
    if y.ndim != 1 or len(y) != X.shape[0] or len(y) < 2:
        raise ModelFormatError("Need at least two rows and one target per row", rows=int(X.shape[0]), targets=int(y.size))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ModelFormatError("Training data contains non-finite values")
    return X, y


def train(
    spec: ModelSpec,
    X: Union[np.ndarray, Sequence[Sequence[float]]],
    y: Sequence[float],
    lam: float,
    seed: Optional[int] = None,
) -> TrainedModel:
    """
    Fit ridge regression on standardized features.

    Args:
        spec: Model spec; X columns follow `spec.all_features`
        X: Per-video feature matrix
        y: MOS vector
        lam: Ridge penalty (>= 0)
        seed: Recorded in metadata only

    Raises:
        SingularSystemError: lam == 0 and the normal equations are singular
    """
    names = spec.all_features
    X, y = _as_matrix(X, y, len(names))
    if lam < 0:
        raise SingularSystemError("lambda must be non-negative", lam=lam)

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    keep = stds > 1e-12 * np.maximum(1.0, np.abs(means))
    dropped = [n for n, k in zip(names, keep) if not k]
    if dropped:
        log.warning("zero_variance_features_dropped", model=spec.name, features=dropped)

    kept_names = [n for n, k in zip(names, keep) if k]
    means, stds = means[keep], stds[keep]
    Z = (X[:, keep] - means) / stds
    y_mean = float(np.mean(y))

    weights = np.zeros(len(kept_names))
    if kept_names:
        gram = Z.T @ Z + lam * np.eye(len(kept_names))
        rhs = Z.T @ (y - y_mean)
        if lam == 0 and np.linalg.matrix_rank(Z) < len(kept_names):
            raise SingularSystemError(
                "Normal equations are singular with lambda=0; use a positive lambda",
                features=kept_names,
            )
        try:
            weights = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as e:
            raise SingularSystemError(f"Ridge solve failed: {e}; use a positive lambda") from e

    model = TrainedModel(
        spec=spec,
        features=kept_names,
        standardization=Standardization(means=means.tolist(), stds=stds.tolist()),
        weights=weights.tolist(),
        intercept=y_mean,
        lambda_=float(lam),
        metadata=TrainingMetadata(
            training_hash=training_hash(X, y, names),
            n_train=int(len(y)),
            seed=seed,
            dropped_features=dropped,
        ),
    )
    log.debug("model_trained", model=spec.name, lam=lam, n_train=len(y), features=len(kept_names))
    return model


# ============================================================================
# PREDICTION
# ============================================================================

def predict(model: TrainedModel, x: Mapping[str, float]) -> float:
    """
    Predicted MOS for one name-keyed feature vector. Extra names are ignored.

    Raises:
        MissingFeatureError: a retained feature is absent
    """
    total = model.intercept
    for name, w, mu, sigma in zip(model.features, model.weights, model.standardization.means, model.standardization.stds):
        if name not in x:
            raise MissingFeatureError(name)
        total += w * ((float(x[name]) - mu) / sigma)
    return total


def predict_many(model: TrainedModel, X: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Predictions for each row of X, whose columns are labelled by `names`"""
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in model.features if n not in index]
    if missing:
        raise MissingFeatureError(missing[0])
    X = np.asarray(X, dtype=np.float64)
    if not model.features:
        return np.full(X.shape[0], model.intercept)
    cols = [index[n] for n in model.features]
    Z = (X[:, cols] - np.asarray(model.standardization.means)) / np.asarray(model.standardization.stds)
    return model.intercept + Z @ np.asarray(model.weights)


# ============================================================================
# SERIALIZATION
# ============================================================================

def save_model(model: TrainedModel) -> bytes:
    """Deterministic, versioned JSON"""
    payload = model.model_dump(mode="json", by_alias=True)
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def load_model(data: Union[bytes, str]) -> TrainedModel:
    """
    Parse a model file.

    Raises:
        ModelFormatError: malformed or truncated JSON, or schema violations
        ModelVersionError: unsupported format version
        RegistryError: a feature unknown to this build
    """
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"Model file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError("Model file must contain a JSON object")

    version = glom(doc, "version", default=None)
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(found=version, expected=MODEL_FORMAT_VERSION)

    from .atoms.registry import get_feature

    for name in [*glom(doc, "spec.features", default=[]), *glom(doc, "features", default=[])]:
        get_feature(name)

    try:
        return TrainedModel.model_validate(doc)
    except ValidationError as e:
        raise ModelFormatError(f"Model file failed validation: {e.error_count()} error(s)", errors=str(e)) from e
