"""
Model manager for resolving built-in specs and trained model files
"""
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import structlog
from glom import glom
from pyrsistent import PMap, pmap

from .errors import ModelFormatError
from .fusion import get_spec, load_model
from .models import HdrmaxVariant, ModelSpec, TrainedModel

log = structlog.get_logger()

Resolved = Union[ModelSpec, TrainedModel]


class ModelManager:
    """Loads trained models once per file version and hands out built-in specs"""

    def __init__(self):
        self.models: Dict[str, TrainedModel] = {}
        self.configs: Dict[str, PMap] = {}
        self._versions: Dict[str, Tuple[int, int]] = {}

    def resolve(self, name: str, hdrmax: Sequence[Union[HdrmaxVariant, str]] = ()) -> Resolved:
        """
        A trained model when `name` is an existing file, else a built-in spec.

        Raises:
            RegistryError: neither a file nor a built-in name
            ModelFormatError: HDRMAX variants requested on a trained model
        """
        path = Path(name)
        if path.is_file():
            if hdrmax:
                raise ModelFormatError("--hdrmax applies to built-in names only; a trained model fixes its features")
            return self.load_model(path)
        return get_spec(name, hdrmax)

    def load_model(self, path: Union[str, Path]) -> TrainedModel:
        key = str(Path(path).resolve())
        stat = Path(key).stat()
        version = (stat.st_size, stat.st_mtime_ns)
        if key in self.models and self._versions.get(key) == version:
            log.debug("model_already_loaded", path=key)
            return self.models[key]

        try:
            model = load_model(Path(key).read_bytes())
        except Exception as e:
            log.error("model_load_failed", path=key, error=str(e))
            raise

        config = pmap(model.model_dump(mode="json", by_alias=True))
        self.models[key] = model
        self.configs[key] = config
        self._versions[key] = version
        log.info(
            "model_loaded_successfully",
            path=key,
            model=glom(config, "spec.name"),
            condition=glom(config, "spec.target_condition"),
            n_train=glom(config, "metadata.n_train", default=None),
            features=len(model.features),
        )
        return model


_manager: Optional[ModelManager] = None


def get_model_manager() -> ModelManager:
    global _manager
    if _manager is None:
        _manager = ModelManager()
    return _manager
