"""
Error hierarchy

Every error carries a stable code and a detail payload; the CLI prints the
payload as one JSON line on stderr and exits with the error's exit code.
"""
from typing import Any, Dict, Optional, Sequence

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class HdrVqaError(Exception):
    """Base class for all toolkit errors"""

    code = "hdrvqa_error"
    exit_code = EXIT_USAGE

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def detail(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, **self.context}


# ============================================================================
# FRAME INGESTION
# ============================================================================

class FrameParseError(HdrVqaError):
    code = "frame_parse_error"

    def __init__(self, message: str, offset: int, **context: Any):
        super().__init__(f"{message} (at byte offset {offset})", offset=offset, **context)
        self.offset = offset


class UnsupportedFormatError(HdrVqaError):
    code = "unsupported_format"


class TruncationError(HdrVqaError):
    code = "truncated_frame"

    def __init__(self, frame_index: int, expected: int, actual: int):
        super().__init__(
            f"Frame {frame_index} is truncated: expected {expected} bytes, got {actual}",
            frame_index=frame_index, expected_bytes=expected, actual_bytes=actual,
        )
        self.frame_index = frame_index


class GeometryError(HdrVqaError):
    code = "geometry_error"


class LengthMismatchError(HdrVqaError):
    code = "length_mismatch"

    def __init__(self, which: str, frame_index: int):
        super().__init__(
            f"The {which} video ended first, after {frame_index} frames",
            ended=which, frames=frame_index,
        )
        self.which = which


class DimensionMismatchError(HdrVqaError):
    code = "dimension_mismatch"


# ============================================================================
# NUMERICS
# ============================================================================

class DomainError(HdrVqaError):
    code = "domain_error"


class TooSmallError(HdrVqaError):
    code = "too_small"


class StateError(HdrVqaError):
    code = "state_error"


class UndefinedCorrelationError(HdrVqaError):
    code = "undefined_correlation"
    exit_code = EXIT_NUMERIC


class NumericFailureError(HdrVqaError):
    code = "numeric_failure"
    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, identifiers: Optional[Sequence[str]] = None):
        super().__init__(message, identifiers=list(identifiers or []))


# ============================================================================
# MODELS & REGISTRY
# ============================================================================

class RegistryError(HdrVqaError):
    code = "unknown_feature"

    def __init__(self, name: str, message: Optional[str] = None):
        super().__init__(message or f"Unknown feature or model '{name}'", name=name)
        self.name = name


class MissingFeatureError(HdrVqaError):
    code = "missing_feature"

    def __init__(self, name: str):
        super().__init__(f"Feature '{name}' is missing from the query", name=name)
        self.name = name


class SingularSystemError(HdrVqaError):
    code = "singular_system"
    exit_code = EXIT_NUMERIC


class ModelFormatError(HdrVqaError):
    code = "model_format_error"


class ModelVersionError(HdrVqaError):
    code = "model_version_mismatch"

    def __init__(self, found: Any, expected: Any):
        super().__init__(
            f"Model file version {found} is not supported (expected {expected})",
            found=found, expected=expected,
        )


# ============================================================================
# EVALUATION
# ============================================================================

class ManifestError(HdrVqaError):
    code = "manifest_error"


class SplitError(HdrVqaError):
    code = "split_error"
