import sys
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Settings(BaseSettings):
    """Toolkit settings"""

    # Viewing geometry (4K viewed at 1.5 display heights)
    distance_to_height: float = Field(default=1.5, gt=0)
    display_height_px: int = Field(default=2160, gt=0)

    # Unified transform
    levels: int = Field(default=4, ge=1)
    sast_snap_tolerance: float = Field(default=0.15, ge=0, lt=1)
    resample_order: int = Field(default=1, ge=0, le=5)
    csf: Literal["mannos_sakrison", "flat"] = "mannos_sakrison"

    # HDRMAX local normalization
    minmax_window: int = 17
    meansub_window: int = 31
    gaussian_sigma: Optional[float] = None
    hdrmax1_literal: bool = False

    # Ingestion
    full_range: bool = True
    raw_width: Optional[int] = None
    raw_height: Optional[int] = None
    raw_bit_depth: int = 10
    raw_subsampling: Literal["420", "444"] = "420"

    # Atom constants
    moment_window: int = 9
    rred_block: int = 5
    rred_noise_var: float = 0.1

    # Evaluation protocol
    n_splits: int = Field(default=1000, ge=1)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    lambda_grid: List[float] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3]
    seed: int = 0

    # Execution
    threads: int = Field(default=1, ge=1)
    cache_dir: str = ".hdrvqa_cache"
    debug: bool = False

    @field_validator("minmax_window", "meansub_window", "moment_window")
    @classmethod
    def validate_odd_window(cls, v: int) -> int:
        if v < 3 or v % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {v}")
        return v

    model_config = SettingsConfigDict(
        env_prefix="HDRVQA_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


def read_config_file(path: Path) -> Dict[str, Any]:
    """Read a flat TOML config file of Settings field names"""
    with open(path, "rb") as f:
        return tomllib.load(f)


def load_settings(config_path: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Build settings with precedence flags > config file > environment > defaults.

    Args:
        config_path: Optional TOML file
        **overrides: Values given on the command line (None values are ignored)
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()
