from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field
try:
    # Prefer pydantic-settings when available for robust env parsing
    from pydantic_settings import BaseSettings
except Exception:  # pragma: no cover
    BaseSettings = BaseModel  # type: ignore


class Settings(BaseSettings):
    """Filesystem locations and log level, read from LOCSEP_* variables or ``.env``.

    Algorithm parameters are never read from the environment; they live in
    the manifest.
    """

    # Root for relative speech-pool and noise WAV paths
    data_dir: Optional[str] = Field(default=None)

    # Default root for datasets, enhanced WAVs and reports
    output_dir: str = Field(default="runs")

    # Root for relative `file:` mask templates
    mask_dir: Optional[str] = Field(default=None)

    log_level: str = Field(default="INFO")

    class Config:
        env_prefix = "LOCSEP_"
        env_file = ".env"
        extra = "ignore"

    def data_path(self) -> Optional[Path]:
        return Path(self.data_dir) if self.data_dir else None

    def mask_path(self) -> Optional[Path]:
        return Path(self.mask_dir) if self.mask_dir else None


@lru_cache()
def get_settings() -> Settings:
    return Settings()
