"""
Configuration file
Runtime settings read from the environment and the .env file
"""
import os
from typing import Optional
from dotenv import load_dotenv

# Load .env file and override existing environment variables
load_dotenv(override=True)

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Concurrency (BDRIS_THREADS caps worker threads, falls back to CPU count)
    threads: Optional[int] = Field(default=None, ge=1)

    # Output Configuration
    output_dir: str = "results"
    record_wall_time: bool = True  # False writes 0.0 so reruns are byte-identical

    # Logging / progress
    log_level: str = "INFO"
    progress: bool = True

    model_config = SettingsConfigDict(
        env_prefix="BDRIS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    def worker_count(self) -> int:
        """Number of concurrent trial workers"""
        return self.threads or os.cpu_count() or 1


settings = Settings()
