"""
Runtime settings.
Values come from environment variables, optionally loaded from a .env file.
"""

import logging
import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class NasSettings:
    """Centralized settings for the command-line tools."""

    DEFAULT_LOG_LEVEL = "INFO"
    DEFAULT_OUTPUT_DIR = "runs"

    LOG_LEVEL: str = os.getenv("LIGHTSPEECH_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    WORKERS: str = os.getenv("LIGHTSPEECH_WORKERS", "1")
    OUTPUT_DIR: str = os.getenv("LIGHTSPEECH_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)
    SEED: str = os.getenv("LIGHTSPEECH_SEED", "0")

    # Profiling always uses one worker
    PROFILE_WORKERS = 1
    MIN_PROFILE_REPETITIONS = 3

    @classmethod
    def validate(cls) -> bool:
        """
        Check that environment-provided values are usable.

        Raises:
            ValueError: Naming the offending variable
        """
        if cls.LOG_LEVEL not in _LEVELS:
            raise ValueError(f"LIGHTSPEECH_LOG_LEVEL must be one of {_LEVELS}, got '{cls.LOG_LEVEL}'")
        try:
            workers = int(cls.WORKERS)
            int(cls.SEED)
        except ValueError:
            raise ValueError(
                f"LIGHTSPEECH_WORKERS and LIGHTSPEECH_SEED must be integers, "
                f"got '{cls.WORKERS}' and '{cls.SEED}'"
            ) from None
        if workers < 1:
            raise ValueError(f"LIGHTSPEECH_WORKERS must be >= 1, got {workers}")
        return True

    @classmethod
    def get_workers(cls) -> int:
        return int(cls.WORKERS)

    @classmethod
    def get_seed(cls) -> int:
        return int(cls.SEED)

    @classmethod
    def get_log_level(cls) -> int:
        return getattr(logging, cls.LOG_LEVEL, logging.INFO)
