"""
C2ED2 - Runtime Settings
Environment-driven defaults, loaded once per process
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment"""
    threads: int = 1
    log_level: str = "INFO"
    rank_tol: Optional[float] = None

    @classmethod
    def from_env(cls) -> "Settings":
        """Read settings from environment variables"""
        threads = os.getenv("C2ED2_THREADS", "1")
        rank_tol = os.getenv("C2ED2_RANK_TOL")
        try:
            return cls(
                threads=max(1, int(threads)),
                log_level=os.getenv("C2ED2_LOG_LEVEL", "INFO").upper(),
                rank_tol=float(rank_tol) if rank_tol else None,
            )
        except ValueError:
            raise ConfigError(
                f"invalid environment: C2ED2_THREADS={threads!r} must be an integer, "
                f"C2ED2_RANK_TOL={rank_tol!r} a number"
            )


# Global settings instance
_settings = None


def get_settings() -> Settings:
    """Get or create global settings"""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def reset_settings():
    """Forget cached settings so the environment is read again"""
    global _settings
    _settings = None
