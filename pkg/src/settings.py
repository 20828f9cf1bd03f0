"""
Settings module for the bdris-wideband project.
This module reads environment overrides (optionally from a .env file).
"""

import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

CODE_VERSION = "1.0.0"


def get_db_path():
    """Path of the SQLite results store."""
    return os.getenv("RIS_DB_PATH", os.path.join(BASE_DIR, "data", "sqlite", "bdris.db"))


def get_log_level():
    """Logging level name for the entry points."""
    return os.getenv("RIS_LOG_LEVEL", "INFO").upper()


def get_env_workers():
    """Worker count override from RIS_WORKERS, or None when unset."""
    value = os.getenv("RIS_WORKERS")
    if value is None or value.strip() == "":
        return None
    workers = int(value)
    if workers < 1:
        raise ValueError(f"RIS_WORKERS must be >= 1, got {workers}")
    return workers
