import os
import logging
from dataclasses import dataclass

from dotenv import load_dotenv


@dataclass(frozen=True)
class Settings:
    workers: int
    log_level: str
    host: str
    port: int


def _int_env(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logging.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def load_settings(dotenv_path=None):
    """Read runtime settings from the environment (after loading an optional .env)."""
    load_dotenv(dotenv_path=dotenv_path, override=False)
    workers = max(1, _int_env('WPT_NOMA_WORKERS', os.cpu_count() or 1))
    log_level = os.getenv('WPT_NOMA_LOG_LEVEL', 'INFO').upper()
    if not isinstance(logging.getLevelName(log_level), int):
        log_level = 'INFO'
    return Settings(
        workers=workers,
        log_level=log_level,
        host=os.getenv('WPT_NOMA_HOST', '0.0.0.0'),
        port=_int_env('WPT_NOMA_PORT', 5000),
    )
