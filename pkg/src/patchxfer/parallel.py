"""Worker-count policy. PATCHXFER_THREADS caps every internal pool."""

from __future__ import annotations

import os

from .errors import ConfigError

ENV_VAR = "PATCHXFER_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_VAR} must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"{ENV_VAR} must be >= 1, got {n}")
    return n
