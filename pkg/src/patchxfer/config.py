"""Plain-text key=value configuration files, overridable by CLI flags."""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

KNOWN_KEYS = ("window", "stride", "pad", "top_u", "extractor", "manifest", "seed")
_INT_KEYS = ("window", "stride", "pad", "top_u", "seed")


def parse_config(path: str | Path) -> dict[str, object]:
    """Read known keys from ``path``; unknown keys are an error."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(
                f"{path}:{lineno}: unknown key {key!r} (known: {', '.join(KNOWN_KEYS)})"
            )
        if key in _INT_KEYS:
            try:
                values[key] = int(raw)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: {key} must be an integer, got {raw!r}")
        else:
            values[key] = raw
    return values
