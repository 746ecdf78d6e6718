"""Service configuration from harmonkit.toml and the environment."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli

from .errors import HarmonkitError

CONFIG_FILE = "harmonkit.toml"


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8646
    host: str = "127.0.0.1"
    vocabulary: str | None = None
    provenance_dir: str = "provenance"
    static_dir: str | None = None  # built review UI, served at /ui when present
    low_score_threshold: float = 0.5  # UI flags matches below this


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Read harmonkit.toml; missing file means defaults."""
    candidate = Path(path) if path is not None else Path(CONFIG_FILE)
    if not candidate.is_file():
        if path is not None:
            raise HarmonkitError(f"config file not found: {candidate}")
        return ServiceConfig()
    with candidate.open("rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise HarmonkitError(f"{candidate}: bad TOML ({exc})") from None
    unknown = set(doc) - {"port", "host", "vocabulary", "provenance_dir", "static_dir", "low_score_threshold"}
    if unknown:
        raise HarmonkitError(f"{candidate}: unknown config keys {sorted(unknown)}")
    defaults = ServiceConfig()
    return ServiceConfig(
        port=int(doc.get("port", defaults.port)),
        host=str(doc.get("host", defaults.host)),
        vocabulary=doc.get("vocabulary"),
        provenance_dir=str(doc.get("provenance_dir", defaults.provenance_dir)),
        static_dir=doc.get("static_dir"),
        low_score_threshold=float(doc.get("low_score_threshold", defaults.low_score_threshold)),
    )
