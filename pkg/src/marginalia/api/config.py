"""Service configuration.

A JSON file with four concerns: where to listen, where project files live,
which segmentation provider to call (none means the built-in mock), and the
automask defaults applied when a request does not override them. Flags and
constructor arguments win over the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus.model import AutomaskConfig


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    project_root: Path = Path("projects")
    cache_dir: Path = Path("image_cache")
    provider_url: str | None = None
    provider_timeout: float = 60.0
    automask: AutomaskConfig = field(default_factory=AutomaskConfig)

    def __post_init__(self):
        self.project_root = Path(self.project_root)
        self.cache_dir = Path(self.cache_dir)
        if not 0 < self.port < 65536:
            raise ValueError(f"port {self.port} out of range")


def load_config(path: str | Path) -> ServiceConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return config_from_dict(data)


def config_from_dict(data: dict) -> ServiceConfig:
    known = {"host", "port", "project_root", "cache_dir", "provider_url",
             "provider_timeout", "automask"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "automask" in kwargs:
        kwargs["automask"] = AutomaskConfig.from_dict(kwargs["automask"])
    return ServiceConfig(**kwargs)
