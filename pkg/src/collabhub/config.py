"""Hub configuration: TOML file plus environment overrides (env wins)."""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class HubConfig:
    storage_root: str = "./hub-data"
    driver: str = "sim"  # "sim" | "engine"
    engine_socket: str = "/var/run/docker.sock"
    api_port: int = 8000
    proxy_port: int = 8001
    port_base: int = 40000
    start_timeout: float = 60.0
    session_ttl: float = 12 * 3600.0
    identity_provider: str = "static"  # "static" | "signed"
    static_tokens: dict[str, str] = field(default_factory=dict)
    signing_secret: str = ""
    auto_provision: bool = False
    max_containers_per_user: int = 4

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict[str, str] | None = None) -> "HubConfig":
        env = os.environ if env is None else env
        cfg = cls()
        config_path = env.get("HUB_CONFIG") or path
        if config_path and Path(config_path).is_file():
            with open(config_path, "rb") as fh:
                data = tomllib.load(fh)
            for key, value in data.items():
                if hasattr(cfg, key):
                    setattr(cfg, key, value)
        if "HUB_STORAGE_ROOT" in env:
            cfg.storage_root = env["HUB_STORAGE_ROOT"]
        if "HUB_DRIVER" in env:
            cfg.driver = env["HUB_DRIVER"]
        return cfg
