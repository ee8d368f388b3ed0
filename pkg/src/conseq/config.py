"""Runtime configuration and component factories.

Settings come from an optional JSON config file, overridden by CONSEQ_*
environment variables, overridden by CLI flags. The same keys configure
the HTTP service, the scheduler, and the CLI subcommands.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .gateway.baseline import load_model
from .gateway.core import Gateway
from .gateway.http import HttpProvider, RemoteTitleClassifier
from .gateway.mock import MockProvider, load_rules
from .ingest.sources import SourceConfig


@dataclass(frozen=True)
class Config:
    db_path: str = "catalog.db"
    host: str = "127.0.0.1"
    port: int = 8000
    admin_token: str = ""
    provider: str = "mock"  # "mock" or "http"
    provider_url: str = ""
    provider_key: str = ""
    provider_model: str = "rule-table-v1"
    mock_rules_path: str = ""
    mock_seed: int = 7
    classifier_url: str = ""
    classifier_model_path: str = ""
    sources_path: str = ""
    rpm: int = 600
    token_cap: int | None = None
    cadence_days: float = 7.0
    parallelism: int = 4
    truncation_chars: int = 12_000
    import_timeout_s: float = 60.0
    reports_dir: str = "reports"


_ENV_PREFIX = "CONSEQ_"
_INT_KEYS = {"port", "mock_seed", "rpm", "token_cap", "parallelism", "truncation_chars"}
_FLOAT_KEYS = {"cadence_days", "import_timeout_s"}


def load_config(path: str | None = None, env: dict | None = None, **overrides) -> Config:
    env = os.environ if env is None else env
    values: dict = {}
    if path:
        values.update(json.loads(Path(path).read_text(encoding="utf-8")))
    for f in fields(Config):
        env_key = _ENV_PREFIX + f.name.upper()
        if env_key in env:
            raw = env[env_key]
            if f.name in _INT_KEYS:
                values[f.name] = int(raw)
            elif f.name in _FLOAT_KEYS:
                values[f.name] = float(raw)
            else:
                values[f.name] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - {f.name for f in fields(Config)}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return Config(**values)


class PermissiveTitleClassifier:
    """Fallback when no classifier is configured: every title passes, so
    relevance gating falls entirely to the content filter."""

    def predict(self, title: str) -> float:
        return 1.0


def build_provider(config: Config):
    if config.provider == "mock":
        rules = ()
        if config.mock_rules_path:
            rules = load_rules(Path(config.mock_rules_path).read_text(encoding="utf-8"))
        return MockProvider(rules, seed=config.mock_seed)
    if config.provider == "http":
        if not config.provider_url:
            raise ValueError("provider_url required for the http provider")
        return HttpProvider(
            config.provider_url, config.provider_model, api_key=config.provider_key or None
        )
    raise ValueError(f"unknown provider {config.provider!r}")


def build_gateway(config: Config) -> Gateway:
    return Gateway(build_provider(config), rpm=config.rpm, token_cap=config.token_cap)


def build_classifier(config: Config):
    if config.classifier_url:
        return RemoteTitleClassifier(config.classifier_url)
    if config.classifier_model_path:
        return load_model(config.classifier_model_path)
    return PermissiveTitleClassifier()


def load_sources(config: Config) -> list[SourceConfig]:
    if not config.sources_path:
        return []
    data = json.loads(Path(config.sources_path).read_text(encoding="utf-8"))
    return [SourceConfig(**entry) for entry in data]
