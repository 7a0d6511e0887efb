"""Pipeline configuration: dataclasses plus strict YAML loading.

The file is a nested key-value document; unknown keys are rejected with the
offending dotted path named. The only environment interaction is the API
key, read at request time from the variable named by ``endpoint.api_key_env``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .conversation import EndpointConfig
from .errors import ConfigError
from .mutation import ALL_KINDS, MutationKind, WeightTable
from .verifier import DEFAULT_RULES, FailureCategory, Rule, make_rules


@dataclass(frozen=True)
class EndpointSettings:
    """Endpoint block: chat parameters plus the client mode."""

    base_url: str = "http://localhost:8000/v1"
    model: str = "local-model"
    temperature: float = 0.4
    max_rounds: int = 10
    shot_count: int = 4
    api_key_env: str = "SPECSMITH_API_KEY"
    request_timeout: float = 120.0
    retries: int = 2
    retry_backoff: float = 1.0
    history_token_budget: int = 64000
    mode: str = "live"  # "live" | "scripted"
    script: str | None = None  # scripted mode: path to the response fixture
    shot_selection: str = "corpus-order"  # "corpus-order" | "random"
    shot_seed: int = 0  # only consulted when shot_selection is random

    def to_endpoint_config(self) -> EndpointConfig:
        try:
            return EndpointConfig(
                base_url=self.base_url,
                model=self.model,
                temperature=self.temperature,
                max_rounds=self.max_rounds,
                shot_count=self.shot_count,
                api_key_env=self.api_key_env,
                request_timeout=self.request_timeout,
                retries=self.retries,
                retry_backoff=self.retry_backoff,
                history_token_budget=self.history_token_budget,
            )
        except ValueError as exc:
            raise ConfigError(f"endpoint: {exc}") from exc


@dataclass(frozen=True)
class VerifierSettings:
    adapter: str = "trace"  # "exec" | "trace" | "mock"
    command: str | None = None
    timeout_seconds: float = 1800.0
    # None picks the adapter default: one for exec, all for trace and mock.
    failures_per_call: str | None = None
    rules: tuple[Rule, ...] = DEFAULT_RULES
    trace_file: str | None = None
    mock_truth: tuple[str, ...] | None = None

    def effective_failures_per_call(self) -> str:
        if self.failures_per_call is not None:
            return self.failures_per_call
        return "one" if self.adapter == "exec" else "all"


@dataclass(frozen=True)
class MutationSettings:
    kinds: frozenset[MutationKind] = ALL_KINDS
    variant_cap: int = 4096


@dataclass(frozen=True)
class StrategySettings:
    name: str = "heuristic"  # "heuristic" | "random"
    seed: int = 0


@dataclass(frozen=True)
class BudgetSettings:
    pipeline_seconds: float = 1800.0


@dataclass(frozen=True)
class PathSettings:
    corpus_dir: str | None = None  # None: the packaged example corpus
    guidance_file: str | None = None
    output_dir: str = "runs"


@dataclass(frozen=True)
class ReportSettings:
    # Zero out wall-clock fields so two identical runs serialize identically.
    deterministic_clock: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    endpoint: EndpointSettings = field(default_factory=EndpointSettings)
    verifier: VerifierSettings = field(default_factory=VerifierSettings)
    weights: WeightTable = field(default_factory=WeightTable)
    mutation: MutationSettings = field(default_factory=MutationSettings)
    strategy: StrategySettings = field(default_factory=StrategySettings)
    budgets: BudgetSettings = field(default_factory=BudgetSettings)
    paths: PathSettings = field(default_factory=PathSettings)
    report: ReportSettings = field(default_factory=ReportSettings)


_SCALARS = (str, int, float, bool)


def _coerce_scalar(value: Any, target: type, path: str) -> Any:
    if target is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if target is int and isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got a boolean")
    if not isinstance(value, target):
        raise ConfigError(f"{path}: expected {target.__name__}, got {type(value).__name__}")
    return value


def _load_section(cls, data: Any, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown configuration key: {path}.{sorted(unknown)[0]}")
    kwargs: dict[str, Any] = {}
    instance = cls()
    for name, value in data.items():
        current = getattr(instance, name)
        key_path = f"{path}.{name}"
        if value is None:
            kwargs[name] = None
            continue
        if isinstance(current, bool):
            kwargs[name] = _coerce_scalar(value, bool, key_path)
        elif isinstance(current, int) and not isinstance(current, bool):
            kwargs[name] = _coerce_scalar(value, int, key_path)
        elif isinstance(current, float):
            kwargs[name] = _coerce_scalar(value, float, key_path)
        elif isinstance(current, str) or current is None:
            kwargs[name] = _coerce_scalar(value, str, key_path) if not isinstance(value, (list, dict)) else value
        else:
            kwargs[name] = value
    return replace(instance, **kwargs)


def _parse_kinds(raw: Any) -> frozenset[MutationKind]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("mutation.kinds: expected a non-empty list of kind names")
    kinds = set()
    for item in raw:
        try:
            kinds.add(MutationKind(item))
        except ValueError:
            names = ", ".join(k.value for k in MutationKind)
            raise ConfigError(f"mutation.kinds: {item!r} is not one of {names}") from None
    return frozenset(kinds)


def _parse_rules(raw: Any) -> tuple[Rule, ...]:
    if not isinstance(raw, list):
        raise ConfigError("verifier.rules: expected a list of {pattern, category} entries")
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or set(item) != {"pattern", "category"}:
            raise ConfigError(
                f"verifier.rules[{i}]: each entry needs exactly pattern and category"
            )
        try:
            category = FailureCategory(item["category"])
        except ValueError:
            names = ", ".join(c.value for c in FailureCategory)
            raise ConfigError(
                f"verifier.rules[{i}].category: {item['category']!r} is not one of {names}"
            ) from None
        entries.append((item["pattern"], category))
    return make_rules(entries)


_SECTIONS = {
    "endpoint": EndpointSettings,
    "verifier": VerifierSettings,
    "weights": WeightTable,
    "mutation": MutationSettings,
    "strategy": StrategySettings,
    "budgets": BudgetSettings,
    "paths": PathSettings,
    "report": ReportSettings,
}


def config_from_dict(data: dict[str, Any]) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown configuration key: {sorted(unknown)[0]}")

    sections: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name)
        if name == "mutation" and isinstance(raw, dict) and "kinds" in raw:
            raw = dict(raw)
            kinds = _parse_kinds(raw.pop("kinds"))
            sections[name] = replace(_load_section(cls, raw, name), kinds=kinds)
        elif name == "verifier" and isinstance(raw, dict):
            raw = dict(raw)
            rules = _parse_rules(raw.pop("rules")) if "rules" in raw else None
            truth = raw.pop("mock_truth", None)
            if truth is not None:
                if not isinstance(truth, list) or not all(isinstance(t, str) for t in truth):
                    raise ConfigError("verifier.mock_truth: expected a list of clause strings")
                truth = tuple(truth)
            section = _load_section(cls, raw, name)
            if rules is not None:
                section = replace(section, rules=rules)
            section = replace(section, mock_truth=truth)
            sections[name] = section
        else:
            sections[name] = _load_section(cls, raw, name)

    config = PipelineConfig(**sections)
    _validate(config)
    return config


def _validate(config: PipelineConfig) -> None:
    config.endpoint.to_endpoint_config()  # rechecks temperature and rounds
    if config.endpoint.mode not in ("live", "scripted"):
        raise ConfigError("endpoint.mode: must be live or scripted")
    if config.endpoint.shot_selection not in ("corpus-order", "random"):
        raise ConfigError("endpoint.shot_selection: must be corpus-order or random")
    if config.verifier.adapter not in ("exec", "trace", "mock"):
        raise ConfigError("verifier.adapter: must be exec, trace, or mock")
    if config.verifier.failures_per_call not in (None, "one", "all"):
        raise ConfigError("verifier.failures_per_call: must be one or all")
    if config.mutation.variant_cap < 1:
        raise ConfigError("mutation.variant_cap: must be at least 1")
    if config.strategy.name not in ("heuristic", "random"):
        raise ConfigError("strategy.name: must be heuristic or random")
    if config.budgets.pipeline_seconds <= 0:
        raise ConfigError("budgets.pipeline_seconds: must be positive")


def load_config(path: str | None) -> PipelineConfig:
    """Load the YAML config file; None yields the defaults."""
    if path is None:
        return PipelineConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if data is None:
        return PipelineConfig()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: configuration root must be a mapping")
    return config_from_dict(data)


def load_guidance_file(path: str) -> dict[FailureCategory, str]:
    """Category -> guidance text mapping from a YAML file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of category to guidance text")
    guidance: dict[FailureCategory, str] = {}
    for key, value in data.items():
        try:
            category = FailureCategory(key)
        except ValueError:
            names = ", ".join(c.value for c in FailureCategory)
            raise ConfigError(f"{path}: {key!r} is not one of {names}") from None
        if not isinstance(value, str):
            raise ConfigError(f"{path}: guidance for {key} must be a string")
        guidance[category] = value
    return guidance
