"""Pipeline configuration: a single JSON file with one section per concern.

Every tunable named by the engine modules appears here with its default, so
a config file only states what it overrides. Provider construction lives
here too, including the --mock switch to offline backends.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Optional

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 11,
    "agent_concurrency": 4,
    "data": {
        "cases_path": None,
        "labels_path": None,
        "schema": {},
        "ratios": [0.8, 0.1, 0.1],
        "precedent_k": 3,
    },
    "providers": {
        "agent": {"kind": "synthetic-oracle", "world_path": None},
        "embedder": {"kind": "hashing", "dim": 256},
        # per-stage agent overrides, e.g. {"optimize": {"kind": "http", ...}}
        "routing": {},
        "mock": {},
    },
    "quiz": {
        "num_options": 4,
        "distractors_from_negatives": False,
    },
    "optimization": {
        "defined_score": 0.9,
        "max_iterations": 5,
        "num_negatives": None,  # None -> |S_positive|
        "max_records_per_side": 20,
        "fact_truncate": 1200,
        "temperature": 0.7,
    },
    "examination": {
        "candidate_k": 10,
        "abstract_threshold": 4000,
        "ngram_sizes": [1, 2, 3],
        "hash_dim": 32768,
        "epochs": 5,
    },
    "metrics": {
        "macro_over_full_label_space": False,
    },
}


class ConfigError(ValueError):
    pass


# sections whose keys are provider- or dataset-specific, not checked here
_FREEFORM = {
    "data.schema",
    "providers.agent",
    "providers.embedder",
    "providers.routing",
    "providers.mock",
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in merged:
            raise ConfigError(f"unknown configuration key: {where}")
        if where in _FREEFORM:
            merged[key] = copy.deepcopy(value)
        elif isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = _merge(merged[key], value, where)
        else:
            merged[key] = value
    return merged


def load_config(path: str | Path, *, seed_override: Optional[int] = None) -> dict:
    """Parse and validate a config file against the defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    config = _merge(DEFAULT_CONFIG, raw)
    if seed_override is not None:
        config["seed"] = seed_override
    if not config["data"]["cases_path"]:
        raise ConfigError("data.cases_path is required")
    ratios = config["data"]["ratios"]
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("data.ratios must be three fractions summing to 1")
    # paths are interpreted relative to the config file's directory
    base = path.parent
    for key in ("cases_path", "labels_path"):
        value = config["data"][key]
        if value:
            config["data"][key] = str((base / value).resolve())
    sections = [config["providers"]["agent"], config["providers"]["embedder"]]
    sections += list(config["providers"]["routing"].values())
    mock = config["providers"]["mock"]
    sections += [s for s in (mock.get("agent"), mock.get("embedder")) if isinstance(s, dict)]
    for section in sections:
        if section.get("world_path"):
            section["world_path"] = str((base / section["world_path"]).resolve())
        if section.get("script_path"):
            section["script_path"] = str((base / section["script_path"]).resolve())
    return config


def build_agent(config: dict, *, mock: bool = False, stage: Optional[str] = None):
    """Agent backend per providers config.

    providers.routing may override the default agent for a named stage
    (init-rules, optimize, examine); --mock forces providers.mock.agent for
    every stage.
    """
    from .agents import HttpBackend, ScriptedBackend
    from .synthetic import OracleAgent, SyntheticWorld

    spec = config["providers"]["agent"]
    if stage is not None:
        spec = config["providers"]["routing"].get(stage, spec)
    if mock:
        spec = config["providers"]["mock"].get("agent", spec)
    kind = spec.get("kind")
    if kind == "synthetic-oracle":
        world_path = spec.get("world_path")
        if not world_path:
            raise ConfigError("synthetic-oracle agent requires world_path")
        return OracleAgent(SyntheticWorld.load(world_path))
    if kind == "scripted":
        script_path = spec.get("script_path")
        if not script_path:
            raise ConfigError("scripted agent requires script_path")
        script = json.loads(Path(script_path).read_text(encoding="utf-8"))
        return ScriptedBackend(script)
    if kind == "http":
        if mock:
            raise ConfigError("--mock cannot use an http agent")
        base_url = spec.get("base_url")
        model = spec.get("model")
        if not base_url or not model:
            raise ConfigError("http agent requires base_url and model")
        return HttpBackend(base_url, model)
    raise ConfigError(f"unknown agent kind {kind!r}")


def build_embedder(config: dict, *, mock: bool = False):
    from .confusable import HashingEmbedder, HttpEmbedder

    spec = config["providers"]["embedder"]
    if mock:
        spec = config["providers"]["mock"].get("embedder", {"kind": "hashing"})
    kind = spec.get("kind")
    if kind == "hashing":
        return HashingEmbedder(dim=int(spec.get("dim", 256)))
    if kind == "http":
        if mock:
            raise ConfigError("--mock cannot use an http embedder")
        base_url = spec.get("base_url")
        model = spec.get("model")
        if not base_url or not model:
            raise ConfigError("http embedder requires base_url and model")
        return HttpEmbedder(base_url, model)
    raise ConfigError(f"unknown embedder kind {kind!r}")
