"""Run configuration: one JSON document, validated before any allocation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .construct import parse_matrix
from .errors import ConfigError
from .solver import NORM_MODES

INIT_MODES = ("zero", "noise", "file")


@dataclass(frozen=True)
class InitSpec:
    mode: str = "zero"
    amplitude: float | None = None
    seed: int | None = None
    path: str | None = None


@dataclass(frozen=True)
class OutputSpec:
    csv_path: str | None = None
    snapshot_dir: str | None = None


@dataclass(frozen=True)
class RunConfig:
    matrix: tuple
    N_u: int
    N_f: int
    t_end: float
    y0: float = 1.0
    a: float = 1.0
    b: float = 1.0
    norm_mode: str = "improved"
    c1_policy: object = "auto"
    init: InitSpec = field(default_factory=InitSpec)
    dt_max: float = 1e-2
    snapshot_dt: float = 1.0
    diag_dt: float = 0.25
    stretch_tier: bool = False
    output: OutputSpec = field(default_factory=OutputSpec)


def validate_config(cfg: RunConfig) -> RunConfig:
    if len(cfg.matrix) != 9 or any(int(v) != v for v in cfg.matrix):
        raise ConfigError("matrix must hold 9 integers")
    if cfg.N_u < 4 or cfg.N_f < 4:
        raise ConfigError(f"resolutions must be >= 4, got N_u={cfg.N_u}, N_f={cfg.N_f}")
    if cfg.t_end < 0:
        raise ConfigError(f"t_end must be >= 0, got {cfg.t_end}")
    if cfg.y0 <= 0 or cfg.a <= 0 or cfg.b <= 0:
        raise ConfigError("y0, a, b must be positive")
    if cfg.norm_mode not in NORM_MODES:
        raise ConfigError(f"norm_mode must be one of {NORM_MODES}")
    if cfg.c1_policy != "auto":
        try:
            c1 = float(cfg.c1_policy)
        except (TypeError, ValueError):
            raise ConfigError("c1_policy must be 'auto' or a number") from None
        if c1 <= 0:
            raise ConfigError("numeric c1_policy must be positive")
    if cfg.init.mode not in INIT_MODES:
        raise ConfigError(f"init.mode must be one of {INIT_MODES}")
    if cfg.init.mode == "noise" and (cfg.init.amplitude is None or cfg.init.amplitude <= 0):
        raise ConfigError("noise mode needs a positive init.amplitude")
    if cfg.init.mode == "file" and not cfg.init.path:
        raise ConfigError("file mode needs init.path")
    if cfg.dt_max <= 0 or cfg.snapshot_dt <= 0 or cfg.diag_dt <= 0:
        raise ConfigError("dt_max, snapshot_dt, diag_dt must be positive")
    if cfg.stretch_tier and (cfg.N_u < 8 or cfg.N_f < 8):
        raise ConfigError("stretch_tier needs N_u >= 8 and N_f >= 8")
    return cfg


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    doc = dict(doc)
    matrix = doc.get("matrix")
    if isinstance(matrix, str):
        try:
            m = parse_matrix(matrix)
        except ValueError as exc:
            raise ConfigError(f"bad matrix string: {exc}") from exc
        matrix = tuple(int(m[i, j]) for i in range(3) for j in range(3))
    elif isinstance(matrix, (list, tuple)):
        matrix = tuple(int(v) for v in matrix)
    else:
        raise ConfigError("matrix must be a string or a list of 9 integers")
    doc["matrix"] = matrix

    known = {f.name for f in RunConfig.__dataclass_fields__.values()}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        if "init" in doc:
            doc["init"] = InitSpec(**doc["init"])
        if "output" in doc:
            doc["output"] = OutputSpec(**doc["output"])
        cfg = RunConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad config structure: {exc}") from exc
    return validate_config(cfg)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    doc = asdict(cfg)
    doc["matrix"] = list(cfg.matrix)
    return doc


def save_config(cfg: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
