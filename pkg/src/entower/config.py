"""Flat ``key = value`` run configuration with validation and round-trip serialization."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .errors import ConfigError
from .hamiltonian import MODELS, ModelSpec
from .lattice import Cut, Lattice, jq3_plaquettes, make_cut

DENSE_CHECK_MAX_SITES = 12
REQUIRED = ("model", "lx", "ly", "cut")


@dataclass(frozen=True)
class RunConfig:
    model: str
    lx: int
    ly: int
    cut: str
    j1: float = 1.0
    j2: float = 1.0
    j: float = 1.0
    q: float = 0.0
    candidates: Tuple[int, ...] = (3, 4, 5)
    smax: Optional[float] = None
    tol: float = 1e-10
    max_iter: int = 500
    seed: int = 0
    lambda_floor: float = 1e-12
    out: str = "out"
    dense_check: bool = False
    nlow: int = 1
    cbjq_single_pairing: bool = False

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.model, J1=self.j1, J2=self.j2, J=self.j, Q=self.q,
                         cbjq_single_pairing=self.cbjq_single_pairing)

    def lattice(self) -> Lattice:
        return Lattice(self.lx, self.ly)

    def make_cut(self) -> Cut:
        return make_cut(self.lattice(), self.cut)

    def s_max(self) -> float:
        size_a = len(self.make_cut().a_sites)
        return self.smax if self.smax is not None else min(3.0, size_a / 2)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_half(text: str) -> float:
    value = float(text)
    if value * 2 != int(value * 2):
        raise ValueError(f"spin must be an integer or half-integer, got {text!r}")
    return value


def _convert(key: str, value: Any) -> Any:
    if not isinstance(value, str):
        if key == "candidates":
            return tuple(int(v) for v in value)
        return value
    text = value.strip()
    if key in ("model", "cut", "out"):
        return text
    if key in ("lx", "ly", "max_iter", "seed", "nlow"):
        return int(text)
    if key in ("dense_check", "cbjq_single_pairing"):
        return _parse_bool(text)
    if key == "candidates":
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    if key == "smax":
        return None if text.lower() in ("", "auto", "none") else _parse_half(text)
    return float(text)


def read_config_text(text: str) -> Dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip().lower().replace("-", "_")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def parse_config(path: Union[str, Path, None] = None,
                 overrides: Optional[Mapping[str, Any]] = None,
                 text: Optional[str] = None) -> RunConfig:
    """Build a validated :class:`RunConfig`; ``overrides`` (CLI flags) beat file values."""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if text is not None:
        raw.update(read_config_text(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key.replace("-", "_")] = value

    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = _convert(key, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.model not in MODELS:
        raise ConfigError(f"unknown model {cfg.model!r}; choose from {', '.join(MODELS)}")
    lat = cfg.lattice()
    cut = cfg.make_cut()
    cfg.model_spec()
    if cfg.model == "jq3":
        jq3_plaquettes(lat)
    if not cfg.candidates:
        raise ConfigError("candidates list is empty")
    if min(cfg.candidates) < 3:
        raise ConfigError("candidate N values must be >= 3")
    if cfg.smax is not None and not 0 <= cfg.smax <= cut.size_a / 2:
        raise ConfigError(f"smax={cfg.smax} outside [0, {cut.size_a / 2}]")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.max_iter < 1 or cfg.nlow < 1:
        raise ConfigError("max_iter and nlow must be >= 1")
    if not 0 < cfg.lambda_floor < 1:
        raise ConfigError("lambda_floor must lie in (0, 1)")
    if cfg.dense_check and lat.n > DENSE_CHECK_MAX_SITES:
        raise ConfigError(
            f"dense check refused: n={lat.n} exceeds {DENSE_CHECK_MAX_SITES} sites")


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key in FIELDS:
        value = getattr(cfg, key)
        if key == "candidates":
            text = ",".join(str(v) for v in value)
        elif key == "smax":
            text = "auto" if value is None else repr(float(value))
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
