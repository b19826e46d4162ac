"""One JSON document holding every module's settings, plus its content hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import dsp
from .control import DEFAULT_BIASES, TARGET_POLICIES
from .cwt import CwtConfig
from .detector import TuneGrid
from .neural.model import ModelConfig

SEED_ENV = "PROSODIKE_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    norm_exponent: int = 2  # 2: divide by 3 variances, 1: by 3 standard deviations

    def __post_init__(self) -> None:
        if self.norm_exponent not in (1, 2):
            raise ConfigError("norm_exponent must be 1 or 2")


@dataclass(frozen=True)
class ControlConfig:
    biases: tuple[float, ...] = DEFAULT_BIASES
    target: str = "neutral"

    def __post_init__(self) -> None:
        object.__setattr__(self, "biases", tuple(float(b) for b in self.biases))
        if self.target not in TARGET_POLICIES:
            raise ConfigError(f"control.target must be one of {TARGET_POLICIES}")


@dataclass(frozen=True)
class SynthConfig:
    n_utterances: int = 1000

    def __post_init__(self) -> None:
        if self.n_utterances < 1:
            raise ConfigError("synth.n_utterances must be >= 1")


SECTIONS: dict[str, type] = {
    "stft": dsp.StftConfig,
    "mel": dsp.MelConfig,
    "pitch": dsp.PitchConfig,
    "cwt": CwtConfig,
    "tune": TuneGrid,
    "features": FeatureConfig,
    "model": ModelConfig,
    "control": ControlConfig,
    "synth": SynthConfig,
}


def _jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _build(cls: type, data: Any, where: str) -> Any:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - names - ({"weights_step"} if cls is TuneGrid else set())
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")
    try:
        if cls is TuneGrid:
            return TuneGrid.from_dict(data)
        d = dict(data)
        if cls is CwtConfig and "weights" in d:
            d["weights"] = tuple(d["weights"])
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    stft: dsp.StftConfig = field(default_factory=dsp.StftConfig)
    mel: dsp.MelConfig = field(default_factory=dsp.MelConfig)
    pitch: dsp.PitchConfig = field(default_factory=dsp.PitchConfig)
    cwt: CwtConfig = field(default_factory=CwtConfig)
    tune: TuneGrid = field(default_factory=TuneGrid)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a JSON object")
        extra = set(data) - set(SECTIONS) - {"seed"}
        if extra:
            raise ConfigError(f"unknown top-level key(s) {sorted(extra)}")
        kwargs: dict[str, Any] = {}
        if "seed" in data:
            if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
                raise ConfigError("seed must be an integer")
            kwargs["seed"] = data["seed"]
        for name, sec in SECTIONS.items():
            if name in data:
                kwargs[name] = _build(sec, data[name], name)
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return _jsonable(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_section(self, name: str, **changes: Any) -> "RunConfig":
        """Copy with keys of one section replaced (validated like file input)."""
        if name == "seed":
            return dataclasses.replace(self, seed=int(changes["value"]))
        merged = {**_jsonable(getattr(self, name)), **changes}
        return dataclasses.replace(self, **{name: _build(SECTIONS[name], merged, name)})

    @property
    def model_config(self) -> ModelConfig:
        return self.model.replace(seed=self.seed)


def load_config(path: str | None, environ: Mapping[str, str] | None = None) -> RunConfig:
    """Read a config file (or defaults) and apply the seed environment override."""
    if path is None:
        cfg = RunConfig()
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        cfg = RunConfig.from_dict(data)
    env = os.environ if environ is None else environ
    if env.get(SEED_ENV, "").strip():
        try:
            cfg = dataclasses.replace(cfg, seed=int(env[SEED_ENV]))
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    return cfg
