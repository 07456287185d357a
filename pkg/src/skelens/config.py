"""JSON pipeline configuration.

Example::

    {
      "pool": [{"kind": "median", "k": 3}, {"kind": "gamma", "gamma": 0.5}, ...],
      "ensemble": {"phi_count": 8, "group_size": 3, "threshold": 0.5, "seed": 0},
      "kernels": "default",
      "degrade": {"noises": [{"kind": "awgn", "sigma": 10}],
                  "signal_dep": {"kind": "identity"}, "seed": 0},
      "io": {"format": "png", "threads": 1}
    }

Every section is optional. Unknown keys anywhere are an error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .degrade import DegradeRecipe
from .ensemble import EnsembleConfig
from .prepool import PrimitiveSpec, default_pool
from .thinning import KernelSet, load_kernel_set

__all__ = ["ConfigError", "IOOptions", "PipelineConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration, recipe or kernel file."""


@dataclass(frozen=True)
class IOOptions:
    format: str = "png"
    threads: int = 1
    dump_intermediate: bool = False

    def __post_init__(self):
        if self.format not in ("png", "pgm"):
            raise ValueError(f"io.format must be 'png' or 'pgm', got {self.format!r}")
        if self.threads < 1:
            raise ValueError(f"io.threads must be >= 1, got {self.threads}")


@dataclass
class PipelineConfig:
    pool: list[PrimitiveSpec] = field(default_factory=default_pool)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    kernels: str = "default"
    degrade: DegradeRecipe | None = None
    io: IOOptions = field(default_factory=IOOptions)

    def kernel_set(self) -> KernelSet:
        try:
            return load_kernel_set(self.kernels)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"kernels {self.kernels!r}: {exc}") from exc

    def to_dict(self) -> dict:
        d = {
            "pool": [p.to_dict() for p in self.pool],
            "ensemble": self.ensemble.to_dict(),
            "kernels": self.kernels,
            "io": {"format": self.io.format, "threads": self.io.threads,
                   "dump_intermediate": self.io.dump_intermediate},
        }
        if self.degrade is not None:
            d["degrade"] = self.degrade.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "PipelineConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - {"pool", "ensemble", "kernels", "degrade", "io"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            pool = ([PrimitiveSpec.from_dict(p) for p in d["pool"]]
                    if "pool" in d else default_pool())
            ensemble = EnsembleConfig.from_dict(d.get("ensemble", {}))
            kernels = d.get("kernels", "default")
            if not isinstance(kernels, str):
                raise ValueError("kernels must be 'default' or a file path")
            if kernels != "default" and base is not None and not Path(kernels).is_absolute():
                kernels = str(base / kernels)
            recipe = DegradeRecipe.from_dict(d["degrade"]) if "degrade" in d else None
            io_raw = d.get("io", {})
            unknown_io = set(io_raw) - {"format", "threads", "dump_intermediate"}
            if unknown_io:
                raise ValueError(f"unknown io keys: {sorted(unknown_io)}")
            io = IOOptions(**io_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if len(set(pool)) != len(pool) or len(pool) < 3:
            raise ConfigError("pool needs at least 3 distinct primitives")
        cfg = cls(pool, ensemble, kernels, recipe, io)
        cfg.kernel_set()
        return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return PipelineConfig.from_dict(raw, base=path.parent)
