"""JSON run configuration for the command-line tool.

Every section is a dataclass; unknown keys are rejected with the offending
dotted name, and relative paths are resolved against the config file's
directory.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from blocksampler.dual_solver import SolverConfig
from blocksampler.errors import InputError


@dataclass
class DictionarySection:
    kind: str = "lines"
    n: int = 64
    path: str | None = None


@dataclass
class DensitySection:
    kind: str = "radial"
    mask_fraction: float = 0.03
    exponent: float = 2.0
    wavelet_depth: int | None = None
    path: str | None = None


@dataclass
class SamplingSection:
    pi_path: str | None = None
    target_ratio: float = 0.1
    nblocks: int | None = None
    ndraws: int = 100_000
    radial_kind: str | None = None
    nlines: int | None = None


@dataclass
class ReconstructionSection:
    image: str = "shepp_logan"
    size: int = 128
    wavelet_depth: int | None = None
    dr_gamma: float = 1.0
    dr_iters: int = 500
    scheme_path: str | None = None
    ratios: list[float] = field(default_factory=lambda: [0.10, 0.15, 0.20])
    seeds: int = 20
    kinds: list[str] = field(default_factory=lambda: ["pi", "equiangular", "golden", "uniform_random"])
    workers: int = 1


_PATH_FIELDS = {
    "dictionary": ("path",),
    "density": ("path",),
    "sampling": ("pi_path",),
    "reconstruction": ("scheme_path",),
}


@dataclass
class RunConfig:
    dictionary: DictionarySection = field(default_factory=DictionarySection)
    density: DensitySection = field(default_factory=DensitySection)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    reconstruction: ReconstructionSection = field(default_factory=ReconstructionSection)
    output_dir: str = "."
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        out = {
            name: dataclasses.asdict(getattr(self, name))
            for name in ("dictionary", "density", "sampling", "reconstruction")
        }
        out["solver"] = self.solver.to_dict()
        out["output_dir"] = self.output_dir
        out["seed"] = self.seed
        return out

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _section(cls, data: Any, name: str, base: Path | None):
    if not isinstance(data, dict):
        raise InputError(f"config section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"unknown config key {name}.{unknown[0]}")
    values = dict(data)
    if base is not None:
        for key in _PATH_FIELDS.get(name, ()):
            if values.get(key) is not None:
                values[key] = str(base / values[key])
    try:
        return cls(**values)
    except InputError as exc:
        raise InputError(f"{name}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: {exc}") from exc


def config_from_dict(data: dict, base: Path | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    sections = {
        "dictionary": DictionarySection,
        "density": DensitySection,
        "solver": SolverConfig,
        "sampling": SamplingSection,
        "reconstruction": ReconstructionSection,
    }
    unknown = sorted(set(data) - set(sections) - {"output_dir", "seed"})
    if unknown:
        raise InputError(f"unknown config key {unknown[0]}")
    kwargs: dict[str, Any] = {name: _section(cls, data.get(name, {}), name, base) for name, cls in sections.items()}
    output_dir = data.get("output_dir", ".")
    if not isinstance(output_dir, str):
        raise InputError("output_dir must be a string")
    kwargs["output_dir"] = str(base / output_dir) if base is not None else output_dir
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InputError(f"seed must be a non-negative integer, got {seed!r}")
    kwargs["seed"] = seed
    return RunConfig(**kwargs)


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data, path.resolve().parent)
