"""Experiment configuration.

A config file is TOML with a flat table whose keys are :class:`SweepConfig`
field names, for example::

    n_paths = 14
    cp_len = 8
    evm_target = 65.0
    snr_grid_db = [0, 10, 20, 30]
    estimators = ["ls_only", "eelm"]

Set ``evm_target = 0`` to bypass the amplifier, and ``snr_grid_db`` entries
may be ``inf`` for noiseless runs.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ESTIMATORS = ("ls_only", "eelm", "elm_no_std")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    n_subcarriers: int = 64
    n_paths: int = 12
    cp_len: int = 8
    n_subsurfaces: int = 8
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    evm_target: float = 55.0
    n_trials: int = 1000
    n_train: int = 10000
    seed: int = 0
    estimators: tuple[str, ...] = ESTIMATORS
    # ELM
    hidden_size: int = 256
    activation: str = "tanh"
    std_mode: str = "shared"
    denormalize: bool = True
    ridge: float = 0.0
    init_scale: float = 1.0
    train_snr_db: tuple[float, float] = (0.0, 30.0)
    # channel and waveform
    k_factor: float = 2.0
    pdp_decay: float = 0.2
    pilot_root: int = 1
    probe_blocks: int = 10
    chunk_size: int = 500

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "train_snr_db", tuple(float(s) for s in self.train_snr_db))
        self.validate()

    def validate(self) -> None:
        if self.n_subcarriers < 2:
            raise ConfigError("n_subcarriers must be >= 2")
        if self.n_paths < 1 or self.n_paths > self.n_subcarriers:
            raise ConfigError("n_paths must lie in [1, n_subcarriers]")
        if not 0 <= self.cp_len < self.n_subcarriers:
            raise ConfigError("cp_len must lie in [0, n_subcarriers)")
        if self.n_subsurfaces < 1:
            raise ConfigError("n_subsurfaces must be >= 1")
        if not 0 <= self.evm_target < 100:
            raise ConfigError("evm_target must lie in [0, 100); 0 disables the HPA")
        if self.n_trials < 0 or self.n_train < 0:
            raise ConfigError("trial and training counts must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        if self.probe_blocks < 2:
            raise ConfigError("probe_blocks must be >= 2")
        if self.init_scale <= 0:
            raise ConfigError("init_scale must be positive")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")

    @property
    def n_links(self) -> int:
        return self.n_subsurfaces + 1

    @property
    def hpa_enabled(self) -> bool:
        return self.evm_target > 0

    @property
    def needs_network(self) -> bool:
        return any(e != "ls_only" for e in self.estimators)

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in dataclasses.fields(self)}


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def from_mapping(data: dict, base: SweepConfig | None = None) -> SweepConfig:
    base = base or SweepConfig()
    names = {f.name for f in dataclasses.fields(SweepConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return dataclasses.replace(base, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    """Read a TOML config file; raises FileNotFoundError or ConfigError."""
    path = Path(path)
    with path.open("rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return from_mapping(data)
