"""Offline phase: synthetic training data and network fitting."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..estimator import ElmNetwork, elm_train
from .config import SweepConfig
from .pipeline import TRAIN, draw_trials, hpa_for, observe


@dataclass(frozen=True)
class TrainingSet:
    """Aligned samples and labels, shape ``(N_d, M + 1, N)`` each."""

    samples: np.ndarray
    labels: np.ndarray
    snr_db: np.ndarray
    seed: int
    evm_target: float
    drive_scale: float

    def __len__(self) -> int:
        return self.samples.shape[0]


def generate_training_set(cfg: SweepConfig) -> TrainingSet:
    """Push ``n_train`` independent realizations through the impaired link.

    Each draws its SNR uniformly from ``cfg.train_snr_db``. Samples are the
    separated LS CFRs, labels the true per-link CFRs.
    """
    hpa = hpa_for(cfg)
    n, links = cfg.n_subcarriers, cfg.n_links
    samples = np.empty((cfg.n_train, links, n), dtype=np.complex128)
    labels = np.empty_like(samples)
    snr = np.empty(cfg.n_train)
    for start in range(0, cfg.n_train, cfg.chunk_size):
        idx = np.arange(start, min(start + cfg.chunk_size, cfg.n_train))
        batch = draw_trials(cfg, idx, TRAIN)
        obs = observe(cfg, batch, batch.train_snr_db, hpa)
        samples[idx] = np.swapaxes(obs.separated, -1, -2)
        labels[idx] = np.swapaxes(obs.truth, -1, -2)
        snr[idx] = batch.train_snr_db
    return TrainingSet(
        samples, labels, snr, cfg.seed, cfg.evm_target, hpa.drive_scale if hpa else 0.0
    )


def train_networks(cfg: SweepConfig, data: TrainingSet) -> dict[str, ElmNetwork]:
    """Fit one network per ELM-based estimator in ``cfg.estimators``.

    Both variants share the same random input layer; ``elm_no_std`` only
    drops the pre-activation standardization.
    """
    if len(data) == 0:
        raise ValueError("training set is empty")
    nets = {}
    for name in cfg.estimators:
        if name == "ls_only":
            continue
        std_mode = "none" if name == "elm_no_std" else cfg.std_mode
        net = ElmNetwork.initialize(
            2 * cfg.n_subcarriers,
            cfg.hidden_size,
            seed=cfg.seed,
            init_scale=cfg.init_scale,
            activation=cfg.activation,
            std_mode=std_mode,
            denormalize=cfg.denormalize,
            ridge=cfg.ridge,
        )
        nets[name] = elm_train(net, data.samples, data.labels)
    return nets


# --- dataset file -----------------------------------------------------------
#
# Little-endian. Header: magic b"EELD", version u16, seed u64, n_train u32,
# n_links u32, n_subcarriers u32, evm_target f64, drive_scale f64.
# Body: snr_db f64[n_train], then samples and labels as
# f64[n_train, n_links, n_subcarriers, 2] (real, imag interleaved).

DATASET_MAGIC = b"EELD"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sHQIIIdd")


def save_training_set(path, data: TrainingSet) -> None:
    n_d, links, n = data.samples.shape if len(data) else (0, 0, 0)
    header = _HEADER.pack(
        DATASET_MAGIC, DATASET_VERSION, data.seed, n_d, links, n,
        float(data.evm_target), float(data.drive_scale),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(data.snr_db, dtype="<f8").tobytes())
        for arr in (data.samples, data.labels):
            pairs = np.stack([arr.real, arr.imag], axis=-1)
            f.write(np.ascontiguousarray(pairs, dtype="<f8").tobytes())


def load_training_set(path) -> TrainingSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != DATASET_MAGIC:
        raise ValueError(f"{path}: not a training-set file")
    _, version, seed, n_d, links, n, evm, drive = _HEADER.unpack_from(raw)
    if version != DATASET_VERSION:
        raise ValueError(f"{path}: unsupported dataset version {version}")
    count = n_d * links * n * 2
    if len(raw) != _HEADER.size + 8 * (n_d + 2 * count):
        raise ValueError(f"{path}: truncated or corrupt dataset")
    off = _HEADER.size
    snr = np.frombuffer(raw, "<f8", n_d, off).astype(np.float64)
    off += 8 * n_d
    arrays = []
    for _ in range(2):
        pairs = np.frombuffer(raw, "<f8", count, off).reshape(n_d, links, n, 2)
        arrays.append(pairs[..., 0] + 1j * pairs[..., 1])
        off += 8 * count
    return TrainingSet(arrays[0], arrays[1], snr, seed, evm, drive)
