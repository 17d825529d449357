"""End-to-end link simulation for batches of Monte Carlo trials.

Each trial owns a generator keyed by ``(seed, purpose, trial_index)``; the
channel, the data symbols and a unit-variance noise draw all come from it.
The noise is scaled to the requested SNR afterwards, so one trial sees the
same channel and noise shape at every SNR point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..channel import ChannelRealization, build_theta, cfr, composite_cir, gen_realization
from ..estimator import ElmNetwork, elm_infer, ls_estimate, nmse_per_trial, separate_links
from ..impairments import HpaModel, calibrate_drive, hpa_transmit, transmit_slots
from ..numerics import complex_gaussian, trial_rng
from ..waveform import assemble_stream, pilot_windows, qpsk, zadoff_chu
from .config import SweepConfig

# purpose tags keep training, test and calibration streams disjoint
PROBE, TRAIN, TEST = 0, 1, 2


@dataclass(frozen=True)
class TrialBatch:
    indices: np.ndarray
    channel: ChannelRealization  # leading axis = trial
    data: np.ndarray  # (B, M + 1, N) QPSK data symbols
    unit_noise: np.ndarray  # (B, stream_len)
    train_snr_db: np.ndarray  # (B,) only meaningful for TRAIN draws

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Observation:
    """What the receiver computes for a batch, next to the ground truth."""

    ls: np.ndarray  # (B, N, M + 1) per-slot composite CFRs
    separated: np.ndarray  # (B, N, M + 1) per-link CFRs after Θ-inversion
    truth: np.ndarray  # (B, N, M + 1) true per-link CFRs


def stream_length(cfg: SweepConfig) -> int:
    return cfg.n_links * 2 * (cfg.n_subcarriers + cfg.cp_len) + cfg.n_paths - 1


def draw_trials(cfg: SweepConfig, indices, purpose: int = TEST) -> TrialBatch:
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    n_len = stream_length(cfg)
    direct, tx_ris, ris_rx, data, noise, snr = [], [], [], [], [], []
    lo, hi = cfg.train_snr_db
    for idx in indices:
        rng = trial_rng(cfg.seed, purpose, int(idx))
        real = gen_realization(rng, cfg.n_paths, cfg.n_subsurfaces, cfg.k_factor, cfg.pdp_decay)
        direct.append(real.direct)
        tx_ris.append(real.tx_ris)
        ris_rx.append(real.ris_rx)
        data.append(qpsk(rng, (cfg.n_links, cfg.n_subcarriers)))
        noise.append(complex_gaussian(rng, n_len))
        snr.append(rng.uniform(lo, hi))
    m, l, n = cfg.n_subsurfaces, cfg.n_paths, cfg.n_subcarriers
    channel = ChannelRealization(
        np.array(direct).reshape(-1, l),
        np.array(tx_ris).reshape(-1, m, l),
        np.array(ris_rx).reshape(-1, m, l),
    )
    return TrialBatch(
        indices,
        channel,
        np.array(data).reshape(-1, cfg.n_links, n),
        np.array(noise).reshape(-1, n_len),
        np.array(snr, dtype=np.float64),
    )


def calibration_probe(cfg: SweepConfig) -> np.ndarray:
    """Seeded transmit signal (pilot + QPSK data blocks) used to set the HPA drive."""
    rng = trial_rng(cfg.seed, PROBE, 0)
    data = qpsk(rng, (cfg.probe_blocks // 2, cfg.n_subcarriers))
    pilot = zadoff_chu(cfg.n_subcarriers, cfg.pilot_root).symbols
    return assemble_stream(pilot, data, cfg.cp_len).reshape(-1)


@lru_cache(maxsize=64)
def _drive_for(n: int, cp: int, probe_blocks: int, root: int, seed: int, evm: float) -> float:
    cfg = SweepConfig(
        n_subcarriers=n, cp_len=cp, probe_blocks=probe_blocks, pilot_root=root, seed=seed,
        n_paths=1, evm_target=evm,
    )
    return calibrate_drive(HpaModel(), evm, calibration_probe(cfg))


def hpa_for(cfg: SweepConfig) -> HpaModel | None:
    """Amplifier model driven to the configured EVM, or ``None`` when bypassed."""
    if not cfg.hpa_enabled:
        return None
    g = _drive_for(
        cfg.n_subcarriers, cfg.cp_len, cfg.probe_blocks, cfg.pilot_root, cfg.seed, cfg.evm_target
    )
    return HpaModel(drive_scale=g)


def observe(cfg: SweepConfig, batch: TrialBatch, snr_db, hpa: HpaModel | None = None) -> Observation:
    """Run a batch through transmitter, channel and receiver front end.

    ``snr_db`` is a scalar or one value per trial; ``inf`` means noiseless.
    """
    n, cp = cfg.n_subcarriers, cfg.cp_len
    theta = build_theta(cfg.n_subsurfaces)
    pilot = zadoff_chu(n, cfg.pilot_root).symbols

    slots = hpa_transmit(assemble_stream(pilot, batch.data, cp), hpa)  # (B, S, T)
    ch = batch.channel
    per_slot = ChannelRealization(ch.direct[:, None], ch.tx_ris[:, None], ch.ris_rx[:, None])
    h_slots = composite_cir(per_slot, theta.theta[1:, :].T)  # (B, S, L)
    clean = transmit_slots(slots, h_slots)

    snr = np.broadcast_to(np.asarray(snr_db, dtype=np.float64), (len(batch),))
    power = np.mean(np.abs(clean) ** 2, axis=-1)
    with np.errstate(over="ignore"):
        variance = np.where(np.isposinf(snr), 0.0, power / 10.0 ** (snr / 10.0))
    rx = clean + np.sqrt(variance)[:, None] * batch.unit_noise

    y = pilot_windows(rx, n, cp, cfg.n_links)
    ls = ls_estimate(y, pilot)
    separated = separate_links(ls, theta)
    truth = np.swapaxes(cfr(ch.link_cirs(), n), -1, -2)
    return Observation(ls, separated, truth)


def estimate_nmse(
    cfg: SweepConfig,
    obs: Observation,
    networks: dict[str, ElmNetwork] | None = None,
) -> dict[str, np.ndarray]:
    """Per-trial NMSE of every configured estimator."""
    out = {}
    for name in cfg.estimators:
        if name == "ls_only":
            est = obs.separated
        else:
            if not networks or name not in networks:
                raise KeyError(f"estimator {name!r} needs a trained network")
            est = elm_infer(networks[name], obs.separated)
        out[name] = nmse_per_trial(est, obs.truth)
    return out


def run_trial(
    cfg: SweepConfig,
    trial_index: int,
    snr_db: float,
    networks: dict[str, ElmNetwork] | None = None,
) -> dict[str, float]:
    """NMSE of each estimator for a single test trial."""
    try:
        batch = draw_trials(cfg, [trial_index], TEST)
        obs = observe(cfg, batch, snr_db, hpa_for(cfg))
        return {k: float(v[0]) for k, v in estimate_nmse(cfg, obs, networks).items()}
    except Exception as exc:
        raise RuntimeError(f"trial {trial_index} at {snr_db} dB failed: {exc}") from exc
