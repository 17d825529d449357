"""Rician multipath links, RIS cascading and the pilot reflection matrix.

CIRs are plain complex arrays whose last axis holds the ``L`` taps. A
:class:`ChannelRealization` bundles the direct link and the per-sub-surface
transmitter-RIS and RIS-receiver links for one coherence interval; the
channel stays fixed over all pilot slots of an estimation round.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import complex_gaussian

__all__ = [
    "ChannelRealization",
    "RisReflectionMatrix",
    "gen_rician_cir",
    "gen_realization",
    "cascade",
    "composite_cir",
    "build_theta",
    "cfr",
    "exp_pdp",
]


@dataclass(frozen=True)
class ChannelRealization:
    """All link CIRs of one realization.

    Attributes
    ----------
    direct : ndarray, shape (..., L)
        Transmitter-receiver link.
    tx_ris, ris_rx : ndarray, shape (..., M, L)
        Transmitter-to-sub-surface and sub-surface-to-receiver links.
    """

    direct: np.ndarray
    tx_ris: np.ndarray
    ris_rx: np.ndarray

    def __post_init__(self):
        l = self.direct.shape[-1]
        if self.tx_ris.shape != self.ris_rx.shape:
            raise ValueError("tx_ris and ris_rx must have the same shape")
        if self.tx_ris.shape[-1] != l:
            raise ValueError("all links must share the same number of taps")

    @property
    def n_taps(self) -> int:
        return self.direct.shape[-1]

    @property
    def m_subsurfaces(self) -> int:
        return self.tx_ris.shape[-2]

    @property
    def cascaded(self) -> np.ndarray:
        """Per-sub-surface cascaded CIRs, shape ``(..., M, L)``."""
        return cascade(self.tx_ris, self.ris_rx)

    def link_cirs(self) -> np.ndarray:
        """Direct link followed by the M cascaded links, shape ``(..., M + 1, L)``."""
        return np.concatenate([self.direct[..., None, :], self.cascaded], axis=-2)


@dataclass(frozen=True)
class RisReflectionMatrix:
    theta: np.ndarray

    @property
    def m_subsurfaces(self) -> int:
        return self.theta.shape[0] - 1

    @property
    def phase_vectors(self) -> list[np.ndarray]:
        """RIS phase configuration used in each pilot slot."""
        return [self.theta[1:, i] for i in range(self.theta.shape[1])]


def exp_pdp(l: int, decay: float) -> np.ndarray:
    """Exponential power-delay profile normalized to unit total power."""
    p = np.exp(-decay * np.arange(l))
    return p / p.sum()


def gen_rician_cir(
    rng: np.random.Generator,
    l: int,
    k_factor: float = 2.0,
    pdp_decay: float = 0.2,
    size: tuple[int, ...] = (),
    los_phase: float = 0.0,
) -> np.ndarray:
    """Draw Rician CIRs with a LOS component on the first tap.

    The first tap mixes a fixed LOS phasor (weight ``K/(K+1)``) with diffuse
    scattering (weight ``1/(K+1)``); later taps are Rayleigh. Tap powers follow
    :func:`exp_pdp`, so the expected total power is 1.

    Returns an array of shape ``(*size, l)``.
    """
    if l < 1:
        raise ValueError(f"number of taps must be >= 1, got {l}")
    if k_factor < 0:
        raise ValueError("k_factor must be non-negative")
    amp = np.sqrt(exp_pdp(l, pdp_decay))
    taps = complex_gaussian(rng, (*size, l)) * amp
    los = np.sqrt(k_factor / (k_factor + 1.0)) * np.exp(1j * los_phase)
    taps[..., 0] = amp[0] * los + taps[..., 0] * np.sqrt(1.0 / (k_factor + 1.0))
    return taps


def gen_realization(
    rng: np.random.Generator,
    l: int,
    m: int,
    k_factor: float = 2.0,
    pdp_decay: float = 0.2,
) -> ChannelRealization:
    direct = gen_rician_cir(rng, l, k_factor, pdp_decay)
    tx_ris = gen_rician_cir(rng, l, k_factor, pdp_decay, size=(m,))
    ris_rx = gen_rician_cir(rng, l, k_factor, pdp_decay, size=(m,))
    return ChannelRealization(direct, tx_ris, ris_rx)


def cascade(tx_ris, ris_rx) -> np.ndarray:
    """Elementwise product of the two hops of a reflected path."""
    tx_ris = np.asarray(tx_ris)
    ris_rx = np.asarray(ris_rx)
    if tx_ris.shape[-1] != ris_rx.shape[-1]:
        raise ValueError(
            f"tap count mismatch: {tx_ris.shape[-1]} vs {ris_rx.shape[-1]}"
        )
    # explicit parts: each term is symmetric, so swapping the hops is bit-exact
    ar, ai, br, bi = tx_ris.real, tx_ris.imag, ris_rx.real, ris_rx.imag
    return (ar * br - ai * bi) + 1j * (ar * bi + ai * br)


def composite_cir(real: ChannelRealization, phases) -> np.ndarray:
    """Overall CIR seen by the receiver for one RIS phase configuration.

    ``phases`` has shape ``(..., M)`` with unit-modulus entries; extra leading
    axes (e.g. one row per pilot slot) broadcast against the realization.
    """
    phases = np.asarray(phases)
    if np.any(np.abs(np.abs(phases) - 1.0) > 1e-9):
        raise ValueError("RIS phase coefficients must have unit modulus")
    if phases.shape[-1] != real.m_subsurfaces:
        raise ValueError(
            f"expected {real.m_subsurfaces} phase coefficients, got {phases.shape[-1]}"
        )
    return real.direct + np.einsum("...m,...ml->...l", phases, real.cascaded)


def build_theta(m: int) -> RisReflectionMatrix:
    """Pilot reflection matrix: the unnormalized (M+1)-point DFT matrix.

    Row 0 is all ones; column ``i`` below it is the RIS phase vector of slot
    ``i``. Its inverse is ``theta.conj().T / (M + 1)``.
    """
    if m < 1:
        raise ValueError(f"need at least one sub-surface, got {m}")
    k = np.arange(m + 1)
    theta = np.exp(-2j * np.pi * (np.outer(k, k) % (m + 1)) / (m + 1))
    theta[0, :] = 1.0
    return RisReflectionMatrix(theta)


def cfr(taps, n: int) -> np.ndarray:
    """Channel frequency response on ``n`` subcarriers.

    Unnormalized DFT of the zero-padded taps, i.e. ``sum_l h[l] exp(-2j*pi*k*l/n)``;
    this is the quantity a pilot-divided LS estimate converges to.
    """
    taps = np.asarray(taps)
    if taps.shape[-1] > n:
        raise ValueError(f"{taps.shape[-1]} taps do not fit in {n} subcarriers")
    return np.fft.fft(taps, n=n, axis=-1)
