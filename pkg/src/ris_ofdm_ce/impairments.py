"""Transmitter and propagation impairments.

* memoryless Saleh-type HPA with a drive-level knob, plus EVM measurement and
  drive calibration to a target EVM,
* linear convolution with the multipath channel (tails of earlier blocks leak
  into later ones, which is what an insufficient CP fails to absorb),
* AWGN at a receiver-side SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import complex_gaussian

__all__ = [
    "HpaModel",
    "LinkNoise",
    "CalibrationError",
    "hpa_distort",
    "hpa_transmit",
    "linear_reference",
    "evm",
    "evm_at_drive",
    "calibrate_drive",
    "convolve",
    "transmit_through_channel",
    "transmit_slots",
]


class CalibrationError(RuntimeError):
    """No drive level in the search bracket reaches the requested EVM."""


@dataclass(frozen=True)
class HpaModel:
    alpha_a: float = 1.96
    beta_a: float = 0.99
    alpha_phi: float = 2.53
    beta_phi: float = 2.82
    drive_scale: float = 1.0

    def __post_init__(self):
        if min(self.alpha_a, self.beta_a, self.alpha_phi, self.beta_phi) <= 0:
            raise ValueError("HPA constants must all be positive")
        if self.drive_scale <= 0:
            raise ValueError("drive_scale must be positive")

    def amplitude(self, r):
        """AM/AM curve ``alpha_a*r / (1 + beta_a*r**2)``."""
        r = np.asarray(r, dtype=np.float64)
        return self.alpha_a * r / (1.0 + self.beta_a * r * r)

    def phase(self, r):
        """AM/PM curve ``alpha_phi*r**2 / (1 + beta_phi*r**2)`` in radians."""
        r2 = np.asarray(r, dtype=np.float64) ** 2
        return self.alpha_phi * r2 / (1.0 + self.beta_phi * r2)

    @property
    def small_signal_gain(self) -> float:
        return self.alpha_a

    def with_drive(self, g: float) -> "HpaModel":
        return replace(self, drive_scale=float(g))


@dataclass(frozen=True)
class LinkNoise:
    snr_db: float
    variance: float

    @classmethod
    def for_signal(cls, rx_clean, snr_db: float) -> "LinkNoise":
        """Noise level giving ``snr_db`` relative to the mean power of ``rx_clean``."""
        if np.isinf(snr_db) and snr_db > 0:
            return cls(snr_db, 0.0)
        power = float(np.mean(np.abs(np.asarray(rx_clean)) ** 2))
        return cls(snr_db, power / 10.0 ** (snr_db / 10.0))


def hpa_distort(samples, model: HpaModel) -> np.ndarray:
    """Raw HPA output for input samples scaled by the drive level.

    With ``r = g*|x|`` each sample becomes ``A(r) * exp(1j*(angle(x) + Phi(r)))``.
    """
    x = np.asarray(samples, dtype=np.complex128)
    r = model.drive_scale * np.abs(x)
    return model.amplitude(r) * np.exp(1j * (np.angle(x) + model.phase(r)))


def hpa_transmit(samples, model: HpaModel | None) -> np.ndarray:
    """HPA output renormalized to unit small-signal gain; ``None`` bypasses the HPA."""
    if model is None:
        return np.asarray(samples, dtype=np.complex128)
    return hpa_distort(samples, model) / (model.alpha_a * model.drive_scale)


def linear_reference(samples, model: HpaModel) -> np.ndarray:
    """Output of an ideal amplifier with the same small-signal gain and no AM/PM."""
    return model.alpha_a * model.drive_scale * np.asarray(samples, dtype=np.complex128)


def evm(distorted, linear_ref) -> float:
    """Error vector magnitude in percent."""
    distorted = np.asarray(distorted)
    linear_ref = np.asarray(linear_ref)
    if distorted.shape != linear_ref.shape:
        raise ValueError(f"shape mismatch: {distorted.shape} vs {linear_ref.shape}")
    ref_energy = np.sum(np.abs(linear_ref) ** 2)
    if ref_energy == 0:
        raise ZeroDivisionError("reference signal has zero energy")
    return 100.0 * float(np.sqrt(np.sum(np.abs(distorted - linear_ref) ** 2) / ref_energy))


def evm_at_drive(model: HpaModel, g: float, probe) -> float:
    m = model.with_drive(g)
    return evm(hpa_distort(probe, m), linear_reference(probe, m))


def calibrate_drive(
    model: HpaModel,
    target_evm: float,
    probe,
    lo: float = 1e-3,
    hi: float = 1e3,
    max_iter: int = 60,
    tol: float = 1e-3,
) -> float:
    """Find the drive scale whose EVM on ``probe`` equals ``target_evm`` (percent).

    Bisection in ``log(g)`` over ``[lo, hi]``; relies on EVM being
    non-decreasing in ``g``. Stops once within ``tol`` percentage points or
    after ``max_iter`` halvings.
    """
    if not 0 < target_evm < 100:
        raise ValueError(f"target EVM must lie in (0, 100), got {target_evm}")
    probe = np.asarray(probe)
    e_lo = evm_at_drive(model, lo, probe)
    e_hi = evm_at_drive(model, hi, probe)
    if not e_lo <= target_evm <= e_hi:
        raise CalibrationError(
            f"target EVM {target_evm}% outside reachable range "
            f"[{e_lo:.4g}%, {e_hi:.4g}%] for drive in [{lo}, {hi}]"
        )
    a, b = np.log(lo), np.log(hi)
    g = np.exp(0.5 * (a + b))
    for _ in range(max_iter):
        g = np.exp(0.5 * (a + b))
        e = evm_at_drive(model, g, probe)
        if abs(e - target_evm) <= tol:
            break
        if e < target_evm:
            a = np.log(g)
        else:
            b = np.log(g)
    return float(g)


def convolve(stream, taps) -> np.ndarray:
    """Full linear convolution along the last axis, batched over leading axes.

    Output length is ``len(stream) + len(taps) - 1``.
    """
    stream = np.asarray(stream)
    taps = np.asarray(taps)
    n, l = stream.shape[-1], taps.shape[-1]
    batch = np.broadcast_shapes(stream.shape[:-1], taps.shape[:-1])
    out = np.zeros((*batch, n + l - 1), dtype=np.result_type(stream, taps, np.complex128))
    for k in range(l):
        out[..., k:k + n] += taps[..., k:k + 1] * stream
    return out


def transmit_through_channel(
    stream,
    h,
    noise: LinkNoise | float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Convolve ``stream`` with the CIR ``h`` and add CSCG noise.

    ``noise`` is either a :class:`LinkNoise` or a bare variance.
    """
    variance = noise.variance if isinstance(noise, LinkNoise) else float(noise)
    y = convolve(stream, h)
    if variance > 0:
        if rng is None:
            raise ValueError("an rng is required when the noise variance is positive")
        y = y + complex_gaussian(rng, y.shape, variance)
    return y


def transmit_slots(slot_samples, slot_cirs) -> np.ndarray:
    """Noiseless received stream for back-to-back slots with per-slot channels.

    ``slot_samples`` has shape ``(..., S, T)`` and ``slot_cirs`` shape
    ``(..., S, L)``. Each slot is convolved with the channel in force while it
    was sent; its ``L - 1`` tail samples overlap the start of the next slot.
    Returns ``(..., S*T + L - 1)``.
    """
    slot_samples = np.asarray(slot_samples)
    slot_cirs = np.asarray(slot_cirs)
    s, t = slot_samples.shape[-2:]
    l = slot_cirs.shape[-1]
    per_slot = convolve(slot_samples, slot_cirs)  # (..., S, T + L - 1)
    out = np.zeros((*per_slot.shape[:-2], s * t + l - 1), dtype=per_slot.dtype)
    for i in range(s):
        out[..., i * t:i * t + t + l - 1] += per_slot[..., i, :]
    return out
