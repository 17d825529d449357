"""Pilot generation and OFDM block assembly.

Frequency-domain symbols map to time samples through the unitary inverse DFT,
so a length-``N`` block of unit-modulus symbols has unit mean sample power.
Functions accept leading batch axes wherever that is cheap to support.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .numerics import dft, idft

__all__ = [
    "PilotTone",
    "OfdmBlock",
    "SlotFrame",
    "zadoff_chu",
    "qpsk",
    "ofdm_modulate",
    "remove_cp_and_demodulate",
    "build_slot_frames",
    "frame_stream",
    "assemble_stream",
    "pilot_windows",
]


@dataclass(frozen=True)
class PilotTone:
    symbols: np.ndarray
    root: int

    @property
    def n(self) -> int:
        return self.symbols.shape[-1]


@dataclass(frozen=True)
class OfdmBlock:
    freq_symbols: np.ndarray
    time_samples: np.ndarray
    cp_len: int


@dataclass(frozen=True)
class SlotFrame:
    """One RIS configuration slot: a pilot block followed by a data block."""

    pilot_block: OfdmBlock
    data_block: OfdmBlock
    slot_index: int

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate([self.pilot_block.time_samples, self.data_block.time_samples], axis=-1)


def zadoff_chu(n: int, root: int = 1) -> PilotTone:
    """Zadoff-Chu sequence of length ``n``.

    For even ``n`` the k-th symbol is ``exp(-1j*pi*root*k**2/n)``; for odd
    ``n`` it is ``exp(-1j*pi*root*k*(k+1)/n)``.
    """
    if n < 1:
        raise ValueError(f"sequence length must be >= 1, got {n}")
    if not 1 <= root < max(n, 2) or gcd(root, n) != 1:
        raise ValueError(f"root {root} must lie in [1, {n}) and be coprime to {n}")
    k = np.arange(n, dtype=np.int64)
    # exact integer phase mod 2n keeps long sequences accurate
    phase = (root * k * (k if n % 2 == 0 else k + 1)) % (2 * n)
    return PilotTone(np.exp(-1j * np.pi * phase / n), root)


def qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-energy QPSK symbols drawn uniformly."""
    bits = rng.integers(0, 2, size=(*np.atleast_1d(shape), 2))
    return ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)


def _check_cp(n: int, cp_len: int) -> None:
    if not 0 <= cp_len < n:
        raise ValueError(f"cp_len must satisfy 0 <= cp_len < N={n}, got {cp_len}")


def ofdm_modulate(freq_symbols, cp_len: int) -> OfdmBlock:
    """IDFT the symbols and prepend the last ``cp_len`` samples as a cyclic prefix."""
    freq_symbols = np.asarray(freq_symbols, dtype=np.complex128)
    n = freq_symbols.shape[-1]
    _check_cp(n, cp_len)
    body = idft(freq_symbols)
    time_samples = np.concatenate([body[..., n - cp_len:], body], axis=-1)
    return OfdmBlock(freq_symbols, time_samples, cp_len)


def remove_cp_and_demodulate(rx_samples, n: int, cp_len: int) -> np.ndarray:
    """Drop the first ``cp_len`` samples and DFT the following ``n``."""
    rx_samples = np.asarray(rx_samples)
    if rx_samples.shape[-1] < cp_len + n:
        raise ValueError(
            f"need at least cp_len + n = {cp_len + n} samples, got {rx_samples.shape[-1]}"
        )
    return dft(rx_samples[..., cp_len:cp_len + n])


def build_slot_frames(pilot: PilotTone, data_symbols, cp_len: int) -> list[SlotFrame]:
    """One :class:`SlotFrame` per row of ``data_symbols`` (shape ``(S, N)``).

    The same pilot tone is reused in every slot.
    """
    data_symbols = np.asarray(data_symbols)
    pilot_block = ofdm_modulate(pilot.symbols, cp_len)
    return [
        SlotFrame(pilot_block, ofdm_modulate(row, cp_len), i + 1)
        for i, row in enumerate(data_symbols)
    ]


def frame_stream(frames: list[SlotFrame]) -> np.ndarray:
    """Concatenate slots back to back with no guard interval."""
    return np.concatenate([f.samples for f in frames])


def assemble_stream(pilot_symbols, data_symbols, cp_len: int) -> np.ndarray:
    """Batched form of ``frame_stream(build_slot_frames(...))``.

    ``pilot_symbols`` has shape ``(N,)`` and ``data_symbols`` has shape
    ``(..., S, N)``. Returns ``(..., S, 2*(N + cp_len))`` per-slot sample rows.
    """
    data_symbols = np.asarray(data_symbols, dtype=np.complex128)
    pilot_time = ofdm_modulate(pilot_symbols, cp_len).time_samples
    data_time = ofdm_modulate(data_symbols, cp_len).time_samples
    pilot_time = np.broadcast_to(pilot_time, data_time.shape)
    return np.concatenate([pilot_time, data_time], axis=-1)


def pilot_windows(rx_stream, n: int, cp_len: int, n_slots: int) -> np.ndarray:
    """Demodulated pilot block of every slot from a received stream.

    Returns shape ``(..., N, n_slots)``: column ``i`` holds slot ``i``'s
    frequency-domain received pilot.
    """
    rx_stream = np.asarray(rx_stream)
    slot_len = 2 * (n + cp_len)
    need = n_slots * slot_len
    if rx_stream.shape[-1] < need - (n + cp_len):
        raise ValueError("received stream is too short for the requested slots")
    starts = np.arange(n_slots) * slot_len
    idx = starts[:, None] + np.arange(n + cp_len)[None, :]
    blocks = rx_stream[..., idx]  # (..., S, N + cp)
    return np.swapaxes(remove_cp_and_demodulate(blocks, n, cp_len), -1, -2)
