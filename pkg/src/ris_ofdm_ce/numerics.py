"""Complex linear-algebra substrate shared by the rest of the package.

Everything here works in double precision. Random draws always go through an
explicit :class:`numpy.random.Generator`; use :func:`trial_rng` to derive an
independent generator per Monte Carlo trial.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "dft_matrix",
    "dft",
    "idft",
    "pseudo_inverse",
    "complex_gaussian",
    "seeded_rng",
    "trial_rng",
]


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entry ``(k, l) = exp(-2j*pi*k*l/n) / sqrt(n)``."""
    if n < 1:
        raise ValueError(f"DFT size must be >= 1, got {n}")
    k = np.arange(n)
    # reduce k*l mod n first so large n keeps full phase accuracy
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n) / np.sqrt(n)


def dft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary DFT along ``axis``; same operator as ``dft_matrix(n) @ x``."""
    return np.fft.fft(x, axis=axis, norm="ortho")


def idft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`dft` (multiplication by the conjugate transpose)."""
    return np.fft.ifft(x, axis=axis, norm="ortho")


def pseudo_inverse(m: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via the SVD.

    Parameters
    ----------
    m : array_like, shape (rows, cols)
        Real or complex matrix with finite entries.
    tol : float, optional
        Relative cutoff. Singular values below ``tol * s_max`` are treated as
        zero. Defaults to ``eps * max(rows, cols)``.

    Returns
    -------
    ndarray, shape (cols, rows)
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("pseudo_inverse input contains NaN or Inf")
    rows, cols = m.shape
    dtype = np.result_type(m.dtype, np.float64)
    if m.size == 0:
        return np.zeros((cols, rows), dtype=dtype)
    if tol is None:
        tol = np.finfo(np.float64).eps * max(rows, cols)
    if tol < 0:
        raise ValueError("tol must be non-negative")

    u, s, vh = np.linalg.svd(m.astype(dtype, copy=False), full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols, rows), dtype=dtype)
    keep = s > tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T


def complex_gaussian(rng: np.random.Generator, n, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples.

    Real and imaginary parts are independent, zero mean, each with variance
    ``variance / 2``. ``n`` may be an int or a shape tuple.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return np.sqrt(variance / 2.0) * z


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one trial, keyed by ``(seed, *key)``.

    Distinct keys give statistically independent streams (SeedSequence
    hashing), so trials can run in any order or in parallel.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))
