"""Channel estimation chain: LS, link separation and the ELM refiner.

Link CFR matrices use the layout ``(..., N, M + 1)``. Column 0 is the direct
link and columns 1..M are the cascaded sub-surface links. The ELM works on
real vectors: a complex length-``N`` CFR is encoded as ``[real; imag]`` of
length ``2N``.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .numerics import pseudo_inverse, seeded_rng
from .channel import RisReflectionMatrix

__all__ = [
    "ACTIVATIONS",
    "STD_MODES",
    "IllConditionedPilotError",
    "SeparationError",
    "DegenerateSampleError",
    "DegenerateStatisticsError",
    "NotTrainedError",
    "ls_estimate",
    "separate_links",
    "normalize_sample",
    "to_real",
    "from_real",
    "ElmNetwork",
    "preactivation_scale",
    "elm_hidden_forward",
    "elm_train",
    "elm_infer",
    "nmse",
    "nmse_per_trial",
    "save_model",
    "load_model",
]


class IllConditionedPilotError(ValueError):
    pass


class SeparationError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    pass


class DegenerateStatisticsError(ValueError):
    pass


class NotTrainedError(RuntimeError):
    pass


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _relu(x):
    return np.maximum(x, 0.0)


ACTIVATIONS = {"sigmoid": _sigmoid, "tanh": np.tanh, "relu": _relu}
# "none" disables the pre-activation standardization (ablation)
STD_MODES = ("none", "shared", "per_unit")


def ls_estimate(rx_pilots_freq, pilot_freq) -> np.ndarray:
    """Per-subcarrier LS estimate of the composite CFR of every pilot slot.

    ``rx_pilots_freq`` has shape ``(..., N, S)``, ``pilot_freq`` shape ``(N,)``
    or ``(..., N, S)``. Both are in the unitary-DFT domain.
    """
    rx = np.asarray(rx_pilots_freq)
    c = np.asarray(pilot_freq)
    if c.ndim == 1:
        c = c[:, None]
    if np.any(np.abs(c) < 1e-12):
        raise IllConditionedPilotError("pilot has a (near-)zero subcarrier")
    return rx / c


def separate_links(ls, theta: RisReflectionMatrix | np.ndarray) -> np.ndarray:
    """Right-multiply the slot CFRs by the inverse reflection matrix.

    Returns the per-link CFRs, shape ``(..., N, M + 1)``.
    """
    t = theta.theta if isinstance(theta, RisReflectionMatrix) else np.asarray(theta)
    ls = np.asarray(ls)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or ls.shape[-1] != t.shape[0]:
        raise SeparationError(f"reflection matrix {t.shape} incompatible with {ls.shape}")
    if not np.isfinite(np.linalg.cond(t)) or np.linalg.cond(t) > 1e12:
        raise SeparationError("reflection matrix is singular")
    return ls @ np.linalg.inv(t)


def normalize_sample(v, axis: int = -1):
    """Scale to unit Euclidean norm along ``axis``.

    Returns ``(normalized, norms)``; the norms keep a singleton ``axis`` so they
    broadcast back.
    """
    v = np.asarray(v)
    norms = np.linalg.norm(v, axis=axis, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateSampleError("cannot normalize a zero vector")
    return v / norms, norms


def to_real(v) -> np.ndarray:
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1)


def from_real(x) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


@dataclass(frozen=True)
class ElmNetwork:
    """Single-hidden-layer network with frozen random input weights.

    One network instance serves all ``n_links`` estimators: they share ``W``
    and ``b`` but have their own output weights and standardization scales.

    Attributes
    ----------
    input_weights : ndarray, shape (hidden_size, n_inputs)
    bias : ndarray, shape (hidden_size,)
    std_scale : ndarray, shape (n_links, hidden_size), or None before training
        Divisor applied to the pre-activations (all ones when ``std_mode`` is
        ``"none"``).
    output_weights : ndarray, shape (n_links, n_outputs, hidden_size), or None
    """

    input_weights: np.ndarray
    bias: np.ndarray
    seed: int
    activation: str = "tanh"
    std_mode: str = "shared"
    denormalize: bool = True
    ridge: float = 0.0
    std_scale: np.ndarray | None = field(default=None, repr=False)
    output_weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.std_mode not in STD_MODES:
            raise ValueError(f"unknown std_mode {self.std_mode!r}")

    @classmethod
    def initialize(
        cls,
        n_inputs: int,
        hidden_size: int = 256,
        seed: int = 0,
        init_scale: float = 1.0,
        **kwargs,
    ) -> "ElmNetwork":
        """Draw ``W ~ U[-init_scale, init_scale]`` and ``b ~ U[0, 1]`` from ``seed``."""
        if init_scale <= 0:
            raise ValueError("init_scale must be positive")
        rng = seeded_rng(seed)
        w = init_scale * rng.uniform(-1.0, 1.0, size=(hidden_size, n_inputs))
        b = rng.uniform(0.0, 1.0, size=hidden_size)
        return cls(w, b, int(seed), **kwargs)

    @property
    def hidden_size(self) -> int:
        return self.input_weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.input_weights.shape[1]

    @property
    def trained(self) -> bool:
        return self.output_weights is not None and self.std_scale is not None

    @property
    def n_links(self) -> int:
        return 0 if self.output_weights is None else self.output_weights.shape[0]

    def preactivation(self, x) -> np.ndarray:
        return np.asarray(x) @ self.input_weights.T + self.bias


def preactivation_scale(z, mode: str = "shared") -> np.ndarray:
    """Standardization divisor from a batch of pre-activations ``z`` (batch, units).

    ``shared`` takes the per-unit standard deviation over the batch and averages
    it over units, giving one value for every unit; ``per_unit`` keeps the
    per-unit values; ``none`` returns ones.
    """
    z = np.asarray(z)
    if mode == "none":
        return np.ones(z.shape[-1])
    sd = z.std(axis=0)
    if mode == "shared":
        return np.full(z.shape[-1], sd.mean())
    if mode == "per_unit":
        return sd
    raise ValueError(f"unknown std_mode {mode!r}")


def elm_hidden_forward(
    net: ElmNetwork,
    samples,
    scale=None,
    train_mode: bool = False,
) -> np.ndarray:
    """Hidden-layer output for already-normalized real samples ``(..., n_inputs)``.

    In ``train_mode`` the standardization scale is computed from the batch
    (axis 0); otherwise ``scale`` (shape ``(hidden_size,)``) must be supplied.
    """
    z = net.preactivation(samples)
    if train_mode:
        scale = preactivation_scale(z.reshape(-1, z.shape[-1]), net.std_mode)
    elif scale is None:
        raise ValueError("scale is required outside train_mode")
    scale = np.asarray(scale)
    if np.any(scale <= 0):
        raise DegenerateStatisticsError("standardization scale must be positive for every hidden unit")
    return ACTIVATIONS[net.activation](z / scale)


def _solve_output_weights(o: np.ndarray, t: np.ndarray, ridge: float) -> np.ndarray:
    # returns beta with shape (n_outputs, hidden_size) so that o @ beta.T ~= t
    if ridge > 0:
        gram = o.T @ o + ridge * np.eye(o.shape[1])
        return np.linalg.solve(gram, o.T @ t).T
    return (pseudo_inverse(o) @ t).T


def elm_train(net: ElmNetwork, samples, labels) -> ElmNetwork:
    """Fit the output weights of every link.

    Parameters
    ----------
    samples : complex ndarray, shape (N_d, n_links, N)
        Separated (noisy) CFR estimates.
    labels : complex ndarray, shape (N_d, n_links, N)
        True CFRs aligned with ``samples``.

    Returns
    -------
    ElmNetwork
        Copy of ``net`` with ``std_scale`` and ``output_weights`` filled in;
        ``W`` and ``b`` are untouched.
    """
    samples = np.asarray(samples)
    labels = np.asarray(labels)
    if samples.shape != labels.shape or samples.ndim != 3:
        raise ValueError(
            f"samples and labels must share shape (N_d, links, N); got {samples.shape}, {labels.shape}"
        )
    n_d, n_links, n = samples.shape
    if n_d == 0:
        raise ValueError("cannot train on an empty training set")
    if 2 * n != net.n_inputs:
        raise ValueError(f"network expects {net.n_inputs // 2} subcarriers, samples have {n}")

    if n_d < net.hidden_size:
        warnings.warn(
            f"{n_d} training samples for {net.hidden_size} hidden units: the fit interpolates",
            RuntimeWarning,
            stacklevel=2,
        )
    scales = np.empty((n_links, net.hidden_size))
    betas = np.empty((n_links, 2 * n, net.hidden_size))
    for j in range(n_links):
        x, norms = normalize_sample(samples[:, j])
        z = net.preactivation(to_real(x))
        scales[j] = preactivation_scale(z, net.std_mode)
        if np.any(scales[j] <= 0):
            raise DegenerateStatisticsError(
                f"link {j}: pre-activations have zero spread over the batch; "
                "use more samples or std_mode='none'"
            )
        o = ACTIVATIONS[net.activation](z / scales[j])
        target = labels[:, j] / norms if net.denormalize else labels[:, j]
        betas[j] = _solve_output_weights(o, to_real(target), net.ridge)
    return replace(net, std_scale=scales, output_weights=betas)


def elm_infer(net: ElmNetwork, separated) -> np.ndarray:
    """Refine separated CFRs ``(..., N, n_links)`` with a trained network."""
    if not net.trained:
        raise NotTrainedError("network has no output weights; train it first")
    separated = np.asarray(separated)
    if separated.shape[-1] != net.n_links:
        raise ValueError(f"network has {net.n_links} links, input has {separated.shape[-1]}")
    links = np.moveaxis(separated, -1, -2)  # (..., links, N)
    x, norms = normalize_sample(links)
    # per-link scales (links, hidden) broadcast over the leading batch axes
    o = elm_hidden_forward(net, to_real(x), scale=net.std_scale)
    out = from_real(np.einsum("...jh,joh->...jo", o, net.output_weights))
    if net.denormalize:
        out = out * norms
    return np.moveaxis(out, -2, -1)


def nmse(estimate, truth) -> float:
    """``||estimate - truth||^2 / ||truth||^2`` over all entries."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    denom = np.sum(np.abs(truth) ** 2)
    if denom == 0:
        raise ZeroDivisionError("NMSE undefined for an all-zero reference")
    return float(np.sum(np.abs(estimate - truth) ** 2) / denom)


def nmse_per_trial(estimate, truth) -> np.ndarray:
    """NMSE of each trial for batched ``(trials, N, links)`` arrays."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    denom = np.sum(np.abs(truth) ** 2, axis=(-2, -1))
    if np.any(denom == 0):
        raise ZeroDivisionError("NMSE undefined for an all-zero reference")
    return np.sum(np.abs(estimate - truth) ** 2, axis=(-2, -1)) / denom


# --- model file -----------------------------------------------------------
#
# Layout (all little-endian):
#   magic        4s   b"EELM"
#   version      u16
#   seed         u64
#   n_inputs     u32
#   hidden_size  u32
#   n_outputs    u32
#   n_links      u32
#   activation   u8   index into ACTIVATION_IDS
#   std_mode     u8   index into STD_MODES
#   denormalize  u8
#   reserved     u8
#   ridge        f64
# followed by float64 arrays: W (hidden, inputs), b (hidden,),
# std_scale (links, hidden), beta (links, outputs, hidden).

MODEL_MAGIC = b"EELM"
MODEL_VERSION = 1
ACTIVATION_IDS = ("sigmoid", "tanh", "relu")
_HEADER = struct.Struct("<4sHQIIIIBBBBd")


def save_model(path, net: ElmNetwork) -> None:
    if not net.trained:
        raise NotTrainedError("only trained networks can be saved")
    n_links, n_out, _ = net.output_weights.shape
    header = _HEADER.pack(
        MODEL_MAGIC,
        MODEL_VERSION,
        net.seed,
        net.n_inputs,
        net.hidden_size,
        n_out,
        n_links,
        ACTIVATION_IDS.index(net.activation),
        STD_MODES.index(net.std_mode),
        int(net.denormalize),
        0,
        float(net.ridge),
    )
    with open(path, "wb") as f:
        f.write(header)
        for arr in (net.input_weights, net.bias, net.std_scale, net.output_weights):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> ElmNetwork:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != MODEL_MAGIC:
        raise ValueError(f"{path}: not an EELM model file")
    (_, version, seed, n_in, n_h, n_out, n_links, act, std, denorm, _, ridge) = (
        _HEADER.unpack_from(raw)
    )
    if version != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    shapes = [(n_h, n_in), (n_h,), (n_links, n_h), (n_links, n_out, n_h)]
    expected = _HEADER.size + 8 * sum(int(np.prod(s)) for s in shapes)
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated or corrupt model ({len(raw)} != {expected} bytes)")
    arrays, offset = [], _HEADER.size
    for s in shapes:
        count = int(np.prod(s))
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(s).astype(np.float64))
        offset += 8 * count
    w, b, scale, beta = arrays
    return ElmNetwork(
        w,
        b,
        seed,
        activation=ACTIVATION_IDS[act],
        std_mode=STD_MODES[std],
        denormalize=bool(denorm),
        ridge=ridge,
        std_scale=scale,
        output_weights=beta,
    )
