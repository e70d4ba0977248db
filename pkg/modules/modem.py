"""
Gray-labelled square QAM, the BICM interleaver and exact soft demapping.

Bit labels are LSB-first: point index = sum_j b_j 2^j, with b_0 the first
bit of each n_s-bit group. Point formulas follow the 5G NR modulation
mapper, so bits 0/1 are the sign bits of the I/Q axes.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

BICM_SEED = 0x5EED

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    bits_per_symbol: int
    points: np.ndarray
    labels: np.ndarray  # (order, bits_per_symbol), labels[i, j] = bit j of point i


@lru_cache(maxsize=None)
def build_constellation(order: int) -> Constellation:
    """Unit-energy square QAM with per-axis Gray coding."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported modulation order {order}; use one of {SUPPORTED_ORDERS}")
    n_s = order.bit_length() - 1
    idx = np.arange(order)
    labels = ((idx[:, None] >> np.arange(n_s)[None, :]) & 1).astype(np.uint8)
    s = 1 - 2 * labels.astype(float)
    if order == 4:
        points = (s[:, 0] + 1j * s[:, 1]) / np.sqrt(2)
    elif order == 16:
        points = (s[:, 0] * (2 - s[:, 2]) + 1j * s[:, 1] * (2 - s[:, 3])) / np.sqrt(10)
    else:
        points = (
            s[:, 0] * (4 - s[:, 2] * (2 - s[:, 4])) + 1j * s[:, 1] * (4 - s[:, 3] * (2 - s[:, 5]))
        ) / np.sqrt(42)
    points.setflags(write=False)
    labels.setflags(write=False)
    return Constellation(order=order, bits_per_symbol=n_s, points=points, labels=labels)


@lru_cache(maxsize=64)
def _bicm_permutation(length: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(length)
    perm.setflags(write=False)
    return perm


def bicm_interleave(bits: Sequence, seed: int = BICM_SEED, identity: bool = False) -> np.ndarray:
    arr = np.asarray(bits)
    if identity:
        return arr.copy()
    return arr[_bicm_permutation(arr.size, seed)]


def bicm_deinterleave(values: Sequence, seed: int = BICM_SEED, identity: bool = False) -> np.ndarray:
    arr = np.asarray(values)
    if identity:
        return arr.copy()
    out = np.empty_like(arr)
    out[_bicm_permutation(arr.size, seed)] = arr
    return out


def map_symbols(bits: Sequence[int], constellation: Constellation) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int64).ravel()
    n_s = constellation.bits_per_symbol
    if arr.size % n_s:
        raise ValueError(f"{arr.size} bits cannot be grouped into {n_s}-bit symbols")
    index = arr.reshape(-1, n_s) @ (1 << np.arange(n_s))
    return constellation.points[index]


def demap_llr(
    y: Union[complex, Sequence[complex]],
    h_hat: Union[complex, Sequence[complex]],
    sigma_eff2: Union[float, Sequence[float]],
    constellation: Constellation,
) -> np.ndarray:
    """Exact per-bit LLRs log P(b=0|y) - log P(b=1|y).

    ``h_hat`` and ``sigma_eff2`` broadcast against ``y``. The output holds
    n_s LLRs per symbol, symbol-major.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    h = np.broadcast_to(np.asarray(h_hat, dtype=complex), ys.shape)
    var = np.broadcast_to(np.asarray(sigma_eff2, dtype=float), ys.shape)
    if np.any(var <= 0):
        raise ValueError("sigma_eff2 must be positive")
    metric = -np.abs(ys[:, None] - h[:, None] * constellation.points[None, :]) ** 2 / var[:, None]
    zero = (constellation.labels == 0).T  # (n_s, order)
    num = logsumexp(metric[:, None, :], axis=-1, b=zero[None, :, :])
    den = logsumexp(metric[:, None, :], axis=-1, b=~zero[None, :, :])
    return (num - den).ravel()


def qpsk_llr(y: Sequence[complex], h_hat: complex, sigma_eff2: float) -> np.ndarray:
    """Closed-form QPSK LLRs, equal to ``demap_llr`` for the QPSK labelling."""
    ys = np.asarray(y, dtype=complex).ravel()
    z = np.conj(h_hat) * ys * (2 * np.sqrt(2) / sigma_eff2)
    return np.stack([z.real, z.imag], axis=1).ravel()
