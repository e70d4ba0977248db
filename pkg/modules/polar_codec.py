"""
Polar codes in natural (non bit-reversed) order.

Covers the transform, the processing-element index map used by the
density-evolution code, encoding, successive cancellation (SC) decoding and
a vectorised CRC-aided successive cancellation list (SCL) decoder.

LLR convention everywhere: log P(bit = 0) - log P(bit = 1).
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from modules.crc_utils import CRC11_POLYNOMIAL, crc_check

LLR_MAX = 300.0


def _log2_exact(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise ValueError(f"length must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


@dataclass(frozen=True)
class PolarCodeSpec:
    """One component code.

    Monitor positions are frozen at the transmitter but decoded as
    information by the blind receiver.
    """

    mother_length: int
    info_set: Tuple[int, ...]
    monitor_set: Tuple[int, ...] = ()
    crc_length: int = 0
    crc_polynomial: Tuple[int, ...] = field(default=CRC11_POLYNOMIAL)

    def __post_init__(self) -> None:
        n = self.mother_length
        _log2_exact(n)
        info = tuple(int(i) for i in self.info_set)
        monitor = tuple(sorted(int(i) for i in self.monitor_set))
        object.__setattr__(self, "info_set", info)
        object.__setattr__(self, "monitor_set", monitor)
        object.__setattr__(self, "crc_polynomial", tuple(int(b) for b in self.crc_polynomial))

        if list(info) != sorted(set(info)):
            raise ValueError("info_set must be strictly increasing")
        if info and (info[0] < 0 or info[-1] >= n):
            raise ValueError(f"info_set indices must lie in [0, {n})")
        if not set(monitor) <= {n - 2, n - 1}:
            raise ValueError(f"monitor_set must be a subset of {{{n - 2}, {n - 1}}}")
        if set(monitor) & set(info):
            raise ValueError("monitor positions must be frozen")
        if self.crc_length not in (0, len(self.crc_polynomial) - 1):
            raise ValueError(
                f"crc_length must be 0 or {len(self.crc_polynomial) - 1}, got {self.crc_length}"
            )
        if self.crc_length > len(info):
            raise ValueError("crc_length exceeds the number of information positions")

    @property
    def n(self) -> int:
        return _log2_exact(self.mother_length)

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def frozen_set(self) -> Tuple[int, ...]:
        info = set(self.info_set)
        return tuple(i for i in range(self.mother_length) if i not in info)

    @cached_property
    def info_mask(self) -> np.ndarray:
        mask = np.zeros(self.mother_length, dtype=bool)
        mask[list(self.info_set)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def decision_mask(self) -> np.ndarray:
        """Positions decided by the decoder: information plus monitor bits."""
        mask = self.info_mask.copy()
        mask[list(self.monitor_set)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def _decision_prefix(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.decision_mask)])

    def decisions_in(self, start: int, length: int) -> int:
        prefix = self._decision_prefix
        return int(prefix[start + length] - prefix[start])


def polar_transform(u: Sequence[int]) -> np.ndarray:
    """Return u * F^{(x)n} over GF(2) along the last axis.

    The transform is its own inverse.
    """
    x = np.array(u, dtype=np.uint8)
    size = x.shape[-1]
    _log2_exact(size)
    lead = x.shape[:-1]
    h = 1
    while h < size:
        v = x.reshape(lead + (-1, 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def alpha_map(d: int, j: int, k: int, n: int) -> int:
    """Codeword index of input ``k`` of processing element ``j`` at level ``d``.

    Level 0 pairs indices N/2 apart (the channel side of the SC recursion);
    level n-1 pairs neighbours. Level n reuses the level n-1 pairing.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= d <= n:
        raise ValueError(f"level d must lie in [0, {n}], got {d}")
    if not 0 <= j < (1 << (n - 1)):
        raise ValueError(f"element j must lie in [0, {1 << (n - 1)}), got {j}")
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    span = 1 << (n - min(d, n - 1) - 1)
    return (j // span) * 2 * span + (j % span) + (k - 1) * span


def alpha_level(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised ``alpha_map`` for every element of level ``d``."""
    if not 0 <= d <= n:
        raise ValueError(f"level d must lie in [0, {n}], got {d}")
    span = 1 << (n - min(d, n - 1) - 1)
    j = np.arange(1 << (n - 1))
    first = (j // span) * 2 * span + (j % span)
    return first, first + span


def encode(spec: PolarCodeSpec, message: Sequence[int]) -> np.ndarray:
    """Place ``message`` on the information set and transform."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != spec.K:
        raise ValueError(f"message length {msg.shape[-1]} does not match K={spec.K}")
    u = np.zeros(msg.shape[:-1] + (spec.mother_length,), dtype=np.uint8)
    u[..., list(spec.info_set)] = msg
    return polar_transform(u)


def f_llr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Check-node update, exact and overflow free."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    base = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return base + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def g_llr(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Variable-node update given the partial sum ``u`` of the upper branch."""
    return np.where(np.asarray(u, dtype=bool), b - a, b + a)


def _check_llrs(spec: PolarCodeSpec, llrs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(llrs, dtype=float).ravel()
    if arr.size != spec.mother_length:
        raise ValueError(f"expected {spec.mother_length} LLRs, got {arr.size}")
    return arr


def sc_decode(spec: PolarCodeSpec, llrs: Sequence[float], return_llrs: bool = False):
    """Successive cancellation decoding.

    Returns ``(u_hat, message)``; with ``return_llrs`` the decision-level
    LLRs of every position are returned as a third element. ``message``
    holds the bits on the information set, CRC included.
    """
    arr = _check_llrs(spec, llrs)
    mask = spec.decision_mask
    u_hat = np.zeros(spec.mother_length, dtype=np.uint8)
    leaf_llrs = np.zeros(spec.mother_length)

    def walk(llr: np.ndarray, start: int) -> np.ndarray:
        if llr.size == 1:
            leaf_llrs[start] = llr[0]
            bit = 1 if (mask[start] and llr[0] < 0) else 0
            u_hat[start] = bit
            return np.array([bit], dtype=np.uint8)
        h = llr.size // 2
        a, b = llr[:h], llr[h:]
        left = walk(f_llr(a, b), start)
        right = walk(g_llr(a, b, left), start + h)
        return np.concatenate([left ^ right, right])

    walk(arr, 0)
    message = u_hat[list(spec.info_set)]
    if return_llrs:
        return u_hat, message, leaf_llrs
    return u_hat, message


class _PathList:
    """Working state of one list decoding call; never escapes it."""

    def __init__(self, spec: PolarCodeSpec, list_size: int) -> None:
        self.spec = spec
        self.list_size = list_size
        self.mask = spec.decision_mask
        self.metrics = np.zeros(1)
        self.u = np.zeros((1, spec.mother_length), dtype=np.uint8)

    def node(self, llr: np.ndarray, start: int) -> Tuple[np.ndarray, np.ndarray]:
        """Decode the subtree at ``start``; return partial sums and path origins."""
        paths, size = llr.shape
        if self.spec.decisions_in(start, size) == 0:
            self._penalise_frozen(llr)
            return np.zeros((paths, size), dtype=np.uint8), np.arange(paths)
        if size == 1:
            return self._leaf(llr[:, 0], start)
        h = size // 2
        a, b = llr[:, :h], llr[:, h:]
        x_left, origin_left = self.node(f_llr(a, b), start)
        a, b = a[origin_left], b[origin_left]
        x_right, origin_right = self.node(g_llr(a, b, x_left), start + h)
        x_left = x_left[origin_right]
        return np.concatenate([x_left ^ x_right, x_right], axis=1), origin_left[origin_right]

    def _penalise_frozen(self, llr: np.ndarray) -> None:
        # all-zero subtree: leaf LLRs follow from f and the zero-partial-sum g
        level = llr[:, None, :]
        while level.shape[-1] > 1:
            h = level.shape[-1] // 2
            a, b = level[..., :h], level[..., h:]
            level = np.concatenate([f_llr(a, b), b + a], axis=1)
        leaves = level[..., 0]
        self.metrics = self.metrics + np.where(leaves < 0, -leaves, 0.0).sum(axis=1)

    def _leaf(self, llr: np.ndarray, index: int) -> Tuple[np.ndarray, np.ndarray]:
        preferred = (llr < 0).astype(np.uint8)
        candidates = np.stack([self.metrics, self.metrics + np.abs(llr)], axis=1).ravel()
        keep = np.argsort(candidates, kind="stable")[: self.list_size]
        parent = keep // 2
        bits = preferred[parent] ^ (keep % 2).astype(np.uint8)
        self.metrics = candidates[keep]
        self.u = self.u[parent]
        self.u[:, index] = bits
        return bits[:, None], parent


def list_decode(
    spec: PolarCodeSpec, llrs: Sequence[float], list_size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Run SCL and return every surviving path, most likely first.

    Returns:
        ``(u_paths, metrics)`` with shapes (P, N) and (P,), P <= list_size.
    """
    if list_size < 1:
        raise ValueError(f"list_size must be >= 1, got {list_size}")
    arr = _check_llrs(spec, llrs)
    paths = _PathList(spec, int(list_size))
    paths.node(arr[None, :], 0)
    order = np.argsort(paths.metrics, kind="stable")
    return paths.u[order], paths.metrics[order]


def scl_decode(
    spec: PolarCodeSpec,
    llrs: Sequence[float],
    list_size: int,
    crc_prefix: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """CRC-aided SCL decoding.

    ``crc_prefix`` holds bits decoded elsewhere that the CRC of this
    component also covers; they precede the information bits in the check.

    Returns:
        ``(u_hat, message, crc_ok)``; ``crc_ok`` is False when no surviving
        path passes the CRC (a detected block error).
    """
    u_paths, _ = list_decode(spec, llrs, list_size)
    info = list(spec.info_set)
    best, crc_ok = crc_select(spec, [u[info] for u in u_paths], crc_prefix)
    return u_paths[best], u_paths[best, info], crc_ok


def crc_select(
    spec: PolarCodeSpec,
    candidates: List[np.ndarray],
    crc_prefix: Optional[Sequence[int]] = None,
) -> Tuple[int, bool]:
    """Index of the first candidate message that passes the CRC."""
    if spec.crc_length == 0:
        return 0, True
    prefix = np.asarray(crc_prefix if crc_prefix is not None else [], dtype=np.uint8)
    for idx, message in enumerate(candidates):
        if crc_check(np.concatenate([prefix, message]), spec.crc_polynomial):
            return idx, True
    return 0, False
