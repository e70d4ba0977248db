"""
Rate matching between a polar mother code of length N and M transmitted bits.

Quasi-uniform puncturing (first N-M interleaved bits removed), shortening
(last N-M removed) and repetition (first M-N interleaved bits repeated) on top
of the 32-way sub-block interleaver of 5G NR.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from modules.polar_codec import LLR_MAX

SUBBLOCK_PATTERN: Tuple[int, ...] = (
    0, 1, 2, 4, 3, 5, 6, 7, 8, 16, 9, 17, 10, 18, 11, 19,
    12, 20, 13, 21, 14, 22, 15, 23, 24, 25, 26, 28, 27, 29, 30, 31,
)

PUNCTURE_RATE_THRESHOLD = 0.55
MIN_CODE_RATE = 1.0 / 8.0


class RateMatchMode(str, Enum):
    NONE = "none"
    PUNCTURE = "puncture"
    SHORTEN = "shorten"
    REPEAT = "repeat"


def subblock_permutation(length: int) -> np.ndarray:
    """Index map ``perm`` with interleaved[q] = codeword[perm[q]]."""
    if length % 32:
        raise ValueError(f"sub-block interleaving needs a length divisible by 32, got {length}")
    block = length // 32
    q = np.arange(length)
    return np.asarray(SUBBLOCK_PATTERN)[q // block] * block + q % block


def subblock_interleave(bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits)
    return arr[..., subblock_permutation(arr.shape[-1])]


def subblock_deinterleave(bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits)
    perm = subblock_permutation(arr.shape[-1])
    out = np.empty_like(arr)
    out[..., perm] = arr
    return out


@dataclass(frozen=True)
class RateMatchSpec:
    """How one mother codeword of length N becomes M transmitted bits.

    ``interleave`` switches the sub-block interleaver; it is bypassed for
    N < 32 regardless.
    """

    mode: RateMatchMode
    mother_length: int
    target_length: int
    interleave: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", RateMatchMode(self.mode))
        n, m = self.mother_length, self.target_length
        if n < 2 or n & (n - 1):
            raise ValueError(f"mother_length must be a power of two, got {n}")
        if m < 1:
            raise ValueError(f"target_length must be positive, got {m}")
        expected = {
            RateMatchMode.NONE: m == n,
            RateMatchMode.PUNCTURE: m < n,
            RateMatchMode.SHORTEN: m < n,
            RateMatchMode.REPEAT: m > n,
        }[self.mode]
        if not expected:
            raise ValueError(f"mode {self.mode.value} is inconsistent with N={n}, M={m}")

    @cached_property
    def permutation(self) -> np.ndarray:
        if self.interleave and self.mother_length >= 32:
            perm = subblock_permutation(self.mother_length)
        else:
            perm = np.arange(self.mother_length)
        perm.setflags(write=False)
        return perm


def select_mode(
    rate: float, target_length: int, mother_length: int, coded_pilot: bool = False
) -> RateMatchMode:
    """Pick the rate-matching mode for a component of rate K'/M.

    Coded pilots never shorten: shortened bits would break the rotation
    structure the blind receiver relies on.
    """
    if target_length > mother_length:
        return RateMatchMode.REPEAT
    if target_length == mother_length:
        return RateMatchMode.NONE
    if coded_pilot or rate < PUNCTURE_RATE_THRESHOLD:
        return RateMatchMode.PUNCTURE
    return RateMatchMode.SHORTEN


def select_mother_length(info_length: int, target_length: int, n_min: int = 3, n_max: int = 10) -> int:
    """Mother code length for K' information bits sent over M coded bits (5G NR rule)."""
    if info_length < 1 or target_length < 1:
        raise ValueError("info_length and target_length must be positive")
    n1 = math.ceil(math.log2(target_length))
    if target_length <= (9 / 8) * 2 ** (n1 - 1) and info_length / target_length < 9 / 16:
        n1 -= 1
    n2 = math.ceil(math.log2(info_length / MIN_CODE_RATE))
    return 1 << max(min(n1, n2, n_max), n_min)


def build_rate_match(
    info_length: int,
    target_length: int,
    coded_pilot: bool = False,
    mother_length: int = 0,
) -> RateMatchSpec:
    """Choose N (unless given) and the mode for one component."""
    n = mother_length or select_mother_length(info_length, target_length)
    mode = select_mode(info_length / target_length, target_length, n, coded_pilot)
    # pilot pairs must stay aligned with QPSK symbols: the interleaver moves
    # 2-bit units only when N/32 is even
    interleave = not coded_pilot or n >= 64
    return RateMatchSpec(mode, n, target_length, interleave)


def rate_match(codeword: Sequence[int], spec: RateMatchSpec) -> np.ndarray:
    arr = np.asarray(codeword)
    n, m = spec.mother_length, spec.target_length
    if arr.shape[-1] != n:
        raise ValueError(f"codeword length {arr.shape[-1]} does not match N={n}")
    y = arr[..., spec.permutation]
    if spec.mode is RateMatchMode.PUNCTURE:
        return y[..., n - m :]
    if spec.mode is RateMatchMode.SHORTEN:
        return y[..., :m]
    if spec.mode is RateMatchMode.REPEAT:
        return y[..., np.arange(m) % n]
    return y


def de_rate_match(llrs: Sequence[float], spec: RateMatchSpec, known_value: float = LLR_MAX) -> np.ndarray:
    """Map M received LLRs back onto the mother codeword.

    Punctured positions get 0, shortened positions ``known_value``, repeated
    observations are summed.
    """
    arr = np.asarray(llrs, dtype=float).ravel()
    n, m = spec.mother_length, spec.target_length
    if arr.size != m:
        raise ValueError(f"expected {m} LLRs, got {arr.size}")
    y = np.zeros(n)
    if spec.mode is RateMatchMode.PUNCTURE:
        y[n - m :] = arr
    elif spec.mode is RateMatchMode.SHORTEN:
        y[:m] = arr
        y[m:] = known_value
    elif spec.mode is RateMatchMode.REPEAT:
        np.add.at(y, np.arange(m) % n, arr)
    else:
        y[:] = arr
    out = np.empty(n)
    out[spec.permutation] = y
    return out


def punctured_positions(spec: RateMatchSpec) -> np.ndarray:
    if spec.mode is not RateMatchMode.PUNCTURE:
        return np.zeros(0, dtype=int)
    return np.sort(spec.permutation[: spec.mother_length - spec.target_length])


def shortened_positions(spec: RateMatchSpec) -> np.ndarray:
    """Mother-codeword positions removed by shortening."""
    if spec.mode is not RateMatchMode.SHORTEN:
        return np.zeros(0, dtype=int)
    return np.sort(spec.permutation[spec.target_length :])


def forced_frozen(spec: RateMatchSpec) -> Tuple[int, ...]:
    """u-domain indices that must be frozen so every shortened bit is zero.

    Codeword bit j depends on u_i for every i whose binary support contains
    j's, so all such i are frozen.
    """
    removed = shortened_positions(spec)
    if removed.size == 0:
        return ()
    idx = np.arange(spec.mother_length)
    covers = (idx[:, None] & removed[None, :]) == removed[None, :]
    return tuple(int(i) for i in idx[covers.any(axis=1)])
