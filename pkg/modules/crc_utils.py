"""
CRC helpers for component messages.

The generator polynomial is the 11-bit one used by 5G NR uplink control
(D^11 + D^10 + D^9 + D^5 + 1). Bits are handled MSB-first and the register
starts at zero, so the CRC is linear in the message.
"""

from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

CRC11_POLYNOMIAL: Tuple[int, ...] = (1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1)
CRC11_LENGTH = len(CRC11_POLYNOMIAL) - 1


def _as_bits(bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit vectors may only contain 0 and 1")
    return arr


@lru_cache(maxsize=256)
def _parity_matrix(message_length: int, polynomial: Tuple[int, ...]) -> np.ndarray:
    """Rows are the remainders of x^(L + K - 1 - i) modulo the generator.

    Args:
        message_length: number of message bits K.
        polynomial: generator coefficients, highest degree first.

    Returns:
        (K, L) uint8 matrix; parity = message @ matrix (mod 2).
    """
    length = len(polynomial) - 1
    feedback = np.array(polynomial[1:], dtype=np.uint8)
    total = message_length + length
    # remainders[e] = x^e mod g(x), MSB first
    remainders = np.zeros((total, length), dtype=np.uint8)
    reg = np.zeros(length, dtype=np.uint8)
    reg[-1] = 1
    for e in range(total):
        remainders[e] = reg
        carry = reg[0]
        reg = np.concatenate([reg[1:], np.zeros(1, dtype=np.uint8)])
        if carry:
            reg ^= feedback
    exponents = length + message_length - 1 - np.arange(message_length)
    matrix = remainders[exponents]
    matrix.setflags(write=False)
    return matrix


def crc_parity(message: Sequence[int], polynomial: Tuple[int, ...] = CRC11_POLYNOMIAL) -> np.ndarray:
    """Return the CRC remainder bits of ``message``."""
    msg = _as_bits(message)
    length = len(polynomial) - 1
    if msg.size == 0:
        return np.zeros(length, dtype=np.uint8)
    matrix = _parity_matrix(msg.size, tuple(polynomial))
    return ((msg.astype(np.int64) @ matrix) & 1).astype(np.uint8)


def crc_attach(message: Sequence[int], polynomial: Tuple[int, ...] = CRC11_POLYNOMIAL) -> np.ndarray:
    """Append the CRC to ``message``."""
    msg = _as_bits(message)
    return np.concatenate([msg, crc_parity(msg, polynomial)])


def crc_check(bits: Sequence[int], polynomial: Tuple[int, ...] = CRC11_POLYNOMIAL) -> bool:
    """True when the trailing CRC matches the leading message bits."""
    arr = _as_bits(bits)
    length = len(polynomial) - 1
    if arr.size < length:
        raise ValueError(f"need at least {length} bits to check a CRC, got {arr.size}")
    message, parity = arr[: arr.size - length], arr[arr.size - length :]
    return bool(np.array_equal(crc_parity(message, polynomial), parity))
