import sys
import pathlib

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.crc_utils import CRC11_LENGTH, crc_attach, crc_check, crc_parity  # noqa: E402


def _long_division(message, polynomial):
    reg = list(message) + [0] * (len(polynomial) - 1)
    for i in range(len(message)):
        if reg[i]:
            for j, c in enumerate(polynomial):
                reg[i + j] ^= c
    return np.array(reg[len(message):], dtype=np.uint8)


def test_crc_parity_matches_polynomial_long_division():
    from modules.crc_utils import CRC11_POLYNOMIAL

    rng = np.random.default_rng(3)
    for k in (1, 5, 20, 64):
        msg = rng.integers(0, 2, size=k, dtype=np.uint8)
        assert np.array_equal(crc_parity(msg), _long_division(msg, CRC11_POLYNOMIAL))


def test_attach_then_check_passes_and_single_flip_fails():
    rng = np.random.default_rng(0)
    bits = crc_attach(rng.integers(0, 2, size=40, dtype=np.uint8))
    assert bits.size == 40 + CRC11_LENGTH
    assert crc_check(bits)
    for pos in range(bits.size):
        flipped = bits.copy()
        flipped[pos] ^= 1
        assert not crc_check(flipped)


def test_crc_is_linear_and_zero_message_has_zero_parity():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 2, size=30, dtype=np.uint8)
    b = rng.integers(0, 2, size=30, dtype=np.uint8)
    assert np.array_equal(crc_parity(a ^ b), crc_parity(a) ^ crc_parity(b))
    assert not crc_parity(np.zeros(30, dtype=np.uint8)).any()
    assert not crc_parity([]).any()


def test_crc_rejects_non_binary_and_short_input():
    with pytest.raises(ValueError):
        crc_parity([0, 2, 1])
    with pytest.raises(ValueError):
        crc_check([1, 0, 1])
