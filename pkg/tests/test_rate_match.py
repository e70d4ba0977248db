import sys
import pathlib

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.polar_codec import LLR_MAX, polar_transform  # noqa: E402
from modules.rate_match import (  # noqa: E402
    RateMatchMode,
    RateMatchSpec,
    build_rate_match,
    de_rate_match,
    forced_frozen,
    punctured_positions,
    rate_match,
    select_mode,
    select_mother_length,
    shortened_positions,
    subblock_permutation,
    subblock_deinterleave,
    subblock_interleave,
)


def test_subblock_interleaver_is_a_permutation_with_inverse():
    bits = np.arange(64)
    inter = subblock_interleave(bits)
    assert sorted(inter) == list(bits)
    assert np.array_equal(subblock_deinterleave(inter), bits)
    # blocks 3 and 4 swap in the 5G pattern
    assert list(inter[6:8]) == [8, 9] and list(inter[8:10]) == [6, 7]


def test_select_mother_length_follows_the_nr_rule():
    assert select_mother_length(16, 32) == 32
    assert select_mother_length(10, 40) == 64
    assert select_mother_length(10, 36) == 32
    assert select_mother_length(2, 4) == 8
    assert select_mother_length(500, 4000) == 1024
    with pytest.raises(ValueError):
        select_mother_length(0, 10)


def test_select_mode_thresholds_and_coded_pilot_never_shortens():
    assert select_mode(0.5, 64, 64) is RateMatchMode.NONE
    assert select_mode(0.5, 80, 64) is RateMatchMode.REPEAT
    assert select_mode(0.3, 48, 64) is RateMatchMode.PUNCTURE
    assert select_mode(0.7, 48, 64) is RateMatchMode.SHORTEN
    assert select_mode(0.7, 48, 64, coded_pilot=True) is RateMatchMode.PUNCTURE
    assert build_rate_match(30, 48, coded_pilot=True).mode is not RateMatchMode.SHORTEN


def test_coded_pilots_skip_the_interleaver_until_qpsk_pairs_stay_whole():
    assert not build_rate_match(16, 32, coded_pilot=True, mother_length=32).interleave
    assert build_rate_match(16, 32, mother_length=32).interleave
    assert build_rate_match(30, 64, coded_pilot=True, mother_length=64).interleave
    for n in (64, 128, 256):
        perm = subblock_permutation(n)
        assert np.all(perm[0::2] % 2 == 0) and np.array_equal(perm[1::2], perm[0::2] + 1)
    perm32 = subblock_permutation(32)
    assert not np.array_equal(perm32[1::2], perm32[0::2] + 1)


def test_spec_rejects_inconsistent_mode():
    with pytest.raises(ValueError):
        RateMatchSpec(RateMatchMode.REPEAT, 64, 32)
    with pytest.raises(ValueError):
        RateMatchSpec(RateMatchMode.NONE, 48, 48)


@pytest.mark.parametrize(
    "mode,n,m",
    [("none", 64, 64), ("puncture", 64, 40), ("shorten", 64, 40), ("repeat", 32, 50)],
)
def test_noiseless_llrs_land_back_on_the_codeword(mode, n, m):
    spec = RateMatchSpec(mode, n, m)
    rng = np.random.default_rng(2)
    codeword = rng.integers(0, 2, size=n, dtype=np.uint8)
    tx = rate_match(codeword, spec)
    assert tx.size == m
    llrs = de_rate_match(4.0 * (1 - 2 * tx.astype(float)), spec)
    known = np.abs(llrs) > 0
    if mode == "shorten":
        known[shortened_positions(spec)] = False
    assert np.array_equal((llrs[known] < 0).astype(np.uint8), codeword[known])
    if mode == "puncture":
        assert np.all(llrs[punctured_positions(spec)] == 0)
        assert punctured_positions(spec).size == n - m
    if mode == "shorten":
        assert np.all(llrs[shortened_positions(spec)] == LLR_MAX)
    if mode == "repeat":
        assert np.isclose(np.abs(llrs).sum(), 4.0 * m)


def test_forced_frozen_makes_shortened_bits_zero():
    spec = RateMatchSpec("shorten", 64, 44)
    frozen = set(forced_frozen(spec))
    rng = np.random.default_rng(7)
    for _ in range(10):
        u = rng.integers(0, 2, size=64, dtype=np.uint8)
        u[list(frozen)] = 0
        x = polar_transform(u)
        assert not x[shortened_positions(spec)].any()
    assert forced_frozen(RateMatchSpec("puncture", 64, 44)) == ()
