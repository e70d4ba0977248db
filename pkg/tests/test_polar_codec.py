import sys
import pathlib
import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.crc_utils import crc_attach  # noqa: E402
from modules.polar_codec import (  # noqa: E402
    PolarCodeSpec,
    alpha_level,
    alpha_map,
    encode,
    f_llr,
    list_decode,
    polar_transform,
    sc_decode,
    scl_decode,
)


def _brute_force_sc(spec, llrs):
    """SC by marginalising over every continuation of the decided prefix."""
    n = spec.mother_length
    # log P(y_j | x_j = 0) and log P(y_j | x_j = 1), up to a common constant
    log_p = np.stack([-np.logaddexp(0.0, -llrs), -np.logaddexp(0.0, llrs)], axis=1)
    decided = spec.decision_mask
    u = np.zeros(n, dtype=np.uint8)
    leaf = np.zeros(n)
    for i in range(n):
        scores = []
        for bit in (0, 1):
            terms = []
            for tail in itertools.product((0, 1), repeat=n - i - 1):
                cand = np.concatenate([u[:i], [bit], tail]).astype(np.uint8)
                x = polar_transform(cand)
                terms.append(log_p[np.arange(n), x].sum())
            scores.append(logsumexp(terms))
        leaf[i] = scores[0] - scores[1]
        u[i] = 1 if (decided[i] and leaf[i] < 0) else 0
    return u, leaf


def test_polar_transform_is_an_involution():
    rng = np.random.default_rng(0)
    u = rng.integers(0, 2, size=(5, 16), dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)
    assert np.array_equal(polar_transform([1, 0]), [1, 0])
    assert np.array_equal(polar_transform([0, 1]), [1, 1])


def test_encode_is_linear_over_gf2():
    rng = np.random.default_rng(12)
    for n, k in ((8, 4), (32, 10), (128, 60)):
        spec = PolarCodeSpec(n, tuple(sorted(rng.choice(n, size=k, replace=False).tolist())))
        a, b = rng.integers(0, 2, size=(2, 20, k), dtype=np.uint8)
        assert np.array_equal(encode(spec, a) ^ encode(spec, b), encode(spec, a ^ b))
        assert not encode(spec, np.zeros(k, dtype=np.uint8)).any()


def test_alpha_level_matches_scalar_map():
    n = 4
    for d in range(n + 1):
        first, second = alpha_level(d, n)
        for j in range(1 << (n - 1)):
            assert first[j] == alpha_map(d, j, 1, n)
            assert second[j] == alpha_map(d, j, 2, n)
    first, second = alpha_level(0, 3)
    assert list(second - first) == [4, 4, 4, 4]


def test_alpha_map_rejects_out_of_range_arguments():
    with pytest.raises(ValueError):
        alpha_map(0, 0, 3, 3)
    with pytest.raises(ValueError):
        alpha_map(5, 0, 1, 3)


def test_sc_decode_matches_brute_force_reference():
    spec = PolarCodeSpec(8, (3, 5, 6, 7))
    rng = np.random.default_rng(11)
    for _ in range(200):
        llrs = rng.normal(0.0, 3.0, size=8)
        u_hat, _, leaf = sc_decode(spec, llrs, return_llrs=True)
        ref_u, ref_leaf = _brute_force_sc(spec, llrs)
        assert np.array_equal(u_hat, ref_u)
        assert np.allclose(leaf, ref_leaf, atol=1e-9)


def test_f_llr_is_exact_and_symmetric():
    a, b = np.array([1.5, -2.0, 40.0]), np.array([0.3, 5.0, -40.0])
    expected = 2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
    assert np.allclose(f_llr(a[:2], b[:2]), expected[:2], atol=1e-12)
    assert np.allclose(f_llr(a, b), f_llr(b, a))
    assert np.isfinite(f_llr(a, b)).all()


def test_noiseless_decoders_recover_the_message():
    spec = PolarCodeSpec(32, tuple(range(16, 32)), crc_length=11)
    rng = np.random.default_rng(4)
    message = crc_attach(rng.integers(0, 2, size=5, dtype=np.uint8))
    llrs = 20.0 * (1 - 2 * encode(spec, message).astype(float))
    assert np.array_equal(sc_decode(spec, llrs)[1], message)
    _, decoded, ok = scl_decode(spec, llrs, 8)
    assert ok and np.array_equal(decoded, message)


def test_list_decode_returns_sorted_paths_and_l1_equals_sc():
    spec = PolarCodeSpec(16, (7, 9, 10, 11, 12, 13, 14, 15))
    rng = np.random.default_rng(5)
    for _ in range(20):
        llrs = rng.normal(1.0, 2.0, size=16)
        paths, metrics = list_decode(spec, llrs, 4)
        assert paths.shape == (4, 16)
        assert np.all(np.diff(metrics) >= 0)
        single, _ = list_decode(spec, llrs, 1)
        assert np.array_equal(single[0], sc_decode(spec, llrs)[0])


def test_monitor_positions_are_decided_but_encoded_as_zero():
    spec = PolarCodeSpec(8, (3, 5), monitor_set=(6, 7))
    x = encode(spec, [1, 1])
    u_hat, _ = sc_decode(spec, 10.0 * (1 - 2 * x.astype(float)))
    assert u_hat[6] == 0 and u_hat[7] == 0
    # a rotated codeword flips the monitors
    u_flip, _ = sc_decode(spec, -10.0 * (1 - 2 * x.astype(float)))
    assert u_flip[7] == 1


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        PolarCodeSpec(12, (1, 2))
    with pytest.raises(ValueError):
        PolarCodeSpec(8, (3, 3))
    with pytest.raises(ValueError):
        PolarCodeSpec(8, (6, 7), monitor_set=(7,))
    with pytest.raises(ValueError):
        PolarCodeSpec(8, (1, 2), monitor_set=(4,))
