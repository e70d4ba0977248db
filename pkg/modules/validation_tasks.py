from typing import Any, Dict, List

import numpy as np
from prefect import task, get_run_logger

from modules.blind_rx import estimate_magnitude, estimate_phase_offset, process_pilot_block, reestimate_channel
from modules.campaign import BlerCurve, wilson_interval
from modules.code_design import construct_code, dega_evolve, design_pilot_code, design_split_config, psi, psi_inv
from modules.crc_utils import CRC11_LENGTH, crc_attach
from modules.fading_channel import Stream, sample_channel, transmit, trial_rng
from modules.hybrid_rx import hybrid_decode
from modules.modem import build_constellation, map_symbols
from modules.polar_codec import encode
from modules.rate_match import rate_match
from modules.split_tx import encode_packet


def _status(failures: int) -> str:
    return "OK" if failures == 0 else "ALERT"


@task
def validate_curve(curve: BlerCurve, cfg: Dict[str, Any]) -> Dict[str, Any]:
    """Flag points that stopped without enough errors and curves that rise with SNR."""
    logger = get_run_logger()
    unconverged = [
        (p.scheme, p.snr_db)
        for p in curve.points
        if p.block_errors < cfg["MIN_ERRORS"] and p.trials < cfg["MAX_TRIALS"]
    ]
    rising: List[Any] = []
    for scheme in sorted({p.scheme for p in curve.points}):
        points = sorted(curve.for_scheme(scheme), key=lambda p: p.snr_db)
        for a, b in zip(points, points[1:]):
            # a real rise: the intervals do not overlap
            if wilson_interval(b.block_errors, b.trials)[0] > wilson_interval(a.block_errors, a.trials)[1]:
                rising.append((scheme, a.snr_db, b.snr_db))
    capped = [(p.scheme, p.snr_db) for p in curve.points if p.trials >= cfg["MAX_TRIALS"] and p.block_errors == 0]
    status = _status(len(unconverged) + len(rising))
    logger.info(
        "Validation → points=%s, unconverged=%s, rising=%s, error_free_at_cap=%s, status=%s",
        len(curve.points),
        len(unconverged),
        len(rising),
        len(capped),
        status,
    )
    return {
        "validation": {
            "points": len(curve.points),
            "unconverged": unconverged,
            "rising": rising,
            "errorFreeAtCap": capped,
            "status": status,
        }
    }


def _selftest_geometry(order: int, blocks: int):
    n_s = order.bit_length() - 1
    pilot_bits = 32
    coded_bits = blocks * pilot_bits + 48 * blocks * n_s
    return coded_bits, coded_bits // 3, pilot_bits


@task
def selftest_roundtrip(trials: int = 20, seed: int = 0) -> Dict[str, Any]:
    """Noiseless packets through encoder and hybrid receiver for every order and B in {1, 3}."""
    logger = get_run_logger()
    checks = failures = 0
    for order in (4, 16, 64):
        for blocks in (1, 3):
            coded_bits, k, pilot_bits = _selftest_geometry(order, blocks)
            cfg = design_split_config(k, coded_bits, blocks, pilot_bits, order, 1e-2, [10.0]).config
            for trial in range(trials):
                message = trial_rng(seed, trial, Stream.MESSAGE).integers(0, 2, size=cfg.K, dtype=np.uint8)
                realization = sample_channel(
                    blocks, trial_rng(seed, trial, Stream.CHANNEL), noise_variance=0.0,
                    block_lengths=cfg.layout.block_lengths,
                )
                y = transmit(encode_packet(message, cfg), realization, trial_rng(seed, trial, Stream.NOISE))
                result = hybrid_decode(y, cfg, 0.0, 1)
                checks += 1
                if not (result.crc_ok and np.array_equal(result.message, message)):
                    failures += 1
    status = _status(failures)
    logger.info("Selftest roundtrip → checks=%s, failures=%s, status=%s", checks, failures, status)
    return {"suite": "roundtrip", "checks": checks, "failures": failures, "status": status}


@task
def selftest_rotation(messages: int = 4, offsets: int = 8, seed: int = 0) -> Dict[str, Any]:
    """Every pi/2 multiple and a grid of offsets for none/puncture/repeat coded pilots."""
    logger = get_run_logger()
    qpsk = build_constellation(4)
    rng = np.random.default_rng(seed)
    # (coded bits, mother length) -> none, puncture, repeat
    cases = [(32, 32), (64, 64), (24, 32), (48, 64), (40, 32), (80, 64)]
    checks = failures = 0
    for coded_bits, mother in cases:
        spec, rm = design_pilot_code(coded_bits, 16, mother_length=mother)
        for _ in range(messages):
            payload = crc_attach(rng.integers(0, 2, size=16 - CRC11_LENGTH, dtype=np.uint8))
            x = map_symbols(rate_match(encode(spec, payload), rm), qpsk)
            for m in range(4):
                for offset in np.arange(offsets) * (np.pi / 2) / offsets:
                    y = x * np.exp(1j * (m * np.pi / 2 + offset))
                    estimate, decoded = process_pilot_block(y, spec, rm, 0.0, 4)
                    checks += 1
                    if not (decoded.crc_ok and np.array_equal(decoded.message, payload)):
                        failures += 1
                    elif abs(estimate.channel - np.exp(1j * (m * np.pi / 2 + offset))) > 1e-9:
                        failures += 1
    status = _status(failures)
    logger.info("Selftest rotation → checks=%s, failures=%s, status=%s", checks, failures, status)
    return {"suite": "rotation", "checks": checks, "failures": failures, "status": status}


@task
def selftest_estimators(samples: int = 20_000, seed: int = 0) -> Dict[str, Any]:
    logger = get_run_logger()
    rng = np.random.default_rng(seed)
    qpsk = build_constellation(4)
    failures = 0
    x = map_symbols(rng.integers(0, 2, size=64), qpsk)
    for offset in np.linspace(0.0, np.pi / 2, 16, endpoint=False):
        if abs(estimate_phase_offset(x * np.exp(1j * offset)) - offset) > 1e-6:
            failures += 1
    sigma2 = 0.5
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(samples) + 1j * rng.standard_normal(samples))
    xs = map_symbols(rng.integers(0, 2, size=2 * samples), qpsk)
    if abs(estimate_magnitude(0.7 * xs + noise, sigma2) - 0.7) > 0.02:
        failures += 1
    h, var = reestimate_channel(xs + noise, xs, sigma2)
    if abs(h - 1.0) > 5 * np.sqrt(var) or not np.isclose(var, sigma2 / samples):
        failures += 1
    status = _status(failures)
    logger.info("Selftest estimators → failures=%s, status=%s", failures, status)
    return {"suite": "estimators", "checks": 18, "failures": failures, "status": status}


@task
def selftest_dega() -> Dict[str, Any]:
    logger = get_run_logger()
    failures = 0
    xs = np.geomspace(0.1, 50.0, 64)
    xs = xs[(xs <= 10.0) | (xs >= 10.1)]
    if np.max(np.abs(psi_inv(psi(xs)) - xs) / xs) > 1e-6:
        failures += 1
    profile = dega_evolve([2.0, 2.0])
    if abs(profile.decision_means[1] - 4.0) > 1e-12 or abs(profile.decision_means[0] - 0.824) > 1e-2:
        failures += 1
    spec = construct_code(8, 4, dega_evolve(np.full(8, 2.0)))
    if spec.info_set != (3, 5, 6, 7):
        failures += 1
    status = _status(failures)
    logger.info("Selftest dega → failures=%s, status=%s", failures, status)
    return {"suite": "dega", "checks": 3, "failures": failures, "status": status}
