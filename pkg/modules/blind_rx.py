"""
Blind processing of one coded-pilot block.

Magnitude from received energy, fractional phase by the fourth-power
(Viterbi-Viterbi) estimator, the remaining multiple of pi/2 from the two
monitor bits of the extended code, then the decoded pilot is re-encoded and
used as an implicit pilot for a correlation channel estimate.

Under the adopted QPSK labelling a rotation by pi/2 maps a codeword c to
sigma(c) xor [1, 0, 1, 0, ...], sigma swapping the two bits of every pair.
In the u domain that is u[1::2] ^= u[0::2] followed by flipping u_{N-2};
a rotation by pi only flips u_{N-1}.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from modules.modem import build_constellation, map_symbols, qpsk_llr
from modules.polar_codec import LLR_MAX, PolarCodeSpec, crc_select, encode, list_decode, scl_decode
from modules.rate_match import RateMatchSpec, de_rate_match, rate_match

NOISE_FLOOR = 1e-12
PHASE_WRAP_TOL = 1e-9
RECOVERY_MODES = ("algebraic", "redecode")


class EstimationError(ValueError):
    """Raised when a block carries no usable signal for blind estimation."""


@dataclass(frozen=True)
class BlindEstimate:
    magnitude: float
    phase_offset: float
    ambiguity: int
    channel: complex
    channel_variance: float


@dataclass(frozen=True, eq=False)
class PilotDecodeResult:
    message: np.ndarray  # information-set bits, CRC included
    ambiguity: int
    symbols: np.ndarray  # re-encoded transmit symbols of the block
    crc_ok: bool


def estimate_magnitude(y: Sequence[complex], sigma2: float) -> float:
    samples = np.asarray(y, dtype=complex).ravel()
    if samples.size < 1:
        raise ValueError("magnitude estimation needs at least one sample")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    return float(np.sqrt(max(0.0, float(np.mean(np.abs(samples) ** 2)) - sigma2)))


def estimate_phase_offset(y: Sequence[complex]) -> float:
    """Fourth-power phase estimate folded into [0, pi/2)."""
    samples = np.asarray(y, dtype=complex).ravel()
    samples = samples[samples != 0]
    if samples.size == 0:
        raise EstimationError("all samples are zero; phase offset is undefined")
    z = samples**4 / np.abs(samples) ** 3
    total = z.sum()
    raw = 0.25 * np.arctan2(total.imag, total.real) - np.pi / 4
    offset = float(np.mod(raw, np.pi / 2))
    # raw just below a multiple of pi/2 wraps to pi/2 - eps
    if np.isclose(offset, np.pi / 2, rtol=0.0, atol=PHASE_WRAP_TOL):
        offset = 0.0
    return offset


def rotation_from_monitor(u_hat: Sequence[int], spec: PolarCodeSpec) -> int:
    """[u_{N-2}, u_{N-1}] = [0,0], [1,0], [0,1], [1,1] -> m = 0, 1, 2, 3."""
    n = spec.mother_length
    return int(u_hat[n - 2]) + 2 * int(u_hat[n - 1])


def recover_unrotated(spec: PolarCodeSpec, u_rotated: Sequence[int], ambiguity: int) -> np.ndarray:
    """Undo a rotation by ``ambiguity`` * pi/2 in the u domain; return the information bits."""
    if ambiguity not in (0, 1, 2, 3):
        raise ValueError(f"ambiguity must be in 0..3, got {ambiguity}")
    u = np.array(u_rotated, dtype=np.uint8)
    n = spec.mother_length
    u[[n - 2, n - 1]] = 0
    if ambiguity % 2:
        u[1::2] ^= u[0::2]
    return u[list(spec.info_set)]


def pilot_llrs(y: Sequence[complex], magnitude: float, phase: float, sigma2: float) -> np.ndarray:
    derotated = np.asarray(y, dtype=complex) * np.exp(-1j * phase)
    llrs = qpsk_llr(derotated, magnitude, max(sigma2, NOISE_FLOOR))
    return np.clip(llrs, -LLR_MAX, LLR_MAX)


def reencode_pilot(spec: PolarCodeSpec, rm: RateMatchSpec, message: Sequence[int]) -> np.ndarray:
    return map_symbols(rate_match(encode(spec, message), rm), build_constellation(4))


def blind_decode_pilot(
    y: Sequence[complex],
    spec: PolarCodeSpec,
    rm: RateMatchSpec,
    magnitude: float,
    phase_offset: float,
    sigma2: float,
    list_size: int,
    recovery: str = "algebraic",
    crc_prefix: Optional[Sequence[int]] = None,
) -> PilotDecodeResult:
    """Decode a coded pilot whose phase is known only up to a multiple of pi/2.

    The monitor bits are decided like information bits; the CRC is checked
    on each list path after its rotation has been removed.
    """
    if spec.monitor_set != (spec.mother_length - 2, spec.mother_length - 1):
        raise ValueError("blind decoding needs both monitor positions")
    if recovery not in RECOVERY_MODES:
        raise ValueError(f"unknown recovery '{recovery}'; use one of {RECOVERY_MODES}")
    llrs = de_rate_match(pilot_llrs(y, magnitude, phase_offset, sigma2), rm)
    u_paths, _ = list_decode(spec, llrs, list_size)

    if recovery == "algebraic":
        rotations = [rotation_from_monitor(u, spec) for u in u_paths]
        candidates = [recover_unrotated(spec, u, m) for u, m in zip(u_paths, rotations)]
        best, crc_ok = crc_select(spec, candidates, crc_prefix)
        message, ambiguity = candidates[best], rotations[best]
    else:
        ambiguity = rotation_from_monitor(u_paths[0], spec)
        llrs = de_rate_match(
            pilot_llrs(y, magnitude, phase_offset + ambiguity * np.pi / 2, sigma2), rm
        )
        _, message, crc_ok = scl_decode(spec, llrs, list_size, crc_prefix)
    return PilotDecodeResult(message, ambiguity, reencode_pilot(spec, rm, message), crc_ok)


def reestimate_channel(
    y: Sequence[complex], x_hat: Sequence[complex], sigma2: float
) -> Tuple[complex, float]:
    """Correlation estimate h = mean(y conj(x)) and its variance sigma^2 / N."""
    ys = np.asarray(y, dtype=complex).ravel()
    xs = np.asarray(x_hat, dtype=complex).ravel()
    if ys.size != xs.size or ys.size == 0:
        raise ValueError(f"need matching non-empty sequences, got {ys.size} and {xs.size}")
    return complex(np.mean(ys * np.conj(xs))), float(sigma2) / ys.size


def process_pilot_block(
    y: Sequence[complex],
    spec: PolarCodeSpec,
    rm: RateMatchSpec,
    sigma2: float,
    list_size: int,
    recovery: str = "algebraic",
    crc_prefix: Optional[Sequence[int]] = None,
) -> Tuple[BlindEstimate, PilotDecodeResult]:
    """Full blind chain for one block: estimate, decode, re-estimate."""
    magnitude = estimate_magnitude(y, sigma2)
    offset = estimate_phase_offset(y)
    decoded = blind_decode_pilot(y, spec, rm, magnitude, offset, sigma2, list_size, recovery, crc_prefix)
    channel, variance = reestimate_channel(y, decoded.symbols, sigma2)
    return BlindEstimate(magnitude, offset, decoded.ambiguity, channel, variance), decoded
