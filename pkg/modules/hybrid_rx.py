"""
Packet receivers: the two-stage hybrid receiver for coded-pilot packets and
the coherent receiver for the pilot-aided baseline.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from modules.blind_rx import (
    NOISE_FLOOR,
    BlindEstimate,
    pilot_llrs,
    process_pilot_block,
    reestimate_channel,
)
from modules.modem import bicm_deinterleave, build_constellation, demap_llr
from modules.polar_codec import LLR_MAX, scl_decode
from modules.rate_match import de_rate_match
from modules.split_tx import PilotAidedConfig, SplitConfig, pilot_symbols, strip_payload


@dataclass(frozen=True, eq=False)
class HybridResult:
    message: np.ndarray
    stage_flags: Tuple[bool, ...]  # CRC status of components 0..B
    estimates: Tuple[BlindEstimate, ...]

    @property
    def crc_ok(self) -> bool:
        return all(self.stage_flags)


def _data_llrs(
    y: np.ndarray,
    layout,
    channels: Sequence[complex],
    variances: Sequence[float],
    sigma2: float,
    modulation_order: int,
) -> np.ndarray:
    constellation = build_constellation(modulation_order)
    blocks = layout.data_block_index
    h = np.asarray(channels, dtype=complex)[blocks]
    var = np.maximum(sigma2 + np.asarray(variances, dtype=float)[blocks], NOISE_FLOOR)
    llrs = demap_llr(y[layout.data_positions], h, var, constellation)
    return np.clip(llrs, -LLR_MAX, LLR_MAX)


def _coherent_pilot(y_b: np.ndarray, spec, rm, h: complex, sigma2: float, list_size: int, crc_prefix):
    # rotation known: monitor positions decoded as frozen
    coherent = replace(spec, monitor_set=())
    llrs = de_rate_match(pilot_llrs(y_b, abs(h), float(np.angle(h)), sigma2), rm)
    _, payload, crc_ok = scl_decode(coherent, llrs, list_size, crc_prefix)
    return payload, crc_ok


def hybrid_decode(
    y: Sequence[complex],
    cfg: SplitConfig,
    sigma2: float,
    list_size: int,
    genie_channel: Optional[Sequence[complex]] = None,
    recovery: str = "algebraic",
) -> HybridResult:
    """Blind stage per fading block, then coherent decoding of the data code.

    With ``genie_channel`` the true coefficients replace every estimate and
    the estimation variance is zero.
    """
    received = np.asarray(y, dtype=complex).ravel()
    if received.size != cfg.packet_length:
        raise ValueError(f"expected {cfg.packet_length} received symbols, got {received.size}")
    layout = cfg.layout
    payloads: List[np.ndarray] = [np.zeros(0, dtype=np.uint8)] * (cfg.blocks + 1)
    flags = [False] * (cfg.blocks + 1)
    estimates: List[BlindEstimate] = []
    channels, variances = [], []

    for b in range(1, cfg.blocks + 1):
        y_b = received[layout.pilot_slices[b - 1]]
        spec, rm = cfg.codes[b], cfg.rate_matches[b]
        if genie_channel is not None:
            h = complex(genie_channel[b - 1])
            payloads[b], flags[b] = _coherent_pilot(y_b, spec, rm, h, sigma2, list_size, None)
            estimate = BlindEstimate(abs(h), float(np.mod(np.angle(h), np.pi / 2)), 0, h, 0.0)
        else:
            estimate, decoded = process_pilot_block(y_b, spec, rm, sigma2, list_size, recovery)
            payloads[b], flags[b] = decoded.message, decoded.crc_ok
        estimates.append(estimate)
        channels.append(estimate.channel)
        variances.append(estimate.channel_variance)

    llrs = _data_llrs(received, layout, channels, variances, sigma2, cfg.modulation_order)
    llrs = de_rate_match(bicm_deinterleave(llrs), cfg.rate_matches[0])
    prefix = None
    if cfg.crc_policy == "aggregate-on-0":
        prefix = np.concatenate([strip_payload(payloads[b], b, cfg) for b in range(1, cfg.blocks + 1)])
    _, payloads[0], flags[0] = scl_decode(cfg.codes[0], llrs, list_size, prefix)

    message = np.concatenate([strip_payload(payloads[b], b, cfg) for b in range(cfg.blocks + 1)])
    return HybridResult(message, tuple(flags), tuple(estimates))


def pilot_aided_estimates(
    y: Sequence[complex],
    cfg: PilotAidedConfig,
    sigma2: float,
    genie_channel: Optional[Sequence[complex]] = None,
) -> Tuple[List[complex], List[float]]:
    """Least-squares channel and its variance sigma^2 / N_p per block.

    A block without pilots gets h = 1 and zero variance.
    """
    received = np.asarray(y, dtype=complex).ravel()
    if received.size != cfg.packet_length:
        raise ValueError(f"expected {cfg.packet_length} received symbols, got {received.size}")
    channels, variances = [], []
    for b, (sl, pilots) in enumerate(zip(cfg.layout.pilot_slices, pilot_symbols(cfg))):
        if genie_channel is not None:
            h, var = complex(genie_channel[b]), 0.0
        elif pilots.size:
            h, var = reestimate_channel(received[sl], pilots, sigma2)
        else:
            h, var = 1.0 + 0.0j, 0.0
        channels.append(h)
        variances.append(var)
    return channels, variances


def pilot_aided_decode(
    y: Sequence[complex],
    cfg: PilotAidedConfig,
    sigma2: float,
    list_size: int,
    genie_channel: Optional[Sequence[complex]] = None,
) -> Tuple[np.ndarray, bool]:
    """Least-squares estimate from the known pilots, then coherent decoding."""
    channels, variances = pilot_aided_estimates(y, cfg, sigma2, genie_channel)
    received = np.asarray(y, dtype=complex).ravel()
    llrs = _data_llrs(received, cfg.layout, channels, variances, sigma2, cfg.modulation_order)
    llrs = de_rate_match(bicm_deinterleave(llrs), cfg.rate_match)
    _, payload, crc_ok = scl_decode(cfg.code, llrs, list_size)
    return payload[: cfg.K], crc_ok
