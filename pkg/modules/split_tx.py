"""
Code-splitting transmitter and the pilot-aided baseline transmitter.

A coded-pilot packet carries B + 1 component codes: one QPSK coded pilot per
fading block (components 1..B) and one N_s-QAM data code (component 0) whose
symbols are spread over the blocks. Block b is sent as [x_b, x_{0,b}].
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from modules.crc_utils import CRC11_LENGTH, crc_attach, crc_parity
from modules.modem import SUPPORTED_ORDERS, bicm_interleave, build_constellation, map_symbols
from modules.polar_codec import PolarCodeSpec, encode
from modules.rate_match import RateMatchMode, RateMatchSpec, rate_match

CRC_POLICIES = ("per-component", "aggregate-on-0")
MIN_PILOT_MOTHER_LENGTH = 8
PILOT_SEED = 0x9E37


def _bits_per_symbol(modulation_order: int) -> int:
    if modulation_order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported modulation order {modulation_order}")
    return modulation_order.bit_length() - 1


def even_split(total: int, parts: int) -> Tuple[int, ...]:
    """Split ``total`` into ``parts`` near-equal counts, larger ones first."""
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    base, extra = divmod(int(total), parts)
    return tuple(base + (1 if i < extra else 0) for i in range(parts))


@dataclass(frozen=True)
class PacketLayout:
    """Where each block's reference and data symbols sit in the packet."""

    pilot_lengths: Tuple[int, ...]
    data_lengths: Tuple[int, ...]

    @property
    def block_lengths(self) -> Tuple[int, ...]:
        return tuple(p + d for p, d in zip(self.pilot_lengths, self.data_lengths))

    @property
    def packet_length(self) -> int:
        return sum(self.block_lengths)

    @cached_property
    def block_starts(self) -> Tuple[int, ...]:
        return tuple(int(s) for s in np.concatenate([[0], np.cumsum(self.block_lengths)[:-1]]))

    @cached_property
    def pilot_slices(self) -> Tuple[slice, ...]:
        return tuple(slice(s, s + p) for s, p in zip(self.block_starts, self.pilot_lengths))

    @cached_property
    def data_slices(self) -> Tuple[slice, ...]:
        return tuple(
            slice(s + p, s + p + d)
            for s, p, d in zip(self.block_starts, self.pilot_lengths, self.data_lengths)
        )

    @cached_property
    def data_positions(self) -> np.ndarray:
        """Packet indices of the data symbols in transmit order."""
        if not self.data_slices:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(s.start, s.stop) for s in self.data_slices])

    @cached_property
    def data_block_index(self) -> np.ndarray:
        """Fading block of each data symbol, in transmit order."""
        return np.repeat(np.arange(len(self.data_lengths)), self.data_lengths)


def split_geometry(
    coded_bits: int, blocks: int, pilot_bits: int, modulation_order: int
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Per-block pilot and data symbol counts for M total coded bits.

    Each block carries ``pilot_bits`` QPSK-coded bits; the remaining
    M - B * pilot_bits bits are N_s-QAM data spread evenly over the blocks.
    """
    n_s = _bits_per_symbol(modulation_order)
    if pilot_bits < 2 or pilot_bits % 2:
        raise ValueError(f"pilot_bits must be a positive even number, got {pilot_bits}")
    data_bits = coded_bits - blocks * pilot_bits
    if data_bits <= 0:
        raise ValueError(f"{blocks} pilot blocks of {pilot_bits} bits leave no room for data in {coded_bits}")
    if data_bits % n_s:
        raise ValueError(f"{data_bits} data bits are not a multiple of {n_s} bits per symbol")
    return (pilot_bits // 2,) * blocks, even_split(data_bits // n_s, blocks)


def pilot_aided_geometry(
    coded_bits: int, blocks: int, pilot_length: int, modulation_order: int
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    n_s = _bits_per_symbol(modulation_order)
    if coded_bits % n_s:
        raise ValueError(f"{coded_bits} coded bits are not a multiple of {n_s} bits per symbol")
    if pilot_length < 0:
        raise ValueError(f"pilot_length must be >= 0, got {pilot_length}")
    return (int(pilot_length),) * blocks, even_split(coded_bits // n_s, blocks)


def component_payload_lengths(info_bits: Sequence[int], crc_policy: str) -> Tuple[int, ...]:
    """Bits entering each component encoder (message plus any CRC)."""
    if crc_policy == "per-component":
        return tuple(int(k) + CRC11_LENGTH for k in info_bits)
    if crc_policy == "aggregate-on-0":
        return (int(info_bits[0]) + CRC11_LENGTH,) + tuple(int(k) for k in info_bits[1:])
    raise ValueError(f"unknown crc_policy '{crc_policy}'; use one of {CRC_POLICIES}")


@dataclass(frozen=True)
class SplitConfig:
    """One coded-pilot transmission scheme.

    Index 0 of ``info_bits``, ``codes`` and ``rate_matches`` is the data
    component; index b >= 1 is the coded pilot of fading block b.
    """

    pilot_symbols: Tuple[int, ...]
    data_symbols: Tuple[int, ...]
    info_bits: Tuple[int, ...]
    modulation_order: int
    codes: Tuple[PolarCodeSpec, ...] = ()
    rate_matches: Tuple[RateMatchSpec, ...] = ()
    crc_policy: str = "per-component"

    @property
    def blocks(self) -> int:
        return len(self.pilot_symbols)

    @property
    def K(self) -> int:
        return int(sum(self.info_bits))

    @property
    def bits_per_symbol(self) -> int:
        return _bits_per_symbol(self.modulation_order)

    @property
    def packet_length(self) -> int:
        return int(sum(self.pilot_symbols) + sum(self.data_symbols))

    @property
    def symbol_budgets(self) -> Tuple[int, ...]:
        """N_c^0, N_c^1, ..., N_c^B."""
        return (int(sum(self.data_symbols)),) + tuple(self.pilot_symbols)

    @property
    def coded_lengths(self) -> Tuple[int, ...]:
        """M_0 = N_c^0 n_s and M_b = 2 N_c^b."""
        return (self.symbol_budgets[0] * self.bits_per_symbol,) + tuple(2 * n for n in self.pilot_symbols)

    @property
    def payload_lengths(self) -> Tuple[int, ...]:
        return component_payload_lengths(self.info_bits, self.crc_policy)

    @cached_property
    def layout(self) -> PacketLayout:
        return PacketLayout(tuple(self.pilot_symbols), tuple(self.data_symbols))


def effective_rate(cfg: SplitConfig) -> float:
    """R_eff = n_s a_0 R_0 + sum_b 2 a_b R_b with a_b = N_c^b / N_t, R_b = K_b / M_b."""
    n_t = cfg.packet_length
    if n_t <= 0:
        raise ValueError("packet has no symbols")
    rate = 0.0
    for b, (budget, coded, k) in enumerate(zip(cfg.symbol_budgets, cfg.coded_lengths, cfg.info_bits)):
        if coded == 0:
            continue
        per_symbol = cfg.bits_per_symbol if b == 0 else 2
        rate += per_symbol * (budget / n_t) * (k / coded)
    return rate


def validate_split_config(cfg: SplitConfig) -> None:
    errors: List[str] = []
    blocks = cfg.blocks
    if blocks < 1:
        errors.append("at least one fading block is required")
    if len(cfg.data_symbols) != blocks:
        errors.append(f"data_symbols has {len(cfg.data_symbols)} entries for {blocks} blocks")
    if len(cfg.info_bits) != blocks + 1:
        errors.append(f"info_bits needs {blocks + 1} entries, got {len(cfg.info_bits)}")
    if cfg.modulation_order not in SUPPORTED_ORDERS:
        errors.append(f"unsupported modulation order {cfg.modulation_order}")
    if cfg.crc_policy not in CRC_POLICIES:
        errors.append(f"unknown crc_policy '{cfg.crc_policy}'")
    if errors:
        raise ValueError("invalid split configuration:\n - " + "\n - ".join(errors))

    if min(cfg.pilot_symbols) < 1:
        errors.append("every fading block needs at least one coded-pilot symbol")
    if min(cfg.data_symbols) < 0 or sum(cfg.data_symbols) < 1:
        errors.append("the data component needs at least one symbol")
    if cfg.info_bits[0] < 0:
        errors.append("K_0 must be >= 0")
    if any(k < 1 for k in cfg.info_bits[1:]):
        errors.append("every coded pilot must carry at least one information bit")
    if len(cfg.codes) != blocks + 1 or len(cfg.rate_matches) != blocks + 1:
        errors.append("one code and one rate-matching spec per component are required")
    else:
        payloads = cfg.payload_lengths
        for b, (code, rm, coded) in enumerate(zip(cfg.codes, cfg.rate_matches, cfg.coded_lengths)):
            if code.K != payloads[b]:
                errors.append(f"component {b}: code has K={code.K}, payload is {payloads[b]} bits")
            expected_crc = CRC11_LENGTH if (b == 0 or cfg.crc_policy == "per-component") else 0
            if code.crc_length != expected_crc:
                errors.append(f"component {b}: crc_length {code.crc_length}, expected {expected_crc}")
            if rm.mother_length != code.mother_length:
                errors.append(f"component {b}: rate matching expects N={rm.mother_length}")
            if rm.target_length != coded:
                errors.append(f"component {b}: rate matching targets {rm.target_length} bits, budget is {coded}")
            if b == 0:
                if code.monitor_set:
                    errors.append("the data component must not have monitor positions")
                continue
            n = code.mother_length
            if n < MIN_PILOT_MOTHER_LENGTH:
                errors.append(f"component {b}: coded pilots need N >= {MIN_PILOT_MOTHER_LENGTH}")
            if code.monitor_set != (n - 2, n - 1):
                errors.append(f"component {b}: coded pilots must monitor positions {n - 2} and {n - 1}")
            if rm.mode is RateMatchMode.SHORTEN:
                errors.append(f"component {b}: coded pilots cannot be shortened")
    if errors:
        raise ValueError("invalid split configuration:\n - " + "\n - ".join(errors))


def split_message(message: Sequence[int], info_bits: Sequence[int]) -> List[np.ndarray]:
    """Contiguous partition m = [m_0, m_1, ..., m_B]."""
    msg = np.asarray(message, dtype=np.uint8).ravel()
    if msg.size != sum(info_bits):
        raise ValueError(f"message has {msg.size} bits, expected {sum(info_bits)}")
    edges = np.cumsum([0] + [int(k) for k in info_bits])
    return [msg[edges[b] : edges[b + 1]] for b in range(len(info_bits))]


def component_payloads(message: Sequence[int], cfg: SplitConfig) -> List[np.ndarray]:
    parts = split_message(message, cfg.info_bits)
    if cfg.crc_policy == "per-component":
        return [crc_attach(part) for part in parts]
    # one CRC on component 0 covering [m_1 .. m_B, m_0]
    covered = np.concatenate(parts[1:] + [parts[0]])
    return [np.concatenate([parts[0], crc_parity(covered)])] + parts[1:]


def strip_payload(payload: Sequence[int], component: int, cfg: SplitConfig) -> np.ndarray:
    """Message bits of a decoded component payload."""
    arr = np.asarray(payload, dtype=np.uint8)
    return arr[: cfg.info_bits[component]]


def encode_packet(message: Sequence[int], cfg: SplitConfig) -> np.ndarray:
    validate_split_config(cfg)
    payloads = component_payloads(message, cfg)
    layout = cfg.layout
    qpsk = build_constellation(4)
    x = np.empty(cfg.packet_length, dtype=complex)
    for b in range(1, cfg.blocks + 1):
        coded = rate_match(encode(cfg.codes[b], payloads[b]), cfg.rate_matches[b])
        x[layout.pilot_slices[b - 1]] = map_symbols(coded, qpsk)
    coded = bicm_interleave(rate_match(encode(cfg.codes[0], payloads[0]), cfg.rate_matches[0]))
    x[layout.data_positions] = map_symbols(coded, build_constellation(cfg.modulation_order))
    return x


@dataclass(frozen=True)
class PilotAidedConfig:
    """Baseline: known QPSK pilots per block followed by one data code."""

    pilot_lengths: Tuple[int, ...]
    data_symbols: Tuple[int, ...]
    info_bits: int
    modulation_order: int
    code: PolarCodeSpec
    rate_match: RateMatchSpec
    pilot_seed: int = PILOT_SEED

    @property
    def blocks(self) -> int:
        return len(self.pilot_lengths)

    @property
    def K(self) -> int:
        return int(self.info_bits)

    @property
    def packet_length(self) -> int:
        return int(sum(self.pilot_lengths) + sum(self.data_symbols))

    @property
    def coded_length(self) -> int:
        return int(sum(self.data_symbols)) * _bits_per_symbol(self.modulation_order)

    @property
    def pilot_fraction(self) -> float:
        return sum(self.pilot_lengths) / self.packet_length

    @cached_property
    def layout(self) -> PacketLayout:
        return PacketLayout(tuple(self.pilot_lengths), tuple(self.data_symbols))


def pilot_aided_rate(cfg: PilotAidedConfig) -> float:
    """(1 - a) n_s R with a the pilot fraction and R = K / M."""
    return (1.0 - cfg.pilot_fraction) * _bits_per_symbol(cfg.modulation_order) * cfg.K / cfg.coded_length


def validate_pilot_aided_config(cfg: PilotAidedConfig) -> None:
    errors: List[str] = []
    if cfg.blocks < 1 or len(cfg.data_symbols) != cfg.blocks:
        errors.append("pilot_lengths and data_symbols need one entry per block")
    if cfg.modulation_order not in SUPPORTED_ORDERS:
        errors.append(f"unsupported modulation order {cfg.modulation_order}")
    elif cfg.coded_length < 1:
        errors.append("the data code needs at least one symbol")
    if cfg.code.K != cfg.K + CRC11_LENGTH or cfg.code.crc_length != CRC11_LENGTH:
        errors.append(f"data code must carry K + {CRC11_LENGTH} bits with a CRC")
    if cfg.code.monitor_set:
        errors.append("the data code must not have monitor positions")
    if cfg.rate_match.mother_length != cfg.code.mother_length:
        errors.append("rate matching and code disagree on N")
    if not errors and cfg.rate_match.target_length != cfg.coded_length:
        errors.append(f"rate matching targets {cfg.rate_match.target_length} bits, budget is {cfg.coded_length}")
    if errors:
        raise ValueError("invalid pilot-aided configuration:\n - " + "\n - ".join(errors))


def pilot_symbols(cfg: PilotAidedConfig) -> Tuple[np.ndarray, ...]:
    """Seeded pseudo-random QPSK pilots, one sequence per block."""
    rng = np.random.default_rng(cfg.pilot_seed)
    qpsk = build_constellation(4)
    return tuple(map_symbols(rng.integers(0, 2, size=2 * n), qpsk) for n in cfg.pilot_lengths)


def pilot_aided_encode(message: Sequence[int], cfg: PilotAidedConfig) -> np.ndarray:
    validate_pilot_aided_config(cfg)
    msg = np.asarray(message, dtype=np.uint8).ravel()
    if msg.size != cfg.K:
        raise ValueError(f"message has {msg.size} bits, expected {cfg.K}")
    layout = cfg.layout
    x = np.empty(cfg.packet_length, dtype=complex)
    for sl, pilots in zip(layout.pilot_slices, pilot_symbols(cfg)):
        x[sl] = pilots
    coded = bicm_interleave(rate_match(encode(cfg.code, crc_attach(msg)), cfg.rate_match))
    x[layout.data_positions] = map_symbols(coded, build_constellation(cfg.modulation_order))
    return x
