import sys
import pathlib
from dataclasses import replace

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.code_design import design_pilot_aided_config, design_split_config  # noqa: E402
from modules.crc_utils import crc_check  # noqa: E402
from modules.split_tx import (  # noqa: E402
    PacketLayout,
    component_payload_lengths,
    component_payloads,
    effective_rate,
    encode_packet,
    even_split,
    pilot_aided_encode,
    pilot_aided_geometry,
    pilot_aided_rate,
    pilot_symbols,
    split_geometry,
    split_message,
    validate_split_config,
)


def _design(order=4, blocks=2, crc_policy="per-component"):
    n_s = order.bit_length() - 1
    coded = blocks * 32 + 48 * blocks * n_s
    return design_split_config(coded // 3, coded, blocks, 32, order, 1e-2, [10.0], crc_policy).config


def test_even_split_puts_larger_counts_first():
    assert even_split(10, 3) == (4, 3, 3)
    assert even_split(9, 3) == (3, 3, 3)
    with pytest.raises(ValueError):
        even_split(5, 0)


def test_split_geometry_examples():
    assert split_geometry(600, 1, 32, 4) == ((16,), (284,))
    assert split_geometry(720, 3, 32, 16) == ((16, 16, 16), (52, 52, 52))
    with pytest.raises(ValueError):
        split_geometry(600, 1, 32, 64)
    with pytest.raises(ValueError):
        split_geometry(64, 2, 32, 4)
    with pytest.raises(ValueError):
        split_geometry(600, 1, 31, 4)
    assert pilot_aided_geometry(720, 3, 8, 16) == ((8, 8, 8), (60, 60, 60))


def test_packet_layout_interleaves_pilot_then_data_per_block():
    layout = PacketLayout((2, 2), (3, 2))
    assert layout.block_lengths == (5, 4)
    assert layout.block_starts == (0, 5)
    assert list(layout.data_positions) == [2, 3, 4, 7, 8]
    assert list(layout.data_block_index) == [0, 0, 0, 1, 1]
    assert layout.pilot_slices[1] == slice(5, 7)


def test_component_payload_lengths_per_policy():
    assert component_payload_lengths((100, 5, 6), "per-component") == (111, 16, 17)
    assert component_payload_lengths((100, 5, 6), "aggregate-on-0") == (111, 5, 6)
    with pytest.raises(ValueError):
        component_payload_lengths((1, 1), "none")


def test_split_message_is_a_contiguous_partition():
    msg = np.arange(10) % 2
    parts = split_message(msg, (4, 3, 3))
    assert [p.size for p in parts] == [4, 3, 3]
    assert np.array_equal(np.concatenate(parts), msg)
    with pytest.raises(ValueError):
        split_message(msg, (4, 4))


def test_aggregate_crc_covers_every_component():
    cfg = _design(crc_policy="aggregate-on-0")
    rng = np.random.default_rng(0)
    msg = rng.integers(0, 2, size=cfg.K, dtype=np.uint8)
    payloads = component_payloads(msg, cfg)
    parts = split_message(msg, cfg.info_bits)
    assert [p.size for p in payloads] == list(cfg.payload_lengths)
    assert crc_check(np.concatenate(parts[1:] + [payloads[0]]))


def test_effective_rate_is_bits_per_channel_use():
    cfg = _design(order=16, blocks=1)
    assert np.isclose(effective_rate(cfg), cfg.K / cfg.packet_length)
    pa = design_pilot_aided_config(200, 720, 3, 8, 16, 1e-2, [10.0]).config
    assert np.isclose(pilot_aided_rate(pa), 200 / pa.packet_length)


def test_encode_packet_places_qpsk_pilots_at_block_starts():
    cfg = _design(order=64, blocks=2)
    msg = np.random.default_rng(1).integers(0, 2, size=cfg.K, dtype=np.uint8)
    x = encode_packet(msg, cfg)
    assert x.size == cfg.packet_length
    for sl in cfg.layout.pilot_slices:
        assert np.allclose(np.abs(x[sl]), 1.0)
        assert np.allclose(np.abs(x[sl].real), 1 / np.sqrt(2))


def test_validate_split_config_lists_every_problem():
    cfg = _design()
    bad = replace(cfg, info_bits=cfg.info_bits[:1], modulation_order=8)
    with pytest.raises(ValueError) as exc:
        validate_split_config(bad)
    assert "info_bits" in str(exc.value) and "modulation order" in str(exc.value)
    no_monitor = replace(cfg, codes=(cfg.codes[0], replace(cfg.codes[1], monitor_set=())) + cfg.codes[2:])
    with pytest.raises(ValueError, match="monitor"):
        validate_split_config(no_monitor)


def test_pilot_aided_encode_uses_seeded_pilots():
    cfg = design_pilot_aided_config(100, 360, 2, 4, 4, 1e-2, [10.0]).config
    msg = np.zeros(100, dtype=np.uint8)
    x = pilot_aided_encode(msg, cfg)
    pilots = pilot_symbols(cfg)
    assert [p.size for p in pilots] == [4, 4]
    assert np.allclose(x[cfg.layout.pilot_slices[1]], pilots[1])
    assert all(np.array_equal(a, b) for a, b in zip(pilots, pilot_symbols(cfg)))
    with pytest.raises(ValueError):
        pilot_aided_encode(msg[:10], cfg)
