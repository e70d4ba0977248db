import sys
import json
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.config import (  # noqa: E402
    ConfigError,
    design_snr_grid,
    get_config,
    load_campaign_file,
    parse_snr_spec,
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("CODED_PILOT_SEED", "CODED_PILOT_THREADS", "RUN_LOG_PATH"):
        monkeypatch.delenv(key, raising=False)


def test_parse_snr_spec_forms():
    assert parse_snr_spec("0,1.5,3") == [0.0, 1.5, 3.0]
    assert parse_snr_spec("0:2:0.5") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_snr_spec([1, 2]) == [1.0, 2.0]
    assert parse_snr_spec(4) == [4.0]
    for bad in ("0:1", "2:1:0.5", "0:1:0", "a,b"):
        with pytest.raises(ConfigError):
            parse_snr_spec(bad)


def test_defaults():
    cfg = get_config()
    assert cfg["MIN_ERRORS"] == 100 and cfg["MAX_TRIALS"] == 1_000_000
    assert cfg["SEED"] == 0 and cfg["CRC_POLICY"] == "per-component"
    assert cfg["TARGET_BLER"] == 1e-2 and cfg["DESIGN_SNR_STEP_DB"] == 0.25
    assert cfg["CHANNEL_MODEL"] == "unit-phase" and cfg["CHUNK_SIZE"] == 250
    assert cfg["SNR_DB"] == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    assert cfg["PILOT_BITS"] is None and cfg["THREADS"] >= 1


def test_precedence_override_then_file_then_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CODED_PILOT_SEED", "5")
    monkeypatch.setenv("CODED_PILOT_THREADS", "3")
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"seed": 9, "k": 150, "snr_db": "1,2", "max_trials": "1e4"}), encoding="utf-8")
    cfg = get_config(path, seed=12, list_size=None)
    assert cfg["SEED"] == 12
    assert cfg["K"] == 150 and cfg["SNR_DB"] == [1.0, 2.0] and cfg["MAX_TRIALS"] == 10_000
    assert cfg["THREADS"] == 3
    assert get_config()["SEED"] == 5


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"k": 10, "pilots": 3}), encoding="utf-8")
    with pytest.raises(ConfigError, match="pilots"):
        load_campaign_file(path)
    with pytest.raises(ConfigError):
        get_config(frobnicate=1)
    with pytest.raises(ConfigError):
        load_campaign_file(tmp_path / "missing.json")
    (tmp_path / "list.json").write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_campaign_file(tmp_path / "list.json")


def test_validation_reports_every_problem():
    with pytest.raises(ConfigError) as exc:
        get_config(scheme="both-ish", modulation_order=8, min_errors=0, target_bler=2.0)
    message = str(exc.value)
    assert message.startswith("Configuration validation failed:")
    for fragment in ("SCHEME", "MODULATION_ORDER", "MIN_ERRORS", "TARGET_BLER"):
        assert fragment in message


def test_bad_types_become_config_errors():
    with pytest.raises(ConfigError):
        get_config(k="many")
    with pytest.raises(ConfigError):
        get_config(design_snr_range_db=[0.0])


def test_design_snr_grid_is_inclusive():
    cfg = get_config(design_snr_range_db=[0.0, 1.0], design_snr_step_db=0.5)
    assert design_snr_grid(cfg) == [0.0, 0.5, 1.0]
