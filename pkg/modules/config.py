import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from dotenv import load_dotenv

from modules.fading_channel import CHANNEL_MODELS
from modules.blind_rx import RECOVERY_MODES
from modules.modem import SUPPORTED_ORDERS
from modules.split_tx import CRC_POLICIES

load_dotenv()

SCHEMES = ("coded-pilot", "pilot-aided", "both")

# campaign-file key -> config key
CAMPAIGN_KEYS = {
    "scheme": "SCHEME",
    "k": "K",
    "coded_bits": "CODED_BITS",
    "blocks": "BLOCKS",
    "pilot_bits": "PILOT_BITS",
    "pilot_length": "PILOT_LENGTH",
    "pilot_length_candidates": "PILOT_LENGTH_CANDIDATES",
    "modulation_order": "MODULATION_ORDER",
    "list_size": "LIST_SIZE",
    "snr_db": "SNR_DB",
    "min_errors": "MIN_ERRORS",
    "max_trials": "MAX_TRIALS",
    "seed": "SEED",
    "crc_policy": "CRC_POLICY",
    "output": "OUTPUT",
    "design": "DESIGN_PATH",
    "target_bler": "TARGET_BLER",
    "design_snr_step_db": "DESIGN_SNR_STEP_DB",
    "design_snr_range_db": "DESIGN_SNR_RANGE_DB",
    "channel_model": "CHANNEL_MODEL",
    "recovery": "RECOVERY",
    "genie": "GENIE",
    "chunk_size": "CHUNK_SIZE",
    "threads": "THREADS",
    "run_log_path": "RUN_LOG_PATH",
}


class ConfigError(ValueError):
    """Raised when a campaign configuration is missing or inconsistent."""


def parse_snr_spec(spec: Union[str, float, Sequence[float]]) -> List[float]:
    """``"0,1,2"`` or an inclusive range ``"start:stop:step"``; lists pass through."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if not isinstance(spec, str):
        return [float(s) for s in spec]
    text = spec.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"SNR range must be start:stop:step, got '{spec}'")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"SNR range needs step > 0 and stop >= start, got '{spec}'")
        return [round(float(s), 6) for s in np.arange(start, stop + step / 2, step)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse SNR list '{spec}'") from exc


def design_snr_grid(cfg: Dict[str, Any]) -> List[float]:
    lo, hi = cfg["DESIGN_SNR_RANGE_DB"]
    step = cfg["DESIGN_SNR_STEP_DB"]
    return [round(float(s), 6) for s in np.arange(lo, hi + step / 2, step)]


def load_campaign_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON campaign file into config keys; unknown keys are rejected."""
    file_path = Path(path).expanduser()
    try:
        raw = json.loads(file_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"campaign file not found: {file_path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"campaign file {file_path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"campaign file {file_path} must hold a JSON object")
    unknown = sorted(set(raw) - set(CAMPAIGN_KEYS))
    if unknown:
        raise ConfigError(f"unknown campaign keys in {file_path}: {', '.join(unknown)}")
    return {CAMPAIGN_KEYS[k]: v for k, v in raw.items()}


def _validate_config(cfg: Dict[str, Any]) -> None:
    """Fail fast, listing every problem at once."""

    errors: List[str] = []

    def require(condition: bool, message: str) -> None:
        if not condition:
            errors.append(message)

    require(cfg["SCHEME"] in SCHEMES, f"SCHEME must be one of {SCHEMES}, got '{cfg['SCHEME']}'")
    require(cfg["K"] >= 1, "K must be >= 1")
    require(cfg["CODED_BITS"] > cfg["K"], "CODED_BITS must exceed K")
    require(cfg["BLOCKS"] >= 1, "BLOCKS must be >= 1")
    require(
        cfg["MODULATION_ORDER"] in SUPPORTED_ORDERS,
        f"MODULATION_ORDER must be one of {SUPPORTED_ORDERS}",
    )
    require(cfg["LIST_SIZE"] >= 1, "LIST_SIZE must be >= 1")
    require(len(cfg["SNR_DB"]) > 0, "SNR_DB must contain at least one point")
    require(cfg["MIN_ERRORS"] >= 1, "MIN_ERRORS must be >= 1")
    require(cfg["MAX_TRIALS"] >= cfg["MIN_ERRORS"], "MAX_TRIALS must be >= MIN_ERRORS")
    require(cfg["SEED"] >= 0, "SEED must be non-negative")
    require(cfg["CRC_POLICY"] in CRC_POLICIES, f"CRC_POLICY must be one of {CRC_POLICIES}")
    require(0 < cfg["TARGET_BLER"] < 1, "TARGET_BLER must lie in (0, 1)")
    require(cfg["DESIGN_SNR_STEP_DB"] > 0, "DESIGN_SNR_STEP_DB must be positive")
    lo, hi = cfg["DESIGN_SNR_RANGE_DB"]
    require(lo < hi, "DESIGN_SNR_RANGE_DB must be an increasing pair")
    require(cfg["CHANNEL_MODEL"] in CHANNEL_MODELS, f"CHANNEL_MODEL must be one of {CHANNEL_MODELS}")
    require(cfg["RECOVERY"] in RECOVERY_MODES, f"RECOVERY must be one of {RECOVERY_MODES}")
    require(cfg["CHUNK_SIZE"] >= 1, "CHUNK_SIZE must be >= 1")
    require(cfg["THREADS"] >= 1, "THREADS must be >= 1")
    require(len(cfg["PILOT_LENGTH_CANDIDATES"]) > 0, "PILOT_LENGTH_CANDIDATES must be non-empty")
    require(
        all(c >= 1 for c in cfg["PILOT_LENGTH_CANDIDATES"]),
        "PILOT_LENGTH_CANDIDATES must be positive symbol counts",
    )
    if cfg["PILOT_BITS"] is not None:
        require(
            cfg["PILOT_BITS"] >= 2 and cfg["PILOT_BITS"] % 2 == 0,
            "PILOT_BITS must be a positive even number",
        )
    if cfg["PILOT_LENGTH"] is not None:
        require(cfg["PILOT_LENGTH"] >= 0, "PILOT_LENGTH must be >= 0")

    if errors:
        joined = "\n - ".join(errors)
        raise ConfigError(f"Configuration validation failed:\n - {joined}")


def get_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> Dict[str, Any]:
    """Resolve campaign configuration.

    Precedence: keyword overrides (lower-case campaign keys, None ignored),
    then the JSON campaign file, then environment, then defaults.
    """
    cfg: Dict[str, Any] = {
        "SCHEME": "both",
        "K": 300,
        "CODED_BITS": 600,
        "BLOCKS": 1,
        "PILOT_BITS": None,
        "PILOT_LENGTH": None,
        "PILOT_LENGTH_CANDIDATES": [4, 8, 16, 32],
        "MODULATION_ORDER": 4,
        "LIST_SIZE": 8,
        "SNR_DB": "0:6:1",
        "MIN_ERRORS": 100,
        "MAX_TRIALS": 1_000_000,
        "SEED": os.environ.get("CODED_PILOT_SEED", 0),
        "CRC_POLICY": "per-component",
        "OUTPUT": "results/bler.csv",
        "DESIGN_PATH": None,
        "TARGET_BLER": 1e-2,
        "DESIGN_SNR_STEP_DB": 0.25,
        "DESIGN_SNR_RANGE_DB": [-5.0, 25.0],
        "CHANNEL_MODEL": "unit-phase",
        "RECOVERY": "algebraic",
        "GENIE": False,
        "CHUNK_SIZE": 250,
        "THREADS": os.environ.get("CODED_PILOT_THREADS", os.cpu_count() or 1),
        "RUN_LOG_PATH": os.environ.get("RUN_LOG_PATH", "run_history.csv"),
    }
    if path is not None:
        cfg.update(load_campaign_file(path))
    for key, value in overrides.items():
        if key not in CAMPAIGN_KEYS:
            raise ConfigError(f"unknown configuration override '{key}'")
        if value is not None:
            cfg[CAMPAIGN_KEYS[key]] = value

    try:
        cfg["SNR_DB"] = parse_snr_spec(cfg["SNR_DB"])
        int_keys = ("K", "CODED_BITS", "BLOCKS", "MODULATION_ORDER", "LIST_SIZE", "MIN_ERRORS", "SEED", "CHUNK_SIZE", "THREADS")
        for key in int_keys:
            cfg[key] = int(cfg[key])
        cfg["MAX_TRIALS"] = int(float(cfg["MAX_TRIALS"]))
        for key in ("PILOT_BITS", "PILOT_LENGTH"):
            if cfg[key] is not None:
                cfg[key] = int(cfg[key])
        cfg["PILOT_LENGTH_CANDIDATES"] = [int(c) for c in cfg["PILOT_LENGTH_CANDIDATES"]]
        cfg["TARGET_BLER"] = float(cfg["TARGET_BLER"])
        cfg["DESIGN_SNR_STEP_DB"] = float(cfg["DESIGN_SNR_STEP_DB"])
        cfg["DESIGN_SNR_RANGE_DB"] = [float(v) for v in cfg["DESIGN_SNR_RANGE_DB"]]
        cfg["GENIE"] = bool(cfg["GENIE"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Configuration validation failed:\n - {exc}") from exc
    if len(cfg["DESIGN_SNR_RANGE_DB"]) != 2:
        raise ConfigError("Configuration validation failed:\n - DESIGN_SNR_RANGE_DB must hold two values")
    _validate_config(cfg)
    return cfg
