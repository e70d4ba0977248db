"""
Utility for appending structured run metadata to a CSV log.

One row per design, campaign or reproduction run keeps a lightweight audit
trail of which configuration was simulated and how many trials it cost.
"""

import csv
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict

FIELDNAMES = [
    "timestamp_utc",
    "command",
    "scheme",
    "k",
    "coded_bits",
    "blocks",
    "modulation_order",
    "list_size",
    "seed",
    "snr_points",
    "total_trials",
    "total_errors",
    "notes",
]


def append_run_log(cfg: Dict[str, Any], stats: Dict[str, Any]) -> Path:
    """Append a single run entry to the configured log file."""
    log_path = Path(cfg.get("RUN_LOG_PATH", "run_history.csv")).expanduser()
    log_path.parent.mkdir(parents=True, exist_ok=True)

    row = {
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "command": stats.get("command"),
        "scheme": cfg.get("SCHEME"),
        "k": cfg.get("K"),
        "coded_bits": cfg.get("CODED_BITS"),
        "blocks": cfg.get("BLOCKS"),
        "modulation_order": cfg.get("MODULATION_ORDER"),
        "list_size": cfg.get("LIST_SIZE"),
        "seed": cfg.get("SEED"),
        "snr_points": " ".join(f"{s:g}" for s in cfg.get("SNR_DB", [])),
        "total_trials": stats.get("total_trials", 0),
        "total_errors": stats.get("total_errors", 0),
        "notes": stats.get("notes", ""),
    }

    write_header = not log_path.exists()

    with log_path.open("a", newline="", encoding="utf-8") as logfile:
        writer = csv.DictWriter(logfile, fieldnames=FIELDNAMES)
        if write_header:
            writer.writeheader()
        writer.writerow(row)
    return log_path
