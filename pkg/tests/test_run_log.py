import sys
import csv
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.run_log import FIELDNAMES, append_run_log  # noqa: E402


def _cfg(path):
    return {
        "RUN_LOG_PATH": str(path),
        "SCHEME": "both",
        "K": 300,
        "CODED_BITS": 600,
        "BLOCKS": 1,
        "MODULATION_ORDER": 4,
        "LIST_SIZE": 8,
        "SEED": 0,
        "SNR_DB": [0.0, 1.5],
    }


def test_append_run_log_writes_header_once(tmp_path):
    path = tmp_path / "logs" / "history.csv"
    append_run_log(_cfg(path), {"command": "run", "total_trials": 10, "total_errors": 2})
    append_run_log(_cfg(path), {"command": "design", "notes": "report"})
    with path.open(encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert list(rows[0]) == FIELDNAMES
    assert [r["command"] for r in rows] == ["run", "design"]
    assert rows[0]["snr_points"] == "0 1.5"
    assert rows[0]["total_errors"] == "2" and rows[1]["total_trials"] == "0"
