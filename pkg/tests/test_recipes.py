import sys
import csv
import pathlib

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.campaign import interpolate_crossing  # noqa: E402
from modules.recipes import (  # noqa: E402
    MonteCarloSettings,
    RecipeResult,
    dega_vs_mc,
    is_monotone,
    pilot_gain,
    RECIPES,
    rate_ratio,
    resolve_recipe,
    whole_symbol_coded_bits,
)

DESIGN_GRID = [round(float(s), 6) for s in np.arange(-5.0, 25.01, 0.25)]


def _crossing(rows, x_key, y_key, target=1e-2):
    return interpolate_crossing([float(r[x_key]) for r in rows], [float(r[y_key]) for r in rows], target)


def test_whole_symbol_coded_bits_trims_only_when_needed():
    assert whole_symbol_coded_bits(600, 1, 32, 4) == 600
    assert whole_symbol_coded_bits(600, 1, 32, 16) == 600
    assert whole_symbol_coded_bits(600, 1, 32, 64) == 596
    assert whole_symbol_coded_bits(720, 3, 32, 64) == 720


def test_is_monotone():
    assert is_monotone([3, 2, 2, 1], "decreasing")
    assert not is_monotone([3, 4, 1], "decreasing")
    assert is_monotone([0.1, 0.2, 0.4], "increasing")


def test_recipe_result_writes_csv_and_table(tmp_path):
    result = RecipeResult("demo", "desk", ("a", "b"), [{"a": 1, "b": "x"}], ["line one", "line two"])
    csv_path, txt_path = result.write(tmp_path / "out")
    assert csv_path.name == "demo-desk.csv"
    assert csv_path.read_text(encoding="utf-8") == "a,b\n1,x\n"
    assert txt_path.read_text(encoding="utf-8") == "line one\nline two\n"


def test_recipe_names_and_aliases_resolve():
    assert RECIPES == ("fig3", "fig5", "fig6")
    assert [resolve_recipe(n) for n in RECIPES] == list(RECIPES)
    assert resolve_recipe("dega-vs-mc") == "fig3"
    assert resolve_recipe("pilot-gain") == "fig5"
    assert resolve_recipe("rate-ratio") == "fig6"
    with pytest.raises(ValueError):
        resolve_recipe("fig4")


def test_unknown_scale_is_rejected():
    with pytest.raises(ValueError):
        rate_ratio("huge", DESIGN_GRID)


@pytest.mark.slow
def test_rate_ratio_trends_desk():
    result = rate_ratio("desk", DESIGN_GRID)
    assert result.name == "fig6"
    assert len(result.summary) == 3
    assert all("monotone=yes" in line for line in result.summary)
    order_rows = [r for r in result.rows if r["panel"] == "modulation_order"]
    assert [r["coded_bits"] for r in order_rows] == [600, 600, 596]
    sweep = [r["value"] for r in result.rows if r["panel"] == "coded_bits"]
    assert sweep[0] == 100 and sweep[-1] == 1000


@pytest.mark.slow
def test_dega_matches_monte_carlo_at_half_rate(tmp_path):
    mc = MonteCarloSettings(seed=1, min_errors=200, max_trials=20_000)
    result = dega_vs_mc("desk", mc, DESIGN_GRID)
    result.write(tmp_path)
    rows = [r for r in result.rows if r["rate"] == 0.5]
    assert abs(_crossing(rows, "snr_db", "mc_bler") - _crossing(rows, "snr_db", "predicted_bler")) <= 0.75


@pytest.mark.slow
def test_coded_pilots_beat_the_pilot_aided_baseline(tmp_path):
    mc = MonteCarloSettings(seed=2, min_errors=200, max_trials=20_000)
    result = pilot_gain("desk", mc, DESIGN_GRID)
    csv_path, _ = result.write(tmp_path)
    with csv_path.open(encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    for k in ("360", "540"):
        coded = [r for r in rows if r["k"] == k and r["scheme"] == "coded-pilot"]
        baseline = [r for r in rows if r["k"] == k and r["scheme"] == "pilot-aided"]
        assert _crossing(baseline, "snr_db", "bler") - _crossing(coded, "snr_db", "bler") >= 0.8
