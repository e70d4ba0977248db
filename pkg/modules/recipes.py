"""
Reproduction recipes: DEGA prediction against Monte Carlo, the gain of coded
pilots over the pilot-aided baseline, and the pilot/data rate ratio chosen by
the split optimiser. Each writes a CSV and a plain-text summary table.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from modules.campaign import (
    BlerPoint,
    ChunkMapper,
    CodedPilotLink,
    PilotAidedLink,
    crossing_snr,
    interpolate_crossing,
    run_point,
    select_pilot_length,
    sequential_mapper,
)
from modules.code_design import (
    design_best_split,
    design_pilot_aided_config,
    design_split_config,
    predict_split_bler,
)

RECIPES = ("fig3", "fig5", "fig6")
RECIPE_ALIASES = {"dega-vs-mc": "fig3", "pilot-gain": "fig5", "rate-ratio": "fig6"}
SCALES = ("desk", "full")
PILOT_CANDIDATES = (4, 8, 16, 32)


@dataclass
class MonteCarloSettings:
    seed: int = 0
    min_errors: int = 100
    max_trials: int = 20_000
    chunk_size: int = 250
    threads: int = 1
    chunk_mapper: ChunkMapper = sequential_mapper
    on_point: Optional[Callable[[BlerPoint], None]] = None

    def point(self, link, snr_db: float) -> BlerPoint:
        result = run_point(
            link, snr_db, self.seed, self.min_errors, self.max_trials, self.chunk_size, self.threads, self.chunk_mapper
        )
        if self.on_point is not None:
            self.on_point(result)
        return result

    def curve(self, link, snr_db: Sequence[float]) -> List[BlerPoint]:
        return [self.point(link, s) for s in snr_db]


@dataclass
class RecipeResult:
    name: str
    scale: str
    columns: Tuple[str, ...]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: List[str] = field(default_factory=list)

    def write(self, out_dir) -> Tuple[Path, Path]:
        folder = Path(out_dir).expanduser()
        folder.mkdir(parents=True, exist_ok=True)
        csv_path = folder / f"{self.name}-{self.scale}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(self.columns), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
        txt_path = folder / f"{self.name}-{self.scale}.txt"
        txt_path.write_text("\n".join(self.summary) + "\n", encoding="utf-8")
        return csv_path, txt_path


def resolve_recipe(name: str) -> str:
    """Canonical recipe name for ``name`` or one of its descriptive aliases."""
    canonical = RECIPE_ALIASES.get(name, name)
    if canonical not in RECIPES:
        raise ValueError(f"unknown recipe '{name}'; use one of {RECIPES + tuple(RECIPE_ALIASES)}")
    return canonical


def _check_scale(scale: str) -> bool:
    if scale not in SCALES:
        raise ValueError(f"unknown scale '{scale}'; use one of {SCALES}")
    return scale == "desk"


def whole_symbol_coded_bits(coded_bits: int, blocks: int, pilot_bits: int, modulation_order: int) -> int:
    """Largest total <= ``coded_bits`` whose data part fills whole symbols."""
    n_s = modulation_order.bit_length() - 1
    data_bits = coded_bits - blocks * pilot_bits
    return blocks * pilot_bits + n_s * (data_bits // n_s)


def _fmt(value: float, spec: str = ".2f") -> str:
    return "n/a" if math.isnan(value) or math.isinf(value) else format(value, spec)


def _offset_grid(centre: float, low: float, high: float, step: float) -> List[float]:
    return [round(centre + d, 4) for d in np.arange(low, high + step / 2, step)]


def dega_vs_mc(
    scale: str,
    mc: MonteCarloSettings,
    design_grid_db: Sequence[float],
    target_bler: float = 1e-2,
) -> RecipeResult:
    """B=1, M=600, M_1=32, SC decoding: predicted BLER next to measured BLER."""
    desk = _check_scale(scale)
    orders = (4,) if desk else (4, 16, 64)
    offsets = (-1.5, 1.0, 0.5) if desk else (-2.0, 1.5, 0.25)
    result = RecipeResult(
        "fig3",
        scale,
        ("modulation_order", "rate", "k", "coded_bits", "snr_db", "predicted_bler", "mc_bler", "trials", "block_errors"),
    )
    result.summary.append(f"target BLER {target_bler:g}; crossing SNR in dB")
    result.summary.append(f"{'order':>5} {'rate':>5} {'K':>4} {'DEGA':>7} {'MC':>7} {'gap':>6}")
    for order in orders:
        coded_bits = whole_symbol_coded_bits(600, 1, 32, order)
        for rate in (0.25, 0.5, 0.75):
            k = int(round(rate * coded_bits))
            design = design_split_config(k, coded_bits, 1, 32, order, target_bler, design_grid_db)
            link = CodedPilotLink(design.config, list_size=1)
            snrs = _offset_grid(design.design_snr_db, *offsets)
            predicted = [predict_split_bler(design.config, s)[1] for s in snrs]
            points = mc.curve(link, snrs)
            for snr, pred, point in zip(snrs, predicted, points):
                result.rows.append(
                    {
                        "modulation_order": order,
                        "rate": rate,
                        "k": k,
                        "coded_bits": coded_bits,
                        "snr_db": snr,
                        "predicted_bler": f"{pred:.6e}",
                        "mc_bler": f"{point.bler:.6e}",
                        "trials": point.trials,
                        "block_errors": point.block_errors,
                    }
                )
            dega_x = interpolate_crossing(snrs, predicted, target_bler)
            mc_x = crossing_snr(points, target_bler)
            result.summary.append(
                f"{order:>5} {rate:>5.2f} {k:>4} {_fmt(dega_x):>7} {_fmt(mc_x):>7} {_fmt(mc_x - dega_x, '+.2f'):>6}"
            )
    return result


def pilot_gain(
    scale: str,
    mc: MonteCarloSettings,
    design_grid_db: Sequence[float],
    target_bler: float = 1e-2,
    list_size: int = 8,
) -> RecipeResult:
    """B=3, M=720: optimised coded pilots against the optimised pilot-aided baseline."""
    desk = _check_scale(scale)
    orders, ks = ((16,), (360, 540)) if desk else ((4, 16, 64), (180, 360, 540))
    coded_bits, blocks = 720, 3
    result = RecipeResult(
        "fig5",
        scale,
        ("modulation_order", "k", "scheme", "pilot_symbols", "snr_db", "bler", "trials", "block_errors"),
    )
    result.summary.append(f"target BLER {target_bler:g}; crossing SNR in dB")
    result.summary.append(f"{'order':>5} {'K':>4} {'N_c':>4} {'N_p':>4} {'coded':>7} {'pilot':>7} {'gain':>6}")
    for order in orders:
        for k in ks:
            cp = design_best_split(k, coded_bits, blocks, PILOT_CANDIDATES, order, target_bler, design_grid_db)
            cp_link = CodedPilotLink(cp.config, list_size)

            def build(length: int, order=order, k=k) -> PilotAidedLink:
                design = design_pilot_aided_config(k, coded_bits, blocks, length, order, target_bler, design_grid_db)
                return PilotAidedLink(design.config, list_size)

            search = (cp.design_snr_db - 3.0, cp.design_snr_db + 8.0)
            n_p = select_pilot_length(
                PILOT_CANDIDATES,
                build,
                target_bler,
                search,
                mc.seed,
                mc.min_errors,
                mc.max_trials,
                chunk_size=mc.chunk_size,
                threads=mc.threads,
                chunk_mapper=mc.chunk_mapper,
            )
            pa_link = build(n_p)
            pa_design_snr = design_pilot_aided_config(
                k, coded_bits, blocks, n_p, order, target_bler, design_grid_db
            ).design_snr_db
            lo = min(cp.design_snr_db, pa_design_snr) - 1.5
            hi = max(cp.design_snr_db, pa_design_snr) + 1.0
            snrs = _offset_grid(lo, 0.0, hi - lo, 0.5)
            cp_points = mc.curve(cp_link, snrs)
            pa_points = mc.curve(pa_link, snrs)
            for scheme, pilot_symbols, points in (
                ("coded-pilot", cp.config.pilot_symbols[0], cp_points),
                ("pilot-aided", n_p, pa_points),
            ):
                for point in points:
                    result.rows.append(
                        {
                            "modulation_order": order,
                            "k": k,
                            "scheme": scheme,
                            "pilot_symbols": pilot_symbols,
                            "snr_db": point.snr_db,
                            "bler": f"{point.bler:.6e}",
                            "trials": point.trials,
                            "block_errors": point.block_errors,
                        }
                    )
            cp_x, pa_x = crossing_snr(cp_points, target_bler), crossing_snr(pa_points, target_bler)
            result.summary.append(
                f"{order:>5} {k:>4} {cp.config.pilot_symbols[0]:>4} {n_p:>4} "
                f"{_fmt(cp_x):>7} {_fmt(pa_x):>7} {_fmt(pa_x - cp_x, '+.2f'):>6}"
            )
    return result


def _rate_ratio_panels(desk: bool) -> List[Tuple[str, str, Sequence[int]]]:
    if desk:
        return [
            ("coded_bits", "decreasing", (100, 200, 400, 600, 800, 1000)),
            ("pilot_bits", "increasing", (16, 32, 64, 128)),
            ("modulation_order", "increasing", (4, 16, 64)),
        ]
    return [
        ("coded_bits", "decreasing", tuple(range(100, 1001, 100))),
        ("pilot_bits", "increasing", (8, 16, 32, 48, 64, 96, 128, 160)),
        ("modulation_order", "increasing", (4, 16, 64)),
    ]


def _panel_setting(panel: str, value: int) -> Tuple[int, int, int, int]:
    """(coded bits, pilot bits, K, modulation order) for one panel point."""
    if panel == "coded_bits":
        return value, 32, value // 2, 4
    if panel == "pilot_bits":
        return 600, value, 300, 4
    return 600, 32, 150, value


def is_monotone(values: Sequence[float], trend: str) -> bool:
    diffs = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(diffs <= 0)) if trend == "decreasing" else bool(np.all(diffs >= 0))


def rate_ratio(
    scale: str,
    design_grid_db: Sequence[float],
    target_bler: float = 1e-2,
    crc_policy: str = "aggregate-on-0",
) -> RecipeResult:
    """R_1/R_0 of the optimised split (post-CRC component rates), DEGA only."""
    desk = _check_scale(scale)
    result = RecipeResult(
        "fig6",
        scale,
        (
            "panel",
            "value",
            "coded_bits",
            "pilot_bits",
            "k",
            "modulation_order",
            "k0",
            "k1",
            "design_snr_db",
            "predicted_bler",
            "ratio",
        ),
    )
    for panel, trend, values in _rate_ratio_panels(desk):
        ratios = []
        for value in values:
            coded_bits, pilot_bits, k, order = _panel_setting(panel, value)
            coded_bits = whole_symbol_coded_bits(coded_bits, 1, pilot_bits, order)
            design = design_split_config(k, coded_bits, 1, pilot_bits, order, target_bler, design_grid_db, crc_policy)
            cfg = design.config
            payloads, lengths = cfg.payload_lengths, cfg.coded_lengths
            ratio = (payloads[1] / lengths[1]) / (payloads[0] / lengths[0])
            ratios.append(ratio)
            result.rows.append(
                {
                    "panel": panel,
                    "value": value,
                    "coded_bits": coded_bits,
                    "pilot_bits": pilot_bits,
                    "k": k,
                    "modulation_order": order,
                    "k0": cfg.info_bits[0],
                    "k1": cfg.info_bits[1],
                    "design_snr_db": design.design_snr_db,
                    "predicted_bler": f"{design.predicted_bler:.6e}",
                    "ratio": f"{ratio:.6f}",
                }
            )
        observed = "yes" if is_monotone(ratios, trend) else "no"
        result.summary.append(
            f"{panel:<16} expected {trend:<10} monotone={observed:<3} "
            + " ".join(f"{v}:{r:.3f}" for v, r in zip(values, ratios))
        )
    return result
