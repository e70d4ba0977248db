import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from prefect import task, get_run_logger
from prefect.cache_policies import NO_CACHE

from modules.code_design import (
    PilotAidedDesign,
    SplitDesign,
    config_from_report,
    design_best_split,
    design_pilot_aided_config,
    design_report,
    design_split_config,
    pilot_aided_report,
)
from modules.config import design_snr_grid
from modules.split_tx import effective_rate, pilot_aided_rate


@task(cache_policy=NO_CACHE)
def evaluate_design_point(job: Callable[[float], Any], snr_db: float) -> Any:
    return job(snr_db)


def prefect_grid_mapper(job: Callable[[float], Any], snr_points: Sequence[float]) -> List[Any]:
    """One task per design SNR point; results gathered in grid order."""
    futures = [evaluate_design_point.submit(job, snr) for snr in snr_points]
    return [future.result() for future in futures]


@task
def design_coded_pilot(cfg: Dict[str, Any]) -> SplitDesign:
    logger = get_run_logger()
    grid = design_snr_grid(cfg)
    if cfg["PILOT_BITS"] is not None:
        design = design_split_config(
            cfg["K"],
            cfg["CODED_BITS"],
            cfg["BLOCKS"],
            cfg["PILOT_BITS"],
            cfg["MODULATION_ORDER"],
            cfg["TARGET_BLER"],
            grid,
            cfg["CRC_POLICY"],
            cfg["THREADS"],
            prefect_grid_mapper,
        )
    else:
        design = design_best_split(
            cfg["K"],
            cfg["CODED_BITS"],
            cfg["BLOCKS"],
            cfg["PILOT_LENGTH_CANDIDATES"],
            cfg["MODULATION_ORDER"],
            cfg["TARGET_BLER"],
            grid,
            cfg["CRC_POLICY"],
            cfg["THREADS"],
            prefect_grid_mapper,
        )
    split = design.config
    logger.info(
        "Coded-pilot design → split=%s, pilot_symbols=%s, design_snr=%.2f dB, predicted=%.3e, rate=%.4f",
        split.info_bits,
        split.pilot_symbols,
        design.design_snr_db,
        design.predicted_bler,
        effective_rate(split),
    )
    if design.unmet_target:
        logger.warning(
            "No design SNR up to %.2f dB meets target %.1e; keeping the best found.",
            grid[-1],
            cfg["TARGET_BLER"],
        )
    return design


@task
def design_pilot_aided(cfg: Dict[str, Any], pilot_length: int) -> PilotAidedDesign:
    logger = get_run_logger()
    design = design_pilot_aided_config(
        cfg["K"],
        cfg["CODED_BITS"],
        cfg["BLOCKS"],
        pilot_length,
        cfg["MODULATION_ORDER"],
        cfg["TARGET_BLER"],
        design_snr_grid(cfg),
    )
    logger.info(
        "Pilot-aided design → N_p=%s, design_snr=%.2f dB, predicted=%.3e, rate=%.4f",
        pilot_length,
        design.design_snr_db,
        design.predicted_bler,
        pilot_aided_rate(design.config),
    )
    return design


@task
def write_design_report(
    path: str,
    coded_pilot: Optional[SplitDesign] = None,
    pilot_aided: Optional[PilotAidedDesign] = None,
) -> Path:
    logger = get_run_logger()
    designs: List[Dict[str, Any]] = []
    if coded_pilot is not None:
        designs.append(design_report(coded_pilot))
    if pilot_aided is not None:
        designs.append(pilot_aided_report(pilot_aided))
    out = Path(path).expanduser()
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"designs": designs}, indent=2) + "\n", encoding="utf-8")
    logger.info("Design report → %s (%s designs)", out, len(designs))
    return out


@task
def load_design_report(path: str) -> Dict[str, Any]:
    """Scheme name -> SplitConfig / PilotAidedConfig from a saved report."""
    logger = get_run_logger()
    raw = json.loads(Path(path).expanduser().read_text(encoding="utf-8"))
    configs = {entry["scheme"]: config_from_report(entry) for entry in raw.get("designs", [])}
    logger.info("Loaded designs for %s from %s", sorted(configs), path)
    return configs
