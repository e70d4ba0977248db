from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

from prefect import task, get_run_logger
from prefect.cache_policies import NO_CACHE

from modules.campaign import (
    BlerCurve,
    BlerPoint,
    ChunkResult,
    CodedPilotLink,
    PilotAidedLink,
    run_campaign,
    select_pilot_length,
)
from modules.code_design import design_pilot_aided_config
from modules.config import design_snr_grid


@task(cache_policy=NO_CACHE)
def simulate_chunk(job: Callable[[int], ChunkResult], chunk: int) -> ChunkResult:
    return job(chunk)


def prefect_chunk_mapper(job: Callable[[int], ChunkResult], chunks: Sequence[int]) -> List[ChunkResult]:
    """Submit one task per chunk to the flow's task runner and gather in order."""
    futures = [simulate_chunk.submit(job, chunk) for chunk in chunks]
    return [future.result() for future in futures]


def build_links(cfg: Dict[str, Any], configs: Dict[str, Any]) -> List[Any]:
    links: List[Any] = []
    if "coded-pilot" in configs:
        links.append(
            CodedPilotLink(
                configs["coded-pilot"],
                cfg["LIST_SIZE"],
                cfg["CHANNEL_MODEL"],
                cfg["RECOVERY"],
                genie=cfg["GENIE"],
            )
        )
    if "pilot-aided" in configs:
        links.append(
            PilotAidedLink(configs["pilot-aided"], cfg["LIST_SIZE"], cfg["CHANNEL_MODEL"], genie=cfg["GENIE"])
        )
    return links


def run_bler_campaign(cfg: Dict[str, Any], links: Sequence[Any]) -> BlerCurve:
    logger = get_run_logger()

    def report(point: BlerPoint) -> None:
        logger.info(
            "BLER point → scheme=%s, snr=%.2f dB, trials=%s, errors=%s (detected=%s), bler=%.3e",
            point.scheme,
            point.snr_db,
            point.trials,
            point.block_errors,
            point.detected_errors,
            point.bler,
        )

    logger.info(
        "Campaign → %s links, %s SNR points, seed=%s, threads=%s",
        len(links),
        len(cfg["SNR_DB"]),
        cfg["SEED"],
        cfg["THREADS"],
    )
    return run_campaign(
        links,
        cfg["SNR_DB"],
        cfg["SEED"],
        cfg["MIN_ERRORS"],
        cfg["MAX_TRIALS"],
        cfg["CHUNK_SIZE"],
        cfg["THREADS"],
        prefect_chunk_mapper,
        report,
    )


def choose_pilot_length(cfg: Dict[str, Any]) -> int:
    """Monte Carlo pilot-length selection for the pilot-aided baseline."""
    logger = get_run_logger()
    if cfg["PILOT_LENGTH"] is not None:
        return cfg["PILOT_LENGTH"]
    grid = design_snr_grid(cfg)

    def build(length: int) -> PilotAidedLink:
        design = design_pilot_aided_config(
            cfg["K"], cfg["CODED_BITS"], cfg["BLOCKS"], length, cfg["MODULATION_ORDER"], cfg["TARGET_BLER"], grid
        )
        return PilotAidedLink(design.config, cfg["LIST_SIZE"], cfg["CHANNEL_MODEL"])

    chosen = select_pilot_length(
        cfg["PILOT_LENGTH_CANDIDATES"],
        build,
        cfg["TARGET_BLER"],
        (grid[0], grid[-1]),
        cfg["SEED"],
        cfg["MIN_ERRORS"],
        cfg["MAX_TRIALS"],
        chunk_size=cfg["CHUNK_SIZE"],
        threads=cfg["THREADS"],
        chunk_mapper=prefect_chunk_mapper,
    )
    logger.info("Pilot length selected → N_p=%s from %s", chosen, cfg["PILOT_LENGTH_CANDIDATES"])
    return chosen


@task
def write_bler_csv(curve: BlerCurve, path: str) -> Path:
    logger = get_run_logger()
    out = curve.write_csv(path)
    logger.info("BLER curve → %s (%s rows)", out, len(curve.points))
    return out
