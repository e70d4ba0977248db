"""Prefect coded-pilot link simulator flow orchestrator.

This file only coordinates tasks imported from modules:
- config.get_config
- design_tasks.*
- campaign_tasks.*
- validation_tasks.*
- recipes.*
"""

from typing import Any, Dict, Optional

from prefect import flow, get_run_logger
from prefect.task_runners import ThreadPoolTaskRunner

from modules.campaign import BlerPoint
from modules.campaign_tasks import (
    build_links,
    choose_pilot_length,
    prefect_chunk_mapper,
    run_bler_campaign,
    write_bler_csv,
)
from modules.config import design_snr_grid, get_config
from modules.design_tasks import (
    design_coded_pilot,
    design_pilot_aided,
    load_design_report,
    write_design_report,
)
from modules.recipes import (
    RECIPE_ALIASES,
    RECIPES,
    SCALES,
    MonteCarloSettings,
    dega_vs_mc,
    pilot_gain,
    rate_ratio,
    resolve_recipe,
)
from modules.run_log import append_run_log
from modules.validation_tasks import (
    selftest_dega,
    selftest_estimators,
    selftest_roundtrip,
    selftest_rotation,
    validate_curve,
)

DEFAULT_DESIGN_PATH = "results/design.json"
DEFAULT_RECIPE_DIR = "results"

# scale -> (min errors, max trials) per Monte Carlo point
RECIPE_LIMITS = {"desk": (200, 20_000), "full": (100, 1_000_000)}


def _designs(cfg: Dict[str, Any]):
    coded_pilot = pilot_aided = None
    if cfg["SCHEME"] in ("coded-pilot", "both"):
        coded_pilot = design_coded_pilot(cfg)
    if cfg["SCHEME"] in ("pilot-aided", "both"):
        pilot_aided = design_pilot_aided(cfg, choose_pilot_length(cfg))
    return coded_pilot, pilot_aided


@flow(name="CodedPilot-Design")
def design_flow(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> str:
    logger = get_run_logger()
    cfg = get_config(config_path, **(overrides or {}))
    coded_pilot, pilot_aided = _designs(cfg)
    out = write_design_report(cfg["DESIGN_PATH"] or DEFAULT_DESIGN_PATH, coded_pilot, pilot_aided)
    logger.info("Summary → scheme=%s, K=%s, M=%s, report=%s", cfg["SCHEME"], cfg["K"], cfg["CODED_BITS"], out)
    append_run_log(cfg, {"command": "design", "notes": f"report {out}"})
    return str(out)


@flow(name="CodedPilot-Campaign")
def campaign_flow(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    logger = get_run_logger()
    cfg = get_config(config_path, **(overrides or {}))

    # 1. Codes: saved report or fresh design
    if cfg["DESIGN_PATH"]:
        configs = load_design_report(cfg["DESIGN_PATH"])
    else:
        coded_pilot, pilot_aided = _designs(cfg)
        configs = {}
        if coded_pilot is not None:
            configs["coded-pilot"] = coded_pilot.config
        if pilot_aided is not None:
            configs["pilot-aided"] = pilot_aided.config
    links = build_links(cfg, configs)
    if not links:
        logger.warning("No designs for scheme '%s'; nothing to simulate.", cfg["SCHEME"])
        return {"points": 0}

    # 2. Monte Carlo
    curve = run_bler_campaign(cfg, links)
    out = write_bler_csv(curve, cfg["OUTPUT"])

    # 3. Sanity
    validation = validate_curve(curve, cfg)

    total_trials = sum(p.trials for p in curve.points)
    total_errors = sum(p.block_errors for p in curve.points)
    logger.info(
        "Summary → points=%s, trials=%s, errors=%s, csv=%s, status=%s",
        len(curve.points),
        total_trials,
        total_errors,
        out,
        validation["validation"]["status"],
    )
    append_run_log(
        cfg,
        {
            "command": "run",
            "total_trials": total_trials,
            "total_errors": total_errors,
            "notes": f"validation {validation['validation']['status']}",
        },
    )
    return {"points": len(curve.points), "csv": str(out), **validation}


@flow(name="CodedPilot-Reproduce")
def reproduce_flow(
    recipe: str,
    scale: str = "desk",
    out_dir: str = DEFAULT_RECIPE_DIR,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    logger = get_run_logger()
    recipe = resolve_recipe(recipe)
    if scale not in SCALES:
        raise ValueError(f"unknown scale '{scale}'; use one of {SCALES}")
    cfg = get_config(config_path, **(overrides or {}))
    grid = design_snr_grid(cfg)
    min_errors, max_trials = RECIPE_LIMITS[scale]
    totals = {"trials": 0, "errors": 0}

    def report(point: BlerPoint) -> None:
        totals["trials"] += point.trials
        totals["errors"] += point.block_errors
        logger.info(
            "%s point → scheme=%s, snr=%.2f dB, trials=%s, errors=%s, bler=%.3e",
            recipe,
            point.scheme,
            point.snr_db,
            point.trials,
            point.block_errors,
            point.bler,
        )

    mc = MonteCarloSettings(
        seed=cfg["SEED"],
        min_errors=min_errors,
        max_trials=max_trials,
        chunk_size=cfg["CHUNK_SIZE"],
        threads=cfg["THREADS"],
        chunk_mapper=prefect_chunk_mapper,
        on_point=report,
    )
    logger.info("Reproduce → recipe=%s, scale=%s, seed=%s, threads=%s", recipe, scale, cfg["SEED"], cfg["THREADS"])
    if recipe == "fig3":
        result = dega_vs_mc(scale, mc, grid, cfg["TARGET_BLER"])
    elif recipe == "fig5":
        result = pilot_gain(scale, mc, grid, cfg["TARGET_BLER"], cfg["LIST_SIZE"])
    else:
        result = rate_ratio(scale, grid, cfg["TARGET_BLER"])
    csv_path, txt_path = result.write(out_dir)
    for line in result.summary:
        logger.info("%s", line)
    logger.info("Summary → rows=%s, csv=%s, table=%s", len(result.rows), csv_path, txt_path)
    append_run_log(
        cfg,
        {
            "command": f"reproduce {recipe} --scale {scale}",
            "total_trials": totals["trials"],
            "total_errors": totals["errors"],
            "notes": str(csv_path),
        },
    )
    return {"csv": str(csv_path), "summary": str(txt_path), "rows": len(result.rows)}


@flow(name="CodedPilot-Selftest")
def selftest_flow(trials: int = 20, seed: int = 0) -> Dict[str, Any]:
    logger = get_run_logger()
    suites = [
        selftest_roundtrip(trials=trials, seed=seed),
        selftest_rotation(seed=seed),
        selftest_estimators(seed=seed),
        selftest_dega(),
    ]
    status = "OK" if all(s["status"] == "OK" for s in suites) else "ALERT"
    logger.info("Selftest summary → %s, status=%s", {s["suite"]: s["status"] for s in suites}, status)
    return {"suites": suites, "status": status}


def _threaded(flow_fn, threads: Optional[int]):
    if threads is None:
        return flow_fn
    return flow_fn.with_options(task_runner=ThreadPoolTaskRunner(max_workers=threads))


if __name__ == "__main__":
    import argparse

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", type=str, default=None, help="JSON campaign file")
    common.add_argument("--seed", dest="seed", type=int, default=None)
    common.add_argument("--snr", dest="snr_db", type=str, default=None, help="list 0,1,2 or range start:stop:step")
    common.add_argument("--out", dest="out", type=str, default=None)
    common.add_argument("--threads", dest="threads", type=int, default=None)
    common.add_argument("--list-size", dest="list_size", type=int, default=None)
    common.add_argument("--target-bler", dest="target_bler", type=float, default=None)

    parser = argparse.ArgumentParser(description="Run coded-pilot polar link simulator flows")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("design", parents=[common], help="optimise the split and write the design JSON")
    commands.add_parser("run", parents=[common], help="BLER campaign from a config")
    reproduce = commands.add_parser("reproduce", parents=[common], help="run a named reproduction recipe")
    reproduce.add_argument(
        "recipe",
        choices=RECIPES + tuple(RECIPE_ALIASES),
        help="fig3 (alias dega-vs-mc), fig5 (pilot-gain) or fig6 (rate-ratio)",
    )
    reproduce.add_argument("--scale", dest="scale", choices=SCALES, default="desk")
    selftest = commands.add_parser("selftest", parents=[common], help="property suites at small scale")
    selftest.add_argument("--trials", dest="trials", type=int, default=20)
    args = parser.parse_args()

    overrides = {
        "seed": args.seed,
        "snr_db": args.snr_db,
        "threads": args.threads,
        "list_size": args.list_size,
        "target_bler": args.target_bler,
    }
    if args.command == "design":
        _threaded(design_flow, args.threads)(args.config_path, {**overrides, "design": args.out})
    elif args.command == "run":
        _threaded(campaign_flow, args.threads)(args.config_path, {**overrides, "output": args.out})
    elif args.command == "reproduce":
        _threaded(reproduce_flow, args.threads)(
            args.recipe, args.scale, args.out or DEFAULT_RECIPE_DIR, args.config_path, overrides
        )
    else:
        _threaded(selftest_flow, args.threads)(trials=args.trials, seed=args.seed or 0)
