"""
Monte Carlo BLER campaigns for the coded-pilot scheme and the pilot-aided
baseline.

Trials are keyed by (seed, trial index) and grouped into fixed-size chunks.
Chunks are evaluated in waves through a pluggable ``chunk_mapper``; the
stopping rule is then applied by an ordered scan over trial outcomes, so the
result is the same whether chunks run sequentially or in a thread pool.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from modules.fading_channel import (
    Stream,
    sample_channel,
    snr_db_to_noise_variance,
    transmit,
    trial_rng,
)
from modules.hybrid_rx import hybrid_decode, pilot_aided_decode
from modules.split_tx import (
    PilotAidedConfig,
    SplitConfig,
    encode_packet,
    pilot_aided_encode,
    validate_pilot_aided_config,
    validate_split_config,
)

DEFAULT_CHUNK_SIZE = 250
DEFAULT_MIN_ERRORS = 100
DEFAULT_MAX_TRIALS = 1_000_000

CSV_COLUMNS = (
    "scheme",
    "snr_db",
    "trials",
    "block_errors",
    "bler",
    "wilson_ci_low",
    "wilson_ci_high",
    "seed",
    "detected_errors",
    "undetected_errors",
)

ChunkMapper = Callable[[Callable[[int], "ChunkResult"], Sequence[int]], Iterable["ChunkResult"]]


def sequential_mapper(job: Callable[[int], "ChunkResult"], chunks: Sequence[int]) -> List["ChunkResult"]:
    return [job(c) for c in chunks]


class CodedPilotLink:
    """Encoder, channel and hybrid receiver for one SplitConfig."""

    scheme = "coded-pilot"

    def __init__(
        self,
        cfg: SplitConfig,
        list_size: int,
        channel_model: str = "unit-phase",
        recovery: str = "algebraic",
        genie: bool = False,
    ) -> None:
        validate_split_config(cfg)
        if list_size < 1:
            raise ValueError(f"list_size must be >= 1, got {list_size}")
        self.cfg = cfg
        self.list_size = int(list_size)
        self.channel_model = channel_model
        self.recovery = recovery
        self.genie = genie
        if genie:
            self.scheme = "coded-pilot-genie"

    @property
    def K(self) -> int:
        return self.cfg.K

    def run_trial(self, seed: int, trial: int, sigma2: float) -> Tuple[bool, bool]:
        """Return (block error, detected by CRC).

        A failed CRC in any stage is a block error even when the decoded
        message happens to be right.
        """
        message = trial_rng(seed, trial, Stream.MESSAGE).integers(0, 2, size=self.K, dtype=np.uint8)
        x = encode_packet(message, self.cfg)
        realization = sample_channel(
            self.cfg.blocks,
            trial_rng(seed, trial, Stream.CHANNEL),
            self.channel_model,
            sigma2,
            self.cfg.layout.block_lengths,
        )
        y = transmit(x, realization, trial_rng(seed, trial, Stream.NOISE))
        genie_channel = realization.coefficients if self.genie else None
        result = hybrid_decode(y, self.cfg, sigma2, self.list_size, genie_channel, self.recovery)
        detected = not result.crc_ok
        return detected or not np.array_equal(result.message, message), detected


class PilotAidedLink:
    """Encoder, channel and coherent receiver for one PilotAidedConfig."""

    scheme = "pilot-aided"

    def __init__(
        self,
        cfg: PilotAidedConfig,
        list_size: int,
        channel_model: str = "unit-phase",
        genie: bool = False,
    ) -> None:
        validate_pilot_aided_config(cfg)
        if list_size < 1:
            raise ValueError(f"list_size must be >= 1, got {list_size}")
        self.cfg = cfg
        self.list_size = int(list_size)
        self.channel_model = channel_model
        self.genie = genie
        if genie:
            self.scheme = "pilot-aided-genie"

    @property
    def K(self) -> int:
        return self.cfg.K

    def run_trial(self, seed: int, trial: int, sigma2: float) -> Tuple[bool, bool]:
        message = trial_rng(seed, trial, Stream.MESSAGE).integers(0, 2, size=self.K, dtype=np.uint8)
        x = pilot_aided_encode(message, self.cfg)
        realization = sample_channel(
            self.cfg.blocks,
            trial_rng(seed, trial, Stream.CHANNEL),
            self.channel_model,
            sigma2,
            self.cfg.layout.block_lengths,
        )
        y = transmit(x, realization, trial_rng(seed, trial, Stream.NOISE))
        genie_channel = realization.coefficients if self.genie else None
        decoded, crc_ok = pilot_aided_decode(y, self.cfg, sigma2, self.list_size, genie_channel)
        detected = not crc_ok
        return detected or not np.array_equal(decoded, message), detected


@dataclass(frozen=True, eq=False)
class ChunkResult:
    chunk: int
    errors: np.ndarray  # bool per trial, trial order
    detected: np.ndarray


def run_chunk(link, seed: int, sigma2: float, chunk_size: int, max_trials: int, chunk: int) -> ChunkResult:
    first = chunk * chunk_size
    last = min(first + chunk_size, max_trials)
    outcomes = [link.run_trial(seed, t, sigma2) for t in range(first, last)]
    errors = np.array([o[0] for o in outcomes], dtype=bool)
    detected = np.array([o[1] for o in outcomes], dtype=bool)
    return ChunkResult(chunk, errors, detected)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion; always brackets errors/trials."""
    if trials <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


@dataclass(frozen=True)
class BlerPoint:
    scheme: str
    snr_db: float
    trials: int
    block_errors: int
    detected_errors: int
    seed: int

    @property
    def undetected_errors(self) -> int:
        return self.block_errors - self.detected_errors

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials if self.trials else 0.0

    def as_row(self) -> Dict[str, str]:
        low, high = wilson_interval(self.block_errors, self.trials)
        return {
            "scheme": self.scheme,
            "snr_db": f"{self.snr_db:g}",
            "trials": str(self.trials),
            "block_errors": str(self.block_errors),
            "bler": f"{self.bler:.6e}",
            "wilson_ci_low": f"{low:.6e}",
            "wilson_ci_high": f"{high:.6e}",
            "seed": str(self.seed),
            "detected_errors": str(self.detected_errors),
            "undetected_errors": str(self.undetected_errors),
        }


@dataclass
class BlerCurve:
    points: List[BlerPoint] = field(default_factory=list)

    def for_scheme(self, scheme: str) -> List[BlerPoint]:
        return [p for p in self.points if p.scheme == scheme]

    def write_csv(self, path) -> Path:
        out = Path(path).expanduser()
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
            writer.writeheader()
            for point in self.points:
                writer.writerow(point.as_row())
        return out


def run_point(
    link,
    snr_db: float,
    seed: int,
    min_errors: int = DEFAULT_MIN_ERRORS,
    max_trials: int = DEFAULT_MAX_TRIALS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    chunk_mapper: ChunkMapper = sequential_mapper,
) -> BlerPoint:
    """Run trials 0, 1, 2, ... until ``min_errors`` block errors or ``max_trials``."""
    if min_errors < 1 or max_trials < min_errors:
        raise ValueError(f"need 1 <= min_errors <= max_trials, got {min_errors} and {max_trials}")
    if chunk_size < 1 or threads < 1:
        raise ValueError("chunk_size and threads must be >= 1")
    sigma2 = snr_db_to_noise_variance(snr_db)
    job = partial(run_chunk, link, seed, sigma2, chunk_size, max_trials)
    n_chunks = math.ceil(max_trials / chunk_size)

    trials = errors = detected = 0
    start = 0
    while start < n_chunks:
        wave = list(range(start, min(start + threads, n_chunks)))
        for result in sorted(chunk_mapper(job, wave), key=lambda r: r.chunk):
            for err, det in zip(result.errors, result.detected):
                trials += 1
                errors += int(err)
                detected += int(det)
                if errors >= min_errors:
                    return BlerPoint(link.scheme, float(snr_db), trials, errors, detected, seed)
        start = wave[-1] + 1
    return BlerPoint(link.scheme, float(snr_db), trials, errors, detected, seed)


def run_campaign(
    links: Sequence,
    snr_db: Sequence[float],
    seed: int,
    min_errors: int = DEFAULT_MIN_ERRORS,
    max_trials: int = DEFAULT_MAX_TRIALS,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    chunk_mapper: ChunkMapper = sequential_mapper,
    on_point: Optional[Callable[[BlerPoint], None]] = None,
) -> BlerCurve:
    """Every link at every SNR with common random numbers across both."""
    if not snr_db:
        raise ValueError("snr list must be non-empty")
    curve = BlerCurve()
    for link in links:
        for snr in snr_db:
            point = run_point(link, snr, seed, min_errors, max_trials, chunk_size, threads, chunk_mapper)
            curve.points.append(point)
            if on_point is not None:
                on_point(point)
    return curve


def interpolate_crossing(snr_db: Sequence[float], bler: Sequence[float], target: float) -> float:
    """SNR where BLER first falls to ``target``, log-linear between grid points.

    Returns nan when no point reaches the target and the first grid SNR when
    the first point already does. A zero-error point is interpolated linearly.
    """
    pairs = sorted(zip(snr_db, bler))
    for i, (snr, value) in enumerate(pairs):
        if value > target:
            continue
        if i == 0:
            return float(snr)
        prev_snr, prev_value = pairs[i - 1]
        if value > 0:
            lo, hi = math.log(prev_value), math.log(value)
            frac = (lo - math.log(target)) / (lo - hi)
        else:
            frac = (prev_value - target) / prev_value
        return float(prev_snr + frac * (snr - prev_snr))
    return math.nan


def crossing_snr(points: Sequence[BlerPoint], target: float) -> float:
    return interpolate_crossing([p.snr_db for p in points], [p.bler for p in points], target)


def required_snr(
    link,
    target_bler: float,
    snr_range_db: Tuple[float, float],
    seed: int,
    min_errors: int,
    max_trials: int,
    iterations: int = 6,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    chunk_mapper: ChunkMapper = sequential_mapper,
) -> float:
    """Coarse bisection for the smallest SNR whose measured BLER <= target."""
    lo, hi = float(snr_range_db[0]), float(snr_range_db[1])

    def meets(snr: float) -> bool:
        point = run_point(link, snr, seed, min_errors, max_trials, chunk_size, threads, chunk_mapper)
        return point.bler <= target_bler

    if meets(lo):
        return lo
    if not meets(hi):
        return math.inf
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


def select_pilot_length(
    candidates: Sequence[int],
    build_link: Callable[[int], object],
    target_bler: float,
    snr_range_db: Tuple[float, float],
    seed: int,
    min_errors: int,
    max_trials: int,
    iterations: int = 6,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    chunk_mapper: ChunkMapper = sequential_mapper,
) -> int:
    """Candidate pilot length with the lowest required SNR; ties go to the shortest."""
    ordered = sorted(set(int(c) for c in candidates))
    if not ordered:
        raise ValueError("pilot length candidates must be non-empty")
    if len(ordered) == 1:
        return ordered[0]
    best, best_snr = None, math.inf
    for length in ordered:
        try:
            link = build_link(length)
        except ValueError:
            continue
        snr = required_snr(
            link, target_bler, snr_range_db, seed, min_errors, max_trials, iterations, chunk_size, threads, chunk_mapper
        )
        if best is None or snr < best_snr:
            best, best_snr = length, snr
    if best is None:
        raise ValueError(f"no feasible pilot length among {ordered}")
    return best
