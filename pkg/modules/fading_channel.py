"""
Block-fading channel y_b = h_b x_b + v_b with counter-based randomness.

Every random draw of a trial comes from a Philox generator keyed by
(seed, trial, stream), so results never depend on the order in which
trials run.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np

CHANNEL_MODELS = ("unit-phase", "rayleigh")


class Stream(IntEnum):
    MESSAGE = 0
    CHANNEL = 1
    NOISE = 2


def trial_rng(seed: int, trial: int, stream: Stream) -> np.random.Generator:
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.Philox(sequence))


def snr_db_to_noise_variance(snr_db: float) -> float:
    """SNR = 1/sigma^2 for unit-energy symbols."""
    return float(10.0 ** (-float(snr_db) / 10.0))


@dataclass(frozen=True, eq=False)
class FadingRealization:
    coefficients: np.ndarray
    noise_variance: float
    block_lengths: Tuple[int, ...]

    @property
    def blocks(self) -> int:
        return len(self.coefficients)

    @property
    def packet_length(self) -> int:
        return int(sum(self.block_lengths))


def sample_channel(
    blocks: int,
    rng: np.random.Generator,
    model: str = "unit-phase",
    noise_variance: float = 1.0,
    block_lengths: Optional[Sequence[int]] = None,
) -> FadingRealization:
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    if noise_variance < 0:
        raise ValueError(f"noise_variance must be >= 0, got {noise_variance}")
    if model == "unit-phase":
        coefficients = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=blocks))
    elif model == "rayleigh":
        coefficients = (rng.standard_normal(blocks) + 1j * rng.standard_normal(blocks)) / np.sqrt(2)
    else:
        raise ValueError(f"unknown channel model '{model}'; use one of {CHANNEL_MODELS}")
    lengths = tuple(int(n) for n in block_lengths) if block_lengths is not None else (1,) * blocks
    if len(lengths) != blocks or min(lengths) < 0:
        raise ValueError("block_lengths must give one non-negative count per block")
    return FadingRealization(coefficients, float(noise_variance), lengths)


def transmit(x: Sequence[complex], realization: FadingRealization, rng: np.random.Generator) -> np.ndarray:
    """Apply per-block gains and add CN(0, sigma^2) noise."""
    symbols = np.asarray(x, dtype=complex).ravel()
    if symbols.size != realization.packet_length:
        raise ValueError(
            f"packet has {symbols.size} symbols but the blocks cover {realization.packet_length}"
        )
    gains = np.repeat(realization.coefficients, realization.block_lengths)
    noise = rng.standard_normal(symbols.size) + 1j * rng.standard_normal(symbols.size)
    return gains * symbols + np.sqrt(realization.noise_variance / 2.0) * noise
