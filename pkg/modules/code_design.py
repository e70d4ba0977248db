"""
Code design by density evolution with the Gaussian approximation (DEGA).

Each BICM bit level is replaced by a binary-input AWGN channel of equal
mutual information; codeword-bit LLR means 2/sigma_k^2 are then evolved
through the polar graph (variance = 2 * mean throughout) to predict per-bit
and block error rates, construct information sets and search the
information split between the data code and the coded pilots.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import logsumexp
from scipy.stats import norm

from modules.crc_utils import CRC11_LENGTH
from modules.fading_channel import snr_db_to_noise_variance
from modules.modem import Constellation, bicm_deinterleave, build_constellation
from modules.polar_codec import LLR_MAX, PolarCodeSpec, alpha_level
from modules.rate_match import (
    RateMatchMode,
    RateMatchSpec,
    build_rate_match,
    de_rate_match,
    forced_frozen,
)
from modules.split_tx import (
    PacketLayout,
    PilotAidedConfig,
    SplitConfig,
    pilot_aided_geometry,
    split_geometry,
)

BIT_MI_DEGREE = 24
BIAWGN_DEGREE = 48
MATCH_BOUNDS = (1e-4, 1e4)
MATCH_ITERATIONS = 200

# (job, SNR points) -> job results in input order
GridMapper = Callable[[Callable[[float], Any], Sequence[float]], Iterable[Any]]

_PSI_A, _PSI_B, _PSI_C = 0.4527, 0.86, 0.0218
_PSI_SPLIT = 10.0
_PSI_INV_UPPER = 1e7
_PSI_INV_ITERATIONS = 100

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class BitLevelProfile:
    """Equivalent BI-AWGN noise variance of every bit level."""

    noise_variances: Tuple[float, ...]
    sigma2: float
    modulation_order: int


@dataclass(frozen=True, eq=False)
class DegaProfile:
    decision_means: np.ndarray  # per u index
    initial_means: np.ndarray  # per mother codeword bit


# ---------------------------------------------------------------------------
# BICM and BI-AWGN mutual information
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _complex_quadrature(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = hermgauss(degree)
    nodes = (t[:, None] + 1j * t[None, :]).ravel()
    weights = (w[:, None] * w[None, :]).ravel() / np.pi
    return nodes, weights


def _noisy_metrics(constellation: Constellation, sigma2: float) -> Tuple[np.ndarray, np.ndarray]:
    """Metrics -|y - x'|^2 / sigma^2 for y = x + n at every quadrature node."""
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    nodes, weights = _complex_quadrature(BIT_MI_DEGREE)
    points = constellation.points
    y = points[:, None] + np.sqrt(sigma2) * nodes[None, :]
    metric = -np.abs(y[:, :, None] - points[None, None, :]) ** 2 / sigma2
    return metric, weights


@lru_cache(maxsize=1024)
def _bit_level_mi(order: int, sigma2: float) -> Tuple[float, ...]:
    constellation = build_constellation(order)
    metric, weights = _noisy_metrics(constellation, sigma2)
    total = logsumexp(metric, axis=-1)
    labels = constellation.labels
    out = []
    for k in range(constellation.bits_per_symbol):
        same = labels[:, k][:, None] == labels[:, k][None, :]
        part = logsumexp(metric, axis=-1, b=same[:, None, :])
        loss = ((total - part) @ weights) / _LN2
        out.append(float(1.0 - loss.mean()))
    return tuple(out)


def bicm_bit_mi(constellation: Constellation, k: int, sigma2: float) -> float:
    """I(B_k; Y) of bit level ``k`` by 2-D Gauss-Hermite quadrature."""
    if not 0 <= k < constellation.bits_per_symbol:
        raise ValueError(f"bit level {k} out of range for order {constellation.order}")
    return _bit_level_mi(constellation.order, float(sigma2))[k]


def symbol_mi(constellation: Constellation, sigma2: float) -> float:
    """I(X; Y) for uniform inputs on the constellation."""
    metric, weights = _noisy_metrics(constellation, sigma2)
    nodes, _ = _complex_quadrature(BIT_MI_DEGREE)
    inner = logsumexp(metric, axis=-1) + np.abs(nodes)[None, :] ** 2
    loss = (inner @ weights) / _LN2
    return float(math.log2(constellation.order) - loss.mean())


def biawgn_mi(sigma_k2):
    """Capacity of the unit-amplitude BI-AWGN channel with noise variance ``sigma_k2``."""
    var = np.asarray(sigma_k2, dtype=float)
    t, w = hermgauss(BIAWGN_DEGREE)
    y = 1.0 + np.sqrt(2.0 * var)[..., None] * t
    loss = np.logaddexp(0.0, -2.0 * y / var[..., None]) @ w / (math.sqrt(math.pi) * _LN2)
    mi = 1.0 - loss
    return float(mi) if mi.ndim == 0 else mi


def match_equivalent_snr(target_mi: float) -> float:
    """Noise variance of the BI-AWGN channel whose capacity is ``target_mi``."""
    if not 0.0 < target_mi < 1.0:
        raise ValueError(f"target mutual information must lie in (0, 1), got {target_mi}")
    lo, hi = math.log(MATCH_BOUNDS[0]), math.log(MATCH_BOUNDS[1])
    if target_mi >= biawgn_mi(MATCH_BOUNDS[0]):
        return MATCH_BOUNDS[0]
    if target_mi <= biawgn_mi(MATCH_BOUNDS[1]):
        return MATCH_BOUNDS[1]
    for _ in range(MATCH_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if biawgn_mi(math.exp(mid)) > target_mi:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return math.exp(0.5 * (lo + hi))


@lru_cache(maxsize=1024)
def _bit_level_variances(order: int, sigma2: float) -> Tuple[float, ...]:
    return tuple(match_equivalent_snr(mi) for mi in _bit_level_mi(order, sigma2))


def bit_level_profile(modulation_order: int, sigma2: float) -> BitLevelProfile:
    return BitLevelProfile(_bit_level_variances(modulation_order, float(sigma2)), float(sigma2), modulation_order)


# ---------------------------------------------------------------------------
# psi and its inverse, evaluated through log(1 - psi)
# ---------------------------------------------------------------------------


def _log_phi(x) -> np.ndarray:
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    small = x <= _PSI_SPLIT
    out[small] = np.minimum(0.0, -_PSI_A * x[small] ** _PSI_B + _PSI_C)
    big = x[~small]
    out[~small] = 0.5 * np.log(np.pi / big) + np.log1p(-10.0 / (7.0 * big)) - big / 4.0
    return out.reshape(shape)


def _log_phi_tail(log_x: np.ndarray) -> np.ndarray:
    x = np.exp(log_x)
    return 0.5 * (math.log(math.pi) - log_x) + np.log1p(-10.0 / (7.0 * x)) - x / 4.0


def _inv_log_phi(lp) -> np.ndarray:
    shape = np.shape(lp)
    lp = np.minimum(np.atleast_1d(np.asarray(lp, dtype=float)), 0.0)
    out = np.zeros_like(lp)
    live = lp < 0
    x1 = ((_PSI_C - lp[live]) / _PSI_A) ** (1.0 / _PSI_B)
    out[live] = x1
    # lower branch takes priority; the tail only covers what it cannot reach
    tail = np.zeros_like(lp, dtype=bool)
    tail[live] = x1 > _PSI_SPLIT
    if tail.any():
        target = lp[tail]
        lo = np.full(target.shape, math.log(_PSI_SPLIT))
        hi = np.full(target.shape, math.log(_PSI_INV_UPPER))
        for _ in range(_PSI_INV_ITERATIONS):
            mid = 0.5 * (lo + hi)
            above = _log_phi_tail(mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[tail] = np.exp(0.5 * (lo + hi))
    return out.reshape(shape)


def _log1mexp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > -_LN2, np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def _as_output(value: np.ndarray, like):
    return float(value) if np.ndim(like) == 0 else value


def psi(mu):
    """E[tanh(X/2)] for X ~ N(mu, 2 mu), two-branch approximation clamped to [0, 1)."""
    value = np.minimum(-np.expm1(_log_phi(mu)), np.nextafter(1.0, 0.0))
    return _as_output(value, mu)


def psi_inv(v):
    """Inverse of ``psi``; inputs outside [0, 1) are clamped."""
    clipped = np.clip(np.asarray(v, dtype=float), 0.0, np.nextafter(1.0, 0.0))
    return _as_output(_inv_log_phi(np.log1p(-clipped)), v)


def _upper_update(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 1 - phi_out = (1 - phi_a)(1 - phi_b)
    lpa, lpb = _log_phi(a), _log_phi(b)
    return _inv_log_phi(np.logaddexp(lpa, lpb + _log1mexp(lpa)))


def dega_evolve(initial_means: Sequence[float]) -> DegaProfile:
    """Evolve codeword-bit LLR means to the decision level of every u index."""
    init = np.asarray(initial_means, dtype=float).ravel()
    size = init.size
    if size < 2 or size & (size - 1):
        raise ValueError(f"length must be a power of two >= 2, got {size}")
    if np.any(init < 0):
        raise ValueError("initial means must be non-negative")
    n = size.bit_length() - 1
    mu = init.copy()
    for d in range(n):
        first, second = alpha_level(d, n)
        a, b = mu[first], mu[second]
        mu[first] = _upper_update(a, b)
        mu[second] = a + b
    return DegaProfile(mu, init)


# ---------------------------------------------------------------------------
# Initial means, construction and error prediction
# ---------------------------------------------------------------------------


def qpsk_initial_means(rm: RateMatchSpec, sigma2: float) -> np.ndarray:
    """Mother-codeword means of a QPSK component (bits see BI-AWGN at sigma^2)."""
    bit_means = np.full(rm.target_length, 2.0 / sigma2)
    return de_rate_match(bit_means, rm, known_value=2.0 * LLR_MAX)


def data_initial_means(
    layout: PacketLayout,
    modulation_order: int,
    rm: RateMatchSpec,
    sigma2: float,
    estimation_variances: Sequence[float],
) -> np.ndarray:
    """Mother-codeword means of the BICM data code.

    Transmitted bit levels come from the BICM interleaver and the block of
    each data symbol; every block sees sigma^2 plus its estimation variance.
    """
    n_s = modulation_order.bit_length() - 1
    per_block = np.array(
        [bit_level_profile(modulation_order, sigma2 + var).noise_variances for var in estimation_variances]
    )
    stream = np.arange(rm.target_length)
    block = layout.data_block_index[stream // n_s]
    interleaved = 2.0 / per_block[block, stream % n_s]
    return de_rate_match(bicm_deinterleave(interleaved), rm, known_value=2.0 * LLR_MAX)


def reliability_order(
    means: np.ndarray, monitor_required: bool = False, excluded: Sequence[int] = ()
) -> np.ndarray:
    """Eligible u indices, most reliable first; ties favour the larger index."""
    size = means.size
    idx = np.arange(size)
    order = np.lexsort((-idx, -means))
    banned = set(int(i) for i in excluded)
    if monitor_required:
        banned |= {size - 2, size - 1}
    return np.array([i for i in order if i not in banned], dtype=int)


def construct_code(
    mother_length: int,
    info_length: int,
    profile: DegaProfile,
    monitor_required: bool = False,
    forced: Sequence[int] = (),
    crc_length: int = 0,
) -> PolarCodeSpec:
    """Pick the ``info_length`` most reliable eligible positions."""
    means = profile.decision_means
    if means.size != mother_length:
        raise ValueError(f"profile has {means.size} positions, code has {mother_length}")
    order = reliability_order(means, monitor_required, forced)
    if info_length > order.size:
        raise ValueError(
            f"cannot place {info_length} information bits: only {order.size} eligible positions"
        )
    monitor = (mother_length - 2, mother_length - 1) if monitor_required else ()
    return PolarCodeSpec(mother_length, tuple(sorted(int(i) for i in order[:info_length])), monitor, crc_length)


def _bit_error(means: np.ndarray) -> np.ndarray:
    return norm.sf(np.sqrt(np.maximum(means, 0.0) / 2.0))


def dega_block_error(spec: PolarCodeSpec, profile: DegaProfile) -> float:
    """1 - prod(1 - Q(sqrt(mu_i / 2))) over information and monitor positions."""
    means = profile.decision_means
    if means.size != spec.mother_length:
        raise ValueError("profile and code lengths differ")
    tracked = list(spec.info_set) + list(spec.monitor_set)
    if not tracked:
        return 0.0
    return float(-np.expm1(np.log1p(-_bit_error(means[tracked])).sum()))


def overall_error(*component_errors: float) -> float:
    """Packet error when any component fails independently."""
    probs = np.asarray(component_errors, dtype=float).ravel()
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("component error probabilities must lie in [0, 1]")
    return float(1.0 - np.prod(1.0 - probs))


def bler_by_info_size(
    means: np.ndarray, monitor_required: bool = False, forced: Sequence[int] = ()
) -> np.ndarray:
    """Predicted block error for every information size 0..eligible."""
    order = reliability_order(means, monitor_required, forced)
    survival = np.concatenate([[0.0], np.cumsum(np.log1p(-_bit_error(means[order])))])
    if monitor_required:
        survival = survival + np.log1p(-_bit_error(means[-2:])).sum()
    return -np.expm1(survival)


def design_pilot_code(
    coded_bits: int,
    payload: int,
    sigma2: float = 1.0,
    mother_length: int = 0,
    crc_length: int = CRC11_LENGTH,
) -> Tuple[PolarCodeSpec, RateMatchSpec]:
    """Stand-alone coded pilot: ``payload`` bits (CRC included) over ``coded_bits``."""
    rm = build_rate_match(payload, coded_bits, coded_pilot=True, mother_length=mother_length)
    profile = dega_evolve(qpsk_initial_means(rm, sigma2))
    return construct_code(rm.mother_length, payload, profile, True, (), crc_length), rm


# ---------------------------------------------------------------------------
# Split optimisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitDesign:
    config: SplitConfig
    design_snr_db: float
    component_errors: Tuple[float, ...]
    predicted_bler: float
    unmet_target: bool


@dataclass(frozen=True, eq=False)
class PilotAidedDesign:
    config: PilotAidedConfig
    design_snr_db: float
    predicted_bler: float
    unmet_target: bool


class _ComponentTable:
    """Block-error lookups for one component at one SNR, keyed by payload size."""

    def __init__(self, coded_length: int, coded_pilot: bool, means_for) -> None:
        self.coded_length = coded_length
        self.coded_pilot = coded_pilot
        self.means_for = means_for
        self._tables: Dict[Tuple[int, str, bool], np.ndarray] = {}
        self._errors: Dict[int, float] = {}

    def rate_match(self, payload: int) -> RateMatchSpec:
        return build_rate_match(payload, self.coded_length, coded_pilot=self.coded_pilot)

    def error(self, payload: int) -> float:
        """Predicted error, or nan when ``payload`` does not fit."""
        if payload < 1 or payload > self.coded_length:
            return math.nan
        if payload not in self._errors:
            rm = self.rate_match(payload)
            key = (rm.mother_length, rm.mode.value, rm.interleave)
            if key not in self._tables:
                means = dega_evolve(self.means_for(rm)).decision_means
                self._tables[key] = bler_by_info_size(means, self.coded_pilot, forced_frozen(rm))
            table = self._tables[key]
            self._errors[payload] = float(table[payload]) if payload < table.size else math.nan
        return self._errors[payload]

    def errors(self, sizes: np.ndarray) -> np.ndarray:
        return np.array([self.error(int(p)) for p in sizes], dtype=float)


def _pilot_tables(pilot_symbols: Sequence[int], sigma2: float) -> List[_ComponentTable]:
    return [
        _ComponentTable(2 * n, True, lambda rm: qpsk_initial_means(rm, sigma2)) for n in pilot_symbols
    ]


def _data_table(
    layout: PacketLayout, modulation_order: int, sigma2: float, variances: Sequence[float]
) -> _ComponentTable:
    coded = int(sum(layout.data_lengths)) * (modulation_order.bit_length() - 1)
    return _ComponentTable(
        coded, False, lambda rm: data_initial_means(layout, modulation_order, rm, sigma2, variances)
    )


def _best_split(
    info_bits: int,
    crc_policy: str,
    data: _ComponentTable,
    pilots: List[_ComponentTable],
) -> Optional[Tuple[float, Tuple[int, ...], Tuple[float, ...]]]:
    """Minimum predicted packet error over every feasible information split.

    Ties go to the lexicographically smallest (K_0, K_1, ..., K_B).
    """
    pilot_crc = CRC11_LENGTH if crc_policy == "per-component" else 0
    total = info_bits + CRC11_LENGTH + pilot_crc * len(pilots)
    sizes, survivals = [], []
    for table in pilots:
        candidates = np.arange(pilot_crc + 1, table.coded_length + 1)
        err = table.errors(candidates)
        keep = ~np.isnan(err)
        if not keep.any():
            return None
        sizes.append(candidates[keep])
        survivals.append(np.log1p(-err[keep]))

    grids = [g.ravel() for g in np.meshgrid(*sizes, indexing="ij")]
    survival = sum(s.ravel() for s in np.meshgrid(*survivals, indexing="ij"))
    payload0 = total - sum(grids)
    lo = max(CRC11_LENGTH, int(payload0.min()))
    hi = min(data.coded_length, int(payload0.max()))
    if lo > hi:
        return None
    lookup = data.errors(np.arange(lo, hi + 1))
    inside = (payload0 >= lo) & (payload0 <= hi)
    err0 = np.full(payload0.shape, np.nan)
    err0[inside] = lookup[payload0[inside] - lo]
    survival = survival + np.log1p(-err0)
    valid = ~np.isnan(survival)
    if not valid.any():
        return None
    top = survival[valid].max()
    ties = np.flatnonzero(valid & (survival == top))
    splits = [
        (int(payload0[i]) - CRC11_LENGTH,) + tuple(int(g[i]) - pilot_crc for g in grids) for i in ties
    ]
    split = min(splits)
    i = ties[splits.index(split)]
    errors = (float(err0[i]),) + tuple(t.error(int(g[i])) for t, g in zip(pilots, grids))
    return float(-np.expm1(top)), split, errors


def _build_split_config(
    pilot_symbols: Tuple[int, ...],
    data_symbols: Tuple[int, ...],
    split: Tuple[int, ...],
    modulation_order: int,
    crc_policy: str,
    sigma2: float,
) -> SplitConfig:
    draft = SplitConfig(pilot_symbols, data_symbols, split, modulation_order, crc_policy=crc_policy)
    payloads = draft.payload_lengths
    variances = [sigma2 / n for n in pilot_symbols]
    codes, rms = [], []
    for b, payload in enumerate(payloads):
        coded_pilot = b > 0
        rm = build_rate_match(payload, draft.coded_lengths[b], coded_pilot=coded_pilot)
        if coded_pilot:
            means = qpsk_initial_means(rm, sigma2)
        else:
            means = data_initial_means(draft.layout, modulation_order, rm, sigma2, variances)
        crc = CRC11_LENGTH if (b == 0 or crc_policy == "per-component") else 0
        codes.append(
            construct_code(rm.mother_length, payload, dega_evolve(means), coded_pilot, forced_frozen(rm), crc)
        )
        rms.append(rm)
    return SplitConfig(
        pilot_symbols, data_symbols, split, modulation_order, tuple(codes), tuple(rms), crc_policy
    )


def map_in_order(job: Callable[[float], Any], points: Sequence[float]) -> List[Any]:
    return [job(p) for p in points]


def optimize_split(
    pilot_symbols: Sequence[int],
    data_symbols: Sequence[int],
    info_bits: int,
    modulation_order: int,
    target_bler: float,
    snr_grid_db: Sequence[float],
    crc_policy: str = "per-component",
    threads: int = 1,
    grid_mapper: GridMapper = map_in_order,
) -> SplitDesign:
    """Scan SNR upward; at each point pick the split minimising the predicted
    packet error and stop at the first SNR meeting ``target_bler``.

    The data code is initialised at sigma^2 + sigma^2 / N_c^b per block to
    account for implicit-pilot estimation error; coded pilots use 2/sigma^2.
    Grid points are evaluated ``threads`` at a time through ``grid_mapper``,
    which must return results in input order; the scan over them is ordered.
    """
    grid = [float(s) for s in snr_grid_db]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("snr grid must be non-empty and strictly increasing")
    pilots_t, data_t = tuple(int(n) for n in pilot_symbols), tuple(int(n) for n in data_symbols)
    layout = PacketLayout(pilots_t, data_t)

    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    def evaluate(snr_db: float):
        sigma2 = snr_db_to_noise_variance(snr_db)
        variances = [sigma2 / n for n in pilots_t]
        found = _best_split(
            info_bits,
            crc_policy,
            _data_table(layout, modulation_order, sigma2, variances),
            _pilot_tables(pilots_t, sigma2),
        )
        return snr_db, sigma2, found

    fallback = None
    for start in range(0, len(grid), threads):
        for snr_db, sigma2, found in grid_mapper(evaluate, grid[start : start + threads]):
            if found is None:
                raise ValueError(f"no feasible information split for K={info_bits} with pilots {pilots_t}")
            value, split, errors = found
            if value <= target_bler:
                cfg = _build_split_config(pilots_t, data_t, split, modulation_order, crc_policy, sigma2)
                return SplitDesign(cfg, snr_db, errors, value, False)
            if fallback is None or value < fallback[0]:
                fallback = (value, split, errors, snr_db, sigma2)

    value, split, errors, snr_db, sigma2 = fallback
    cfg = _build_split_config(pilots_t, data_t, split, modulation_order, crc_policy, sigma2)
    return SplitDesign(cfg, snr_db, errors, value, True)


def design_split_config(
    info_bits: int,
    coded_bits: int,
    blocks: int,
    pilot_bits: int,
    modulation_order: int,
    target_bler: float,
    snr_grid_db: Sequence[float],
    crc_policy: str = "per-component",
    threads: int = 1,
    grid_mapper: GridMapper = map_in_order,
) -> SplitDesign:
    pilots, data = split_geometry(coded_bits, blocks, pilot_bits, modulation_order)
    return optimize_split(
        pilots, data, info_bits, modulation_order, target_bler, snr_grid_db, crc_policy, threads, grid_mapper
    )


def design_best_split(
    info_bits: int,
    coded_bits: int,
    blocks: int,
    pilot_length_candidates: Sequence[int],
    modulation_order: int,
    target_bler: float,
    snr_grid_db: Sequence[float],
    crc_policy: str = "per-component",
    threads: int = 1,
    grid_mapper: GridMapper = map_in_order,
) -> SplitDesign:
    """Design for every coded-pilot length (symbols per block); keep the one
    with the lowest design SNR, ties to the shorter pilot."""
    best: Optional[SplitDesign] = None
    for length in sorted(set(int(c) for c in pilot_length_candidates)):
        try:
            design = design_split_config(
                info_bits,
                coded_bits,
                blocks,
                2 * length,
                modulation_order,
                target_bler,
                snr_grid_db,
                crc_policy,
                threads,
                grid_mapper,
            )
        except ValueError:
            continue
        if best is None or (design.unmet_target, design.design_snr_db, design.predicted_bler) < (
            best.unmet_target,
            best.design_snr_db,
            best.predicted_bler,
        ):
            best = design
    if best is None:
        raise ValueError(f"no feasible coded-pilot length among {list(pilot_length_candidates)}")
    return best


def predict_split_bler(cfg: SplitConfig, snr_db: float) -> Tuple[Tuple[float, ...], float]:
    """DEGA prediction for fixed codes at ``snr_db``: (per-component, packet)."""
    sigma2 = snr_db_to_noise_variance(snr_db)
    variances = [sigma2 / n for n in cfg.pilot_symbols]
    errors = [
        dega_block_error(
            cfg.codes[0],
            dega_evolve(data_initial_means(cfg.layout, cfg.modulation_order, cfg.rate_matches[0], sigma2, variances)),
        )
    ]
    for b in range(1, cfg.blocks + 1):
        errors.append(dega_block_error(cfg.codes[b], dega_evolve(qpsk_initial_means(cfg.rate_matches[b], sigma2))))
    return tuple(errors), overall_error(*errors)


def _pilot_aided_means(layout: PacketLayout, order: int, rm: RateMatchSpec, sigma2: float) -> np.ndarray:
    variances = [sigma2 / n if n else 0.0 for n in layout.pilot_lengths]
    return data_initial_means(layout, order, rm, sigma2, variances)


def design_pilot_aided_config(
    info_bits: int,
    coded_bits: int,
    blocks: int,
    pilot_length: int,
    modulation_order: int,
    target_bler: float,
    snr_grid_db: Sequence[float],
) -> PilotAidedDesign:
    """Single data code built by DEGA at sigma^2 + sigma^2 / N_p."""
    pilots, data = pilot_aided_geometry(coded_bits, blocks, pilot_length, modulation_order)
    layout = PacketLayout(pilots, data)
    payload = info_bits + CRC11_LENGTH
    if payload > coded_bits:
        raise ValueError(f"{payload} payload bits do not fit in {coded_bits} coded bits")
    rm = build_rate_match(payload, coded_bits)
    forced = forced_frozen(rm)

    chosen = None
    for snr_db in [float(s) for s in snr_grid_db]:
        sigma2 = snr_db_to_noise_variance(snr_db)
        profile = dega_evolve(_pilot_aided_means(layout, modulation_order, rm, sigma2))
        table = bler_by_info_size(profile.decision_means, False, forced)
        if payload >= table.size:
            raise ValueError(f"{payload} payload bits exceed the eligible positions of N={rm.mother_length}")
        value = float(table[payload])
        if chosen is None or value < chosen[0] or value <= target_bler:
            chosen = (value, snr_db, profile)
        if value <= target_bler:
            break
    if chosen is None:
        raise ValueError("snr grid must be non-empty")
    value, snr_db, profile = chosen
    code = construct_code(rm.mother_length, payload, profile, False, forced, CRC11_LENGTH)
    cfg = PilotAidedConfig(pilots, data, info_bits, modulation_order, code, rm)
    return PilotAidedDesign(cfg, snr_db, value, value > target_bler)


def predict_pilot_aided_bler(cfg: PilotAidedConfig, snr_db: float) -> float:
    sigma2 = snr_db_to_noise_variance(snr_db)
    means = _pilot_aided_means(cfg.layout, cfg.modulation_order, cfg.rate_match, sigma2)
    return dega_block_error(cfg.code, dega_evolve(means))


# ---------------------------------------------------------------------------
# Design report (JSON-ready)
# ---------------------------------------------------------------------------


def _code_entry(code: PolarCodeSpec, rm: RateMatchSpec) -> Dict[str, Any]:
    return {
        "mother_length": code.mother_length,
        "info_set": list(code.info_set),
        "monitor_set": list(code.monitor_set),
        "crc_length": code.crc_length,
        "rate_match": {
            "mode": rm.mode.value,
            "target_length": rm.target_length,
            "interleave": rm.interleave,
        },
    }


def design_report(design: SplitDesign) -> Dict[str, Any]:
    cfg = design.config
    return {
        "scheme": "coded-pilot",
        "design_snr_db": design.design_snr_db,
        "predicted_bler": design.predicted_bler,
        "component_bler": list(design.component_errors),
        "unmet_target": design.unmet_target,
        "info_bits": list(cfg.info_bits),
        "pilot_symbols": list(cfg.pilot_symbols),
        "data_symbols": list(cfg.data_symbols),
        "modulation_order": cfg.modulation_order,
        "crc_policy": cfg.crc_policy,
        "components": [_code_entry(c, rm) for c, rm in zip(cfg.codes, cfg.rate_matches)],
    }


def pilot_aided_report(design: PilotAidedDesign) -> Dict[str, Any]:
    cfg = design.config
    return {
        "scheme": "pilot-aided",
        "design_snr_db": design.design_snr_db,
        "predicted_bler": design.predicted_bler,
        "unmet_target": design.unmet_target,
        "info_bits": cfg.info_bits,
        "pilot_lengths": list(cfg.pilot_lengths),
        "data_symbols": list(cfg.data_symbols),
        "modulation_order": cfg.modulation_order,
        "pilot_seed": cfg.pilot_seed,
        "components": [_code_entry(cfg.code, cfg.rate_match)],
    }


def _code_from_entry(entry: Dict[str, Any]) -> Tuple[PolarCodeSpec, RateMatchSpec]:
    code = PolarCodeSpec(
        int(entry["mother_length"]),
        tuple(entry["info_set"]),
        tuple(entry["monitor_set"]),
        int(entry["crc_length"]),
    )
    rm_entry = entry["rate_match"]
    rm = RateMatchSpec(
        RateMatchMode(rm_entry["mode"]),
        code.mother_length,
        int(rm_entry["target_length"]),
        bool(rm_entry["interleave"]),
    )
    return code, rm


def config_from_report(report: Dict[str, Any]):
    """Rebuild a SplitConfig or PilotAidedConfig from its design report."""
    pairs = [_code_from_entry(e) for e in report["components"]]
    if report["scheme"] == "pilot-aided":
        code, rm = pairs[0]
        return PilotAidedConfig(
            tuple(report["pilot_lengths"]),
            tuple(report["data_symbols"]),
            int(report["info_bits"]),
            int(report["modulation_order"]),
            code,
            rm,
            int(report["pilot_seed"]),
        )
    return SplitConfig(
        tuple(report["pilot_symbols"]),
        tuple(report["data_symbols"]),
        tuple(report["info_bits"]),
        int(report["modulation_order"]),
        tuple(p[0] for p in pairs),
        tuple(p[1] for p in pairs),
        report["crc_policy"],
    )
