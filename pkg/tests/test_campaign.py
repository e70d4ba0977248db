import sys
import math
import pathlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.campaign import (  # noqa: E402
    CSV_COLUMNS,
    BlerCurve,
    BlerPoint,
    CodedPilotLink,
    PilotAidedLink,
    crossing_snr,
    interpolate_crossing,
    required_snr,
    run_campaign,
    run_chunk,
    run_point,
    select_pilot_length,
    wilson_interval,
)
import modules.campaign as campaign  # noqa: E402
from modules.code_design import design_pilot_aided_config, design_split_config  # noqa: E402
from modules.fading_channel import Stream, snr_db_to_noise_variance, trial_rng  # noqa: E402
from modules.hybrid_rx import HybridResult  # noqa: E402


class CoinLink:
    """Error probability sigma^2 * scale, drawn from the per-trial noise stream."""

    def __init__(self, scheme="coin", scale=0.3):
        self.scheme = scheme
        self.scale = scale

    def run_trial(self, seed, trial, sigma2):
        error = trial_rng(seed, trial, Stream.NOISE).random() < min(1.0, self.scale * sigma2)
        return bool(error), bool(error and trial % 2 == 0)


def _thread_mapper(workers):
    def mapper(job, chunks):
        # completion order is scrambled on purpose
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, list(reversed(list(chunks)))))

    return mapper


def test_wilson_interval_brackets_the_estimate():
    for errors, trials in ((0, 10), (1, 10), (5, 10), (10, 10), (3, 1000), (100, 100_000)):
        low, high = wilson_interval(errors, trials)
        assert 0.0 <= low <= errors / trials <= high <= 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)
    low, high = wilson_interval(50, 100)
    assert low == pytest.approx(0.4038, abs=1e-3) and high == pytest.approx(0.5962, abs=1e-3)


def test_run_point_stops_at_min_errors_in_trial_order():
    link = CoinLink(scale=0.5)
    point = run_point(link, 0.0, seed=3, min_errors=20, max_trials=10_000, chunk_size=7)
    outcomes = [link.run_trial(3, t, 1.0)[0] for t in range(point.trials)]
    assert point.block_errors == 20 == sum(outcomes)
    assert outcomes[-1]
    assert point.undetected_errors == point.block_errors - point.detected_errors


def test_run_point_respects_max_trials():
    point = run_point(CoinLink(scale=1e-9), 10.0, seed=0, min_errors=5, max_trials=103, chunk_size=10)
    assert point.trials == 103 and point.block_errors == 0 and point.bler == 0.0
    with pytest.raises(ValueError):
        run_point(CoinLink(), 0.0, 0, min_errors=10, max_trials=5)


def test_run_chunk_covers_its_trial_range():
    result = run_chunk(CoinLink(), 1, 1.0, 10, 25, 2)
    assert result.chunk == 2 and result.errors.size == 5


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_csv_bytes_do_not_depend_on_thread_count(tmp_path, threads):
    links = [CoinLink("a", 0.4), CoinLink("b", 0.2)]
    reference = run_campaign(links, [0.0, 3.0], 11, min_errors=15, max_trials=2000, chunk_size=9)
    ref_path = reference.write_csv(tmp_path / "ref.csv")
    curve = run_campaign(
        links, [0.0, 3.0], 11, min_errors=15, max_trials=2000, chunk_size=9,
        threads=threads, chunk_mapper=_thread_mapper(threads),
    )
    out = curve.write_csv(tmp_path / f"t{threads}.csv")
    assert out.read_bytes() == ref_path.read_bytes()


def test_csv_schema_and_on_point_callback(tmp_path):
    seen = []
    curve = run_campaign([CoinLink()], [1.0], 0, min_errors=3, max_trials=500, on_point=seen.append)
    lines = curve.write_csv(tmp_path / "nested" / "bler.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("coin,1,")
    assert seen == curve.points
    with pytest.raises(ValueError):
        run_campaign([CoinLink()], [], 0)


def test_interpolate_crossing_cases():
    assert interpolate_crossing([0, 1, 2], [1e-1, 1e-2, 1e-3], 1e-2) == pytest.approx(1.0)
    assert interpolate_crossing([0, 1], [1e-1, 1e-3], 1e-2) == pytest.approx(0.5)
    assert interpolate_crossing([2, 3], [1e-3, 1e-4], 1e-2) == 2.0
    assert math.isnan(interpolate_crossing([0, 1], [0.5, 0.2], 1e-2))
    assert interpolate_crossing([0, 1], [0.02, 0.0], 1e-2) == pytest.approx(0.5)
    points = [BlerPoint("x", s, 100, e, 0, 0) for s, e in ((0.0, 10), (1.0, 1))]
    assert crossing_snr(points, 1e-1) == 0.0


def test_required_snr_bisects_towards_the_threshold():
    link = CoinLink(scale=0.05)  # BLER ~ 0.05 sigma^2, target 0.01 needs sigma^2 <= 0.2
    snr = required_snr(link, 0.01, (0.0, 20.0), 0, min_errors=50, max_trials=20_000, iterations=5)
    assert 5.0 <= snr <= 10.0
    assert required_snr(CoinLink(scale=100.0), 0.01, (0.0, 1.0), 0, 5, 50) == math.inf
    assert required_snr(link, 0.5, (0.0, 20.0), 0, 5, 500) == 0.0


def test_select_pilot_length_skips_infeasible_and_prefers_short():
    scales = {4: 0.2, 8: 0.05, 16: 0.05}

    def build(length):
        if length not in scales:
            raise ValueError("infeasible")
        return CoinLink(scale=scales[length])

    chosen = select_pilot_length((2, 4, 8, 16), build, 0.01, (0.0, 20.0), 0, 30, 5000, iterations=3)
    assert chosen == 8
    assert select_pilot_length((32,), build, 0.01, (0.0, 1.0), 0, 1, 1) == 32
    with pytest.raises(ValueError):
        select_pilot_length((1, 2), build, 0.01, (0.0, 1.0), 0, 1, 1)


def test_real_links_are_reproducible_per_trial():
    split = design_split_config(85, 256, 2, 32, 4, 1e-2, [4.0]).config
    pilot = design_pilot_aided_config(85, 256, 2, 4, 4, 1e-2, [4.0]).config
    for link in (CodedPilotLink(split, 2), PilotAidedLink(pilot, 2), CodedPilotLink(split, 1, genie=True)):
        sigma2 = snr_db_to_noise_variance(2.0)
        first = [link.run_trial(5, t, sigma2) for t in range(6)]
        assert first == [link.run_trial(5, t, sigma2) for t in range(6)]
        assert all(det <= err for err, det in first)
    assert CodedPilotLink(split, 1, genie=True).scheme == "coded-pilot-genie"
    with pytest.raises(ValueError):
        CodedPilotLink(split, 0)


def test_noiseless_limit_has_no_errors():
    split = design_split_config(85, 256, 2, 32, 4, 1e-2, [4.0]).config
    point = run_point(CodedPilotLink(split, 1), 40.0, 0, min_errors=1, max_trials=20, chunk_size=5)
    assert point.trials == 20 and point.block_errors == 0


def test_bler_curve_filters_by_scheme():
    curve = BlerCurve([BlerPoint("a", 0.0, 1, 0, 0, 0), BlerPoint("b", 0.0, 1, 1, 1, 0)])
    assert [p.scheme for p in curve.for_scheme("b")] == ["b"]
    assert np.isclose(curve.points[1].bler, 1.0)


def _paired(link, snr_db, trials=200):
    # min_errors == max_trials: every link sees the same trials
    return run_point(link, snr_db, 3, min_errors=trials, max_trials=trials, chunk_size=50)


def test_list_decoding_never_loses_to_sc_on_common_trials():
    split = design_split_config(85, 256, 2, 32, 4, 1e-2, [4.0]).config
    sc = _paired(CodedPilotLink(split, 1), 1.0)
    scl = _paired(CodedPilotLink(split, 8), 1.0)
    assert sc.trials == scl.trials == 200
    assert sc.block_errors > 0
    assert scl.block_errors <= sc.block_errors


def test_genie_receiver_bounds_the_blind_receiver():
    split = design_split_config(85, 256, 2, 32, 4, 1e-2, [4.0]).config
    blind = _paired(CodedPilotLink(split, 1), 1.0)
    genie = _paired(CodedPilotLink(split, 1, genie=True), 1.0)
    assert genie.trials == blind.trials
    assert genie.block_errors <= blind.block_errors


def test_any_failed_stage_counts_as_a_block_error(monkeypatch):
    split = design_split_config(85, 256, 2, 32, 4, 1e-2, [4.0]).config
    link = CodedPilotLink(split, 1)
    truth = trial_rng(7, 0, Stream.MESSAGE).integers(0, 2, size=split.K, dtype=np.uint8)
    wrong = truth.copy()
    wrong[0] ^= 1
    cases = [
        ((True, True, True), truth, (False, False)),
        ((True, False, True), truth, (True, True)),  # one pilot block
        ((True, True, False), truth, (True, True)),
        ((False, True, True), truth, (True, True)),  # data code or aggregate CRC
        ((True, True, True), wrong, (True, False)),  # passed every CRC
    ]
    for flags, message, expected in cases:
        result = HybridResult(message, flags, ())
        monkeypatch.setattr(campaign, "hybrid_decode", lambda *args, result=result, **kwargs: result)
        assert link.run_trial(7, 0, 1.0) == expected
