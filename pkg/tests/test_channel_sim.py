import csv
import math

import numpy as np
import pytest

from polarga.channel_sim import (
    CAMPAIGN_FIELDS,
    TrialConfig,
    append_campaign_row,
    block_rng,
    bpsk_awgn,
    clopper_pearson,
    genie_bit_channel_probe,
    run_trials,
)
from polarga.codec import channel_llr
from polarga.construction import PolarCodeSpec, db_to_linear, run_flipping, run_ga, select_info_set
from polarga.ga_kernel import q_func


def small_code(n=6, K=32, db=1.0):
    return select_info_set(run_ga(n, db_to_linear(db)), K)


class TestChannel:
    def test_llr_statistics(self):
        # Es/N0 = 1: LLR = 4y with y ~ N(1, 1/2), so mean 4 and variance 8
        rng = np.random.default_rng(0)
        y = bpsk_awgn(np.zeros(10**6, dtype=np.uint8), 1.0, rng)
        llr = channel_llr(y, 1.0, 1.0)
        assert llr.mean() == pytest.approx(4.0, abs=0.02)
        assert llr.var() == pytest.approx(8.0, rel=0.01)

    def test_mapping(self):
        out = bpsk_awgn(np.array([0, 1, 1, 0]), math.inf, np.random.default_rng(0))
        assert out.tolist() == [1.0, -1.0, -1.0, 1.0]

    def test_rejects_bad_snr(self):
        with pytest.raises(ValueError):
            bpsk_awgn(np.zeros(4), 0.0, np.random.default_rng(0))

    def test_block_streams_independent_of_order(self):
        a = block_rng(7, 3).standard_normal(5)
        block_rng(7, 2).standard_normal(5)
        np.testing.assert_array_equal(a, block_rng(7, 3).standard_normal(5))
        assert not np.array_equal(a, block_rng(7, 4).standard_normal(5))


class TestClopperPearson:
    def test_brackets_estimate(self):
        lo, hi = clopper_pearson(10, 1000)
        assert lo < 0.01 < hi
        assert lo == pytest.approx(0.0048, abs=2e-4) and hi == pytest.approx(0.0183, abs=2e-4)

    def test_edges(self):
        assert clopper_pearson(0, 100)[0] == 0.0
        assert clopper_pearson(100, 100)[1] == 1.0
        assert clopper_pearson(0, 0) == (0.0, 1.0)


class TestTrials:
    def test_single_bit_code_matches_q(self):
        # n = 1 with only the repetition bit: BER = Q(sqrt(2 * 2 * Es/N0)) = Q(2) at 0 dB
        code = PolarCodeSpec(n=1, K=1, info_set=[1])
        res = run_trials(TrialConfig(code, 1.0, max_blocks=50_000, target_block_errors=10**9, seed=1))
        se = math.sqrt(q_func(2.0) * (1 - q_func(2.0)) / res.blocks)
        assert abs(res.ber - q_func(2.0)) < 4 * se
        assert res.stop_reason == "max_blocks"

    def test_stops_on_target(self):
        code = small_code()
        cfg = TrialConfig(code, db_to_linear(-2.0), max_blocks=10**6, target_block_errors=20, chunk_blocks=16)
        res = run_trials(cfg)
        assert res.stop_reason == "target_errors"
        assert res.block_errors >= 20 and res.blocks % 16 == 0
        lo, hi = res.interval
        assert lo <= res.bler <= hi

    def test_deterministic_per_seed(self):
        cfg = TrialConfig(small_code(), db_to_linear(0.0), max_blocks=3000, seed=11, target_block_errors=10**9)
        a = run_trials(cfg)
        b = run_trials(cfg)
        assert (a.blocks, a.block_errors, a.bit_errors) == (b.blocks, b.block_errors, b.bit_errors)

    def test_worker_count_does_not_change_tallies(self):
        base = dict(code=small_code(), snr=db_to_linear(0.0), max_blocks=4000,
                    target_block_errors=60, seed=5, chunk_blocks=128)
        one = run_trials(TrialConfig(**base, workers=1))
        three = run_trials(TrialConfig(**base, workers=3))
        assert (one.blocks, one.block_errors, one.bit_errors) == (three.blocks, three.block_errors, three.bit_errors)

    def test_all_zero_matches_random_messages(self):
        # linear code and symmetric channel: the error rate does not depend on the message
        code = small_code(7, 64, 1.0)
        snr = db_to_linear(0.5)
        kw = dict(max_blocks=6000, target_block_errors=10**9, seed=2)
        rnd = run_trials(TrialConfig(code, snr, **kw))
        zero = run_trials(TrialConfig(code, snr, all_zero=True, **kw))
        p = 0.5 * (rnd.bler + zero.bler)
        se = math.sqrt(2 * p * (1 - p) / 6000)
        assert abs(rnd.bler - zero.bler) < 4 * se

    def test_noiseless_channel_never_errs(self):
        res = run_trials(TrialConfig(small_code(), db_to_linear(30.0), max_blocks=256))
        assert res.block_errors == 0 and res.bit_errors == 0


class TestGenieProbe:
    def test_single_stage_matches_flipping(self):
        rates = genie_bit_channel_probe(1, 1.0, 200_000, seed=4)
        expect = run_flipping(1, 1.0).values
        se = np.sqrt(expect * (1 - expect) / 200_000)
        assert np.all(np.abs(rates - expect) < 4 * se)

    def test_ordering_matches_construction(self):
        # the empirically best channels coincide with the GA ranking
        rates = genie_bit_channel_probe(5, db_to_linear(0.0), 20_000, seed=1)
        gamma = run_ga(5, db_to_linear(0.0)).values
        worst, best = np.argmax(rates), np.argmin(rates)
        assert gamma[worst] == gamma.min() and rates[best] <= rates[np.argmax(gamma)]


class TestCampaignLog:
    def test_appends_with_single_header(self, tmp_path):
        path = tmp_path / "campaign.csv"
        code = small_code()
        res = run_trials(TrialConfig(code, 1.0, max_blocks=64))
        append_campaign_row(path, code, 1.0, res)
        append_campaign_row(path, code, 2.0, res)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert list(rows[0]) == list(CAMPAIGN_FIELDS)
        assert rows[1]["channel_snr_db"] == str(round(10 * math.log10(2.0), 6))
        assert int(rows[0]["blocks"]) == 64
