"""Acceptance criteria 1-11, one test each.

Each test records its criterion number and a one-line measurement; the
terminal summary prints a PASS/FAIL line per criterion (see conftest.py).
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from polarga.channel_sim import TrialConfig, bpsk_awgn, block_rng, genie_bit_channel_probe, run_trials
from polarga.codec import boxplus, encode, polar_transform, sc_decode_batch
from polarga.construction import (
    PolarCodeSpec,
    db_to_linear,
    estimate_bler,
    find_design_snr,
    reliabilities,
    run_flipping,
    run_ga,
    select_info_set,
    select_info_set_full_sort,
)
from polarga.ga_kernel import check_node_transform, q_func, xi_hat, xi_hat_inv
from polarga.oracles import exact_mean_boxplus, log_phi_numeric, mc_mean_boxplus


@pytest.fixture
def report(request):
    def _report(num: int, detail: str) -> None:
        request.node.user_properties.append(("criterion", num))
        request.node.user_properties.append(("detail", detail))
        print(f"criterion {num}: {detail}")

    return _report


def test_c01_kernel_golden_value(report):
    val = math.exp(xi_hat(1000.0))
    rel = abs(val / 1.49e-110 - 1)
    report(1, f"exp(xi_hat(1000)) = {val:.4e}, rel err {rel:.2e} (tol 2e-2)")
    assert rel <= 2e-2


def test_c02_kernel_vs_quadrature(report):
    g = np.logspace(-3, math.log10(50), 200)
    ref = np.array([log_phi_numeric(x) for x in g])
    worst = float(np.max(np.abs(xi_hat(g) - ref) / np.abs(ref)))
    report(2, f"max rel err of xi_hat over 200 points in [1e-3, 50] = {worst:.3e} (tol 2e-2)")
    assert worst <= 2e-2


def test_c03_linear_asymptote(report):
    errs = {g: abs(check_node_transform(g) - (g - 4 * math.log(2))) for g in (50.0, 100.0, 500.0)}
    report(3, "|Xi - (g - 4 log 2)| = " + ", ".join(f"{e:.2e} at {g:g}" for g, e in errs.items()) + " (tol 0.1)")
    assert max(errs.values()) <= 0.1


def test_c04_inverse_round_trip(report):
    upper = np.logspace(math.log10(0.2), 5, 2000)
    lower = np.logspace(-8, math.log10(0.2), 2000)[:-1]
    e_up = float(np.max(np.abs(xi_hat_inv(xi_hat(upper)) / upper - 1)))
    e_lo = float(np.max(np.abs(xi_hat_inv(xi_hat(lower)) / lower - 1)))
    report(4, f"round-trip rel err {e_up:.2e} on [0.2, 1e5] (tol 1e-3), {e_lo:.2e} below 0.2 (tol 1e-2)")
    assert e_up <= 1e-3 and e_lo <= 1e-2


def test_c05_design_snr(report):
    db = find_design_snr(16, 1 << 15, 1e-4, 1e-3)
    report(5, f"design SNR for n=16, R=1/2 = {db:.2f} dB (target -1.48 +/- 0.05)")
    assert abs(db - (-1.48)) <= 0.05


@pytest.mark.parametrize("rate,floor", [(2, 0.995), (4, 0.999), (8, 0.999)])
def test_c06_frozen_set_agreement(report, rate, floor):
    n = 18
    K = (1 << n) // rate
    db = find_design_snr(n, K, 1e-4, 1e-3)
    snr = db_to_linear(db)
    a = select_info_set(run_ga(n, snr, "improved-ga"), K)
    b = select_info_set(run_ga(n, snr, "ha-ga"), K)
    # share of frozen positions the two designs have in common
    agree = np.intersect1d(a.frozen_set, b.frozen_set).size / (a.N - K)
    report(6, f"R=1/{rate}: improved vs Ha frozen-set agreement {100 * agree:.3f}% at {db:.2f} dB (floor {100 * floor:.1f}%)")
    assert agree >= floor


@pytest.mark.slow
def test_c07_estimate_matches_simulation(report):
    n, K = 13, 1 << 12
    design_db = find_design_snr(n, K, 1e-4, 1e-3)
    code = select_info_set(run_ga(n, db_to_linear(design_db)), K)

    def log_gap(db):
        return math.log(estimate_bler(code, run_ga(n, db_to_linear(db))).value / 1e-2)

    chan_db = brentq(log_gap, design_db - 3, design_db + 1, xtol=1e-6)
    res = run_trials(TrialConfig(code, db_to_linear(chan_db), max_blocks=10**6, target_block_errors=100, seed=7))
    ratio = res.bler / 1e-2
    report(
        7,
        f"channel {chan_db:.3f} dB: simulated BLER {res.bler:.3e} ({res.block_errors}/{res.blocks}), "
        f"ratio to estimate {ratio:.2f} (band [0.5, 2])",
    )
    assert res.block_errors >= 100
    assert 0.5 <= ratio <= 2.0


@pytest.mark.slow
def test_c08_conventional_divergence(report):
    n, K = 15, 1 << 13
    design_db = find_design_snr(n, K, 1e-4, 1e-3)
    snr = db_to_linear(design_db)
    improved = select_info_set(run_ga(n, snr, "improved-ga"), K)
    conventional = select_info_set(run_ga(n, snr, "conventional-ga"), K)
    conv = run_trials(TrialConfig(conventional, snr, max_blocks=10**5, target_block_errors=100, seed=1))
    # the improved code sits near 1e-3; a fixed budget bounds it well below the conventional code
    imp = run_trials(TrialConfig(improved, snr, max_blocks=4096, target_block_errors=10**9, seed=2))
    ratio = conv.interval[0] / imp.interval[1]
    report(
        8,
        f"n=15 R=1/4 at {design_db:.2f} dB: conventional BLER {conv.bler:.3e} "
        f"(CI low {conv.interval[0]:.3e}), improved {imp.bler:.3e} (CI high {imp.interval[1]:.3e}), "
        f"conservative ratio {ratio:.1f} (need >= 3)",
    )
    assert ratio >= 3.0


def test_c09_single_stage_flipping(report):
    blocks = 10**6
    snr = 1.0
    rates = genie_bit_channel_probe(1, snr, blocks, seed=0)
    p_chan = q_func(math.sqrt(2 * snr))
    expect = np.array([2 * p_chan * (1 - p_chan), run_flipping(1, snr).values[1]])
    se = np.sqrt(expect * (1 - expect) / blocks)
    z_bits = np.abs(rates - expect) / se

    # channel flip probability itself, p[0] = Q(sqrt(2 alpha))
    y = bpsk_awgn(np.zeros(blocks, dtype=np.uint8), snr, block_rng(0, 10**6))
    flip = float(np.mean(y < 0))
    z_chan = abs(flip - p_chan) / math.sqrt(p_chan * (1 - p_chan) / blocks)
    report(
        9,
        f"genie n=1: [{rates[0]:.5f}, {rates[1]:.5f}] vs [{expect[0]:.5f}, {expect[1]:.5f}], "
        f"|z| = {z_bits[0]:.2f}, {z_bits[1]:.2f}; channel flip {flip:.5f} vs Q(sqrt 2), |z| = {z_chan:.2f} (tol 3)",
    )
    assert np.all(z_bits <= 3) and z_chan <= 3


@pytest.mark.slow
def test_c10_exact_mean_oracle(report):
    parts = []
    ok = True
    for g in (0.5, 2.0, 8.0, 32.0):
        exact = exact_mean_boxplus(g)
        mean, se = mc_mean_boxplus(g, 10**7, seed=1)
        z = abs(exact - mean) / se
        ok &= z <= 3
        parts.append(f"g={g:g}: exact {exact:.5f}, MC {mean:.5f}, |z|={z:.2f}")
    # ordering against the GA map, confirmed by Monte Carlo: the exact mean lies
    # below Xi for large gamma and the gap widens as gamma grows
    gaps = [check_node_transform(g) - exact_mean_boxplus(g) for g in (10.0, 20.0, 50.0)]
    ordered = all(d > 0 for d in gaps) and gaps[0] < gaps[1] < gaps[2]
    parts.append("Xi - exact at 10, 20, 50: " + ", ".join(f"{d:.3f}" for d in gaps))
    report(10, "; ".join(parts))
    assert ok and ordered


@pytest.mark.slow
def test_c11_property_suites(report):
    rng = np.random.default_rng(11)
    violations = {"round-trip": 0, "linearity": 0, "involution": 0, "boxplus": 0, "prefilter": 0, "parallel": 0}

    for _ in range(1000):
        n = int(rng.integers(1, 11))
        N = 1 << n
        K = int(rng.integers(0, N + 1))
        code = PolarCodeSpec(n=n, K=K, info_set=np.sort(rng.choice(N, K, replace=False)))
        m1 = rng.integers(0, 2, K, dtype=np.uint8)
        m2 = rng.integers(0, 2, K, dtype=np.uint8)
        x1 = encode(code, m1)
        got, _ = sc_decode_batch(code, np.where(x1 == 0, 8.0, -8.0)[None, :])
        violations["round-trip"] += int(not np.array_equal(got[0], m1))
        violations["linearity"] += int(not np.array_equal(encode(code, m1 ^ m2), x1 ^ encode(code, m2)))
        violations["involution"] += int(not np.array_equal(polar_transform(polar_transform(x1)), x1))

    a, b, c = rng.uniform(-40, 40, (3, 100_000))
    assoc = np.abs(boxplus(boxplus(a, b), c) - boxplus(a, boxplus(b, c))) > 1e-12 * np.maximum.reduce([np.ones_like(a), abs(a), abs(b), abs(c)])
    comm = boxplus(a, b) != boxplus(b, a)
    ms = np.abs(boxplus(a, b) - np.sign(a * b) * np.minimum(abs(a), abs(b))) > math.log(2) + 1e-12
    sign = np.sign(boxplus(a, b)) != np.sign(a * b)
    violations["boxplus"] = int(assoc.sum() + comm.sum() + ms.sum() + sign.sum())

    methods = ["improved-ga", "conventional-ga", "ha-ga", "llr-flipping"]
    for t in range(1000):
        n = int(rng.integers(1, 13))
        rel = reliabilities(n, db_to_linear(float(rng.uniform(-8, 12))), methods[t % 4])
        K = int(rng.integers(0, (1 << n) + 1))
        violations["prefilter"] += int(
            not np.array_equal(select_info_set(rel, K).info_set, select_info_set_full_sort(rel, K).info_set)
        )

    code = select_info_set(run_ga(7, db_to_linear(0.5)), 64)
    base = dict(code=code, snr=db_to_linear(0.0), max_blocks=3000, target_block_errors=80, seed=9, chunk_blocks=64)
    tallies = {w: run_trials(TrialConfig(**base, workers=w)) for w in (1, 2, 4)}
    keys = {(r.blocks, r.block_errors, r.bit_errors) for r in tallies.values()}
    violations["parallel"] = len(keys) - 1

    report(11, "violations: " + ", ".join(f"{k} {v}" for k, v in violations.items()))
    assert sum(violations.values()) == 0


@pytest.mark.extended
def test_c08_extended_both_codes_to_target_errors():
    # fuller version of criterion 8: both codes run to 100 block errors
    n, K = 15, 1 << 13
    snr = db_to_linear(find_design_snr(n, K, 1e-4, 1e-3))
    improved = select_info_set(run_ga(n, snr, "improved-ga"), K)
    conventional = select_info_set(run_ga(n, snr, "conventional-ga"), K)
    conv = run_trials(TrialConfig(conventional, snr, max_blocks=10**5, target_block_errors=100, seed=1))
    imp = run_trials(TrialConfig(improved, snr, max_blocks=10**6, target_block_errors=100, seed=2))
    print(f"conventional {conv.bler:.3e}, improved {imp.bler:.3e} ({imp.blocks} blocks)")
    assert imp.block_errors >= 100
    assert conv.interval[0] >= 3 * imp.interval[1]
