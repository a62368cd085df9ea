"""BPSK over AWGN, seeded Monte-Carlo BLER campaigns and the genie probe.

Es is fixed to 1, so an Es/N0 of ``snr`` means ``N0 = 1 / snr``.

Every block draws its message and noise from its own generator, seeded by
``(master_seed, block_index)``. Blocks are processed in fixed-size chunks
in index order and the early-stop rule is checked at chunk boundaries, so
tallies do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .codec import channel_llr, encode, genie_leaf_llrs, sc_decode_batch
from .construction import PolarCodeSpec, linear_to_db

__all__ = [
    "TrialConfig",
    "SimResult",
    "bpsk_awgn",
    "block_rng",
    "run_trials",
    "genie_bit_channel_probe",
    "clopper_pearson",
    "CAMPAIGN_FIELDS",
    "append_campaign_row",
]

CAMPAIGN_FIELDS = (
    "n",
    "K",
    "method",
    "design_snr_db",
    "channel_snr_db",
    "blocks",
    "block_errs",
    "bler",
    "ber",
    "seed",
)


def bpsk_awgn(x: np.ndarray, snr: float, rng: np.random.Generator) -> np.ndarray:
    """Map bits to ``1 - 2x`` and add N(0, N0/2) noise."""
    if not snr > 0:
        raise ValueError("channel SNR must be positive")
    s = 1.0 - 2.0 * np.asarray(x, dtype=float)
    if math.isinf(snr):
        return s
    sigma = math.sqrt(0.5 / snr)
    return s + sigma * rng.standard_normal(s.shape)


def block_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass
class TrialConfig:
    code: PolarCodeSpec
    snr: float  # linear Es/N0
    max_blocks: int = 10**7
    target_block_errors: int = 100
    seed: int = 0
    workers: int = 1
    all_zero: bool = False
    chunk_blocks: int | None = None

    @property
    def chunk(self) -> int:
        if self.chunk_blocks:
            return self.chunk_blocks
        return max(1, min(1024, (1 << 21) // self.code.N))


@dataclass
class SimResult:
    blocks: int
    block_errors: int
    bit_errors: int
    seed: int
    stop_reason: str
    bits_per_block: int = 0
    interval: tuple[float, float] = field(default=(0.0, 1.0))

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0

    @property
    def ber(self) -> float:
        total = self.blocks * self.bits_per_block
        return self.bit_errors / total if total else 0.0


def _run_chunk(code: PolarCodeSpec, snr: float, seed: int, start: int, count: int, all_zero: bool):
    n0 = 1.0 / snr
    msgs = np.zeros((count, code.K), dtype=np.uint8)
    ys = np.empty((count, code.N))
    for j in range(count):
        rng = block_rng(seed, start + j)
        if not all_zero:
            msgs[j] = rng.integers(0, 2, code.K, dtype=np.uint8)
        x = encode(code, msgs[j])
        ys[j] = bpsk_awgn(x, snr, rng)
    decoded, _ = sc_decode_batch(code, channel_llr(ys, 1.0, n0))
    wrong = decoded != msgs
    bit_errs = wrong.sum(axis=1)
    return int((bit_errs > 0).sum()), int(bit_errs.sum())


def run_trials(cfg: TrialConfig) -> SimResult:
    """Monte-Carlo BLER/BER of SC decoding on ``cfg.code`` at ``cfg.snr``.

    Stops after the first chunk that brings the block-error count to
    ``target_block_errors`` or when ``max_blocks`` blocks have run.
    """
    code = cfg.code
    chunk = cfg.chunk
    starts = list(range(0, cfg.max_blocks, chunk))
    blocks = block_errs = bit_errs = 0
    reason = "max_blocks"

    def consume(results, batch_starts):
        nonlocal blocks, block_errs, bit_errs, reason
        for s, (be, bits) in zip(batch_starts, results):
            blocks += min(chunk, cfg.max_blocks - s)
            block_errs += be
            bit_errs += bits
            if block_errs >= cfg.target_block_errors:
                reason = "target_errors"
                return True
        return False

    if cfg.workers <= 1:
        for s in starts:
            res = _run_chunk(code, cfg.snr, cfg.seed, s, min(chunk, cfg.max_blocks - s), cfg.all_zero)
            if consume([res], [s]):
                break
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for w in range(0, len(starts), cfg.workers):
                window = starts[w : w + cfg.workers]
                futs = [
                    pool.submit(
                        _run_chunk, code, cfg.snr, cfg.seed, s,
                        min(chunk, cfg.max_blocks - s), cfg.all_zero,
                    )
                    for s in window
                ]
                if consume([f.result() for f in futs], window):
                    break
    return SimResult(
        blocks=blocks,
        block_errors=block_errs,
        bit_errors=bit_errs,
        seed=cfg.seed,
        stop_reason=reason,
        bits_per_block=code.K,
        interval=clopper_pearson(block_errs, blocks),
    )


def genie_bit_channel_probe(
    n: int, snr: float, blocks: int, seed: int = 0, chunk: int | None = None
) -> np.ndarray:
    """Empirical Pr(L < 0) of every bit channel on the all-zero codeword,
    with every earlier decision fixed to the correct value.

    Returned in the same index order as the construction butterflies.
    """
    N = 1 << n
    chunk = chunk or max(1, min(blocks, (1 << 20) // N))
    n0 = 1.0 / snr
    errors = np.zeros(N, dtype=np.int64)
    done = 0
    c = 0
    while done < blocks:
        m = min(chunk, blocks - done)
        rng = block_rng(seed, c)
        y = bpsk_awgn(np.zeros((m, N), dtype=np.uint8), snr, rng)
        leaf = genie_leaf_llrs(channel_llr(y, 1.0, n0), n)
        errors += (leaf < 0).sum(axis=0)
        done += m
        c += 1
    return errors / blocks


def append_campaign_row(path: str | os.PathLike, code: PolarCodeSpec, snr: float, result: SimResult) -> dict:
    row = {
        "n": code.n,
        "K": code.K,
        "method": code.method,
        "design_snr_db": code.design_snr_db,
        "channel_snr_db": round(linear_to_db(snr), 6),
        "blocks": result.blocks,
        "block_errs": result.block_errors,
        "bler": f"{result.bler:.6e}",
        "ber": f"{result.ber:.6e}",
        "seed": result.seed,
    }
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CAMPAIGN_FIELDS)
        if new:
            w.writeheader()
        w.writerow(row)
    return row
