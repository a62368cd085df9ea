"""Bit-channel reliabilities, information-set selection and BLER estimates.

Two butterflies produce per-channel reliabilities for ``N = 2**n`` bit
channels: the GA mean-LLR recursion (any :class:`GaVariant`) and the LLR
flipping-probability recursion. Both emit values in the code's index space
(see :mod:`polarga.codec`).

SNRs are linear Es/N0 throughout this module; use :func:`db_to_linear` at
the edges.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import ga_kernel
from .ga_kernel import GaVariant, q_func, q_inv

__all__ = [
    "Method",
    "ReliabilityVector",
    "PolarCodeSpec",
    "BlerEstimate",
    "db_to_linear",
    "linear_to_db",
    "run_ga",
    "run_flipping",
    "reliabilities",
    "select_info_set",
    "select_info_set_full_sort",
    "estimate_bler",
    "min_estimated_bler",
    "find_design_snr",
    "P_MIN",
    "CODE_SPEC_HEADER",
]

P_MIN = 1e-300
CODE_SPEC_HEADER = "# polarga code-spec v1"
RELIABILITY_HEADER = "# polarga reliability v1"

MAX_N = 22


class Method(str, enum.Enum):
    IMPROVED_GA = "improved-ga"
    CONVENTIONAL_GA = "conventional-ga"
    HA_GA = "ha-ga"
    LLR_FLIPPING = "llr-flipping"

    @classmethod
    def parse(cls, value: "Method | GaVariant | str") -> "Method":
        if isinstance(value, cls):
            return value
        if isinstance(value, GaVariant):
            return cls(value.value)
        key = str(value).lower()
        if key in ("flipping", "flip"):
            return cls.LLR_FLIPPING
        try:
            return cls(GaVariant.parse(key).value)
        except ValueError:
            return cls(key)

    @property
    def variant(self) -> GaVariant | None:
        if self is Method.LLR_FLIPPING:
            return None
        return GaVariant(self.value)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(lin: float) -> float:
    return 10.0 * math.log10(lin)


@dataclass
class ReliabilityVector:
    """Per-bit-channel quality: mean LLR (larger is better) or flip probability."""

    kind: str  # "mean-llr" or "flip-prob"
    values: np.ndarray
    n: int
    design_snr: float
    method: Method

    def __post_init__(self):
        if self.kind not in ("mean-llr", "flip-prob"):
            raise ValueError(f"unknown reliability kind {self.kind!r}")
        if self.values.shape != (1 << self.n,):
            raise ValueError("reliability length must be 2**n")

    @property
    def N(self) -> int:
        return 1 << self.n

    def bit_error_probs(self) -> np.ndarray:
        if self.kind == "mean-llr":
            return q_func(np.sqrt(self.values / 2.0))
        return self.values

    def to_csv(self) -> str:
        lines = [
            RELIABILITY_HEADER,
            f"# kind={self.kind} n={self.n} method={self.method.value} "
            f"design_snr_db={linear_to_db(self.design_snr):.6f}",
            "index,value",
        ]
        lines += [f"{i},{v:.17g}" for i, v in enumerate(self.values)]
        return "\n".join(lines) + "\n"


@dataclass
class PolarCodeSpec:
    n: int
    K: int
    info_set: np.ndarray
    method: str = ""
    design_snr_db: float = float("nan")
    frozen_value: int = 0

    def __post_init__(self):
        self.info_set = np.asarray(self.info_set, dtype=np.int64)
        if not 0 <= self.K <= self.N:
            raise ValueError("K out of range")
        if self.info_set.shape != (self.K,):
            raise ValueError("info_set must have K entries")
        if self.K and (
            np.any(np.diff(self.info_set) <= 0)
            or self.info_set[0] < 0
            or self.info_set[-1] >= self.N
        ):
            raise ValueError("info_set must be strictly ascending indices in [0, N)")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def frozen_set(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.info_set] = False
        return np.flatnonzero(mask)

    def to_json(self) -> str:
        body = {
            "n": self.n,
            "K": self.K,
            "method": self.method,
            "design_snr_db": None if math.isnan(self.design_snr_db) else self.design_snr_db,
            "info_set": [int(i) for i in self.info_set],
        }
        return CODE_SPEC_HEADER + "\n" + json.dumps(body) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PolarCodeSpec":
        lines = text.splitlines()
        if not lines or lines[0].strip() != CODE_SPEC_HEADER:
            raise ValueError("not a polarga code-spec file (bad header)")
        body = json.loads("\n".join(line for line in lines[1:] if not line.startswith("#")))
        snr = body.get("design_snr_db")
        return cls(
            n=int(body["n"]),
            K=int(body["K"]),
            info_set=np.asarray(body["info_set"], dtype=np.int64),
            method=body.get("method", ""),
            design_snr_db=float("nan") if snr is None else float(snr),
        )


@dataclass
class BlerEstimate:
    value: float
    bit_error_probs: np.ndarray = field(repr=False)


# --------------------------------------------------------------------------- butterflies


def _check_args(n: int, snr: float) -> None:
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must be in [1, {MAX_N}]")
    if not snr > 0:
        raise ValueError("design SNR must be positive (linear Es/N0)")


def run_ga(n: int, snr: float, variant: GaVariant | str = GaVariant.IMPROVED) -> ReliabilityVector:
    """Mean LLR of every bit channel by the GA butterfly.

    Starts from ``4 * snr`` and, at stage ``i``, replaces the first half of
    each length-``2**i`` prefix with its check-node image and writes the
    doubled old values into the second half.
    """
    variant = GaVariant.parse(variant)
    _check_args(n, snr)
    N = 1 << n
    gamma = np.zeros(N)
    gamma[0] = 4.0 * snr
    for i in range(1, n + 1):
        half = 1 << (i - 1)
        u = gamma[:half].copy()
        gamma[:half] = ga_kernel.check_node_transform(u, variant)
        gamma[half : 2 * half] = ga_kernel.variable_node_transform(u)
    return ReliabilityVector("mean-llr", gamma, n, snr, Method.parse(variant))


def run_flipping(n: int, snr: float) -> ReliabilityVector:
    """Flip probability Pr(L < 0) of every bit channel.

    Check nodes are exact (``2p(1-p)``); variable nodes assume a Gaussian
    input. Values are clamped to ``[P_MIN, 1/2]``.
    """
    _check_args(n, snr)
    N = 1 << n
    p = np.zeros(N)
    p[0] = np.clip(q_func(math.sqrt(2.0 * snr)), P_MIN, 0.5)
    for i in range(1, n + 1):
        half = 1 << (i - 1)
        z = p[:half].copy()
        p[:half] = np.clip(2.0 * z * (1.0 - z), P_MIN, 0.5)
        p[half : 2 * half] = np.clip(q_func(math.sqrt(2.0) * q_inv(z)), P_MIN, 0.5)
    return ReliabilityVector("flip-prob", p, n, snr, Method.LLR_FLIPPING)


def reliabilities(n: int, snr: float, method: Method | str) -> ReliabilityVector:
    method = Method.parse(method)
    if method is Method.LLR_FLIPPING:
        return run_flipping(n, snr)
    return run_ga(n, snr, method.variant)


# --------------------------------------------------------------------------- selection


def _score(rel: ReliabilityVector) -> np.ndarray:
    # larger is better for both kinds
    return rel.values if rel.kind == "mean-llr" else -rel.values


def _ranked(score: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # best first; equal scores go to the lower index
    return idx[np.lexsort((idx, -score))]


def _make_spec(rel: ReliabilityVector, chosen: np.ndarray) -> PolarCodeSpec:
    return PolarCodeSpec(
        n=rel.n,
        K=int(chosen.size),
        info_set=np.sort(chosen),
        method=rel.method.value,
        design_snr_db=linear_to_db(rel.design_snr),
    )


def select_info_set_full_sort(rel: ReliabilityVector, K: int) -> PolarCodeSpec:
    """Reference selection: full sort, ties to the lower index."""
    if not 0 <= K <= rel.N:
        raise ValueError(f"K must be in [0, {rel.N}]")
    order = _ranked(_score(rel), np.arange(rel.N))
    return _make_spec(rel, order[:K])


def select_info_set(
    rel: ReliabilityVector,
    K: int,
    gamma_sat: float = 200.0,
    gamma_floor: float = 1e-2,
    p_sat: float = 1e-30,
    p_eps: float = 1e-6,
) -> PolarCodeSpec:
    """Pick the ``K`` most reliable channels.

    Polarized channels are settled before sorting: those above the
    saturation threshold are always taken and those near zero mean LLR (or
    near flip probability 1/2) are always dropped, so only the middle band
    is sorted. When the thresholds do not straddle the K-th channel the
    shortcut is skipped and everything is sorted. The result equals
    :func:`select_info_set_full_sort`.
    """
    N = rel.N
    if not 0 <= K <= N:
        raise ValueError(f"K must be in [0, {N}]")
    v = rel.values
    if rel.kind == "mean-llr":
        good = v >= gamma_sat
        bad = v < gamma_floor
    else:
        good = v <= p_sat
        bad = v > 0.5 - p_eps
    n_good = int(good.sum())
    middle = np.flatnonzero(~good & ~bad)
    if n_good <= K <= n_good + middle.size:
        picked = _ranked(_score(rel)[middle], middle)[: K - n_good]
        chosen = np.concatenate((np.flatnonzero(good), picked))
        return _make_spec(rel, chosen)
    return select_info_set_full_sort(rel, K)


# --------------------------------------------------------------------------- BLER


def estimate_bler(code: PolarCodeSpec, rel: ReliabilityVector) -> BlerEstimate:
    """``1 - prod(1 - P_b,i)`` over the information set, summed in log1p form."""
    if rel.n != code.n:
        raise ValueError(f"reliability length 2**{rel.n} does not match code 2**{code.n}")
    pb = rel.bit_error_probs()[code.info_set]
    value = max(0.0, -math.expm1(float(np.sum(np.log1p(-pb)))))
    return BlerEstimate(value=value, bit_error_probs=pb)


def min_estimated_bler(n: int, K: int, snr: float, method: Method | str) -> BlerEstimate:
    """Estimated BLER of the best K-channel code designed at ``snr`` itself."""
    rel = reliabilities(n, snr, method)
    return estimate_bler(select_info_set(rel, K), rel)


def find_design_snr(
    n: int,
    K: int,
    target_lo: float,
    target_hi: float,
    method: Method | str = Method.IMPROVED_GA,
    step_db: float = 0.01,
    window_db: tuple[float, float] = (-10.0, 10.0),
) -> float:
    """Smallest design SNR (dB, on a ``step_db`` grid) whose minimum estimated
    BLER falls inside ``[target_lo, target_hi]``.

    The curve is nonincreasing in SNR, so this bisects for the first grid
    point at or below ``target_hi`` and then checks it against ``target_lo``.
    Raises ``ValueError`` when no grid point in the window qualifies.
    """
    if not 0 < target_lo < target_hi < 1:
        raise ValueError("need 0 < target_lo < target_hi < 1")
    start, stop = window_db
    n_steps = int(round((stop - start) / step_db))
    grid = lambda k: round(start + k * step_db, 10)  # noqa: E731
    cache: dict[int, float] = {}

    def bler(k: int) -> float:
        if k not in cache:
            cache[k] = min_estimated_bler(n, K, db_to_linear(grid(k)), method).value
        return cache[k]

    if bler(n_steps) > target_hi:
        raise ValueError("target band not reached within the SNR window")
    lo, hi = 0, n_steps
    if bler(lo) <= target_hi:
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bler(mid) <= target_hi:
            hi = mid
        else:
            lo = mid
    if bler(hi) < target_lo:
        raise ValueError("no grid SNR lands inside the target band")
    return grid(hi)
