"""Polar encoder and exact-LLR successive-cancellation (SC) decoder.

Index convention
----------------
Information sets live in the index space of the vector ``v`` that enters the
Kronecker-power butterfly, ``x = v G_N`` with ``G_N = F^{(x)n}``. This is the
order in which the GA butterfly emits reliabilities. ``v`` is the
bit-reversal of the SC input vector ``u`` (``v = u B_N``), so the decoder
works on ``u`` in natural order and maps its decisions back through ``B_N``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .construction import PolarCodeSpec

__all__ = [
    "bit_reversal_permutation",
    "polar_transform",
    "encode",
    "boxplus",
    "channel_llr",
    "sc_decode",
    "sc_decode_batch",
    "genie_leaf_llrs",
]


def bit_reversal_permutation(n: int) -> np.ndarray:
    """Index array ``r`` with ``r[i]`` equal to ``i`` with its n bits reversed."""
    N = 1 << n
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def polar_transform(bits: np.ndarray) -> np.ndarray:
    """Multiply by ``G_N = [[1, 0], [1, 1]]^{(x)n}`` over GF(2) along the last axis.

    Works on any leading batch shape. ``G_N`` is its own inverse, so applying
    this twice returns the input.
    """
    x = np.array(bits, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")
    lead = x.shape[:-1]
    step = 1
    while step < N:
        view = x.reshape(*lead, N // (2 * step), 2, step)
        view[..., 0, :] ^= view[..., 1, :]
        step *= 2
    return x


def encode(code: "PolarCodeSpec", message) -> np.ndarray:
    """Encode ``K`` message bits (or a batch of shape ``(B, K)``) into codewords.

    Message bits go to the information positions in ascending index order,
    frozen positions carry 0.
    """
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != code.K:
        raise ValueError(f"message length {msg.shape[-1]} != K = {code.K}")
    v = np.zeros(msg.shape[:-1] + (code.N,), dtype=np.uint8)
    v[..., code.info_set] = msg
    return polar_transform(v)


def boxplus(a, b):
    """Exact check-node combination ``2 atanh(tanh(a/2) tanh(b/2))``.

    The sign is the product of the input signs and is attached separately.
    The magnitude uses ``2 atanh(t)`` while the tanh product ``t`` is below
    1/2, where that form keeps full relative accuracy for tiny outputs, and
    the min-sum form plus both log corrections above that, which stays
    stable for large and infinite inputs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sign = np.sign(a) * np.sign(b)
    x = np.abs(a)
    y = np.abs(b)
    t = np.tanh(0.5 * x) * np.tanh(0.5 * y)
    with np.errstate(invalid="ignore"):
        # inf - inf gives nan; that correction vanishes
        corr = np.log1p(np.exp(-(x + y))) - np.log1p(np.exp(-np.nan_to_num(np.abs(x - y))))
        corr = np.where(np.isinf(x) & np.isinf(y), 0.0, corr)
        mag = np.where(t < 0.5, 2.0 * np.arctanh(np.minimum(t, 0.5)), np.minimum(x, y) + corr)
    out = sign * mag
    return float(out) if out.ndim == 0 else out


def channel_llr(y, es: float = 1.0, n0: float = 1.0):
    """LLR of a BPSK symbol over AWGN: ``4 sqrt(Es) y / N0``."""
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    out = 4.0 * np.sqrt(es) / n0 * np.asarray(y, dtype=float)
    return float(out) if out.ndim == 0 else out


def _sc_node(llr: np.ndarray, frozen: np.ndarray, u_out: np.ndarray, fast: bool) -> np.ndarray:
    # Decodes the subtree for the natural-order code x = u F^{(x)m};
    # writes decisions into u_out and returns the re-encoded partial sums.
    m = llr.shape[1]
    if frozen.all():
        u_out[...] = 0
        return np.zeros(llr.shape, dtype=np.uint8)
    if m == 1:
        bit = np.signbit(llr).astype(np.uint8)
        u_out[...] = bit
        return bit
    if fast and not frozen.any():
        # rate-1 subtree: SC decisions re-encode to the hard decisions
        x = np.signbit(llr).astype(np.uint8)
        u_out[...] = polar_transform(x)
        return x
    h = m // 2
    a = llr[:, :h]
    b = llr[:, h:]
    x1 = _sc_node(boxplus(a, b), frozen[:h], u_out[:, :h], fast)
    x2 = _sc_node(b + np.where(x1 == 1, -a, a), frozen[h:], u_out[:, h:], fast)
    return np.concatenate((x1 ^ x2, x2), axis=1)


def sc_decode_batch(
    code: "PolarCodeSpec", channel_llrs: np.ndarray, fast: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """SC-decode a batch of shape ``(B, N)``.

    Returns ``(messages, v_hat)`` with shapes ``(B, K)`` and ``(B, N)``.
    ``v_hat`` is in the code's index space, so ``encode`` of the messages
    equals ``polar_transform(v_hat)``. ``fast`` enables the rate-0 and
    rate-1 subtree shortcuts, which give identical decisions.
    """
    llr = np.asarray(channel_llrs, dtype=float)
    if llr.ndim != 2 or llr.shape[1] != code.N:
        raise ValueError(f"expected shape (B, {code.N}), got {llr.shape}")
    if np.isnan(llr).any():
        raise ValueError("channel LLRs contain NaN")
    rev = bit_reversal_permutation(code.n)
    frozen_v = np.ones(code.N, dtype=bool)
    frozen_v[code.info_set] = False
    u = np.zeros(llr.shape, dtype=np.uint8)
    _sc_node(llr[:, rev], frozen_v[rev], u, fast)
    v_hat = u[:, rev]
    # frozen decisions are forced to 0 by construction
    return v_hat[:, code.info_set], v_hat


def sc_decode(code: "PolarCodeSpec", channel_llrs, fast: bool = True):
    """SC-decode a single received block; see :func:`sc_decode_batch`."""
    llr = np.asarray(channel_llrs, dtype=float)
    msg, v_hat = sc_decode_batch(code, llr[None, :], fast=fast)
    return msg[0], v_hat[0]


def _genie_node(llr: np.ndarray, out: np.ndarray) -> None:
    m = llr.shape[1]
    if m == 1:
        out[...] = llr
        return
    h = m // 2
    a = llr[:, :h]
    b = llr[:, h:]
    _genie_node(boxplus(a, b), out[:, :h])
    # every earlier decision is the true value 0
    _genie_node(a + b, out[:, h:])


def genie_leaf_llrs(channel_llrs: np.ndarray, n: int) -> np.ndarray:
    """Decision LLRs of every bit channel with all earlier bits known to be 0.

    Input shape ``(B, N)``; output shape ``(B, N)`` in the code's index space.
    """
    llr = np.asarray(channel_llrs, dtype=float)
    rev = bit_reversal_permutation(n)
    out = np.empty_like(llr)
    _genie_node(llr[:, rev], out)
    return out[:, rev]
