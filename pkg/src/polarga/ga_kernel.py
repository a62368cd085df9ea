"""Scalar kernels for Gaussian-approximation (GA) polar code construction.

A Gaussian LLR with mean ``gamma`` has variance ``2 * gamma``. The GA tracks
that single mean through the polarization butterfly. The check-node update
needs the function

    phi(gamma) = 1 - E[tanh(L / 2)],   L ~ N(gamma, 2 gamma)

and its inverse. ``phi`` spans hundreds of decades over the gamma range a
long code visits, so the improved construction works with its logarithm
``xi(gamma) = log phi(gamma)`` through a piecewise closed form ``xi_hat``.

Every function here accepts a scalar or a numpy array. A scalar input
returns a Python float.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

__all__ = [
    "GaVariant",
    "KernelConstants",
    "CONSTANTS",
    "Z0",
    "Z1",
    "Z2",
    "q_func",
    "q_inv",
    "xi_hat",
    "xi_hat_inv",
    "log_phi_chung",
    "log_phi_ha",
    "check_node_transform",
    "variable_node_transform",
    "bisect_decreasing",
]


class GaVariant(str, enum.Enum):
    """Check-node mean update used by a GA construction run."""

    IMPROVED = "improved-ga"
    CONVENTIONAL = "conventional-ga"
    HA = "ha-ga"

    @classmethod
    def parse(cls, value: "GaVariant | str") -> "GaVariant":
        if isinstance(value, cls):
            return value
        aliases = {
            "improved": cls.IMPROVED,
            "conventional": cls.CONVENTIONAL,
            "chung": cls.CONVENTIONAL,
            "ha": cls.HA,
        }
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class KernelConstants:
    # middle fit on (gamma0, gamma1]
    a0: float = -0.002706
    a1: float = -0.476711
    a2: float = 0.0512
    # Chung et al. power fit, log phi = a * gamma**c + b
    a: float = -0.4527
    b: float = 0.0218
    c: float = 0.86
    # large-gamma correction inside the asymptotic log form
    kappa0: float = 8.554
    gamma0: float = 0.2
    gamma1: float = 0.7
    gamma2: float = 10.0
    # Ha et al. small-gamma correction, log phi = alpha * gamma + beta * gamma**2
    alpha_ha: float = -0.4856
    beta_ha: float = 0.0564
    gamma_th_ha: float = 0.867861
    # switch between the Chung power fit and the bound average
    gamma_th_chung: float = 10.0


CONSTANTS = KernelConstants()

# Relative tolerance on gamma and iteration cap for every bisection here.
BISECT_RTOL = 1e-12
BISECT_MAXITER = 200

_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_PI2_4 = math.pi**2 / 4.0
_SQRT2 = math.sqrt(2.0)


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


# --------------------------------------------------------------------------- Q-function


def q_func(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2."""
    arr, scalar = _as_array(x)
    return _out(0.5 * erfc(arr / _SQRT2), scalar)


def q_inv(p):
    """Inverse of :func:`q_func` on (0, 1/2], by bisection on ``q_func``.

    Raises ``ValueError`` for p outside (0, 1/2].
    """
    arr, scalar = _as_array(p)
    if np.any(~(arr > 0.0)) or np.any(arr > 0.5):
        raise ValueError("q_inv expects 0 < p <= 1/2")
    lo = np.zeros_like(arr)
    # Q(40) ~ 3.7e-350 underflows; every representable p has its root below 40.
    hi = np.full_like(arr, 40.0)
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        above = q_func(mid) > arr
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all((hi - lo) <= np.spacing(hi)):
            break
    # pick whichever endpoint reproduces p more closely
    err_lo = np.abs(q_func(lo) - arr)
    err_hi = np.abs(q_func(hi) - arr)
    x = np.where(err_lo <= err_hi, lo, hi)
    return _out(x, scalar)


# --------------------------------------------------------------------------- bisection


def bisect_decreasing(
    func: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    rtol: float = BISECT_RTOL,
    maxiter: int = BISECT_MAXITER,
) -> np.ndarray:
    """Vectorized bisection for ``func(x) = target`` with ``func`` decreasing.

    ``lo`` and ``hi`` must bracket the root. Each element stops refining once
    ``hi - lo <= rtol * hi``; the loop ends when all have converged or after
    ``maxiter`` halvings. Returns the bracket midpoints.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    target = np.broadcast_to(np.asarray(target, dtype=float), lo.shape)
    for _ in range(maxiter):
        active = (hi - lo) > rtol * np.abs(hi)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        above = func(mid) > target
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------- xi_hat


def _xi_cubic(g):
    return -0.5 * g + 0.125 * g**2 - 0.125 * g**3


def _xi_middle(g):
    k = CONSTANTS
    return k.a0 + k.a1 * g + k.a2 * g**2


def _xi_chung(g):
    k = CONSTANTS
    return k.a * np.power(g, k.c) + k.b


def _xi_large(g):
    k = CONSTANTS
    return (
        -0.25 * g
        + _LOG_SQRT_PI
        - 0.5 * np.log(g)
        + np.log1p(-_PI2_4 / g + k.kappa0 / g**2)
    )


def _xi_hat_array(g: np.ndarray) -> np.ndarray:
    k = CONSTANTS
    out = np.empty_like(g)
    m0 = g <= k.gamma0
    m1 = (g > k.gamma0) & (g <= k.gamma1)
    m2 = (g > k.gamma1) & (g < k.gamma2)
    m3 = g >= k.gamma2
    out[m0] = _xi_cubic(g[m0])
    out[m1] = _xi_middle(g[m1])
    out[m2] = _xi_chung(g[m2])
    out[m3] = _xi_large(g[m3])
    return out


def xi_hat(gamma):
    """Piecewise closed form of log phi(gamma) for gamma > 0.

    Four branches: the small-gamma cubic up to 0.2, a fitted quadratic up to
    0.7, the Chung power law below 10, and the asymptotic log form with the
    ``kappa0`` correction from 10 upward.
    """
    g, scalar = _as_array(gamma)
    if np.any(~(g > 0.0)) or np.any(~np.isfinite(g)):
        raise ValueError("xi_hat expects finite gamma > 0")
    return _out(_xi_hat_array(np.atleast_1d(g)).reshape(g.shape), scalar)


Z0 = float(xi_hat(CONSTANTS.gamma0))
Z1 = float(xi_hat(CONSTANTS.gamma1))
Z2 = float(xi_hat(CONSTANTS.gamma2))


def _xi_large_inv(z: np.ndarray) -> np.ndarray:
    k = CONSTANTS
    lo = np.full_like(z, k.gamma2)
    hi = np.maximum(4.0 * k.gamma2, -8.0 * z)
    # expand until xi(hi) <= z; -8z already suffices but keep the guard
    for _ in range(64):
        short = _xi_large(hi) > z
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    return bisect_decreasing(_xi_large, z, lo, hi)


def _xi_hat_inv_array(z: np.ndarray) -> np.ndarray:
    k = CONSTANTS
    out = np.empty_like(z)
    # z == Z0 goes to the quadratic root: the series inverse is 1.7e-3 off there
    m0 = z > Z0
    m1 = (z >= Z1) & (z <= Z0)
    m2 = (z > Z2) & (z < Z1)
    m3 = z <= Z2
    zz = z[m0]
    out[m0] = -2.0 * zz + zz**2 + zz**3
    zz = z[m1]
    out[m1] = (-k.a1 - np.sqrt(k.a1**2 - 4.0 * k.a2 * (k.a0 - zz))) / (2.0 * k.a2)
    zz = z[m2]
    out[m2] = np.power((zz - k.b) / k.a, 1.0 / k.c)
    if np.any(m3):
        out[m3] = _xi_large_inv(z[m3])
    return out


def xi_hat_inv(z):
    """Inverse of :func:`xi_hat` for z < 0.

    Closed forms on the three upper branches (a series inverse of the cubic,
    the quadratic root, the inverted power law); bisection on the asymptotic
    branch for z <= Z2.
    """
    zz, scalar = _as_array(z)
    if np.any(~(zz < 0.0)):
        raise ValueError("xi_hat_inv expects z < 0")
    return _out(_xi_hat_inv_array(np.atleast_1d(zz)).reshape(zz.shape), scalar)


# --------------------------------------------------------------------------- conventional / Ha


def log_phi_chung(gamma):
    """log phi under the conventional GA: Chung power fit, then the bound average."""
    g = np.asarray(gamma, dtype=float)
    k = CONSTANTS
    small = g <= k.gamma_th_chung
    gs = np.where(small, g, 1.0)
    gl = np.where(small, k.gamma_th_chung + 1.0, g)
    low = k.a * np.power(gs, k.c) + k.b
    high = _LOG_SQRT_PI - 0.5 * np.log(gl) - 0.25 * gl + np.log1p(-10.0 / (7.0 * gl))
    return np.where(small, low, high)


def log_phi_ha(gamma):
    """log phi with the Ha et al. correction below ``gamma_th_ha``."""
    g = np.asarray(gamma, dtype=float)
    k = CONSTANTS
    return np.where(
        g < k.gamma_th_ha,
        k.alpha_ha * g + k.beta_ha * g**2,
        log_phi_chung(g),
    )


def _linear_domain_transform(g: np.ndarray, log_phi) -> np.ndarray:
    # Probability-domain update as the conventional GA does it: the
    # cancellation in 1 - (1 - phi)**2 is kept on purpose.
    phi = np.exp(log_phi(g))
    target = 1.0 - (1.0 - phi) ** 2
    lo = np.zeros_like(g)
    hi = np.maximum(g, CONSTANTS.gamma_th_chung)

    def phi_lin(x):
        return np.exp(log_phi(x))

    return bisect_decreasing(phi_lin, target, lo, hi)


def _improved_transform(g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    small = g <= CONSTANTS.gamma0
    gs = g[small]
    out[small] = 0.5 * gs**2 - 0.5 * gs**3 + (2.0 / 3.0) * gs**4
    gl = g[~small]
    if gl.size:
        z = _xi_hat_array(gl)
        out[~small] = _xi_hat_inv_array(z + np.log(2.0 - np.exp(z)))
    return out


def check_node_transform(gamma, variant: GaVariant | str = GaVariant.IMPROVED):
    """Mean LLR after a check node fed by two i.i.d. N(gamma, 2 gamma) LLRs."""
    variant = GaVariant.parse(variant)
    g, scalar = _as_array(gamma)
    if np.any(g < 0.0) or np.any(np.isnan(g)):
        raise ValueError("check_node_transform expects gamma >= 0")
    flat = np.atleast_1d(g).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0.0
    if np.any(pos):
        gp = flat[pos]
        if variant is GaVariant.IMPROVED:
            out[pos] = _improved_transform(gp)
        elif variant is GaVariant.CONVENTIONAL:
            out[pos] = _linear_domain_transform(gp, log_phi_chung)
        else:
            out[pos] = _linear_domain_transform(gp, log_phi_ha)
    return _out(out.reshape(g.shape), scalar)


def variable_node_transform(gamma, gamma_max: float = math.inf):
    """Mean LLR after a variable node: exactly ``2 * gamma``.

    Results above ``gamma_max`` are clipped to it; the default never clips.
    """
    g, scalar = _as_array(gamma)
    if np.any(g < 0.0):
        raise ValueError("variable_node_transform expects gamma >= 0")
    return _out(np.minimum(2.0 * g, gamma_max), scalar)
