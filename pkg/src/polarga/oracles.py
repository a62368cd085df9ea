"""Independent reference computations for the GA kernels.

Nothing here is used during construction. These routines check the closed
forms in :mod:`polarga.ga_kernel` and the Gaussian model itself, using
fixed-node quadrature, the small- and large-gamma series, and Monte Carlo.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import bernoulli, erfc

from .codec import boxplus

__all__ = [
    "QuadratureSpec",
    "SeriesTruncation",
    "psi_numeric",
    "log_phi_numeric",
    "psi_series_small",
    "kummer_1f1_poly",
    "phi_series_large",
    "large_gamma_coefficients",
    "hurwitz_zeta",
    "exact_mean_boxplus",
    "mc_mean_boxplus",
    "EXACT_MEAN_SWITCH",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule: ``panels`` panels of ``order`` nodes each,
    spanning ``half_width`` standard deviations either side of the mean."""

    panels: int = 400
    order: int = 16
    half_width: float = 40.0
    scheme: str = "composite-gauss-legendre"

    @property
    def nodes(self) -> int:
        return self.panels * self.order

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.panels, self.order, self.half_width, self.scheme)


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=16)
def _legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _composite(f, lo: float, hi: float, spec: QuadratureSpec) -> float:
    x0, w0 = _legendre(spec.order)
    edges = np.linspace(lo, hi, spec.panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = mid + half * x0[None, :]
    return float(np.sum(f(x) * (half * w0[None, :])))


def psi_numeric(gamma: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """E[tanh(L/2)] for L ~ N(gamma, 2 gamma), by quadrature over the density."""
    if not gamma > 0:
        raise ValueError("psi_numeric expects gamma > 0")
    sigma = math.sqrt(2.0 * gamma)
    norm = 1.0 / math.sqrt(4.0 * math.pi * gamma)

    def f(x):
        return np.tanh(0.5 * x) * norm * np.exp(-((x - gamma) ** 2) / (4.0 * gamma))

    w = spec.half_width * sigma
    return _composite(f, gamma - w, gamma + w, spec)


def log_phi_numeric(gamma: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """log(1 - psi(gamma)) computed without forming 1 - psi.

    Uses phi = exp(-gamma/4) / sqrt(pi gamma) * int sech(x/2)/2 exp(-x^2/(4 gamma)) dx,
    whose integrand never underflows near its peak.
    """
    if not gamma > 0:
        raise ValueError("log_phi_numeric expects gamma > 0")
    sigma = math.sqrt(2.0 * gamma)
    # sech(x/2) is below 1e-30 past |x| = 140
    w = min(spec.half_width * sigma, 140.0)

    def f(x):
        return 0.5 / np.cosh(0.5 * x) * np.exp(-(x**2) / (4.0 * gamma))

    integral = _composite(f, -w, w, spec)
    return -0.25 * gamma - 0.5 * math.log(math.pi * gamma) + math.log(integral)


# --------------------------------------------------------------------------- small-gamma series


@dataclass(frozen=True)
class SeriesTruncation:
    kmax: int = 3

    def __post_init__(self):
        if self.kmax < 1:
            raise ValueError("kmax must be positive")

    @property
    def bernoulli_even(self) -> np.ndarray:
        """B_2, B_4, ..., B_{2 kmax}."""
        return bernoulli(2 * self.kmax)[2::2]


def kummer_1f1_poly(a: int, b: float, x: float) -> float:
    """1F1(a; b; x) for a nonpositive integer ``a``, where the series terminates."""
    if int(a) != a or a > 0:
        raise ValueError("kummer_1f1_poly needs a nonpositive integer first parameter")
    a = int(a)
    term = 1.0
    total = 1.0
    for j in range(-a):
        term *= (a + j) / (b + j) * x / (j + 1)
        total += term
    return total


def psi_series_small(gamma: float, trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Bernoulli / confluent-hypergeometric series for psi, first ``kmax`` terms."""
    if not gamma > 0:
        raise ValueError("psi_series_small expects gamma > 0")
    if gamma > 0.5:
        warnings.warn("psi_series_small is only validated for gamma <= 0.5", stacklevel=2)
    B = trunc.bernoulli_even
    total = 0.0
    for k in range(1, trunc.kmax + 1):
        coef = (4.0**k - 1.0) * B[k - 1] / math.factorial(k)
        total += coef * gamma**k * kummer_1f1_poly(1 - k, 1.5, -gamma / 4.0)
    return total


# --------------------------------------------------------------------------- large-gamma series


def hurwitz_zeta(m: int, q: float, terms: int = 200) -> float:
    """Hurwitz zeta sum_{l>=0} (l + q)^-m for m >= 2.

    Direct summation of ``terms`` terms plus an Euler-Maclaurin tail; the
    first neglected tail correction is checked against 1e-14.
    """
    if m < 2:
        raise ValueError("hurwitz_zeta needs m >= 2")
    l = np.arange(terms, dtype=float)
    head = float(np.sum((l + q) ** (-m)))
    a = terms + q
    tail = a ** (1 - m) / (m - 1) + 0.5 * a ** (-m) + m / 12.0 * a ** (-m - 1)
    tail -= m * (m + 1) * (m + 2) / 720.0 * a ** (-m - 3)
    remainder = m * (m + 1) * (m + 2) * (m + 3) * (m + 4) / 30240.0 * a ** (-m - 5)
    if remainder > 1e-14 * max(1.0, head):
        return hurwitz_zeta(m, q, terms * 4)
    return head + tail


def large_gamma_coefficients(kmax: int = 3) -> np.ndarray:
    """Coefficients c_k of phi = sqrt(pi/gamma) e^{-gamma/4} sum_k c_k gamma^-k.

    Built from differences of Hurwitz zeta values at q = 1/4 and 3/4. The
    k = 0 difference is pi (a conditionally convergent sum), used directly.
    """
    c = [1.0]
    for k in range(1, kmax + 1):
        diff = hurwitz_zeta(2 * k + 1, 0.25) - hurwitz_zeta(2 * k + 1, 0.75)
        c.append((-1) ** k * math.factorial(2 * k) / math.factorial(k) / 16.0**k * diff / math.pi)
    return np.asarray(c)


_CLOSED_LARGE = (1.0, -math.pi**2 / 4, 5 * math.pi**4 / 32, -61 * math.pi**6 / 384)


def phi_series_large(gamma: float) -> float:
    """log phi from the large-gamma expansion truncated after gamma^-3."""
    if gamma < 10.0:
        raise ValueError("phi_series_large is defined for gamma >= 10")
    s = sum(c / gamma**k for k, c in enumerate(_CLOSED_LARGE))
    return -0.25 * gamma + 0.5 * math.log(math.pi) - 0.5 * math.log(gamma) + math.log(s)


# --------------------------------------------------------------------------- exact boxplus mean

# below this gamma the rescaled (x = z / sqrt(gamma)) integrand is used
EXACT_MEAN_SWITCH = 4.0


def _q(x):
    return 0.5 * erfc(x / math.sqrt(2.0))


def _mean_integrand_z(z: float, g: float) -> float:
    s = math.sqrt(2.0 * g)
    first = (
        z
        * math.exp(-((z - g) ** 2) / (4.0 * g))
        * (-math.expm1(-z))
        * (_q((z - g) / s) - _q((z + g) / s))
    )
    second = (
        math.log1p(math.exp(-z))
        / math.sqrt(2.0)
        * (
            math.exp(-(z**2) / (8.0 * g))
            - 0.5 * math.exp(-((z - 2.0 * g) ** 2) / (8.0 * g)) * (1.0 + math.exp(-z))
        )
    )
    return (first - second) / math.sqrt(math.pi * g)


def _mean_integrand_x(x: float, g: float) -> float:
    r = math.sqrt(g)
    first = (
        r
        * x
        * math.exp(-((x - r) ** 2) / 4.0)
        * (-math.expm1(-r * x))
        * (_q((x - r) / math.sqrt(2.0)) - _q((x + r) / math.sqrt(2.0)))
    )
    second = (
        math.log1p(math.exp(-r * x))
        / math.sqrt(2.0)
        * (
            math.exp(-(x**2) / 8.0)
            - 0.5 * math.exp(-((x - 2.0 * r) ** 2) / 8.0) * (1.0 + math.exp(-r * x))
        )
    )
    return (first - second) / math.sqrt(math.pi)


def exact_mean_boxplus(gamma: float, epsrel: float = 1e-10) -> float:
    """E[L_a boxplus L_b] for independent L_a, L_b ~ N(gamma, 2 gamma).

    One-dimensional integral over the magnitude variable, combining the
    order-statistics density of the min-sum term with the Rice and Rayleigh
    densities of |L_a + L_b| and |L_a - L_b|. Raises ``RuntimeError`` if the
    adaptive quadrature reports non-convergence.
    """
    if not gamma > 0:
        raise ValueError("exact_mean_boxplus expects gamma > 0")
    g = float(gamma)
    if g < EXACT_MEAN_SWITCH:
        upper = 40.0 + 2.0 * math.sqrt(g) + 40.0 / math.sqrt(g)
        breaks = sorted({math.sqrt(g), 2.0 * math.sqrt(g)})
        f = _mean_integrand_x
    else:
        upper = 2.0 * g + 40.0 * math.sqrt(2.0 * g) + 60.0
        breaks = [g, 2.0 * g]
        f = _mean_integrand_z
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(
                f, 0.0, upper, args=(g,), points=breaks, epsabs=1e-13, epsrel=epsrel, limit=400
            )
        except integrate.IntegrationWarning as exc:
            raise RuntimeError(f"exact_mean_boxplus did not converge at gamma={g}") from exc
    return val


def mc_mean_boxplus(
    gamma: float, trials: int = 10**6, seed: int = 0, chunk: int = 10**6
) -> tuple[float, float]:
    """Monte-Carlo mean of the exact boxplus of two N(gamma, 2 gamma) LLRs.

    Returns ``(mean, standard_error)``; deterministic for a given seed.
    """
    if trials < 10**4:
        raise ValueError("mc_mean_boxplus needs at least 1e4 trials")
    rng = np.random.default_rng(seed)
    sd = math.sqrt(2.0 * gamma)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        a = gamma + sd * rng.standard_normal(m)
        b = gamma + sd * rng.standard_normal(m)
        out = boxplus(a, b)
        total += float(out.sum())
        total_sq += float(np.dot(out, out))
        done += m
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0) * trials / (trials - 1)
    return mean, math.sqrt(var / trials)
