"""Closed-form AWGN performance of IFO estimation and signaling decoding.

Noise power is fixed at 1 and the SNR sets the signal power.  The peak
correlation power is modelled as a scaled non-central chi-square with two
degrees of freedom, each off-peak value as a scaled central one; the false
detection probability is ``P(max of K off-peak values > peak)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import QuadratureFailure
from .seq import M
from .txgen import N

QUAD_RTOL = 1e-6
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class StatParams:
    sigma_s2: float
    sigma_w2: float
    M: int
    N: int
    mu_peak: float
    var_peak: float  # variance of Re{peak numerator}
    var_out: float  # variance of Re{off-peak numerator}
    mu_den: float
    u1: float
    u2: float
    lambda1: float
    lambda2: float = 0.0


def stat_params(snr_db: float, m: int = M, n: int = N) -> StatParams:
    if m <= 0 or n <= 0:
        raise ValueError("sequence and transform lengths must be positive")
    sw2 = 1.0
    ss2 = 10 ** (snr_db / 10) * sw2
    mu_peak = m * ss2
    var_peak = (2 * m * ss2 * sw2 + m * sw2**2) / 2
    var_out = m * (sw2**2 + 2 * ss2 * sw2) / 2
    mu_den = m * (sw2 + ss2)
    return StatParams(
        sigma_s2=ss2,
        sigma_w2=sw2,
        M=m,
        N=n,
        mu_peak=mu_peak,
        var_peak=var_peak,
        var_out=var_out,
        mu_den=mu_den,
        u1=var_peak / mu_den**2,
        u2=var_out / mu_den**2,
        lambda1=mu_peak**2 / var_peak,
    )


def pdf_peak(x, p: StatParams):
    """Density of the peak correlation power, ``u1 * chi2_2(lambda1)``."""
    x = np.asarray(x, dtype=float)
    xs = np.where(x > 0, x, 0.0)
    arg = np.sqrt(p.lambda1 * xs / p.u1)
    # exp(-(x/u1 + lam)/2) * I0(arg) == exp(-(sqrt(x/u1) - sqrt(lam))**2 / 2) * i0e(arg)
    log_env = -0.5 * (np.sqrt(xs / p.u1) - math.sqrt(p.lambda1)) ** 2
    out = np.exp(log_env) * special.i0e(arg) / (2 * p.u1)
    return np.where(x > 0, out, 0.0)


def pdf_out(y, p: StatParams):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, np.exp(-np.where(y > 0, y, 0.0) / (2 * p.u2)) / (2 * p.u2), 0.0)


def pdf_max_out(z, p: StatParams, n: int | None = None):
    """Density of the largest of ``n - 1`` off-peak correlation powers."""
    n = p.N if n is None else n
    z = np.asarray(z, dtype=float)
    zs = np.where(z > 0, z, 0.0)
    t = zs / (2 * p.u2)
    # (n-1)/(2 u2) * (1 - e^-t)^(n-2) * e^-t, in log space
    log_cdf = np.log(-np.expm1(-t)) if n > 2 else np.zeros_like(t)
    with np.errstate(invalid="ignore"):
        dens = (n - 1) / (2 * p.u2) * np.exp((n - 2) * np.where(t > 0, log_cdf, 0.0) - t)
    return np.where(z > 0, dens, 0.0)


def _exceed_probability(x, p: StatParams, rivals: int):
    """``1 - F_out(x)**rivals``: chance some rival exceeds power ``x``."""
    t = np.asarray(x, dtype=float) / (2 * p.u2)
    return -np.expm1(rivals * np.log1p(-np.exp(-t)))


def false_detection_probability(p: StatParams, search_size: int) -> float:
    """``P(max over search_size - 1 wrong lags > correct lag)`` by quadrature."""
    rivals = search_size - 1
    if rivals <= 0:
        return 0.0
    upper = p.u1 * float(stats.ncx2.isf(TAIL_MASS, 2, p.lambda1))
    lower = p.u1 * float(stats.ncx2.ppf(TAIL_MASS, 2, p.lambda1))
    crossover = 2 * p.u2 * math.log(rivals)
    centre = p.u1 * (p.lambda1 + 2)
    breaks = sorted({b for b in (lower, crossover, centre) if 0 < b < upper})
    edges = [0.0, *breaks, upper]

    def integrand(x):
        return float(pdf_peak(x, p) * _exceed_probability(x, p, rivals))

    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL / 10, limit=500)
        total += val
        err += e
    # mass above `upper` is < TAIL_MASS and every rival term is <= 1
    if not math.isfinite(total) or err > QUAD_RTOL * total + TAIL_MASS * 1e-3:
        raise QuadratureFailure(f"quadrature did not converge: value {total:.3e}, error {err:.1e}")
    return min(max(total, 0.0), 1.0)


def p_false_ifo(p: StatParams, n: int | None = None) -> float:
    return false_detection_probability(p, p.N if n is None else n)


def p_err_sig(p: StatParams, m: int | None = None) -> float:
    return false_detection_probability(p, p.M if m is None else m)


def p_false_sig(p_ifo: float, p_sig: float) -> float:
    for v in (p_ifo, p_sig):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"probability {v} outside [0, 1]")
    return 1.0 - (1.0 - p_ifo) * (1.0 - p_sig)


def crlb(l_h: int = 512, n: int = N, rho_db: float = 0.0) -> float:
    if l_h > n:
        raise ValueError("channel length cannot exceed the transform size")
    return l_h / (n * 10 ** (rho_db / 10))


def item1_bias(d_c: np.ndarray, spectrum: np.ndarray) -> float:
    """Largest noiseless off-peak IFO correlation, ``max |Item1| / M``.

    Measures how far the deterministic cross term departs from the zero
    the statistical model assumes, for one concrete preamble spectrum.
    """
    x = np.asarray(spectrum)
    unit = x / np.abs(x)
    y = unit * np.conj(np.roll(unit, -1))
    d = np.zeros(x.size)
    d[: len(d_c)] = d_c
    corr = np.fft.ifft(np.fft.fft(y) * np.conj(np.fft.fft(d)))
    return float(np.max(np.abs(corr[1:])) / len(d_c))
