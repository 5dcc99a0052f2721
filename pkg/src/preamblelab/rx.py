"""Receiver chain: coarse timing/FFO, body transform, IFO and signaling decode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLength, NoPeak, OutOfBounds
from .seq import M, PreambleSequences
from .txgen import HALF, N, PREAMBLE_LEN

DEFAULT_THRESHOLD = 0.5
DEFAULT_PEAK_MARGIN = 1.5
CORR_LEN = 1024  # FFT size used for the 511-point circular correlation


@dataclass(frozen=True)
class CoarseSync:
    start_index: int
    ffo_hat: float
    metric_peak: float


@dataclass(frozen=True)
class CorrelationProfile:
    values: np.ndarray
    peak_index: int
    peak_ratio: float
    ambiguous: bool = False

    @classmethod
    def from_values(cls, values: np.ndarray, margin: float = DEFAULT_PEAK_MARGIN) -> CorrelationProfile:
        mag = np.abs(values)
        peak = int(np.argmax(mag))
        others = np.delete(mag, peak)
        second = float(others.max()) if others.size else 0.0
        ratio = float(mag[peak] / second) if second > 0 else float("inf")
        return cls(values, peak, ratio, ratio < margin)


@dataclass(frozen=True)
class DetectionReport:
    coarse: CoarseSync
    m_int_hat: int
    delta_phi_hat: int
    ifo_profile: CorrelationProfile
    sig_profile: CorrelationProfile
    spectrum: np.ndarray  # received bins, FFO-corrected, IFO not yet undone


def _window_sums(x: np.ndarray, width: int) -> np.ndarray:
    c = np.concatenate([[0], np.cumsum(x)])
    return c[width:] - c[:-width]


def coarse_metric(stream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized repetition metric and lag-1024 correlation per start index.

    For a start ``d`` the prefix ``[d, d+512)`` is correlated with
    ``[d+1024, d+1536)`` and that block with the postfix ``[d+1536, d+2048)``.
    The metric is ``(|P1| + |P2|)`` over the mean window energies, which
    is 1 for a noiseless, undistorted preamble starting at ``d``.
    """
    r = np.asarray(stream, dtype=complex)
    count = r.size - PREAMBLE_LEN + 1
    if count < 1:
        raise OutOfBounds(f"stream of {r.size} samples is shorter than one preamble")
    w = HALF
    lag1 = _window_sums(np.conj(r[:-N]) * r[N:], w)
    lag2 = _window_sums(np.conj(r[:-w]) * r[w:], w)
    energy = _window_sums(np.abs(r) ** 2, w)

    d = np.arange(count)
    p1 = lag1[d]
    p2 = lag2[d + N]
    e_a, e_b, e_c = energy[d], energy[d + N], energy[d + N + w]
    denom = 0.5 * (e_a + e_b) + 0.5 * (e_b + e_c)
    with np.errstate(invalid="ignore", divide="ignore"):
        metric = np.where(denom > 0, (np.abs(p1) + np.abs(p2)) / denom, 0.0)
    return metric, p1


def coarse_detect(stream: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> CoarseSync:
    """Locate the preamble start and estimate the fractional CFO.

    FFO is the phase of the lag-1024 correlation over 2*pi, in
    (-0.5, 0.5].  Flat tops of the metric resolve to their centre.
    """
    metric, p1 = coarse_metric(stream)
    peak = int(np.argmax(metric))
    top = metric[peak]
    if not top >= threshold:
        raise NoPeak(f"metric peak {top:.3f} below threshold {threshold}")

    near = metric >= top * (1 - 1e-9)
    lo = peak
    while lo > 0 and near[lo - 1]:
        lo -= 1
    hi = peak
    while hi + 1 < near.size and near[hi + 1]:
        hi += 1
    start = (lo + hi) // 2

    ffo = float(np.angle(p1[start]) / (2 * np.pi))
    if ffo == -0.5:
        ffo = 0.5
    return CoarseSync(start, ffo, float(metric[start]))


def extract_and_transform(stream: np.ndarray, sync: CoarseSync) -> np.ndarray:
    """FFO-derotate the 1024-sample body at ``start + 512`` and transform it."""
    first = sync.start_index + HALF
    if sync.start_index < 0 or first + N > len(stream):
        raise OutOfBounds(f"body [{first}, {first + N}) outside stream of {len(stream)}")
    body = np.asarray(stream[first : first + N], dtype=complex)
    n = np.arange(N)
    body = body * np.exp(-2j * np.pi * sync.ffo_hat * n / N)
    return np.fft.fft(body, norm="ortho")


def diff_demod(spectrum: np.ndarray) -> np.ndarray:
    x = np.asarray(spectrum)
    return x * np.conj(np.roll(x, -1))


def _circular_xcorr(data: np.ndarray, local: np.ndarray) -> np.ndarray:
    """``sum_k conj(local[k]) * data[(k + l) % len(data)]`` for every l."""
    padded = np.zeros(data.size, dtype=complex)
    padded[: local.size] = local
    return np.fft.ifft(np.fft.fft(data) * np.conj(np.fft.fft(padded)))


def estimate_ifo(
    y: np.ndarray,
    spectrum: np.ndarray,
    d_c: np.ndarray,
    margin: float = DEFAULT_PEAK_MARGIN,
) -> tuple[int, CorrelationProfile]:
    """Integer CFO from the normalized circular correlation with ``d_c``.

    The peak index p folds to ``p`` below 512 and ``p - 1024`` above.
    """
    y = np.asarray(y)
    if y.shape != (N,) or np.shape(d_c) != (M,):
        raise BadLength("IFO search needs 1024 differential bins and a 511-chip local sequence")
    numer = _circular_xcorr(y, np.asarray(d_c, dtype=float))
    denom = _circular_xcorr(np.abs(spectrum) ** 2, np.ones(M)).real
    values = numer / np.where(denom > 0, denom, np.inf)
    profile = CorrelationProfile.from_values(values, margin)
    p = profile.peak_index
    return (p if p < N // 2 else p - N), profile


def circ_corr_transform(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """511-point circular correlation ``sum_k conj(b[k]) * a[(k + q) % 511]``.

    Computed with 1024-point transforms: ``a`` repeated twice plus two
    zeros against ``b`` followed by 513 zeros.  For lags 0..510 the linear
    correlation never leaves the doubled copy, so it equals the circular one.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (M,) or b.shape != (M,):
        raise BadLength(f"circular correlation inputs must have {M} samples")
    long_a = np.concatenate([a, a, np.zeros(CORR_LEN - 2 * M)])
    long_b = np.concatenate([b, np.zeros(CORR_LEN - M)])
    full = np.fft.ifft(np.fft.fft(long_a) * np.conj(np.fft.fft(long_b)))
    return full[:M]


def decode_signaling(
    spectrum_corrected: np.ndarray,
    d_d: np.ndarray,
    margin: float = DEFAULT_PEAK_MARGIN,
) -> tuple[int, CorrelationProfile]:
    """Recover the circular shift of the upper carrier block.

    Bins 512..1022 are differentially demodulated circularly within the
    block and correlated with ``d_d``.  A block advanced by ``delta_phi``
    peaks at lag ``-delta_phi``; the returned profile is re-indexed so
    that entry ``q`` scores candidate ``delta_phi = q``.
    """
    x = np.asarray(spectrum_corrected)
    if x.shape != (N,):
        raise BadLength(f"spectrum must have {N} bins")
    c = x[HALF : HALF + M]
    c_diff = c * np.conj(np.roll(c, -1))
    energy = np.sum(np.abs(c) ** 2)
    by_lag = circ_corr_transform(c_diff, d_d) / (energy if energy > 0 else np.inf)
    by_shift = by_lag[(-np.arange(M)) % M]
    profile = CorrelationProfile.from_values(by_shift, margin)
    return profile.peak_index, profile


def undo_ifo(spectrum: np.ndarray, m_int: int) -> np.ndarray:
    """Shift bins back by the integer CFO: ``out[k] = in[(k + m_int) % N]``."""
    return np.roll(np.asarray(spectrum), -m_int)


def detect(
    stream: np.ndarray,
    seqs: PreambleSequences,
    threshold: float = DEFAULT_THRESHOLD,
    margin: float = DEFAULT_PEAK_MARGIN,
    sync: CoarseSync | None = None,
) -> DetectionReport:
    """Run coarse sync, FFO correction, IFO search and signaling decode.

    Pass ``sync`` to bypass the coarse detector (for example with a
    known timing).
    """
    if sync is None:
        sync = coarse_detect(stream, threshold)
    spectrum = extract_and_transform(stream, sync)
    y = diff_demod(spectrum)
    m_hat, ifo_profile = estimate_ifo(y, spectrum, seqs.d_c, margin)
    dphi_hat, sig_profile = decode_signaling(undo_ifo(spectrum, m_hat), seqs.d_d, margin)
    return DetectionReport(sync, m_hat, dphi_hat, ifo_profile, sig_profile, spectrum)
