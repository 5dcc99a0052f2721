"""Preamble construction: spectrum mapping, time-domain assembly, PAPR.

All transforms use the unitary (1/sqrt(N)) normalization in both
directions, so a spectrum of 1024 unit-magnitude bins yields a body with
unit mean power.
"""

from __future__ import annotations

import numpy as np

from .errors import BadLength, BadSignaling, EmptySignal, ZeroSignal
from .seq import M

N = 1024
HALF = N // 2
PREAMBLE_LEN = 2 * N
P1_C_LEN = 542
DEFAULT_TS_US = 7 / 64


def _check_signaling(delta_phi: int) -> int:
    if isinstance(delta_phi, bool) or int(delta_phi) != delta_phi:
        raise BadSignaling(f"signaling value must be an integer, got {delta_phi!r}")
    delta_phi = int(delta_phi)
    if not 0 <= delta_phi < M:
        raise BadSignaling(f"signaling value {delta_phi} outside [0, {M - 1}]")
    return delta_phi


def build_spectrum(d_a: np.ndarray, d_b: np.ndarray, delta_phi: int) -> np.ndarray:
    """Map the carrier sequences and the signaling shift onto 1024 bins.

    Bins 0..510 carry ``d_a``; bins 512..1022 carry ``d_b`` circularly
    advanced by ``delta_phi``; bins 511 and 1023 are fixed at -1.
    """
    d_a = np.asarray(d_a)
    d_b = np.asarray(d_b)
    if d_a.shape != (M,) or d_b.shape != (M,):
        raise BadLength(f"carrier sequences must have {M} chips, got {d_a.shape} and {d_b.shape}")
    delta_phi = _check_signaling(delta_phi)

    x = np.full(N, -1.0 + 0j)
    x[:M] = d_a
    x[HALF : HALF + M] = np.roll(d_b, -delta_phi)
    return x


def ofdm_body(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=complex)
    if spectrum.shape != (N,):
        raise BadLength(f"spectrum must have {N} bins, got {spectrum.shape}")
    return np.fft.ifft(spectrum, norm="ortho")


def assemble_preamble(spectrum: np.ndarray) -> np.ndarray:
    """Return ``A_post | body | A_post``, 2048 samples.

    The second half of the body doubles as cyclic prefix and postfix.
    """
    y = ofdm_body(spectrum)
    a_post = y[HALF:]
    return np.concatenate([a_post, y, a_post])


def build_p1_baseline(body: np.ndarray) -> np.ndarray:
    """C-A-B time structure of the DVB-T2 P1 symbol around a caller-made body.

    The guard parts are frequency shifted by one subcarrier spacing,
    ``exp(j*2*pi*n/1024)``, which does not depend on the sample interval.
    """
    y = np.asarray(body, dtype=complex)
    if y.shape != (N,):
        raise BadLength(f"P1 part A must have {N} samples, got {y.shape}")
    n = np.arange(PREAMBLE_LEN)
    shift = np.exp(2j * np.pi * n / N)
    c_end = P1_C_LEN
    a_end = P1_C_LEN + N
    p = np.empty(PREAMBLE_LEN, dtype=complex)
    p[:c_end] = y[:c_end] * shift[:c_end]
    p[c_end:a_end] = y
    p[a_end:] = y[a_end - N :] * shift[a_end:]
    return p


def p1_random_body(rng: np.random.Generator, active: int = 384) -> np.ndarray:
    """Random +/-1 content on ``active`` centre bins, unit mean power.

    Stands in for the standard's S1/S2 patterns, which are not modelled.
    """
    spectrum = np.zeros(N, dtype=complex)
    first = (N - active) // 2
    spectrum[first : first + active] = rng.choice([-1.0, 1.0], size=active)
    spectrum *= np.sqrt(N / active)
    return np.fft.ifft(np.fft.ifftshift(spectrum), norm="ortho")


def papr_db(signal: np.ndarray) -> float:
    s = np.asarray(signal)
    if s.size == 0:
        raise EmptySignal("PAPR of an empty signal is undefined")
    power = np.abs(s) ** 2
    mean = power.mean()
    if mean == 0:
        raise ZeroSignal("PAPR of an all-zero signal is undefined")
    return float(10 * np.log10(power.max() / mean))


def preamble_for(seqs, delta_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Spectrum and 2048-sample preamble for one signaling value."""
    spectrum = build_spectrum(seqs.d_a, seqs.d_b, delta_phi)
    return spectrum, assemble_preamble(spectrum)
