"""Impairments: static tap-delay-line multipath, CFO rotation, AWGN.

The simulator applies them in a fixed order: timing offset (placement of
the preamble in the stream), multipath, CFO, then noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ProfileError, UnknownProfile
from .txgen import N


@dataclass(frozen=True)
class Tap:
    delay_us: float
    gain_db: float
    phase_rad: float = 0.0


@dataclass(frozen=True)
class ChannelProfile:
    name: str
    taps: tuple[Tap, ...]

    def __post_init__(self):
        if not self.taps:
            raise ProfileError(f"profile {self.name!r} has no taps")
        for tap in self.taps:
            if not all(math.isfinite(v) for v in (tap.delay_us, tap.gain_db, tap.phase_rad)):
                raise ProfileError(f"profile {self.name!r} has a non-finite tap {tap}")


def _profile(name, rows):
    return ChannelProfile(name, tuple(Tap(*row) for row in rows))


BUILTIN_PROFILES: dict[str, ChannelProfile] = {
    p.name: p
    for p in (
        _profile("AWGN", [(0.0, 0.0, 0.0)]),
        _profile(
            "ITU-VB",
            [
                (0.00, -2.5, 0.0),
                (0.30, 0.0, 0.0),
                (8.90, -12.8, 0.0),
                (12.90, -10.0, 0.0),
                (17.10, -25.2, 0.0),
                (20.00, -16.0, 0.0),
            ],
        ),
        _profile(
            "CDT-8",
            [
                (-1.80, -18.0, 0.0),
                (0.00, 0.0, 0.0),
                (0.15, -20.0, 0.0),
                (1.80, -20.0, 0.0),
                (5.70, -10.0, 0.0),
                (30.00, 0.0, 0.0),
            ],
        ),
        _profile(
            "BSC",
            [
                (0.1314, -18.8500, 0.0),
                (0.6570, -13.8471, math.pi),
                (1.1827, -4.0248, 0.0),
                (1.4455, 0.0000, 0.0),
                (1.7083, -4.0248, 0.0),
                (2.2339, -13.8471, math.pi),
                (2.7595, -18.8500, 0.0),
            ],
        ),
    )
}


def get_profile(name: str) -> ChannelProfile:
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        known = ", ".join(BUILTIN_PROFILES)
        raise UnknownProfile(f"unknown channel profile {name!r} (known: {known})") from None


def profile_from_mapping(data: dict) -> ChannelProfile:
    """Build a profile from ``{"name": ..., "taps": [[delay, gain, phase], ...]}``.

    Taps may also be mappings with ``delay_us``/``gain_db``/``phase_rad`` keys.
    """
    if not isinstance(data, dict) or "taps" not in data:
        raise ProfileError("a channel profile needs a 'taps' list")
    taps = []
    for i, row in enumerate(data["taps"] or []):
        try:
            if isinstance(row, dict):
                tap = Tap(float(row["delay_us"]), float(row["gain_db"]), float(row.get("phase_rad", 0.0)))
            else:
                tap = Tap(*(float(v) for v in row))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfileError(f"tap {i} is malformed: {row!r}") from exc
        taps.append(tap)
    return ChannelProfile(str(data.get("name", "custom")), tuple(taps))


def load_profiles(path: str | Path) -> dict[str, ChannelProfile]:
    """Read one profile or a list of profiles from a YAML file."""
    data = yaml.safe_load(Path(path).read_text())
    items = data if isinstance(data, list) else data.get("profiles", [data])
    profiles = [profile_from_mapping(item) for item in items]
    return {p.name: p for p in profiles}


@dataclass(frozen=True)
class CfoSpec:
    """Normalized CFO, in subcarrier spacings: ``m_int + f_frac``."""

    m_int: int = 0
    f_frac: float = 0.0

    def __post_init__(self):
        if not -N // 2 <= self.m_int < N // 2:
            raise ValueError(f"integer CFO {self.m_int} outside [-512, 511]")
        if not -0.5 < self.f_frac <= 0.5:
            raise ValueError(f"fractional CFO {self.f_frac} outside (-0.5, 0.5]")

    @property
    def total(self) -> float:
        return self.m_int + self.f_frac


@dataclass(frozen=True)
class DiscreteChannel:
    cir: np.ndarray
    name: str = ""

    @property
    def length(self) -> int:
        return self.cir.size

    @property
    def delay_spread(self) -> int:
        """Samples between the first and last nonzero taps."""
        nz = np.flatnonzero(self.cir)
        return int(nz[-1] - nz[0])

    def frequency_response(self, n: int = N) -> np.ndarray:
        return np.fft.fft(self.cir, n)


def tap_indices(profile: ChannelProfile, sample_interval_us: float) -> list[int]:
    """Sample index of every tap, earliest tap anchored at 0."""
    if not sample_interval_us > 0:
        raise ValueError("sample interval must be positive")
    first = min(t.delay_us for t in profile.taps)
    return [int(round((t.delay_us - first) / sample_interval_us)) for t in profile.taps]


def discretize(profile: ChannelProfile, sample_interval_us: float) -> DiscreteChannel:
    idx = tap_indices(profile, sample_interval_us)
    cir = np.zeros(max(idx) + 1, dtype=complex)
    for i, tap in zip(idx, profile.taps):
        cir[i] += 10 ** (tap.gain_db / 20) * np.exp(1j * tap.phase_rad)
    power = np.sum(np.abs(cir) ** 2)
    if power == 0:
        raise ProfileError(f"profile {profile.name!r} cancels to zero power")
    return DiscreteChannel(cir / np.sqrt(power), profile.name)


def apply_multipath(signal: np.ndarray, ch: DiscreteChannel, history: np.ndarray | None = None) -> np.ndarray:
    """Linear convolution truncated to the input length.

    ``history`` holds samples that precede ``signal`` (for example the tail
    of a previous data block); their echoes spill into the output.
    """
    signal = np.asarray(signal, dtype=complex)
    lead = 0 if history is None else len(history)
    x = signal if lead == 0 else np.concatenate([np.asarray(history, dtype=complex), signal])
    nz = np.flatnonzero(ch.cir)
    if nz.size * 4 < ch.cir.size:
        # sparse tap-delay line: sum of delayed copies
        y = np.zeros(x.size, dtype=complex)
        for i in nz[nz < x.size]:
            y[i:] += ch.cir[i] * x[: x.size - i]
    else:
        y = np.convolve(x, ch.cir)[: x.size]
    return y[lead:]


def apply_cfo(signal: np.ndarray, cfo: CfoSpec, start_index: int = 0) -> np.ndarray:
    """Rotate sample n by ``exp(j*2*pi*(m_int + f_frac)*n/1024)``.

    The sample interval cancels: the CFO in Hz is (m_int+f_frac)/(N*Ts).
    """
    signal = np.asarray(signal, dtype=complex)
    if cfo.total == 0:
        return signal.copy()
    n = np.arange(start_index, start_index + signal.size)
    return signal * np.exp(2j * np.pi * cfo.total * n / N)


def add_awgn(
    signal: np.ndarray,
    snr_db: float,
    rng: np.random.Generator,
    signal_power: float | None = None,
) -> np.ndarray:
    """Add circular complex Gaussian noise at ``snr_db``.

    Signal power is measured over the whole input unless given.
    ``snr_db = inf`` returns an unchanged copy.
    """
    signal = np.asarray(signal, dtype=complex)
    if math.isinf(snr_db) and snr_db > 0:
        return signal.copy()
    if signal_power is None:
        signal_power = float(np.mean(np.abs(signal) ** 2))
    noise_var = signal_power * 10 ** (-snr_db / 10)
    noise = rng.standard_normal((2, signal.size))
    return signal + np.sqrt(noise_var / 2) * (noise[0] + 1j * noise[1])
