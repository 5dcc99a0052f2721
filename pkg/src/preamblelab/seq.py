"""Binary m-sequences and the differential carrier sequences built from them.

Sequences are numpy ``int8`` arrays holding +1/-1 chips.  LFSR output bits
map 1 -> -1 and 0 -> +1, which keeps the chip product of a degree-9
m-sequence at +1 (256 ones) so it can be circularly integrated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import NonCoprimeStep, NonPrimitivePolynomial, NotClosable, ZeroState

M = 511

DEFAULT_TAPS = (9, 4)
DEFAULT_DECIMATION = 3


@dataclass(frozen=True)
class LfsrSpec:
    degree: int = 9
    feedback_taps: tuple[int, ...] = DEFAULT_TAPS
    # bit i of the integer is register stage i+1
    initial_state: int = field(default=0x1FF)

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError(f"LFSR degree must be >= 2, got {self.degree}")
        taps = tuple(sorted(set(int(t) for t in self.feedback_taps), reverse=True))
        if not taps or taps[0] != self.degree or taps[-1] < 1:
            raise ValueError(
                f"feedback taps {self.feedback_taps} must lie in 1..{self.degree} "
                "and include the degree itself"
            )
        object.__setattr__(self, "feedback_taps", taps)


def as_bipolar(chips) -> np.ndarray:
    """Validate and copy ``chips`` into a +1/-1 ``int8`` array."""
    arr = np.asarray(chips)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a bipolar sequence must be a non-empty 1-D array")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("bipolar sequence chips must be exactly +1 or -1")
    return arr.astype(np.int8)


def gen_mseq(spec: LfsrSpec = LfsrSpec()) -> np.ndarray:
    """Run a Fibonacci LFSR for one full period.

    Stage ``degree`` is the output; the new stage-1 bit is the XOR of the
    tapped stages.  Raises NonPrimitivePolynomial if the state recurs
    before ``2**degree - 1`` steps.
    """
    n = spec.degree
    mask = (1 << n) - 1
    state = spec.initial_state & mask
    if state == 0:
        raise ZeroState(f"initial state of a degree-{n} LFSR must be nonzero")
    period = mask
    tap_bits = [t - 1 for t in spec.feedback_taps]

    start = state
    bits = np.empty(period, dtype=np.int8)
    for i in range(period):
        bits[i] = (state >> (n - 1)) & 1
        fb = 0
        for b in tap_bits:
            fb ^= (state >> b) & 1
        state = ((state << 1) | fb) & mask
        if state == start and i != period - 1:
            raise NonPrimitivePolynomial(
                f"taps {spec.feedback_taps} give period {i + 1} < {period}"
            )
    if state != start:
        raise NonPrimitivePolynomial(f"taps {spec.feedback_taps} do not close a period of {period}")
    return (1 - 2 * bits).astype(np.int8)


def decimate(seq: np.ndarray, step: int) -> np.ndarray:
    """Return ``seq[(k * step) % len(seq)]`` for every k."""
    seq = as_bipolar(seq)
    length = seq.size
    if gcd(step, length) != 1:
        raise NonCoprimeStep(f"step {step} shares a factor with length {length}")
    idx = (np.arange(length, dtype=np.int64) * step) % length
    return seq[idx]


def differential_of(a: np.ndarray) -> np.ndarray:
    """Adjacent circular products ``a[k] * a[k+1]``."""
    a = as_bipolar(a)
    return (a * np.roll(a, -1)).astype(np.int8)


def integrate_differential(d: np.ndarray, init: int = 1) -> np.ndarray:
    """Inverse of :func:`differential_of` with ``a[0] = init``.

    A circular integral only exists when the chip product of ``d`` is +1.
    """
    d = as_bipolar(d)
    if init not in (1, -1):
        raise ValueError("init must be +1 or -1")
    if np.prod(d.astype(np.int64)) != 1:
        raise NotClosable("chip product is -1; no circular integral exists")
    # a[k] = init * prod(d[0..k-1])
    a = np.empty_like(d)
    a[0] = init
    a[1:] = init * np.cumprod(d[:-1].astype(np.int64))
    return a


def circular_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Brute-force ``sum_k a[k] * b[(k + lag) % M]`` for every lag.

    Integer arithmetic, exact; used for sequence-property checks.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return np.array([int(np.dot(a, np.roll(b, -lag))) for lag in range(a.size)])


@dataclass(frozen=True)
class PreambleSequences:
    """The four length-511 sequences that define one preamble family.

    ``d_c``/``d_d`` are the preferred pair of m-sequences; ``d_a``/``d_b``
    are their circular integrals, mapped onto the two spectrum halves.
    """

    d_a: np.ndarray
    d_b: np.ndarray
    d_c: np.ndarray
    d_d: np.ndarray


def preamble_sequences(
    spec: LfsrSpec = LfsrSpec(), step: int = DEFAULT_DECIMATION, init: int = 1
) -> PreambleSequences:
    d_c = gen_mseq(spec)
    d_d = decimate(d_c, step)
    return PreambleSequences(
        d_a=integrate_differential(d_c, init),
        d_b=integrate_differential(d_d, init),
        d_c=d_c,
        d_d=d_d,
    )
