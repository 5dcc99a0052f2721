"""Simulation toolkit for a differential-sequence OFDM frame preamble.

Modules: ``seq`` (m-sequences), ``txgen`` (preamble synthesis), ``chan``
(impairments), ``rx`` (detection), ``est`` (channel estimation and timing),
``theory`` (analytic error probabilities), ``harness`` (Monte Carlo) and
``cli``.
"""

from .chan import CfoSpec, ChannelProfile, Tap, get_profile
from .harness import ExperimentConfig, MetricsRecord, run_curve, run_point
from .seq import LfsrSpec, preamble_sequences
from .txgen import build_spectrum, preamble_for

__version__ = "0.1.0"

__all__ = [
    "CfoSpec",
    "ChannelProfile",
    "ExperimentConfig",
    "LfsrSpec",
    "MetricsRecord",
    "Tap",
    "build_spectrum",
    "get_profile",
    "preamble_for",
    "preamble_sequences",
    "run_curve",
    "run_point",
]
