import numpy as np
import pytest

from preamblelab import chan, est
from preamblelab.errors import BadLength, NoPaths, ZeroPilot


def test_ls_and_cir_scale():
    x = np.ones(1024, dtype=complex)
    cir = est.to_cir(est.ls_estimate(x, x))
    assert np.isclose(cir.taps[0], 32.0)
    assert np.allclose(cir.taps[1:], 0)


def test_ls_errors():
    with pytest.raises(ZeroPilot):
        est.ls_estimate(np.ones(1024), np.zeros(1024))
    with pytest.raises(BadLength):
        est.ls_estimate(np.ones(10), np.ones(10))


def test_cdt8_path_set():
    ch = chan.discretize(chan.get_profile("CDT-8"), 7 / 64)
    taps = np.zeros(1024, dtype=complex)
    taps[: ch.length] = ch.cir * 32
    cir = est.CirEstimate(taps)
    # the two -20 dB taps sit exactly at 0.1 * max; nudge the threshold above them
    th = est.relative_threshold(cir) * (1 + 1e-9)
    paths = est.detect_paths(cir, th)
    assert paths.indices.tolist() == [0, 16, 69, 291]
    assert (paths.d_first, paths.d_last) == (0, 291)


def test_no_paths():
    with pytest.raises(NoPaths):
        est.detect_paths(est.CirEstimate(np.zeros(1024)), 0.5)
    with pytest.raises(ValueError):
        est.detect_paths(est.CirEstimate(np.ones(1024)), 0.0)


@pytest.mark.parametrize(
    "first, last, expected",
    [
        (30, 200, 20),  # no wrap: move later to park guard before first path
        (5, 1000, -(1024 - 1000 + 10)),  # early paths wrapped to the tail
        (1023, 1023, -(1024 - 1023 + 10)),  # single path, window late by one
        (10, 10, 0),
    ],
)
def test_timing_offset(first, last, expected):
    idx = np.array(sorted({first, last}))
    assert est.timing_offset(est.PathSet(idx, first, last)) == expected


def test_path_threshold_noise_floor():
    rng = np.random.default_rng(0)
    noise = (rng.standard_normal(1024) + 1j * rng.standard_normal(1024)) / np.sqrt(2)
    taps = noise.copy()
    taps[0] += 20
    cir = est.CirEstimate(taps)
    assert np.isclose(est.noise_floor(cir), 1.0, rtol=0.15)
    th = est.path_threshold(cir)
    assert th > 3.4
    assert est.detect_paths(cir, th).indices.tolist() == [0]
    assert est.path_threshold(cir, noise_factor=0) == est.relative_threshold(cir)
