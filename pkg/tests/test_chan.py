import math

import numpy as np
import pytest

from preamblelab import chan
from preamblelab.errors import ProfileError, UnknownProfile

TS = 7 / 64


@pytest.mark.parametrize(
    "name, idx, spread",
    [
        ("ITU-VB", [0, 3, 81, 118, 156, 183], 183),
        ("CDT-8", [0, 16, 18, 33, 69, 291], 291),
        ("BSC", [0, 5, 10, 12, 14, 19, 24], 24),
        ("AWGN", [0], 0),
    ],
)
def test_tap_indices(name, idx, spread):
    p = chan.get_profile(name)
    assert chan.tap_indices(p, TS) == idx
    ch = chan.discretize(p, TS)
    assert ch.delay_spread == spread
    assert math.isclose(np.sum(np.abs(ch.cir) ** 2), 1.0)


def test_bsc_response_extremes():
    h = chan.discretize(chan.get_profile("BSC"), TS).frequency_response()
    assert np.abs(h).min() < 0.01


def test_unknown_profile_message():
    with pytest.raises(UnknownProfile) as exc:
        chan.get_profile("nope")
    assert "nope" in str(exc.value) and "ITU-VB" in str(exc.value)


def test_profile_validation():
    with pytest.raises(ProfileError):
        chan.ChannelProfile("empty", ())
    with pytest.raises(ProfileError):
        chan.profile_from_mapping({"taps": [[0.0, float("nan")]]})
    with pytest.raises(ProfileError):
        chan.profile_from_mapping({"taps": [["x"]]})


def test_profile_from_mapping_forms():
    a = chan.profile_from_mapping({"name": "t", "taps": [[0, 0], [1.0, -3, 0.5]]})
    b = chan.profile_from_mapping(
        {"name": "t", "taps": [{"delay_us": 0, "gain_db": 0}, {"delay_us": 1.0, "gain_db": -3, "phase_rad": 0.5}]}
    )
    assert a == b


def test_load_profiles(tmp_path):
    f = tmp_path / "p.yaml"
    f.write_text("profiles:\n  - name: two\n    taps: [[0, 0], [2.1875, -6]]\n")
    profiles = chan.load_profiles(f)
    assert chan.tap_indices(profiles["two"], TS) == [0, 20]


def test_multipath_matches_convolution():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(3000) + 1j * rng.standard_normal(3000)
    for name in ["ITU-VB", "CDT-8", "BSC"]:
        ch = chan.discretize(chan.get_profile(name), TS)
        ref = np.convolve(x, ch.cir)[: x.size]
        assert np.allclose(chan.apply_multipath(x, ch), ref)


def test_multipath_history_spills_in():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(600) + 0j
    ch = chan.discretize(chan.get_profile("CDT-8"), TS)
    full = chan.apply_multipath(x, ch)
    tail = chan.apply_multipath(x[400:], ch, history=x[:400])
    assert np.allclose(tail, full[400:])


def test_cfo_rotation():
    cfo = chan.CfoSpec(3, 0.25)
    x = np.ones(2048, dtype=complex)
    y = chan.apply_cfo(x, cfo, start_index=10)
    n = np.arange(10, 2058)
    assert np.allclose(y, np.exp(2j * np.pi * 3.25 * n / 1024))
    assert np.array_equal(chan.apply_cfo(x, chan.CfoSpec()), x)


@pytest.mark.parametrize("m, f", [(512, 0.0), (-513, 0.0), (0, -0.5), (0, 0.6)])
def test_cfo_bounds(m, f):
    with pytest.raises(ValueError):
        chan.CfoSpec(m, f)


def test_awgn_power():
    rng = np.random.default_rng(5)
    x = np.ones(200_000, dtype=complex)
    y = chan.add_awgn(x, 3.0, rng)
    assert np.isclose(np.var(y - x), 10 ** (-0.3), rtol=0.02)
    assert np.array_equal(chan.add_awgn(x, math.inf, rng), x)
    z = chan.add_awgn(x, 0.0, rng, signal_power=4.0)
    assert np.isclose(np.var(z - x), 4.0, rtol=0.02)
