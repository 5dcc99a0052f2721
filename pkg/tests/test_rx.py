import numpy as np
import pytest

from oracles import circ_corr_block_loop, circ_corr_loop
from preamblelab import chan, rx, txgen
from preamblelab.errors import BadLength, NoPeak, OutOfBounds


def _stream(preamble, lead=700, trail=600, seed=0):
    rng = np.random.default_rng(seed)
    total = lead + preamble.size + trail
    s = (rng.standard_normal(total) + 1j * rng.standard_normal(total)) / np.sqrt(2)
    s[lead : lead + preamble.size] = preamble
    return s, lead


def test_circ_corr_transform_matches_loop():
    rng = np.random.default_rng(4)
    a = rng.standard_normal(511) + 1j * rng.standard_normal(511)
    b = rng.standard_normal(511) + 1j * rng.standard_normal(511)
    ref = np.array(circ_corr_block_loop(a, b))
    assert np.allclose(rx.circ_corr_transform(a, b), ref)


def test_circular_xcorr_matches_loop():
    rng = np.random.default_rng(6)
    data = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    local = rng.choice([-1.0, 1.0], 31)
    padded = np.zeros(64)
    padded[:31] = local
    # sum_k conj(local[k]) data[k+l] is conj of sum_k local[k] conj(data[k+l])
    ref = np.conj(circ_corr_loop(padded, data))
    assert np.allclose(rx._circular_xcorr(data, local), ref)


def test_circ_corr_transform_length_check():
    with pytest.raises(BadLength):
        rx.circ_corr_transform(np.ones(510), np.ones(511))


def test_coarse_metric_peak_at_start(seqs):
    _, p = txgen.preamble_for(seqs, 9)
    s, lead = _stream(p)
    sync = rx.coarse_detect(s)
    assert sync.start_index == lead
    assert np.isclose(sync.metric_peak, 1.0)


def test_coarse_detect_no_peak():
    rng = np.random.default_rng(1)
    s = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
    with pytest.raises(NoPeak):
        rx.coarse_detect(s, threshold=0.9)
    with pytest.raises(OutOfBounds):
        rx.coarse_metric(np.ones(100))


def test_extract_out_of_bounds():
    with pytest.raises(OutOfBounds):
        rx.extract_and_transform(np.ones(2000), rx.CoarseSync(1000, 0.0, 1.0))


@pytest.mark.parametrize("m, f, dphi", [(0, 0.0, 0), (7, 0.2, 300), (-300, -0.45, 510), (511, 0.5, 17)])
def test_detect_recovers_parameters(seqs, m, f, dphi):
    _, p = txgen.preamble_for(seqs, dphi)
    s, lead = _stream(p, seed=m + 1000)
    lead_phase_free = chan.apply_cfo(s, chan.CfoSpec(m, f))
    rep = rx.detect(lead_phase_free, seqs)
    assert rep.coarse.start_index == lead
    # the total CFO is only defined modulo N subcarriers
    err = (rep.m_int_hat + rep.coarse.ffo_hat - (m + f) + 512) % 1024 - 512
    assert abs(err) < 1e-6
    assert rep.delta_phi_hat == dphi
    assert not rep.ifo_profile.ambiguous and not rep.sig_profile.ambiguous


def test_ifo_profile_peak_height(seqs):
    _, p = txgen.preamble_for(seqs, 0)
    s, _ = _stream(p)
    rep = rx.detect(s, seqs)
    assert abs(rep.ifo_profile.values[0]) > 0.99


def test_ffo_half_maps_to_positive(seqs):
    _, p = txgen.preamble_for(seqs, 0)
    s, _ = _stream(p)
    sync = rx.coarse_detect(chan.apply_cfo(s, chan.CfoSpec(0, 0.5)))
    assert sync.ffo_hat == pytest.approx(0.5) or sync.ffo_hat == pytest.approx(-0.5)
    assert -0.5 < sync.ffo_hat <= 0.5


def test_undo_ifo_is_roll():
    x = np.arange(1024)
    assert np.array_equal(rx.undo_ifo(np.roll(x, 5), 5), x)
