import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circ_corr_loop, lfsr_bits
from preamblelab import seq
from preamblelab.errors import NonCoprimeStep, NonPrimitivePolynomial, NotClosable, ZeroState


def test_mseq_matches_bitwise_lfsr():
    ref = 1 - 2 * np.array(lfsr_bits((9, 4), 9, 0x1FF, 511))
    assert np.array_equal(seq.gen_mseq(), ref)


def test_mseq_balance_and_period():
    c = seq.gen_mseq()
    assert c.size == 511
    assert np.sum(c == -1) == 256
    assert np.prod(c.astype(np.int64)) == 1


def test_autocorrelation_two_valued():
    c = seq.gen_mseq()
    r = seq.circular_correlation(c, c)
    assert r[0] == 511
    assert set(r[1:].tolist()) == {-1}


def test_circular_correlation_matches_loop():
    rng = np.random.default_rng(3)
    a = rng.choice([-1, 1], 31)
    b = rng.choice([-1, 1], 31)
    ref = circ_corr_loop(a, np.roll(b, 0))
    # loop convention: sum a[k] b[k+l]
    got = seq.circular_correlation(a, b)
    assert np.array_equal(got, np.real(ref).astype(int))


def test_preferred_pair_three_valued(seqs):
    r = seq.circular_correlation(seqs.d_c, seqs.d_d)
    assert set(r.tolist()) <= {-1, -33, 31}


def test_decimate_rejects_common_factor():
    with pytest.raises(NonCoprimeStep):
        seq.decimate(seq.gen_mseq(), 7)  # 511 = 7 * 73


def test_zero_state_rejected():
    with pytest.raises(ZeroState):
        seq.gen_mseq(seq.LfsrSpec(initial_state=0))


def test_non_primitive_rejected():
    # at least one of these tap sets is not primitive
    for taps in [(9, 3), (9, 6), (9, 1, 2, 3)]:
        try:
            seq.gen_mseq(seq.LfsrSpec(9, taps))
        except NonPrimitivePolynomial:
            break
    else:
        pytest.fail("no non-primitive tap set was flagged")


def test_other_primitive_taps():
    c = seq.gen_mseq(seq.LfsrSpec(9, (9, 5)))
    r = seq.circular_correlation(c, c)
    assert set(r[1:].tolist()) == {-1}


def test_bad_taps():
    with pytest.raises(ValueError):
        seq.LfsrSpec(9, (8, 4))


def test_integrate_requires_even_minus_ones():
    d = np.ones(511, dtype=np.int8)
    d[0] = -1
    with pytest.raises(NotClosable):
        seq.integrate_differential(d)


def test_as_bipolar_rejects_other_values():
    with pytest.raises(ValueError):
        seq.as_bipolar([1, 0, -1])


def test_round_trip_of_preamble_family(seqs):
    assert np.array_equal(seq.differential_of(seqs.d_a), seqs.d_c)
    assert np.array_equal(seq.differential_of(seqs.d_b), seqs.d_d)
    assert seqs.d_a[0] == 1 and seqs.d_b[0] == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=64), st.sampled_from([-1, 1]))
def test_round_trip_property(chips, init):
    a = np.array(chips, dtype=np.int8)
    d = seq.differential_of(a)
    back = seq.integrate_differential(d, init)
    assert np.array_equal(back, a * (init * a[0]))
