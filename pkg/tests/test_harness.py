import math

import numpy as np
import pytest

from preamblelab import harness
from preamblelab.errors import ConfigError


def test_trial_rng_is_keyed():
    a = harness.trial_rng(1, 2, 3).random(4)
    b = harness.trial_rng(1, 2, 3).random(4)
    c = harness.trial_rng(1, 2, 4).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_noiseless_trial_is_perfect():
    cfg = harness.ExperimentConfig(channel="ITU-VB")
    ctx = harness._context(cfg)
    for i in range(5):
        sig, ifo, timing, coarse, mse, mse_p = harness.run_trial(ctx, math.inf, 0, i)
        assert not sig and not ifo
        assert timing == 0
        assert mse_p < 1e-20
        # multipath echoes of the preceding data bias the FFO estimate slightly
        assert mse < 1e-4


@pytest.mark.parametrize(
    "change, key",
    [
        ({"trials": 0}, "trials"),
        ({"channel": "nowhere"}, "channel"),
        ({"m_int": 600}, "m_int"),
        ({"f_frac": -0.5}, "f_frac"),
        ({"signaling": 511}, "signaling"),
        ({"snr_grid_db": []}, "snr_grid_db"),
        ({"workers": 0}, "workers"),
    ],
)
def test_validation(change, key):
    with pytest.raises(ConfigError) as exc:
        harness.ExperimentConfig(**change).validate()
    assert exc.value.key == key


def test_early_stop_counts_exact_trials():
    cfg = harness.ExperimentConfig(snr_grid_db=[-9.0], trials=3000, min_errors=20, channel_estimation=False)
    rec = harness.run_point(cfg, -9.0)
    full = harness.run_point(harness.with_overrides(cfg, min_errors=None, trials=rec.trials_run), -9.0)
    assert rec == full
    assert min(rec.ser, rec.ifoer) * rec.trials_run == 20


def test_wilson_interval_contains_rate():
    rec = harness.run_point(harness.ExperimentConfig(trials=300, channel_estimation=False), -8.0)
    assert rec.ser_lo <= rec.ser <= rec.ser_hi
    assert rec.ifoer <= rec.ser


def test_curve_sorted_and_seeded_by_grid_position():
    cfg = harness.ExperimentConfig(snr_grid_db=[-6.0, -9.0], trials=50, channel_estimation=False)
    recs = harness.run_curve(cfg)
    assert [r.snr_db for r in recs] == [-9.0, -6.0]
    assert recs[0] == harness.run_point(cfg, -9.0, snr_index=1)


def test_papr_survey_shape():
    v = harness.papr_survey()
    assert v.shape == (511,)
    assert 5 < v.min() and v.max() < 9
