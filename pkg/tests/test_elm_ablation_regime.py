"""Where pre-activation standardization pays off.

With the default input-weight range the pre-activations already sit in the
near-linear part of tanh, and standardizing them does not help. Widening
the range to U[-3, 3] saturates the plain network, and standardization
recovers the accuracy. The two networks share the same W, b and training
data, so the only difference is the scaling step.
"""

import numpy as np
import pytest

from ris_ofdm_ce.harness import SweepConfig, run_sweep

pytestmark = pytest.mark.slow


def test_standardization_wins_with_wide_input_weights():
    cfg = SweepConfig(init_scale=3.0, n_train=4000, n_trials=200, snr_grid_db=(20.0,))
    res = run_sweep(cfg)
    eelm, plain = res.mean("eelm")[0], res.mean("elm_no_std")[0]
    se = np.hypot(res.stderr("eelm")[0], res.stderr("elm_no_std")[0])
    assert plain - eelm > 2 * se
    assert eelm < res.mean("ls_only")[0]
