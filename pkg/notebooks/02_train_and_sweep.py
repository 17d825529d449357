# %% [markdown]
# # Training the ELM refiner and sweeping SNR
#
# Training data are separated LS estimates from independent channel draws at
# SNRs spread over 0-30 dB; the labels are the true link CFRs. Two networks
# share one random input layer: ``eelm`` standardizes the pre-activations and
# ``elm_no_std`` does not.

# %%
import time

import numpy as np

from ris_ofdm_ce.harness import SweepConfig, generate_training_set, run_sweep, train_networks
from ris_ofdm_ce.harness.sweep import format_report

cfg = SweepConfig(n_trials=200)

# %%
t0 = time.perf_counter()
data = generate_training_set(cfg)
nets = train_networks(cfg, data)
print(f"{len(data)} samples, trained {list(nets)} in {time.perf_counter() - t0:.1f} s")

# %% [markdown]
# ## NMSE vs SNR
# LS flattens out at high SNR because ISI and amplifier distortion do not
# shrink with the noise. The refiner removes much of that floor.

# %%
res = run_sweep(cfg, nets)
print(format_report(res.rows()))

# %%
gap = res.mean_db("ls_only") - res.mean_db("eelm")
for s, g in zip(cfg.snr_grid_db, gap):
    print(f"{s:4g} dB  eELM gains {g:5.1f} dB over LS")
