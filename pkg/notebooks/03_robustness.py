# %% [markdown]
# # Robustness: EVM, path count and the standardization step
#
# Three small experiments around the default operating point. Trial counts
# are kept low so the script finishes in a few minutes on one core; the
# acceptance tests use 500 trials.

# %%
import numpy as np

from ris_ofdm_ce.harness import SweepConfig, run_sweep

base = SweepConfig(n_trials=150, n_train=5000)

# %% [markdown]
# ## Amplifier distortion
# LS gets worse as EVM grows. The refiner barely moves: the ZC pilot has a
# constant envelope, so the amplifier acts on it as one complex gain that the
# network learns away.

# %%
for evm in (45.0, 55.0, 65.0):
    r = run_sweep(base.replace(evm_target=evm, snr_grid_db=(20.0,), estimators=("ls_only", "eelm")))
    print(f"EVM {evm:g}%: LS {r.mean_db('ls_only')[0]:6.2f} dB  eELM {r.mean_db('eelm')[0]:6.2f} dB")

# %% [markdown]
# ## Channel length against a fixed 8-sample CP

# %%
for l in (10, 12, 14):
    r = run_sweep(base.replace(n_paths=l, snr_grid_db=(10.0, 30.0), estimators=("ls_only", "eelm")))
    ls, ee = r.mean_db("ls_only"), r.mean_db("eelm")
    print(f"L={l}: LS {ls[0]:6.2f}/{ls[1]:6.2f} dB  eELM {ee[0]:6.2f}/{ee[1]:6.2f} dB  (10/30 dB SNR)")

# %% [markdown]
# ## Standardization and the input-weight range
# With W ~ U[-1, 1] the pre-activations are small and dividing by their
# spread pushes tanh into saturation. With a wider range the unscaled network
# saturates instead, and standardization wins.

# %%
for s in (1.0, 3.0, 10.0):
    r = run_sweep(base.replace(init_scale=s, snr_grid_db=(20.0,), estimators=("eelm", "elm_no_std")))
    print(f"init range {s:4g}: std {r.mean_db('eelm')[0]:6.2f} dB  no-std {r.mean_db('elm_no_std')[0]:6.2f} dB")
