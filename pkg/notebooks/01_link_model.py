# %% [markdown]
# # The simulated link
#
# A Zadoff-Chu pilot block and a QPSK data block share each of the M+1 pilot
# slots. Between slots the RIS switches phase configuration, so the receiver
# sees a different composite channel in every slot. This script walks one
# realization through the chain and looks at where the LS estimate goes wrong.

# %%
import numpy as np

from ris_ofdm_ce.channel import build_theta, cfr, composite_cir, gen_realization
from ris_ofdm_ce.harness import SweepConfig, draw_trials, hpa_for, observe
from ris_ofdm_ce.impairments import HpaModel
from ris_ofdm_ce.numerics import seeded_rng
from ris_ofdm_ce.waveform import ofdm_modulate, zadoff_chu

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# ## Pilot
# The ZC sequence is unit-modulus on every subcarrier and its time-domain
# block is too, which matters later for the amplifier.

# %%
pilot = zadoff_chu(64)
t = ofdm_modulate(pilot.symbols, 8).time_samples
print("freq |c| range:", np.ptp(np.abs(pilot.symbols)))
print("time |x| range:", np.ptp(np.abs(t)))

# %% [markdown]
# ## Channel
# Nine links: the direct one plus eight cascaded sub-surface links.

# %%
real = gen_realization(seeded_rng(0), l=12, m=8)
links = real.link_cirs()
print("link CIR shape:", links.shape)
print("tap energy per link:", np.sum(np.abs(links) ** 2, axis=-1))

theta = build_theta(8)
h_slot0 = composite_cir(real, theta.phase_vectors[0])
print("slot 0 composite CFR, first 4 bins:", cfr(h_slot0, 64)[:4])

# %% [markdown]
# ## Amplifier
# Saleh curves at unit input, then the drive that gives 55 % EVM.

# %%
m = HpaModel()
print("A(1) =", m.amplitude(1.0), " Phi(1) =", m.phase(1.0))
cfg = SweepConfig(n_trials=200, estimators=("ls_only",))
print("drive for 55% EVM:", hpa_for(cfg).drive_scale)

# %% [markdown]
# ## LS error budget
# Noiseless, so the remaining error comes from ISI (L = 12 taps against an
# 8-sample CP) and the amplifier.

# %%
for name, c, hpa in [
    ("CP 11, no HPA", cfg.replace(cp_len=11, evm_target=0.0), None),
    ("CP 8,  no HPA", cfg.replace(evm_target=0.0), None),
    ("CP 8,  55% EVM", cfg, hpa_for(cfg)),
]:
    b = draw_trials(c, np.arange(200))
    obs = observe(c, b, np.inf, hpa)
    err = np.sum(np.abs(obs.separated - obs.truth) ** 2) / np.sum(np.abs(obs.truth) ** 2)
    print(f"{name}: LS NMSE {10 * np.log10(err + 1e-300):7.2f} dB")
