# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # A marginal that depends on the far side
#
# Both analyzers sit at 0 degrees. The Pockels cell rotates by 45 degrees
# and fires only when photon 1 lands in the reflection channel. Photon 2's
# own statistics then depend on whether the trigger is wired up.

# %%
import numpy as np

from bwave.geometry import default_config
from bwave.harness import (
    closed_form_marginals,
    effective_b_prime,
    estimate_probabilities,
    required_trials,
    run_experiment,
    signaling_test,
)
from bwave.polarization import rotator

on = default_config(a=0.0, b=0.0, pc=rotator(np.pi / 4))
off = on.replace(trigger_rule="never")
print(f"effective b' = {np.degrees(effective_b_prime(on)):.1f} deg")

# %%
n = 1_000_000
for label, cfg in (("trigger on", on), ("trigger off", off)):
    est = estimate_probabilities(run_experiment(cfg, n, seed=1))
    print(f"{label:12s} p1 = {est.p1.value:.4f}  p2 = {est.p2.value:.4f} +- {est.p2.stderr:.4f}")
print("closed form with trigger:", closed_form_marginals(0.0, 0.0, effective_b_prime(on)))

# %% [markdown]
# How many trials does Bob need per condition to tell the two apart at a
# one-in-a-million false alarm rate with 99 percent power?

# %%
n_req = required_trials(0.25, 0.5, alpha=1e-6, power=0.99)
print("trials per condition:", n_req)
res = signaling_test(run_experiment(on, n_req, seed=2), run_experiment(off, n_req, seed=3), 1e-6)
print(res)

# %% [markdown]
# Rotation angle against Bob's marginal.

# %%
for deg in (0, 15, 30, 45, 60, 75, 90):
    cfg = on.replace(pc=rotator(np.radians(deg)))
    p2 = run_experiment(cfg, 100_000, seed=4).c_2 / 100_000
    print(f"{deg:3d} deg  p2 = {p2:.4f}  (0.5 cos^2 = {0.5 * np.cos(np.radians(deg)) ** 2:.4f})")
