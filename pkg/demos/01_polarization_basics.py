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
# # Polarization basics
#
# Two photons share a singlet. Each passes a two-channel analyzer; the
# channel pair statistics depend only on the angle between the analyzers.

# %%
import numpy as np

from bwave.polarization import (
    apply_jones_to_photon,
    joint_probability,
    rotator,
    singlet,
)

psi = singlet()
print(psi.amps)

# %% [markdown]
# Joint channel probabilities against the analyzer difference. Equal
# channels go as half the squared sine, opposite channels as half the
# squared cosine.

# %%
a = 0.0
print(f"{'b-a (deg)':>10} {'P(T,T)':>8} {'P(T,R)':>8} {'P(R,T)':>8} {'P(R,R)':>8}")
for b_deg in range(0, 181, 30):
    b = np.radians(b_deg)
    row = [joint_probability(psi, a, c1, b, c2) for c1, c2 in ("TT", "TR", "RT", "RR")]
    print(f"{b_deg:>10} " + " ".join(f"{p:8.4f}" for p in row))

# %% [markdown]
# Marginals stay at one half for every angle, so neither side alone sees
# anything.

# %%
for a_deg, b_deg in ((0, 0), (0, 17), (30, 75), (10, 100)):
    a_, b_ = np.radians(a_deg), np.radians(b_deg)
    p1 = joint_probability(psi, a_, "T", b_, "T") + joint_probability(psi, a_, "T", b_, "R")
    p2 = joint_probability(psi, a_, "T", b_, "T") + joint_probability(psi, a_, "R", b_, "T")
    print(f"a = {a_deg:3d}  b = {b_deg:3d}  p1 = {p1:.4f}  p2 = {p2:.4f}")

# %% [markdown]
# A rotator on one photon shifts the correlation curve. With the rotator
# convention used here the equal-channel probability becomes half the
# squared sine of b - theta - a.

# %%
theta = np.radians(20)
rotated = apply_jones_to_photon(psi, 2, rotator(theta))
for b_deg in (0, 20, 45, 110):
    b = np.radians(b_deg)
    print(b_deg, round(joint_probability(rotated, a, "T", b, "T"), 6),
          round(0.5 * np.sin(b - theta - a) ** 2, 6))
