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
# # GHZ agreement and a decoded message
#
# Alice, Bob and Charlie share a GHZ state. If Alice measures early enough
# for her influence to reach the others, Bob and Charlie always agree.
# Otherwise they agree half of the time.

# %%
from bwave.geometry import SPEED_OF_LIGHT as C
from bwave.ghz import GhzConfig, ghz_experiment

base = dict(l=6e5, t_a=0.0, t_l_meas=1e-3, trials=20_000, seed=9)
print(f"needed speed l / dt = {6e5 / 1e-3 / C:.2f} c")
for v, alice in ((3 * C, True), (3 * C, False), (1.5 * C, True)):
    res = ghz_experiment(GhzConfig(v=v, alice_measures=alice, **base))
    print(f"v = {v / C:.1f} c  alice measures: {alice!s:5}  p_same = {res.p_same:.4f}  "
          f"reached: {res.influence_reached}")

# %% [markdown]
# Sending bits through the Pockels-cell channel. Each bit is a block of
# trials with the trigger wired (1) or not (0); Bob thresholds his
# transmission fraction halfway between the two regimes.

# %%
import numpy as np

from bwave.geometry import default_config
from bwave.harness import decode_message, run_experiment
from bwave.polarization import rotator

on = default_config(a=0.0, b=0.0, pc=rotator(np.pi / 4))
off = on.replace(trigger_rule="never")
message = [int(ch) for ch in format(ord("B"), "08b")]
for n in (16, 100, 10_000):
    blocks = [run_experiment(on if bit else off, n, seed=5, start=k * n) for k, bit in enumerate(message)]
    out = decode_message(blocks, 0.375, truth=message)
    print(f"{n:6d} trials/bit  sent {''.join(map(str, message))}  got {''.join(map(str, out['bits']))}  "
          f"BER {out['ber']:.3f}")
