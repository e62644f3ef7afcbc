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
# # The timing race
#
# After photon 1 is detected, two things travel back toward the Pockels
# cell: a light-speed trigger along a straight path of length x, and the
# B-wave along the arm, which includes a detour of 2y. The cell only
# affects the B-wave when the trigger wins.

# %%
import numpy as np

from bwave.geometry import (
    SPEED_OF_LIGHT as C,
    bwave_transit_time,
    default_config,
    detection_times,
    light_signal_time,
    min_detour,
    race_ok,
    validate_scenario,
)

cfg = default_config()
print(f"x = {cfg.x} m, v_B / c = {cfg.v_b / C:g}")
print(f"minimum detour y_min = {min_detour(cfg):.3f} m, chosen y = {cfg.y:.3f} m")

# %% [markdown]
# The detour scales linearly with the B-wave speed.

# %%
for ratio in (2, 10, 1e2, 1e4, 1e6):
    c = default_config(v_b=ratio * C)
    print(f"v_B = {ratio:>9g} c   y_min / x = {min_detour(c) / c.x:.1f}")

# %% [markdown]
# Around the threshold the race flips exactly once.

# %%
y_min = min_detour(cfg)
for f in (0.9, 0.999, 1.0, 1.001, 1.1):
    c = cfg.replace(y=f * y_min)
    print(f"y = {f:5.3f} y_min  trigger {light_signal_time(c):.3e} s  "
          f"B-wave {bwave_transit_time(c):.3e} s  race_ok={race_ok(c)}")

# %% [markdown]
# Detection order and the point where the B-wave catches photon 2.

# %%
rep = detection_times(cfg)
print(rep)
print("violations:", [str(v) for v in validate_scenario(cfg)] or "none")
print("short detour:", [str(v) for v in validate_scenario(cfg.replace(y=0.5 * y_min))])
