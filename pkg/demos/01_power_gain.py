"""How much does the surface help one antenna?

Walk through the single-antenna gain analysis: the phases that line every
reflected path up with the direct path, the resulting maximum power gain
as the surface grows, and the gain profile over the antenna position.
"""
# %%
import math

import numpy as np

from risradar.analysis import (composite_amplitude, optimal_lateral_offset,
                               optimal_phases_and_max_gain, power_gain, power_gain_profile)
from risradar.geometry import Direction, GridChannel, make_geometry

target = Direction(math.pi / 6, math.pi / 4)

# %% Optimal phases for a 2x2 surface, checked against the channel model
geom = make_geometry(4, 1, array_offset=(0.0, 0.0, 1.5))
res = optimal_phases_and_max_gain(geom, target)
ch = GridChannel.build(geom, [target])
print("optimal phases (deg):", np.round(np.degrees(res.shifts), 1))
print(f"closed-form gain {res.gain:.5f}, channel model at s* {power_gain(ch, res.shifts, res.shifts):.5f}")
rng = np.random.default_rng(0)
random_gains = [power_gain(ch, *rng.uniform(0, 2 * np.pi, (2, 4))) for _ in range(1000)]
print(f"best of 1000 random phase pairs: {max(random_gains):.5f}")

# %% Maximum gain grows with the number of elements
for M in (0, 1, 4, 9, 16, 36, 64):
    g = optimal_phases_and_max_gain(make_geometry(M, 1, array_offset=(0, 0, 1.5)), target).gain
    print(f"M={M:3d}  B={g:8.3f}")

# %% Placement: centred between elements is best; there is a best distance
rho = composite_amplitude(geom, target)
lx = np.linspace(-1.5, 1.5, 13)
print("B along l_x at l_z = 1:", np.round(power_gain_profile(lx, 1.0, 4, 0.5, rho), 4))
lz = np.linspace(0.1, 4.0, 40)
prof = power_gain_profile(0.0, lz, 4, 0.5, rho)
print(f"best distance on this grid: l_z = {lz[np.argmax(prof)]:.2f} (gain {prof.max():.4f})")
print("best lateral offset at l_z = 0.5:", optimal_lateral_offset(0.5, 4, 0.5, rho))
