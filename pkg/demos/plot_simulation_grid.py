"""
Simulated score distributions over the attractor grid
=====================================================

Each cell of the 7 x 7 grid is one psychological process: ``m`` positive
and ``n`` negative attractors acting on raters who start at score 5.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dddscore import SimConfig, moments, simulate_grid

# a scale of 2 makes the spread visible; at scale 1 most mass stays on 4..6
cfg = SimConfig(raters=2000, seed=7)
grid = simulate_grid(cfg, scale=2.0)

fig, axes = plt.subplots(7, 7, figsize=(14, 12), sharex=True, sharey=True)
for m in range(7):
    for n in range(7):
        h = grid[m][n]
        ax = axes[n, m]
        ax.bar(h.bin_values, h.pmf, color="#4a7ab5")
        ax.set_title(f"m={m} n={n}  mean={moments(h).mean:.2f}", fontsize=7)
fig.tight_layout()
fig.savefig("simulation_grid.png", dpi=80)

###############################################################################
# The mirror cell (n, m) reflects the distribution about score 5, so bins
# 1..9 of one are bins 9..1 of the other up to Monte Carlo noise.
a, b = grid[5][1].pmf, grid[1][5].pmf
print("max mirror gap:", np.abs(a[:9] - b[:9][::-1]).max())
