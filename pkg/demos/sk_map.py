"""
Skewness-kurtosis map of a ratings file
=======================================

Each non-degenerate histogram becomes a point (S, K). No distribution can
fall below the curve K = S^2 + 1.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dddscore import DegenerateHistogramError, sk_boundary, sk_point
from dddscore.dataio import bundled_path, parse_ava

ds = parse_ava(bundled_path("ava_sample.txt"))
pts = []
for r in ds:
    try:
        pts.append(sk_point(r.histogram))
    except DegenerateHistogramError:
        pass
s, k = np.array(pts).T

grid = np.linspace(s.min() - 0.5, s.max() + 0.5, 200)
plt.plot(grid, sk_boundary(grid), "k--", label="K = S^2 + 1")
plt.scatter(s, k, s=6)
plt.xlabel("skewness")
plt.ylabel("kurtosis")
plt.yscale("log")
plt.legend()
plt.savefig("sk_map.png", dpi=80)
print(f"{len(pts)} points, {len(ds) - len(pts)} point-mass histograms skipped")
print("smallest K - (S^2 + 1):", float((k - sk_boundary(s)).min()))
