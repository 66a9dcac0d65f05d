"""
One rater's path to a score
===========================

Three positive and three negative attractors fire at random times while
white noise jitters the running score.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dddscore import DddParams, SimConfig, sample_trace

tr = sample_trace(DddParams(3, 3, scale=4.0), SimConfig(), steps=60, rng=np.random.default_rng(4))
t, v = zip(*tr.steps)

plt.step(t, v, where="post")
for when, mag in tr.events:
    plt.axvline(when, color="green" if mag > 0 else "red", alpha=0.3)
plt.xlabel("time step")
plt.ylabel("score")
plt.savefig("rater_trace.png", dpi=80)
print(f"final score {tr.final:.3f} from {len(tr.events)} attractor events")
