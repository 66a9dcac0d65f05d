"""
Scoring externally predicted processes
======================================

A model that predicts ``(m, n)`` per image hands its output over as an
``id,m,n`` CSV. The template bank turns each prediction into a
distribution, which is compared against the ground truth with every
distance and the high/low classification accuracy.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from dddscore import SimConfig, TemplateBank, evaluate
from dddscore.dataio import load_bundled_synth, read_params_csv, write_params_csv

ds, truth = load_bundled_synth()
bank = TemplateBank.build(SimConfig(raters=10_000, seed=0))

###############################################################################
# Fake a noisy predictor: the true (m, n) jittered by one step 30% of the time.
rng = np.random.default_rng(0)
rows = []
for rid, (m, n) in truth.items():
    if rng.random() < 0.3:
        m = int(np.clip(m + rng.choice([-1, 1]), 0, 6))
    rows.append((rid, m, n))

path = Path(tempfile.mkdtemp()) / "pred.csv"
write_params_csv(rows, path)

###############################################################################
# Expand and evaluate.
pred = {rid: bank.histogram(m, n) for rid, (m, n) in read_params_csv(path).items()}
report = evaluate(pred, ds.as_mapping(), threshold=5.0)
print(json.dumps({k: v for k, v in report.to_dict().items() if k != "definitions"}, indent=2))
