"""Regenerate the data files bundled under src/dddscore/data/.

The AVA- and Photo.net-layout samples are simulated ratings in the published
file layouts; no real dataset content is redistributed.

    python tools/make_sample_data.py
"""

from pathlib import Path

import numpy as np

from dddscore import dataio
from dddscore.simulator import DddParams, SimConfig, simulate_histogram

DATA = Path(__file__).resolve().parents[1] / "src" / "dddscore" / "data"
SYNTH_SEED = 2026


def ava_sample(path, rows=200, seed=11):
    rng = np.random.default_rng(seed)
    lines = []
    for i in range(1, rows + 1):
        m, n = rng.integers(0, 7, size=2)
        scale = rng.uniform(1.0, 3.0)
        votes = int(rng.integers(78, 550))
        if i in (17, 101, 188):
            votes = int(rng.integers(20, 78))  # exercises the out-of-range flag
        cfg = SimConfig(raters=votes, seed=int(rng.integers(2**63)))
        counts = simulate_histogram(DddParams(int(m), int(n), scale), cfg).counts
        image_id = 950000 + 7 * i
        tags = rng.integers(0, 66, size=2)
        challenge = int(rng.integers(1, 1400))
        lines.append(" ".join(map(str, [i, image_id, *counts.tolist(), *tags.tolist(), challenge])))
    path.write_text("\n".join(lines) + "\n")


def photonet_sample(path, rows=200, seed=12):
    rng = np.random.default_rng(seed)
    out = ["id,c1,c2,c3,c4,c5,c6,c7"]
    for i in range(1, rows + 1):
        m, n = rng.integers(0, 7, size=2)
        votes = int(rng.integers(10, 80)) if i not in (5, 150) else int(rng.integers(3, 10))
        cfg = SimConfig.for_bins(7, raters=votes, seed=int(rng.integers(2**63)))
        counts = simulate_histogram(DddParams(int(m), int(n), rng.uniform(1.0, 2.5)), cfg).counts
        out.append(",".join([f"pn{i:05d}", *map(str, counts.tolist())]))
    path.write_text("\n".join(out) + "\n")


def photonet_split(path, rows=200):
    ids = [f"pn{i:05d}" for i in range(1, rows + 1)]
    lines = ["id,split"] + [f"{rid},{'test' if k % 7 == 0 else 'train'}" for k, rid in enumerate(ids)]
    path.write_text("\n".join(lines) + "\n")


def synth(path, truth_path):
    ds, truth = dataio.synth_dataset(seed=SYNTH_SEED)
    dataio.write_counts_csv(ds, path)
    dataio.write_truth_csv(truth, truth_path)


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    ava_sample(DATA / "ava_sample.txt")
    photonet_sample(DATA / "photonet_sample.csv")
    photonet_split(DATA / "photonet_split.csv")
    synth(DATA / "synth_490.csv", DATA / "synth_490_truth.csv")
