import json
import math

import numpy as np
import pytest
from scipy.spatial.distance import jensenshannon
from scipy.stats import entropy, wasserstein_distance

from conftest import random_histograms
from dddscore import ced, cjs, emd, evaluate, from_pmf, normalize, pce, pcs, ped, pjs, pkl
from dddscore.metrics import METRIC_KEYS, floor_pmf, pair_metrics

BINS = np.arange(1, 11)
SYMMETRIC = {"ped": ped, "pjs": pjs, "pcs": pcs, "ced": ced, "cjs": cjs, "emd": emd}


def point(i, k=10):
    c = [0] * k
    c[i - 1] = 1
    return normalize(c)


def pairs(rng, n):
    hs = random_histograms(rng, 2 * n)
    return list(zip(hs[::2], hs[1::2]))


def test_identity(uniform10, rng):
    for h in [uniform10, point(3)] + random_histograms(rng, 20):
        for f in (ped, pkl, pjs, pcs, ced, cjs, emd):
            assert f(h, h) == 0
        assert emd(h, h, 2) == 0
        assert pce(h, h) == pytest.approx(entropy(floor_pmf(h.pmf)) if h.pmf.min() == 0 else entropy(h.pmf), abs=2e-4)


def test_uniform_cross_entropy(uniform10):
    assert pce(uniform10, uniform10) == pytest.approx(math.log(10), abs=1e-12)
    assert round(pce(uniform10, uniform10), 4) == 2.3026


def test_point_mass_distances():
    assert ced(point(1), point(10)) == 3.0
    assert emd(point(1), point(10)) == 0.9
    for i in range(1, 10):
        assert emd(point(i), point(i + 1)) == pytest.approx(0.1, abs=1e-15)


def test_emd_closed_form_all_pairs():
    for i in range(1, 11):
        for j in range(1, 11):
            assert emd(point(i), point(j)) == abs(i - j) / 10


def test_emd_matches_wasserstein(rng):
    for p, q in pairs(rng, 100):
        w = wasserstein_distance(BINS, BINS, p.pmf, q.pmf)
        assert emd(p, q) == pytest.approx(w / 10, abs=1e-12)


def test_emd_r2(rng):
    for p, q in pairs(rng, 50):
        d = np.cumsum(p.pmf) - np.cumsum(q.pmf)
        assert emd(p, q, 2) == pytest.approx(math.sqrt(np.mean(d**2)), abs=1e-15)
    with pytest.raises(ValueError):
        emd(p, q, 3)


def test_log_metrics_match_scipy(rng):
    for p, q in pairs(rng, 100):
        pf, qf = floor_pmf(p.pmf), floor_pmf(q.pmf)
        assert pkl(p, q) == pytest.approx(entropy(pf, qf), abs=1e-12)
        assert pjs(p, q) == pytest.approx(jensenshannon(pf, qf) ** 2, abs=1e-12)
        assert pce(p, q) == pytest.approx(-np.sum(p.pmf * np.log(qf)), abs=1e-12)


def test_cdf_metrics_brute_force(rng):
    for p, q in pairs(rng, 100):
        P = [sum(p.pmf[: k + 1]) for k in range(10)]
        Q = [sum(q.pmf[: k + 1]) for k in range(10)]
        assert ced(p, q) == pytest.approx(math.sqrt(sum((a - b) ** 2 for a, b in zip(P, Q))), abs=1e-12)
        expect = 0.0
        for a, b in zip(P, Q):
            if a > 0:
                expect += 0.5 * a * math.log(2 * a / (a + b))
            if b > 0:
                expect += 0.5 * b * math.log(2 * b / (a + b))
        assert cjs(p, q) == pytest.approx(expect, abs=1e-12)
        assert pcs(p, q) == pytest.approx(max(abs(a - b) for a, b in zip(p.pmf, q.pmf)), abs=0)


def test_axioms(rng):
    for p, q in pairs(rng, 200):
        m = pair_metrics(p, q)
        assert all(v >= 0 for v in m.values())
        assert m["pjs"] <= math.log(2)
        for name, f in SYMMETRIC.items():
            assert f(p, q) == pytest.approx(f(q, p), abs=1e-15), name


def test_kl_asymmetric():
    p = from_pmf([0.7, 0.2, 0.1])
    q = from_pmf([0.2, 0.3, 0.5])
    assert pkl(p, q) != pytest.approx(pkl(q, p), abs=1e-3)
    assert pce(p, q) != pytest.approx(pce(q, p), abs=1e-3)


def test_floor_stability(rng):
    for _ in range(100):
        a = rng.dirichlet(np.ones(10)) * 0.99 + 0.001
        b = rng.dirichlet(np.ones(10)) * 0.99 + 0.001
        p, q = from_pmf(a / a.sum()), from_pmf(b / b.sum())
        assert abs(pkl(p, q) - entropy(p.pmf, q.pmf)) < 1e-4
        assert abs(pjs(p, q) - jensenshannon(p.pmf, q.pmf) ** 2) < 1e-4
        assert abs(pce(p, q) + np.sum(p.pmf * np.log(q.pmf))) < 1e-4


def test_length_mismatch():
    for f in (ped, pce, pjs, pkl, pcs, ced, cjs, emd):
        with pytest.raises(ValueError):
            f([0.5, 0.5], [1.0, 0.0, 0.0])


def test_evaluate_identity(rng):
    hs = {f"i{k}": h for k, h in enumerate(random_histograms(rng, 30))}
    rep = evaluate(hs, hs)
    for k in METRIC_KEYS:
        if k != "pce":
            assert getattr(rep, k) == 0
    # cross entropy of a distribution with itself is its entropy
    assert rep.pce == pytest.approx(np.mean([pce(h, h) for h in hs.values()]), abs=1e-12)
    assert rep.class_acc == 1.0 and rep.count == 30


def test_evaluate_permutation_invariant(rng):
    hs = random_histograms(rng, 40)
    truth = {f"i{k}": h for k, h in enumerate(hs[:20])}
    pred = {f"i{k}": h for k, h in enumerate(hs[20:])}
    a = evaluate(pred, truth)
    keys = list(truth)
    rng.shuffle(keys)
    b = evaluate({k: pred[k] for k in reversed(keys)}, {k: truth[k] for k in keys}, threads=4)
    assert a.to_json(verbose=True) == b.to_json(verbose=True)


def test_evaluate_missing_ids(rng):
    hs = random_histograms(rng, 4)
    rep = evaluate({"a": hs[0], "b": hs[1], "x": hs[2]}, {"a": hs[0], "b": hs[1], "y": hs[3]})
    assert rep.count == 2
    assert rep.exceptions == {"missing_pred": ["y"], "missing_truth": ["x"]}


def test_evaluate_classification():
    hi, lo = point(8), point(3)
    rep = evaluate({"a": hi, "b": hi}, {"a": hi, "b": lo})
    assert rep.class_acc == 0.5


def test_report_json_keys(rng):
    hs = {f"i{k}": h for k, h in enumerate(random_histograms(rng, 5))}
    d = json.loads(evaluate(hs, hs).to_json())
    assert list(d)[:9] == ["ped", "pce", "pjs", "ced", "cjs", "pcs", "pkl", "emd", "class_acc"]
    assert set(d["definitions"]) == set(METRIC_KEYS)
    assert "per_pair" not in d
    assert "per_pair" in json.loads(evaluate(hs, hs).to_json(verbose=True))
