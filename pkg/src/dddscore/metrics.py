"""Distribution distances and the aggregated evaluation report.

P-prefixed metrics compare pmfs, C-prefixed metrics compare CDFs:
ED Euclidean, CE cross entropy, JS Jensen-Shannon, CS Chebyshev,
KL Kullback-Leibler. Logs are natural. Asymmetric metrics take the
ground truth as the first argument.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .distcore import ScoreHistogram, classify
from .fitting import resolve_threads, rmse

__all__ = [
    "EPS",
    "METRIC_DEFINITIONS",
    "METRIC_KEYS",
    "MetricReport",
    "ced",
    "cjs",
    "emd",
    "evaluate",
    "floor_pmf",
    "pair_metrics",
    "pce",
    "pcs",
    "ped",
    "pjs",
    "pkl",
]

EPS = 1e-6

METRIC_KEYS = ("ped", "pce", "pjs", "ced", "cjs", "pcs", "pkl", "emd")

METRIC_DEFINITIONS = {
    "ped": "sqrt(sum_k (p_k - q_k)^2)",
    "pce": "-sum_k p_k ln q~_k, q~ = q floored at 1e-6 and renormalized",
    "pjs": "Jensen-Shannon divergence of floored pmfs, nats",
    "ced": "sqrt(sum_k (P_k - Q_k)^2) on CDFs",
    "cjs": "0.5 sum_k P_k ln(2P_k/(P_k+Q_k)) + 0.5 sum_k Q_k ln(2Q_k/(P_k+Q_k)) on CDFs",
    "pcs": "max_k |p_k - q_k|",
    "pkl": "sum_k p~_k ln(p~_k/q~_k) on floored pmfs, truth first",
    "emd": "((1/K) sum_k |P_k - Q_k|^r)^(1/r) on CDFs, r=1",
    "emd2": "as emd with r=2",
    "rmse": "sqrt((1/K) sum_k (p_k - q_k)^2)",
}


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(getattr(p, "pmf", p), dtype=float)
    q = np.asarray(getattr(q, "pmf", q), dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return p, q


def floor_pmf(p, eps: float = EPS) -> np.ndarray:
    p = np.maximum(np.asarray(p, dtype=float), eps)
    return p / p.sum()


def _xlogx_ratio(a: np.ndarray, b: np.ndarray) -> float:
    """sum a ln(a/b) with 0 ln(0/x) = 0."""
    mask = a > 0
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))


def ped(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.sqrt(np.sum((p - q) ** 2)))


def pce(p, q, eps: float = EPS) -> float:
    p, q = _pair(p, q)
    return float(-np.sum(p * np.log(floor_pmf(q, eps))))


def pkl(p, q, eps: float = EPS) -> float:
    p, q = _pair(p, q)
    # clamp float residue of order 1e-17 on near-identical inputs
    return max(0.0, _xlogx_ratio(floor_pmf(p, eps), floor_pmf(q, eps)))


def pjs(p, q, eps: float = EPS) -> float:
    p, q = _pair(p, q)
    pf, qf = floor_pmf(p, eps), floor_pmf(q, eps)
    mid = 0.5 * (pf + qf)
    return max(0.0, 0.5 * _xlogx_ratio(pf, mid) + 0.5 * _xlogx_ratio(qf, mid))


def pcs(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.max(np.abs(p - q)))


def ced(p, q) -> float:
    p, q = _pair(p, q)
    d = np.cumsum(p) - np.cumsum(q)
    return float(np.sqrt(np.sum(d * d)))


def cjs(p, q) -> float:
    p, q = _pair(p, q)
    cp, cq = np.cumsum(p), np.cumsum(q)
    mid = 0.5 * (cp + cq)
    return max(0.0, 0.5 * _xlogx_ratio(cp, mid) + 0.5 * _xlogx_ratio(cq, mid))


def emd(p, q, r: int = 1) -> float:
    """Earth mover's distance on a unit-spaced ordinal scale via CDF gaps."""
    if r not in (1, 2):
        raise ValueError("r must be 1 or 2")
    p, q = _pair(p, q)
    d = np.abs(np.cumsum(p) - np.cumsum(q))
    if r == 1:
        return float(np.mean(d))
    return float(np.sqrt(np.mean(d * d)))


def pair_metrics(truth, pred) -> dict[str, float]:
    """Every distance for one (truth, prediction) pair."""
    return {
        "ped": ped(truth, pred),
        "pce": pce(truth, pred),
        "pjs": pjs(truth, pred),
        "ced": ced(truth, pred),
        "cjs": cjs(truth, pred),
        "pcs": pcs(truth, pred),
        "pkl": pkl(truth, pred),
        "emd": emd(truth, pred, 1),
        "emd2": emd(truth, pred, 2),
        "rmse": rmse(truth, pred),
    }


@dataclass
class MetricReport:
    """Dataset means of every metric plus classification accuracy.

    ``per_pair`` keeps the individual metric dicts keyed by id, in sorted
    id order; ``exceptions`` lists ids present on only one side.
    """

    ped: Optional[float]
    pce: Optional[float]
    pjs: Optional[float]
    ced: Optional[float]
    cjs: Optional[float]
    pcs: Optional[float]
    pkl: Optional[float]
    emd: Optional[float]
    class_acc: Optional[float]
    count: int
    emd2: Optional[float] = None
    rmse: Optional[float] = None
    threshold: float = 5.0
    delta: float = 0.0
    exceptions: dict[str, list[str]] = field(default_factory=dict)
    per_pair: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self, verbose: bool = False) -> dict:
        d = {k: getattr(self, k) for k in METRIC_KEYS}
        d["class_acc"] = self.class_acc
        d["count"] = self.count
        d["threshold"] = self.threshold
        d["delta"] = self.delta
        d["exceptions"] = self.exceptions
        d["definitions"] = {k: METRIC_DEFINITIONS[k] for k in METRIC_KEYS}
        if verbose:
            d["emd2"] = self.emd2
            d["rmse"] = self.rmse
            d["definitions"] = dict(METRIC_DEFINITIONS)
            d["per_pair"] = self.per_pair
        return d

    def to_json(self, verbose: bool = False) -> str:
        return json.dumps(self.to_dict(verbose), indent=2, sort_keys=False) + "\n"


def _mean(xs) -> Optional[float]:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else None


def evaluate(
    pred: Mapping[str, ScoreHistogram],
    truth: Mapping[str, ScoreHistogram],
    threshold: float = 5.0,
    delta: float = 0.0,
    threads: Optional[int] = 1,
) -> MetricReport:
    """Compare predictions with ground truth pairwise by id and average.

    Ids on only one side are reported under ``exceptions`` and skipped.
    Means use exactly rounded sums, so pair order never changes the result.
    """
    ids = sorted(set(pred) & set(truth))
    exceptions = {
        "missing_pred": sorted(set(truth) - set(pred)),
        "missing_truth": sorted(set(pred) - set(truth)),
    }
    for i in ids:
        if pred[i].k != truth[i].k:
            raise ValueError(f"bin count mismatch for id {i!r}")

    def one(i):
        t, p = truth[i], pred[i]
        row = pair_metrics(t, p)
        row["agree"] = float(
            classify(p, threshold, delta).label == classify(t, threshold, delta).label
        )
        return row

    workers = resolve_threads(threads)
    if workers == 1 or len(ids) < 2:
        rows = [one(i) for i in ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, ids))
    per_pair = dict(zip(ids, rows))
    means = {k: _mean(r[k] for r in rows) for k in (*METRIC_KEYS, "emd2", "rmse")}
    return MetricReport(
        class_acc=_mean(r["agree"] for r in rows),
        count=len(rows),
        threshold=threshold,
        delta=delta,
        exceptions=exceptions,
        per_pair=per_pair,
        **means,
    )
