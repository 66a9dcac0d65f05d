"""Exhaustive DDD fitting, the discretized Gaussian baseline and fit-error reports."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .distcore import MomentSet, ScoreHistogram, moments, normalize
from .simulator import M_MAX, N_MAX, DddParams, SimConfig, simulate_histogram

__all__ = [
    "FitReport",
    "FitResult",
    "GaussianParams",
    "TemplateBank",
    "bucket_edges",
    "calibrate_scale",
    "bucket_of",
    "discretized_gaussian",
    "fit_ddd",
    "fit_gaussian",
    "fit_many",
    "fit_report",
    "resolve_threads",
    "rmse",
]


def rmse(p, q) -> float:
    """Root mean square difference between two pmfs, averaged over bins."""
    p = np.asarray(getattr(p, "pmf", p), dtype=float)
    q = np.asarray(getattr(q, "pmf", q), dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    d = p - q
    return math.sqrt(float(np.dot(d, d)) / len(d))


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class FitResult:
    """Outcome of fitting one target histogram.

    ``candidates`` lists ``(m, n, rmse)`` over the whole grid when requested
    from :func:`fit_ddd`; it is ``None`` otherwise.
    """

    params: Union[DddParams, GaussianParams]
    fitted: ScoreHistogram
    distance: float
    candidates: Optional[list[tuple[int, int, float]]] = None


class TemplateBank:
    """Precomputed simulated histograms for every ``(m, n)`` cell.

    Entries are exactly what :func:`simulate_histogram` returns for the same
    config and scale. Immutable once built.
    """

    def __init__(self, cfg: SimConfig, counts: np.ndarray, scale: float = 1.0):
        counts = np.array(counts, dtype=np.int64)
        if counts.ndim != 3 or counts.shape[2] != cfg.k:
            raise ValueError("counts must have shape (m_max+1, n_max+1, K)")
        counts.setflags(write=False)
        self.cfg = cfg
        self.scale = float(scale)
        self.counts = counts
        self._hists = [
            [normalize(counts[m, n], cfg.bin_min) for n in range(counts.shape[1])]
            for m in range(counts.shape[0])
        ]

    @classmethod
    def build(
        cls, cfg: SimConfig, scale: float = 1.0, m_max: int = M_MAX, n_max: int = N_MAX
    ) -> "TemplateBank":
        counts = np.stack(
            [
                np.stack(
                    [simulate_histogram(DddParams(m, n, scale), cfg).counts for n in range(n_max + 1)]
                )
                for m in range(m_max + 1)
            ]
        )
        return cls(cfg, counts, scale)

    @property
    def m_max(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def n_max(self) -> int:
        return self.counts.shape[1] - 1

    @property
    def fingerprint(self) -> dict:
        c = self.cfg
        return {
            "seed": int(c.seed),
            "raters": int(c.raters),
            "scale": self.scale,
            "bins": [c.bin_min, c.bin_max],
            "middle_score": float(c.middle_score),
            "noise_amp": c.noise_amp,
            "attr": [c.attr_coeff, c.attr_rate, c.attr_umax],
            "grid": [self.m_max, self.n_max],
        }

    def matches(self, cfg: SimConfig, scale: float = 1.0) -> bool:
        return cfg == self.cfg and float(scale) == self.scale

    def histogram(self, m: int, n: int) -> ScoreHistogram:
        return self._hists[m][n]

    def params(self, m: int, n: int) -> DddParams:
        return DddParams(m, n, self.scale)

    def cells(self):
        for m in range(self.m_max + 1):
            for n in range(self.n_max + 1):
                yield m, n


def fit_ddd(
    target: ScoreHistogram,
    bank: TemplateBank,
    cfg: Optional[SimConfig] = None,
    candidates: bool = False,
) -> FitResult:
    """Pick the grid cell whose template is closest to ``target`` in RMSE.

    Every cell is scored. Ties go to the smaller ``m + n``, then the smaller
    ``n``, i.e. the simplest process.
    """
    if cfg is not None and cfg != bank.cfg:
        raise ValueError("template bank was built for a different config")
    if target.k != bank.cfg.k:
        raise ValueError(f"target has {target.k} bins, bank has {bank.cfg.k}")
    table = [(m, n, rmse(target, bank.histogram(m, n))) for m, n in bank.cells()]
    m, n, d = min(table, key=lambda r: (r[2], r[0] + r[1], r[1]))
    return FitResult(bank.params(m, n), bank.histogram(m, n), d, table if candidates else None)


def discretized_gaussian(mu: float, sigma: float, bin_values) -> np.ndarray:
    """Gaussian mass on unit-width bins by CDF differences, renormalized.

    ``sigma == 0`` yields a point mass at the bin nearest ``mu``.
    """
    b = np.asarray(bin_values, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        q = np.zeros(len(b))
        q[int(np.argmin(np.abs(b - mu)))] = 1.0
        return q
    # survival function on the upper tail keeps precision when mu sits far left
    upper = (b + 0.5 - mu) / sigma
    lower = (b - 0.5 - mu) / sigma
    q = np.where(
        lower > 0, norm.sf(lower) - norm.sf(upper), norm.cdf(upper) - norm.cdf(lower)
    )
    q = np.clip(q, 0.0, None)
    s = q.sum()
    if s <= 0:
        q = np.zeros(len(b))
        q[int(np.argmin(np.abs(b - mu)))] = 1.0
        return q
    return q / s


def fit_gaussian(target: ScoreHistogram) -> FitResult:
    """Method-of-moments Gaussian, discretized onto the target's bins."""
    ms = moments(target)
    params = GaussianParams(ms.mean, ms.std if ms.defined else 0.0)
    q = discretized_gaussian(params.mu, params.sigma, target.bin_values)
    fitted = ScoreHistogram(target.bin_values, q)
    return FitResult(params, fitted, rmse(target, fitted))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``DDD_THREADS`` (0 means auto)."""
    if threads is None:
        raw = os.environ.get("DDD_THREADS", "0").strip() or "0"
        threads = int(raw)
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def fit_many(
    targets: Sequence[ScoreHistogram],
    bank: TemplateBank,
    threads: Optional[int] = None,
    method: str = "ddd",
) -> list[FitResult]:
    """Fit each target independently; output order follows input order."""
    if method == "ddd":
        fn = lambda h: fit_ddd(h, bank)  # noqa: E731
    elif method == "gaussian":
        fn = fit_gaussian
    else:
        raise ValueError(f"unknown method {method!r}")
    workers = resolve_threads(threads)
    if workers == 1 or len(targets) < 2:
        return [fn(h) for h in targets]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, targets))


def calibrate_scale(
    targets: Sequence[ScoreHistogram],
    cfg: SimConfig,
    scales: Sequence[float],
    m_max: int = M_MAX,
    n_max: int = N_MAX,
    threads: Optional[int] = None,
) -> tuple[float, list[tuple[float, float]]]:
    """Pick the attractor scale whose bank fits ``targets`` best on average.

    Builds one bank per candidate scale and scores it by the mean best-fit
    RMSE. Returns the winning scale and the ``(scale, mean rmse)`` table in
    input order; ties go to the earlier candidate.
    """
    if not scales:
        raise ValueError("need at least one candidate scale")
    if not targets:
        raise ValueError("need at least one target histogram")
    table = []
    for sc in scales:
        bank = TemplateBank.build(cfg, sc, m_max, n_max)
        fits = fit_many(targets, bank, threads)
        table.append((float(sc), math.fsum(f.distance for f in fits) / len(fits)))
    best = min(range(len(table)), key=lambda i: table[i][1])
    return table[best][0], table


def bucket_edges(bin_min: int, bin_max: int) -> list[tuple[float, float, str]]:
    """Unit-wide mean-score buckets ``[lo, lo + 1)``.

    For a 1..10 scale this gives 1-2 through 8-9; the last bucket also takes
    means up to the top of the scale so every histogram lands somewhere.
    """
    los = list(range(bin_min, max(bin_max - 1, bin_min + 1)))
    out = []
    for i, lo in enumerate(los):
        hi = lo + 1 if i < len(los) - 1 else math.inf
        out.append((float(lo), hi, f"{lo}-{lo + 1}"))
    return out


def bucket_of(mean: float, edges) -> int:
    """Index of the half-open bucket holding ``mean``; below the first goes to 0."""
    for i, (lo, hi, _) in enumerate(edges):
        if lo <= mean < hi:
            return i
    return 0


MOMENT_KEYS = ("mu", "sigma", "skew", "kurt")


def _moment_errors(t: MomentSet, f: MomentSet, higher: bool) -> dict:
    err = {"mu": (t.mean - f.mean) ** 2, "sigma": (t.std - f.std) ** 2}
    if higher:
        err["skew"] = (t.skew - f.skew) ** 2
        err["kurt"] = (t.excess_kurt - f.excess_kurt) ** 2
    return err


@dataclass
class FitReport:
    """Per-bucket fit RMSE and per-moment MSE for DDD and the Gaussian baseline.

    Bucket values are ``None`` for empty buckets. Kurtosis errors use excess
    kurtosis. Skew/kurt MSEs average over the records where the target and
    both fits have non-zero variance, the same set for both methods;
    ``moment_counts`` says how many.
    """

    buckets: list[str]
    rmse: dict[str, dict[str, Optional[float]]]
    bucket_counts: dict[str, int]
    moment_mse: dict[str, dict[str, Optional[float]]]
    moment_counts: dict[str, dict[str, int]]
    per_record: list[dict] = field(default_factory=list)

    METHODS = ("Gaussian", "DDD")

    def table1_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.buckets + ["all"]
        w.writerow(["method"] + cols)
        for meth in self.METHODS:
            w.writerow([meth] + [_fmt(self.rmse[meth][c]) for c in cols])
        w.writerow(["count"] + [self.bucket_counts[c] for c in cols])
        return buf.getvalue()

    def table2_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "mu_mse", "sigma_mse", "skew_mse", "kurt_mse"])
        for meth in self.METHODS:
            w.writerow([meth] + [_fmt(self.moment_mse[meth][k]) for k in MOMENT_KEYS])
        return buf.getvalue()

    def format_text(self) -> str:
        cols = self.buckets + ["all"]
        width = max(8, *(len(c) + 1 for c in cols))
        lines = ["Fitting RMSE by mean-score bucket"]
        lines.append("method".ljust(10) + "".join(c.rjust(width) for c in cols))
        for meth in self.METHODS:
            cells = [_fmt(self.rmse[meth][c], 4) or "-" for c in cols]
            lines.append(meth.ljust(10) + "".join(x.rjust(width) for x in cells))
        lines.append("count".ljust(10) + "".join(str(self.bucket_counts[c]).rjust(width) for c in cols))
        lines.append("")
        lines.append("Moment MSE (kurtosis in excess form)")
        lines.append("method".ljust(10) + "".join(k.rjust(10) for k in MOMENT_KEYS))
        for meth in self.METHODS:
            cells = [_fmt(self.moment_mse[meth][k], 4) or "-" for k in MOMENT_KEYS]
            lines.append(meth.ljust(10) + "".join(x.rjust(10) for x in cells))
        return "\n".join(lines) + "\n"


def _fmt(x, digits: Optional[int] = None) -> str:
    if x is None:
        return ""
    if digits is not None:
        return f"{x:.{digits}f}"
    return f"{x:.6g}"


def _mean(xs) -> Optional[float]:
    xs = list(xs)
    # fsum is exactly rounded, so the result does not depend on summation order
    return math.fsum(xs) / len(xs) if xs else None


def fit_report(
    targets: Sequence[ScoreHistogram],
    bank: TemplateBank,
    ids: Optional[Sequence[str]] = None,
    threads: Optional[int] = None,
) -> FitReport:
    """Fit every target with both models and tabulate the errors."""
    targets = list(targets)
    if ids is None:
        ids = [str(i) for i in range(len(targets))]
    edges = bucket_edges(bank.cfg.bin_min, bank.cfg.bin_max)
    labels = [e[2] for e in edges]
    ddd = fit_many(targets, bank, threads)
    gau = fit_many(targets, bank, threads, method="gaussian")

    per_record = []
    for rid, t, fd, fg in zip(ids, targets, ddd, gau):
        mt, md, mg = moments(t), moments(fd.fitted), moments(fg.fitted)
        # compare higher moments on a common record set only
        higher = mt.defined and md.defined and mg.defined
        per_record.append(
            {
                "id": rid,
                "bucket": labels[bucket_of(mt.mean, edges)],
                "mean": mt.mean,
                "DDD": fd,
                "Gaussian": fg,
                "err": {
                    "DDD": _moment_errors(mt, md, higher),
                    "Gaussian": _moment_errors(mt, mg, higher),
                },
            }
        )

    rmse_tab = {}
    for meth in FitReport.METHODS:
        row = {}
        for lab in labels:
            row[lab] = _mean(r[meth].distance for r in per_record if r["bucket"] == lab)
        row["all"] = _mean(r[meth].distance for r in per_record)
        rmse_tab[meth] = row
    counts = {lab: sum(r["bucket"] == lab for r in per_record) for lab in labels}
    counts["all"] = len(per_record)

    mse, mcount = {}, {}
    for meth in FitReport.METHODS:
        vals = {k: [r["err"][meth][k] for r in per_record if k in r["err"][meth]] for k in MOMENT_KEYS}
        mse[meth] = {k: _mean(v) for k, v in vals.items()}
        mcount[meth] = {k: len(v) for k, v in vals.items()}
    return FitReport(labels, rmse_tab, counts, mse, mcount, per_record)
