"""Score histograms, moment statistics, S-K points and binary labels.

Every other module passes distributions around as :class:`ScoreHistogram`.
Bin values are the integers printed on the rating scale (1..10 for AVA,
1..7 for Photo.net); there is no bin-centre offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ClassLabel",
    "DegenerateHistogramError",
    "MomentSet",
    "PMF_TOL",
    "ScoreHistogram",
    "classify",
    "from_pmf",
    "moments",
    "normalize",
    "sk_boundary",
    "sk_point",
]

PMF_TOL = 1e-9

# Variance at or below this is treated as a point mass. Below it the
# standardized moments are dominated by floating-point tail residue.
DEGENERATE_VAR = 1e-12


class DegenerateHistogramError(ValueError):
    """Raised when a zero-variance histogram has no skewness or kurtosis."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoreHistogram:
    """Probability mass over K ordered, unit-spaced integer score bins.

    ``counts`` holds the raw votes when the histogram came from ratings and
    is ``None`` for purely model-generated pmfs. Arrays are read-only.
    """

    bin_values: np.ndarray
    pmf: np.ndarray
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        bins = np.asarray(self.bin_values)
        pmf = np.asarray(self.pmf, dtype=float)
        if bins.ndim != 1 or pmf.shape != bins.shape:
            raise ValueError("bin_values and pmf must be 1-D of equal length")
        if len(bins) < 1:
            raise ValueError("histogram needs at least one bin")
        if not np.issubdtype(bins.dtype, np.integer):
            raise ValueError("bin_values must be integers")
        if len(bins) > 1 and not np.all(np.diff(bins) == 1):
            raise ValueError("bin_values must be strictly increasing with unit spacing")
        if not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise ValueError("pmf entries must be finite and non-negative")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"pmf sums to {pmf.sum()!r}, not 1")
        object.__setattr__(self, "bin_values", _frozen(bins.astype(np.int64)))
        object.__setattr__(self, "pmf", _frozen(pmf))
        if self.counts is not None:
            counts = np.asarray(self.counts)
            if counts.shape != bins.shape:
                raise ValueError("counts must match bin_values")
            if not np.issubdtype(counts.dtype, np.integer) or np.any(counts < 0):
                raise ValueError("counts must be non-negative integers")
            object.__setattr__(self, "counts", _frozen(counts.astype(np.int64)))

    @property
    def k(self) -> int:
        return len(self.bin_values)

    @property
    def total(self) -> Optional[int]:
        return None if self.counts is None else int(self.counts.sum())

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def __eq__(self, other):
        if not isinstance(other, ScoreHistogram):
            return NotImplemented
        if (self.counts is None) != (other.counts is None):
            return False
        same_counts = self.counts is None or np.array_equal(self.counts, other.counts)
        return (
            np.array_equal(self.bin_values, other.bin_values)
            and np.array_equal(self.pmf, other.pmf)
            and same_counts
        )

    __hash__ = None

    def __repr__(self):
        body = self.counts if self.counts is not None else np.round(self.pmf, 4)
        return f"ScoreHistogram(bins={self.bin_values[0]}..{self.bin_values[-1]}, {body.tolist()})"


def normalize(counts: Sequence[int], bin_min: int = 1) -> ScoreHistogram:
    """Build a histogram from raw vote counts; ``pmf_k = counts_k / sum(counts)``."""
    c = np.asarray(counts)
    if c.ndim != 1 or len(c) == 0:
        raise ValueError("counts must be a non-empty 1-D sequence")
    if np.issubdtype(c.dtype, np.floating):
        if not np.all(np.isfinite(c)) or np.any(c != np.round(c)):
            raise ValueError("counts must be integers")
        c = c.astype(np.int64)
    if np.any(c < 0):
        raise ValueError("counts must be non-negative")
    total = c.sum()
    if total <= 0:
        raise ValueError("counts are all zero; cannot normalize")
    bins = np.arange(bin_min, bin_min + len(c))
    return ScoreHistogram(bins, c / total, c)


def from_pmf(pmf: Sequence[float], bin_min: int = 1) -> ScoreHistogram:
    """Wrap an already-normalized probability vector."""
    p = np.asarray(pmf, dtype=float)
    return ScoreHistogram(np.arange(bin_min, bin_min + len(p)), p)


@dataclass(frozen=True)
class MomentSet:
    """Mean, standard deviation and standardized higher moments.

    ``skew``, ``kurt`` and ``excess_kurt`` are ``None`` for a degenerate
    (zero-variance) histogram. ``kurt`` is the raw fourth standardized
    moment; ``excess_kurt`` is ``kurt - 3``.
    """

    mean: float
    std: float
    skew: Optional[float]
    kurt: Optional[float]
    excess_kurt: Optional[float]

    @property
    def defined(self) -> bool:
        return self.skew is not None


def moments(h: ScoreHistogram) -> MomentSet:
    b = h.bin_values.astype(float)
    p = h.pmf
    mean = float(np.dot(p, b))
    d = b - mean
    var = float(np.dot(p, d * d))
    std = math.sqrt(var)
    if var <= DEGENERATE_VAR:
        return MomentSet(mean, std, None, None, None)
    skew = float(np.dot(p, d**3)) / std**3
    kurt = float(np.dot(p, d**4)) / var**2
    return MomentSet(mean, std, skew, kurt, kurt - 3.0)


def sk_point(h: ScoreHistogram) -> tuple[float, float]:
    """Return ``(skewness, raw kurtosis)`` for plotting on an S-K map.

    Raises:
        DegenerateHistogramError: if the histogram has zero variance.
    """
    ms = moments(h)
    if not ms.defined:
        raise DegenerateHistogramError("zero-variance histogram has no S-K point")
    return ms.skew, ms.kurt


def sk_boundary(skew) -> np.ndarray:
    """Lower bound of the S-K map, ``K = S**2 + 1``."""
    s = np.asarray(skew, dtype=float)
    return s * s + 1.0


@dataclass(frozen=True)
class ClassLabel:
    label: str
    threshold: float = 5.0
    delta: float = 0.0

    @property
    def is_high(self) -> bool:
        return self.label == "high"


def classify(h: ScoreHistogram, threshold: float = 5.0, delta: float = 0.0) -> ClassLabel:
    """High quality iff the mean score is strictly above ``threshold + delta``."""
    label = "high" if moments(h).mean > threshold + delta else "low"
    return ClassLabel(label, threshold, delta)
