"""Drift-diffusion rater model.

A rater starts at the middle of the scale, is pushed up by ``m`` positive
attractors and down by ``n`` negative ones, and picks up a small uniform
disturbance::

    v = middle + scale * (E_1 + ... + E_m) - scale * (E_1' + ... + E_n') + W
    E = attr_coeff * exp(-attr_rate * U(0, attr_umax))
    W = noise_amp * U(-1, 1)

Randomness layout: rater ``i`` of cell ``(m, n)`` consumes row ``i`` of a
``(raters, m + n + 1)`` matrix of uniforms drawn from a generator seeded by
``(seed, m, n)``. Columns ``0..m-1`` feed the positive attractors, ``m..m+n-1``
the negative ones and the last column the noise. A rater's score therefore
depends only on ``(seed, m, n, i)``, never on the total rater count or on
the order in which cells are simulated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .distcore import ScoreHistogram, normalize

__all__ = [
    "DddParams",
    "RaterTrace",
    "SimConfig",
    "attractor_draws",
    "bin_score",
    "bin_scores",
    "cell_rng",
    "mean_attractor",
    "sample_rater",
    "sample_trace",
    "simulate_grid",
    "simulate_histogram",
    "simulate_scores",
]

M_MAX = 6
N_MAX = 6


@dataclass(frozen=True)
class DddParams:
    """Attractor counts of one psychological process.

    Attributes:
        m: number of positive attractors.
        n: number of negative attractors.
        scale: multiplier on every attractor magnitude.
    """

    m: int
    n: int
    scale: float = 1.0

    def __post_init__(self):
        for name in ("m", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not self.scale > 0 or not np.isfinite(self.scale):
            raise ValueError(f"scale must be positive, got {self.scale!r}")


@dataclass(frozen=True)
class SimConfig:
    middle_score: float = 5.0
    raters: int = 10_000
    noise_amp: float = 0.015
    attr_coeff: float = 0.5
    attr_rate: float = 0.5
    attr_umax: float = 10.0
    seed: int = 0
    bin_min: int = 1
    bin_max: int = 10

    def __post_init__(self):
        if int(self.raters) != self.raters or self.raters < 1:
            raise ValueError("raters must be a positive integer")
        if not self.noise_amp >= 0:
            raise ValueError("noise_amp must be >= 0")
        for name in ("attr_coeff", "attr_rate", "attr_umax"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.bin_max < self.bin_min:
            raise ValueError("bin_max must be >= bin_min")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def for_bins(cls, k: int, **kw) -> "SimConfig":
        """Config for a 1..k scale with the middle score at the scale midpoint.

        Ten bins give a middle score of 5, seven bins give 4.
        """
        kw.setdefault("middle_score", 5.0 if k == 10 else (1 + k) / 2)
        return cls(bin_min=1, bin_max=k, **kw)

    @property
    def k(self) -> int:
        return self.bin_max - self.bin_min + 1

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def mean_attractor(cfg: SimConfig = SimConfig()) -> float:
    """Closed-form expectation of one attractor magnitude at scale 1."""
    a, r, u = cfg.attr_coeff, cfg.attr_rate, cfg.attr_umax
    return a * (1.0 - np.exp(-r * u)) / (r * u)


def cell_rng(seed: int, m: int, n: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(m), int(n)])


def attractor_draws(u, cfg: SimConfig) -> np.ndarray:
    """Map uniforms on [0, 1) to attractor magnitudes at scale 1."""
    return cfg.attr_coeff * np.exp(-cfg.attr_rate * cfg.attr_umax * np.asarray(u))


def _scores_from_uniforms(u: np.ndarray, params: DddParams, cfg: SimConfig) -> np.ndarray:
    m, n = params.m, params.n
    e = attractor_draws(u[..., : m + n], cfg) * params.scale
    w = cfg.noise_amp * (2.0 * u[..., m + n] - 1.0)
    return cfg.middle_score + e[..., :m].sum(axis=-1) - e[..., m:].sum(axis=-1) + w


def sample_rater(params: DddParams, cfg: SimConfig, rng: np.random.Generator) -> float:
    """Draw one unbinned rater score, advancing ``rng`` by ``m + n + 1`` uniforms."""
    u = rng.random(params.m + params.n + 1)
    return float(_scores_from_uniforms(u, params, cfg))


def simulate_scores(params: DddParams, cfg: SimConfig) -> np.ndarray:
    """Raw (unrounded, unclamped) scores of ``cfg.raters`` independent raters."""
    rng = cell_rng(cfg.seed, params.m, params.n)
    u = rng.random((cfg.raters, params.m + params.n + 1))
    return _scores_from_uniforms(u, params, cfg)


def bin_scores(v, cfg: SimConfig) -> np.ndarray:
    """Round half-to-even to the nearest integer, then clamp to the scale."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot bin a non-finite score")
    return np.clip(np.rint(v), cfg.bin_min, cfg.bin_max).astype(np.int64)


def bin_score(v: float, cfg: SimConfig) -> int:
    return int(bin_scores(v, cfg))


def simulate_histogram(params: DddParams, cfg: SimConfig) -> ScoreHistogram:
    """Count histogram of ``cfg.raters`` simulated raters for one process."""
    b = bin_scores(simulate_scores(params, cfg), cfg)
    counts = np.bincount(b - cfg.bin_min, minlength=cfg.k)
    return normalize(counts, cfg.bin_min)


def simulate_grid(
    cfg: SimConfig, m_max: int = M_MAX, n_max: int = N_MAX, scale: float = 1.0
) -> list[list[ScoreHistogram]]:
    """Histograms for every ``(m, n)`` in ``[0, m_max] x [0, n_max]``.

    Indexed ``grid[m][n]``. Each cell has its own stream so the result does
    not depend on evaluation order.
    """
    if m_max < 0 or n_max < 0:
        raise ValueError("grid bounds must be non-negative")
    return [
        [simulate_histogram(DddParams(m, n, scale), cfg) for n in range(n_max + 1)]
        for m in range(m_max + 1)
    ]


@dataclass(frozen=True)
class RaterTrace:
    """Illustrative time course of one rater.

    ``steps`` holds ``(t, value)`` for ``t = 0..T``; ``events`` holds
    ``(t, signed magnitude)`` for each attractor, sorted by time. The value
    at ``t`` is the middle score plus every event up to ``t`` plus fresh
    white noise (none at ``t = 0``), so the final value is the rater's score.
    """

    steps: list[tuple[int, float]]
    events: list[tuple[int, float]]
    terminal_noise: float = 0.0
    middle_score: float = 5.0

    @property
    def final(self) -> float:
        return self.steps[-1][1]

    def recompute_final(self) -> float:
        return self.middle_score + sum(mag for _, mag in self.events) + self.terminal_noise


def sample_trace(
    params: DddParams,
    cfg: SimConfig,
    steps: int = 100,
    rng: Optional[np.random.Generator] = None,
) -> RaterTrace:
    """Single-rater trajectory for plotting.

    The first ``m + n + 1`` uniforms are consumed exactly as in
    :func:`sample_rater`, so with the same generator state the final value
    equals that rater's score. Event times and intermediate noise come from
    later draws.
    """
    m, n = params.m, params.n
    if steps < max(m + n, 1):
        raise ValueError(f"steps ({steps}) must be >= m + n ({m + n}) and >= 1")
    if rng is None:
        rng = cell_rng(cfg.seed, m, n)
    u = rng.random(m + n + 1)
    mags = attractor_draws(u[: m + n], cfg) * params.scale
    signed = np.concatenate([mags[:m], -mags[m:]])
    w_final = cfg.noise_amp * (2.0 * u[m + n] - 1.0)

    times = rng.choice(np.arange(1, steps + 1), size=m + n, replace=False)
    jitter = cfg.noise_amp * (2.0 * rng.random(steps - 1) - 1.0)

    order = np.argsort(times, kind="stable")
    events = [(int(times[i]), float(signed[i])) for i in order]
    drift = np.zeros(steps + 1)
    for t, mag in events:
        drift[t] += mag
    level = cfg.middle_score + np.cumsum(drift)
    noise = np.concatenate([[0.0], jitter, [w_final]])
    values = level + noise
    values[0] = cfg.middle_score
    values[-1] = _scores_from_uniforms(u, params, cfg)
    pts = [(t, float(values[t])) for t in range(steps + 1)]
    return RaterTrace(pts, events, float(w_final), cfg.middle_score)
