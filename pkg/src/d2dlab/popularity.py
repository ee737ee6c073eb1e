"""Mandelbrot-Zipf (MZipf) popularity model: evaluation, sampling, and KL fitting.

The MZipf law assigns rank f (1-based) the probability (f+q)^-gamma / Z,
where Z normalizes over the library of M files. The plateau factor q
flattens the head of the distribution up to roughly rank q; q=0 recovers
a pure Zipf law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "PopularityModel",
    "EmpiricalDistribution",
    "FitGrid",
    "FitResult",
    "UnidentifiableFitError",
    "mzipf_pmf",
    "mzipf_sample",
    "sample_ranks",
    "kl_distance",
    "fit_mzipf",
]


class UnidentifiableFitError(ValueError):
    """Raised when the empirical input cannot identify (gamma, q)."""


@dataclass(frozen=True)
class PopularityModel:
    """MZipf popularity distribution over ranks 1..m_total.

    Parameters
    ----------
    gamma : float
        Zipf factor (tail decay exponent), must be > 0.
    q : float
        Plateau factor, must be >= 0.
    m_total : int
        Library size M, must be >= 1.
    """

    gamma: float
    q: float
    m_total: int
    normalizer: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.q < 0:
            raise ValueError(f"q must be non-negative, got {self.q}")
        if self.m_total < 1:
            raise ValueError(f"m_total must be >= 1, got {self.m_total}")
        ranks = np.arange(1, self.m_total + 1, dtype=np.float64)
        z = float(np.power(ranks + self.q, -self.gamma).sum())
        object.__setattr__(self, "normalizer", z)

    @cached_property
    def pmf_values(self) -> np.ndarray:
        """Probability of each rank, shape (m_total,)."""
        ranks = np.arange(1, self.m_total + 1, dtype=np.float64)
        return np.power(ranks + self.q, -self.gamma) / self.normalizer

    @cached_property
    def cdf_values(self) -> np.ndarray:
        return np.cumsum(self.pmf_values)

    def pmf(self, f: int) -> float:
        return mzipf_pmf(self, f)


def mzipf_pmf(model: PopularityModel, f: int) -> float:
    """Probability that rank f is requested, per the MZipf law."""
    if not 1 <= f <= model.m_total:
        raise ValueError(f"rank {f} outside 1..{model.m_total}")
    return float((f + model.q) ** (-model.gamma) / model.normalizer)


def mzipf_sample(model: PopularityModel, draw: float) -> int:
    """Map a uniform draw in [0, 1) to a rank by inverse-CDF lookup.

    The returned rank r satisfies CDF(r-1) <= draw < CDF(r), so equal
    draws always map to equal ranks.
    """
    if not 0.0 <= draw < 1.0:
        raise ValueError(f"draw must be in [0, 1), got {draw}")
    idx = int(np.searchsorted(model.cdf_values, draw, side="right"))
    return min(idx, model.m_total - 1) + 1


def sample_ranks(model: PopularityModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized inverse-CDF sampling; consistent with mzipf_sample."""
    draws = rng.random(size)
    idx = np.searchsorted(model.cdf_values, draws, side="right")
    return np.minimum(idx, model.m_total - 1) + 1


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Ranked request counts, rank 1 = most requested.

    Counts are non-negative reals ordered non-increasingly. Log ingestion
    always produces integers; real values are accepted so that an exact
    model pmf can be fed back in as a degenerate "empirical" input.
    """

    counts: np.ndarray
    total: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d vector")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if np.any(np.diff(counts) > 0):
            raise ValueError("counts must be sorted non-increasing")
        total = float(counts.sum())
        if total <= 0:
            raise ValueError("counts must have positive total")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", total)

    @property
    def n_ranks(self) -> int:
        """Number of ranks with nonzero count."""
        return int(np.count_nonzero(self.counts))

    def pmf(self) -> np.ndarray:
        return self.counts / self.total


def kl_distance(empirical: EmpiricalDistribution, model: PopularityModel) -> float:
    """KL distance sum_m p_m^data * log(p_m^data / p_m^model), natural log.

    The sum runs over ranks with nonzero empirical mass. Returns +inf if
    the model assigns zero probability to such a rank (cannot happen for
    finite gamma, q and ranks within the library).
    """
    support = np.nonzero(empirical.counts)[0]
    if support[-1] + 1 > model.m_total:
        raise ValueError(
            f"empirical support extends to rank {support[-1] + 1}, "
            f"beyond the model library of {model.m_total}"
        )
    p_data = empirical.counts[support] / empirical.total
    p_model = model.pmf_values[support]
    if np.any(p_model <= 0.0):
        return math.inf
    return float(np.sum(p_data * np.log(p_data / p_model)))


@dataclass(frozen=True)
class FitGrid:
    """Search configuration for fit_mzipf.

    The coarse stage scans a log-spaced (gamma, q) grid; the refinement
    stage runs coordinate descent with golden-section line searches until
    both parameters move by less than refine_tol.
    """

    gamma_lo: float = 0.5
    gamma_hi: float = 3.0
    gamma_points: int = 26
    q_hi: float | None = None  # defaults to M/10
    q_points: int = 26
    refine_tol: float = 1e-4
    max_rounds: int = 40


@dataclass(frozen=True)
class FitResult:
    model: PopularityModel
    kl_distance: float
    search_trace: list[tuple[float, float, float]]  # (gamma, q, kl)


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section minimum of f on [lo, hi] to interval width tol."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def fit_mzipf(empirical: EmpiricalDistribution, grid: FitGrid | None = None) -> FitResult:
    """Fit (gamma, q) by KL-distance minimization; M is fixed by the data.

    The library size is the number of distinct contents observed, never a
    fitted parameter. Ties in the coarse grid break toward smaller q, then
    smaller gamma. Deterministic for a fixed grid configuration.
    """
    grid = grid or FitGrid()
    n_obs = empirical.n_ranks
    if n_obs < 2:
        raise UnidentifiableFitError(
            "fit requires at least 2 ranks with nonzero counts; "
            "all mass on a single rank cannot identify (gamma, q)"
        )
    m_total = n_obs
    counts = empirical.counts[:m_total]
    p_data = counts / counts.sum()
    log_p_data = np.log(p_data)
    ranks = np.arange(1, m_total + 1, dtype=np.float64)
    q_hi = grid.q_hi if grid.q_hi is not None else m_total / 10.0

    def kl_at(gamma: float, q: float) -> float:
        w = np.power(ranks + q, -gamma)
        p_model = w / w.sum()
        return float(np.sum(p_data * (log_p_data - np.log(p_model))))

    trace: list[tuple[float, float, float]] = []

    def record(gamma: float, q: float) -> float:
        v = kl_at(gamma, q)
        trace.append((gamma, q, v))
        return v

    gammas = np.geomspace(grid.gamma_lo, grid.gamma_hi, grid.gamma_points)
    if q_hi > 0:
        qs = np.concatenate([[0.0], np.geomspace(min(0.5, q_hi / 2), q_hi, grid.q_points - 1)])
    else:
        qs = np.array([0.0])

    best = (math.inf, math.inf, math.inf)  # (kl, q, gamma) lexicographic
    for g in gammas:
        for q in qs:
            v = record(float(g), float(q))
            key = (v, float(q), float(g))
            if key < best:
                best = key
    _, q_best, g_best = best

    g_step = float(gammas[1] - gammas[0]) if len(gammas) > 1 else 0.1
    q_step = max(float(qs[1] - qs[0]) if len(qs) > 1 else 0.5, q_hi / (grid.q_points - 1) if q_hi else 0.5)
    for _ in range(grid.max_rounds):
        g_prev, q_prev = g_best, q_best
        g_best, _ = _golden_min(
            lambda g: record(g, q_best),
            max(grid.gamma_lo, g_best - 2 * g_step),
            min(grid.gamma_hi, g_best + 2 * g_step),
            grid.refine_tol,
        )
        q_best, _ = _golden_min(
            lambda q: record(g_best, q),
            max(0.0, q_best - 2 * q_step),
            min(q_hi, q_best + 2 * q_step),
            grid.refine_tol,
        )
        g_step = max(abs(g_best - g_prev), grid.refine_tol)
        q_step = max(abs(q_best - q_prev), grid.refine_tol)
        if abs(g_best - g_prev) < grid.refine_tol and abs(q_best - q_prev) < grid.refine_tol:
            break

    model = PopularityModel(gamma=g_best, q=q_best, m_total=m_total)
    return FitResult(model=model, kl_distance=kl_at(g_best, q_best), search_trace=trace)
