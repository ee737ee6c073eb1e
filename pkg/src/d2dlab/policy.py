"""Optimal random caching policy via water-filling, plus its scaling constants.

The hit-maximizing caching distribution has the water-filling form
P_c(f) = max(1 - nu/z_f, 0) with z_f = P_r(f)^(1/(S*(g_c-1)-1)). The
truncation index m_star (the number of files cached with positive
probability) is located both by a closed-form construction and by an
independent scan of the optimality conditions, so the two can be used to
cross-validate each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .popularity import PopularityModel

__all__ = [
    "CachingPolicy",
    "ScalingConstants",
    "solve_c1",
    "z_values",
    "optimal_policy",
    "kkt_mstar",
    "theoretical_mstar",
    "scaling_constants",
    "policy_from_probs",
]

_C1_TOL = 1e-10


def solve_c1(c2: float) -> float:
    """Solve c1 = 1 + c2*log(1 + c1/c2) for the unique root c1 >= 1.

    Natural log; c2 = 0 returns exactly 1. Bracketed bisection on
    [1, max(10, 10*c2)] down to a relative residual of 1e-10.
    """
    if c2 < 0:
        raise ValueError(f"c2 must be non-negative, got {c2}")
    if c2 == 0.0:
        return 1.0

    def g(x: float) -> float:
        if x < c2 * 1e12:  # ratio safely representable, log1p keeps precision
            return x - 1.0 - c2 * math.log1p(x / c2)
        return x - 1.0 - c2 * (math.log(c2 + x) - math.log(c2))

    lo, hi = 1.0, max(10.0, 10.0 * c2)
    if g(hi) <= 0:  # cannot happen for the admissible bracket
        raise RuntimeError(f"c1 bracket failed for c2={c2}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    c1 = 0.5 * (lo + hi)
    if abs(g(c1)) > _C1_TOL * max(1.0, c1):
        raise RuntimeError(f"c1 solver failed to converge for c2={c2}")
    return c1


@dataclass(frozen=True)
class ScalingConstants:
    """Derived constants for a (popularity, cache, cluster) combination."""

    a_prime: float  # gamma / (S*(g_c-1) - 1)
    c2: float       # q * a_prime
    c1: float       # fixed point of c1 = 1 + c2*log(1 + c1/c2)
    c6: float       # q / g_c
    rho: float      # c1*S*g_c / M  (regime-2 cluster-size ratio)
    d_ratio: float  # q / M


def _policy_exponent(s_cache: int, cluster_size: int) -> int:
    n = s_cache * (cluster_size - 1) - 1
    if n < 1:
        raise ValueError(
            f"cluster too small: need s_cache*(cluster_size-1) >= 2, "
            f"got s_cache={s_cache}, cluster_size={cluster_size}"
        )
    return n


def scaling_constants(
    popularity: PopularityModel, s_cache: int, cluster_size: int
) -> ScalingConstants:
    n = _policy_exponent(s_cache, cluster_size)
    a_prime = popularity.gamma / n
    c2 = popularity.q * a_prime
    c1 = solve_c1(c2)
    return ScalingConstants(
        a_prime=a_prime,
        c2=c2,
        c1=c1,
        c6=popularity.q / cluster_size,
        rho=c1 * s_cache * cluster_size / popularity.m_total,
        d_ratio=popularity.q / popularity.m_total,
    )


def z_values(popularity: PopularityModel, s_cache: int, cluster_size: int) -> np.ndarray:
    """Water-filling weights z_f = P_r(f)^(1/(S*(g_c-1)-1)), non-increasing.

    Computed in log space so large libraries and large exponents do not
    underflow.
    """
    n = _policy_exponent(s_cache, cluster_size)
    if n == 1:
        return popularity.pmf_values.copy()
    ranks = np.arange(1, popularity.m_total + 1, dtype=np.float64)
    log_pmf = -popularity.gamma * np.log(ranks + popularity.q) - math.log(popularity.normalizer)
    return np.exp(log_pmf / n)


@dataclass(frozen=True)
class CachingPolicy:
    """Random caching distribution with its water-filling certificate.

    probs[f-1] is the probability a device caches file f on each of its
    draws; water_level is the Lagrangian threshold nu; m_star the number
    of files with positive caching probability; z the water-filling
    weights (NaN-free for water-filled policies, unset for ad-hoc ones).
    """

    probs: np.ndarray
    water_level: float
    m_star: int
    z: np.ndarray | None = None

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def policy_from_probs(probs) -> CachingPolicy:
    """Wrap an arbitrary caching pmf (e.g. uniform) for the simulator."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probs must be a non-empty 1-d vector")
    if np.any(p < 0) or not math.isclose(float(p.sum()), 1.0, abs_tol=1e-9):
        raise ValueError("probs must be non-negative and sum to 1")
    positive = np.nonzero(p > 0)[0]
    return CachingPolicy(probs=p, water_level=math.nan, m_star=int(positive[-1]) + 1)


def optimal_policy(
    popularity: PopularityModel, s_cache: int, cluster_size: int
) -> CachingPolicy:
    """Hit-probability-maximizing random caching distribution.

    Water-filling construction: m_star is the largest m whose water level
    nu(m) = (m-1) / sum_{f<=m} 1/z_f still sits below z_m; the caching
    probabilities are max(1 - nu/z_f, 0) and sum to 1 by construction.
    """
    if popularity.m_total < 2:
        raise ValueError("optimal_policy requires a library of at least 2 files")
    z = z_values(popularity, s_cache, cluster_size)
    inv_cumsum = np.cumsum(1.0 / z)
    m = np.arange(1, popularity.m_total + 1, dtype=np.float64)
    nu_at = (m - 1.0) / inv_cumsum
    feasible = np.nonzero(z > nu_at)[0]
    m_star = int(feasible[-1]) + 1
    nu = float(nu_at[m_star - 1])
    probs = np.maximum(1.0 - nu / z, 0.0)
    probs[m_star:] = 0.0
    return CachingPolicy(probs=probs, water_level=nu, m_star=m_star, z=z)


def kkt_mstar(popularity: PopularityModel, s_cache: int, cluster_size: int) -> int:
    """Truncation index from a direct scan of the optimality conditions.

    Independent of optimal_policy's construction: walks m upward with a
    running sum and returns the unique m where 1 - nu(m)/z_m > 0 while
    1 - nu(m)/z_{m+1} <= 0 (treating z beyond the library as 0).
    """
    z = z_values(popularity, s_cache, cluster_size)
    m_total = popularity.m_total
    found = []
    running = 0.0
    for m in range(1, m_total + 1):
        running += 1.0 / z[m - 1]
        nu = (m - 1) / running
        z_next = z[m] if m < m_total else 0.0
        if z[m - 1] > nu and z_next <= nu:
            found.append(m)
    if len(found) != 1:
        raise RuntimeError(
            f"KKT scan found {len(found)} candidate truncation indices; expected 1"
        )
    return found[0]


def theoretical_mstar(
    popularity: PopularityModel, s_cache: int, cluster_size: int
) -> float:
    """Closed-form truncation index min(c1*S*g_c/gamma, M).

    Asymptotically exact for large clusters; at small cluster sizes it
    overshoots the scan-based index because S*g_c exceeds the effective
    exponent S*(g_c-1)-1 by a non-negligible factor.
    """
    n = _policy_exponent(s_cache, cluster_size)
    c1 = solve_c1(popularity.q * popularity.gamma / n)
    return min(c1 * s_cache * cluster_size / popularity.gamma, float(popularity.m_total))
