"""Monte Carlo simulation of the clustered grid D2D network.

Users sit on a square grid partitioned into square clusters of g_c users.
Each trial draws every device's cache (S independent draws from the
caching distribution, duplicates allowed) and one request per user. A
request is a hit when the file sits in the user's own cache (a self-hit,
which consumes no airtime) or in some other cluster member's cache. The
potential D2D links of a cluster share the cluster rate C/K equally in
expectation, one link active at a time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .network import NetworkConfig
from .policy import CachingPolicy, optimal_policy
from .popularity import PopularityModel

__all__ = [
    "GridNetwork",
    "TrialOutcome",
    "SimOutcome",
    "SweepPoint",
    "build_grid",
    "run_trial",
    "run_monte_carlo",
    "simulate_tradeoff",
]


@dataclass(frozen=True)
class GridNetwork:
    """Square user grid split into contiguous square clusters."""

    side: int
    cluster_side: int
    n_requested: int

    @property
    def n_users(self) -> int:
        return self.side * self.side

    @property
    def cluster_size(self) -> int:
        return self.cluster_side * self.cluster_side

    @property
    def n_clusters(self) -> int:
        return (self.side // self.cluster_side) ** 2

    @property
    def padding(self) -> int:
        """Users added beyond the requested count to fill whole clusters."""
        return self.n_users - self.n_requested

    @cached_property
    def members(self) -> np.ndarray:
        """User ids per cluster, shape (n_clusters, cluster_size)."""
        blocks = self.side // self.cluster_side
        ids = np.arange(self.n_users).reshape(self.side, self.side)
        grouped = ids.reshape(blocks, self.cluster_side, blocks, self.cluster_side)
        return grouped.transpose(0, 2, 1, 3).reshape(self.n_clusters, self.cluster_size)


def build_grid(n_users: int, cluster_size: int) -> GridNetwork:
    """Lay out at least n_users on a square grid of whole square clusters.

    cluster_size must be a perfect square. The grid side is the smallest
    multiple of the cluster side whose square covers n_users, so the
    actual user count may exceed the request; the difference is reported
    as padding.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    cluster_side = math.isqrt(cluster_size)
    if cluster_side * cluster_side != cluster_size:
        raise ValueError(
            f"cluster_size must be a perfect square (grid clusters are square cells), "
            f"got {cluster_size}"
        )
    min_side = math.isqrt(n_users)
    if min_side * min_side < n_users:
        min_side += 1
    side = ((min_side + cluster_side - 1) // cluster_side) * cluster_side
    return GridNetwork(side=side, cluster_side=cluster_side, n_requested=n_users)


@dataclass(frozen=True)
class TrialOutcome:
    """Exact per-trial counts and the per-user D2D throughput vector."""

    n_users: int
    n_clusters: int
    hits: int
    self_hits: int
    d2d_available: int
    potential_links: int
    good_clusters: int
    cluster_links: np.ndarray
    throughput: np.ndarray

    @property
    def outages(self) -> int:
        return self.n_users - self.hits

    @property
    def hit_frac(self) -> float:
        return self.hits / self.n_users

    @property
    def outage_frac(self) -> float:
        # Exact complement so the per-trial outage identity holds to the bit.
        return 1.0 - self.hit_frac

    @property
    def self_hit_frac(self) -> float:
        return self.self_hits / self.n_users

    @property
    def d2d_frac(self) -> float:
        return self.d2d_available / self.n_users


def _sample_from_cdf(cdf: np.ndarray, max_index: int, draws: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of 1-based ranks, clipped to the positive support."""
    idx = np.searchsorted(cdf, draws, side="right")
    return np.minimum(idx, max_index) + 1


def _draw_distinct_caches(
    rng: np.random.Generator, policy: CachingPolicy, n_users: int, s: int
) -> np.ndarray:
    """Per-user caches of s distinct files, weighted by the caching pmf.

    Gumbel-top-k per user: perturb log-probabilities and keep the s
    largest, which samples without replacement proportional to the
    weights. Off the default path; meant for sensitivity studies.
    """
    if s > policy.m_star:
        raise ValueError(
            f"distinct caching needs s_cache <= {policy.m_star} files with "
            f"positive caching probability, got s_cache={s}"
        )
    with np.errstate(divide="ignore"):
        log_p = np.log(policy.probs)
    out = np.empty((n_users, s), dtype=np.int64)
    chunk = max(1, (1 << 21) // policy.probs.size)  # cap the noise matrix at ~16 MB
    for start in range(0, n_users, chunk):
        stop = min(start + chunk, n_users)
        gumbel = -np.log(-np.log(rng.random((stop - start, policy.probs.size))))
        keys = log_p + gumbel
        out[start:stop] = np.argpartition(-keys, s - 1, axis=1)[:, :s] + 1
    return out


def run_trial(
    network: GridNetwork,
    policy: CachingPolicy,
    popularity: PopularityModel,
    config: NetworkConfig,
    seed: int,
    distinct_cache: bool = False,
) -> TrialOutcome:
    """One network realization: caches, requests, links, and throughput.

    Deterministic given the seed; cache draws consume the random stream
    before request draws. distinct_cache switches to without-replacement
    caching (each device holds s distinct files) for sensitivity studies.
    """
    if config.cluster_size != network.cluster_size:
        raise ValueError(
            f"config cluster_size {config.cluster_size} does not match "
            f"network cluster_size {network.cluster_size}"
        )
    rng = np.random.default_rng(seed)
    n_users = network.n_users
    s = config.s_cache
    m_total = popularity.m_total

    if distinct_cache:
        caches = _draw_distinct_caches(rng, policy, n_users, s)
    else:
        caches = _sample_from_cdf(policy.cdf, policy.m_star - 1, rng.random((n_users, s)))
    requests = _sample_from_cdf(popularity.cdf_values, m_total - 1, rng.random(n_users))

    mem = network.members
    ncl, g = mem.shape
    req_c = requests[mem]
    cache_c = caches[mem]
    own = (cache_c == req_c[:, :, None]).sum(axis=2)

    # Count each request's copies within its cluster by binary search over
    # the cluster-keyed sorted cache entries (memory stays O(N*S)).
    offsets = np.arange(ncl, dtype=np.int64)[:, None] * (m_total + 1)
    entries = (cache_c.reshape(ncl, g * s) + offsets).ravel()
    entries.sort()
    queries = (req_c + offsets).ravel()
    in_cluster = (
        np.searchsorted(entries, queries, side="right")
        - np.searchsorted(entries, queries, side="left")
    ).reshape(ncl, g)

    self_hit = own > 0
    other_has = (in_cluster - own) > 0
    hit = self_hit | other_has
    potential = other_has & ~self_hit
    links = potential.sum(axis=1)

    per_link_rate = np.zeros(ncl)
    np.divide(config.cluster_rate, links, out=per_link_rate, where=links > 0)
    throughput = np.zeros(n_users)
    throughput[mem] = potential * per_link_rate[:, None]

    return TrialOutcome(
        n_users=n_users,
        n_clusters=ncl,
        hits=int(hit.sum()),
        self_hits=int(self_hit.sum()),
        d2d_available=int(other_has.sum()),
        potential_links=int(links.sum()),
        good_clusters=int((links > 0).sum()),
        cluster_links=links,
        throughput=throughput,
    )


@dataclass(frozen=True)
class SimOutcome:
    """Monte Carlo estimates over independent trials.

    outage_estimate is the exact complement of hit_prob_estimate; the per
    trial identity (hit fraction + outage fraction = 1) carries over to
    the averages. min_avg_throughput is the smallest per-user average D2D
    throughput, the finite-sample estimate of the minimum average
    throughput the scheduler guarantees.
    """

    hit_prob_estimate: float
    outage_estimate: float
    min_avg_throughput: float
    per_user_throughput_mean: float
    self_hit_rate: float
    d2d_hit_rate: float
    good_cluster_rate: float
    trials: int
    n_users: int
    hit_prob_se: float
    outage_se: float
    throughput_se: float
    d2d_hit_se: float


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def run_monte_carlo(
    network: GridNetwork,
    policy: CachingPolicy,
    popularity: PopularityModel,
    config: NetworkConfig,
    trials: int,
    base_seed: int = 0,
    distinct_cache: bool = False,
) -> SimOutcome:
    """Average run_trial over seeds base_seed .. base_seed+trials-1.

    Standard errors are sample standard deviations of the per-trial
    statistics divided by sqrt(trials). Aggregation order is fixed, so
    identical inputs reproduce identical outputs.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    hit_fracs = np.empty(trials)
    self_fracs = np.empty(trials)
    d2d_fracs = np.empty(trials)
    tp_means = np.empty(trials)
    good_rates = np.empty(trials)
    tp_user_sum = np.zeros(network.n_users)
    for i in range(trials):
        t = run_trial(
            network, policy, popularity, config,
            seed=base_seed + i, distinct_cache=distinct_cache,
        )
        hit_fracs[i] = t.hit_frac
        self_fracs[i] = t.self_hit_frac
        d2d_fracs[i] = t.d2d_frac
        tp_means[i] = t.throughput.mean()
        good_rates[i] = t.good_clusters / t.n_clusters
        tp_user_sum += t.throughput

    hit = float(hit_fracs.mean())
    return SimOutcome(
        hit_prob_estimate=hit,
        outage_estimate=1.0 - hit,
        min_avg_throughput=float((tp_user_sum / trials).min()),
        per_user_throughput_mean=float(tp_means.mean()),
        self_hit_rate=float(self_fracs.mean()),
        d2d_hit_rate=float(d2d_fracs.mean()),
        good_cluster_rate=float(good_rates.mean()),
        trials=trials,
        n_users=network.n_users,
        hit_prob_se=_stderr(hit_fracs),
        outage_se=_stderr(hit_fracs),
        throughput_se=_stderr(tp_means),
        d2d_hit_se=_stderr(d2d_fracs),
    )


@dataclass(frozen=True)
class SweepPoint:
    g_c: int
    outcome: SimOutcome | None
    error: str | None = None


PolicySource = Callable[[PopularityModel, int, int], CachingPolicy]


def simulate_tradeoff(
    popularity: PopularityModel,
    config_base: NetworkConfig,
    g_c_list: list[int],
    policy_source: PolicySource | None = None,
    trials: int = 100,
    base_seed: int = 0,
    max_workers: int = 1,
) -> list[SweepPoint]:
    """Simulate the tradeoff across cluster sizes.

    For each cluster size: build the grid, compute the caching policy
    (optimal_policy unless another source is given), run the Monte Carlo.
    Per-point failures are recorded on the point rather than raised. Each
    point consumes a disjoint, position-derived seed range, so results are
    identical whether points run sequentially or on a thread pool.
    """
    source = policy_source or optimal_policy

    def one_point(item: tuple[int, int]) -> SweepPoint:
        i, g_c = item
        try:
            network = build_grid(config_base.n_users, g_c)
            cfg = replace(config_base, cluster_size=g_c, n_users=network.n_users)
            policy = source(popularity, cfg.s_cache, g_c)
            outcome = run_monte_carlo(
                network, policy, popularity, cfg, trials, base_seed + i * trials
            )
            return SweepPoint(g_c=g_c, outcome=outcome)
        except ValueError as exc:
            return SweepPoint(g_c=g_c, outcome=None, error=str(exc))

    items = list(enumerate(g_c_list))
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one_point, items))
    return [one_point(item) for item in items]
