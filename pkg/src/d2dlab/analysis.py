"""Closed-form hit probability and the two-regime throughput-outage tradeoff.

All expressions here are asymptotic in the library size, cluster size, and
plateau factor; evaluated at finite parameters they can exit [0, 1] by the
unquantified lower-order slack. Out-of-range values are clamped and
flagged rather than rejected so that desk-scale curves stay usable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .network import NetworkConfig
from .policy import scaling_constants, _policy_exponent
from .popularity import PopularityModel

__all__ = [
    "RegimeError",
    "TradeoffPoint",
    "REGIME1",
    "REGIME2",
    "hit_prob_closed_form",
    "hit_prob_lower_bound",
    "tradeoff_regime1",
    "tradeoff_regime2",
    "tradeoff_curve",
]

REGIME1 = "regime1"
REGIME2 = "regime2"

# Switch to the log-limit forms when the tail exponent is this close to 1,
# where the (1-gamma) powers become 0/0.
_GAMMA_ONE_EPS = 1e-6


class RegimeError(ValueError):
    """Parameters fall outside the regime a formula is stated for."""


@dataclass(frozen=True)
class TradeoffPoint:
    """An achievable (throughput, outage) pair for one cluster size."""

    throughput: float
    outage: float
    regime_tag: str
    g_c_used: int
    clamped: bool = False
    error: str | None = None


def _pow(x: float, e: float) -> float:
    """x**e via log space; 0**e is taken as 0 for any nonzero e."""
    if x == 0.0:
        return 0.0 if e != 0.0 else 1.0
    return math.exp(e * math.log(x))


def _clamp_unit(x: float) -> tuple[float, bool]:
    if x < 0.0:
        return 0.0, True
    if x > 1.0:
        return 1.0, True
    return x, False


def _closed_form(popularity: PopularityModel, config: NetworkConfig) -> tuple[float, bool]:
    gamma, q, m = popularity.gamma, popularity.q, popularity.m_total
    sc = scaling_constants(popularity, config.s_cache, config.cluster_size)
    a = sc.c1 * config.s_cache * config.cluster_size / gamma
    if not a < m:
        raise RegimeError(
            f"cluster_size {config.cluster_size} is at or beyond gamma*M/(c1*S); "
            "use hit_prob_lower_bound (regime 2)"
        )
    e = 1.0 - gamma
    if abs(e) < _GAMMA_ONE_EPS:
        num = math.log((a + q) / (q + 1.0)) - a / (a + q)
        den = math.log((m + q) / (q + 1.0))
    else:
        num = _pow(a + q, e) - e * _pow(a + q, -gamma) * a - _pow(q + 1.0, e)
        den = _pow(m + q, e) - _pow(q + 1.0, e)
    return _clamp_unit(num / den)


def hit_prob_closed_form(popularity: PopularityModel, config: NetworkConfig) -> float:
    """Regime-1 hit probability of the optimal policy, in closed form.

    Requires cluster_size < gamma*M/(c1*S); beyond that threshold the
    closed form does not apply and a RegimeError points at the regime-2
    lower bound instead. The finite-size evaluation is clamped to [0, 1].
    """
    value, _ = _closed_form(popularity, config)
    return value


def _lower_bound(popularity: PopularityModel, config: NetworkConfig) -> tuple[float, bool]:
    gamma, q, m = popularity.gamma, popularity.q, popularity.m_total
    n = _policy_exponent(config.s_cache, config.cluster_size)
    sc = scaling_constants(popularity, config.s_cache, config.cluster_size)
    if sc.rho < gamma:
        raise RegimeError(
            f"implied rho={sc.rho:.4g} < gamma={gamma}; "
            "cluster too small for the regime-2 bound (use the closed form)"
        )
    d = q / m
    beta = gamma / n
    e = 1.0 - gamma
    decay = math.exp(-(sc.rho / sc.c1 - gamma))
    if d == 0.0:
        # Pure-Zipf degeneration: both D-powers vanish by convention.
        factor = e * decay
        bracket = 1.0
    else:
        bracket = _pow(1.0 + d, beta + 1.0) - _pow(d, beta + 1.0)
        if abs(e) < _GAMMA_ONE_EPS:
            factor = decay / math.log((1.0 + d) / d)
        else:
            factor = e * decay / (_pow(1.0 + d, e) - _pow(d, e))
    value = 1.0 - factor * math.exp(-n * math.log(bracket))
    return _clamp_unit(value)


def hit_prob_lower_bound(popularity: PopularityModel, config: NetworkConfig) -> float:
    """Regime-2 lower bound on the hit probability of the optimal policy.

    Applies when the implied rho = c1*S*g_c/M is at least gamma. Clamped
    to [0, 1] at finite parameters.
    """
    value, _ = _lower_bound(popularity, config)
    return value


def tradeoff_regime1(
    popularity: PopularityModel, config: NetworkConfig, kappa: float = 10.0
) -> TradeoffPoint:
    """Throughput-outage point for clusters below the regime boundary.

    T = (C/K)/g_c exactly; the outage follows the c6 = q/g_c expression.
    kappa bounds the admissible plateau size q <= kappa*S*g_c/gamma, the
    finite-size stand-in for q growing no faster than the cluster memory.
    """
    gamma, q = popularity.gamma, popularity.q
    sc = scaling_constants(popularity, config.s_cache, config.cluster_size)
    a = sc.c1 * config.s_cache * config.cluster_size / gamma
    if not a < popularity.m_total:
        raise RegimeError(
            f"cluster_size {config.cluster_size} is at or beyond gamma*M/(c1*S); "
            "use tradeoff_regime2"
        )
    if q > kappa * config.s_cache * config.cluster_size / gamma:
        raise RegimeError(
            f"plateau factor q={q} exceeds kappa*S*g_c/gamma="
            f"{kappa * config.s_cache * config.cluster_size / gamma:.4g}; "
            "the regime-1 outage expression assumes q = O(S*g_c/gamma)"
        )
    throughput = config.cluster_rate / config.cluster_size
    s_c1 = config.s_cache * sc.c1
    outage_raw = _pow(sc.c6, gamma - 1.0) * (s_c1 + sc.c6) / _pow(s_c1 / gamma + sc.c6, gamma)
    outage, clamped = _clamp_unit(outage_raw)
    return TradeoffPoint(
        throughput=throughput,
        outage=outage,
        regime_tag=REGIME1,
        g_c_used=config.cluster_size,
        clamped=clamped,
    )


def tradeoff_regime2(popularity: PopularityModel, config: NetworkConfig) -> TradeoffPoint:
    """Throughput-outage point for clusters at or beyond the regime boundary.

    The cluster size fixes rho = c1*S*g_c/M (which must be >= gamma);
    T = (C/K)*S*c1/(rho*M) and the outage is one minus the regime-2 hit
    probability lower bound.
    """
    sc = scaling_constants(popularity, config.s_cache, config.cluster_size)
    bound_raw, _ = _lower_bound(popularity, config)  # raises RegimeError if rho < gamma
    throughput = config.cluster_rate * config.s_cache * sc.c1 / (sc.rho * popularity.m_total)
    outage, clamped = _clamp_unit(1.0 - bound_raw)
    return TradeoffPoint(
        throughput=throughput,
        outage=outage,
        regime_tag=REGIME2,
        g_c_used=config.cluster_size,
        clamped=clamped,
    )


def tradeoff_curve(
    popularity: PopularityModel,
    base: NetworkConfig,
    g_c_list: list[int],
    kappa: float = 10.0,
) -> list[TradeoffPoint]:
    """Evaluate the tradeoff across cluster sizes, dispatching per regime.

    Each cluster size strictly below gamma*M/(c1*S) goes to regime 1,
    everything at or above to regime 2. Per-point failures (e.g. clusters
    too small for any policy) are recorded on the point, not raised. The
    result is sorted by outage, failed points last.
    """
    points: list[TradeoffPoint] = []
    for g_c in g_c_list:
        try:
            cfg = replace(base, cluster_size=g_c, n_users=max(base.n_users, g_c))
            sc = scaling_constants(popularity, cfg.s_cache, g_c)
            a = sc.c1 * cfg.s_cache * g_c / popularity.gamma
            if a < popularity.m_total:
                points.append(tradeoff_regime1(popularity, cfg, kappa))
            else:
                points.append(tradeoff_regime2(popularity, cfg))
        except ValueError as exc:  # includes RegimeError
            points.append(
                TradeoffPoint(
                    throughput=math.nan,
                    outage=math.nan,
                    regime_tag="",
                    g_c_used=g_c,
                    error=str(exc),
                )
            )
    return sorted(points, key=lambda p: (math.isnan(p.outage), p.outage))
