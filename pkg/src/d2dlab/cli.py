"""Command-line front-end: fit, policy, tradeoff, simulate, validate-mstar.

Every output data file is deterministic for a fixed command line (seeds
are explicit flags, never wall-clock derived) and is accompanied by a
``<output>.manifest.json`` sidecar recording the invocation. Numbers are
written with 10 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import (
    RegimeError,
    TradeoffPoint,
    hit_prob_closed_form,
    hit_prob_lower_bound,
    tradeoff_curve,
)
from .ingest import LogFormatError, dedup_unique, parse_log, to_empirical
from .network import NetworkConfig
from .policy import kkt_mstar, optimal_policy, theoretical_mstar
from .popularity import PopularityModel, fit_mzipf
from .simulator import build_grid, run_monte_carlo, simulate_tradeoff

EXIT_OK = 0
EXIT_PARAMS = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


def _fmt(x) -> str:
    """Render a number with 10 significant digits; empty for None/NaN."""
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{x:.10g}"


def _round10(x: float) -> float:
    return float(f"{x:.10g}")


def _workers() -> int:
    raw = os.environ.get("D2DLAB_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _write_manifest(output: Path, command: str, params: dict, seed: int | None, started: str) -> None:
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(params.items())},
        "seed": seed,
        "version": __version__,
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    Path(str(output) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8"
    )


def _write_json(output: Path, payload: dict) -> None:
    output.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}")


def _model_from_args(args) -> PopularityModel:
    return PopularityModel(gamma=args.gamma, q=args.q, m_total=args.m_total)


def cmd_fit(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    parsed = parse_log(args.log)
    records = parsed.records
    if args.region is not None:
        records = [r for r in records if r.region_id == args.region]
    unique = dedup_unique(records)
    empirical = to_empirical(unique)
    result = fit_mzipf(empirical)

    output = Path(args.output)
    payload = {
        "gamma": _round10(result.model.gamma),
        "q": _round10(result.model.q),
        "m_total": result.model.m_total,
        "kl_distance": _round10(result.kl_distance),
        "unique_accesses": unique.n_unique,
        "users": unique.n_users,
        "report": {
            "rows": parsed.rows,
            "malformed": parsed.malformed,
            "unique_accesses": unique.n_unique,
            "distinct_users": unique.n_users,
            "distinct_contents": unique.n_contents,
        },
    }
    _write_json(output, payload)

    ranks_csv = Path(args.ranks_csv) if args.ranks_csv else output.with_name(output.stem + "_ranks.csv")
    with open(ranks_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "count"])
        for rank, count in enumerate(empirical.counts, start=1):
            writer.writerow([rank, _fmt(count if count != int(count) else int(count))])

    _write_manifest(output, "fit", vars(args) | {"func": "fit"}, seed=None, started=started)
    print(f"fit: gamma={_fmt(result.model.gamma)} q={_fmt(result.model.q)} "
          f"M={result.model.m_total} kl={_fmt(result.kl_distance)} -> {output}")
    return EXIT_OK


def cmd_policy(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    model = _model_from_args(args)
    policy = optimal_policy(model, args.s_cache, args.g_c)
    output = Path(args.output)
    payload = {
        "nu": _round10(policy.water_level),
        "m_star": policy.m_star,
        "theoretical_m_star": _round10(theoretical_mstar(model, args.s_cache, args.g_c)),
        "p_c": [_round10(p) for p in policy.probs],
    }
    _write_json(output, payload)
    _write_manifest(output, "policy", vars(args) | {"func": "policy"}, seed=None, started=started)
    print(f"policy: m_star={policy.m_star} nu={_fmt(policy.water_level)} -> {output}")
    return EXIT_OK


def cmd_validate_mstar(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    model = _model_from_args(args)
    g_c_list = _parse_int_list(args.g_c_list)
    output = Path(args.output)
    with open(output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["g_c", "kkt_m_star", "theoretical_m_star", "rel_deviation"])
        for g_c in g_c_list:
            kkt = kkt_mstar(model, args.s_cache, g_c)
            theo = theoretical_mstar(model, args.s_cache, g_c)
            writer.writerow([g_c, kkt, _fmt(theo), _fmt(abs(kkt - theo) / kkt)])
    _write_manifest(output, "validate-mstar", vars(args) | {"func": "validate-mstar"},
                    seed=None, started=started)
    print(f"validate-mstar: {len(g_c_list)} points -> {output}")
    return EXIT_OK


_TRADEOFF_COLUMNS = [
    "g_c", "regime", "T_analytic", "Po_analytic", "hit_analytic", "T_sim",
    "Po_sim", "hit_sim", "hit_se", "tp_se", "clamped", "error",
]


def _hit_analytic(model: PopularityModel, cfg: NetworkConfig) -> float | None:
    """Sharp per-regime hit probability for cross-checking simulations.

    The Po_analytic column carries the regime-1 outage in its asymptotic
    form, which converges only like M^-(gamma-1); this column evaluates
    the finite-size closed form (or the regime-2 bound) instead.
    """
    try:
        return hit_prob_closed_form(model, cfg)
    except RegimeError:
        return hit_prob_lower_bound(model, cfg)
    except ValueError:
        return None


def _tradeoff_rows(args, model, g_c_list) -> list[dict]:
    rows = [{"g_c": g} for g in g_c_list]
    n_users = args.n_users if args.n_users else max(g_c_list)
    base = NetworkConfig(
        n_users=max(n_users, max(g_c_list)),
        s_cache=args.s_cache,
        rate_c=args.rate_c,
        reuse_k=args.reuse_k,
        cluster_size=min(g_c_list),
    )
    if args.mode in ("analytic", "both"):
        by_gc: dict[int, TradeoffPoint] = {
            p.g_c_used: p for p in tradeoff_curve(model, base, g_c_list, kappa=args.kappa)
        }
        for row in rows:
            p = by_gc[row["g_c"]]
            row["regime"] = p.regime_tag
            row["T_analytic"] = p.throughput
            row["Po_analytic"] = p.outage
            row["clamped"] = p.clamped
            if p.error:
                row["error"] = p.error
            else:
                cfg = replace(base, cluster_size=row["g_c"], n_users=base.n_users)
                row["hit_analytic"] = _hit_analytic(model, cfg)
    if args.mode in ("simulate", "both"):
        points = simulate_tradeoff(
            model, base, g_c_list, trials=args.trials, base_seed=args.seed,
            max_workers=_workers(),
        )
        for row, point in zip(rows, points):
            if point.error:
                row["error"] = "; ".join(filter(None, [row.get("error"), point.error]))
                continue
            out = point.outcome
            row["T_sim"] = out.min_avg_throughput
            row["Po_sim"] = out.outage_estimate
            row["hit_sim"] = out.hit_prob_estimate
            row["hit_se"] = out.hit_prob_se
            row["tp_se"] = out.throughput_se
    return rows


def cmd_tradeoff(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    model = _model_from_args(args)
    g_c_list = _parse_int_list(args.g_c_list)
    if not g_c_list:
        raise ValueError("g_c list must not be empty")
    rows = _tradeoff_rows(args, model, g_c_list)
    output = Path(args.output)
    with open(output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRADEOFF_COLUMNS)
        for row in rows:
            writer.writerow([
                _fmt(row.get(col)) if col not in ("regime", "error")
                else row.get(col, "")
                for col in _TRADEOFF_COLUMNS
            ])
    _write_manifest(output, "tradeoff", vars(args) | {"func": "tradeoff"},
                    seed=args.seed, started=started)
    print(f"tradeoff: {len(rows)} points ({args.mode}) -> {output}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    model = _model_from_args(args)
    network = build_grid(args.n_users, args.g_c)
    config = NetworkConfig(
        n_users=network.n_users,
        s_cache=args.s_cache,
        rate_c=args.rate_c,
        reuse_k=args.reuse_k,
        cluster_size=args.g_c,
    )
    policy = optimal_policy(model, args.s_cache, args.g_c)
    outcome = run_monte_carlo(network, policy, model, config, args.trials, args.seed)
    output = Path(args.output)
    payload = {
        "g_c": args.g_c,
        "n_users": network.n_users,
        "padding": network.padding,
        "trials": outcome.trials,
        "m_star": policy.m_star,
        "hit_prob": _round10(outcome.hit_prob_estimate),
        "outage": _round10(outcome.outage_estimate),
        "min_avg_throughput": _round10(outcome.min_avg_throughput),
        "per_user_throughput_mean": _round10(outcome.per_user_throughput_mean),
        "self_hit_rate": _round10(outcome.self_hit_rate),
        "d2d_hit_rate": _round10(outcome.d2d_hit_rate),
        "good_cluster_rate": _round10(outcome.good_cluster_rate),
        "hit_prob_se": _round10(outcome.hit_prob_se),
        "throughput_se": _round10(outcome.throughput_se),
    }
    _write_json(output, payload)
    _write_manifest(output, "simulate", vars(args) | {"func": "simulate"},
                    seed=args.seed, started=started)
    print(f"simulate: hit={_fmt(outcome.hit_prob_estimate)} "
          f"outage={_fmt(outcome.outage_estimate)} -> {output}")
    return EXIT_OK


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, required=True, help="Zipf factor (> 0)")
    p.add_argument("--q", type=float, required=True, help="plateau factor (>= 0)")
    p.add_argument("--m-total", type=int, required=True, dest="m_total", help="library size M")


def _add_network_args(p: argparse.ArgumentParser, need_users: bool) -> None:
    p.add_argument("--s-cache", type=int, default=1, dest="s_cache", help="cache slots per device")
    p.add_argument("--rate-c", type=float, default=1.0, dest="rate_c", help="link rate C (bits/s/Hz)")
    p.add_argument("--reuse-k", type=int, default=4, dest="reuse_k", help="TDMA reuse factor K")
    if need_users:
        p.add_argument("--n-users", type=int, required=True, dest="n_users", help="users N")
    else:
        p.add_argument("--n-users", type=int, default=None, dest="n_users",
                       help="users N (defaults to the largest cluster size)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dlab",
        description="Caching-based D2D content delivery: fitting, policy, analysis, simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an MZipf model to an access log")
    p.add_argument("log", help="CSV log: user_id,content_id,region_id[,timestamp]")
    p.add_argument("--region", type=int, default=None, help="keep only this region_id")
    p.add_argument("--output", required=True, help="output JSON path")
    p.add_argument("--ranks-csv", default=None, dest="ranks_csv",
                   help="rank/count CSV path (default: alongside the JSON)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("policy", help="compute the optimal caching distribution")
    _add_model_args(p)
    p.add_argument("--s-cache", type=int, default=1, dest="s_cache")
    p.add_argument("--g-c", type=int, required=True, dest="g_c", help="cluster size")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("validate-mstar", help="compare scan-based and closed-form m*")
    _add_model_args(p)
    p.add_argument("--s-cache", type=int, default=1, dest="s_cache")
    p.add_argument("--g-c-list", required=True, dest="g_c_list",
                   help="comma-separated cluster sizes")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_validate_mstar)

    p = sub.add_parser("tradeoff", help="throughput-outage curve (analytic and/or simulated)")
    _add_model_args(p)
    _add_network_args(p, need_users=False)
    p.add_argument("--g-c-list", required=True, dest="g_c_list")
    p.add_argument("--mode", choices=["analytic", "simulate", "both"], default="analytic")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa", type=float, default=10.0,
                   help="admissibility constant for q <= kappa*S*g_c/gamma")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("simulate", help="Monte Carlo run at a single cluster size")
    _add_model_args(p)
    _add_network_args(p, need_users=True)
    p.add_argument("--g-c", type=int, required=True, dest="g_c")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LogFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
