"""Synthetic regional access logs for tests, demos, and CLI examples.

The real measurement data behind the regional parameter presets is not
redistributable, so fixtures are generated deterministically by sampling
from the fitted regional popularity models.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .popularity import PopularityModel, sample_ranks

__all__ = ["REGION_PRESETS", "region_model", "write_region_log"]

# Fitted (gamma, q, library size) per coverage region, most to least populous.
REGION_PRESETS: dict[int, tuple[float, float, int]] = {
    1: (1.28, 34.0, 18553),
    2: (1.16, 22.0, 7345),
    3: (1.11, 18.0, 5405),
}


def region_model(region: int) -> PopularityModel:
    """Popularity model preset for a coverage region (1, 2, or 3)."""
    try:
        gamma, q, m_total = REGION_PRESETS[region]
    except KeyError:
        raise ValueError(f"unknown region {region}; presets exist for {sorted(REGION_PRESETS)}")
    return PopularityModel(gamma=gamma, q=q, m_total=m_total)


def write_region_log(
    path: str | Path,
    region: int = 2,
    n_accesses: int = 100_000,
    seed: int = 0,
    duplicate_rate: float = 0.1,
) -> PopularityModel:
    """Write a synthetic access log sampled from a regional model.

    Every access gets its own user id, so after deduplication the ranked
    counts reproduce the sampled multiset exactly. A duplicate_rate
    fraction of accesses additionally emit a repeat row for the same
    (user, content) pair, exercising the dedup path. Returns the model
    the log was sampled from.
    """
    model = region_model(region)
    rng = np.random.default_rng(seed)
    ranks = sample_ranks(model, rng, n_accesses)
    dup = rng.random(n_accesses) < duplicate_rate
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "content_id", "region_id"])
        for i, rank in enumerate(ranks):
            row = [f"u{i:07d}", f"c{rank:06d}", str(region)]
            writer.writerow(row)
            if dup[i]:
                writer.writerow(row)
    return model
