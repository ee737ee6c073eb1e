"""Tests for the MZipf model: pmf, sampling, KL distance, and fitting."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dlab.popularity import (
    EmpiricalDistribution,
    FitGrid,
    PopularityModel,
    UnidentifiableFitError,
    fit_mzipf,
    kl_distance,
    mzipf_pmf,
    mzipf_sample,
    sample_ranks,
)

from oracles import mzipf_pmf_direct


REGION2 = dict(gamma=1.16, q=22.0, m_total=7345)
REGION3 = dict(gamma=1.11, q=18.0, m_total=5405)


class TestPmf:
    def test_single_file_library(self):
        model = PopularityModel(gamma=2.0, q=5.0, m_total=1)
        assert mzipf_pmf(model, 1) == 1.0

    def test_harmonic_weights(self):
        """gamma=1, q=0, M=3 gives weights 1, 1/2, 1/3 over a total of 11/6."""
        model = PopularityModel(gamma=1.0, q=0.0, m_total=3)
        assert mzipf_pmf(model, 1) == pytest.approx(6 / 11, rel=1e-14)
        assert mzipf_pmf(model, 2) == pytest.approx(3 / 11, rel=1e-14)
        assert mzipf_pmf(model, 3) == pytest.approx(2 / 11, rel=1e-14)

    def test_region2_head_ratio(self):
        """With a plateau out to ~q, rank 1 vs rank 23 differ by (23/45)^-1.16."""
        model = PopularityModel(**REGION2)
        ratio = mzipf_pmf(model, 1) / mzipf_pmf(model, 23)
        assert ratio == pytest.approx((23.0 / 45.0) ** -1.16, rel=1e-12)
        # The head is nearly flat: less than a factor 2^gamma across the plateau.
        assert mzipf_pmf(model, 1) / mzipf_pmf(model, 22) < 2 ** 1.16

    def test_matches_direct_summation(self):
        model = PopularityModel(gamma=1.4, q=7.0, m_total=50)
        direct = mzipf_pmf_direct(1.4, 7.0, 50)
        np.testing.assert_allclose(model.pmf_values, direct, rtol=1e-13)

    @pytest.mark.parametrize("bad_rank", [0, -1, 4])
    def test_rank_out_of_range(self, bad_rank):
        model = PopularityModel(gamma=1.0, q=0.0, m_total=3)
        with pytest.raises(ValueError, match="rank"):
            mzipf_pmf(model, bad_rank)

    @pytest.mark.parametrize(
        "kwargs", [dict(gamma=0.0), dict(gamma=-1.0), dict(q=-0.5), dict(m_total=0)]
    )
    def test_invalid_parameters(self, kwargs):
        params = dict(gamma=1.0, q=0.0, m_total=10) | kwargs
        with pytest.raises(ValueError):
            PopularityModel(**params)

    @settings(max_examples=60, deadline=None)
    @given(
        gamma=st.floats(0.5, 2.5),
        q=st.floats(0.0, 200.0),
        m_total=st.integers(10, 100_000),
    )
    def test_normalization_and_monotonicity(self, gamma, q, m_total):
        model = PopularityModel(gamma=gamma, q=q, m_total=m_total)
        pmf = model.pmf_values
        assert abs(pmf.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(pmf) <= 0)

    @settings(max_examples=40, deadline=None)
    @given(gamma=st.floats(0.5, 2.5), q=st.floats(1.0, 200.0))
    def test_plateau_head_is_flat(self, gamma, q):
        model = PopularityModel(gamma=gamma, q=q, m_total=1000)
        breakpoint_rank = math.ceil(q)
        ratio = mzipf_pmf(model, 1) / mzipf_pmf(model, min(breakpoint_rank, 1000))
        assert ratio <= 2 ** gamma + 1e-12


class TestSampling:
    def test_left_edge_maps_to_rank_one(self):
        model = PopularityModel(gamma=1.5, q=3.0, m_total=100)
        assert mzipf_sample(model, 0.0) == 1

    def test_hand_cdf(self):
        """CDF is (6/11, 9/11, 1); a draw of 0.6 lands on rank 2."""
        model = PopularityModel(gamma=1.0, q=0.0, m_total=3)
        assert mzipf_sample(model, 0.6) == 2
        assert mzipf_sample(model, 0.5) == 1
        assert mzipf_sample(model, 0.9) == 3

    def test_draw_outside_unit_interval(self):
        model = PopularityModel(gamma=1.0, q=0.0, m_total=3)
        with pytest.raises(ValueError, match="draw"):
            mzipf_sample(model, 1.0)

    def test_rank1_frequency_within_three_sigma(self):
        """1e6 draws from the region-3 model: rank-1 frequency is binomial."""
        model = PopularityModel(**REGION3)
        rng = np.random.default_rng(42)
        ranks = sample_ranks(model, rng, 10**6)
        p1 = mzipf_pmf(model, 1)
        freq = np.mean(ranks == 1)
        se = math.sqrt(p1 * (1 - p1) / 10**6)
        assert abs(freq - p1) <= 3 * se

    def test_vector_sampler_matches_scalar(self):
        model = PopularityModel(gamma=1.3, q=5.0, m_total=50)
        rng = np.random.default_rng(7)
        draws = rng.random(200)
        vector = np.searchsorted(model.cdf_values, draws, side="right")
        for u, idx in zip(draws, vector):
            assert mzipf_sample(model, float(u)) == min(int(idx), 49) + 1

    @settings(max_examples=80, deadline=None)
    @given(u=st.floats(0.0, 1.0, exclude_max=True), seed=st.integers(0, 10))
    def test_cdf_bracket_invariant(self, u, seed):
        model = PopularityModel(gamma=1.0 + 0.2 * seed, q=float(seed), m_total=30)
        rank = mzipf_sample(model, u)
        cdf = model.cdf_values
        left = cdf[rank - 2] if rank >= 2 else 0.0
        assert left <= u
        if rank < model.m_total:
            assert u < cdf[rank - 1]


class TestKlDistance:
    def test_identity_is_zero(self):
        model = PopularityModel(gamma=1.4, q=3.0, m_total=20)
        empirical = EmpiricalDistribution(counts=model.pmf_values)
        assert kl_distance(empirical, model) == pytest.approx(0.0, abs=1e-15)

    def test_point_mass_vs_uniform(self):
        """Empirical (1, 0) against a uniform model over 2 ranks is log 2."""
        model = PopularityModel(gamma=1e-9, q=0.0, m_total=2)
        empirical = EmpiricalDistribution(counts=np.array([1.0, 0.0]))
        assert kl_distance(empirical, model) == pytest.approx(math.log(2), rel=1e-6)

    def test_shrinks_with_sample_size(self):
        model = PopularityModel(**REGION2)
        rng = np.random.default_rng(3)
        values = []
        for n in (10**4, 10**5, 10**6):
            counts = np.bincount(sample_ranks(model, rng, n), minlength=model.m_total + 1)[1:]
            counts = np.sort(counts)[::-1].astype(float)
            values.append(kl_distance(EmpiricalDistribution(counts=counts), model))
        assert values[0] > values[1] > values[2] > 0

    def test_support_beyond_library_rejected(self):
        model = PopularityModel(gamma=1.0, q=0.0, m_total=2)
        empirical = EmpiricalDistribution(counts=np.array([3.0, 2.0, 1.0]))
        with pytest.raises(ValueError, match="support"):
            kl_distance(empirical, model)

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(0, 1000),
        gamma=st.floats(0.6, 2.0),
        q=st.floats(0.0, 30.0),
    )
    def test_nonnegative(self, seed, gamma, q):
        model = PopularityModel(gamma=gamma, q=q, m_total=40)
        rng = np.random.default_rng(seed)
        counts = np.sort(rng.integers(0, 50, size=40))[::-1].astype(float)
        if counts.sum() == 0:
            counts[0] = 1.0
        assert kl_distance(EmpiricalDistribution(counts=counts), model) >= 0.0


class TestEmpiricalDistribution:
    def test_rejects_increasing_counts(self):
        with pytest.raises(ValueError, match="non-increasing"):
            EmpiricalDistribution(counts=np.array([1.0, 2.0]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            EmpiricalDistribution(counts=np.array([2.0, -1.0]))

    def test_total_and_ranks(self):
        emp = EmpiricalDistribution(counts=np.array([5.0, 3.0, 0.0]))
        assert emp.total == 8.0
        assert emp.n_ranks == 2


class TestFit:
    def test_recovers_own_pmf(self):
        """Fitting a model's exact pmf recovers its parameters."""
        truth = PopularityModel(**REGION2)
        empirical = EmpiricalDistribution(counts=truth.pmf_values)
        result = fit_mzipf(empirical)
        assert result.model.m_total == truth.m_total
        assert result.model.gamma == pytest.approx(truth.gamma, abs=0.02)
        assert result.model.q == pytest.approx(truth.q, abs=2.0)
        assert result.kl_distance <= 1e-6

    def test_pure_zipf_degenerates(self):
        """A q=0 library fits with a near-zero plateau factor."""
        truth = PopularityModel(gamma=1.5, q=0.0, m_total=1000)
        result = fit_mzipf(EmpiricalDistribution(counts=truth.pmf_values))
        assert result.model.q <= 1.0
        assert result.model.gamma == pytest.approx(1.5, abs=0.02)

    @pytest.mark.parametrize(
        "params,n_samples",
        [
            (dict(gamma=1.28, q=34.0, m_total=18553), 400_000),
            (REGION2, 300_000),
            (REGION3, 300_000),
        ],
        ids=["region1", "region2", "region3"],
    )
    def test_region_shaped_samples(self, params, n_samples):
        truth = PopularityModel(**params)
        rng = np.random.default_rng(truth.m_total)
        counts = np.bincount(sample_ranks(truth, rng, n_samples), minlength=truth.m_total + 1)[1:]
        counts = np.sort(counts)[::-1]
        counts = counts[counts > 0].astype(float)
        result = fit_mzipf(EmpiricalDistribution(counts=counts))
        assert result.model.gamma == pytest.approx(truth.gamma, abs=0.05)
        assert result.model.q == pytest.approx(truth.q, rel=0.25)

    def test_degenerate_single_rank(self):
        with pytest.raises(UnidentifiableFitError):
            fit_mzipf(EmpiricalDistribution(counts=np.array([10.0, 0.0, 0.0])))

    def test_trace_and_determinism(self):
        truth = PopularityModel(gamma=1.2, q=4.0, m_total=300)
        emp = EmpiricalDistribution(counts=truth.pmf_values)
        grid = FitGrid(gamma_points=12, q_points=12)
        a = fit_mzipf(emp, grid)
        b = fit_mzipf(emp, grid)
        assert a.model == b.model
        assert a.search_trace == b.search_trace
        assert len(a.search_trace) >= 12 * 12
        assert all(kl >= 0 for _, _, kl in a.search_trace)
