import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floorpricer.bids import (
    BidCdf,
    BidDistributionModel,
    BidModelStore,
    Censored,
    Observed,
)
from floorpricer.events import event_from_ground_truth
from floorpricer.grid import FloorGrid
from floorpricer.params import ConfigError, HyperParams
from floorpricer.revenue import OutOfOrderError

GRID = FloorGrid((10, 20, 40, 80, 160, 320, 640, 1280))


def _hyper(**kw):
    return HyperParams.default(latent_dim=2, **kw)


class TestBidCdf:
    @given(
        raw=st.lists(
            st.floats(-5, 50, allow_nan=False), min_size=2, max_size=30
        )
    )
    def test_cdf_monotone_and_bounded(self, raw):
        c = BidCdf.from_raw_hazards(np.array(raw), lambda_max=20.0)
        assert (c.hazard >= 0).all() and (c.hazard <= 20.0).all()
        assert (np.diff(c.cdf) >= -1e-15).all()
        assert (c.cdf > 0).all() and (c.cdf <= 1.0).all()

    def test_clamping(self):
        c = BidCdf.from_raw_hazards(np.array([-1.0, 100.0, 0.5]), lambda_max=20.0)
        np.testing.assert_allclose(c.hazard, [0.0, 20.0, 0.5])

    def test_point_mass(self):
        c = BidCdf.point_mass(5, 2)
        np.testing.assert_allclose(c.cdf, [0, 0, 1, 1, 1])


def _empirical_hazard(counts_at, counts_le):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts_le > 0, counts_at / counts_le, 0.0)


class TestRecovery:
    def _draw_stream(self, rng, pmf, n):
        return rng.choice(len(pmf), size=n, p=pmf)

    def test_uncensored_hazard_recovery_against_law_oracle(self, rng):
        """Feeding iid draws from a known discrete law must recover the
        per-bin hazard P(V = b_k | V <= b_k); the reported CDF then follows
        the cumulated-hazard convention exp(-sum of hazards above)."""
        pmf = np.array([0.05, 0.1, 0.2, 0.25, 0.15, 0.1, 0.1, 0.05])
        h = _hyper(gamma_bid=1.0, bid_free_precision=1.0)
        model = BidDistributionModel(GRID, h, seed=0)
        t = 1_000_000
        bins = self._draw_stream(rng, pmf, 4_000)
        for j in bins:
            t += 10
            model.update("u", "p", t, Observed(GRID.levels[j]))
        est = model.estimate_cdf("u", "p")
        true_hazard = pmf / np.cumsum(pmf)
        assert np.abs(est.hazard - true_hazard).max() < 0.05
        convention_cdf = np.exp(-np.cumsum(true_hazard[::-1])[::-1])
        assert np.abs(est.cdf - convention_cdf).max() < 0.05

    def test_recovery_under_independent_censoring(self, rng):
        """Random floors censor ~40% of draws; a draw below its floor is
        reported only as 'below the floor'. The hazard votes this produces
        are still consistent for the true CDF."""
        pmf = np.array([0.05, 0.1, 0.2, 0.25, 0.15, 0.1, 0.1, 0.05])
        h = _hyper(gamma_bid=1.0, bid_free_precision=1.0)
        model = BidDistributionModel(GRID, h, seed=1)
        t = 1_000_000
        n_censored = 0
        n = 12_000
        for j in self._draw_stream(rng, pmf, n):
            t += 10
            a = int(rng.integers(0, GRID.k))  # floor bin, independent of V
            if j < a:
                model.update("u", "p", t, Censored(GRID.levels[a]))
                n_censored += 1
            else:
                model.update("u", "p", t, Observed(GRID.levels[j]))
        assert 0.25 < n_censored / n < 0.55
        est = model.estimate_cdf("u", "p")
        true_hazard = pmf / np.cumsum(pmf)
        assert np.abs(est.hazard - true_hazard).max() < 0.08
        convention_cdf = np.exp(-np.cumsum(true_hazard[::-1])[::-1])
        assert np.abs(est.cdf - convention_cdf).max() < 0.08

    def test_below_grid_observation_belongs_to_all_levels(self):
        model = BidDistributionModel(GRID, _hyper(), seed=2)
        model.update("u", "p", 1_000, Observed(3))  # below the lowest level
        assert (model.level_counts == 1).all()

    def test_membership_counters(self):
        model = BidDistributionModel(GRID, _hyper(), seed=3)
        model.update("u", "p", 1_000, Observed(GRID.levels[3]))
        expected = (np.arange(GRID.k) >= 3).astype(np.int64)
        np.testing.assert_array_equal(model.level_counts, expected)
        model.update("u", "p", 2_000, Censored(GRID.levels[5]))
        expected += (np.arange(GRID.k) >= 5).astype(np.int64)
        np.testing.assert_array_equal(model.level_counts, expected)

    def test_negative_bid_rejected(self):
        model = BidDistributionModel(GRID, _hyper(), seed=4)
        with pytest.raises(ConfigError):
            model.update("u", "p", 0, Observed(-1))

    def test_out_of_order_rejected(self):
        model = BidDistributionModel(GRID, _hyper(), seed=5)
        model.update("u", "p", 5_000, Observed(GRID.levels[2]))
        with pytest.raises(OutOfOrderError):
            model.update("u", "p", 4_000, Observed(GRID.levels[2]))
        # an earlier event touching only untouched lower levels is impossible
        # (levels >= bin update), so bin 2 at the same ts is accepted
        model.update("u", "p", 5_000, Observed(GRID.levels[2]))

    def test_estimate_is_pure_and_has_prior_fallback(self):
        h = _hyper()
        model = BidDistributionModel(GRID, h, seed=6)
        before = len(model.users)
        c = model.estimate_cdf("ghost", "ghost")
        assert len(model.users) == before
        raw = float(h.m0 @ h.n0)
        expected = BidCdf.from_raw_hazards(np.full(GRID.k, raw), h.lambda_max)
        np.testing.assert_allclose(c.cdf, expected.cdf)


class TestBidModelStore:
    def test_sub_models_are_independent(self):
        store = BidModelStore(GRID, _hyper(), seed=0)
        ev = event_from_ground_truth(1_000, "u", "p", 0, 700, 50)
        store.update_from_auction(ev)
        assert store.first.level_counts.sum() > 0
        # distinct seeds: fresh estimates differ through their init noise
        store.first.update("u", "p", 2_000, Observed(640))
        assert len(store.second.users) >= 0  # second untouched by first's update

    def test_dispatch_by_censorship(self):
        store = BidModelStore(GRID, _hyper(), seed=1)
        # uncensored: b1 observed at bin of 700 (=6), b2 at bin of 50 (=2)
        store.update_from_auction(event_from_ground_truth(1_000, "u", "p", 20, 700, 50))
        np.testing.assert_array_equal(
            store.first.level_counts, (np.arange(GRID.k) >= 6).astype(np.int64)
        )
        np.testing.assert_array_equal(
            store.second.level_counts, (np.arange(GRID.k) >= 2).astype(np.int64)
        )
        # half censored at floor 80 (bin 3): b1 observed, b2 censored at 80
        store2 = BidModelStore(GRID, _hyper(), seed=2)
        store2.update_from_auction(event_from_ground_truth(1_000, "u", "p", 80, 700, 50))
        np.testing.assert_array_equal(
            store2.second.level_counts, (np.arange(GRID.k) >= 3).astype(np.int64)
        )
        # fully censored at floor 160 (bin 4): both censored there
        store3 = BidModelStore(GRID, _hyper(), seed=3)
        store3.update_from_auction(event_from_ground_truth(1_000, "u", "p", 160, 100, 50))
        np.testing.assert_array_equal(
            store3.first.level_counts, (np.arange(GRID.k) >= 4).astype(np.int64)
        )
        np.testing.assert_array_equal(
            store3.second.level_counts, (np.arange(GRID.k) >= 4).astype(np.int64)
        )
