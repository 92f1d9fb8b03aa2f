"""Per-level revenue targets from (possibly censored) auction outcomes.

With both bids known the revenue at every candidate floor is computed
exactly. Under censorship the bid CDFs, renormalized to the censored
region, give the expected revenue instead. The discrete expectation uses
the identity ``revenue = (b2 - f)^+ + f * 1{b1 >= f}`` (valid whenever
``b2 <= b1``), whose two terms only need the marginal bid distributions;
this is the summation the cumulative-hazard CDFs feed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bids import BidCdf, BidModelStore
from .events import (
    AuctionEvent,
    CensorshipStatus,
    EventValidationError,
    FullCensored,
    HalfCensored,
    Uncensored,
    derive_censorship,
)
from .grid import BELOW_GRID, FloorGrid, snap_to_grid

logger = logging.getLogger(__name__)


class Provenance(Enum):
    EXACT = "exact"
    EXPECTED = "expected"


@dataclass(frozen=True)
class SimulatedRevenue:
    values: np.ndarray
    provenance: Provenance
    #: levels to update; all-True for exact vectors, partial under masking
    mask: np.ndarray | None = None


def simulate_revenue_vector(grid: FloorGrid, b1: int, b2: int) -> SimulatedRevenue:
    """Exact revenue at every level: ``1{f_k <= b1} * max(f_k, b2)``."""
    if not (0 <= b2 <= b1):
        raise EventValidationError("need 0 <= b2 <= b1")
    f = grid.as_float()
    values = np.where(f <= b1, np.maximum(f, float(b2)), 0.0)
    return SimulatedRevenue(values=values, provenance=Provenance.EXACT)


def _conditional_cdf(cdf: BidCdf, censor_bin: int, label: str) -> np.ndarray:
    """CDF renormalized to bids at or below the censor bin.

    Index c of the result is ``P(bid <= f_c | bid <= f_a)`` for c <= a; a
    vanishing CDF at the censor point falls back to a point mass at the
    lowest bin (maximally pessimistic)."""
    phi_a = cdf.cdf[censor_bin]
    if phi_a <= 0.0:
        logger.warning(
            "%s CDF vanishes at censor bin %d; falling back to lowest-bin mass",
            label,
            censor_bin,
        )
        return np.ones(censor_bin + 1)
    return cdf.cdf[: censor_bin + 1] / phi_a


def _uplift_above_floor(cond2: np.ndarray, f: np.ndarray, a: int) -> np.ndarray:
    """``E[(b2 - f_k)^+]`` for every k < a, from the conditional second-bid CDF.

    Summation by parts of the tail masses: an atom at bin j contributes
    ``f_j - f_k`` for k < j."""
    tail = 1.0 - cond2[:a]                       # P(b2 > f_k), k = 0..a-1
    steps = f[1 : a + 1] - f[:a]                 # f_{k+1} - f_k
    return np.cumsum((steps * tail)[::-1])[::-1]


def expected_revenue_full_censored(
    grid: FloorGrid, cdf1: BidCdf, cdf2: BidCdf, censor_point: int
) -> SimulatedRevenue:
    """Expected per-level revenue of a lost auction (both bids censored).

    For levels below the censor bin: the expected second-bid uplift plus
    the floor weighted by the conditional chance the first bid clears it;
    zero at and above the censor bin."""
    a = _censor_bin(grid, censor_point)
    f = grid.as_float()
    values = np.zeros(grid.k)
    if a > 0:
        cond1 = _conditional_cdf(cdf1, a, "first-bid")
        cond2 = _conditional_cdf(cdf2, a, "second-bid")
        # P(b1 >= f_k | region): one minus the CDF one bin below
        surv1 = 1.0 - np.concatenate(([0.0], cond1[: a - 1]))
        values[:a] = _uplift_above_floor(cond2, f, a) + f[:a] * surv1
    return SimulatedRevenue(values=values, provenance=Provenance.EXPECTED)


def expected_revenue_half_censored(
    grid: FloorGrid, cdf2: BidCdf, b1: int, censor_point: int
) -> SimulatedRevenue:
    """Expected per-level revenue when only the second bid is censored.

    Below the censor bin the first bid surely clears the floor, so the
    floor is collected plus the expected second-bid uplift; at and above
    the censor bin the revenue is exact: ``f_k`` when ``f_k <= b1``."""
    if b1 < censor_point:
        raise EventValidationError("half censorship requires b1 >= censor point")
    a = _censor_bin(grid, censor_point)
    f = grid.as_float()
    values = np.where(f <= b1, f, 0.0)
    if a > 0:
        cond2 = _conditional_cdf(cdf2, a, "second-bid")
        values[:a] = _uplift_above_floor(cond2, f, a) + f[:a]
    return SimulatedRevenue(values=values, provenance=Provenance.EXPECTED)


def _censor_bin(grid: FloorGrid, censor_point: int) -> int:
    a = snap_to_grid(censor_point, grid)
    if a == BELOW_GRID:
        # censoring below the grid censors nothing the grid can express
        return 0
    return a


def build_training_target(
    event: AuctionEvent,
    variant: str,
    grid: FloorGrid,
    bid_store: BidModelStore | None = None,
) -> SimulatedRevenue | None:
    """Revenue target fed to the profile model, per censorship variant.

    M1 reconstructs censored outcomes from the bid models; M2 pessimistically
    pins censored bids (to the floor, or to zero when fully censored); M3
    updates only the levels the outcome determines, skipping fully censored
    auctions entirely. Returns ``None`` when no update should happen.
    """
    if variant not in ("M1", "M2", "M3", "M4"):
        raise EventValidationError(f"unknown variant {variant!r}")
    status = derive_censorship(event)
    if isinstance(status, Uncensored):
        return simulate_revenue_vector(grid, status.b1, status.b2)
    masked = variant in ("M3", "M4")
    if isinstance(status, HalfCensored):
        if variant == "M1":
            if bid_store is None:
                raise EventValidationError("variant M1 requires bid models")
            cdf2 = bid_store.second.estimate_cdf(event.user_id, event.placement_id)
            return expected_revenue_half_censored(
                grid, cdf2, status.b1, status.censor_point
            )
        if variant == "M2":
            return simulate_revenue_vector(grid, status.b1, status.censor_point)
        # M3/M4: exact at levels >= floor bin, no update below
        sim = simulate_revenue_vector(grid, status.b1, status.censor_point)
        a = _censor_bin(grid, status.censor_point)
        mask = np.arange(grid.k) >= a
        return SimulatedRevenue(sim.values, Provenance.EXACT, mask=mask)
    # fully censored
    if masked:
        return None
    if variant == "M2":
        return SimulatedRevenue(np.zeros(grid.k), Provenance.EXACT)
    if bid_store is None:
        raise EventValidationError("variant M1 requires bid models")
    cdf1 = bid_store.first.estimate_cdf(event.user_id, event.placement_id)
    cdf2 = bid_store.second.estimate_cdf(event.user_id, event.placement_id)
    return expected_revenue_full_censored(grid, cdf1, cdf2, status.censor_point)
