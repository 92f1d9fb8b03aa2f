"""Online Aalen additive regression of the first and second bid distributions.

Each sub-model estimates, per grid level, a left-censoring hazard
``lambda_k = P(V = b_k | V <= b_k)`` as a latent-factor product
``m_uk . n_pk``. A level's history only contains auctions whose bid (or
censor point) snapped at or below that level, so accumulators and decay
clocks are maintained per level. CDFs come from the cumulated hazards.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .events import (
    AuctionEvent,
    FullCensored,
    HalfCensored,
    Uncensored,
    derive_censorship,
)
from .grid import BELOW_GRID, FloorGrid, snap_to_grid
from .params import ConfigError, HyperParams
from .revenue import EntityState, OutOfOrderError


@dataclass(frozen=True)
class Observed:
    value: int


@dataclass(frozen=True)
class Censored:
    at: int


BidObservation = Union[Observed, Censored]


@dataclass(frozen=True)
class BidCdf:
    """Clamped per-level hazards and the CDF they cumulate to.

    ``cdf[k] = exp(-sum(hazard[j] for j >= k))`` is nondecreasing in k and
    bounded by ``exp(-hazard[-1]) <= 1`` at the top level.
    """

    hazard: np.ndarray
    cdf: np.ndarray

    @classmethod
    def from_raw_hazards(cls, raw: np.ndarray, lambda_max: float) -> "BidCdf":
        hazard = np.clip(raw, 0.0, lambda_max)
        cum = np.cumsum(hazard[::-1])[::-1]
        return cls(hazard=hazard, cdf=np.exp(-cum))

    @classmethod
    def point_mass(cls, k: int, level: int) -> "BidCdf":
        """Degenerate CDF with all mass at ``level`` (0-based bin)."""
        cdf = (np.arange(k) >= level).astype(np.float64)
        return cls(hazard=np.zeros(k), cdf=cdf)


class BidDistributionModel:
    """One Aalen sub-model (first OR second bid) over a shared grid."""

    def __init__(
        self,
        grid: FloorGrid,
        hyper: HyperParams,
        seed: int = 0,
        max_users: int | None = None,
        max_placements: int | None = None,
        out_of_order: str = "reject",
    ):
        if out_of_order not in ("reject", "clamp"):
            raise ConfigError("out_of_order must be 'reject' or 'clamp'")
        self.grid = grid
        self.hyper = hyper
        self.out_of_order = out_of_order
        self.max_users = max_users
        self.max_placements = max_placements
        self.users: OrderedDict[str, EntityState] = OrderedDict()
        self.placements: OrderedDict[str, EntityState] = OrderedDict()
        self.rng = np.random.Generator(np.random.PCG64(seed))
        #: per-level count of auctions folded in; auditable membership trace
        self.level_counts = np.zeros(grid.k, dtype=np.int64)

    def _get_or_create(self, table, entity_id, prior, cap, t) -> EntityState:
        state = table.get(entity_id)
        if state is None:
            if cap is not None and len(table) >= cap:
                table.popitem(last=False)
            noise = self.rng.normal(
                0.0, self.hyper.init_noise_stddev, (self.grid.k, prior.shape[0])
            )
            state = EntityState.fresh(self.grid.k, prior, noise, t)
            table[entity_id] = state
        else:
            table.move_to_end(entity_id)
        return state

    def update(
        self,
        user_id: str,
        placement_id: str,
        timestamp: int,
        observation: BidObservation,
    ) -> None:
        """Fold one observation into every level it is a member of.

        An observation at (or censored at) bin j belongs to levels k >= j;
        the regression target is 1 only at bin j when uncensored. A value
        below the grid belongs to all levels but hits none of them (it is
        not *at* any level), so it votes 0 everywhere; a censor point below
        the grid censors nothing the grid can express and is treated the
        same way.
        """
        if isinstance(observation, Observed):
            value = observation.value
            censored = False
        else:
            value = observation.at
            censored = True
        if value < 0:
            raise ConfigError("bid observations must be nonnegative")
        j = snap_to_grid(value, self.grid)
        if j == BELOW_GRID:
            j = 0
            hit = -1
        else:
            hit = -1 if censored else j
        t = float(timestamp)
        u = self.users.get(user_id)
        p = self.placements.get(placement_id)
        if self.out_of_order == "reject":
            for st in (u, p):
                if st is not None and t < st.last_update[j:].max():
                    raise OutOfOrderError(
                        f"timestamp {timestamp} precedes entity last update"
                    )
        h = self.hyper
        u = self._get_or_create(self.users, user_id, h.m0, self.max_users, t)
        p = self._get_or_create(
            self.placements, placement_id, h.n0, self.max_placements, t
        )
        kernels.aalen_update(
            j, hit, t,
            u.factors, u.cov, u.obs, u.last_update,
            p.factors, p.cov, p.obs, p.last_update,
            h.m0, h.n0,
            h.bid_user_precision, h.bid_placement_precision,
            h.gamma_bid,
            h.als_iterations,
            self.level_counts,
        )

    def estimate_cdf(self, user_id: str, placement_id: str) -> BidCdf:
        """Hazards and CDF for a pair; unknown entities use prior means. Pure."""
        h = self.hyper
        u = self.users.get(user_id)
        p = self.placements.get(placement_id)
        mf = u.factors if u is not None else h.m0[None, :]
        nf = p.factors if p is not None else h.n0[None, :]
        raw = np.sum(mf * nf, axis=1)
        if raw.shape == (1,):
            raw = np.full(self.grid.k, raw[0])
        return BidCdf.from_raw_hazards(raw, h.lambda_max)


class BidModelStore:
    """Independent first-bid and second-bid sub-models."""

    def __init__(
        self,
        grid: FloorGrid,
        hyper: HyperParams,
        seed: int = 0,
        max_users: int | None = None,
        max_placements: int | None = None,
        out_of_order: str = "reject",
    ):
        kw = dict(
            max_users=max_users,
            max_placements=max_placements,
            out_of_order=out_of_order,
        )
        self.grid = grid
        self.first = BidDistributionModel(grid, hyper, seed=seed * 2 + 1, **kw)
        self.second = BidDistributionModel(grid, hyper, seed=seed * 2 + 2, **kw)

    def update_from_auction(self, event: AuctionEvent) -> None:
        """Dispatch one auction to both sub-models per its censorship."""
        status = derive_censorship(event)
        u, p, t = event.user_id, event.placement_id, event.timestamp
        if isinstance(status, Uncensored):
            self.first.update(u, p, t, Observed(status.b1))
            self.second.update(u, p, t, Observed(status.b2))
        elif isinstance(status, HalfCensored):
            self.first.update(u, p, t, Observed(status.b1))
            self.second.update(u, p, t, Censored(status.censor_point))
        else:
            self.first.update(u, p, t, Censored(status.censor_point))
            self.second.update(u, p, t, Censored(status.censor_point))
