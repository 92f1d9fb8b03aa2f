"""Decision loop: pick a floor for each auction, then learn from its outcome."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bids import BidModelStore
from .censorship import build_training_target, simulate_revenue_vector
from .events import (
    AuctionEvent,
    EventValidationError,
    FullCensored,
    HalfCensored,
    Uncensored,
    derive_censorship,
    event_from_ground_truth,
    realized_revenue,
)
from .grid import BELOW_GRID, FloorGrid, snap_to_grid
from .params import ConfigError, HyperParams
from .revenue import ModelStore, OutOfOrderError

VARIANTS = ("M1", "M2", "M3", "M4")


@dataclass(frozen=True)
class EngineConfig:
    variant: str = "M1"
    selection: str = "greedy"  # "greedy" | "linucb"; M4 forces linucb
    seed: int = 0
    out_of_order: str = "reject"
    max_users: int | None = None
    max_placements: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.selection not in ("greedy", "linucb"):
            raise ConfigError("selection must be 'greedy' or 'linucb'")
        if self.variant == "M4" and self.selection != "linucb":
            object.__setattr__(self, "selection", "linucb")


@dataclass(frozen=True)
class Decision:
    level_index: int
    floor: int
    predicted_profile: np.ndarray
    score_vector: np.ndarray


@dataclass
class EngineMetrics:
    n_auctions: int = 0
    total_revenue: int = 0
    uncensored: int = 0
    half_censored: int = 0
    full_censored: int = 0
    skipped_updates: int = 0

    @property
    def average_revenue(self) -> float:
        return self.total_revenue / self.n_auctions if self.n_auctions else 0.0

    def as_dict(self) -> dict:
        return {
            "n_auctions": self.n_auctions,
            "total_revenue": self.total_revenue,
            "average_revenue": self.average_revenue,
            "uncensored": self.uncensored,
            "half_censored": self.half_censored,
            "full_censored": self.full_censored,
            "skipped_updates": self.skipped_updates,
        }


class Engine:
    """Reserve-price engine facade.

    ``choose_floor`` is pure; ``process_outcome`` validates everything it
    can before touching any store, so a rejected event leaves all state
    unchanged. Single-threaded use is the reproducibility contract; callers
    wanting concurrency must serialize writers per entity.
    """

    def __init__(self, grid: FloorGrid, hyper: HyperParams, config: EngineConfig):
        self.grid = grid
        self.hyper = hyper
        self.config = config
        self.revenue = ModelStore(
            grid,
            hyper,
            seed=config.seed,
            max_users=config.max_users,
            max_placements=config.max_placements,
            out_of_order=config.out_of_order,
        )
        self.bids: BidModelStore | None = None
        if config.variant == "M1":
            self.bids = BidModelStore(
                grid,
                hyper,
                seed=config.seed,
                max_users=config.max_users,
                max_placements=config.max_placements,
                out_of_order=config.out_of_order,
            )
        self.metrics = EngineMetrics()

    # -- decision -----------------------------------------------------------

    def choose_floor(
        self,
        user_id: str,
        placement_id: str,
        timestamp: int | None = None,
        features: np.ndarray | None = None,
    ) -> Decision:
        """Argmax (or Lin-UCB) over the predicted profile; ties go to the
        lowest level, which censors least."""
        profile = self.revenue.predict_profile(user_id, placement_id, features)
        scores = np.maximum(profile, 0.0)
        if self.config.selection == "linucb":
            scores = scores + self.hyper.ucb_alpha * self._ucb_bonus(
                user_id, placement_id
            )
        k = int(np.argmax(scores))  # first max -> lowest level
        return Decision(
            level_index=k,
            floor=self.grid.levels[k],
            predicted_profile=profile,
            score_vector=scores,
        )

    def _ucb_bonus(self, user_id: str, placement_id: str) -> np.ndarray:
        """Per-level uncertainty: sqrt(y' A_k^{-1} y) with A_k the regularized
        user-side accumulator, plus the symmetric placement-side term."""
        h = self.hyper
        K = self.grid.k
        u = self.revenue.users.get(user_id)
        p = self.revenue.placements.get(placement_id)
        xf = u.factors if u is not None else np.tile(h.x0, (K, 1))
        yf = p.factors if p is not None else np.tile(h.y0, (K, 1))
        ucov = u.cov if u is not None else np.zeros((K,) + h.user_precision.shape)
        pcov = p.cov if p is not None else np.zeros((K,) + h.placement_precision.shape)
        a_u = ucov + h.user_precision
        a_p = pcov + h.placement_precision
        qu = np.einsum(
            "kl,kl->k", yf, np.linalg.solve(a_u, yf[..., None])[..., 0]
        )
        qp = np.einsum(
            "kl,kl->k", xf, np.linalg.solve(a_p, xf[..., None])[..., 0]
        )
        return np.sqrt(np.maximum(qu, 0.0)) + np.sqrt(np.maximum(qp, 0.0))

    # -- learning -----------------------------------------------------------

    def _target_mask(self, event: AuctionEvent) -> np.ndarray | None:
        """Levels the revenue model will touch, or None for a skipped event."""
        status = derive_censorship(event)
        if isinstance(status, Uncensored) or self.config.variant in ("M1", "M2"):
            return np.ones(self.grid.k, dtype=np.bool_)
        if isinstance(status, FullCensored):
            return None
        a = snap_to_grid(status.censor_point, self.grid)
        if a == BELOW_GRID:
            a = 0
        return np.arange(self.grid.k) >= a

    def process_outcome(
        self, event: AuctionEvent, features: np.ndarray | None = None
    ) -> None:
        """Consume one auction outcome: update bid models (M1), build the
        per-variant training target, and fold it into the revenue model."""
        cfg = self.config
        status = derive_censorship(event)
        mask = self._target_mask(event)
        # validate before any mutation so a rejected event is a no-op
        if mask is not None:
            self._validate_revenue_timestamp(event, mask)
        if self.bids is not None:
            self._validate_bid_timestamps(event)
            self.bids.update_from_auction(event)
        target = build_training_target(event, cfg.variant, self.grid, self.bids)
        if target is None:
            self.metrics.skipped_updates += 1
        else:
            self.revenue.update(
                event.user_id,
                event.placement_id,
                event.timestamp,
                target.values,
                features=features,
                mask=target.mask,
            )
        self._count(status)

    def _count(self, status) -> None:
        m = self.metrics
        m.n_auctions += 1
        if isinstance(status, Uncensored):
            m.uncensored += 1
        elif isinstance(status, HalfCensored):
            m.half_censored += 1
        else:
            m.full_censored += 1

    def _validate_revenue_timestamp(self, event: AuctionEvent, mask) -> None:
        if self.revenue.out_of_order != "reject":
            return
        t = float(event.timestamp)
        for st in (
            self.revenue.users.get(event.user_id),
            self.revenue.placements.get(event.placement_id),
        ):
            if st is not None and t < st.last_update[mask].max():
                raise OutOfOrderError("timestamp precedes entity last update")
        if t < self.revenue.beta_last[mask].max():
            raise OutOfOrderError("timestamp precedes bias last update")

    def _validate_bid_timestamps(self, event: AuctionEvent) -> None:
        status = derive_censorship(event)
        if isinstance(status, Uncensored):
            points = (status.b1, status.b2)
        elif isinstance(status, HalfCensored):
            points = (status.b1, status.censor_point)
        else:
            points = (status.censor_point, status.censor_point)
        t = float(event.timestamp)
        for model, point in zip((self.bids.first, self.bids.second), points):
            if model.out_of_order != "reject":
                continue
            j = snap_to_grid(point, self.grid)
            if j == BELOW_GRID:
                j = 0
            for st in (
                model.users.get(event.user_id),
                model.placements.get(event.placement_id),
            ):
                if st is not None and t < st.last_update[j:].max():
                    raise OutOfOrderError("timestamp precedes bid-model update")

    def process_ground_truth(
        self,
        user_id: str,
        placement_id: str,
        timestamp: int,
        b1: int,
        b2: int,
        features: np.ndarray | None = None,
    ) -> None:
        """Uncensored feed: train on the exact revenue vector, as if the
        chosen floor censored nothing. Bid models are not needed."""
        target = simulate_revenue_vector(self.grid, b1, b2)
        self.revenue.update(
            user_id, placement_id, timestamp, target.values, features=features
        )
        self.metrics.n_auctions += 1
        self.metrics.uncensored += 1


def run_closed_loop(
    engine: Engine,
    stream,
    uncensored_feed: bool = False,
    collect_latency: bool = False,
) -> dict:
    """Drive the engine over a ground-truth stream.

    For each auction: choose a floor, realize the revenue with the true
    bids, build the observable (censored) event, and learn from it. With
    ``uncensored_feed`` the learning step sees the true bids instead, which
    upper-bounds what censorship-handling can recover.
    """
    latencies = [] if collect_latency else None
    for ts, user, placement, b1, b2 in stream.iter_events():
        t0 = time.perf_counter_ns() if collect_latency else 0
        decision = engine.choose_floor(user, placement, ts)
        floor = decision.floor
        engine.metrics.total_revenue += realized_revenue(floor, b1, b2)
        if uncensored_feed:
            engine.process_ground_truth(user, placement, ts, b1, b2)
        else:
            event = event_from_ground_truth(ts, user, placement, floor, b1, b2)
            engine.process_outcome(event)
        if collect_latency:
            latencies.append(time.perf_counter_ns() - t0)
    out = engine.metrics.as_dict()
    if collect_latency and latencies:
        arr = np.asarray(latencies, dtype=np.float64) / 1e6
        out["latency_ms"] = {
            "p50": float(np.percentile(arr, 50)),
            "p95": float(np.percentile(arr, 95)),
            "p99": float(np.percentile(arr, 99)),
        }
    return out
