"""Latency benchmarks for the per-auction hot path.

The worst case per auction is a fully censored outcome under M1: both bid
sub-models update every level, the censored-region expectation is built,
and the revenue model folds a full vector. The benchmark times
``choose_floor`` + ``process_outcome`` per event, after forcing jit
compilation so measurements exclude compile cost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import Engine, EngineConfig
from .events import event_from_ground_truth
from .grid import FloorGrid
from .params import HyperParams


@dataclass(frozen=True)
class BenchResult:
    scenario: str
    n_events: int
    latencies_ms: np.ndarray

    @property
    def percentiles(self) -> dict:
        return {
            "p50": float(np.percentile(self.latencies_ms, 50)),
            "p95": float(np.percentile(self.latencies_ms, 95)),
            "p99": float(np.percentile(self.latencies_ms, 99)),
            "mean": float(self.latencies_ms.mean()),
        }

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "n_events": self.n_events,
            "latency_ms": self.percentiles,
        }


def _make_engine(k: int, latent_dim: int, variant: str, seed: int) -> Engine:
    grid = FloorGrid.geometric(10_000, 10_000_000, k)
    hyper = HyperParams.default(latent_dim=latent_dim)
    return Engine(grid, hyper, EngineConfig(variant=variant, seed=seed))


def run_bench(
    scenario: str = "full_censored",
    n_events: int = 5_000,
    k: int = 100,
    latent_dim: int = 2,
    variant: str = "M1",
    n_users: int = 500,
    n_placements: int = 20,
    seed: int = 0,
    skip_warmup: bool = False,
) -> BenchResult:
    """Time per-auction decision+learning latency for one scenario.

    Scenarios: ``full_censored`` (lost auctions only, the heaviest path),
    ``half_censored`` (won at the floor), ``uncensored`` (closing above the
    floor), ``mixed`` (one third each, round-robin).
    """
    if scenario not in ("full_censored", "half_censored", "uncensored", "mixed"):
        raise ValueError(f"unknown scenario {scenario!r}")
    if not skip_warmup:
        kernels.warmup(latent_dim, 0)
    engine = _make_engine(k, latent_dim, variant, seed)
    grid = engine.grid
    rng = np.random.Generator(np.random.PCG64(seed))
    mid = grid.levels[grid.k // 2]
    top = grid.levels[-1]
    users = [f"u{i}" for i in range(n_users)]
    placements = [f"p{i}" for i in range(n_placements)]
    lat = np.empty(n_events)
    ts = 1_700_000_000_000
    kinds = ("full_censored", "half_censored", "uncensored")
    for i in range(n_events):
        kind = kinds[i % 3] if scenario == "mixed" else scenario
        u = users[int(rng.integers(n_users))]
        p = placements[int(rng.integers(n_placements))]
        ts += int(rng.integers(1, 50))
        if kind == "full_censored":
            b1, b2 = 0, 0          # any bid below the floor loses
        elif kind == "half_censored":
            b1, b2 = top, 0        # clears any floor, closes at the floor
        else:
            b1, b2 = top, mid      # closes strictly above low floors
        t0 = time.perf_counter_ns()
        decision = engine.choose_floor(u, p, ts)
        if kind == "full_censored":
            event = event_from_ground_truth(ts, u, p, max(decision.floor, 1), b1, b2)
        else:
            event = event_from_ground_truth(ts, u, p, decision.floor, b1, b2)
        engine.process_outcome(event)
        lat[i] = (time.perf_counter_ns() - t0) / 1e6
    return BenchResult(scenario=scenario, n_events=n_events, latencies_ms=lat)
