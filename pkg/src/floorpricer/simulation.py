"""Synthetic nonstationary auction streams, baselines, and experiments.

The generator is deliberately simple but keeps the properties that make
reserve pricing hard in production: heavy-tailed bids with per-user and
per-placement offsets, slow drift of the price level, a Zipf-popular user
population with a stream of one-shot "flash" users, and full knowledge of
both bids so any strategy can be scored exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import Engine, EngineConfig, run_closed_loop
from .events import realized_revenue
from .grid import FloorGrid
from .params import ConfigError, HyperParams
from .revenue import batch_fit

BASELINES = ("NO_RES", "PL_RES", "PL_RES_ONLINE", "ORACLE")
SETTINGS = ("S1", "S2", "S3")


@dataclass(frozen=True)
class StreamConfig:
    n_users: int = 20_000
    n_placements: int = 200
    n_auctions: int = 200_000
    seed: int = 0
    #: log-scale location/scale of the first bid, in micro-units
    log_location: float = math.log(2_000_000.0)
    log_scale: float = 0.15
    user_offset_scale: float = 0.5
    placement_offset_scale: float = 0.7
    #: second bid = first bid * Beta(ratio_a, ratio_b)
    ratio_a: float = 2.0
    ratio_b: float = 3.0
    #: sinusoidal drift of the log location
    drift_amplitude: float = 0.2
    drift_period_s: float = 6 * 3600.0
    zipf_exponent: float = 1.1
    flash_user_fraction: float = 0.1
    mean_gap_ms: float = 100.0
    start_ms: int = 1_700_000_000_000

    def __post_init__(self):
        if self.n_users < 1 or self.n_placements < 1 or self.n_auctions < 1:
            raise ConfigError("stream sizes must be positive")
        if not (0.0 <= self.flash_user_fraction < 1.0):
            raise ConfigError("flash_user_fraction must be in [0, 1)")


@dataclass
class GroundTruthStream:
    """Column-oriented auction stream with true (b1, b2) per auction."""

    ts: np.ndarray          # int64 ms, nondecreasing
    users: np.ndarray       # object array of ids
    placements: np.ndarray
    b1: np.ndarray          # int64 micro-units
    b2: np.ndarray

    def __len__(self):
        return len(self.ts)

    def iter_events(self):
        return zip(
            self.ts.tolist(),
            self.users.tolist(),
            self.placements.tolist(),
            self.b1.tolist(),
            self.b2.tolist(),
        )

    def slice(self, start: int, stop: int) -> "GroundTruthStream":
        return GroundTruthStream(
            ts=self.ts[start:stop],
            users=self.users[start:stop],
            placements=self.placements[start:stop],
            b1=self.b1[start:stop],
            b2=self.b2[start:stop],
        )

    def split(self, fraction: float) -> tuple["GroundTruthStream", "GroundTruthStream"]:
        cut = int(len(self) * fraction)
        return self.slice(0, cut), self.slice(cut, len(self))


def generate_stream(config: StreamConfig) -> GroundTruthStream:
    """Deterministic stream for a seed; same seed, same stream."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.n_auctions
    gaps = rng.exponential(config.mean_gap_ms, n)
    ts = config.start_ms + np.cumsum(gaps).astype(np.int64)

    ranks = np.arange(1, config.n_users + 1, dtype=np.float64)
    pop = ranks ** (-config.zipf_exponent)
    pop /= pop.sum()
    user_idx = rng.choice(config.n_users, size=n, p=pop)
    flash = rng.random(n) < config.flash_user_fraction
    users = np.empty(n, dtype=object)
    regular = np.char.add("u", user_idx.astype(str))
    flash_ids = np.char.add("flash", np.arange(n).astype(str))
    users[:] = np.where(flash, flash_ids, regular)

    pranks = np.arange(1, config.n_placements + 1, dtype=np.float64)
    ppop = pranks ** (-config.zipf_exponent)
    ppop /= ppop.sum()
    placement_idx = rng.choice(config.n_placements, size=n, p=ppop)
    placements = np.char.add("p", placement_idx.astype(str)).astype(object)

    user_off = rng.normal(0.0, config.user_offset_scale, config.n_users)
    flash_off = rng.normal(0.0, config.user_offset_scale, n)
    placement_off = rng.normal(0.0, config.placement_offset_scale, config.n_placements)

    t_sec = (ts - ts[0]) / 1000.0
    drift = config.drift_amplitude * np.sin(
        2.0 * math.pi * t_sec / config.drift_period_s
    )
    log_b1 = (
        config.log_location
        + drift
        + np.where(flash, flash_off, user_off[user_idx])
        + placement_off[placement_idx]
        + rng.normal(0.0, config.log_scale, n)
    )
    b1f = np.exp(log_b1)
    ratio = rng.beta(config.ratio_a, config.ratio_b, n)
    b1 = np.round(b1f).astype(np.int64)
    b2 = np.round(b1f * ratio).astype(np.int64)
    return GroundTruthStream(ts=ts, users=users, placements=placements, b1=b1, b2=b2)


def default_grid_for(config: StreamConfig, k: int = 100) -> FloorGrid:
    """Geometric grid spanning the bulk of the configured bid distribution."""
    span = 2.0 * (
        config.log_scale
        + config.drift_amplitude / 2.0
        + config.placement_offset_scale
        + config.user_offset_scale
    )
    lo = math.exp(config.log_location - span)
    hi = math.exp(config.log_location + span)
    return FloorGrid.geometric(int(lo), int(hi), k)


# -- baselines ---------------------------------------------------------------


def _revenue_matrix(stream: GroundTruthStream, grid: FloorGrid) -> np.ndarray:
    """(n, K+1) realized revenue per auction per level; column 0 is no floor."""
    f = np.concatenate(([0.0], grid.as_float()))
    b1 = stream.b1[:, None].astype(np.float64)
    b2 = stream.b2[:, None].astype(np.float64)
    return np.where(f[None, :] <= b1, np.maximum(f[None, :], b2), 0.0)


def run_baseline(
    strategy: str,
    test: GroundTruthStream,
    grid: FloorGrid | None = None,
    train: GroundTruthStream | None = None,
    ewma_gamma: float = math.exp(-1.0 / 1800.0),
) -> float:
    """Average revenue of a reference strategy on the test stream.

    PL_RES picks one fixed floor per placement by exhaustive scan of the
    training split (no-floor included); PL_RES_ONLINE keeps a per-placement
    exponentially weighted moving average of the full revenue vector using
    uncensored bids and plays its argmax.
    """
    if strategy == "NO_RES":
        return float(test.b2.mean())
    if strategy == "ORACLE":
        return float(test.b1.mean())
    if grid is None:
        raise ConfigError(f"{strategy} needs a grid")
    if strategy == "PL_RES":
        if train is None:
            raise ConfigError("PL_RES needs a training split")
        choice: dict[str, int] = {}
        rm = _revenue_matrix(train, grid)
        for p in np.unique(train.placements.astype(str)):
            rows = train.placements == p
            choice[p] = int(np.argmax(rm[rows].mean(axis=0)))
        levels = np.concatenate(([0], grid.as_array()))
        total = 0
        for ts, u, p, b1, b2 in test.iter_events():
            floor = levels[choice.get(p, 0)]
            total += realized_revenue(int(floor), b1, b2)
        return total / len(test)
    if strategy == "PL_RES_ONLINE":
        levels = np.concatenate(([0], grid.as_float()))
        state: dict[str, tuple[np.ndarray, np.ndarray, float]] = {}
        if train is not None:
            streams = [train, test]
        else:
            streams = [test]
        total = 0
        for si, stream in enumerate(streams):
            measure = stream is test
            rm = _revenue_matrix(stream, grid)
            for i, (ts, u, p, b1, b2) in enumerate(stream.iter_events()):
                sums, weight, last = state.get(
                    p, (np.zeros(len(levels)), np.zeros(len(levels)), float(ts))
                )
                d = ewma_gamma ** (max(ts - last, 0.0) / 1000.0)
                sums = sums * d
                weight = weight * d
                if measure:
                    with np.errstate(invalid="ignore"):
                        means = np.where(weight > 0, sums / np.maximum(weight, 1e-12), 0.0)
                    floor = levels[int(np.argmax(means))]
                    total += realized_revenue(int(floor), b1, b2)
                sums = sums + rm[i]
                weight = weight + 1.0
                state[p] = (sums, weight, float(ts))
        return total / len(test)
    raise ConfigError(f"unknown baseline {strategy!r}")


# -- experiments -------------------------------------------------------------


def _engine_for(
    grid: FloorGrid, hyper: HyperParams, variant: str, seed: int,
    selection: str = "greedy",
) -> Engine:
    return Engine(grid, hyper, EngineConfig(variant=variant, selection=selection, seed=seed))


def run_experiment(
    setting: str,
    stream_config: StreamConfig,
    grid: FloorGrid,
    hyper: HyperParams,
    variants: tuple[str, ...] = ("M1", "M2", "M3", "M4"),
    include_uncensored: bool = True,
    train_fraction: float = 3.0 / 7.0,
    collect_latency: bool = False,
) -> dict:
    """Train/test protocol for one seed.

    S1 warm-starts the revenue model by batch ALS on the (uncensored)
    training split; S2 and S3 start the test cold. Baselines and the
    uncensored-feed reference run on the same split. Deterministic for a
    fixed stream seed.
    """
    if setting not in SETTINGS:
        raise ConfigError(f"setting must be one of {SETTINGS}")
    stream = generate_stream(stream_config)
    train, test = stream.split(train_fraction)
    report: dict = {
        "setting": setting,
        "seed": stream_config.seed,
        "n_train": len(train),
        "n_test": len(test),
        "grid_k": grid.k,
        "methods": {},
    }
    for b in ("NO_RES", "ORACLE"):
        report["methods"][b] = {"average_revenue": run_baseline(b, test)}
    report["methods"]["PL_RES"] = {
        "average_revenue": run_baseline("PL_RES", test, grid=grid, train=train)
    }
    report["methods"]["PL_RES_ONLINE"] = {
        "average_revenue": run_baseline(
            "PL_RES_ONLINE", test, grid=grid, train=train
        )
    }

    def fresh_engine(variant: str) -> Engine:
        selection = "linucb" if variant == "M4" else "greedy"
        eng = _engine_for(grid, hyper, variant, stream_config.seed, selection)
        if setting == "S1":
            events = [
                (u, p, ts, simulate_exact(grid, b1, b2))
                for ts, u, p, b1, b2 in train.iter_events()
            ]
            eng.revenue = batch_fit(
                events, grid, hyper, iterations=3, seed=stream_config.seed
            )
        return eng

    for variant in variants:
        eng = fresh_engine(variant)
        m = run_closed_loop(eng, test, collect_latency=collect_latency)
        report["methods"][variant] = m
    if include_uncensored:
        eng = fresh_engine("M2")  # variant irrelevant for an uncensored feed
        m = run_closed_loop(eng, test, uncensored_feed=True)
        report["methods"]["UNCENSORED"] = m
    return report


def simulate_exact(grid: FloorGrid, b1: int, b2: int) -> np.ndarray:
    f = grid.as_float()
    return np.where(f <= b1, np.maximum(f, float(b2)), 0.0)


def tune_hyperparams(
    grid_spec: dict[str, list],
    setting: str,
    stream_config: StreamConfig,
    grid: FloorGrid,
    base_hyper: HyperParams,
    variant: str = "M1",
    train_fraction: float = 3.0 / 7.0,
) -> tuple[HyperParams, list[dict]]:
    """Exhaustive grid search maximizing training-split average revenue.

    ``grid_spec`` maps HyperParams field names to candidate values (decay
    rates may be given via the ``gamma_*`` fields directly). Returns the
    best bundle and the full surface, one record per cell.
    """
    if not grid_spec:
        raise ConfigError("empty tuning grid")
    if setting not in SETTINGS:
        raise ConfigError(f"setting must be one of {SETTINGS}")
    stream = generate_stream(stream_config)
    train, _ = stream.split(train_fraction)
    names = sorted(grid_spec)
    surface = []
    best = None
    for combo in itertools.product(*(grid_spec[n] for n in names)):
        hyper = base_hyper.with_(**dict(zip(names, combo)))
        eng = _engine_for(grid, hyper, variant, stream_config.seed)
        m = run_closed_loop(eng, train, uncensored_feed=(setting in ("S1", "S3")))
        cell = dict(zip(names, combo))
        cell["average_revenue"] = m["average_revenue"]
        surface.append(cell)
        if best is None or cell["average_revenue"] > best[0]:
            best = (cell["average_revenue"], hyper)
    return best[1], surface
