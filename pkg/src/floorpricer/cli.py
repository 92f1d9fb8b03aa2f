"""Command-line interface.

Subcommands: ``simulate`` (synthetic closed-loop experiment), ``replay``
(learn from a recorded JSONL auction log), ``bench`` (hot-path latency),
``tune`` (hyper-parameter grid search), ``checkpoint inspect``.

A JSON config file provides defaults for the grid, the model
hyper-parameters, the engine, and the stream generator; explicit flags
override it. The default config path comes from ``$FLOORPRICER_CONFIG``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_bench
from .checkpoint import inspect_checkpoint, load_checkpoint, save_checkpoint
from .engine import Engine, EngineConfig
from .grid import FloorGrid
from .logio import read_events
from .params import ConfigError, HyperParams, decay_rate_to_gamma
from .report import plot_latency_histogram, plot_tuning_surface, render_report
from .simulation import (
    SETTINGS,
    StreamConfig,
    default_grid_for,
    run_experiment,
    tune_hyperparams,
)

CONFIG_ENV_VAR = "FLOORPRICER_CONFIG"

logger = logging.getLogger(__name__)


def load_config(path: str | None) -> dict:
    """Config dict from an explicit path, ``$FLOORPRICER_CONFIG``, or {}."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    with open(path) as fp:
        cfg = json.load(fp)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must contain a JSON object")
    return cfg


def grid_from_config(cfg: dict, stream: StreamConfig | None = None) -> FloorGrid:
    g = cfg.get("grid")
    if g is None:
        if stream is None:
            raise ConfigError("no grid in config and no stream to derive one from")
        return default_grid_for(stream)
    if "levels" in g:
        return FloorGrid(tuple(g["levels"]))
    kind = g.get("kind", "geometric")
    ctor = {"geometric": FloorGrid.geometric, "linear": FloorGrid.linear}.get(kind)
    if ctor is None:
        raise ConfigError(f"unknown grid kind {kind!r}")
    return ctor(g["min"], g["max"], g.get("k", 100))


def hyper_from_config(cfg: dict) -> HyperParams:
    h = dict(cfg.get("hyper", {}))
    for rate_key, gamma_key in (
        ("decay_rate_revenue", "gamma_revenue"),
        ("decay_rate_bid", "gamma_bid"),
    ):
        if rate_key in h:
            h[gamma_key] = decay_rate_to_gamma(h.pop(rate_key))
    return HyperParams.default(**h)


def stream_from_config(cfg: dict, args=None) -> StreamConfig:
    s = dict(cfg.get("stream", {}))
    if args is not None:
        for field, attr in (
            ("n_auctions", "auctions"),
            ("n_users", "users"),
            ("n_placements", "placements"),
            ("seed", "seed"),
        ):
            v = getattr(args, attr, None)
            if v is not None:
                s[field] = v
    return StreamConfig(**s)


def engine_config_from(cfg: dict, args=None) -> EngineConfig:
    e = dict(cfg.get("engine", {}))
    if args is not None:
        for field in ("variant", "seed"):
            v = getattr(args, field, None)
            if v is not None:
                e[field] = v
    return EngineConfig(**e)


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    stream_cfg = stream_from_config(cfg, args)
    grid = grid_from_config(cfg, stream_cfg)
    hyper = hyper_from_config(cfg)
    variants = tuple(args.variants.split(",")) if args.variants else ("M1", "M2", "M3", "M4")
    report = run_experiment(
        args.setting, stream_cfg, grid, hyper,
        variants=variants,
        collect_latency=args.latency,
    )
    written = render_report(args.out, report)
    for p in written:
        print(p)
    return 0


def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    if args.checkpoint_in:
        engine = load_checkpoint(args.checkpoint_in)
    else:
        grid = grid_from_config(cfg)
        hyper = hyper_from_config(cfg)
        engine = Engine(grid, hyper, engine_config_from(cfg, args))
    with open(args.log) as fp:
        for event in read_events(fp, strict=not args.lenient):
            engine.process_outcome(event)
    if args.checkpoint_out:
        save_checkpoint(args.checkpoint_out, engine)
    json.dump(engine.metrics.as_dict(), sys.stdout, indent=2)
    print()
    return 0


def cmd_bench(args) -> int:
    result = run_bench(
        scenario=args.scenario,
        n_events=args.events,
        k=args.grid_k,
        latent_dim=args.latent_dim,
        variant=args.variant or "M1",
        seed=args.seed or 0,
    )
    json.dump(result.as_dict(), sys.stdout, indent=2)
    print()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        plot_latency_histogram(out / "latency_histogram.png", result.latencies_ms)
        print(out / "latency_histogram.png")
    return 0


def cmd_tune(args) -> int:
    cfg = load_config(args.config)
    stream_cfg = stream_from_config(cfg, args)
    grid = grid_from_config(cfg, stream_cfg)
    base = hyper_from_config(cfg)
    spec = cfg.get("tune", {}).get("grid")
    if spec is None:
        # default sweep: forgetting rate x prior precision, log-spaced
        rates = [10.0 ** e for e in range(-6, 0)]
        spec = {
            "gamma_revenue": [decay_rate_to_gamma(r) for r in rates],
            "bias_precision": [10.0 ** e for e in range(0, 6)],
        }
    best, surface = tune_hyperparams(
        spec, args.setting, stream_cfg, grid, base, variant=args.variant or "M1"
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "tuning_surface.json", "w") as fp:
        json.dump(surface, fp, indent=2)
        fp.write("\n")
    names = sorted(spec)
    if len(names) >= 2:
        plot_tuning_surface(out / "tuning_surface.png", surface, names[0], names[1])
    best_cell = max(surface, key=lambda c: c["average_revenue"])
    json.dump(best_cell, sys.stdout, indent=2)
    print()
    print(out / "tuning_surface.json")
    return 0


def cmd_checkpoint_inspect(args) -> int:
    json.dump(inspect_checkpoint(args.path), sys.stdout, indent=2)
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floorpricer",
        description="Online reserve-price optimization for second-price auctions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument(
            "--config",
            help=f"JSON config path (default: ${CONFIG_ENV_VAR})",
        )

    p = sub.add_parser("simulate", help="closed-loop experiment on a synthetic stream")
    add_config(p)
    p.add_argument("--setting", choices=SETTINGS, default="S2")
    p.add_argument("--variants", help="comma-separated subset of M1,M2,M3,M4")
    p.add_argument("--auctions", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--placements", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--latency", action="store_true", help="collect per-auction latency")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="learn from a recorded JSONL auction log")
    add_config(p)
    p.add_argument("log", help="JSONL auction log path")
    p.add_argument("--variant", choices=("M1", "M2", "M3", "M4"))
    p.add_argument("--seed", type=int)
    p.add_argument("--lenient", action="store_true", help="skip malformed lines")
    p.add_argument("--checkpoint-in", help="resume from this checkpoint")
    p.add_argument("--checkpoint-out", help="write final state here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="hot-path latency percentiles")
    p.add_argument(
        "--scenario",
        choices=("full_censored", "half_censored", "uncensored", "mixed"),
        default="full_censored",
    )
    p.add_argument("--events", type=int, default=5_000)
    p.add_argument("--grid-k", type=int, default=100)
    p.add_argument("--latent-dim", type=int, default=2)
    p.add_argument("--variant", choices=("M1", "M2", "M3", "M4"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for the latency histogram figure")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("tune", help="hyper-parameter grid search")
    add_config(p)
    p.add_argument("--setting", choices=SETTINGS, default="S2")
    p.add_argument("--variant", choices=("M1", "M2", "M3", "M4"))
    p.add_argument("--auctions", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--placements", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="surface output directory")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("checkpoint", help="checkpoint utilities")
    csub = p.add_subparsers(dest="checkpoint_command", required=True)
    pi = csub.add_parser("inspect", help="print a checkpoint's header summary")
    pi.add_argument("path")
    pi.set_defaults(func=cmd_checkpoint_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
