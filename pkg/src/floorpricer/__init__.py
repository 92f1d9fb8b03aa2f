"""Online reserve-price optimization for second-price auctions.

Learns a per-(user, placement) expected-revenue profile over a discrete
floor grid from censored auction outcomes, and plays the profile's argmax.
"""

__version__ = "0.1.0"

from .bids import BidCdf, BidDistributionModel, BidModelStore, Censored, Observed
from .censorship import (
    Provenance,
    SimulatedRevenue,
    build_training_target,
    expected_revenue_full_censored,
    expected_revenue_half_censored,
    simulate_revenue_vector,
)
from .checkpoint import (
    CheckpointError,
    deserialize_engine,
    inspect_checkpoint,
    load_checkpoint,
    save_checkpoint,
    serialize_engine,
)
from .engine import Decision, Engine, EngineConfig, EngineMetrics, run_closed_loop
from .events import (
    AuctionEvent,
    EventValidationError,
    FullCensored,
    HalfCensored,
    Lost,
    Uncensored,
    Won,
    derive_censorship,
    event_from_ground_truth,
    realized_revenue,
)
from .grid import BELOW_GRID, FloorGrid, GridError, snap_to_grid
from .logio import LogFormatError, read_events, write_events
from .params import ConfigError, HyperParams, decay_rate_to_gamma
from .revenue import EntityState, ModelStore, OutOfOrderError, batch_fit
from .simulation import (
    GroundTruthStream,
    StreamConfig,
    default_grid_for,
    generate_stream,
    run_baseline,
    run_experiment,
    tune_hyperparams,
)

__all__ = [
    "AuctionEvent",
    "BELOW_GRID",
    "BidCdf",
    "BidDistributionModel",
    "BidModelStore",
    "Censored",
    "CheckpointError",
    "ConfigError",
    "Decision",
    "Engine",
    "EngineConfig",
    "EngineMetrics",
    "EntityState",
    "EventValidationError",
    "FloorGrid",
    "FullCensored",
    "GridError",
    "GroundTruthStream",
    "HalfCensored",
    "HyperParams",
    "LogFormatError",
    "Lost",
    "ModelStore",
    "Observed",
    "OutOfOrderError",
    "Provenance",
    "SimulatedRevenue",
    "StreamConfig",
    "Uncensored",
    "Won",
    "batch_fit",
    "build_training_target",
    "decay_rate_to_gamma",
    "default_grid_for",
    "derive_censorship",
    "deserialize_engine",
    "event_from_ground_truth",
    "expected_revenue_full_censored",
    "expected_revenue_half_censored",
    "generate_stream",
    "inspect_checkpoint",
    "load_checkpoint",
    "read_events",
    "realized_revenue",
    "run_baseline",
    "run_closed_loop",
    "run_experiment",
    "save_checkpoint",
    "serialize_engine",
    "simulate_revenue_vector",
    "snap_to_grid",
    "tune_hyperparams",
    "write_events",
]
