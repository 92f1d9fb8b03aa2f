"""Deterministic binary checkpoints of a running engine.

Layout: an 8-byte magic+version, a length-prefixed JSON header (sorted
keys), then the raw little-endian array payload at the offsets the header
records. Serializing the same state twice yields the same bytes, so
save -> load -> save round-trips bit-identically; that is what the replay
split/concatenate guarantee rests on.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from .bids import BidModelStore
from .engine import Engine, EngineConfig, EngineMetrics
from .grid import FloorGrid
from .params import HyperParams
from .revenue import EntityState, ModelStore

MAGIC = b"FPC1"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _hyper_to_dict(h: HyperParams) -> dict:
    d = {}
    for name in (
        "latent_dim", "gamma_revenue", "gamma_bid", "beta0", "bias_precision",
        "als_iterations", "ucb_alpha", "init_noise_stddev", "lambda_max",
        "feature_dim",
    ):
        d[name] = getattr(h, name)
    for name in ("x0", "y0", "m0", "n0", "user_precision", "placement_precision",
                 "bid_user_precision", "bid_placement_precision"):
        d[name] = getattr(h, name).tolist()
    if h.feature_dim:
        d["z0"] = h.z0.tolist()
        d["feature_precision"] = h.feature_precision.tolist()
    return d


def _hyper_from_dict(d: dict) -> HyperParams:
    kw = dict(d)
    for name in ("x0", "y0", "m0", "n0", "user_precision", "placement_precision",
                 "bid_user_precision", "bid_placement_precision", "z0",
                 "feature_precision"):
        if name in kw:
            kw[name] = np.asarray(kw[name], dtype=np.float64)
    return HyperParams(**kw)


class _ArrayWriter:
    def __init__(self):
        self.chunks: list[bytes] = []
        self.index: list[dict] = []
        self.offset = 0

    def add(self, name: str, arr: np.ndarray) -> None:
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        self.index.append({
            "name": name,
            "dtype": arr.dtype.str.replace(">", "<").replace("=", "<"),
            "shape": list(arr.shape),
            "offset": self.offset,
            "nbytes": len(raw),
        })
        self.chunks.append(raw)
        self.offset += len(raw)


class _ArrayReader:
    def __init__(self, payload: bytes, index: list[dict]):
        self.payload = payload
        self.by_name = {e["name"]: e for e in index}

    def get(self, name: str) -> np.ndarray:
        e = self.by_name[name]
        raw = self.payload[e["offset"]: e["offset"] + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise CheckpointError(f"truncated payload for array {name!r}")
        arr = np.frombuffer(raw, dtype=np.dtype(e["dtype"]))
        return arr.reshape(e["shape"]).copy()


def _pack_entities(w: _ArrayWriter, prefix: str, table) -> list[str]:
    ids = list(table.keys())  # preserves recency order
    if ids:
        w.add(f"{prefix}.factors", np.stack([table[i].factors for i in ids]))
        w.add(f"{prefix}.cov", np.stack([table[i].cov for i in ids]))
        w.add(f"{prefix}.obs", np.stack([table[i].obs for i in ids]))
        w.add(f"{prefix}.last", np.stack([table[i].last_update for i in ids]))
    return ids


def _unpack_entities(r: _ArrayReader, prefix: str, ids: list[str], table) -> None:
    if not ids:
        return
    factors = r.get(f"{prefix}.factors")
    cov = r.get(f"{prefix}.cov")
    obs = r.get(f"{prefix}.obs")
    last = r.get(f"{prefix}.last")
    for i, entity_id in enumerate(ids):
        table[entity_id] = EntityState(
            factors=factors[i], cov=cov[i], obs=obs[i], last_update=last[i]
        )


def _rng_state(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": str(st["state"]["state"]),
        "inc": str(st["state"]["inc"]),
        "has_uint32": st["has_uint32"],
        "uinteger": st["uinteger"],
    }


def _restore_rng(d: dict) -> np.random.Generator:
    if d["bit_generator"] != "PCG64":
        raise CheckpointError(f"unsupported bit generator {d['bit_generator']!r}")
    rng = np.random.Generator(np.random.PCG64(0))
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(d["state"]), "inc": int(d["inc"])},
        "has_uint32": d["has_uint32"],
        "uinteger": d["uinteger"],
    }
    return rng


def _pack_revenue(w: _ArrayWriter, prefix: str, store: ModelStore) -> dict:
    meta = {
        "users": _pack_entities(w, f"{prefix}.users", store.users),
        "placements": _pack_entities(w, f"{prefix}.placements", store.placements),
        "rng": _rng_state(store.rng),
        "n_updates": store.n_updates,
        "out_of_order": store.out_of_order,
        "max_users": store.max_users,
        "max_placements": store.max_placements,
    }
    w.add(f"{prefix}.beta", store.beta)
    w.add(f"{prefix}.beta_cov", store.beta_cov)
    w.add(f"{prefix}.beta_obs", store.beta_obs)
    w.add(f"{prefix}.beta_last", store.beta_last)
    w.add(f"{prefix}.z", store.z)
    w.add(f"{prefix}.z_cov", store.z_cov)
    w.add(f"{prefix}.z_obs", store.z_obs)
    w.add(f"{prefix}.z_last", store.z_last)
    return meta


def _unpack_revenue(
    r: _ArrayReader, prefix: str, meta: dict, grid: FloorGrid, hyper: HyperParams
) -> ModelStore:
    store = ModelStore(
        grid, hyper,
        max_users=meta["max_users"],
        max_placements=meta["max_placements"],
        out_of_order=meta["out_of_order"],
    )
    _unpack_entities(r, f"{prefix}.users", meta["users"], store.users)
    _unpack_entities(r, f"{prefix}.placements", meta["placements"], store.placements)
    store.beta = r.get(f"{prefix}.beta")
    store.beta_cov = r.get(f"{prefix}.beta_cov")
    store.beta_obs = r.get(f"{prefix}.beta_obs")
    store.beta_last = r.get(f"{prefix}.beta_last")
    store.z = r.get(f"{prefix}.z")
    store.z_cov = r.get(f"{prefix}.z_cov")
    store.z_obs = r.get(f"{prefix}.z_obs")
    store.z_last = r.get(f"{prefix}.z_last")
    store.rng = _restore_rng(meta["rng"])
    store.n_updates = meta["n_updates"]
    return store


def _pack_bid_model(w: _ArrayWriter, prefix: str, model) -> dict:
    meta = {
        "users": _pack_entities(w, f"{prefix}.users", model.users),
        "placements": _pack_entities(w, f"{prefix}.placements", model.placements),
        "rng": _rng_state(model.rng),
        "out_of_order": model.out_of_order,
        "max_users": model.max_users,
        "max_placements": model.max_placements,
    }
    w.add(f"{prefix}.level_counts", model.level_counts)
    return meta


def _unpack_bid_model(r: _ArrayReader, prefix: str, meta: dict, model) -> None:
    _unpack_entities(r, f"{prefix}.users", meta["users"], model.users)
    _unpack_entities(r, f"{prefix}.placements", meta["placements"], model.placements)
    model.level_counts = r.get(f"{prefix}.level_counts")
    model.rng = _restore_rng(meta["rng"])
    model.out_of_order = meta["out_of_order"]
    model.max_users = meta["max_users"]
    model.max_placements = meta["max_placements"]


def serialize_engine(engine: Engine) -> bytes:
    w = _ArrayWriter()
    header: dict = {
        "version": VERSION,
        "grid": list(engine.grid.levels),
        "hyper": _hyper_to_dict(engine.hyper),
        "config": {
            "variant": engine.config.variant,
            "selection": engine.config.selection,
            "seed": engine.config.seed,
            "out_of_order": engine.config.out_of_order,
            "max_users": engine.config.max_users,
            "max_placements": engine.config.max_placements,
        },
        "metrics": engine.metrics.as_dict(),
        "revenue": _pack_revenue(w, "rev", engine.revenue),
    }
    if engine.bids is not None:
        header["bids"] = {
            "first": _pack_bid_model(w, "bid1", engine.bids.first),
            "second": _pack_bid_model(w, "bid2", engine.bids.second),
        }
    header["arrays"] = w.index
    hjson = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return b"".join(
        [MAGIC, struct.pack("<I", VERSION), struct.pack("<Q", len(hjson)), hjson]
        + w.chunks
    )


def _parse(data: bytes) -> tuple[dict, _ArrayReader]:
    if len(data) < 16 or data[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (hlen,) = struct.unpack("<Q", data[8:16])
    if len(data) < 16 + hlen:
        raise CheckpointError("truncated header")
    try:
        header = json.loads(data[16: 16 + hlen])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt header: {exc}") from None
    payload = data[16 + hlen:]
    expected = sum(e["nbytes"] for e in header["arrays"])
    if len(payload) < expected:
        raise CheckpointError(
            f"truncated payload: need {expected} bytes, have {len(payload)}"
        )
    return header, _ArrayReader(payload, header["arrays"])


def deserialize_engine(data: bytes, grid: FloorGrid | None = None) -> Engine:
    """Rebuild an engine; ``grid`` (when given) must match the stored one."""
    header, r = _parse(data)
    stored_grid = FloorGrid(tuple(header["grid"]))
    if grid is not None and grid.levels != stored_grid.levels:
        raise CheckpointError(
            f"grid mismatch: checkpoint has K={stored_grid.k}, caller has K={grid.k}"
        )
    hyper = _hyper_from_dict(header["hyper"])
    config = EngineConfig(**header["config"])
    engine = Engine(stored_grid, hyper, config)
    engine.revenue = _unpack_revenue(r, "rev", header["revenue"], stored_grid, hyper)
    if "bids" in header:
        if engine.bids is None:
            engine.bids = BidModelStore(stored_grid, hyper, seed=config.seed)
        _unpack_bid_model(r, "bid1", header["bids"]["first"], engine.bids.first)
        _unpack_bid_model(r, "bid2", header["bids"]["second"], engine.bids.second)
    m = header["metrics"]
    engine.metrics = EngineMetrics(
        n_auctions=m["n_auctions"],
        total_revenue=m["total_revenue"],
        uncensored=m["uncensored"],
        half_censored=m["half_censored"],
        full_censored=m["full_censored"],
        skipped_updates=m["skipped_updates"],
    )
    return engine


def save_checkpoint(path, engine: Engine) -> None:
    data = serialize_engine(engine)
    with open(path, "wb") as fp:
        fp.write(data)


def load_checkpoint(path, grid: FloorGrid | None = None) -> Engine:
    with open(path, "rb") as fp:
        return deserialize_engine(fp.read(), grid=grid)


def inspect_checkpoint(path) -> dict:
    """Header summary without materializing any model state."""
    with open(path, "rb") as fp:
        data = fp.read()
    header, _ = _parse(data)
    return {
        "version": header["version"],
        "grid_k": len(header["grid"]),
        "variant": header["config"]["variant"],
        "n_users": len(header["revenue"]["users"]),
        "n_placements": len(header["revenue"]["placements"]),
        "n_updates": header["revenue"]["n_updates"],
        "metrics": header["metrics"],
        "has_bid_models": "bids" in header,
        "payload_bytes": sum(e["nbytes"] for e in header["arrays"]),
    }
