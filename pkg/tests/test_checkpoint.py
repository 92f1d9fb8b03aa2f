import numpy as np
import pytest

from floorpricer.checkpoint import (
    MAGIC,
    CheckpointError,
    deserialize_engine,
    inspect_checkpoint,
    load_checkpoint,
    save_checkpoint,
    serialize_engine,
)
from floorpricer.engine import Engine, EngineConfig
from floorpricer.events import event_from_ground_truth
from floorpricer.grid import FloorGrid
from floorpricer.params import HyperParams

GRID = FloorGrid((10, 20, 40, 80, 160, 320, 640, 1280))


def _engine(variant="M1", seed=3):
    return Engine(GRID, HyperParams.default(), EngineConfig(variant=variant, seed=seed))


def _feed(engine, n, seed=0, t0=1_000_000):
    rng = np.random.Generator(np.random.PCG64(seed))
    t = t0
    for _ in range(n):
        t += int(rng.integers(1, 500))
        u, p = f"u{rng.integers(6)}", f"p{rng.integers(3)}"
        d = engine.choose_floor(u, p, t)
        b1 = int(rng.integers(0, 2_000))
        b2 = int(rng.integers(0, b1 + 1))
        engine.process_outcome(event_from_ground_truth(t, u, p, d.floor, b1, b2))
    return t


class TestRoundTrip:
    @pytest.mark.parametrize("variant", ["M1", "M3"])
    def test_save_load_save_is_bit_identical(self, variant):
        eng = _engine(variant)
        _feed(eng, 150)
        data = serialize_engine(eng)
        again = serialize_engine(deserialize_engine(data))
        assert data == again

    def test_restored_engine_continues_identically(self, tmp_path):
        eng = _engine()
        t = _feed(eng, 150)
        path = tmp_path / "state.ckpt"
        save_checkpoint(path, eng)
        restored = load_checkpoint(path)
        _feed(eng, 80, seed=9, t0=t)
        _feed(restored, 80, seed=9, t0=t)
        assert serialize_engine(eng) == serialize_engine(restored)
        assert eng.metrics.as_dict() == restored.metrics.as_dict()

    def test_split_equals_straight_run(self):
        """Processing a log in one go == processing half, checkpointing,
        restoring, and processing the rest."""
        straight = _engine()
        t_mid = _feed(straight, 100, seed=4)
        _feed(straight, 100, seed=5, t0=t_mid)

        first = _engine()
        t_mid2 = _feed(first, 100, seed=4)
        assert t_mid2 == t_mid
        resumed = deserialize_engine(serialize_engine(first))
        _feed(resumed, 100, seed=5, t0=t_mid)
        assert serialize_engine(straight) == serialize_engine(resumed)


class TestValidation:
    def test_bad_magic(self):
        with pytest.raises(CheckpointError):
            deserialize_engine(b"NOPE" + b"\x00" * 32)

    def test_truncated_header(self):
        data = serialize_engine(_engine())
        with pytest.raises(CheckpointError):
            deserialize_engine(data[:20])

    def test_truncated_payload(self):
        eng = _engine()
        _feed(eng, 20)
        data = serialize_engine(eng)
        with pytest.raises(CheckpointError):
            deserialize_engine(data[:-8])

    def test_unsupported_version(self):
        data = bytearray(serialize_engine(_engine()))
        data[4] = 99
        with pytest.raises(CheckpointError):
            deserialize_engine(bytes(data))

    def test_grid_mismatch(self):
        data = serialize_engine(_engine())
        other = FloorGrid((1, 2, 3))
        with pytest.raises(CheckpointError):
            deserialize_engine(data, grid=other)
        deserialize_engine(data, grid=GRID)  # matching grid is fine


class TestInspect:
    def test_summary_fields(self, tmp_path):
        eng = _engine()
        _feed(eng, 60)
        path = tmp_path / "x.ckpt"
        save_checkpoint(path, eng)
        info = inspect_checkpoint(path)
        assert info["grid_k"] == GRID.k
        assert info["variant"] == "M1"
        assert info["has_bid_models"] is True
        assert info["n_users"] == len(eng.revenue.users)
        assert info["metrics"]["n_auctions"] == 60
        assert info["payload_bytes"] > 0
