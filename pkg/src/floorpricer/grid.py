"""Discrete reserve-price grid shared by the revenue and bid models.

Monetary amounts are integer micro-units throughout, which keeps replay
and checkpointing bit-exact. Floors and bid bins share the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Sentinel returned by :func:`snap_to_grid` for values below the lowest level.
BELOW_GRID = -1


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class FloorGrid:
    """Ordered reserve-price levels ``f^(1) <= ... <= f^(K)`` in micro-units."""

    levels: tuple[int, ...]
    _levels_arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.levels) < 2:
            raise GridError("grid needs at least 2 levels")
        lv = np.asarray(self.levels, dtype=np.int64)
        if (lv < 0).any():
            raise GridError("grid levels must be nonnegative")
        if not (np.diff(lv) > 0).all():
            raise GridError("grid levels must be strictly increasing")
        object.__setattr__(self, "levels", tuple(int(v) for v in lv))
        object.__setattr__(self, "_levels_arr", lv)

    @property
    def k(self) -> int:
        return len(self.levels)

    def as_array(self) -> np.ndarray:
        """Levels as an int64 array (do not mutate)."""
        return self._levels_arr

    def as_float(self) -> np.ndarray:
        return self._levels_arr.astype(np.float64)

    @classmethod
    def geometric(cls, min_value: int, max_value: int, k: int = 100) -> "FloorGrid":
        """Geometrically spaced levels; the default because bids are heavy-tailed."""
        if min_value <= 0 or max_value <= min_value:
            raise GridError("need 0 < min_value < max_value")
        raw = np.geomspace(min_value, max_value, k)
        lv = np.unique(np.round(raw).astype(np.int64))
        if len(lv) < k:
            raise GridError(
                f"range [{min_value}, {max_value}] too narrow for {k} distinct levels"
            )
        return cls(tuple(int(v) for v in lv))

    @classmethod
    def linear(cls, min_value: int, max_value: int, k: int = 100) -> "FloorGrid":
        if min_value < 0 or max_value <= min_value:
            raise GridError("need 0 <= min_value < max_value")
        lv = np.unique(np.round(np.linspace(min_value, max_value, k)).astype(np.int64))
        if len(lv) < k:
            raise GridError(
                f"range [{min_value}, {max_value}] too narrow for {k} distinct levels"
            )
        return cls(tuple(int(v) for v in lv))


def snap_to_grid(value: int, grid: FloorGrid) -> int:
    """Index of the largest level <= ``value`` (0-based), or ``BELOW_GRID``.

    Values above the top level snap to the top bin.
    """
    if value < 0:
        raise GridError("monetary value must be nonnegative")
    idx = int(np.searchsorted(grid.as_array(), value, side="right")) - 1
    return idx if idx >= 0 else BELOW_GRID
