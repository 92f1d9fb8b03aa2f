import numpy as np
import pytest
from hypothesis import given, strategies as st

from floorpricer.grid import BELOW_GRID, FloorGrid, GridError, snap_to_grid


def test_geometric_levels_strictly_increasing():
    g = FloorGrid.geometric(1_000, 1_000_000, 50)
    assert g.k == 50
    assert (np.diff(g.as_array()) > 0).all()
    assert g.levels[0] == 1_000
    assert g.levels[-1] == 1_000_000


def test_linear_levels():
    g = FloorGrid.linear(0, 90, 10)
    assert g.levels == tuple(range(0, 100, 10))


def test_construction_errors():
    with pytest.raises(GridError):
        FloorGrid((5,))
    with pytest.raises(GridError):
        FloorGrid((3, 2, 1))
    with pytest.raises(GridError):
        FloorGrid((1, 1, 2))
    with pytest.raises(GridError):
        FloorGrid((-1, 2))
    with pytest.raises(GridError):
        FloorGrid.geometric(0, 10, 5)
    with pytest.raises(GridError):
        # only 11 distinct integers available
        FloorGrid.geometric(10, 20, 50)


def _snap_reference(value, levels):
    """Linear-scan oracle for snap_to_grid."""
    best = BELOW_GRID
    for i, lv in enumerate(levels):
        if lv <= value:
            best = i
    return best


def test_snap_matches_linear_scan_oracle(rng):
    g = FloorGrid.geometric(1_000, 1_000_000, 30)
    for value in rng.integers(0, 2_000_000, 500):
        assert snap_to_grid(int(value), g) == _snap_reference(value, g.levels)


def test_snap_edges():
    g = FloorGrid((10, 20, 40))
    assert snap_to_grid(0, g) == BELOW_GRID
    assert snap_to_grid(9, g) == BELOW_GRID
    assert snap_to_grid(10, g) == 0
    assert snap_to_grid(39, g) == 1
    assert snap_to_grid(40, g) == 2
    assert snap_to_grid(10**9, g) == 2
    with pytest.raises(GridError):
        snap_to_grid(-1, g)


@given(
    levels=st.lists(st.integers(0, 10**7), min_size=2, max_size=40, unique=True),
    value=st.integers(0, 2 * 10**7),
)
def test_snap_bracket_invariant(levels, value):
    g = FloorGrid(tuple(sorted(levels)))
    idx = snap_to_grid(value, g)
    if idx == BELOW_GRID:
        assert value < g.levels[0]
    else:
        assert g.levels[idx] <= value
        if idx + 1 < g.k:
            assert value < g.levels[idx + 1]
