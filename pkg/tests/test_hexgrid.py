import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hcapc.hexgrid import (GainModel, build_gain_matrix, build_grid, distance,
                           write_gain_csv)


def euclid(geom, i, j):
    return float(np.hypot(*(geom.centers[i] - geom.centers[j])))


def test_benchmark_grid_has_49_cells():
    g = build_grid(7, 7)
    assert g.n_cells == 49
    assert sorted(g.cell_id(a, b) for a in range(7) for b in range(7)) == list(range(49))


def test_single_cell_has_no_neighbors():
    g = build_grid(1, 1)
    assert g.n_cells == 1
    assert g.neighbors(0) == []
    assert build_gain_matrix(g, GainModel(self_gain=0.5)).shape == (1, 1)


@pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0), (0, 0), (-1, 2)])
def test_rejects_empty_dimensions(rows, cols):
    with pytest.raises(ValueError):
        build_grid(rows, cols)


def test_axial_offset_2_1_is_sqrt7():
    g = build_grid(7, 7)
    i, j = g.cell_id(0, 0), g.cell_id(2, 1)
    assert distance(g, i, j) == pytest.approx(math.sqrt(7), abs=1e-12)
    assert euclid(g, i, j) == pytest.approx(2.6457513110645906, abs=1e-12)


def test_distance_matrix_matches_center_formula():
    g = build_grid(5, 6)
    diff = g.centers[:, None, :] - g.centers[None, :, :]
    ref = np.sqrt((diff ** 2).sum(axis=-1))
    np.testing.assert_allclose(g.distance_matrix(), ref, atol=1e-12)


def test_neighbors_are_unit_distance():
    g = build_grid(7, 7)
    d = g.distance_matrix()
    for i in range(g.n_cells):
        ring = np.flatnonzero(np.isclose(d[i], 1.0))
        assert g.neighbors(i) == ring.tolist()
    # interior cell has six neighbours, the acute corner two
    assert len(g.neighbors(g.cell_id(3, 3))) == 6
    assert len(g.neighbors(0)) == 2


def test_parallelogram_long_diagonal():
    g = build_grid(7, 7)
    # axial (6, 6): 36 + 36 + 36
    assert distance(g, 0, 48) == pytest.approx(math.sqrt(108))


def test_gain_matrix_invariants():
    geom = build_grid(7, 7)
    model = GainModel(path_loss_exponent=3.0, min_distance=0.5, self_gain=4.0)
    g = build_gain_matrix(geom, model)
    assert np.all(np.diag(g) == 4.0)
    assert np.all(g > 0)
    np.testing.assert_array_equal(g, g.T)
    off = ~np.eye(49, dtype=bool)
    assert np.all(g[off] < 4.0)
    d = geom.distance_matrix()
    np.testing.assert_allclose(g[off], d[off] ** -3.0)
    with pytest.raises(ValueError):
        g[0, 1] = 1.0


def test_gain_decreases_with_distance():
    geom = build_grid(7, 7)
    g = build_gain_matrix(geom, GainModel())
    d = geom.distance_matrix()
    off = ~np.eye(49, dtype=bool)
    order = np.argsort(d[off], kind="stable")
    assert np.all(np.diff(g[off][order]) <= 1e-15)


@pytest.mark.parametrize("kwargs", [
    dict(path_loss_exponent=0.0), dict(min_distance=0.0), dict(min_distance=1.5),
    dict(self_gain=0.0), dict(self_gain=-2.0)])
def test_gain_model_validation(kwargs):
    with pytest.raises(ValueError):
        GainModel(**kwargs)


def test_self_gain_must_dominate():
    with pytest.raises(ValueError):
        build_gain_matrix(build_grid(2, 2), GainModel(self_gain=1.0))


def test_gain_csv(tmp_path):
    g = build_gain_matrix(build_grid(2, 3), GainModel())
    path = tmp_path / "g.csv"
    write_gain_csv(g, path)
    rows = path.read_text().splitlines()
    assert len(rows) == 7
    back = np.array([[float(x) for x in r.split(",")[1:]] for r in rows[1:]])
    np.testing.assert_array_equal(back, g)


@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_hex_metric_properties(rows, cols, data):
    g = build_grid(rows, cols)
    n = g.n_cells
    i, j, k = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    dij = distance(g, i, j)
    assert dij == pytest.approx(euclid(g, i, j), abs=1e-9)
    assert dij == distance(g, j, i)
    assert (dij == 0) == (i == j)
    assert dij <= distance(g, i, k) + distance(g, k, j) + 1e-12
    # distinct lattice points are at least one unit apart
    assert i == j or dij >= 1.0 - 1e-12
