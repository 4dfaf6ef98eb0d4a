"""Hexagonal cell layout and the link-gain matrix.

Cells sit on a parallelogram patch of a hex lattice addressed by axial
coordinates ``(a, b)``. Cell ``b * cols + a`` has its center at
``(a + b/2, b * sqrt(3)/2)`` so adjacent centers are exactly one unit apart.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class GridGeometry:
    rows: int
    cols: int
    axial: np.ndarray = field(repr=False)
    centers: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell_id(self, a: int, b: int) -> int:
        if not (0 <= a < self.cols and 0 <= b < self.rows):
            raise ValueError(f"axial coordinate ({a}, {b}) outside the grid")
        return b * self.cols + a

    def check_cell(self, i) -> int:
        i = int(i)
        if not 0 <= i < self.n_cells:
            raise ValueError(f"invalid cell id {i} (grid has {self.n_cells} cells)")
        return i

    def distance_matrix(self) -> np.ndarray:
        """All-pairs center distances, shape (C, C)."""
        da = self.axial[:, None, 0] - self.axial[None, :, 0]
        db = self.axial[:, None, 1] - self.axial[None, :, 1]
        # integer squared norm keeps lattice distances like 3 exact
        return np.sqrt((da * da + da * db + db * db).astype(float))

    def neighbors(self, i: int) -> list[int]:
        i = self.check_cell(i)
        a, b = self.axial[i]
        out = []
        for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)):
            na, nb = a + da, b + db
            if 0 <= na < self.cols and 0 <= nb < self.rows:
                out.append(int(nb * self.cols + na))
        return sorted(out)


@dataclass(frozen=True)
class GainModel:
    """Inverse power-law propagation between cell centers.

    The default calibration puts a single shared channel at roughly 8-9
    simultaneous calls on the 7x7 grid with a protection ratio of 2.
    """

    path_loss_exponent: float = 2.0
    min_distance: float = 1.0
    self_gain: float = 1.75

    def __post_init__(self):
        if not self.path_loss_exponent > 0:
            raise ValueError("path_loss_exponent must be > 0")
        if not 0 < self.min_distance <= 1:
            raise ValueError("min_distance must lie in (0, 1]")
        if not self.self_gain > 0:
            raise ValueError("self_gain must be > 0")


def build_grid(rows: int, cols: int) -> GridGeometry:
    if int(rows) < 1 or int(cols) < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    rows, cols = int(rows), int(cols)
    b, a = np.divmod(np.arange(rows * cols), cols)
    axial = np.stack([a, b], axis=1).astype(np.int64)
    centers = np.stack([a + b / 2.0, b * SQRT3_2], axis=1)
    axial.setflags(write=False)
    centers.setflags(write=False)
    return GridGeometry(rows, cols, axial, centers)


def distance(geom: GridGeometry, i: int, j: int) -> float:
    i, j = geom.check_cell(i), geom.check_cell(j)
    da = int(geom.axial[i, 0] - geom.axial[j, 0])
    db = int(geom.axial[i, 1] - geom.axial[j, 1])
    return math.sqrt(da * da + da * db + db * db)


def build_gain_matrix(geom: GridGeometry, model: GainModel) -> np.ndarray:
    """Return the C x C gain matrix.

    Off-diagonal entries are ``max(d_ij, min_distance) ** -alpha``; the
    diagonal holds ``model.self_gain``. The array is read-only.
    """
    d = geom.distance_matrix()
    g = np.maximum(d, model.min_distance) ** (-model.path_loss_exponent)
    if g.shape[0] > 1 and model.self_gain <= g[~np.eye(g.shape[0], dtype=bool)].max():
        raise ValueError("self_gain must exceed every cross-cell gain")
    np.fill_diagonal(g, model.self_gain)
    g.setflags(write=False)
    return g


def write_gain_csv(gains: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell"] + list(range(gains.shape[1])))
        for i, row in enumerate(gains):
            w.writerow([i] + [repr(float(x)) for x in row])
