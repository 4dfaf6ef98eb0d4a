"""Downlink CIR evaluation and minimal-power feasibility on one channel.

For a set of co-channel cells ``S`` the smallest power vector meeting every
CIR target solves, with all constraints tight,

    g_ii * p_i - gamma0 * sum_{j in S, j != i} g_ij * p_j = gamma0 * eta_i

The system matrix is a Z-matrix; a positive solution exists exactly when it
is a nonsingular M-matrix, and that solution is componentwise below every
other feasible power vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.linalg.lapack import dgetrf, dgetrs

EPS_TOL = 1e-9
PIVOT_TOL = 1e-12

SINGULAR = "singular_system"
NONPOSITIVE = "nonpositive_power"
EXCEEDS_CAP = "exceeds_cap"


@dataclass(frozen=True)
class QosParams:
    gamma0: float
    eta: np.ndarray
    power_cap: float

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float).ravel()
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be > 0")
        if eta.size == 0 or not np.all(eta > 0):
            raise ValueError("every noise power eta_i must be > 0")
        if not self.power_cap > 0:
            raise ValueError("power_cap must be > 0")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def uniform(cls, gamma0: float, noise: float, power_cap: float, n_cells: int) -> "QosParams":
        return cls(gamma0, np.full(n_cells, float(noise)), power_cap)


@dataclass(frozen=True)
class PowerSolveResult:
    """Outcome of a minimal-power solve.

    ``reason`` is None when the solve is feasible; otherwise one of
    ``singular_system``, ``nonpositive_power`` or ``exceeds_cap`` and
    ``powers`` holds whatever the linear solve produced (or None).
    """

    cells: tuple
    powers: np.ndarray | None
    reason: str | None = None

    @property
    def feasible(self) -> bool:
        return self.reason is None

    @property
    def total(self) -> float:
        if not self.feasible:
            raise ValueError(f"infeasible solve has no total power ({self.reason})")
        return float(self.powers.sum())

    def as_dict(self) -> dict[int, float]:
        if not self.feasible:
            raise ValueError(f"infeasible solve has no power vector ({self.reason})")
        return {c: float(p) for c, p in zip(self.cells, self.powers)}


def cir(gains: np.ndarray, powers: Mapping[int, float], eta, i: int) -> float:
    """CIR at the mobile of cell ``i`` given the powers of all co-channel cells."""
    interference = sum(gains[i, j] * p for j, p in powers.items() if j != i)
    return gains[i, i] * powers[i] / (interference + eta[i])


def cir_vector(gains: np.ndarray, cells, powers, eta) -> np.ndarray:
    cells = np.asarray(cells, dtype=np.intp)
    p = np.asarray(powers, dtype=float)
    g = gains[np.ix_(cells, cells)]
    signal = np.diag(g) * p
    return signal / (g @ p - signal + np.asarray(eta)[cells])


def system_matrix(gains: np.ndarray, cells, gamma0: float) -> np.ndarray:
    idx = np.asarray(cells, dtype=np.intp)
    g = gains[idx[:, None], idx]
    a = -gamma0 * g
    d = np.arange(len(idx))
    a[d, d] = g[d, d]
    return a


def _classify(x: np.ndarray, cap: float) -> str | None:
    lo, hi = x.min(), x.max()
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return SINGULAR
    if lo <= 0:
        return NONPOSITIVE
    if hi > cap:
        return EXCEEDS_CAP
    return None


def _sorted_cells(active) -> tuple:
    if isinstance(active, np.ndarray):
        active = active.tolist()
    return tuple(sorted(set(int(c) for c in active)))


def solve_min_power(gains: np.ndarray, active: Iterable[int], qos: QosParams) -> PowerSolveResult:
    """Minimal total-power vector for ``active`` sharing one channel.

    LU with partial pivoting; a pivot below ``PIVOT_TOL`` times the largest
    absolute row sum marks the system singular.
    """
    cells = _sorted_cells(active)
    n = len(cells)
    if n == 0:
        return PowerSolveResult(cells, np.zeros(0))
    rhs = qos.gamma0 * qos.eta[list(cells)]
    if n == 1:
        x = rhs / gains[cells[0], cells[0]]
        return PowerSolveResult(cells, x, _classify(x, qos.power_cap))

    a = system_matrix(gains, cells, qos.gamma0)
    scale = np.abs(a).sum(axis=1).max()
    lu, piv, info = dgetrf(a)
    if info > 0 or np.abs(lu.diagonal()).min() < PIVOT_TOL * scale:
        return PowerSolveResult(cells, None, SINGULAR)
    x, info = dgetrs(lu, piv, rhs)
    return PowerSolveResult(cells, x, _classify(x, qos.power_cap))


def verify_cir(gains: np.ndarray, powers: Mapping[int, float], active: Iterable[int],
               qos: QosParams) -> bool:
    cells = sorted(int(c) for c in active)
    if not cells:
        return True
    p = [powers[c] for c in cells]
    if min(p) <= 0:
        return False
    gam = cir_vector(gains, cells, p, qos.eta)
    return bool(np.all(gam >= qos.gamma0 * (1.0 - EPS_TOL)))


class CochannelCache:
    """Per-channel factorization of the ongoing calls' CIR system.

    For channel ``l`` with ongoing set ``S`` it keeps ``p0`` (minimal powers
    of ``S`` alone) and ``W = gamma0 * A_S^-1 G[S, :]`` so that adding one
    cell ``k`` reduces to a scalar Schur complement

        s = g_kk - gamma0 * g[k, S] . W[S, k]

    The extended system has a positive solution iff ``S`` is feasible and
    ``s > 0``; then ``p_k = gamma0 * (eta_k + g[k, S] . p0) / s`` and
    ``p_S = p0 + W[:, k] * p_k``.
    """

    def __init__(self, gains: np.ndarray, qos: QosParams, n_channels: int):
        n = gains.shape[0]
        self.gains = gains
        self.qos = qos
        # cols[l, j] is column j of W (a vector over cells) and cols[l, n] is p0,
        # so one gather fetches everything extend() needs for a channel
        self.cols = np.zeros((n_channels, n + 1, n))
        self.p0 = self.cols[:, n, :]
        self.ok = np.ones(n_channels, dtype=bool)
        self.version = np.full(n_channels, -1, dtype=np.int64)
        self._pick = [np.array([k, n]) for k in range(n)]
        self._gamma0 = float(qos.gamma0)
        self._cap = float(qos.power_cap)
        self._eta = qos.eta
        self._g_self = np.diag(gains).copy()
        # bound on the new row's magnitude, for the singularity test on s
        row_scale = self._g_self + qos.gamma0 * (gains.sum(axis=1) - self._g_self)
        self._s_tol = PIVOT_TOL * row_scale

    def refresh(self, l: int, cells: np.ndarray, version: int) -> None:
        self.version[l] = version
        self.cols[l] = 0.0
        self.ok[l] = True
        if cells.size == 0:
            return
        a = system_matrix(self.gains, cells, self.qos.gamma0)
        scale = np.abs(a).sum(axis=1).max()
        lu, piv, info = dgetrf(a)
        if info > 0 or np.abs(lu.diagonal()).min() < PIVOT_TOL * scale:
            self.ok[l] = False
            return
        n = self.gains.shape[0]
        rhs = np.empty((cells.size, n + 1))
        rhs[:, :n] = self.qos.gamma0 * self.gains[cells]
        rhs[:, n] = self.qos.gamma0 * self.qos.eta[cells]
        sol, _ = dgetrs(lu, piv, rhs)
        if _classify(sol[:, n], self.qos.power_cap) is not None:
            self.ok[l] = False
            return
        self.cols[l][:, cells] = sol.T

    def extend(self, k: int, channels: np.ndarray):
        """Minimal totals for adding cell ``k`` to each channel in ``channels``.

        Returns ``(totals, feasible, pk)``; infeasible entries have total inf.
        Channels must be fresh (see :meth:`refresh`) and free in cell ``k``.
        """
        gam = self._gamma0
        x = self.cols[channels[:, None], self._pick[k]]     # (m, 2, C): W[:, k] and p0
        xg = x @ self.gains[k]
        s = self._g_self[k] - gam * xg[:, 0]
        # s <= 0 is infeasible; the clamp only keeps the division finite
        pk = gam * (self._eta[k] + xg[:, 1]) / np.maximum(s, 1e-300)
        p_rest = x[:, 1] + x[:, 0] * pk[:, None]
        # ufunc reductions skip the ndarray-method wrappers; this is the hot path
        feasible = (self.ok[channels] & (s > self._s_tol[k])
                    & (np.maximum(pk, np.maximum.reduce(p_rest, axis=1)) <= self._cap))
        totals = np.add.reduce(p_rest, axis=1) + pk
        totals[~feasible] = np.inf
        return totals, feasible, pk

    def powers_with(self, k: int, l: int, pk: float) -> dict[int, float]:
        """Power map on channel ``l`` once ``k`` joins at power ``pk``."""
        p = self.p0[l] + self.cols[l, k] * pk
        p[k] = pk
        idx = p.nonzero()[0]
        return dict(zip(idx.tolist(), p[idx].tolist()))
