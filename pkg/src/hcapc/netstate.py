"""Channel plan, allocation/power matrices and the live-call registry."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .hexgrid import GridGeometry


class ChannelClass(str, enum.Enum):
    FC = "FC"
    DC = "DC"


def _cluster_multiplier(cluster_size: int) -> tuple[int, int, int] | None:
    """Find a reuse vector (i, j) and multiplier m with slot = (a + m*b) mod N.

    Works for the cyclic hex cluster sizes N = i^2 + ij + j^2 (1, 3, 7, 13,
    ...). Returns None when N has no such cyclic reuse pattern (e.g. 4).
    """
    n = cluster_size
    for i in range(n + 1):
        for j in range(i + 1):
            if i * i + i * j + j * j != n:
                continue
            for m in range(n):
                # both the reuse vector and its 60-degree rotation map to slot 0
                if (i + m * j) % n == 0 and (-j + m * (i + j)) % n == 0:
                    return i, j, m
    return None


@dataclass(frozen=True)
class ChannelPlan:
    total_channels: int
    cluster_size: int
    slots: np.ndarray       # cluster slot of each cell
    fc_per_cell: tuple      # tuple of sorted channel-id tuples, one per cell
    dc_set: tuple

    @property
    def n_fc(self) -> int:
        return self.total_channels - len(self.dc_set)

    @property
    def ratio(self) -> tuple[int, int]:
        return self.n_fc, len(self.dc_set)

    @property
    def reuse_distance(self) -> float:
        """Minimum separation between two cells holding the same FC channel."""
        return math.sqrt(self.cluster_size)

    def channel_class(self, channel: int) -> ChannelClass:
        return ChannelClass.FC if channel < self.n_fc else ChannelClass.DC


def build_channel_plan(total: int, ratio_fc: int, cluster_size: int,
                       geom: GridGeometry) -> ChannelPlan:
    """Split ``total`` channels into per-cell fixed sets and a shared pool.

    FC channels take ids ``[0, ratio_fc)`` and are dealt round-robin over
    the cluster slots; the remaining ids form the dynamic set.
    """
    if total < 1:
        raise ValueError("total channel count must be positive")
    if not 0 <= ratio_fc <= total:
        raise ValueError(f"FC count {ratio_fc} must lie in [0, {total}]")
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    if ratio_fc % cluster_size:
        raise ValueError(
            f"FC count {ratio_fc} is not a multiple of the cluster size {cluster_size}; "
            "each cluster slot must receive the same number of fixed channels")
    found = _cluster_multiplier(cluster_size)
    if found is None:
        raise ValueError(f"cluster size {cluster_size} has no hexagonal reuse pattern")
    m = found[2]
    slots = (geom.axial[:, 0] + m * geom.axial[:, 1]) % cluster_size
    if ratio_fc and len(np.unique(slots)) < cluster_size:
        raise ValueError(
            f"cluster size {cluster_size} is not realizable on a {geom.rows}x{geom.cols} grid")
    by_slot = [tuple(range(s, ratio_fc, cluster_size)) for s in range(cluster_size)]
    fc = tuple(by_slot[s] for s in slots)
    slots = slots.astype(np.int64)
    slots.setflags(write=False)
    return ChannelPlan(total, cluster_size, slots, fc, tuple(range(ratio_fc, total)))


@dataclass(frozen=True)
class CallRecord:
    call_id: int
    cell: int
    channel: int
    channel_class: ChannelClass
    start_time: float
    departure_time: float

    def __post_init__(self):
        if not self.departure_time > self.start_time:
            raise ValueError("departure_time must be after start_time")


class NetworkState:
    """Single authoritative store of who transmits on which channel, and how loud.

    ``alloc[i, l]`` is True while a call occupies channel ``l`` in cell
    ``i``; ``power[i, l]`` is positive exactly on those entries.
    """

    def __init__(self, plan: ChannelPlan, n_cells: int, power_cap: float = math.inf):
        self.plan = plan
        self.n_cells = n_cells
        self.power_cap = power_cap
        self.alloc = np.zeros((n_cells, plan.total_channels), dtype=bool)
        self.power = np.zeros((n_cells, plan.total_channels))
        self.calls: dict[int, CallRecord] = {}
        self._by_slot: dict[tuple[int, int], int] = {}
        self._dc = np.array(plan.dc_set, dtype=np.intp)
        # bumped whenever a channel's set of live cells changes
        self.version = np.zeros(plan.total_channels, dtype=np.int64)

    def fc_channels(self, k: int) -> tuple:
        return self.plan.fc_per_cell[k]

    def free_fc_channels(self, k: int) -> list[int]:
        row = self.alloc[k]
        return [l for l in self.plan.fc_per_cell[k] if not row[l]]

    def free_dc_channels(self, k: int) -> np.ndarray:
        """Ascending ids of dynamic channels not in use in cell ``k``."""
        return self._dc[~self.alloc[k, self._dc]]

    def cochannel_cells(self, l: int) -> np.ndarray:
        return self.alloc[:, l].nonzero()[0]

    def calls_in_cell(self, k: int) -> int:
        return int(self.alloc[k].sum())

    def call_at(self, cell: int, channel: int) -> int | None:
        return self._by_slot.get((cell, channel))

    def _check_powers(self, channel: int, powers: dict[int, float], new_cell: int | None):
        for c, p in powers.items():
            if not 0 < p <= self.power_cap:
                raise ValueError(f"power {p!r} for cell {c} outside (0, {self.power_cap}]")
            if c != new_cell and not self.alloc[c, channel]:
                raise ValueError(f"cell {c} has no call on channel {channel}")

    def occupy(self, call: CallRecord, powers: dict[int, float]) -> None:
        """Register ``call`` and write ``powers`` on its channel column only."""
        k, l = call.cell, call.channel
        if call.call_id in self.calls:
            raise ValueError(f"call id {call.call_id} already live")
        if self.alloc[k, l]:
            raise ValueError(f"channel {l} already busy in cell {k}")
        if k not in powers:
            raise ValueError("powers must include the new call's cell")
        self._check_powers(l, powers, k)
        self.alloc[k, l] = True
        for c, p in powers.items():
            self.power[c, l] = p
        self.calls[call.call_id] = call
        self._by_slot[(k, l)] = call.call_id
        self.version[l] += 1

    def release(self, call_id: int) -> CallRecord:
        try:
            call = self.calls.pop(call_id)
        except KeyError:
            raise KeyError(f"unknown call id {call_id}") from None
        del self._by_slot[(call.cell, call.channel)]
        self.alloc[call.cell, call.channel] = False
        self.power[call.cell, call.channel] = 0.0
        self.version[call.channel] += 1
        return call

    def set_channel_powers(self, channel: int, powers: dict[int, float]) -> None:
        """Overwrite powers of existing calls on one channel."""
        self._check_powers(channel, powers, None)
        for c, p in powers.items():
            self.power[c, channel] = p

    def rebuild_alloc(self) -> np.ndarray:
        a = np.zeros_like(self.alloc)
        for call in self.calls.values():
            a[call.cell, call.channel] = True
        return a

    def check_invariants(self) -> None:
        if not np.array_equal(self.rebuild_alloc(), self.alloc):
            raise AssertionError("allocation matrix disagrees with call registry")
        if not np.array_equal(self.power > 0, self.alloc):
            raise AssertionError("power matrix support differs from allocation matrix")
        if np.any(self.power < 0) or np.any(self.power > self.power_cap):
            raise AssertionError("power outside [0, cap]")

    def snapshot(self) -> "NetworkState":
        snap = NetworkState.__new__(NetworkState)
        snap.__dict__.update(self.__dict__)
        snap.alloc = self.alloc.copy()
        snap.power = self.power.copy()
        snap.alloc.setflags(write=False)
        snap.power.setflags(write=False)
        snap.version = self.version.copy()
        snap.calls = dict(self.calls)
        snap._by_slot = dict(self._by_slot)
        return snap

    def dump_csv(self, alloc_path, power_path) -> None:
        header = ["cell"] + list(range(self.plan.total_channels))
        for path, mat, fmt in ((alloc_path, self.alloc, int),
                               (power_path, self.power, lambda x: repr(float(x)))):
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for i, row in enumerate(mat):
                    w.writerow([i] + [fmt(x) for x in row])
