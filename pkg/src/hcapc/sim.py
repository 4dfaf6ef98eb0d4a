"""Blocked-calls-cleared discrete-event simulation of the cellular network.

Each cell owns two independent random streams (inter-arrival and holding
times) derived from ``SeedSequence(seed, spawn_key=(cell, stream))``, so
adding cells or switching policy never perturbs another cell's traffic and
runs with the same seed see the same offered call sequence.
"""

from __future__ import annotations

import csv
import dataclasses
import heapq
import io
import math
from dataclasses import dataclass

import numpy as np

from . import admission as adm
from .config import SimConfig
from .netstate import CallRecord, ChannelClass, NetworkState
from .power import EPS_TOL

_BLOCK = 4096


class _Stream:
    """Exponential variates drawn in blocks from one per-cell generator."""

    __slots__ = ("gen", "mean", "buf", "pos")

    def __init__(self, seed: int, cell: int, which: int, mean: float):
        ss = np.random.SeedSequence(seed, spawn_key=(cell, which))
        self.gen = np.random.Generator(np.random.PCG64(ss))
        self.mean = mean
        self.buf = self.gen.exponential(mean, _BLOCK)
        self.pos = 0

    def next(self) -> float:
        if self.pos == _BLOCK:
            self.buf = self.gen.exponential(self.mean, _BLOCK)
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return float(v)


def cell_streams(seed: int, cell: int, rate_per_s: float, mean_holding: float):
    """(inter-arrival, holding) streams for one cell; rate must be > 0."""
    return _Stream(seed, cell, 0, 1.0 / rate_per_s), _Stream(seed, cell, 1, mean_holding)


@dataclass(frozen=True)
class Metrics:
    arrivals: int
    admitted: int
    blocked: int
    cell_arrivals: tuple
    cell_blocked: tuple
    blocking_probability: float
    blocking_se: float
    no_arrivals: bool
    fc_admissions: int
    dc_admissions: int
    mean_total_power: float
    peak_total_power: float
    cir_violations: int
    audited_events: int
    live_at_end: int
    departures: int

    def cell_blocking(self) -> np.ndarray:
        a = np.asarray(self.cell_arrivals, dtype=float)
        b = np.asarray(self.cell_blocked, dtype=float)
        return np.divide(b, a, out=np.zeros_like(a), where=a > 0)


def _audit(state: NetworkState, gains, g_self, eta, gamma0, channel=None) -> int:
    """Count live links whose CIR is below target (relative tolerance).

    Channels do not interact, so after an event only its channel can change.
    """
    if channel is None:
        p, on = state.power, state.alloc
    else:
        p, on = state.power[:, channel:channel + 1], state.alloc[:, channel:channel + 1]
    interference = gains @ p - g_self[:, None] * p
    gam = g_self[:, None] * p / (interference + eta[:, None])
    return int(np.count_nonzero(on & (gam < gamma0 * (1.0 - EPS_TOL))))


def run(config: SimConfig) -> Metrics:
    """Simulate one configuration and return its post-warmup metrics."""
    return run_with_state(config)[0]


def run_with_state(config: SimConfig) -> tuple[Metrics, NetworkState]:
    """Like :func:`run`, also returning the network state at ``sim_duration``."""
    geom = config.geometry()
    gains = config.gains(geom)
    dist = geom.distance_matrix()
    plan = config.channel_plan(geom)
    qos = config.qos()
    policy = config.make_policy()
    traffic = config.traffic()
    n = geom.n_cells
    state = NetworkState(plan, n, qos.power_cap)
    g_self = np.diag(gains).copy()
    audit = config.audit and not isinstance(policy, adm.ReuseDistance)

    rates = traffic.rates_per_second()
    heap: list = []
    seq = 0
    arrivals_s, holding_s = {}, {}
    for c in range(n):
        if rates[c] > 0:
            arrivals_s[c], holding_s[c] = cell_streams(config.seed, c, rates[c],
                                                       traffic.mean_holding)
            heap.append((arrivals_s[c].next(), seq, 1, c))
            seq += 1
    heapq.heapify(heap)

    end, warm = config.sim_duration, config.warmup
    nb = config.se_batches
    batch_len = (end - warm) / nb
    b_arr = np.zeros(nb, dtype=np.int64)
    b_blk = np.zeros(nb, dtype=np.int64)
    cell_arr = np.zeros(n, dtype=np.int64)
    cell_blk = np.zeros(n, dtype=np.int64)
    fc_adm = dc_adm = 0
    violations = audited = departures = 0
    next_id = 0
    total_power = 0.0
    energy = 0.0
    peak = 0.0
    t_prev = warm

    while heap:
        t, _, kind, x = heapq.heappop(heap)
        if t > end:
            break
        if t > warm:
            energy += total_power * (t - t_prev)
            t_prev = t
            if total_power > peak:
                peak = total_power
        counted = t >= warm
        changed = None
        if kind == 1:
            k = x
            holding = holding_s[k].next()
            heapq.heappush(heap, (t + arrivals_s[k].next(), seq, 1, k))
            seq += 1
            out = adm.admit(policy, state, gains, qos, k, dist)
            if counted:
                bi = min(int((t - warm) / batch_len), nb - 1)
                b_arr[bi] += 1
                cell_arr[k] += 1
            if out.admitted:
                call = CallRecord(next_id, k, out.channel, out.channel_class, t, t + holding)
                adm.commit(state, out, call)
                heapq.heappush(heap, (t + holding, seq, 0, next_id))
                seq += 1
                next_id += 1
                changed = out.channel
                if counted:
                    if out.channel_class is ChannelClass.FC:
                        fc_adm += 1
                    else:
                        dc_adm += 1
            elif counted:
                b_blk[bi] += 1
                cell_blk[k] += 1
        else:
            changed = adm.release_call(state, gains, qos, x, policy).channel
            departures += 1
        if changed is not None:
            total_power = float(state.power.sum())
            if counted and total_power > peak:
                peak = total_power
            if audit:
                violations += _audit(state, gains, g_self, qos.eta, qos.gamma0, changed)
                audited += 1
    if end > t_prev:
        energy += total_power * (end - t_prev)
    if audit:
        violations += _audit(state, gains, g_self, qos.eta, qos.gamma0)

    arrivals = int(cell_arr.sum())
    blocked = int(cell_blk.sum())
    bp = blocked / arrivals if arrivals else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = b_blk / b_arr
    ratios = ratios[b_arr > 0]
    se = float(np.std(ratios, ddof=1) / math.sqrt(ratios.size)) if ratios.size > 1 else 0.0
    return Metrics(
        arrivals=arrivals,
        admitted=arrivals - blocked,
        blocked=blocked,
        cell_arrivals=tuple(int(v) for v in cell_arr),
        cell_blocked=tuple(int(v) for v in cell_blk),
        blocking_probability=bp,
        blocking_se=se,
        no_arrivals=arrivals == 0,
        fc_admissions=fc_adm,
        dc_admissions=dc_adm,
        mean_total_power=energy / (end - warm),
        peak_total_power=peak,
        cir_violations=violations,
        audited_events=audited,
        live_at_end=len(state.calls),
        departures=departures,
    ), state


SWEEP_AXES = ("load_multiplier", "gamma0", "ratio")


def sweep_configs(base: SimConfig, axis: str, values) -> list[SimConfig]:
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    out = []
    for i, v in enumerate(values):
        if axis == "ratio":
            v = v if isinstance(v, str) else f"{int(v)}:{base.total_channels - int(v)}"
        else:
            v = float(v)
        out.append(dataclasses.replace(base, **{axis: v, "seed": base.seed ^ i}))
    return out


def sweep(base: SimConfig, axis: str, values, workers: int = 1) -> list[tuple[object, Metrics]]:
    """One run per value; run ``i`` uses seed ``base.seed ^ i``."""
    configs = sweep_configs(base, axis, values)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(run, configs))
    else:
        results = [run(c) for c in configs]
    return [(getattr(c, axis), m) for c, m in zip(configs, results)]


TABLE_COLUMNS = ("curve", "value", "policy", "arrivals", "blocked", "blocking_probability",
                 "blocking_se", "mean_total_power", "peak_total_power")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(rows, fh, meta: dict | None = None) -> None:
    """CSV with a ``#`` comment header; ``rows`` yields (curve, value, policy, Metrics)."""
    for key, value in (meta or {}).items():
        fh.write(f"# {key} = {value}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for curve, value, policy, m in rows:
        w.writerow([curve, _fmt(value), policy, m.arrivals, m.blocked,
                    _fmt(m.blocking_probability), _fmt(m.blocking_se),
                    _fmt(m.mean_total_power), _fmt(m.peak_total_power)])


def table_text(rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    write_table(rows, buf, meta)
    return buf.getvalue()
