"""Call admission: optimal joint channel/power selection and two baselines.

The integer program for a new call in cell ``k`` picks exactly one free
dynamic channel and the powers on it. Because only one channel is selected
and powers elsewhere are untouched, the program separates per channel: the
optimum is the feasible channel whose minimal-power solve has the smallest
total, with ties going to the lowest channel id.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import power as pw
from .netstate import ChannelClass, NetworkState


@dataclass(frozen=True)
class OptimalPC:
    name = "PC"


@dataclass(frozen=True)
class FixedPower:
    p_fixed: float
    name = "FP"

    def __post_init__(self):
        if not self.p_fixed > 0:
            raise ValueError("p_fixed must be > 0")


@dataclass(frozen=True)
class ReuseDistance:
    d_reuse: float
    p_fixed: float = 1.0
    name = "RD"

    def __post_init__(self):
        if not self.d_reuse > 0:
            raise ValueError("d_reuse must be > 0")
        if not self.p_fixed > 0:
            raise ValueError("p_fixed must be > 0")


Policy = Union[OptimalPC, FixedPower, ReuseDistance]


@dataclass(frozen=True)
class Admitted:
    channel: int
    channel_class: ChannelClass
    powers: dict
    total_power: float

    admitted = True


@dataclass(frozen=True)
class Blocked:
    admitted = False


BLOCKED = Blocked()
AdmissionOutcome = Union[Admitted, Blocked]

# distances within this slack of d_reuse count as "at" the reuse distance
_DIST_SLACK = 1e-9


# totals within this relative gap of the minimum count as tied
_TIE_RTOL = 1e-12

_caches: "weakref.WeakKeyDictionary[NetworkState, pw.CochannelCache]" = weakref.WeakKeyDictionary()


def _fresh_cache(state: NetworkState, gains: np.ndarray, qos: pw.QosParams,
                 channels: np.ndarray) -> pw.CochannelCache:
    cache = _caches.get(state)
    if cache is None or cache.gains is not gains or cache.qos is not qos:
        cache = pw.CochannelCache(gains, qos, state.plan.total_channels)
        _caches[state] = cache
    stale = channels[cache.version[channels] != state.version[channels]]
    for l in stale.tolist():
        cache.refresh(l, state.cochannel_cells(l), state.version[l])
    return cache


def admit_optimal(state: NetworkState, gains: np.ndarray, qos: pw.QosParams,
                  k: int) -> AdmissionOutcome:
    """Admit a call in cell ``k`` with minimal-power control. Does not mutate ``state``.

    FC phase: the first free fixed channel (ascending id) whose co-channel
    set plus ``k`` is feasible. DC phase: among free dynamic channels, the
    feasible one with the least total power, lowest id on ties.
    """
    fc = np.asarray(state.free_fc_channels(k), dtype=np.intp)
    if fc.size:
        cache = _fresh_cache(state, gains, qos, fc)
        totals, feasible, pk = cache.extend(k, fc)
        hit = feasible.nonzero()[0]
        if hit.size:
            r = hit[0]
            return _admitted(cache, state, k, int(fc[r]), pk[r], totals[r])

    free = state.free_dc_channels(k)
    if free.size == 0:
        return BLOCKED
    cache = _fresh_cache(state, gains, qos, free)
    totals, feasible, pk = cache.extend(k, free)
    if not feasible.nonzero()[0].size:
        return BLOCKED
    r = int((totals <= np.minimum.reduce(totals) * (1.0 + _TIE_RTOL)).nonzero()[0][0])
    return _admitted(cache, state, k, int(free[r]), pk[r], totals[r])


def _admitted(cache, state, k, l, pk, total) -> Admitted:
    return Admitted(l, state.plan.channel_class(l), cache.powers_with(k, l, pk), float(total))


def _candidates(state: NetworkState, k: int) -> np.ndarray:
    fc = np.asarray(state.free_fc_channels(k), dtype=np.intp)
    return np.concatenate([fc, state.free_dc_channels(k)])


def admit_fixed_power(state: NetworkState, gains: np.ndarray, qos: pw.QosParams,
                      k: int, p_fixed: float) -> AdmissionOutcome:
    """First channel (FC before DC, ascending id) where every co-channel link,
    all at ``p_fixed``, keeps its CIR target."""
    if not 0 < p_fixed <= qos.power_cap:
        raise ValueError(f"p_fixed must lie in (0, {qos.power_cap}]")
    cand = _candidates(state, k)
    if cand.size == 0:
        return BLOCKED
    on = state.alloc[:, cand].copy()
    on[k] = True
    g_self = np.diag(gains)
    # received power from every co-channel transmitter, all at p_fixed
    interference = p_fixed * (gains @ on) - p_fixed * g_self[:, None] * on
    gam = g_self[:, None] * p_fixed / (interference + qos.eta[:, None])
    good = np.all(~on | (gam >= qos.gamma0 * (1.0 - pw.EPS_TOL)), axis=0)
    hit = np.flatnonzero(good)
    if hit.size == 0:
        return BLOCKED
    l = int(cand[hit[0]])
    powers = {int(c): float(p_fixed) for c in np.flatnonzero(on[:, hit[0]])}
    return Admitted(l, state.plan.channel_class(l), powers, p_fixed * len(powers))


def admit_reuse_distance(state: NetworkState, dist: np.ndarray, k: int,
                         d_reuse: float, p_fixed: float = 1.0) -> AdmissionOutcome:
    """First channel (FC before DC, ascending id) with no co-channel call
    closer than ``d_reuse`` to cell ``k``. ``dist`` is the C x C distance
    matrix; the recorded power is bookkeeping only."""
    cand = _candidates(state, k)
    if cand.size == 0:
        return BLOCKED
    near = dist[:, k] < d_reuse - _DIST_SLACK
    clash = np.any(state.alloc[:, cand] & near[:, None], axis=0)
    hit = np.flatnonzero(~clash)
    if hit.size == 0:
        return BLOCKED
    l = int(cand[hit[0]])
    return Admitted(l, state.plan.channel_class(l), {int(k): float(p_fixed)}, float(p_fixed))


def admit(policy: Policy, state: NetworkState, gains: np.ndarray, qos: pw.QosParams,
          k: int, dist: np.ndarray | None = None) -> AdmissionOutcome:
    if isinstance(policy, OptimalPC):
        return admit_optimal(state, gains, qos, k)
    if isinstance(policy, FixedPower):
        return admit_fixed_power(state, gains, qos, k, policy.p_fixed)
    if isinstance(policy, ReuseDistance):
        if dist is None:
            raise ValueError("reuse-distance policy needs the distance matrix")
        return admit_reuse_distance(state, dist, k, policy.d_reuse, policy.p_fixed)
    raise TypeError(f"unknown policy {policy!r}")


def commit(state: NetworkState, outcome: Admitted, call) -> None:
    """Apply an admission: register the call and write the outcome's powers
    on its channel column."""
    if outcome.channel != call.channel:
        raise ValueError("call record and outcome disagree on the channel")
    state.occupy(call, outcome.powers)


def release_call(state: NetworkState, gains: np.ndarray, qos: pw.QosParams,
                 call_id: int, policy: Policy = OptimalPC()):
    """Free a call's channel; under PC re-solve the survivors to their new minimum."""
    call = state.release(call_id)
    if isinstance(policy, OptimalPC):
        l = call.channel
        rest = state.cochannel_cells(l)
        if rest.size:
            cache = _fresh_cache(state, gains, qos, np.array([l]))
            if not cache.ok[l]:
                raise RuntimeError(f"re-solve after release infeasible on channel {l}")
            state.set_channel_powers(l, {int(c): float(cache.p0[l, c]) for c in rest})
    return call
