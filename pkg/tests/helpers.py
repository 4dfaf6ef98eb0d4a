"""Builders for small randomized network states."""

from __future__ import annotations

import numpy as np

from hcapc import power as pw
from hcapc.hexgrid import build_grid
from hcapc.netstate import CallRecord, NetworkState, build_channel_plan


def random_gains(rng, n, lo=0.02, hi=0.6):
    g = rng.uniform(lo, hi, (n, n))
    g = (g + g.T) / 2
    np.fill_diagonal(g, rng.uniform(1.0, 2.0, n))
    return g


def dc_state(n_cells, n_channels, cap=10.0, n_fc=0):
    """State on a 1 x n_cells strip with a single-slot cluster plan."""
    plan = build_channel_plan(n_channels, n_fc, 1, build_grid(1, n_cells))
    return NetworkState(plan, n_cells, cap)


def fill_randomly(rng, state, gains, qos, density=0.5, start_id=0):
    """Occupy each channel with a random feasible co-channel set at minimal powers."""
    cid = start_id
    for l in range(state.plan.total_channels):
        cells = [c for c in range(state.n_cells) if rng.random() < density]
        while cells:
            r = pw.solve_min_power(gains, cells, qos)
            if r.feasible:
                break
            cells.pop(int(rng.integers(len(cells))))
        if not cells:
            continue
        powers = r.as_dict()
        for c in cells:
            rec = CallRecord(cid, c, l, state.plan.channel_class(l), 0.0, 1.0)
            state.occupy(rec, {c: powers[c]})
            cid += 1
        state.set_channel_powers(l, powers)
    return cid


def dc_instance(rng):
    """Random state with up to 5 cells and 4 dynamic channels, plus a requesting cell."""
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 5))
    g = random_gains(rng, n)
    gamma0 = float(rng.choice([1.0, 2.0, 3.0]))
    eta = rng.uniform(0.5, 2.0, n)
    q = pw.QosParams(gamma0, eta, float(rng.uniform(5.0, 40.0)))
    state = dc_state(n, m, cap=q.power_cap)
    fill_randomly(rng, state, g, q, density=rng.uniform(0.2, 0.8))
    k = int(rng.integers(n))
    return state, g, q, k
