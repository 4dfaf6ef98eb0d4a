import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcapc.config import (ConfigError, SimConfig, benchmark_rates, format_config,
                          parse_config)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing here\n\n")
    cfg = parse_config(path)
    assert cfg == SimConfig()
    echo = format_config(cfg)
    keys = [ln.split("=")[0].strip() for ln in echo.splitlines() if "=" in ln]
    assert keys == [f.name for f in dataclasses.fields(SimConfig)]


def test_flag_overrides_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("gamma0 = 2\nseed = 9\n")
    cfg = parse_config(path, {"gamma0": "4", "seed": None})
    assert cfg.gamma0 == 4.0 and cfg.seed == 9


def test_ratio_must_respect_cluster_divisibility():
    with pytest.raises(ConfigError, match="cluster divisibility"):
        parse_config(text="ratio = 22:48")


@pytest.mark.parametrize("text,key", [
    ("colour = red", "colour"),
    ("gamma0 = -1", "gamma0"),
    ("gamma0 = two", "gamma0"),
    ("ratio = 21:40", "ratio"),
    ("ratio = 21-49", "ratio"),
    ("policy = greedy", "policy"),
    ("warmup = 50000", "warmup"),
    ("audit = maybe", "audit"),
    ("arrival_rates = 1, 2, 3", "arrival_rates"),
    ("min_distance = 2", "min_distance"),
    ("self_gain = 0.9", "self_gain"),
    ("p_fixed = 20", "p_fixed"),
    ("seed = 1\nseed = 2", "seed"),
])
def test_bad_values_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text=text)
    assert str(exc.value).startswith(key)


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config(text="gamma0 2")


def test_derived_defaults():
    cfg = SimConfig(sim_duration=1000.0, power_cap=5.0)
    assert cfg.warmup == 100.0 and cfg.p_fixed == 5.0
    assert len(cfg.arrival_rates) == 49 and cfg.arrival_rates == benchmark_rates()


def test_benchmark_traffic_is_non_uniform():
    rates = np.array(benchmark_rates())
    assert rates.size == 49 and np.all(rates > 0)
    assert rates.max() > 2 * rates.min()


def test_uniform_rates_shortcut():
    cfg = parse_config(text="rows = 1\ncols = 2\narrival_rates = uniform:30\nratio = 0:70")
    assert cfg.arrival_rates == (30.0, 30.0)


def test_offered_load_in_erlangs():
    cfg = SimConfig(rows=1, cols=1, arrival_rates=(40.0,), mean_holding=180.0,
                    load_multiplier=1.5, ratio="0:70")
    assert cfg.traffic().offered_load()[0] == pytest.approx(40 * 1.5 * 180 / 3600)


def test_policy_objects():
    assert SimConfig().make_policy().name == "PC"
    assert SimConfig(policy="fp", p_fixed=2.0).make_policy().p_fixed == 2.0
    rd = SimConfig(policy="rd", d_reuse=2.5).make_policy()
    assert rd.name == "RD" and rd.d_reuse == 2.5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), gamma0=st.floats(0.1, 20), ratio=st.sampled_from(
    ["21:49", "35:35", "49:21", "0:70", "70:0"]), policy=st.sampled_from(["pc", "fp", "rd"]),
    load=st.floats(0.01, 5), noise=st.floats(1e-4, 1.0), audit=st.booleans(),
    loads=st.lists(st.floats(0.1, 3.0), min_size=1, max_size=4))
def test_echo_round_trip(seed, gamma0, ratio, policy, load, noise, audit, loads):
    cfg = SimConfig(seed=seed, gamma0=gamma0, ratio=ratio, policy=policy,
                    load_multiplier=load, noise=noise, audit=audit, load_values=tuple(loads))
    assert parse_config(text=format_config(cfg)) == cfg
