"""Command-line front end: single runs, figure-style presets, CSV and .dat output."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import sim
from .config import ConfigError, SimConfig, format_config, parse_config

PRESETS = ("fig3_like", "fig4_like", "fig5_like", "fig6_like", "custom")

# CLI flag -> config key
_FLAG_KEYS = {
    "seed": "seed",
    "gamma0": "gamma0",
    "ratio": "ratio",
    "policy": "policy",
    "load_multiplier": "load_multiplier",
    "duration": "sim_duration",
}

# keys recorded in every CSV header
_META_KEYS = ("seed", "gamma0", "ratio", "policy", "d_reuse", "p_fixed", "path_loss_exponent",
              "min_distance", "self_gain", "noise", "power_cap", "mean_holding",
              "sim_duration", "warmup", "total_channels", "cluster_size", "rows", "cols")


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hcapc", description=(
        "Simulate hybrid channel allocation with minimal-power admission control."))
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--preset", choices=PRESETS, default="custom")
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma0", type=float, help="CIR protection ratio")
    p.add_argument("--ratio", metavar="A:B", help="FC:DC channel split")
    p.add_argument("--policy", choices=("pc", "fp", "rd"))
    p.add_argument("--load-multiplier", type=float)
    p.add_argument("--duration", type=float, metavar="SECONDS")
    p.add_argument("--out", metavar="DIR", default="out")
    p.add_argument("--dump-state", action="store_true",
                   help="write the final allocation and power matrices (custom runs only)")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep processes")
    return p


def preset_curves(preset: str, base: SimConfig) -> list[tuple[str, SimConfig]]:
    """(curve label, config) pairs; each config is swept over ``base.load_values``.

    The parameters that define a preset are pinned; everything else comes
    from ``base``.
    """
    if preset in ("fig3_like", "fig4_like"):
        ratio = "21:49" if preset == "fig3_like" else "49:21"
        fixed = base.replace(ratio=ratio, gamma0=2.0, d_reuse=3.0)
        return [(name.upper(), fixed.replace(policy=name)) for name in ("pc", "fp", "rd")]
    if preset == "fig5_like":
        return [(r, base.replace(policy="pc", ratio=r)) for r in ("21:49", "35:35", "49:21")]
    if preset == "fig6_like":
        fixed = base.replace(policy="pc", ratio="21:49")
        return [(f"gamma0={g:g}", fixed.replace(gamma0=g)) for g in base.gamma0_values]
    raise ValueError(f"unknown preset {preset!r}")


def _meta(preset: str, cfg: SimConfig) -> dict:
    meta = {"preset": preset}
    meta.update((k, getattr(cfg, k)) for k in _META_KEYS)
    meta["arrival_rates_mean"] = sum(cfg.arrival_rates) / len(cfg.arrival_rates)
    if preset != "custom":
        meta["load_values"] = ", ".join(f"{v!r}" for v in cfg.load_values)
    return meta


def write_dat(rows, path: Path, x_label: str) -> None:
    """gnuplot-style series: one two-column block per curve, blocks separated
    by two blank lines so ``index N`` selects curve N."""
    blocks: dict[str, list] = {}
    for curve, value, _, m in rows:
        blocks.setdefault(curve, []).append((value, m.blocking_probability))
    parts = []
    for curve, pts in blocks.items():
        lines = [f"# curve: {curve}", f"# {x_label} blocking_probability"]
        lines += [f"{x!r} {y!r}" for x, y in pts]
        parts.append("\n".join(lines))
    path.write_text("\n\n\n".join(parts) + "\n")


def run_preset(preset: str, out_dir, base: SimConfig | None = None, workers: int = 1,
               dump_state: bool = False) -> list[Path]:
    """Run a preset (or a single custom run) and write its artifacts to ``out_dir``."""
    base = base or SimConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "config.resolved"]
    written[0].write_text(f"# preset = {preset}\n" + format_config(base))

    if preset == "custom":
        metrics, state = sim.run_with_state(base)
        rows = [(base.policy.upper(), base.load_multiplier, base.policy.upper(), metrics)]
        if dump_state:
            state.dump_csv(out / "alloc.csv", out / "power.csv")
            written += [out / "alloc.csv", out / "power.csv"]
    else:
        rows = []
        for curve, cfg in preset_curves(preset, base):
            for value, m in sim.sweep(cfg, "load_multiplier", base.load_values, workers):
                rows.append((curve, value, cfg.policy.upper(), m))

    csv_path = out / f"{preset}.csv"
    with open(csv_path, "w", newline="") as fh:
        sim.write_table(rows, fh, _meta(preset, base))
    dat_path = out / f"{preset}.dat"
    write_dat(rows, dat_path, "load_multiplier")
    return written + [csv_path, dat_path]


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        overrides = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items()}
        base = parse_config(args.config, overrides)
        if args.dump_state and args.preset != "custom":
            raise ConfigError("--dump-state applies to the custom preset only")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
    except (ConfigError, _ArgError, OSError) as exc:
        print(f"hcapc: config error: {exc}", file=sys.stderr)
        return 1
    try:
        paths = run_preset(args.preset, args.out, base, args.workers, args.dump_state)
    except Exception as exc:  # noqa: BLE001 - any failure past config is a runtime error
        print(f"hcapc: runtime error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
