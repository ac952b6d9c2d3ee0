"""Command line front end: single runs, parameter sweeps, config validation.

Exit codes: 0 success, 1 runtime failure (including invariant violations and
failed sweep cells), 2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import config, engine

DEFAULT_SEED = 1


def _resolve_seed(flag_value) -> int:
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("SWAVES_SIM_SEED")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError:
            raise config.ConfigError(f"SWAVES_SIM_SEED is not an integer: {env!r}")
    return DEFAULT_SEED


def _cmd_simulate(args) -> int:
    overrides = {}
    if args.strategy is not None:
        overrides["placement.strategy"] = args.strategy
    try:
        cfg = config.load(args.config, overrides)
        seed = _resolve_seed(args.seed)
    except config.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        result = engine.run(
            cfg,
            seed,
            out_dir=args.out,
            log_events=args.log_events,
            dump_forecast=args.dump_forecast,
        )
    except Exception as e:  # runtime failure, not a config problem
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if result.violations:
        for v in result.violations[:20]:
            print(f"invariant violation: {v}", file=sys.stderr)
        print(f"error: {len(result.violations)} invariant violations", file=sys.stderr)
        return 1
    s = result.summary
    print(
        f"strategy={s['strategy']} seed={s['seed']} mean_ratio={s['mean_ratio']:.6f} "
        f"total_packets={s['total_packets']} trace={s['trace_hash'][:12]}"
    )
    return 0


def _cell_dir(strategy: str, alpha: float, d_max: float, seed: int) -> str:
    return f"{strategy}_a{alpha:g}_d{d_max:g}_s{seed}"


def _run_cell(payload) -> dict:
    """One sweep cell (top level so process pools can pickle it)."""
    cfg_path, strategy, alpha, d_max, seed, out_dir = payload
    row = {
        "strategy": strategy,
        "alpha": f"{alpha:g}",
        "d_max_ms": f"{d_max:g}",
        "seed": str(seed),
        "dir": os.path.basename(out_dir),
        "status": "failed",
        "mean_ratio": "",
        "trace_hash": "",
    }
    try:
        cfg = config.load(
            cfg_path,
            {
                "placement.strategy": strategy,
                "mobility.alpha": alpha,
                "service.d_max_ms": d_max,
            },
        )
        result = engine.run(cfg, seed, out_dir=out_dir)
        if result.violations:
            return row
        row["status"] = "ok"
        row["mean_ratio"] = repr(result.summary["mean_ratio"])
        row["trace_hash"] = result.trace_hash
    except Exception:
        pass
    return row


def _parse_list(raw: str, cast):
    out = []
    for piece in raw.split(","):
        piece = piece.strip()
        if piece:
            out.append(cast(piece))
    return out


def _cmd_sweep(args) -> int:
    try:
        strategies = _parse_list(args.strategies, str)
        alphas = _parse_list(args.alphas, float)
        d_maxes = _parse_list(args.d_max_ms, float)
        seeds = _parse_list(args.seeds, int)
        if not (strategies and alphas and d_maxes and seeds):
            raise config.ConfigError("sweep needs at least one value per axis")
        for s in strategies:
            if s not in engine.STRATEGIES:
                raise config.ConfigError(f"unknown strategy {s!r}")
        config.load(args.config)  # fail fast on a broken base config
    except config.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    cells = []
    for s in strategies:
        for a in alphas:
            for d in d_maxes:
                for seed in seeds:
                    cells.append(
                        (
                            args.config, s, a, d, seed,
                            os.path.join(args.out, _cell_dir(s, a, d, seed)),
                        )
                    )

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]

    index_path = os.path.join(args.out, "sweep_index.csv")
    cols = ["strategy", "alpha", "d_max_ms", "seed", "dir", "status",
            "mean_ratio", "trace_hash"]
    with open(index_path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(row[c] for c in cols) + "\n")

    n_failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"sweep: {len(rows) - n_failed}/{len(rows)} cells ok, index at {index_path}")
    return 1 if n_failed else 0


def _cmd_validate(args) -> int:
    try:
        cfg = config.load(args.config)
    except config.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(cfg.dump())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="swaves-sim",
        description="Lifecycle-aware VNF placement simulator for tree-shaped "
        "edge networks.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation")
    sim.add_argument("--config", default=None, help="config file (defaults apply)")
    sim.add_argument("--seed", type=int, default=None,
                     help="RNG seed (default: SWAVES_SIM_SEED or 1)")
    sim.add_argument("--strategy", choices=engine.STRATEGIES, default=None)
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--log-events", action="store_true")
    sim.add_argument("--dump-forecast", action="store_true")
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep", help="run a strategy/parameter grid")
    sw.add_argument("--config", default=None)
    sw.add_argument("--out", required=True)
    sw.add_argument("--strategies", default="static,reactive,swaves,oracle")
    sw.add_argument("--alphas", default="0.5")
    sw.add_argument("--d-max-ms", default="1.0")
    sw.add_argument("--seeds", default="1")
    sw.add_argument("--jobs", type=int, default=1)
    sw.set_defaults(func=_cmd_sweep)

    val = sub.add_parser("validate", help="check a config and echo it normalized")
    val.add_argument("--config", default=None)
    val.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
