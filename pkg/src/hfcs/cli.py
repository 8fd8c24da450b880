"""Command-line driver: ``hfcs run CONFIG`` and ``hfcs preset NAME``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from hfcs import presets
from hfcs.metrics import ExportError, export_report
from hfcs.sim.config import VARIANTS, ConfigError, load_config
from hfcs.sim.runner import run
from hfcs.sim.scenario import ScenarioError

OUTPUT_ENV = "HFCS_OUTPUT_DIR"
SHOWN = ("tasks_completed", "tasks_redirected", "tasks_escalated", "tasks_lost", "mean_messages_per_node",
         "metadata_messages", "failures_triggered", "failures_detected", "detection_rate")


def _output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or "results")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hfcs", description="Fog metadata-exchange simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario config file")
    r.add_argument("config", help="TOML scenario file")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--variant", choices=VARIANTS, help="override the config variant")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./results)")

    s = sub.add_parser("preset", help="run a named experiment matrix")
    s.add_argument("name", choices=sorted(presets.PRESETS))
    s.add_argument("--scale", choices=presets.SCALES, default="desk")
    s.add_argument("--seed", type=int, default=0, help="first of the consecutive seeds")
    s.add_argument("--seeds", type=int, default=presets.SEEDS_PER_VALUE, help="seeds per parameter value")
    s.add_argument("--config", help="base scenario file the preset varies")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.variant:
        cfg = cfg.replace(variant=args.variant)
    seed = cfg.seed if args.seed is None else args.seed
    report = run(cfg, seed)
    out = _output_dir(args.out) / f"{cfg.variant}-seed-{seed}"
    export_report(report, out)
    for k in SHOWN:
        print(f"{k:24} {report[k]}")
    print(f"wrote {out}")
    return 0


def _cmd_preset(args) -> int:
    base = load_config(args.config) if args.config else None
    out = _output_dir(args.out)
    result = presets.run_preset(args.name, args.scale, args.seed, base, jobs=args.jobs, out=out, seeds=args.seeds)
    print(f"{'value':12} " + " ".join(f"{k:>22}" for k in SHOWN))
    for label, st in result.stats.items():
        print(f"{label:12} " + " ".join(f"{st[k].mean:>14.2f} ±{st[k].sd:>6.1f}" for k in SHOWN))
    print(f"wrote {out / args.name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _cmd_run(args) if args.command == "run" else _cmd_preset(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"hfcs: error: {exc}", file=sys.stderr)
        return 2
    except ExportError as exc:
        print(f"hfcs: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
