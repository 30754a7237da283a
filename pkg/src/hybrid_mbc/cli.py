"""
Command-line entry point: ``run``, ``sweep`` and ``synth``.

Exit status is 0 on success, 1 for configuration errors, 2 for bad trace
data and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .errors import ConfigError, MbcError
from .experiment import load_config, run_experiment, write_run_artifacts, write_sweep_artifacts
from .geo import write_enu_csv
from .synth import SCENARIOS, generate, scenario_from_dict


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybrid-mbc", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    for name, helptext in (("run", "run both arms per cell and write full artifacts"),
                           ("sweep", "tabulate rates and PTE percentiles per cell")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--trace", help="CSV trace (t,x,y or t,lat,lon,alt)")
        s.add_argument("--scenario", choices=sorted(SCENARIOS),
                       help="built-in synthetic scenario (ignored when --trace is given)")
        s.add_argument("--thresholds", type=_floats, help="e.g. 0.2,0.3,0.4,0.5")
        s.add_argument("--pers", type=_floats, help="e.g. 0,0.4")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")

    s = sub.add_parser("synth", help="write a synthetic ENU trace")
    s.add_argument("--scenario", default="mixed-demo",
                   help=f"one of {', '.join(sorted(SCENARIOS))}")
    s.add_argument("--config", help="JSON scenario spec, used instead of --scenario")
    s.add_argument("--duration", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output CSV path")
    return p


def _experiment(args):
    overrides = {"trace": args.trace, "scenario": args.scenario, "seed": args.seed,
                 "thresholds_m": args.thresholds, "pers": args.pers, "out_dir": args.out}
    if args.trace:
        overrides["scenario"] = None
    cfg = load_config(args.config, **overrides)
    return cfg, run_experiment(cfg)


def cmd_run(args) -> int:
    cfg, res = _experiment(args)
    write_run_artifacts(res, cfg.out_dir)
    return 0


def cmd_sweep(args) -> int:
    cfg, res = _experiment(args)
    write_sweep_artifacts(res, cfg.out_dir)
    return 0


def cmd_synth(args) -> int:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                spec = scenario_from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {args.config}: {exc}") from None
        duration = args.duration
    else:
        if args.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        factory, default = SCENARIOS[args.scenario]
        spec = factory()
        duration = args.duration if args.duration is not None else default
    traj = generate(spec, duration, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".partial-", dir=out.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write_enu_csv(traj, fh)
        os.replace(tmp, out)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except MbcError as exc:
        print(f"hybrid-mbc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hybrid-mbc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
