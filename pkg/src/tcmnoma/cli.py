"""Command line front end.

`tcmnoma simulate` runs a BER sweep and writes CSV reports; `tcmnoma design`
builds the codeword-design bundle and exports its artifacts.  Exit codes:
0 success, 1 configuration problem, 2 runtime failure.
"""

import argparse
import sys
from pathlib import Path

from .design import export_design, render_design_summary
from .errors import ConfigError, TcmNomaError
from .harness import (
    SCHEMES,
    SimConfig,
    design_for,
    emit_report,
    load_config,
    run_baseline,
    run_sweep,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcmnoma")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo BER sweep")
    sim.add_argument("--config", required=True, help="YAML experiment description")
    sim.add_argument("--scheme", choices=SCHEMES, help="override the configured scheme")
    sim.add_argument("--ebn0", help="comma-separated Eb/N0 grid in dB, overrides config")
    sim.add_argument("--seed", type=int, help="override the configured seed")
    sim.add_argument("--out", default="out", help="report directory")

    des = sub.add_parser("design", help="build and export the codeword design")
    des.add_argument("--config", help="YAML experiment description (optional)")
    des.add_argument("--out", default="design", help="artifact directory")
    return parser


def _overridden(cfg: SimConfig, args) -> SimConfig:
    d = dict(cfg.raw)
    if args.scheme is not None:
        d["scheme"] = args.scheme
    if args.seed is not None:
        d["seed"] = args.seed
    if args.ebn0 is not None:
        try:
            grid = [float(x) for x in args.ebn0.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --ebn0 list: {exc}") from exc
        d["ebn0_db"] = grid
    return SimConfig.from_dict(d)


def _cmd_simulate(args) -> int:
    cfg = _overridden(load_config(args.config), args)
    scheme = cfg.raw["scheme"]
    records = run_sweep(cfg) if scheme == "tcm-noma" else run_baseline(cfg, scheme)
    paths = emit_report(records, args.out)
    for r in records:
        print(f"{r.scheme} {r.ebn0_db:g} dB: ber {r.ber:.3e} ({r.errors}/{r.bits})")
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def _cmd_design(args) -> int:
    cfg = SimConfig.from_dict({}) if args.config is None else load_config(args.config)
    design = design_for(cfg, "tcm-noma")
    paths = export_design(design, Path(args.out))
    print(render_design_summary(design))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_design(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TcmNomaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
