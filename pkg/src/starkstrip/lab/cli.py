"""Command-line interface: subcommand + config + dotted overrides.

Exit codes: 0 success, 2 configuration or regime validation failure,
3 solver or numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import (
    ConfigError,
    DiscretizationError,
    GeometryError,
    QuadratureError,
    RegimeError,
    SolverError,
    StarkstripError,
)
from .config import RunConfig, apply_overrides, load_config
from .runner import COMMANDS, run_command

_VALIDATION = (ConfigError, RegimeError, GeometryError, DiscretizationError)
_NUMERICAL = (SolverError, QuadratureError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starkstrip",
        description="Trapped modes and Stark resonances of curved planar waveguides.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("check", "hypotheses, regime, and reference constants"),
        ("modes", "transverse mode table against the closed form"),
        ("bound", "field-free trapped modes below the continuum edge"),
        ("resonance", "one deformed solve and resonance selection"),
        ("sweep_theta", "plateau stability across deformation strengths"),
        ("sweep_field", "field ladder, resonance trajectory, width-law fit"),
        ("confining", "eigenvalue counting in the confining regime"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[],
            metavar="KEY=VALUE", help="override a config entry, e.g. field.F=0.002",
        )
        p.add_argument("--out", type=str, default=None, help="output root directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = load_config(args.config)
            data = apply_overrides(config.as_dict(), args.overrides)
        else:
            data = apply_overrides({}, args.overrides)
        config = RunConfig.from_dict(data)
        result = run_command(args.command, config, args.out)
    except _VALIDATION as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except StarkstripError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"{args.command}: wrote {len(result.files)} file(s) to {result.outdir}")
    for key, val in sorted(result.manifest.get("summary", {}).items()):
        print(f"  {key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
