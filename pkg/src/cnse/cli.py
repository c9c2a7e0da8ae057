"""Command-line harness.

``cnse <command> [--config PATH] [--set key=value ...] [--out DIR]``

Exit codes: 0 all checks passed, 2 a property/verification check failed,
3 the integration blew up, 4 configuration error.
"""
import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .errors import BlowUpError, CalmingBoundViolation, ConfigError, NonFiniteError
from .experiments import COMMANDS, ExperimentSpec

EXIT_OK = 0
EXIT_PROPERTY = 2
EXIT_BLOWUP = 3
EXIT_CONFIG = 4


def build_parser():
    p = argparse.ArgumentParser(prog="cnse", description="Calmed Navier-Stokes solver and verification harness.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, default=None, help="key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--out", type=Path, default=None, help="output directory for CSV/text reports")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        conf = config_mod.load(args.config, args.overrides)
        spec = ExperimentSpec(args.command, conf, args.out)
        result = COMMANDS[args.command](spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up at t={exc.time!r}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except NonFiniteError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except CalmingBoundViolation as exc:
        print(f"property failure: {exc}", file=sys.stderr)
        return EXIT_PROPERTY

    if args.command == "run":
        print(f"run: {len(result)} samples, t_end={result.t[-1]!r}, energy={result.energy[-1]!r}")
        return EXIT_OK
    print(result.text(), end="")
    return EXIT_OK if result.passed else EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
