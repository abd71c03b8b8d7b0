"""Command-line entry point: gen, recover, montecarlo, selftest."""

import argparse
import sys

from .errors import VRecoverError
from .harness import MODES, cmd_gen, cmd_montecarlo, cmd_recover, cmd_selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrecover",
        description="Exact sparse recovery from products of Vandermonde matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate instance JSON files from a config")
    p_gen.add_argument("--config", required=True, help="experiment config JSON")
    p_gen.add_argument("--out", required=True, help="output directory")

    p_rec = sub.add_parser("recover", help="run one recovery on an instance file")
    p_rec.add_argument("--mode", required=True, choices=MODES)
    p_rec.add_argument("--input", required=True, help="instance JSON")
    p_rec.add_argument("--output", default=None, help="result JSON (default stdout)")

    p_mc = sub.add_parser("montecarlo", help="run a campaign and write a CSV table")
    p_mc.add_argument("--config", required=True, help="experiment config JSON")
    p_mc.add_argument("--out", required=True, help="output CSV path")

    sub.add_parser("selftest", help="run the embedded example and oracle checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args.config, args.out)
        if args.command == "recover":
            return cmd_recover(args.mode, args.input, args.output)
        if args.command == "montecarlo":
            return cmd_montecarlo(args.config, args.out)
        return cmd_selftest()
    except VRecoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
