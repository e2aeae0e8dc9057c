"""Command-line entrypoint: ``python cli.py <command> --input curve.json --output report.json``."""
import argparse
import logging
import sys

from pydantic import ValidationError

from config import settings
from models.schemas import COMMANDS, JobSpec
from services.jobs import EXIT_INPUT, execute
from utils import serialization


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="derham",
        description="Second-kind differentials, residue pairings and divisor flows on hyperelliptic curves.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="curve/divisor JSON file")
    parser.add_argument("--output", help="report file (trajectory CSV for flow --format csv)")
    parser.add_argument("--tol", type=float, help="residue tolerance override, in (0, 1e-2)")
    parser.add_argument("--steps", type=int, default=100, help="RK4 steps for flow and ba")
    parser.add_argument("--t-end", dest="t_end", type=float, default=1.0, help="final flow time")
    parser.add_argument("--seed", type=int, default=0, help="seed of the verify suite (numpy PCG64)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        spec = JobSpec(
            command=args.command, input=args.input, output=args.output, tol=args.tol,
            steps=args.steps, t_end=args.t_end, seed=args.seed, format=args.format,
        )
    except ValidationError as e:
        print(f"ValidationError: {e}", file=sys.stderr)
        return EXIT_INPUT

    code, report, files = execute(spec)
    if "error" in report:
        print(f"{report['error']}: {report['message']}", file=sys.stderr)
    elif spec.command == "verify":
        for prop in report["properties"]:
            status = "PASS" if prop["passed"] else "FAIL"
            print(f"{status} {prop['name']} (max error {prop['max_error']:.3e})")
    elif not files:
        print(serialization.dumps(report), end="")
    for path in files:
        print(f"wrote {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
