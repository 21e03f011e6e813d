#!/usr/bin/env python3
"""
RatioCoDa CLI helper to generate a synthetic panel with its ground truth.
"""
import argparse

from ratiocoda.cli import LOGGER
from ratiocoda.cli.utils import (
    CommandPrefixes,
    HelperParser,
    ParsedArgs,
    ParserArgs,
    ParseResult,
    SharedParsers,
    get_config_parser,
    get_constant,
    get_output_parser,
    make_helper_parser,
    print_error,
    print_format,
    set_log_level
)
from ratiocoda.pipeline import run_simulate
from ratiocoda.utils import RatioCodaError


def make_parser(shared_parsers: SharedParsers = None, prefixes: CommandPrefixes = None) -> argparse.ArgumentParser:
    parser = make_helper_parser("simulate", "Generate a synthetic panel written as CSV with its ground truth.",
                                shared_parsers, prefixes, [get_config_parser(), get_output_parser()])
    seed = get_constant("RATIOCODA_SEED", raise_missing=False, raise_not_set=False)
    parser.add_argument("--seed", type=int, default=int(seed) if seed is not None else None,
                        help="Seed overriding the configured one.")
    return parser


def main(args: ParserArgs = None, parser: HelperParser = None, namespace: ParsedArgs = None) -> ParseResult:
    if not parser:
        parser = make_parser()
    args = parser.parse_args(args=args, namespace=namespace)
    set_log_level(args)
    LOGGER.debug("Simulating panel in [%s]", args.out_dir)
    try:
        run = run_simulate(args.config, seed=args.seed, out_dir=args.out_dir, timestamps=args.timestamps)
    except RatioCodaError as exc:
        return print_error(exc)
    summary = run.summary()
    summary["seed"] = run.seed
    summary.update(run.settings)
    print_format(summary, args.format, section="simulate")
    return 0


if __name__ == "__main__":
    main()
