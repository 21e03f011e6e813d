#!/usr/bin/env python3
"""
RatioCoDa CLI helper to fit every catalog ratio and compare the models side by side.
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
    get_input_parser,
    get_method_parser,
    get_output_parser,
    make_helper_parser,
    print_error,
    print_format,
    set_log_level
)
from ratiocoda.config import load_config
from ratiocoda.pipeline import run_compare
from ratiocoda.utils import RatioCodaError

EXIT_ALL_FAILED = 3


def make_parser(shared_parsers: SharedParsers = None, prefixes: CommandPrefixes = None) -> argparse.ArgumentParser:
    parser = make_helper_parser("compare", "Fit the mixed-effects model of every catalog ratio side by side.",
                                shared_parsers, prefixes,
                                [get_input_parser(), get_method_parser(), get_config_parser(), get_output_parser()])
    jobs = get_constant("RATIOCODA_JOBS", raise_missing=False, raise_not_set=False, default_value=1)
    parser.add_argument("-j", "--jobs", type=int, default=int(jobs),
                        help="Number of models fitted concurrently (default: %(default)s).")
    parser.add_argument("--permuted", action="store_true",
                        help="Also fit the permutation of every balance of the catalog.")
    return parser


def main(args: ParserArgs = None, parser: HelperParser = None, namespace: ParsedArgs = None) -> ParseResult:
    if not parser:
        parser = make_parser()
    args = parser.parse_args(args=args, namespace=namespace)
    set_log_level(args)
    LOGGER.debug("Comparing models on [%s]", args.input)
    try:
        config = load_config(args.config)
        run = run_compare(args.input, scheme=args.scheme, method=args.method, config=config, out_dir=args.out_dir,
                          columns=args.columns, jobs=args.jobs, permuted=args.permuted, timestamps=args.timestamps)
    except RatioCodaError as exc:
        return print_error(exc)
    print_format(run.summary(), args.format, section="compare")
    return EXIT_ALL_FAILED if run.all_failed else 0


if __name__ == "__main__":
    main()
