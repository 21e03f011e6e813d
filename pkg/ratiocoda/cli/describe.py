#!/usr/bin/env python3
"""
RatioCoDa CLI helper to describe the distribution of ratios within family and non-family firms.
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
    get_input_parser,
    get_output_parser,
    make_helper_parser,
    print_error,
    print_format,
    set_log_level
)
from ratiocoda.config import load_config
from ratiocoda.pipeline import run_describe
from ratiocoda.utils import RatioCodaError


def make_parser(shared_parsers: SharedParsers = None, prefixes: CommandPrefixes = None) -> argparse.ArgumentParser:
    parser = make_helper_parser("describe", "Boxplot summaries, skewness and group averages of ratios.",
                                shared_parsers, prefixes,
                                [get_input_parser(), get_config_parser(), get_output_parser()])
    parser.add_argument("-r", "--ratios", nargs="+", metavar="RATIO",
                        help="Ratios to describe, by default every ratio of the scheme catalog.")
    return parser


def main(args: ParserArgs = None, parser: HelperParser = None, namespace: ParsedArgs = None) -> ParseResult:
    if not parser:
        parser = make_parser()
    args = parser.parse_args(args=args, namespace=namespace)
    set_log_level(args)
    LOGGER.debug("Describing ratios of [%s]", args.input)
    try:
        config = load_config(args.config)
        run = run_describe(args.input, scheme=args.scheme, ratios=args.ratios, config=config, out_dir=args.out_dir,
                           columns=args.columns, timestamps=args.timestamps)
    except RatioCodaError as exc:
        return print_error(exc)
    summary = run.summary()
    summary["summaries"] = run.sections["summaries"]
    print_format(summary, args.format, section="describe")
    return 0


if __name__ == "__main__":
    main()
