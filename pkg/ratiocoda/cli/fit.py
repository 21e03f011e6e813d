#!/usr/bin/env python3
"""
RatioCoDa CLI helper to fit the random-intercept model of a single ratio.
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
from ratiocoda.pipeline import run_fit
from ratiocoda.utils import RatioCodaError


def make_parser(shared_parsers: SharedParsers = None, prefixes: CommandPrefixes = None) -> argparse.ArgumentParser:
    parser = make_helper_parser("fit", "Fit the mixed-effects model of a ratio and write its Wald report.",
                                shared_parsers, prefixes,
                                [get_input_parser(), get_method_parser(), get_config_parser(), get_output_parser()])
    default = get_constant("RATIOCODA_RESPONSE", raise_missing=False, raise_not_set=False)
    parser.add_argument("-R", "--response", required=default is None, default=default,
                        help="Response ratio: a catalog name such as 'z1' or 'r1_p', '-z1' for a reversed balance, "
                             "or a definition 'name = (A + B) / (C)'.")
    return parser


def main(args: ParserArgs = None, parser: HelperParser = None, namespace: ParsedArgs = None) -> ParseResult:
    if not parser:
        parser = make_parser()
    args = parser.parse_args(args=args, namespace=namespace)
    set_log_level(args)
    LOGGER.debug("Fitting [%s] on [%s]", args.response, args.input)
    try:
        config = load_config(args.config)
        run, report, _ = run_fit(args.input, args.response, scheme=args.scheme, method=args.method, config=config,
                                 out_dir=args.out_dir, columns=args.columns, timestamps=args.timestamps)
    except RatioCodaError as exc:
        return print_error(exc)
    summary = run.summary()
    summary["coefficients"] = [row.json() for row in report.rows]
    print_format(summary, args.format, section="fit")
    return 0


if __name__ == "__main__":
    main()
