#!/usr/bin/env python3
"""
RatioCoDa CLI helper to write the ten company example of ratio outliers.
"""
import argparse

from ratiocoda.cli.utils import (
    CommandPrefixes,
    HelperParser,
    ParsedArgs,
    ParserArgs,
    ParseResult,
    SharedParsers,
    get_output_parser,
    make_helper_parser,
    print_format,
    set_log_level
)
from ratiocoda.pipeline import run_toy


def make_parser(shared_parsers: SharedParsers = None, prefixes: CommandPrefixes = None) -> argparse.ArgumentParser:
    return make_helper_parser("toy", "Outliers of two reciprocal ratios and of their balance on ten companies.",
                              shared_parsers, prefixes, [get_output_parser()])


def main(args: ParserArgs = None, parser: HelperParser = None, namespace: ParsedArgs = None) -> ParseResult:
    if not parser:
        parser = make_parser()
    args = parser.parse_args(args=args, namespace=namespace)
    set_log_level(args)
    run, _ = run_toy(out_dir=args.out_dir, timestamps=args.timestamps)
    summary = run.summary()
    summary["outliers"] = run.sections["outliers"]
    print_format(summary, args.format, section="toy")
    return 0


if __name__ == "__main__":
    main()
