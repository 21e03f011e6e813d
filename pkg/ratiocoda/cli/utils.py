import argparse
import logging
import sys
from typing import Any, Callable, Iterable, List, Literal, NoReturn, Optional, Sequence, TypedDict, Union
from typing_extensions import NotRequired

import simplejson
import yaml

from ratiocoda.constants import DEFAULT_METHOD, DEFAULT_SCHEME, get_constant
from ratiocoda.typedefs import JSON
from ratiocoda.utils import RatioCodaError, asbool, load_env_file

CommandPrefixes = Optional[Iterable[str]]
SharedParsers = Optional[Iterable[argparse.ArgumentParser]]
ParsedArgs = Optional[argparse.Namespace]
ParserArgs = Optional[Sequence[str]]
HelperParser = Optional[argparse.ArgumentParser]
ParseResult = int
ParserMaker = Callable[[SharedParsers, CommandPrefixes], argparse.ArgumentParser]
ParserRunner = Callable[[ParserArgs, HelperParser, ParsedArgs], ParseResult]
SubParserArgs = TypedDict(
    "SubParserArgs",
    {
        "help": str,
        "description": str,
        "usage": NotRequired[str],
    },
    total=True,
)
PrintFormat = Literal["json", "yaml", "table"]

EXIT_SUCCESS = 0
EXIT_USAGE = 1


class HelperArgumentParser(argparse.ArgumentParser):
    """
    Argument parser reporting usage errors with the usage exit code of the command line.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def subparser_help(description: str, parent_parser: Optional[argparse.ArgumentParser] = None) -> SubParserArgs:
    """
    Generates both fields with the same description as each parameter is used in different context.

    Field ``help`` is printed next to the subparser name when *parent parser* is called with ``--help``.
    Field ``description`` populates the help details under the usage command when calling *child parser* ``--help``.
    """
    desc: SubParserArgs = {"help": description, "description": description}
    if parent_parser:
        desc.update({"usage": parent_parser.usage})
    return desc


def _constant(name: str, default: Any = None) -> Any:
    return get_constant(name, raise_missing=False, raise_not_set=False, default_value=default)


def preload_env_file(args: Optional[Sequence[str]]) -> Optional[str]:
    """
    Loads the ``.env`` file named by ``--env-file`` or ``RATIOCODA_ENV_FILE`` before flag defaults are resolved.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--env-file", default=None)
    known, _ = pre.parse_known_args(list(args or []))
    path = known.env_file or _constant("RATIOCODA_ENV_FILE")
    if path:
        load_env_file(path)
    return path


def get_env_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--env-file", help="Environment file loaded before resolving the other settings.")
    return parser


def get_config_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-c", "--config", help="YAML configuration file to employ.",
                        default=_constant("RATIOCODA_CONFIG"))
    return parser


def get_input_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    default = _constant("RATIOCODA_INPUT")
    parser.add_argument("-i", "--input", required=default is None, default=default, help="Panel CSV file.")
    parser.add_argument("--columns", default=_constant("RATIOCODA_COLUMNS"),
                        help="Column mapping file of 'field = column' lines.")
    parser.add_argument("-s", "--scheme", choices=["d3", "d4"], type=str.lower,
                        default=str(_constant("RATIOCODA_SCHEME", DEFAULT_SCHEME)).lower(),
                        help="Composition scheme of the ratios (default: %(default)s).")
    return parser


def get_method_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_mutually_exclusive_group()
    default = str(_constant("RATIOCODA_METHOD", DEFAULT_METHOD)).lower()
    group.add_argument("--reml", dest="method", action="store_const", const="reml",
                       help="Estimate variance components by restricted maximum likelihood (default).")
    group.add_argument("--ml", dest="method", action="store_const", const="ml",
                       help="Estimate variance components by maximum likelihood.")
    parser.set_defaults(method=default)
    return parser


def get_output_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-o", "--out-dir", default=_constant("RATIOCODA_OUT_DIR", "."),
                        help="Directory where files are written (default: %(default)s).")
    parser.add_argument("--timestamps", action="store_true", default=asbool(_constant("RATIOCODA_TIMESTAMPS")),
                        help="Embed the time of the run in the reports.")
    return parser


def get_logger_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_mutually_exclusive_group()
    group.add_argument("-q", "--quiet", action="store_true", help="Suppress informative logging.")
    group.add_argument("-d", "--debug", action="store_true", help="Set debug logging level.")
    group.add_argument("-l", "--level", choices=["debug", "info", "warn", "error"], default="info")
    return parser


def set_log_level(args: argparse.Namespace, logger: Optional[logging.Logger] = None) -> None:
    from ratiocoda.cli import LOGGER  # pylint: disable=C0415

    logger = logger or LOGGER
    if args.quiet:
        level = logging.ERROR
    elif args.debug:
        level = logging.DEBUG
    elif args.level:
        level = logging.getLevelName("WARNING" if args.level == "warn" else args.level.upper())
    else:
        level = logging.INFO
    logger.setLevel(level)
    for name, item in list(logging.root.manager.loggerDict.items()):
        if name.startswith(f"{logger.name}.") and isinstance(item, logging.Logger):
            item.setLevel(level)


def get_format_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-f", "--format", choices=["json", "table", "yaml"], default="json",
                        help="Output format of the summary printed on the console.")
    return parser


def _cell(value: Any) -> str:
    if isinstance(value, (dict, list)):
        return simplejson.dumps(value, ignore_nan=True)
    return str(value)


def print_format(data: JSON, fmt: PrintFormat, section: Optional[str] = None) -> None:
    if fmt == "yaml":
        if section:
            data = {section: data}
        print(yaml.safe_dump(data, allow_unicode=True, indent=2, sort_keys=False))
    elif fmt == "json":
        if section:
            data = {section: data}
        print(simplejson.dumps(data, indent=4, ensure_ascii=False, ignore_nan=True))
    elif fmt == "table":
        if isinstance(data, dict):
            rows = [(str(field), _cell(value)) for field, value in data.items()]
            widths = [max([8] + [len(row[0]) for row in rows]), max([8] + [len(row[1]) for row in rows])]
            separator = "+" + "-" * (widths[0] + 2) + "+" + "-" * (widths[1] + 2) + "+"
            print(separator)
            print(f"| {'Fields'.ljust(widths[0])} | {'Values'.ljust(widths[1])} |")
            print(separator.replace("-", "="))
            for field, value in rows:
                print(f"| {field.ljust(widths[0])} | {value.ljust(widths[1])} |")
            print(separator)
        elif isinstance(data, (list, set, tuple)):
            items = [_cell(item) for item in data]
            width = max([8, len(section or "")] + [len(item) for item in items])
            separator = "+" + "-" * (width + 2) + "+"
            print(separator)
            if section:
                print(f"| {section.ljust(width)} |")
                print(separator.replace("-", "="))
            for item in items:
                print(f"| {item.ljust(width)} |")
            print(separator)
        else:
            raise ValueError(f"cannot format '{data!s}' as [{fmt}]")
    else:
        raise ValueError(f"unknown format [{fmt}]")


def print_error(exc: Union[RatioCodaError, Exception]) -> int:
    """
    Writes the error payload as JSON on ``stderr`` and returns the exit code matching the error category.
    """
    if isinstance(exc, RatioCodaError):
        payload, code = exc.json(), exc.exit_code
    else:
        payload, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_USAGE
    sys.stderr.write(simplejson.dumps(payload, ignore_nan=True, default=str))
    sys.stderr.write("\n")
    return code


def make_helper_parser(name: str,
                       description: str,
                       shared_parsers: SharedParsers,
                       prefixes: CommandPrefixes,
                       extra_parents: List[argparse.ArgumentParser],
                       ) -> argparse.ArgumentParser:
    parents = list(shared_parsers or []) + [get_env_parser()] + extra_parents + [get_format_parser()]
    prog = " ".join(prefix for prefix in list(prefixes or []) + [name] if prefix)
    return HelperArgumentParser(description=description, prog=prog, parents=parents)
