"""
YAML configuration of runs.

A configuration file can hold the following sections, all optional::

    simulate:       # fields of the synthetic panel generator
      n_firms: 500
      seed: 20240607
    ingest:         # column mapping and accepted year range of input panels
      columns:
        firm_id: company
      year_min: 2000
      year_max: 2030
      baseline_year: 2007
    ratios:         # additional ratios resolved by name
      - text: "lev = (STL + LTL) / (EQ)"
      - text: "bal = (STL + LTL) / (EQ)"
        kind: compositional
    sbp:            # named partitions, each balance becomes a compositional ratio '<name>1', '<name>2', ...
      w: "(EQ | (STL | LTL))"

String values are expanded with environment variables (``${VAR}``).
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple, Union, cast

import yaml
from schema import And, Or, Schema, SchemaError, Use

from ratiocoda.coda import SbpTree, parse_sbp
from ratiocoda.constants import DEFAULT_BASELINE_YEAR
from ratiocoda.ingest import CANONICAL_FIELDS, IngestConfig, IngestSchemaError
from ratiocoda.ratios import RatioKind, RatioSpec, RatioSpecError, balances_from_sbp, ratios_from_config
from ratiocoda.typedefs import ConfigDict, JSON
from ratiocoda.utils import RatioCodaError, get_logger, print_log, raise_log

LOGGER = get_logger(__name__)

CONFIG_SECTIONS = ("simulate", "ingest", "ratios", "sbp")

FieldValidators = Mapping[str, Union[Schema, type, Callable[[Any], Any]]]


class ConfigError(RatioCodaError, RuntimeError):
    """
    Generic error during configuration loading.
    """
    exit_code = 1


class ConfigFieldError(ConfigError):
    """
    Config error naming the offending field of a section.
    """


def _load_config(path_or_dict: Union[str, ConfigDict], section: str, allow_missing: bool = False) -> ConfigDict:
    """
    Loads a file path or dictionary as YAML/JSON configuration and returns its expanded section.
    """
    try:
        if isinstance(path_or_dict, str):
            with open(path_or_dict, "r", encoding="utf-8") as f:
                cfg = yaml.safe_load(f) or {}
        else:
            cfg = path_or_dict
        return _expand_all(cfg[section])
    except KeyError:
        msg = f"Config file section [{section!s}] not found."
        if allow_missing:
            print_log(msg, level=logging.DEBUG, logger=LOGGER)
            return {}
        raise_log(msg, exception=ConfigError, logger=LOGGER, section=section)
    except (OSError, TypeError, yaml.YAMLError) as exc:
        raise_log(f"Invalid config file [{exc!r}]", exception=ConfigError, logger=LOGGER)


def _expand_all(config: ConfigDict) -> ConfigDict:
    """
    Applies environment variable expansion recursively to all applicable fields of a configuration definition.
    """
    if isinstance(config, dict):
        for cfg in list(config):
            cfg_key = os.path.expandvars(cfg)
            if cfg_key != cfg:
                config[cfg_key] = config.pop(cfg)
            config[cfg_key] = _expand_all(cast(ConfigDict, config[cfg_key]))
    elif isinstance(config, (list, set)):
        for i, cfg in enumerate(config):
            config[i] = _expand_all(cfg)
    elif isinstance(config, str):
        config = os.path.expandvars(str(config))
    elif isinstance(config, (int, bool, float, type(None))):
        pass
    else:
        raise ConfigError(f"unknown parsing of config of type: {type(config)}")
    return config


def get_section(path_or_dict: Union[str, ConfigDict, None], section: str) -> Any:
    """
    Expanded section of a configuration file or mapping, empty when absent.
    """
    if not path_or_dict:
        return {}
    if isinstance(path_or_dict, str) and not os.path.isfile(path_or_dict):
        raise ConfigError(f"Configuration file [{path_or_dict}] not found.", path=path_or_dict)
    return _load_config(path_or_dict, section, allow_missing=True)


def validate_fields(section: str,
                    data: Any,
                    validators: FieldValidators,
                    required: Sequence[str] = (),
                    ) -> Dict[str, Any]:
    """
    Validates every entry of a configuration section against its own schema.

    Fields are checked one at a time so that the error names the offending field.

    :returns: section with converted values.
    :raises ConfigFieldError: for an unknown, missing or invalid field.
    """
    if not isinstance(data, dict):
        raise ConfigFieldError(f"Config section [{section}] must be a mapping.", field=section)
    for name in required:
        if name not in data:
            raise ConfigFieldError(f"Config section [{section}] requires field [{name}].", field=name)
    result = {}
    for name, value in data.items():
        if name not in validators:
            raise ConfigFieldError(f"Unknown field [{name}] in config section [{section}].", field=name)
        validator = validators[name]
        schema = validator if isinstance(validator, Schema) else Schema(validator)
        try:
            result[name] = schema.validate(value)
        except SchemaError as exc:
            raise ConfigFieldError(f"Invalid value [{value!r}] of field [{name}] in config section [{section}]: "
                                   f"{exc.code}", field=name) from exc
    return result


def validate_ingest_config_schema(ingest_cfg: Any) -> Tuple[IngestConfig, int]:
    """
    Validates the ``ingest`` section.

    :returns: ingestion configuration and baseline year of the design.
    """
    year = And(Use(int), lambda yr: 0 < yr < 10000)
    data = validate_fields("ingest", ingest_cfg, {
        "columns": Schema({Or(*CANONICAL_FIELDS): And(str, len)}),
        "year_min": year,
        "year_max": year,
        "baseline_year": year,
    })
    baseline = data.pop("baseline_year", DEFAULT_BASELINE_YEAR)
    try:
        return IngestConfig.from_mapping(data), baseline
    except IngestSchemaError as exc:
        raise ConfigFieldError(exc.message, field="ingest") from exc


def validate_ratios_config_schema(ratios_cfg: Any) -> List[RatioSpec]:
    """
    Validates the ``ratios`` section, a list of ratio text forms with optional kind.
    """
    schema = Schema([{"text": And(str, len), "kind": Or(*RatioKind.values())}], ignore_extra_keys=False)
    items = [dict(item, kind=item.get("kind", RatioKind.TRADITIONAL.value)) if isinstance(item, dict) else item
             for item in (ratios_cfg or [])]
    try:
        schema.validate(items)
        return ratios_from_config(items)
    except SchemaError as exc:
        raise ConfigFieldError(f"Invalid config section [ratios]: {exc.code}", field="ratios") from exc
    except RatioSpecError as exc:
        raise ConfigFieldError(exc.message, field="ratios") from exc


def validate_sbp_config_schema(sbp_cfg: Any) -> Dict[str, SbpTree]:
    """
    Validates the ``sbp`` section, partition texts indexed by name.
    """
    data = sbp_cfg or {}
    if not isinstance(data, dict):
        raise ConfigFieldError("Config section [sbp] must be a mapping.", field="sbp")
    trees = {}
    for name, text in data.items():
        if not isinstance(text, str):
            raise ConfigFieldError(f"Partition [{name}] must be given as text.", field=str(name))
        try:
            trees[str(name)] = parse_sbp(text)
        except RatioCodaError as exc:
            raise ConfigFieldError(f"Invalid partition [{name}]: {exc.message}", field=str(name)) from exc
    return trees


@dataclass(frozen=True)
class RunConfig:
    """
    Validated configuration sections, with the raw content kept to echo it in reports.
    """
    ingest: IngestConfig = field(default_factory=IngestConfig)
    baseline_year: int = DEFAULT_BASELINE_YEAR
    ratios: List[RatioSpec] = field(default_factory=list)
    sbp: Dict[str, SbpTree] = field(default_factory=dict)
    simulate: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def extra_ratios(self) -> List[RatioSpec]:
        """
        User ratios followed by the balances of every named partition.
        """
        extra = list(self.ratios)
        for name, tree in self.sbp.items():
            extra.extend(balances_from_sbp(tree, prefix=name))
        return extra

    def json(self) -> JSON:
        return cast(JSON, self.raw)


def load_config(path_or_dict: Union[str, ConfigDict, None]) -> RunConfig:
    """
    Loads and validates every known section of a configuration.

    :raises ConfigError: when the file cannot be read.
    :raises ConfigFieldError: when a section holds an invalid field.
    """
    if not path_or_dict:
        return RunConfig()
    raw = {section: get_section(path_or_dict, section) for section in CONFIG_SECTIONS}
    ingest, baseline = validate_ingest_config_schema(raw["ingest"] or {})
    config = RunConfig(
        ingest=ingest,
        baseline_year=baseline,
        ratios=validate_ratios_config_schema(raw["ratios"]),
        sbp=validate_sbp_config_schema(raw["sbp"]),
        simulate=raw["simulate"] or {},
        raw={section: value for section, value in raw.items() if value},
    )
    LOGGER.debug("Loaded configuration sections %s.", list(config.raw))
    return config
