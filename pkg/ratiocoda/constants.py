#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Constant settings for RatioCoDa.

Constants defined with format ``RATIOCODA_[VARIABLE_NAME]`` can be matched with corresponding
settings formatted as ``ratiocoda.[variable_name]`` in a settings mapping, or overridden by the
environment variable of the same name. Command line flags take precedence over both.

.. note::
    Values that mirror command line flags default to ``None`` at import so that the environment is
    looked up each time :func:`get_constant` is called, which lets a ``.env`` file loaded late by the
    CLI (see ``RATIOCODA_ENV_FILE``) still apply.
"""
import logging
import os
import re
from typing import Optional

from ratiocoda.typedefs import AnySettingsContainer, SettingValue
from ratiocoda.utils import asbool

# ===========================
# path variables
# ===========================
RATIOCODA_MODULE_DIR = os.path.abspath(os.path.dirname(__file__))
RATIOCODA_ROOT = os.path.dirname(RATIOCODA_MODULE_DIR)
RATIOCODA_ENV_FILE = os.getenv("RATIOCODA_ENV_FILE")

# ===========================
# logging
# ===========================
RATIOCODA_LOG_LEVEL = os.getenv("RATIOCODA_LOG_LEVEL", "INFO").upper()          # log level to apply to the loggers
RATIOCODA_LOG_PRINT = asbool(os.getenv("RATIOCODA_LOG_PRINT", False))          # log also forces print to the console

# ===========================
# command line mirrors
# ===========================
RATIOCODA_INPUT = None          # panel CSV file
RATIOCODA_SCHEME = None         # d3 | d4
RATIOCODA_RESPONSE = None       # ratio name, '-name' or 'name = (A + B) / (C)'
RATIOCODA_METHOD = None         # reml | ml
RATIOCODA_SEED = None           # simulation seed override
RATIOCODA_CONFIG = None         # YAML configuration file
RATIOCODA_COLUMNS = None        # column mapping file
RATIOCODA_OUT_DIR = None        # directory where artifacts are written
RATIOCODA_TIMESTAMPS = None     # embed timestamps in reports
RATIOCODA_JOBS = None           # concurrent model fits in compare

# ===========================
# numerical defaults
# ===========================
DEFAULT_SCHEME = "d3"
DEFAULT_METHOD = "reml"
DEFAULT_BASELINE_YEAR = 2007
DEFAULT_YEAR_MIN = 1900
DEFAULT_YEAR_MAX = 2100
TUKEY_MULTIPLIER = 1.5
CSV_FLOAT_FORMAT = "%.15g"

# ===========================
# constants
# ===========================

# ignore matches of settings and environment variables for following cases
RATIOCODA_CONSTANTS = [
    "RATIOCODA_CONSTANTS",
    "RATIOCODA_MODULE_DIR",
    "RATIOCODA_ROOT",
    "TUKEY_MULTIPLIER",
    "CSV_FLOAT_FORMAT",
]

# ===========================
# utilities
# ===========================

_REGEX_ASCII_ONLY = re.compile(r"\W|^(?=\d)")
_SETTING_SECTION_PREFIXES = [
    "ratiocoda",
]


def get_constant_setting_name(name: str) -> str:
    """
    Find the equivalent setting name of the provided environment variable name.

    Lower-case name and replace all non-ascii chars by `_`.
    Then, convert known prefixes with their dotted name.
    """
    name = re.sub(_REGEX_ASCII_ONLY, "_", name.strip().lower())
    for prefix in _SETTING_SECTION_PREFIXES:
        known_prefix = f"{prefix}_"
        dotted_prefix = f"{prefix}."
        if name.startswith(known_prefix):
            return name.replace(known_prefix, dotted_prefix, 1)
    return name


def get_constant(constant_name: str,
                 settings_container: AnySettingsContainer = None,
                 settings_name: Optional[str] = None,
                 default_value: Optional[SettingValue] = None,
                 raise_missing: bool = True,
                 print_missing: bool = False,
                 raise_not_set: bool = True
                 ) -> SettingValue:
    """
    Search in order for matched value of :paramref:`constant_name`:
      1. search in :py:data:`RATIOCODA_CONSTANTS`
      2. search in settings if specified
      3. search alternative setting names (see below)
      4. search in :mod:`ratiocoda.constants` definitions
      5. search in environment variables

    Parameter :paramref:`constant_name` is expected to have the format ``RATIOCODA_[VARIABLE_NAME]`` although any
    value can be passed to retrieve generic settings from all above-mentioned search locations.

    If :paramref:`settings_name` is provided as alternative name, it is used as is to search for results if
    :paramref:`constant_name` was not found. Otherwise, ``ratiocoda.[variable_name]`` is used for additional search
    when the format ``RATIOCODA_[VARIABLE_NAME]`` was used for :paramref:`constant_name`
    (i.e.: ``RATIOCODA_SEED`` will also search for ``ratiocoda.seed`` and so on for corresponding constants).

    :param constant_name: key to search for a value
    :param settings_container: settings mapping, if any
    :param settings_name: alternative name for `settings` if specified
    :param default_value: default value to be returned if not found anywhere, and exception raises are disabled.
    :param raise_missing: raise exception if key is not found anywhere
    :param print_missing: print message if key is not found anywhere, return ``None``
    :param raise_not_set: raise an exception if the found key is ``None``, search until last case if others are ``None``
    :returns: found value or `default_value`
    :raises ValueError: if resulting value is invalid based on options (by default raise missing/``None`` value)
    :raises LookupError: if no appropriate value could be found from all search locations (according to options)
    """
    from ratiocoda.utils import get_settings, print_log, raise_log  # pylint: disable=C0415  # avoid circular import

    if constant_name in RATIOCODA_CONSTANTS:
        return globals()[constant_name]
    missing = True
    found_value = None
    settings = get_settings(settings_container)
    if settings and constant_name in settings:  # pylint: disable=E1135
        missing = False
        found_value = settings.get(constant_name)
        if found_value is not None:
            print_log(f"Constant found in settings with: {constant_name}", level=logging.DEBUG)
            return found_value
    if not settings_name:
        settings_name = get_constant_setting_name(constant_name)
        print_log(f"Constant alternate search: {settings_name}", level=logging.DEBUG)
    if settings and settings_name and settings_name in settings:  # pylint: disable=E1135
        missing = False
        found_value = settings.get(settings_name)
        if found_value is not None:
            print_log(f"Constant found in settings with: {settings_name}", level=logging.DEBUG)
            return found_value
    module_globals = globals()
    if constant_name in module_globals:
        missing = False
        found_value = module_globals.get(constant_name)
        if found_value is not None:
            print_log(f"Constant found in definitions with: {constant_name}", level=logging.DEBUG)
            return found_value
    if constant_name in os.environ:
        missing = False
        found_value = os.environ.get(constant_name)
        if found_value is not None:
            print_log(f"Constant found in environment with: {constant_name}", level=logging.DEBUG)
            return found_value
    if missing and default_value is not None:
        return default_value
    if not missing and raise_not_set and default_value is None:
        raise_log(f"Constant was found but was not set: {constant_name}",
                  level=logging.ERROR, exception=ValueError)
    if missing and raise_missing:
        raise_log(f"Constant could not be found: {constant_name}",
                  level=logging.ERROR, exception=LookupError)
    if missing and print_missing:
        print_log(f"Constant could not be found: {constant_name} (using default: {default_value})", level=logging.WARN)
    return found_value if found_value is not None else default_value
