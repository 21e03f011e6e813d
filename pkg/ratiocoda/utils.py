#!/usr/bin/env python
# -*- coding: utf-8 -*-
import logging
import os
import sys
from configparser import ConfigParser
from enum import Enum
from inspect import isclass
from typing import IO, Any, List, NoReturn, Optional, Type, TypeVar, Union, cast

from ratiocoda import __meta__
from ratiocoda.typedefs import JSON, AnyKey, AnySettingsContainer, SettingsType

EnumClassType = TypeVar("EnumClassType", bound=Enum)  # pylint: disable=invalid-name

truthy = frozenset({"true", "yes", "on", "y", "t", "1"})


def asbool(value: Any) -> bool:
    """
    Converts common truthy representations (``"true"``, ``"yes"``, ``"on"``, ``"1"``, ...) to :class:`bool`.
    """
    if value is None:
        return False
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in truthy


def bool2str(value: Any) -> str:
    """
    Converts :paramref:`value` to explicit ``"true"`` or ``"false"`` :class:`str` with permissive variants comparison
    that can represent common falsy or truthy values.
    """
    return "true" if asbool(value) else "false"


class RatioCodaError(Exception):
    """
    Base of all errors raised by the package.

    Additional keyword details are kept and serialized along the message in the error payload.
    """
    exit_code: int = 2

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def json(self) -> JSON:
        payload: JSON = {"error": type(self).__name__, "message": self.message}
        payload.update({key: val for key, val in self.details.items() if val is not None})
        return payload


def get_logger(name: str,
               level: Optional[int] = None,
               force_stdout: bool = None,
               message_format: Optional[str] = None,
               datetime_format: Optional[str] = None,
               stream: Optional[IO[str]] = None,
               ) -> logging.Logger:
    """
    Immediately sets the logger level to avoid duplicate log outputs from the `root logger` and `this logger` when
    `level` is ``logging.NOTSET``.
    """
    logger = logging.getLogger(name)
    if logger.level == logging.NOTSET:
        # use package log level if it was explicitly set, otherwise use the configured constant
        level = level or logging.getLogger(__meta__.__package__).level
        if not level:
            # pylint: disable=C0415     # avoid circular import
            from ratiocoda.constants import RATIOCODA_LOG_LEVEL
            level = RATIOCODA_LOG_LEVEL
        logger.setLevel(level)
    if force_stdout or message_format or datetime_format or stream:
        set_logger_config(logger, force_stdout, message_format, datetime_format, stream)
    return logger


def set_logger_config(logger: logging.Logger,
                      force_stdout: bool = False,
                      message_format: Optional[str] = None,
                      datetime_format: Optional[str] = None,
                      stream: Optional[IO[str]] = None,
                      ) -> logging.Logger:
    """
    Applies the provided logging configuration settings to the logger.

    Console handlers write to :paramref:`stream` when provided, otherwise to ``stdout``.
    """
    if not logger:
        return logger
    stream = stream or sys.stdout
    handler = None
    if force_stdout:
        all_handlers = logging.root.handlers + logger.handlers
        if not any(isinstance(h, logging.StreamHandler) for h in all_handlers):
            handler = logging.StreamHandler(stream)
            logger.addHandler(handler)
    if not handler:
        if logger.handlers:
            handler = logger.handlers[0]
        else:
            handler = logging.StreamHandler(stream)
            logger.addHandler(handler)
    if message_format or datetime_format:
        handler.setFormatter(logging.Formatter(fmt=message_format, datefmt=datetime_format))
    return logger


def print_log(msg: str, logger: Optional[logging.Logger] = None, level: int = logging.INFO, **kwargs: Any) -> None:
    """
    Logs the requested message to the logger and optionally enforce printing to the console according to configuration
    value defined by ``RATIOCODA_LOG_PRINT``.
    """
    # pylint: disable=C0415     # cannot use 'get_constant', recursive call
    from ratiocoda.constants import RATIOCODA_LOG_PRINT

    if not logger:
        logger = get_logger(__name__)
    if RATIOCODA_LOG_PRINT:
        set_logger_config(logger, force_stdout=True)
    if logger.disabled:
        logger.disabled = False
    logger.log(level, msg, **kwargs)


def raise_log(msg: str,
              exception: Type[Exception] = Exception,
              logger: Optional[logging.Logger] = None,
              level: int = logging.ERROR,
              **details: Any) -> NoReturn:
    """
    Logs the provided message to the logger and raises the corresponding exception afterwards.

    Extra :paramref:`details` are forwarded to package errors so that they appear in their payload.

    :raises exception: whichever exception provided is raised systematically after logging.
    """
    if not logger:
        logger = get_logger(__name__)
    logger.log(level, msg)
    if not isclass(exception) or not issubclass(exception, Exception):
        exception = Exception
    if issubclass(exception, RatioCodaError):
        raise exception(msg, **details)
    raise exception(msg)  # pylint: disable=W0719


def get_settings(container: AnySettingsContainer) -> SettingsType:
    """
    Retrieve settings from a supported container.

    :raise TypeError: when the container is not a settings mapping.
    """
    if container is None:
        return {}
    if isinstance(container, dict):
        return container
    raise TypeError(f"Could not retrieve settings from container object [{type(container)}]")


def get_settings_from_config_ini(config_ini_path: str, section: Optional[str] = None) -> SettingsType:
    """
    Loads configuration INI settings with additional handling.

    Files made only of ``key = value`` lines without any section header are accepted. Their entries are read as if
    they were under :paramref:`section`.
    """
    if not os.path.isfile(config_ini_path):
        raise ValueError(f"Cannot find INI configuration file [{config_ini_path}]")
    if section is None:
        section = __meta__.__package__
    with open(config_ini_path, mode="r", encoding="utf-8") as ini_file:
        content = ini_file.read()
    parser = ConfigParser(interpolation=None)
    parser.optionxform = lambda option: option  # preserve case of config (default applies lowercase)
    stripped = [line.strip() for line in content.splitlines()]
    first = next((line for line in stripped if line and not line.startswith(("#", ";"))), "")
    if not first.startswith("["):
        content = f"[{section}]\n{content}"
    parser.read_string(content, source=config_ini_path)
    if not parser.has_section(section):
        raise ValueError(f"Section [{section}] not found in INI configuration file [{config_ini_path}]")
    return dict(parser.items(section=section))


def load_env_file(path: Optional[str]) -> bool:
    """
    Loads variables of a ``.env`` file into the environment without overriding already defined ones.

    :returns: whether a file was found and loaded.
    """
    if not path:
        return False
    if not os.path.isfile(path):
        get_logger(__name__).warning("Environment file [%s] not found, ignored.", path)
        return False
    from dotenv import load_dotenv  # pylint: disable=C0415  # optional at import time of the package

    return bool(load_dotenv(path, override=False))


# note: must not define any enum value here to allow inheritance by subclasses
class ExtendedEnum(Enum):
    """
    Utility :class:`enum.Enum` methods.

    Create an extended enum with these utilities as follows::

        class CustomEnum(ExtendedEnum):
            ItemA = "A"
            ItemB = "B"
    """

    @classmethod
    def names(cls) -> List[str]:
        """
        Returns the member names assigned to corresponding enum elements.
        """
        return list(cls.__members__)

    @classmethod
    def values(cls) -> List[AnyKey]:
        """
        Returns the literal values assigned to corresponding enum elements.
        """
        return [m.value for m in cls.__members__.values()]                      # pylint: disable=E1101

    @classmethod
    def get(cls: Type[EnumClassType],
            key_or_value: Union[AnyKey, EnumClassType],
            default: Optional[Any] = None,
            ) -> Optional[EnumClassType]:
        """
        Finds an enum entry by defined name or its value, ignoring the case of strings.

        Returns the entry directly if it is already a valid enum.
        """
        members: List[EnumClassType] = [member for member in cls]
        if key_or_value in members:                                             # pylint: disable=E1133
            return cast(EnumClassType, key_or_value)
        fuzzy = key_or_value.strip().lower() if isinstance(key_or_value, str) else key_or_value
        for m_key, m_val in cls.__members__.items():                            # pylint: disable=E1101
            m_value = m_val.value.lower() if isinstance(m_val.value, str) else m_val.value
            if fuzzy in (m_key.lower(), m_value):
                return m_val
        return default
