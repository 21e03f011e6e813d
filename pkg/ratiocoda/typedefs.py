#!/usr/bin/env python
"""
Additional typing definitions.
"""

from typing import Dict, List, Literal, MutableMapping, MutableSequence, Optional, Tuple, TypedDict, Union
from typing_extensions import NotRequired, TypeAlias

Number = Union[int, float]
SettingValue = Union[str, Number, bool, None]
SettingsType = Dict[str, SettingValue]
AnySettingsContainer = Optional[SettingsType]

# pylint: disable=C0103,invalid-name
ValueType = Union[str, Number, bool]
AnyValueType = Optional[ValueType]
AnyKey = Union[str, int]
# add more levels of explicit definitions than necessary to simulate JSON recursive structure better than 'Any'
# amount of repeated equivalent definition makes typing analysis 'work well enough' for most use cases
_JSON: TypeAlias = "JSON"
_JsonObjectItemAlias: TypeAlias = "_JsonObjectItem"
_JsonListItemAlias: TypeAlias = "_JsonListItem"
_JsonObjectItem = MutableMapping[str, Union[_JSON, _JsonObjectItemAlias, _JsonListItemAlias, AnyValueType]]
_JsonListItem = MutableSequence[Union[_JsonObjectItem, _JsonListItemAlias, AnyValueType]]
_JsonItem = Union[_JsonObjectItem, _JsonListItem, AnyValueType]
JSON = Union[MutableMapping[str, _JsonItem], MutableSequence[_JsonItem], AnyValueType]

# firm-year identity of a panel row, used to report outliers and diagnostics by row rather than by value
RowKey = Tuple[str, int]

SchemeName = Literal["d3", "d4"]
MethodName = Literal["reml", "ml"]

# registered configurations
ConfigItem = Dict[str, JSON]
ConfigDict = Dict[str, Union[str, ConfigItem, List[ConfigItem], JSON]]

RatioConfig = TypedDict(
    "RatioConfig",
    {
        "text": str,
        "kind": NotRequired[Literal["traditional", "compositional"]],
    },
    total=True,
)

BoxplotJSON = TypedDict(
    "BoxplotJSON",
    {
        "n": int,
        "q1": float,
        "median": float,
        "q3": float,
        "lower_fence": float,
        "upper_fence": float,
        "whisker_low": float,
        "whisker_high": float,
        "outlier_indices": List[int],
        "outlier_keys": NotRequired[List[JSON]],
    },
    total=True,
)

WaldRowJSON = TypedDict(
    "WaldRowJSON",
    {
        "term": str,
        "coefficient": float,
        "se": float,
        "z": float,
        "p_value": float,
    },
    total=True,
)
