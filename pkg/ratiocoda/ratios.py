"""
Catalog and evaluation of traditional accounting ratios and of their compositional counterparts.

A traditional ratio divides the sum of its numerator parts by the sum of its denominator parts. A compositional ratio
is the balance of the same two groups of parts. Permuting a ratio swaps both groups, which takes the reciprocal of a
traditional ratio and negates a compositional one.

Ratios have the text form ``name = (A + B) / (C)`` where parentheses around single labels are optional.
"""
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ratiocoda.coda import (
    CA,
    EQ,
    FA,
    LTL,
    STL,
    Composition,
    DomainError,
    LabelLookupError,
    SbpTree,
    balance,
    d3_sbp,
    d4_sbp
)
from ratiocoda.typedefs import JSON, RatioConfig, SchemeName
from ratiocoda.utils import ExtendedEnum, RatioCodaError, get_logger

LOGGER = get_logger(__name__)

PERMUTED_SUFFIX = "_p"


class RatioSpecError(RatioCodaError, ValueError):
    """
    Invalid ratio declaration or text form.
    """


class UnknownRatioError(LabelLookupError):
    """
    Response name resolving to no ratio of the scheme, a usage error of the command line.
    """
    exit_code = 1


class RatioKind(ExtendedEnum):
    TRADITIONAL = "traditional"
    COMPOSITIONAL = "compositional"


class Scheme(ExtendedEnum):
    D3 = "d3"
    D4 = "d4"


@dataclass(frozen=True)
class RatioSpec:
    name: str
    numerator: Tuple[str, ...]
    denominator: Tuple[str, ...]
    kind: RatioKind = RatioKind.TRADITIONAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        kind = RatioKind.get(self.kind)
        if kind is None:
            raise RatioSpecError(f"Unknown ratio kind [{self.kind}] for ratio [{self.name}].", ratio=self.name)
        object.__setattr__(self, "kind", kind)
        if not self.name:
            raise RatioSpecError("Ratio requires a name.")
        if not self.numerator or not self.denominator:
            raise RatioSpecError(f"Ratio [{self.name}] requires nonempty numerator and denominator.", ratio=self.name)
        if set(self.numerator) & set(self.denominator):
            raise RatioSpecError(f"Ratio [{self.name}] numerator and denominator must be disjoint.", ratio=self.name)
        if len(set(self.numerator)) != len(self.numerator) or len(set(self.denominator)) != len(self.denominator):
            raise RatioSpecError(f"Ratio [{self.name}] repeats a part label.", ratio=self.name)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.numerator + self.denominator

    @property
    def is_compositional(self) -> bool:
        return self.kind == RatioKind.COMPOSITIONAL

    def json(self) -> JSON:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "numerator": list(self.numerator),
            "denominator": list(self.denominator),
            "text": format_ratio(self),
        }


def evaluate(spec: RatioSpec, x: Composition) -> float:
    """
    Value of the ratio on a single composition.

    :raises LabelLookupError: when the ratio refers to a part absent from the composition.
    """
    if spec.is_compositional:
        return balance(x, spec.numerator, spec.denominator)
    numerator = math.fsum(x.select(spec.numerator))
    denominator = math.fsum(x.select(spec.denominator))
    return numerator / denominator


def evaluate_frame(spec: RatioSpec, frame: pd.DataFrame) -> pd.Series:
    """
    Value of the ratio on every row of a frame holding one column per part label.
    """
    missing = [label for label in spec.labels if label not in frame.columns]
    if missing:
        raise LabelLookupError(f"Ratio [{spec.name}] requires missing part columns {missing}.", label=missing[0])
    parts = frame.loc[:, list(spec.labels)].to_numpy(dtype=float)
    invalid = np.flatnonzero(~(np.isfinite(parts) & (parts > 0)).all(axis=1))
    if invalid.size:
        index = int(invalid[0])
        raise DomainError(f"Ratio [{spec.name}] got a non-positive part on row {index}.", index=index)
    num = parts[:, :len(spec.numerator)]
    den = parts[:, len(spec.numerator):]
    if spec.is_compositional:
        r, s = len(spec.numerator), len(spec.denominator)
        values = math.sqrt(r * s / (r + s)) * (np.log(num).mean(axis=1) - np.log(den).mean(axis=1))
    else:
        values = num.sum(axis=1) / den.sum(axis=1)
    return pd.Series(values, index=frame.index, name=spec.name)


def permute(spec: RatioSpec) -> RatioSpec:
    """
    Swaps numerator and denominator, suffixing the name with ``_p``.
    """
    return RatioSpec(f"{spec.name}{PERMUTED_SUFFIX}", spec.denominator, spec.numerator, spec.kind)


def negate(spec: RatioSpec) -> RatioSpec:
    """
    Sign reversal of a compositional ratio, which is its permutation.
    """
    if not spec.is_compositional:
        raise RatioSpecError(f"Only compositional ratios can be negated, [{spec.name}] is traditional.",
                             ratio=spec.name)
    return permute(spec)


_GROUP = r"\(?\s*[\w.-]+(?:\s*\+\s*[\w.-]+)*\s*\)?"
_RATIO_TEXT = re.compile(rf"^\s*(?P<name>[\w.-]+)\s*=\s*(?P<num>{_GROUP})\s*/\s*(?P<den>{_GROUP})\s*$")


def _split_group(text: str) -> Tuple[str, ...]:
    text = text.strip()
    if text.startswith("(") != text.endswith(")"):
        raise RatioSpecError(f"Unbalanced parentheses in ratio group [{text}].")
    return tuple(label.strip() for label in text.strip("()").split("+"))


def parse_ratio(text: str, kind: Union[RatioKind, str] = RatioKind.TRADITIONAL) -> RatioSpec:
    """
    Parses ``name = (A + B) / (C)`` into a ratio of the given kind.
    """
    match = _RATIO_TEXT.match(text or "")
    if not match:
        raise RatioSpecError(f"Invalid ratio definition [{text}], expected 'name = (A + B) / (C)'.")
    return RatioSpec(match["name"], _split_group(match["num"]), _split_group(match["den"]), kind)


def format_ratio(spec: RatioSpec) -> str:
    num = " + ".join(spec.numerator)
    den = " + ".join(spec.denominator)
    return f"{spec.name} = ({num}) / ({den})"


def balances_from_sbp(sbp: SbpTree, prefix: str = "z") -> List[RatioSpec]:
    """
    One compositional ratio per partition node, named ``<prefix>1``, ``<prefix>2``, ... in pre-order.
    """
    return [
        RatioSpec(f"{prefix}{index}", node.numerator, node.denominator, RatioKind.COMPOSITIONAL)
        for index, node in enumerate(sbp.nodes, start=1)
    ]


def _d3_catalog() -> List[RatioSpec]:
    z1, z2 = balances_from_sbp(d3_sbp())
    r1 = RatioSpec("r1", (STL, ), (LTL, EQ))    # financial stability
    r2 = RatioSpec("r2", (LTL, ), (EQ, ))       # long-term indebtedness
    return [z1, r1, permute(r1), z2, r2, permute(r2)]


def _d4_catalog() -> List[RatioSpec]:
    z1, z2, z3 = balances_from_sbp(d4_sbp())
    r1 = RatioSpec("r1", (LTL, STL), (FA, CA))  # indebtedness
    r2 = RatioSpec("r2", (LTL, ), (STL, ))      # debt maturity
    r3 = RatioSpec("r3", (FA, ), (CA, ))        # asset tangibility
    return [z1, z2, z3, r1, permute(r1), r2, r3]


def default_catalog(scheme: Optional[Union[Scheme, SchemeName]] = None) -> List[RatioSpec]:
    """
    Named ratios of the balance-sheet compositions.

    With three parts (STL, LTL, EQ) the order is ``z1, r1, r1_p, z2, r2, r2_p``. With four parts (LTL, STL, FA, CA)
    the order is ``z1, z2, z3, r1, r1_p, r2, r3``. Without a scheme, both sets are returned, three parts first.
    """
    if scheme is None:
        return _d3_catalog() + _d4_catalog()
    found = Scheme.get(scheme)
    if found is None:
        raise RatioSpecError(f"Unknown composition scheme [{scheme}], expected one of {Scheme.values()}.")
    return _d3_catalog() if found == Scheme.D3 else _d4_catalog()


def catalog(scheme: Union[Scheme, SchemeName], extra: Sequence[RatioSpec] = ()) -> Dict[str, RatioSpec]:
    """
    Ratios of the scheme indexed by name, followed by :paramref:`extra` user-defined ratios.
    """
    ratios = {spec.name: spec for spec in default_catalog(scheme)}
    for spec in extra:
        if spec.name in ratios and ratios[spec.name] != spec:
            LOGGER.warning("User ratio [%s] overrides the catalog definition.", spec.name)
        ratios[spec.name] = spec
    return ratios


def get_ratio(name: str,
              scheme: Union[Scheme, SchemeName],
              extra: Sequence[RatioSpec] = (),
              ) -> RatioSpec:
    """
    Resolves a response definition: a catalog name, ``-name`` for the sign reversal of a compositional ratio, a
    ``name_p`` permutation of any catalog ratio, or a full ``name = (A + B) / (C)`` traditional definition.

    :raises UnknownRatioError: when the name is not known.
    """
    name = (name or "").strip()
    if "=" in name:
        return parse_ratio(name)
    ratios = catalog(scheme, extra)
    if name.startswith("-"):
        return negate(get_ratio(name[1:], scheme, extra))
    if name in ratios:
        return ratios[name]
    if name.endswith(PERMUTED_SUFFIX) and name[:-len(PERMUTED_SUFFIX)] in ratios:
        return permute(ratios[name[:-len(PERMUTED_SUFFIX)]])
    raise UnknownRatioError(f"Unknown ratio [{name}] for scheme [{Scheme.get(scheme).value}], "
                            f"known ratios are {list(ratios)}.", label=name)


def ratios_from_config(definitions: Sequence[RatioConfig]) -> List[RatioSpec]:
    """
    Ratios declared in the ``ratios`` section of a configuration.
    """
    return [parse_ratio(item["text"], item.get("kind", RatioKind.TRADITIONAL)) for item in definitions]
