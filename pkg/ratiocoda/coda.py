"""
Compositional geometry of balance-sheet parts.

Compositions are strictly positive vectors that only carry relative information. Balances (isometric log-ratio
coordinates) are obtained from a sequential binary partition (SBP) of the part labels, written in text form as nested
parenthesized pairs such as ``(STL | (LTL | EQ))``. Balance coordinates are numbered by the pre-order traversal of
the partition nodes.

All logarithms are natural logarithms and every computation is carried in log space.
"""
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ratiocoda.typedefs import JSON
from ratiocoda.utils import RatioCodaError, get_logger

LOGGER = get_logger(__name__)

# canonical part labels of the balance-sheet compositions
STL = "STL"     # short-term liabilities
LTL = "LTL"     # long-term liabilities
EQ = "EQ"       # shareholders' equity
FA = "FA"       # fixed assets
CA = "CA"       # current assets

D3_LABELS = (STL, LTL, EQ)
D4_LABELS = (LTL, STL, FA, CA)
D3_SBP_TEXT = f"({STL} | ({LTL} | {EQ}))"
D4_SBP_TEXT = f"(({LTL} | {STL}) | ({FA} | {CA}))"

# digits kept by the decimal evaluation of geometric means, well beyond double precision
_GEOMEAN_PRECISION = 40

AnyPartValues = Union[Sequence[float], np.ndarray]


class CompositionError(RatioCodaError, ValueError):
    """
    Invalid composition structure (length, labels or alignment of parts and labels).
    """


class DomainError(RatioCodaError, ValueError):
    """
    Value outside the strictly positive and finite domain of compositional parts.
    """


class PartitionError(RatioCodaError, ValueError):
    """
    Invalid sequential binary partition, either from its text form or its node structure.
    """


class GroupSpecError(RatioCodaError, ValueError):
    """
    Empty or overlapping numerator and denominator groups of a balance.
    """


class LabelLookupError(RatioCodaError, LookupError):
    """
    Part label that cannot be found in the composition or partition it is requested from.
    """


def _check_positive(values: np.ndarray, what: str) -> None:
    invalid = np.flatnonzero(~(np.isfinite(values) & (values > 0)))
    if invalid.size:
        index = int(invalid[0])
        raise DomainError(f"{what} requires strictly positive and finite values, "
                          f"got [{values[index]!r}] at index [{index}].", index=index)


@dataclass(frozen=True)
class Composition:
    """
    Strictly positive parts aligned with unique labels.
    """
    parts: Tuple[float, ...]
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(float(part) for part in self.parts))
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        if len(self.parts) != len(self.labels):
            raise CompositionError(f"Composition has {len(self.parts)} parts for {len(self.labels)} labels.")
        if len(self.parts) < 2:
            raise CompositionError("Composition requires at least 2 parts.")
        if len(set(self.labels)) != len(self.labels):
            raise CompositionError(f"Composition labels must be unique, got {list(self.labels)}.")
        for index, part in enumerate(self.parts):
            if not (math.isfinite(part) and part > 0):
                raise DomainError(f"Composition part [{self.labels[index]}] must be strictly positive and finite, "
                                  f"got [{part!r}].", index=index, label=self.labels[index])

    @classmethod
    def from_mapping(cls, parts: Mapping[str, float]) -> "Composition":
        return cls(tuple(parts.values()), tuple(parts.keys()))

    @property
    def size(self) -> int:
        return len(self.parts)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.parts, dtype=float)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelLookupError(f"Unknown part label [{label}], composition has {list(self.labels)}.",
                                   label=label) from None

    def select(self, labels: Iterable[str]) -> np.ndarray:
        return np.asarray([self.parts[self.index(label)] for label in labels], dtype=float)

    def scale(self, factor: float) -> "Composition":
        return Composition(tuple(part * factor for part in self.parts), self.labels)

    def json(self) -> JSON:
        return dict(zip(self.labels, self.parts))


@dataclass(frozen=True)
class BalanceVector:
    """
    Balance coordinates of a composition, one value per partition node.
    """
    values: Tuple[float, ...]
    coordinate_names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(val) for val in self.values))
        if not self.coordinate_names:
            names = tuple(f"z{idx}" for idx in range(1, len(self.values) + 1))
            object.__setattr__(self, "coordinate_names", names)
        if len(self.coordinate_names) != len(self.values):
            raise CompositionError("Balance coordinate names must align with values.")
        if not all(math.isfinite(val) for val in self.values):
            raise DomainError(f"Balance coordinates must be finite, got {list(self.values)}.")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> float:
        return self.values[index]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def json(self) -> JSON:
        return dict(zip(self.coordinate_names, self.values))


@dataclass(frozen=True)
class SbpNode:
    """
    Internal partition node splitting its group of labels into a numerator and a denominator group.
    """
    numerator: Tuple[str, ...]
    denominator: Tuple[str, ...]

    @property
    def group(self) -> Tuple[str, ...]:
        return self.numerator + self.denominator

    @property
    def name(self) -> str:
        return f"{'.'.join(self.numerator)}|{'.'.join(self.denominator)}"

    @property
    def scale(self) -> float:
        r, s = len(self.numerator), len(self.denominator)
        return math.sqrt(r * s / (r + s))


@dataclass(frozen=True)
class SbpTree:
    """
    Sequential binary partition stored as its internal nodes in pre-order.

    Leaves are implicit: they are the single labels left once all nodes are applied.
    """
    nodes: Tuple[SbpNode, ...]
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise PartitionError("Partition requires at least one node.", node=0)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(self.nodes[0].group))
        object.__setattr__(self, "labels", tuple(self.labels))
        validate_sbp(self)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def coordinate_names(self) -> Tuple[str, ...]:
        return tuple(node.name for node in self.nodes)

    def __str__(self) -> str:
        return format_sbp(self)


def validate_sbp(sbp: SbpTree) -> None:
    """
    Verifies that the nodes of the partition split the labels recursively down to single labels.

    :raises PartitionError: naming the 1-based index of the first node violating the structure.
    """
    labels = list(sbp.labels)
    if len(set(labels)) != len(labels):
        raise PartitionError(f"Partition labels must be unique, got {labels}.", node=None)
    if len(labels) < 2:
        raise PartitionError("Partition requires at least 2 labels.", node=None)
    pending: List[Tuple[str, ...]] = [tuple(labels)]
    for index, node in enumerate(sbp.nodes, start=1):
        if not pending:
            raise PartitionError(f"Partition node {index} [{node.name}] has no group left to split.", node=index)
        group = pending.pop()
        if not node.numerator or not node.denominator:
            raise PartitionError(f"Partition node {index} [{node.name}] has an empty side.", node=index)
        if set(node.numerator) & set(node.denominator):
            raise PartitionError(f"Partition node {index} [{node.name}] has overlapping sides.", node=index)
        if len(node.group) != len(set(node.group)) or set(node.group) != set(group):
            raise PartitionError(f"Partition node {index} [{node.name}] does not split group "
                                 f"[{'.'.join(group)}] in pre-order.", node=index)
        # pushed in reverse so that the numerator subtree is visited first
        if len(node.denominator) > 1:
            pending.append(node.denominator)
        if len(node.numerator) > 1:
            pending.append(node.numerator)
    if pending:
        raise PartitionError(f"Partition leaves group [{'.'.join(pending[-1])}] unsplit, "
                             f"{len(labels) - 1} nodes are required.", node=len(sbp.nodes) + 1)


_SBP_TOKEN = re.compile(r"\s*(?:(?P<sym>[()|])|(?P<label>[^\s()|]+))")


def _tokenize_sbp(text: str) -> List[str]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = _SBP_TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise PartitionError(f"Unexpected character at position {pos} of partition [{text}].", position=pos)
        tokens.append(match.group("sym") or match.group("label"))
        pos = match.end()
    return tokens


def parse_sbp(text: str, labels: Optional[Sequence[str]] = None) -> SbpTree:
    """
    Parses the text form of a partition, e.g. ``(STL | (LTL | EQ))``.

    Every pair is ``(left | right)`` where each side is either a single label or another pair. The left side is the
    numerator group of the balance defined by the pair.

    :param text: partition definition.
    :param labels: expected labels, the parsed partition must cover exactly this set.
    :raises PartitionError: on malformed text, duplicate labels or label set mismatch.
    """
    tokens = _tokenize_sbp(text)
    nodes: List[Optional[SbpNode]] = []
    position = 0

    def expect(token: str) -> None:
        nonlocal position
        if position >= len(tokens) or tokens[position] != token:
            found = tokens[position] if position < len(tokens) else "end of text"
            raise PartitionError(f"Expected [{token}] but found [{found}] in partition [{text}].", position=position)
        position += 1

    def group() -> Tuple[str, ...]:
        nonlocal position
        if position >= len(tokens):
            raise PartitionError(f"Unexpected end of partition [{text}].", position=position)
        token = tokens[position]
        if token == "(":
            position += 1
            slot = len(nodes)
            nodes.append(None)  # reserve pre-order slot before visiting children
            left = group()
            expect("|")
            right = group()
            expect(")")
            nodes[slot] = SbpNode(left, right)
            return left + right
        if token in ("|", ")"):
            raise PartitionError(f"Unexpected [{token}] in partition [{text}].", position=position)
        position += 1
        return (token, )

    root = group()
    if position != len(tokens):
        raise PartitionError(f"Trailing content after partition root in [{text}].", position=position)
    if len(root) != len(set(root)):
        raise PartitionError(f"Duplicate labels in partition [{text}].", node=None)
    if labels is not None and set(labels) != set(root):
        raise PartitionError(f"Partition labels {sorted(root)} do not match expected labels {sorted(labels)}.",
                             node=None)
    return SbpTree(tuple(node for node in nodes if node is not None), root)


def format_sbp(sbp: SbpTree) -> str:
    """
    Canonical text form of a partition, parsed back by :func:`parse_sbp` to the same partition.
    """
    nodes = sbp.nodes

    def render(index: int) -> Tuple[str, int]:
        node = nodes[index]
        index += 1
        sides = []
        for side in (node.numerator, node.denominator):
            if len(side) == 1:
                sides.append(side[0])
            else:
                text, index = render(index)
                sides.append(text)
        return f"({sides[0]} | {sides[1]})", index

    return render(0)[0]


def sign_matrix(sbp: SbpTree, labels: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Tabular partition codes: ``+1`` for numerator parts, ``-1`` for denominator parts, ``0`` otherwise.
    """
    columns = _column_index(sbp, labels)
    codes = np.zeros((len(sbp.nodes), len(columns)), dtype=int)
    for row, node in enumerate(sbp.nodes):
        codes[row, [columns[label] for label in node.numerator]] = 1
        codes[row, [columns[label] for label in node.denominator]] = -1
    return codes


def _column_index(sbp: SbpTree, labels: Optional[Sequence[str]]) -> Dict[str, int]:
    labels = list(sbp.labels if labels is None else labels)
    if set(labels) != set(sbp.labels) or len(labels) != len(sbp.labels):
        unknown = sorted(set(labels) ^ set(sbp.labels))
        raise LabelLookupError(f"Labels {labels} do not match partition labels {list(sbp.labels)}.",
                               label=unknown[0] if unknown else None)
    return {label: idx for idx, label in enumerate(labels)}


def contrast_matrix(sbp: SbpTree, labels: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Log-contrast weights of every balance of the partition, one row per node and one column per label.

    Numerator parts get ``+sqrt(rs/(r+s))/r`` and denominator parts ``-sqrt(rs/(r+s))/s``, so that rows are
    orthonormal and sum to zero.
    """
    codes = sign_matrix(sbp, labels)
    matrix = np.zeros(codes.shape, dtype=float)
    for row, node in enumerate(sbp.nodes):
        matrix[row, codes[row] > 0] = node.scale / len(node.numerator)
        matrix[row, codes[row] < 0] = -node.scale / len(node.denominator)
    return matrix


def closure(x: Composition) -> Composition:
    """
    Normalizes the composition to unit sum.
    """
    total = math.fsum(x.parts)
    return Composition(tuple(part / total for part in x.parts), x.labels)


def geometric_mean(values: AnyPartValues) -> float:
    """
    Geometric mean of strictly positive values evaluated in log space.

    The mean of logarithms is accumulated in decimal arithmetic so that exact roots, such as ``27`` for ``9, 27, 81``,
    are returned exactly and the result does not depend on the order of the values.

    :raises DomainError: for an empty input or a non-positive value, naming the offending index.
    """
    array = np.asarray(values, dtype=float).ravel()
    if not array.size:
        raise DomainError("Geometric mean of an empty sequence is undefined.", index=None)
    _check_positive(array, "Geometric mean")
    if array.size == 1:
        return float(array[0])
    with localcontext() as ctx:
        ctx.prec = _GEOMEAN_PRECISION
        log_sum = sum((Decimal(float(val)).ln() for val in array), Decimal(0))
        return float((log_sum / array.size).exp())


def _log_group_mean(x: Composition, labels: Sequence[str]) -> float:
    return float(np.mean(np.log(x.select(labels))))


def _check_groups(num_labels: Sequence[str], den_labels: Sequence[str]) -> None:
    if not num_labels or not den_labels:
        raise GroupSpecError("Balance groups must both be nonempty.")
    overlap = set(num_labels) & set(den_labels)
    if overlap or len(set(num_labels)) != len(num_labels) or len(set(den_labels)) != len(den_labels):
        raise GroupSpecError(f"Balance groups must be disjoint and without repeated labels, "
                             f"got {list(num_labels)} and {list(den_labels)}.", overlap=sorted(overlap))


def balance(x: Composition, num_labels: Sequence[str], den_labels: Sequence[str]) -> float:
    """
    Scaled log-ratio of the geometric means of two disjoint groups of parts.

    Equals ``sqrt(r*s/(r+s)) * ln(gm(numerator) / gm(denominator))`` with ``r`` and ``s`` the group sizes.
    """
    num_labels = tuple(num_labels)
    den_labels = tuple(den_labels)
    _check_groups(num_labels, den_labels)
    r, s = len(num_labels), len(den_labels)
    return math.sqrt(r * s / (r + s)) * (_log_group_mean(x, num_labels) - _log_group_mean(x, den_labels))


def ilr(x: Composition, sbp: SbpTree) -> BalanceVector:
    """
    Balance coordinates of a composition, one per partition node in pre-order.
    """
    values = [balance(x, node.numerator, node.denominator) for node in sbp.nodes]
    return BalanceVector(tuple(values), sbp.coordinate_names)


def ilr_inverse(z: Union[BalanceVector, Sequence[float]], sbp: SbpTree) -> Composition:
    """
    Closed composition, labelled as the partition, whose balance coordinates are :paramref:`z`.
    """
    values = z.array if isinstance(z, BalanceVector) else np.asarray(z, dtype=float)
    if values.shape != (len(sbp.nodes), ):
        raise CompositionError(f"Expected {len(sbp.nodes)} balance coordinates, got {values.size}.")
    parts = ilr_inverse_matrix(values[np.newaxis, :], sbp)[0]
    return Composition(tuple(parts), sbp.labels)


def ilr_matrix(parts: AnyPartValues, sbp: SbpTree, labels: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Balance coordinates of many compositions at once.

    :param parts: ``n x D`` array of strictly positive parts with columns ordered as :paramref:`labels`.
    :param sbp: partition defining the balances.
    :param labels: column labels, defaults to the partition labels order.
    :returns: ``n x (D-1)`` array of balances.
    """
    array = np.atleast_2d(np.asarray(parts, dtype=float))
    matrix = contrast_matrix(sbp, labels)
    if array.shape[1] != matrix.shape[1]:
        raise CompositionError(f"Expected {matrix.shape[1]} part columns, got {array.shape[1]}.")
    flat = array.ravel()
    invalid = np.flatnonzero(~(np.isfinite(flat) & (flat > 0)))
    if invalid.size:
        row = int(invalid[0] // array.shape[1])
        raise DomainError(f"Row {row} holds a non-positive or non-finite part.", index=row)
    return np.log(array) @ matrix.T


def ilr_inverse_matrix(z: np.ndarray, sbp: SbpTree) -> np.ndarray:
    """
    Closed compositions, columns ordered as the partition labels, for an ``n x (D-1)`` array of balances.
    """
    logs = np.atleast_2d(np.asarray(z, dtype=float)) @ contrast_matrix(sbp)
    logs -= logs.max(axis=1, keepdims=True)  # avoid overflow of exp on large coordinates
    parts = np.exp(logs)
    return parts / parts.sum(axis=1, keepdims=True)


def d3_sbp() -> SbpTree:
    """
    Short-term liabilities against long-term capital, then long-term liabilities against equity.
    """
    return parse_sbp(D3_SBP_TEXT)


def d4_sbp() -> SbpTree:
    """
    Liabilities against assets, then long-term against short-term liabilities and fixed against current assets.
    """
    return parse_sbp(D4_SBP_TEXT)
