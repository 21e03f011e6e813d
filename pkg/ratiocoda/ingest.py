"""
Ingestion of firm-year balance-sheet panels from CSV.

Rows failing validation are not fatal: they are rejected with a categorized reason and kept in the rejection report,
so that every data line of the input ends up either as a :class:`PanelRow` or as a :class:`Rejection`. Only a header
missing required columns stops the ingestion.
"""
import csv
import io
import math
from dataclasses import dataclass, field, fields
from typing import IO, Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import pandas as pd
import simplejson

from ratiocoda.coda import CA, D3_LABELS, D4_LABELS, EQ, FA, LTL, STL, Composition
from ratiocoda.constants import CSV_FLOAT_FORMAT, DEFAULT_YEAR_MAX, DEFAULT_YEAR_MIN
from ratiocoda.ratios import Scheme
from ratiocoda.typedefs import JSON, RowKey, SchemeName
from ratiocoda.utils import ExtendedEnum, RatioCodaError, get_logger, get_settings_from_config_ini

LOGGER = get_logger(__name__)

FIELD_FIRM_ID = "firm_id"
FIELD_YEAR = "year"
FIELD_FAMILY = "family"
FIELD_TECH = "tech_intensity"
FIELD_INNOVATION = "innovation"
FIELD_EMPLOYEES = "employees"
FIELD_STL = "stl"
FIELD_LTL = "ltl"
FIELD_EQUITY = "equity"
FIELD_FIXED_ASSETS = "fixed_assets"
FIELD_CURRENT_ASSETS = "current_assets"

REQUIRED_FIELDS = (
    FIELD_FIRM_ID, FIELD_YEAR, FIELD_TECH, FIELD_INNOVATION, FIELD_EMPLOYEES, FIELD_STL, FIELD_LTL, FIELD_EQUITY,
)
OPTIONAL_FIELDS = (FIELD_FAMILY, FIELD_FIXED_ASSETS, FIELD_CURRENT_ASSETS)
CANONICAL_FIELDS = (
    FIELD_FIRM_ID, FIELD_YEAR, FIELD_FAMILY, FIELD_TECH, FIELD_INNOVATION, FIELD_EMPLOYEES,
    FIELD_STL, FIELD_LTL, FIELD_EQUITY, FIELD_FIXED_ASSETS, FIELD_CURRENT_ASSETS,
)
COMPONENT_FIELDS = {
    STL: FIELD_STL,
    LTL: FIELD_LTL,
    EQ: FIELD_EQUITY,
    FA: FIELD_FIXED_ASSETS,
    CA: FIELD_CURRENT_ASSETS,
}

_TRUE_VALUES = frozenset({"1", "true", "yes", "y", "t"})
_FALSE_VALUES = frozenset({"0", "false", "no", "n", "f"})
_MALFORMED_MARKER = "\x00malformed"


class IngestSchemaError(RatioCodaError, ValueError):
    """
    Input header lacks required columns, or the input is not a readable CSV table.
    """


class SchemeError(RatioCodaError, ValueError):
    """
    Row without the components required by the requested composition scheme.
    """


class NoValidRowsError(RatioCodaError, ValueError):
    """
    Every data line of the input was rejected.
    """


class TechIntensity(ExtendedEnum):
    LOW = "Low"
    MID = "Mid"
    HIGH = "High"


class RejectReason(ExtendedEnum):
    NON_POSITIVE_COMPONENT = "non_positive_component"
    MISSING_FIELD = "missing_field"
    DUPLICATE_KEY = "duplicate_key"
    UNPARSABLE_NUMBER = "unparsable_number"
    INVALID_CATEGORY = "invalid_category"
    YEAR_OUT_OF_RANGE = "year_out_of_range"
    MALFORMED_LINE = "malformed_line"


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: RejectReason
    field: Optional[str] = None

    def json(self) -> JSON:
        return {"line": self.line, "reason": self.reason.value, "field": self.field}


class _RowRejected(Exception):
    def __init__(self, reason: RejectReason, field_name: Optional[str]) -> None:
        super().__init__(reason.value)
        self.reason = reason
        self.field = field_name


@dataclass(frozen=True)
class PanelRow:
    firm_id: str
    year: int
    family: Optional[bool]
    tech_intensity: TechIntensity
    innovation: bool
    employees: float
    stl: float
    ltl: float
    equity: float
    fixed_assets: Optional[float] = None
    current_assets: Optional[float] = None
    line: int = 0

    @property
    def key(self) -> RowKey:
        return self.firm_id, self.year


@dataclass(frozen=True)
class IngestConfig:
    """
    Mapping from canonical field names to the CSV columns holding them, with the accepted year range.
    """
    columns: Mapping[str, str] = field(default_factory=lambda: {name: name for name in CANONICAL_FIELDS})
    year_min: int = DEFAULT_YEAR_MIN
    year_max: int = DEFAULT_YEAR_MAX

    def __post_init__(self) -> None:
        unknown = sorted(set(self.columns) - set(CANONICAL_FIELDS))
        if unknown:
            raise IngestSchemaError(f"Unknown fields in column mapping: {unknown}.", fields=unknown)
        columns = {name: name for name in CANONICAL_FIELDS}
        columns.update(self.columns)
        object.__setattr__(self, "columns", columns)
        if self.year_min > self.year_max:
            raise IngestSchemaError(f"Invalid year range [{self.year_min}, {self.year_max}].")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "IngestConfig":
        """
        Builds the configuration from ``field: column`` entries plus optional ``year_min`` and ``year_max``.
        """
        mapping = dict(mapping)
        year_min = int(mapping.pop("year_min", DEFAULT_YEAR_MIN))
        year_max = int(mapping.pop("year_max", DEFAULT_YEAR_MAX))
        columns = mapping.pop("columns", None) or mapping
        return cls({str(key): str(val).strip() for key, val in columns.items()}, year_min, year_max)


def read_column_mapping(path: str) -> IngestConfig:
    """
    Reads ``field = column`` lines, comments starting with ``#`` or ``;``.
    """
    try:
        settings = get_settings_from_config_ini(path, section="columns")
    except ValueError as exc:
        raise IngestSchemaError(f"Cannot read column mapping: {exc}", path=path) from exc
    return IngestConfig.from_mapping(settings)


@dataclass(frozen=True)
class PanelDataset:
    rows: Tuple[PanelRow, ...]
    rejected: Tuple[Rejection, ...] = ()
    has_family: bool = True
    has_assets: bool = False

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_firms(self) -> int:
        return len({row.firm_id for row in self.rows})

    @property
    def n_lines(self) -> int:
        return len(self.rows) + len(self.rejected)

    @property
    def years(self) -> List[int]:
        return sorted({row.year for row in self.rows})

    def rejection_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for rejection in self.rejected:
            counts[rejection.reason.value] = counts.get(rejection.reason.value, 0) + 1
        return dict(sorted(counts.items()))

    def require_rows(self) -> "PanelDataset":
        if not self.rows:
            raise NoValidRowsError(f"No valid rows left after rejecting {len(self.rejected)} lines.",
                                   reason="no_valid_rows", rejections=self.rejection_counts())
        return self

    def to_frame(self) -> pd.DataFrame:
        """
        Canonical columns, one row per panel row, with part labels as additional component columns.
        """
        records = []
        for row in self.rows:
            record = {name.name: getattr(row, name.name) for name in fields(PanelRow) if name.name != "line"}
            record[FIELD_TECH] = row.tech_intensity.value
            for label, name in COMPONENT_FIELDS.items():
                record[label] = getattr(row, name)
            records.append(record)
        columns = list(CANONICAL_FIELDS) + list(COMPONENT_FIELDS)
        return pd.DataFrame.from_records(records, columns=columns)


def _text(raw: Any) -> str:
    if raw is None or (isinstance(raw, float) and math.isnan(raw)):
        return ""
    return str(raw).strip()


def _required(record: Mapping[str, Any], name: str) -> str:
    value = _text(record.get(name))
    if not value:
        raise _RowRejected(RejectReason.MISSING_FIELD, name)
    return value


def _number(text: str, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise _RowRejected(RejectReason.UNPARSABLE_NUMBER, name) from None
    if not math.isfinite(value):
        raise _RowRejected(RejectReason.UNPARSABLE_NUMBER, name)
    return value


def _positive(record: Mapping[str, Any], name: str, required: bool = True) -> Optional[float]:
    text = _required(record, name) if required else _text(record.get(name))
    if not text:
        return None
    value = _number(text, name)
    if value <= 0:
        raise _RowRejected(RejectReason.NON_POSITIVE_COMPONENT, name)
    return value


def _boolean(text: str, name: str) -> bool:
    lowered = text.lower()
    if lowered in _TRUE_VALUES:
        return True
    if lowered in _FALSE_VALUES:
        return False
    raise _RowRejected(RejectReason.INVALID_CATEGORY, name)


def _tech(text: str) -> TechIntensity:
    if text.lower() == "mild":
        return TechIntensity.MID
    found = TechIntensity.get(text)
    if found is None:
        raise _RowRejected(RejectReason.INVALID_CATEGORY, FIELD_TECH)
    return found


def _parse_row(record: Mapping[str, Any], line: int, config: IngestConfig, has_family: bool) -> PanelRow:
    firm_id = _required(record, FIELD_FIRM_ID)
    year_value = _number(_required(record, FIELD_YEAR), FIELD_YEAR)
    if not year_value.is_integer():
        raise _RowRejected(RejectReason.UNPARSABLE_NUMBER, FIELD_YEAR)
    year = int(year_value)
    if not config.year_min <= year <= config.year_max:
        raise _RowRejected(RejectReason.YEAR_OUT_OF_RANGE, FIELD_YEAR)
    family = _boolean(_required(record, FIELD_FAMILY), FIELD_FAMILY) if has_family else None
    tech = _tech(_required(record, FIELD_TECH))
    innovation = _boolean(_required(record, FIELD_INNOVATION), FIELD_INNOVATION)
    employees = _number(_required(record, FIELD_EMPLOYEES), FIELD_EMPLOYEES)
    if employees <= 0:
        raise _RowRejected(RejectReason.NON_POSITIVE_COMPONENT, FIELD_EMPLOYEES)
    return PanelRow(
        firm_id=firm_id,
        year=year,
        family=family,
        tech_intensity=tech,
        innovation=innovation,
        employees=employees,
        stl=_positive(record, FIELD_STL),
        ltl=_positive(record, FIELD_LTL),
        equity=_positive(record, FIELD_EQUITY),
        fixed_assets=_positive(record, FIELD_FIXED_ASSETS, required=False),
        current_assets=_positive(record, FIELD_CURRENT_ASSETS, required=False),
        line=line,
    )


def _read_table(source: Union[IO[bytes], IO[str]]) -> pd.DataFrame:
    """
    Raw text cells with the header as first row, one row per input line.

    Lines holding more fields than the header are kept as a single marker cell so that line numbering stays aligned.
    Shorter lines are padded with empty cells.
    """
    try:
        table = pd.read_csv(source, header=None, dtype=object, keep_default_na=False, na_filter=False,
                            encoding="utf-8", skip_blank_lines=False, skipinitialspace=True, engine="python",
                            on_bad_lines=lambda _fields: [_MALFORMED_MARKER])
    except pd.errors.EmptyDataError as exc:
        raise IngestSchemaError("Input is empty, a header line is required.") from exc
    except (pd.errors.ParserError, csv.Error, UnicodeDecodeError) as exc:
        raise IngestSchemaError(f"Input is not a readable CSV table: {exc}") from exc
    if table.empty:
        raise IngestSchemaError("Input is empty, a header line is required.")
    return table


def parse_panel_csv(source: Union[IO[bytes], IO[str], str], config: Optional[IngestConfig] = None) -> PanelDataset:
    """
    Reads a UTF-8 comma-separated panel with a header line.

    Numbers are parsed independently of the locale with a dot decimal separator. Line numbers of rejections count the
    header as line 1.

    :param source: binary or text stream, or a file path.
    :param config: column mapping and year range, defaults to canonical column names.
    :raises IngestSchemaError: when required columns are missing from the header.
    """
    config = config or IngestConfig()
    if isinstance(source, str):
        with open(source, mode="rb") as stream:
            return parse_panel_csv(stream, config)
    table = _read_table(source)
    header = [_text(col) for col in table.iloc[0]]
    missing = [name for name in REQUIRED_FIELDS if config.columns[name] not in header]
    if missing:
        columns = [config.columns[name] for name in missing]
        raise IngestSchemaError(f"Input header lacks required columns {columns}.", missing=columns)
    present = {name: config.columns[name] for name in CANONICAL_FIELDS if config.columns[name] in header}
    has_family = FIELD_FAMILY in present
    if not has_family:
        LOGGER.warning("Input has no [%s] column, family grouping is unavailable.", config.columns[FIELD_FAMILY])
    has_assets = FIELD_FIXED_ASSETS in present and FIELD_CURRENT_ASSETS in present
    rows: List[PanelRow] = []
    rejected: List[Rejection] = []
    seen = set()
    data = table.iloc[1:]
    malformed = (data.iloc[:, 0] == _MALFORMED_MARKER).tolist()
    # first occurrence wins for repeated header names
    canonical = data.iloc[:, [header.index(column) for column in present.values()]]
    canonical.columns = list(present)
    for offset, record in enumerate(canonical.to_dict(orient="records")):
        line = offset + 2
        try:
            if malformed[offset]:
                raise _RowRejected(RejectReason.MALFORMED_LINE, None)
            row = _parse_row(record, line, config, has_family)
            if row.key in seen:
                raise _RowRejected(RejectReason.DUPLICATE_KEY, f"{FIELD_FIRM_ID},{FIELD_YEAR}")
        except _RowRejected as reject:
            rejected.append(Rejection(line, reject.reason, reject.field))
            continue
        seen.add(row.key)
        rows.append(row)
    LOGGER.info("Ingested %s rows, rejected %s lines.", len(rows), len(rejected))
    return PanelDataset(tuple(rows), tuple(rejected), has_family, has_assets)


def to_composition(row: PanelRow, scheme: Union[Scheme, SchemeName] = Scheme.D3) -> Composition:
    """
    Composition of the row with canonical labels (STL, LTL, EQ) or (LTL, STL, FA, CA).

    :raises SchemeError: when the row lacks a component of the scheme.
    """
    found = Scheme.get(scheme)
    if found is None:
        raise SchemeError(f"Unknown composition scheme [{scheme}].", scheme=str(scheme))
    labels = D3_LABELS if found == Scheme.D3 else D4_LABELS
    parts = []
    for label in labels:
        value = getattr(row, COMPONENT_FIELDS[label])
        if value is None:
            raise SchemeError(f"Row {row.key} lacks component [{COMPONENT_FIELDS[label]}] "
                              f"required by scheme [{found.value}].", scheme=found.value,
                              field=COMPONENT_FIELDS[label])
        parts.append(value)
    return Composition(tuple(parts), labels)


def _format_bool(value: Optional[bool]) -> Optional[int]:
    return None if value is None else int(value)


def write_panel_csv(dataset: PanelDataset, stream: IO[str]) -> None:
    """
    Writes the rows with canonical column names, numbers at 15 significant digits.

    Family and asset columns are only written when the dataset holds them.
    """
    columns = [
        name for name in CANONICAL_FIELDS
        if (name != FIELD_FAMILY or dataset.has_family)
        and (name not in (FIELD_FIXED_ASSETS, FIELD_CURRENT_ASSETS) or dataset.has_assets)
    ]
    records = []
    for row in dataset.rows:
        record = {name: getattr(row, name) for name in columns}
        record[FIELD_TECH] = row.tech_intensity.value
        record[FIELD_INNOVATION] = _format_bool(row.innovation)
        if FIELD_FAMILY in record:
            record[FIELD_FAMILY] = _format_bool(row.family)
        records.append(record)
    frame = pd.DataFrame.from_records(records, columns=columns)
    frame.to_csv(stream, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_rejections(rejections: Iterable[Rejection], stream: IO[str]) -> None:
    """
    Writes one JSON object per rejected line.
    """
    for rejection in rejections:
        stream.write(simplejson.dumps(rejection.json(), sort_keys=True))
        stream.write("\n")


def dump_panel_csv(dataset: PanelDataset) -> str:
    buffer = io.StringIO()
    write_panel_csv(dataset, buffer)
    return buffer.getvalue()
