"""
Model frames of the random-intercept panel model.

The fixed design holds an intercept, the family flag, two technology-intensity dummies (low intensity as baseline),
the innovation flag, the log of employees and one dummy per year after the baseline year. Firms are the groups of the
random intercept.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg

from ratiocoda.coda import D3_LABELS, D4_LABELS
from ratiocoda.constants import DEFAULT_BASELINE_YEAR
from ratiocoda.ingest import FIELD_FIRM_ID, FIELD_YEAR, PanelDataset, Rejection, RejectReason, TechIntensity
from ratiocoda.ratios import RatioSpec, Scheme, evaluate_frame
from ratiocoda.typedefs import JSON, RowKey
from ratiocoda.utils import RatioCodaError, get_logger

LOGGER = get_logger(__name__)

COL_INTERCEPT = "Intercept"
COL_FAMILY = "Family"
COL_MILD_TECH = "MildTechIntens"
COL_HIGH_TECH = "HighTechIntens"
COL_INNOVATION = "Innovation"
COL_FIRM_SIZE = "FirmSize"
YEAR_PREFIX = "Year"

# order of the reported coefficients, remaining columns follow in design order
REPORT_ORDER = (COL_FAMILY, COL_MILD_TECH, COL_HIGH_TECH, COL_INNOVATION, COL_FIRM_SIZE)


class DesignError(RatioCodaError, ValueError):
    """
    Fixed design that cannot be estimated, such as a rank deficient design naming the first dependent column.
    """
    exit_code = 3


def year_column(year: int) -> str:
    return f"{YEAR_PREFIX}{year}"


@dataclass(frozen=True, eq=False)
class ModelFrame:
    response: np.ndarray
    design: np.ndarray
    column_names: Tuple[str, ...]
    group_ids: np.ndarray
    row_keys: Tuple[RowKey, ...] = ()
    response_name: str = "y"
    rejected: Tuple[Rejection, ...] = field(default=())

    def __post_init__(self) -> None:
        response = np.asarray(self.response, dtype=float).ravel()
        design = np.atleast_2d(np.asarray(self.design, dtype=float))
        groups = np.asarray(self.group_ids)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "group_ids", groups)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if design.shape != (response.size, len(self.column_names)):
            raise DesignError(f"Design of shape {design.shape} does not match {response.size} rows "
                              f"and {len(self.column_names)} columns.")
        if groups.shape != (response.size, ):
            raise DesignError("Every row requires a group identifier.")
        if self.row_keys and len(self.row_keys) != response.size:
            raise DesignError("Row keys must align with the response.")
        if not np.all(np.isfinite(response)) or not np.all(np.isfinite(design)):
            raise DesignError("Response and design must hold finite values.")

    @property
    def n_rows(self) -> int:
        return int(self.response.size)

    @property
    def n_columns(self) -> int:
        return len(self.column_names)

    @property
    def n_groups(self) -> int:
        return int(np.unique(self.group_ids).size)

    def negated(self) -> "ModelFrame":
        """
        Same frame with the response sign reversed, as obtained from a permuted compositional ratio.
        """
        return ModelFrame(-self.response, self.design, self.column_names, self.group_ids, self.row_keys,
                          f"-{self.response_name}", self.rejected)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.design, columns=list(self.column_names))
        frame.insert(0, "group", self.group_ids)
        frame.insert(1, self.response_name, self.response)
        return frame

    def json(self) -> JSON:
        return {
            "response": self.response_name,
            "n_rows": self.n_rows,
            "n_groups": self.n_groups,
            "columns": list(self.column_names),
            "rejected": len(self.rejected),
        }


def check_rank(design: np.ndarray, column_names: Sequence[str]) -> None:
    """
    Verifies that the design has full column rank.

    :raises DesignError: naming an all-zero column first, otherwise a column found dependent by pivoted QR.
    """
    if design.shape[0] < design.shape[1]:
        raise DesignError(f"Design has {design.shape[0]} rows for {design.shape[1]} columns.", column=None)
    for index, name in enumerate(column_names):
        if not np.any(design[:, index]):
            raise DesignError(f"Design column [{name}] is all zeros.", column=name)
    _, r_mat, pivots = linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    tol = diag[0] * max(design.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    if rank < design.shape[1]:
        name = column_names[pivots[rank]]
        raise DesignError(f"Design is rank deficient ({rank} < {design.shape[1]}), "
                          f"column [{name}] is a linear combination of others.", column=name)


def scheme_of(response: RatioSpec) -> Scheme:
    """
    Smallest composition scheme whose labels cover the ratio.
    """
    if set(response.labels) <= set(D3_LABELS):
        return Scheme.D3
    if set(response.labels) <= set(D4_LABELS):
        return Scheme.D4
    raise DesignError(f"Ratio [{response.name}] mixes parts of both composition schemes.", column=None)


def build_design(panel: PanelDataset,
                 response: RatioSpec,
                 baseline_year: int = DEFAULT_BASELINE_YEAR,
                 years: Optional[Sequence[int]] = None,
                 include_family: Optional[bool] = None,
                 ) -> ModelFrame:
    """
    Model frame of the response ratio over the panel rows.

    Rows without the components of the response, or with non-positive employees, are left out and recorded in the
    frame rejections. Year dummies cover every year of the panel span except the baseline year, so that a year without
    observations inside the span is reported as an all-zero column.

    :param panel: validated panel rows.
    :param response: ratio used as response.
    :param baseline_year: year without dummy.
    :param years: explicit years receiving a dummy, overriding the default span.
    :param include_family: add the family flag, defaults to whether the panel holds it.
    :raises DesignError: for a rank deficient design.
    """
    panel.require_rows()
    if include_family is None:
        include_family = panel.has_family
    elif include_family and not panel.has_family:
        raise DesignError("Panel has no family flag to include in the design.", column=COL_FAMILY)
    scheme = scheme_of(response)
    frame = panel.to_frame()
    component_labels = D3_LABELS if scheme == Scheme.D3 else D4_LABELS
    missing = frame.loc[:, list(component_labels)].isna().any(axis=1).to_numpy()
    bad_size = ~(frame["employees"].to_numpy(dtype=float) > 0)
    rejected: List[Rejection] = []
    for row, lacks, small in zip(panel.rows, missing, bad_size):
        if lacks:
            rejected.append(Rejection(row.line, RejectReason.MISSING_FIELD, "components"))
        elif small:
            rejected.append(Rejection(row.line, RejectReason.NON_POSITIVE_COMPONENT, "employees"))
    keep = ~(missing | bad_size)
    if rejected:
        LOGGER.warning("Design of [%s] leaves out %s rows.", response.name, len(rejected))
    frame = frame.loc[keep].reset_index(drop=True)
    if frame.empty:
        raise DesignError(f"No row holds the components of [{response.name}].", column=None)

    y = evaluate_frame(response, frame).to_numpy(dtype=float)
    tech = frame["tech_intensity"]
    columns = {COL_INTERCEPT: np.ones(len(frame))}
    if include_family:
        columns[COL_FAMILY] = frame["family"].astype(float).to_numpy()
    columns[COL_MILD_TECH] = (tech == TechIntensity.MID.value).astype(float).to_numpy()
    columns[COL_HIGH_TECH] = (tech == TechIntensity.HIGH.value).astype(float).to_numpy()
    columns[COL_INNOVATION] = frame["innovation"].astype(float).to_numpy()
    columns[COL_FIRM_SIZE] = np.log(frame["employees"].to_numpy(dtype=float))
    observed = frame[FIELD_YEAR].to_numpy(dtype=int)
    if years is None:
        if baseline_year not in observed:
            raise DesignError(f"Baseline year {baseline_year} has no observations.", column=year_column(baseline_year))
        years = range(int(observed.min()), int(observed.max()) + 1)
    for year in years:
        if year != baseline_year:
            columns[year_column(year)] = (observed == year).astype(float)
    names = list(columns)
    design = np.column_stack([columns[name] for name in names])
    check_rank(design, names)
    row_keys = tuple(zip(frame[FIELD_FIRM_ID].astype(str), (int(yr) for yr in observed)))
    return ModelFrame(
        response=y,
        design=design,
        column_names=tuple(names),
        group_ids=frame[FIELD_FIRM_ID].astype(str).to_numpy(),
        row_keys=row_keys,
        response_name=response.name,
        rejected=tuple(rejected),
    )


def make_frame(response: Union[Sequence[float], np.ndarray],
               design: Union[Sequence[Sequence[float]], np.ndarray],
               groups: Sequence[object],
               column_names: Optional[Sequence[str]] = None,
               response_name: str = "y",
               ) -> ModelFrame:
    """
    Model frame from raw arrays, columns named ``x0, x1, ...`` unless provided.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    if design.shape[0] == 1 and len(response) != 1:
        design = design.T
    names = list(column_names) if column_names is not None else [f"x{idx}" for idx in range(design.shape[1])]
    check_rank(design, names)
    return ModelFrame(np.asarray(response, dtype=float), design, tuple(names), np.asarray(groups),
                      response_name=response_name)
