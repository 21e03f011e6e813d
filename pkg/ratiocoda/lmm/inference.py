"""
Wald inference and residual diagnostics of fitted random-intercept models.
"""
from dataclasses import dataclass
from typing import IO, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import simplejson
from statsmodels.stats.diagnostic import het_breuschpagan

from ratiocoda.lmm.design import REPORT_ORDER
from ratiocoda.lmm.reml import LmmFit
from ratiocoda.stats import BoxplotSummary, tukey_outliers
from ratiocoda.typedefs import JSON, RowKey, WaldRowJSON
from ratiocoda.utils import get_logger

LOGGER = get_logger(__name__)

WALD_COLUMNS = ["term", "coefficient", "se", "z", "p_value"]


@dataclass(frozen=True)
class WaldRow:
    term: str
    coefficient: float
    se: float
    z: float
    p_value: float

    def json(self) -> WaldRowJSON:
        return {"term": self.term, "coefficient": self.coefficient, "se": self.se, "z": self.z, "p_value": self.p_value}


@dataclass(frozen=True)
class WaldReport:
    response_name: str
    rows: Tuple[WaldRow, ...]
    method: str
    sigma2_u: float
    sigma2_e: float
    converged: bool
    boundary: bool
    n_rows: int
    n_groups: int

    @property
    def terms(self) -> List[str]:
        return [row.term for row in self.rows]

    def row(self, term: str) -> WaldRow:
        for row in self.rows:
            if row.term == term:
                return row
        raise KeyError(f"Term [{term}] not in report of [{self.response_name}].")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.json() for row in self.rows], columns=WALD_COLUMNS)

    def json(self) -> JSON:
        return {
            "response": self.response_name,
            "method": self.method,
            "converged": self.converged,
            "boundary": self.boundary,
            "n_rows": self.n_rows,
            "n_groups": self.n_groups,
            "sigma2_u": self.sigma2_u,
            "sigma2_e": self.sigma2_e,
            "coefficients": [row.json() for row in self.rows],
        }


def report_order(column_names: Tuple[str, ...]) -> List[int]:
    """
    Indices of the design columns in report order: the covariates of interest first, then the rest as designed.
    """
    first = [column_names.index(name) for name in REPORT_ORDER if name in column_names]
    return first + [index for index in range(len(column_names)) if index not in first]


def wald_report(fit: LmmFit) -> WaldReport:
    """
    Coefficient table of the fit with standard errors and two-sided normal p-values.
    """
    rows = tuple(
        WaldRow(fit.column_names[idx], float(fit.beta[idx]), float(fit.se[idx]),
                float(fit.z_stat[idx]), float(fit.p_value[idx]))
        for idx in report_order(fit.column_names)
    )
    return WaldReport(
        response_name=fit.response_name,
        rows=rows,
        method=fit.method.value,
        sigma2_u=fit.sigma2_u,
        sigma2_e=fit.sigma2_e,
        converged=fit.converged,
        boundary=fit.boundary,
        n_rows=fit.n_rows,
        n_groups=fit.n_groups,
    )


@dataclass(frozen=True)
class SignConsistency:
    term: str
    coefficient_a: float
    coefficient_b: float
    same_sign: bool
    magnitude_ratio: Optional[float]

    def json(self) -> JSON:
        return {
            "term": self.term,
            "coefficient_a": self.coefficient_a,
            "coefficient_b": self.coefficient_b,
            "same_sign": self.same_sign,
            "magnitude_ratio": self.magnitude_ratio,
        }


def sign_consistency(report_a: WaldReport, report_b: WaldReport) -> List[SignConsistency]:
    """
    Compares the coefficients of two reports term by term, in the order of the first report.

    Applied to a ratio and its permutation, a compositional pair gives opposite signs with a magnitude ratio of one
    while a traditional pair usually keeps the sign of its coefficients.
    """
    coefficients_b: Dict[str, float] = {row.term: row.coefficient for row in report_b.rows}
    results = []
    for row in report_a.rows:
        if row.term not in coefficients_b:
            continue
        coef_b = coefficients_b[row.term]
        ratio = abs(row.coefficient) / abs(coef_b) if coef_b else None
        same = bool(np.sign(row.coefficient) == np.sign(coef_b))
        results.append(SignConsistency(row.term, row.coefficient, coef_b, same, ratio))
    return results


@dataclass(frozen=True)
class DiagnosticPoint:
    row_key: Optional[RowKey]
    fitted: float
    residual: float
    marginal_residual: float

    def json(self) -> JSON:
        data: JSON = {}
        if self.row_key is not None:
            data.update({"firm_id": self.row_key[0], "year": self.row_key[1]})
        data.update({"fitted": self.fitted, "residual": self.residual, "marginal_residual": self.marginal_residual})
        return data


@dataclass(frozen=True)
class DiagnosticsBundle:
    response_name: str
    points: Tuple[DiagnosticPoint, ...]
    heteroscedasticity_score: float
    heteroscedasticity_p_value: float
    residual_boxplot: BoxplotSummary

    @property
    def n_outliers(self) -> int:
        return self.residual_boxplot.n_outliers

    def json(self) -> JSON:
        return {
            "response": self.response_name,
            "n": len(self.points),
            "heteroscedasticity": {
                "score": self.heteroscedasticity_score,
                "p_value": self.heteroscedasticity_p_value,
            },
            "residual_boxplot": self.residual_boxplot.json(),
        }

    def to_jsonl(self, stream: IO[str]) -> None:
        for point in self.points:
            stream.write(simplejson.dumps(point.json(), ignore_nan=True))
            stream.write("\n")


def heteroscedasticity(residuals: np.ndarray, fitted: np.ndarray) -> Tuple[float, float]:
    """
    Breusch-Pagan score ``n R^2`` of squared residuals regressed on the fitted values, with its chi-square p-value.

    Constant residuals or fitted values carry no evidence of heteroscedasticity, reported as ``(0, 1)``.
    """
    residuals = np.asarray(residuals, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if residuals.size < 3 or np.ptp(residuals ** 2) == 0 or np.ptp(fitted) == 0:
        return 0.0, 1.0
    exog = np.column_stack([np.ones_like(fitted), fitted])
    score, p_value, _, _ = het_breuschpagan(residuals, exog, robust=True)
    return float(score), float(p_value)


def diagnostics(fit: LmmFit) -> DiagnosticsBundle:
    """
    Fitted against conditional residual pairs of every row, heteroscedasticity score and residual boxplot summary.
    """
    keys = list(fit.row_keys) if fit.row_keys else None
    points = tuple(
        DiagnosticPoint(keys[idx] if keys else None, float(fit.fitted[idx]), float(fit.residuals[idx]),
                        float(fit.marginal_residuals[idx]))
        for idx in range(fit.n_rows)
    )
    score, p_value = heteroscedasticity(fit.residuals, fit.fitted)
    LOGGER.debug("Heteroscedasticity of [%s]: score=%.6g p=%.6g", fit.response_name, score, p_value)
    return DiagnosticsBundle(
        response_name=fit.response_name,
        points=points,
        heteroscedasticity_score=score,
        heteroscedasticity_p_value=p_value,
        residual_boxplot=tukey_outliers(fit.residuals, keys=keys),
    )
