"""
Random-intercept linear mixed models of ratio responses over firm panels.
"""
from ratiocoda.lmm.design import (
    REPORT_ORDER,
    DesignError,
    ModelFrame,
    build_design,
    check_rank,
    make_frame,
    year_column
)
from ratiocoda.lmm.inference import (
    DiagnosticsBundle,
    SignConsistency,
    WaldReport,
    WaldRow,
    diagnostics,
    heteroscedasticity,
    sign_consistency,
    wald_report
)
from ratiocoda.lmm.reml import LmmFit, LmmFitError, Method, criterion, fit, fit_reml

__all__ = [
    "REPORT_ORDER",
    "DesignError",
    "DiagnosticsBundle",
    "LmmFit",
    "LmmFitError",
    "Method",
    "ModelFrame",
    "SignConsistency",
    "WaldReport",
    "WaldRow",
    "build_design",
    "check_rank",
    "criterion",
    "diagnostics",
    "fit",
    "fit_reml",
    "heteroscedasticity",
    "make_frame",
    "sign_consistency",
    "wald_report",
    "year_column",
]
