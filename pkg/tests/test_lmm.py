#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
test_lmm
----------------------------------

Tests for :mod:`ratiocoda.lmm` package.

Fitted models are compared against closed-form variance components of balanced one-way layouts and against brute
force generalized least squares on the explicit covariance matrix.
"""
import dataclasses
import io
import math
import unittest

import mock
import numpy as np
import pytest
import simplejson
from scipy import optimize
from scipy.stats import norm

from ratiocoda.coda import EQ, FA
from ratiocoda.lmm import (
    DesignError,
    LmmFitError,
    Method,
    build_design,
    check_rank,
    criterion,
    diagnostics,
    fit,
    fit_reml,
    heteroscedasticity,
    make_frame,
    sign_consistency,
    wald_report
)
from ratiocoda.ratios import RatioSpec, get_ratio
from tests import utils

ANOVA_GROUPS = ["a"] * 3 + ["b"] * 3 + ["c"] * 3
ANOVA_RESPONSE = [1.0, 2.0, 3.0, 5.0, 6.0, 7.0, 9.0, 11.0, 13.0]


def anova_frame(response=None, groups=None):
    response = ANOVA_RESPONSE if response is None else response
    groups = ANOVA_GROUPS if groups is None else groups
    return make_frame(response, np.ones(len(response)), groups, ["Intercept"])


def dense_ml(frame, lam):
    groups = np.asarray(frame.group_ids)
    z_mat = (groups[:, np.newaxis] == np.unique(groups)[np.newaxis, :]).astype(float)
    h_mat = np.eye(frame.n_rows) + lam * z_mat @ z_mat.T
    beta, _, _ = utils.dense_gls(frame, lam)
    resid = frame.response - frame.design @ beta
    sigma2 = float(resid @ np.linalg.solve(h_mat, resid)) / frame.n_rows
    return -0.5 * (frame.n_rows * math.log(2 * math.pi * sigma2) + np.linalg.slogdet(h_mat)[1] + frame.n_rows)


@pytest.mark.lmm
class TestDesign(unittest.TestCase):
    def setUp(self):
        self.z1 = get_ratio("z1", "d3")

    def test_single_year(self):
        frame = build_design(utils.design_panel(), self.z1)
        utils.check_all_equal(frame.column_names, ["Intercept", "Family", "MildTechIntens", "HighTechIntens",
                                                   "Innovation", "FirmSize"])
        utils.check_val_equal(frame.n_rows, 8)
        utils.check_val_equal(frame.n_groups, 8)
        utils.check_val_equal(frame.row_keys[0], ("F1", 2007))
        utils.check_close(frame.design[0, 5], 2.0, rtol=1e-14)
        utils.check_close(frame.design[1], [1.0, 0.0, 1.0, 0.0, 1.0, 1.0], rtol=1e-14)
        expected = math.sqrt(2 / 3) * (math.log(40.0) - (math.log(25.0) + math.log(30.0)) / 2)
        utils.check_close(frame.response[0], expected)
        utils.check_val_equal(frame.response_name, "z1")

    def test_year_dummies(self):
        frame = build_design(utils.design_panel((2007, 2008, 2009)), self.z1)
        utils.check_all_equal(frame.column_names[-2:], ["Year2008", "Year2009"])
        utils.check_val_equal(frame.n_rows, 24)
        utils.check_all_equal(frame.design[:3, -2], [0.0, 1.0, 0.0])

    def test_year_gap(self):
        err = utils.check_raises(lambda: build_design(utils.design_panel((2007, 2009)), self.z1), DesignError)
        utils.check_val_equal(err.details["column"], "Year2008")
        utils.check_val_equal(err.exit_code, 3)

    def test_explicit_years(self):
        frame = build_design(utils.design_panel((2007, 2009)), self.z1, years=[2009])
        utils.check_val_equal(frame.column_names[-1], "Year2009")

    def test_missing_baseline(self):
        err = utils.check_raises(lambda: build_design(utils.design_panel((2008, 2009)), self.z1), DesignError)
        utils.check_val_equal(err.details["column"], "Year2007")
        frame = build_design(utils.design_panel((2008, 2009)), self.z1, baseline_year=2008)
        utils.check_val_equal(frame.column_names[-1], "Year2009")

    def test_without_family(self):
        rows = [dataclasses.replace(row, family=None) for row in utils.design_panel().rows]
        panel = utils.make_panel(rows, has_family=False)
        frame = build_design(panel, self.z1)
        utils.check_val_not_in("Family", frame.column_names)
        utils.check_raises(lambda: build_design(panel, self.z1, include_family=True), DesignError)

    def test_rejected_rows(self):
        rows = list(utils.design_panel().rows) + [utils.make_row("F9", 2007, employees=0.0, line=42)]
        frame = build_design(utils.make_panel(rows), self.z1)
        utils.check_val_equal(frame.n_rows, 8)
        utils.check_val_equal(len(frame.rejected), 1)
        utils.check_val_equal((frame.rejected[0].line, frame.rejected[0].field), (42, "employees"))

    def test_missing_components(self):
        err = utils.check_raises(lambda: build_design(utils.design_panel(), get_ratio("z3", "d4")), DesignError)
        utils.check_val_equal(err.details["column"], None)

    def test_mixed_schemes(self):
        utils.check_raises(lambda: build_design(utils.design_panel(), RatioSpec("mix", (EQ, ), (FA, ))),
                           DesignError)

    def test_rank_zero_column(self):
        design = np.column_stack([np.ones(4), np.zeros(4), np.arange(4.0)])
        err = utils.check_raises(lambda: check_rank(design, ["a", "b", "c"]), DesignError)
        utils.check_val_equal(err.details["column"], "b")

    def test_rank_dependent_column(self):
        design = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0) + 1])
        err = utils.check_raises(lambda: check_rank(design, ["a", "b", "c"]), DesignError)
        utils.check_val_is_in(err.details["column"], ["a", "b", "c"])

    def test_too_few_rows(self):
        utils.check_raises(lambda: check_rank(np.ones((1, 2)), ["a", "b"]), DesignError)

    def test_negated(self):
        frame = build_design(utils.design_panel(), self.z1)
        negated = frame.negated()
        utils.check_all_equal(negated.response, -frame.response)
        utils.check_val_equal(negated.response_name, "-z1")
        utils.check_val_equal(frame.json()["columns"][0], "Intercept")


@pytest.mark.acceptance
@pytest.mark.lmm
class TestClosedForms(unittest.TestCase):
    def test_balanced_reml(self):
        result = fit(anova_frame())
        utils.check_close(result.beta, [19 / 3], rtol=1e-10)
        utils.check_close(result.sigma2_e, 2.0, rtol=1e-6)
        utils.check_close(result.sigma2_u, 59 / 3, rtol=1e-6)
        utils.check_close(result.se, [math.sqrt(61 / 9)], rtol=1e-6)
        utils.check_close(result.p_value, 2 * norm.sf(abs(result.z_stat)), rtol=1e-12)
        assert result.converged
        assert not result.boundary
        utils.check_val_equal(result.loglik_reml, result.loglik)

    def test_balanced_ml(self):
        result = fit(anova_frame(), Method.ML)
        utils.check_close(result.sigma2_e, 2.0, rtol=1e-6)
        utils.check_close(result.sigma2_u, 116 / 9, rtol=1e-6)
        utils.check_val_equal(result.method, Method.ML)
        utils.check_val_equal(result.loglik_reml, None)

    def test_boundary(self):
        result = fit(anova_frame([1.0, 5.0, 2.0, 4.0, 3.0, 3.0], ["a", "a", "b", "b", "c", "c"]))
        utils.check_val_equal(result.lambda_, 0.0)
        utils.check_val_equal(result.sigma2_u, 0.0)
        assert result.boundary
        assert result.converged
        utils.check_close(result.beta, [3.0], rtol=1e-12)
        utils.check_close(result.sigma2_e, 2.0, rtol=1e-12)

    def test_single_group_exact(self):
        x = np.arange(6.0)
        frame = make_frame(2 + 3 * x, np.column_stack([np.ones(6), x]), ["g"] * 6, ["Intercept", "x"])
        result = fit(frame)
        utils.check_close(result.beta, [2.0, 3.0], rtol=1e-10)
        assert result.sigma2_e < 1e-8
        assert result.boundary
        utils.check_all_equal(result.residuals, np.zeros(6))
        utils.check_all_equal(result.fitted, frame.response)
        bundle = diagnostics(result)
        utils.check_val_equal(bundle.n_outliers, 0)
        utils.check_val_equal((bundle.heteroscedasticity_score, bundle.heteroscedasticity_p_value), (0.0, 1.0))

    def test_single_group_ols(self):
        rng = np.random.Generator(np.random.PCG64(21))
        frame = utils.random_frame(rng, n_groups=1, n_per_group=40)
        result = fit(frame)
        beta, rss, _, _ = np.linalg.lstsq(frame.design, frame.response, rcond=None)
        utils.check_close(result.beta, beta, rtol=1e-10)
        utils.check_close(result.sigma2_e, rss[0] / (40 - 3), rtol=1e-10)
        utils.check_val_equal(result.n_evals, 1)

    def test_too_few_rows(self):
        frame = make_frame([1.0, 2.0], np.column_stack([np.ones(2), [0.0, 1.0]]), ["a", "b"])
        utils.check_raises(lambda: fit(frame), DesignError)

    def test_unknown_method(self):
        utils.check_raises(lambda: fit(anova_frame(), "bayes"), LmmFitError)

    def test_not_converged(self):
        failed = optimize.OptimizeResult(success=False, message="Maximum number of function calls reached.",
                                         x=0.0, fun=0.0)
        with mock.patch("ratiocoda.lmm.reml.optimize.minimize_scalar", return_value=failed):
            err = utils.check_raises(lambda: fit(anova_frame()), LmmFitError)
        utils.check_val_equal(err.exit_code, 3)
        utils.check_val_equal(len(err.details["trace"]), 25)


@pytest.mark.acceptance
@pytest.mark.lmm
class TestDenseOracle(unittest.TestCase):
    def setUp(self):
        rng = np.random.Generator(np.random.PCG64(31))
        self.frames = [
            utils.random_frame(rng, n_groups=6, n_per_group=list(rng.integers(2, 8, size=6)))
            for _ in range(25)
        ]

    def test_criterion(self):
        for frame in self.frames:
            for lam in [0.0, 0.05, 1.0, 30.0]:
                _, _, loglik = utils.dense_gls(frame, lam)
                utils.check_close(criterion(frame, lam), loglik, rtol=1e-9)
                utils.check_close(criterion(frame, lam, "ml"), dense_ml(frame, lam), rtol=1e-9)

    def test_estimates(self):
        for frame in self.frames:
            result = fit_reml(frame)
            beta, sigma2, loglik = utils.dense_gls(frame, result.lambda_)
            utils.check_close(result.beta, beta, rtol=1e-8, atol=1e-10)
            utils.check_close(result.sigma2_e, sigma2, rtol=1e-8)
            utils.check_close(result.loglik, loglik, rtol=1e-9)
            for lam in np.logspace(-6, 6, 49):
                assert utils.dense_gls(frame, lam)[2] <= loglik + 1e-7
            if not result.boundary:
                for lam in [0.5 * result.lambda_, 2.0 * result.lambda_]:
                    assert utils.dense_gls(frame, lam)[2] <= loglik + 1e-9

    def test_estimating_equations(self):
        for frame in self.frames:
            result = fit_reml(frame)
            groups = np.asarray(frame.group_ids)
            z_mat = (groups[:, np.newaxis] == np.unique(groups)[np.newaxis, :]).astype(float)
            h_mat = np.eye(frame.n_rows) + result.lambda_ * z_mat @ z_mat.T
            resid = frame.response - frame.design @ result.beta
            score = frame.design.T @ np.linalg.solve(h_mat, resid)
            utils.check_close(score, np.zeros(frame.n_columns), rtol=0, atol=1e-8)
            blup = result.lambda_ * z_mat.T @ np.linalg.solve(h_mat, resid)
            utils.check_close(result.random_effects, blup, rtol=1e-8, atol=1e-10)
            utils.check_close(result.fitted + result.residuals, frame.response, rtol=1e-12, atol=1e-12)
            utils.check_close(result.marginal_residuals, resid, rtol=1e-12, atol=1e-12)

    def test_three_groups_grid(self):
        rng = np.random.Generator(np.random.PCG64(43))
        grid = np.logspace(-8, 8, 2001)
        for _ in range(25):
            counts = list(rng.integers(3, 11, size=3))
            frame = utils.random_frame(rng, n_groups=3, n_per_group=counts, n_columns=int(rng.integers(1, 4)))
            assert frame.n_rows <= 30
            result = fit_reml(frame)
            best = max(utils.dense_gls(frame, lam)[2] for lam in grid)
            assert result.loglik >= best - 1e-7 * max(1.0, abs(best)), (counts, result.loglik, best)
            beta, sigma2, loglik = utils.dense_gls(frame, result.lambda_)
            utils.check_close(result.beta, beta, rtol=1e-4, atol=1e-10)
            utils.check_close(result.sigma2_e, sigma2, rtol=1e-3)
            utils.check_close(result.loglik, loglik, rtol=1e-9)

    def test_sign_reversal(self):
        for frame in self.frames[:5]:
            result = fit(frame)
            negated = fit(frame.negated())
            utils.check_close(negated.beta, -result.beta, rtol=0, atol=1e-9)
            utils.check_close(negated.se, result.se, rtol=1e-9)
            utils.check_close(negated.sigma2_u, result.sigma2_u, rtol=1e-9, atol=1e-12)
            utils.check_close(negated.sigma2_e, result.sigma2_e, rtol=1e-9)
            report = sign_consistency(wald_report(result), wald_report(negated))
            for item in report:
                assert not item.same_sign, item.term
                utils.check_close(item.magnitude_ratio, 1.0, rtol=1e-8)


@pytest.mark.lmm
class TestInference(unittest.TestCase):
    def setUp(self):
        panel = utils.design_panel((2007, 2008))
        self.frame = build_design(panel, get_ratio("r1", "d3"))
        self.fit = fit(self.frame)

    def test_report_order(self):
        report = wald_report(self.fit)
        utils.check_all_equal(report.terms, ["Family", "MildTechIntens", "HighTechIntens", "Innovation",
                                             "FirmSize", "Intercept", "Year2008"])
        row = report.row("FirmSize")
        utils.check_val_equal(row.coefficient, self.fit.coefficient("FirmSize"))
        utils.check_val_equal(row.se, self.fit.standard_error("FirmSize"))
        utils.check_close(row.p_value, 2 * norm.sf(abs(row.coefficient / row.se)))
        utils.check_raises(lambda: report.row("Year2030"), KeyError)

    def test_report_json(self):
        report = wald_report(self.fit)
        data = report.json()
        utils.check_val_equal(data["response"], "r1")
        utils.check_val_equal(data["method"], "reml")
        utils.check_val_equal(data["n_rows"], 16)
        utils.check_val_equal(data["n_groups"], 8)
        utils.check_all_equal(list(report.to_frame().columns), ["term", "coefficient", "se", "z", "p_value"])

    def test_diagnostics(self):
        bundle = diagnostics(self.fit)
        utils.check_val_equal(len(bundle.points), 16)
        utils.check_val_equal(bundle.points[0].row_key, ("F1", 2007))
        utils.check_close(bundle.points[3].fitted + bundle.points[3].residual, self.frame.response[3])
        buffer = io.StringIO()
        bundle.to_jsonl(buffer)
        lines = buffer.getvalue().splitlines()
        utils.check_val_equal(len(lines), 16)
        first = simplejson.loads(lines[0])
        utils.check_all_equal(list(first), ["firm_id", "year", "fitted", "residual", "marginal_residual"])
        utils.check_val_equal(bundle.json()["n"], 16)

    def test_heteroscedasticity_degenerate(self):
        utils.check_val_equal(heteroscedasticity(np.zeros(10), np.arange(10.0)), (0.0, 1.0))
        utils.check_val_equal(heteroscedasticity(np.arange(10.0), np.ones(10)), (0.0, 1.0))
        utils.check_val_equal(heteroscedasticity(np.array([1.0, -2.0]), np.array([0.0, 1.0])), (0.0, 1.0))

    def test_heteroscedasticity_detected(self):
        rng = np.random.Generator(np.random.PCG64(41))
        fitted = rng.uniform(1, 10, size=500)
        _, p_value = heteroscedasticity(fitted * rng.normal(size=500), fitted)
        assert p_value < 0.01

    def test_heteroscedasticity_null(self):
        rng = np.random.Generator(np.random.PCG64(42))
        passed = 0
        for _ in range(100):
            fitted = rng.normal(size=200)
            _, p_value = heteroscedasticity(rng.normal(size=200), fitted)
            passed += p_value > 0.01
        assert passed >= 95
