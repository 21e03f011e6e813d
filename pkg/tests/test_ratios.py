#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
test_ratios
----------------------------------

Tests for :mod:`ratiocoda.ratios` module.
"""
import unittest

import numpy as np
import pandas as pd
import pytest

from ratiocoda.coda import CA, EQ, FA, LTL, STL, Composition, LabelLookupError
from ratiocoda.ratios import (
    RatioKind,
    RatioSpec,
    RatioSpecError,
    Scheme,
    UnknownRatioError,
    catalog,
    default_catalog,
    evaluate,
    evaluate_frame,
    format_ratio,
    get_ratio,
    negate,
    parse_ratio,
    permute
)
from tests import utils


@pytest.mark.ratios
class TestEvaluate(unittest.TestCase):
    def setUp(self):
        self.x = Composition((50.0, 30.0, 20.0), (STL, LTL, EQ))
        self.ratios = catalog(Scheme.D3)

    def test_traditional(self):
        utils.check_val_equal(evaluate(self.ratios["r1"], self.x), 1.0)
        utils.check_val_equal(evaluate(self.ratios["r2"], self.x), 1.5)
        utils.check_close(evaluate(self.ratios["r2_p"], self.x), 2 / 3)

    def test_compositional_equal_parts(self):
        x = Composition((50.0, 25.0, 25.0), (STL, LTL, EQ))
        utils.check_val_equal(evaluate(self.ratios["z2"], x), 0.0)

    def test_reciprocal_law(self):
        rng = np.random.Generator(np.random.PCG64(5))
        for parts in np.exp(rng.normal(8, 2, size=(200, 3))):
            x = Composition(tuple(parts), (STL, LTL, EQ))
            for name in ["r1", "r2"]:
                spec = self.ratios[name]
                utils.check_close(evaluate(permute(spec), x) * evaluate(spec, x), 1.0)
                assert evaluate(spec, x) > 0

    def test_compositional_antisymmetry(self):
        rng = np.random.Generator(np.random.PCG64(6))
        for parts in np.exp(rng.normal(8, 2, size=(200, 3))):
            x = Composition(tuple(parts), (STL, LTL, EQ))
            for name in ["z1", "z2"]:
                value = evaluate(self.ratios[name], x)
                assert abs(evaluate(permute(self.ratios[name]), x) + value) <= 1e-13 * max(1.0, abs(value))

    def test_missing_label(self):
        spec = RatioSpec("tang", (FA, ), (CA, ))
        utils.check_raises(lambda: evaluate(spec, self.x), LabelLookupError)

    def test_frame_matches_single(self):
        rng = np.random.Generator(np.random.PCG64(8))
        frame = pd.DataFrame(np.exp(rng.normal(5, 1, size=(50, 3))), columns=[STL, LTL, EQ])
        for spec in default_catalog(Scheme.D3):
            values = evaluate_frame(spec, frame)
            utils.check_val_equal(values.name, spec.name)
            expected = [evaluate(spec, Composition(tuple(row), (STL, LTL, EQ))) for row in frame.to_numpy()]
            utils.check_close(values.to_numpy(), expected, rtol=1e-13, atol=1e-14)

    def test_frame_missing_column(self):
        frame = pd.DataFrame({STL: [1.0], LTL: [2.0]})
        utils.check_raises(lambda: evaluate_frame(RatioSpec("r1", (STL, ), (LTL, EQ)), frame), LabelLookupError)


@pytest.mark.ratios
class TestSpecs(unittest.TestCase):
    def test_invalid_specs(self):
        utils.check_raises(lambda: RatioSpec("r", (STL, ), (STL, )), RatioSpecError)
        utils.check_raises(lambda: RatioSpec("r", (), (STL, )), RatioSpecError)
        utils.check_raises(lambda: RatioSpec("r", (STL, STL), (LTL, )), RatioSpecError)
        utils.check_raises(lambda: RatioSpec("", (STL, ), (LTL, )), RatioSpecError)
        utils.check_raises(lambda: RatioSpec("r", (STL, ), (LTL, ), "unknown"), RatioSpecError)

    def test_permute(self):
        r1 = RatioSpec("r1", (STL, ), (LTL, EQ))
        r1_p = permute(r1)
        utils.check_val_equal(r1_p.name, "r1_p")
        utils.check_all_equal(r1_p.numerator, (LTL, EQ))
        utils.check_all_equal(r1_p.denominator, (STL, ))
        twice = permute(r1_p)
        utils.check_val_equal((twice.numerator, twice.denominator, twice.kind),
                              (r1.numerator, r1.denominator, r1.kind))

    def test_negate_traditional(self):
        utils.check_raises(lambda: negate(RatioSpec("r1", (STL, ), (LTL, EQ))), RatioSpecError)

    def test_parse_and_format(self):
        spec = parse_ratio("lev = (STL + LTL) / (EQ)")
        utils.check_val_equal(spec, RatioSpec("lev", (STL, LTL), (EQ, )))
        utils.check_val_equal(format_ratio(spec), "lev = (STL + LTL) / (EQ)")
        utils.check_val_equal(parse_ratio("m=LTL/STL", kind="compositional").kind, RatioKind.COMPOSITIONAL)
        utils.check_val_equal(parse_ratio(format_ratio(spec)), spec)

    def test_parse_errors(self):
        for text in ["lev (STL) / (EQ)", "lev = (STL + ) / (EQ)", "lev = (STL / (EQ)", "lev = STL", ""]:
            utils.check_raises(lambda: parse_ratio(text), RatioSpecError, msg=text)


@pytest.mark.ratios
class TestCatalog(unittest.TestCase):
    def test_d3_catalog(self):
        specs = default_catalog(Scheme.D3)
        utils.check_all_equal([spec.name for spec in specs], ["z1", "r1", "r1_p", "z2", "r2", "r2_p"])
        kinds = [spec.kind for spec in specs]
        utils.check_val_equal(kinds.count(RatioKind.TRADITIONAL), 4)
        utils.check_val_equal(kinds.count(RatioKind.COMPOSITIONAL), 2)
        ratios = {spec.name: spec for spec in specs}
        utils.check_val_equal(ratios["r1"], RatioSpec("r1", (STL, ), (LTL, EQ)))
        utils.check_val_equal(ratios["r1_p"], RatioSpec("r1_p", (LTL, EQ), (STL, )))
        utils.check_val_equal(ratios["r2"], RatioSpec("r2", (LTL, ), (EQ, )))
        utils.check_val_equal(ratios["z1"], RatioSpec("z1", (STL, ), (LTL, EQ), RatioKind.COMPOSITIONAL))
        utils.check_val_equal(ratios["z2"], RatioSpec("z2", (LTL, ), (EQ, ), RatioKind.COMPOSITIONAL))

    def test_d4_catalog(self):
        ratios = {spec.name: spec for spec in default_catalog("d4")}
        utils.check_all_equal(list(ratios), ["z1", "z2", "z3", "r1", "r1_p", "r2", "r3"])
        utils.check_val_equal(ratios["z1"].numerator, (LTL, STL))
        utils.check_val_equal(ratios["z1"].denominator, (FA, CA))
        utils.check_val_equal(ratios["r1"], RatioSpec("r1", (LTL, STL), (FA, CA)))
        utils.check_val_equal(ratios["r3"], RatioSpec("r3", (FA, ), (CA, )))

    def test_both_schemes(self):
        utils.check_val_equal(len(default_catalog()), 13)
        utils.check_raises(lambda: default_catalog("d5"), RatioSpecError)

    def test_get_ratio(self):
        utils.check_val_equal(get_ratio("r2", "d3").denominator, (EQ, ))
        utils.check_val_equal(get_ratio("r2_p", "d3").numerator, (EQ, ))
        utils.check_val_equal(get_ratio("z3_p", "d4").numerator, (CA, ))
        reversed_z1 = get_ratio("-z1", "d3")
        utils.check_val_equal(reversed_z1.name, "z1_p")
        utils.check_all_equal(reversed_z1.numerator, (LTL, EQ))
        utils.check_val_equal(get_ratio("lev = (STL + LTL) / (EQ)", "d3").name, "lev")
        utils.check_raises(lambda: get_ratio("-r1", "d3"), RatioSpecError)
        err = utils.check_raises(lambda: get_ratio("r9", "d3"), UnknownRatioError)
        assert isinstance(err, LabelLookupError)
        utils.check_val_equal(err.exit_code, 1)

    def test_get_ratio_extra(self):
        extra = [parse_ratio("lev = (STL + LTL) / (EQ)")]
        utils.check_val_equal(get_ratio("lev", "d3", extra), extra[0])
        utils.check_val_equal(get_ratio("lev_p", "d3", extra).numerator, (EQ, ))

    def test_spec_json(self):
        data = get_ratio("z1", "d3").json()
        utils.check_val_equal(data["kind"], "compositional")
        utils.check_val_equal(data["text"], "z1 = (STL) / (LTL + EQ)")
