#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
test_ingest
----------------------------------

Tests for :mod:`ratiocoda.ingest` module.
"""
import io
import unittest

import pytest
import simplejson

from ratiocoda.coda import CA, EQ, FA, LTL, STL
from ratiocoda.ingest import (
    IngestConfig,
    IngestSchemaError,
    NoValidRowsError,
    Rejection,
    RejectReason,
    SchemeError,
    TechIntensity,
    dump_panel_csv,
    parse_panel_csv,
    read_column_mapping,
    to_composition,
    write_rejections
)
from tests import utils

HEADER = "firm_id,year,family,tech_intensity,innovation,employees,stl,ltl,equity\n"


def parse_text(text, config=None):
    return parse_panel_csv(io.StringIO(text), config)


@pytest.mark.ingest
class TestParsePanel(unittest.TestCase):
    def test_fixture(self):
        dataset = parse_panel_csv(utils.TEST_PANEL_FILE)
        utils.check_val_equal(dataset.n_rows, 5)
        utils.check_val_equal(dataset.n_firms, 3)
        utils.check_val_equal(dataset.rejected, ())
        utils.check_all_equal(dataset.years, [2007, 2008])
        first = dataset.rows[0]
        utils.check_val_equal(first.key, ("F001", 2007))
        utils.check_val_equal(first.line, 2)
        utils.check_val_equal((first.family, first.innovation), (True, False))
        utils.check_val_equal(dataset.rows[2].tech_intensity, TechIntensity.MID)
        utils.check_val_equal(dataset.rows[4].stl, 0.125)
        assert dataset.has_family
        assert not dataset.has_assets

    def test_reserialize_identical(self):
        dataset = parse_panel_csv(utils.TEST_PANEL_FILE)
        utils.check_val_equal(dump_panel_csv(dataset), utils.read_text(utils.TEST_PANEL_FILE))

    def test_reserialize_reparse(self):
        dataset = parse_panel_csv(utils.TEST_PANEL_FILE)
        again = parse_text(dump_panel_csv(dataset))
        utils.check_val_equal(again.rows, dataset.rows)

    def test_binary_stream(self):
        with open(utils.TEST_PANEL_FILE, mode="rb") as stream:
            utils.check_val_equal(parse_panel_csv(stream).n_rows, 5)

    def test_non_positive_component(self):
        dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50,30,-5\nF2,2007,0,Low,0,10,50,0,20\n")
        utils.check_val_equal(dataset.n_rows, 0)
        utils.check_all_equal([(rej.line, rej.reason, rej.field) for rej in dataset.rejected], [
            (2, RejectReason.NON_POSITIVE_COMPONENT, "equity"),
            (3, RejectReason.NON_POSITIVE_COMPONENT, "ltl"),
        ])

    def test_rejection_reasons(self):
        text = HEADER + "\n".join([
            "F1,2007,1,Low,0,10,50,30,20",
            "F1,2007,1,Low,0,10,51,30,20",
            "F2,2007,1,Low,0,10,abc,30,20",
            "F3,1800,1,Low,0,10,50,30,20",
            "F4,2007,maybe,Low,0,10,50,30,20",
            "F5,2007,1,Extreme,0,10,50,30,20",
            "F6,2007,1,Low,0,,50,30,20",
            "F7,2007,1,Low,0,0,50,30,20",
            "F8,2007.5,1,Low,0,10,50,30,20",
            "F9,2007,1,Low,0,10,inf,30,20",
        ]) + "\n"
        dataset = parse_text(text)
        utils.check_val_equal(dataset.n_rows, 1)
        utils.check_val_equal(dataset.n_lines, 10)
        found = {rej.line: (rej.reason, rej.field) for rej in dataset.rejected}
        utils.check_val_equal(found, {
            3: (RejectReason.DUPLICATE_KEY, "firm_id,year"),
            4: (RejectReason.UNPARSABLE_NUMBER, "stl"),
            5: (RejectReason.YEAR_OUT_OF_RANGE, "year"),
            6: (RejectReason.INVALID_CATEGORY, "family"),
            7: (RejectReason.INVALID_CATEGORY, "tech_intensity"),
            8: (RejectReason.MISSING_FIELD, "employees"),
            9: (RejectReason.NON_POSITIVE_COMPONENT, "employees"),
            10: (RejectReason.UNPARSABLE_NUMBER, "year"),
            11: (RejectReason.UNPARSABLE_NUMBER, "stl"),
        })
        utils.check_val_equal(dataset.rejection_counts(), {
            "duplicate_key": 1,
            "invalid_category": 2,
            "missing_field": 1,
            "non_positive_component": 1,
            "unparsable_number": 3,
            "year_out_of_range": 1,
        })

    def test_extra_fields_line_rejected(self):
        text = HEADER + "F1,2007,1,Low,0,10,50,30,20\nF2,2007,1,Low,0,10,50,30,20,99\nF3,2007,1,Low,0,10,50,30,20\n"
        dataset = parse_text(text)
        utils.check_all_equal([row.firm_id for row in dataset.rows], ["F1", "F3"])
        utils.check_all_equal([row.line for row in dataset.rows], [2, 4])
        utils.check_val_equal(dataset.rejected, (Rejection(3, RejectReason.MALFORMED_LINE),))
        utils.check_val_equal(dataset.n_lines, 3)

    def test_short_line_rejected(self):
        dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50\nF2,2007,1,Low,0,10,50,30,20\n")
        utils.check_val_equal(dataset.n_rows, 1)
        utils.check_val_equal(dataset.rejected, (Rejection(2, RejectReason.MISSING_FIELD, "ltl"),))

    def test_duplicate_keeps_first(self):
        dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50,30,20\nF1,2007,1,Low,0,10,99,30,20\n")
        utils.check_val_equal(dataset.rows[0].stl, 50.0)
        utils.check_val_equal(dataset.rejected[0].line, 3)

    def test_categories(self):
        text = HEADER + "F1,2007,yes,mild,TRUE,10,50,30,20\nF2,2007,no,HIGH,n,10,50,30,20\n"
        dataset = parse_text(text)
        utils.check_val_equal(dataset.rows[0].tech_intensity, TechIntensity.MID)
        utils.check_val_equal(dataset.rows[1].tech_intensity, TechIntensity.HIGH)
        utils.check_val_equal((dataset.rows[0].family, dataset.rows[0].innovation), (True, True))
        utils.check_val_equal((dataset.rows[1].family, dataset.rows[1].innovation), (False, False))

    def test_year_range(self):
        config = IngestConfig(year_min=2008, year_max=2010)
        dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50,30,20\nF1,2010,1,Low,0,10,50,30,20\n", config)
        utils.check_all_equal(dataset.years, [2010])
        utils.check_val_equal(dataset.rejected[0].reason, RejectReason.YEAR_OUT_OF_RANGE)
        utils.check_raises(lambda: IngestConfig(year_min=2010, year_max=2008), IngestSchemaError)

    def test_missing_family_column(self):
        text = "firm_id,year,tech_intensity,innovation,employees,stl,ltl,equity\nF1,2007,Low,0,10,50,30,20\n"
        dataset = parse_text(text)
        assert not dataset.has_family
        utils.check_val_equal(dataset.rows[0].family, None)
        utils.check_val_equal(dump_panel_csv(dataset), text)

    def test_missing_required_column(self):
        text = "firm_id,year,family,tech_intensity,innovation,employees,stl,ltl\nF1,2007,1,Low,0,10,50,30\n"
        err = utils.check_raises(lambda: parse_text(text), IngestSchemaError)
        utils.check_val_equal(err.details["missing"], ["equity"])

    def test_empty_input(self):
        utils.check_raises(lambda: parse_text(""), IngestSchemaError)

    def test_all_rejected(self):
        dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50,30,-1\n")
        err = utils.check_raises(dataset.require_rows, NoValidRowsError)
        utils.check_val_equal(err.json()["reason"], "no_valid_rows")
        utils.check_val_equal(err.exit_code, 2)

    def test_assets_columns(self):
        text = ("firm_id,year,family,tech_intensity,innovation,employees,stl,ltl,equity,fixed_assets,current_assets\n"
                "F1,2007,1,Low,0,10,50,30,20,60,40\n")
        dataset = parse_text(text)
        assert dataset.has_assets
        utils.check_val_equal(dump_panel_csv(dataset), text)


@pytest.mark.ingest
class TestColumnMapping(unittest.TestCase):
    def test_renamed_panel(self):
        config = read_column_mapping(utils.TEST_COLUMNS_FILE)
        utils.check_val_equal(config.columns["equity"], "net_worth")
        utils.check_val_equal(config.columns["fixed_assets"], "fixed_assets")
        dataset = parse_panel_csv(utils.TEST_RENAMED_PANEL_FILE, config)
        utils.check_val_equal(dataset.n_rows, 2)
        second = dataset.rows[1]
        utils.check_val_equal(second.key, ("A2", 2007))
        utils.check_val_equal((second.family, second.innovation), (False, True))
        utils.check_val_equal((second.stl, second.ltl, second.equity), (10.0, 10.0, 80.0))

    def test_renamed_panel_without_mapping(self):
        err = utils.check_raises(lambda: parse_panel_csv(utils.TEST_RENAMED_PANEL_FILE), IngestSchemaError)
        utils.check_val_is_in("firm_id", err.details["missing"])

    def test_unknown_field(self):
        utils.check_raises(lambda: IngestConfig.from_mapping({"debt": "total_debt"}), IngestSchemaError)

    def test_missing_mapping_file(self):
        utils.check_raises(lambda: read_column_mapping("/does/not/exist.cfg"), IngestSchemaError)

    def test_from_mapping_section(self):
        config = IngestConfig.from_mapping({"columns": {"firm_id": "company"}, "year_min": 2000})
        utils.check_val_equal(config.columns["firm_id"], "company")
        utils.check_val_equal(config.columns["year"], "year")
        utils.check_val_equal(config.year_min, 2000)


@pytest.mark.ingest
def test_to_composition():
    dataset = parse_panel_csv(utils.TEST_PANEL_FILE)
    comp = to_composition(dataset.rows[0])
    utils.check_all_equal(comp.labels, (STL, LTL, EQ))
    utils.check_all_equal(comp.parts, (50.0, 30.0, 20.0))
    err = utils.check_raises(lambda: to_composition(dataset.rows[0], "d4"), SchemeError)
    utils.check_val_equal(err.details["field"], "fixed_assets")
    utils.check_raises(lambda: to_composition(dataset.rows[0], "d9"), SchemeError)


@pytest.mark.ingest
def test_to_composition_d4():
    row = utils.make_row("F1", 2007, parts=(50.0, 30.0, 20.0), assets=(60.0, 40.0))
    comp = to_composition(row, "d4")
    utils.check_all_equal(comp.labels, (LTL, STL, FA, CA))
    utils.check_all_equal(comp.parts, (30.0, 50.0, 60.0, 40.0))


@pytest.mark.ingest
def test_to_frame():
    frame = parse_panel_csv(utils.TEST_PANEL_FILE).to_frame()
    utils.check_val_equal(len(frame), 5)
    utils.check_all_equal(list(frame[STL]), list(frame["stl"]))
    utils.check_val_equal(frame.loc[2, "tech_intensity"], "Mid")
    utils.check_val_equal(frame.loc[0, EQ], 20.0)


@pytest.mark.ingest
def test_write_rejections():
    dataset = parse_text(HEADER + "F1,2007,1,Low,0,10,50,30,-1\n")
    buffer = io.StringIO()
    write_rejections(dataset.rejected, buffer)
    lines = buffer.getvalue().splitlines()
    utils.check_val_equal(len(lines), 1)
    utils.check_val_equal(simplejson.loads(lines[0]),
                          {"field": "equity", "line": 2, "reason": "non_positive_component"})
