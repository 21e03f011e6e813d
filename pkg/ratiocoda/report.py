"""
Run reports and the writers of the files produced by the commands.

Tables are written as CSV with numbers at 15 significant digits, nested results as JSON or JSON lines. Nothing written
here depends on the time of the run unless timestamps are requested.
"""
import datetime
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd
import simplejson

from ratiocoda import __meta__
from ratiocoda.constants import CSV_FLOAT_FORMAT
from ratiocoda.lmm.inference import DiagnosticsBundle, SignConsistency, WaldReport
from ratiocoda.typedefs import JSON
from ratiocoda.utils import get_logger

LOGGER = get_logger(__name__)

STAT_COLUMNS = (("coefficient", "coefficient"), ("se", "se"), ("p", "p_value"))


def dumps(data: Any) -> str:
    return simplejson.dumps(data, indent=2, ignore_nan=True) + "\n"


def write_json(path: str, data: Any) -> str:
    with open(path, mode="w", encoding="utf-8", newline="\n") as stream:
        stream.write(dumps(data))
    LOGGER.debug("Wrote [%s].", path)
    return path


def write_csv(path: str, frame: pd.DataFrame) -> str:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    LOGGER.debug("Wrote [%s].", path)
    return path


def write_wald(out_dir: str, report: WaldReport) -> List[str]:
    """
    Coefficient table of one model as ``<name>_wald.csv`` and ``<name>_wald.json``.
    """
    base = os.path.join(out_dir, f"{file_stem(report.response_name)}_wald")
    return [write_csv(f"{base}.csv", report.to_frame()), write_json(f"{base}.json", report.json())]


def write_diagnostics(out_dir: str, bundle: DiagnosticsBundle) -> List[str]:
    """
    Per-row diagnostics as ``<name>_diagnostics.jsonl`` and their summary as ``<name>_diagnostics.json``.
    """
    base = os.path.join(out_dir, f"{file_stem(bundle.response_name)}_diagnostics")
    with open(f"{base}.jsonl", mode="w", encoding="utf-8", newline="\n") as stream:
        bundle.to_jsonl(stream)
    return [f"{base}.jsonl", write_json(f"{base}.json", bundle.json())]


def file_stem(name: str) -> str:
    """
    File name part of a response, a leading minus of a reversed balance becoming ``neg_``.
    """
    stem = f"neg_{name[1:]}" if name.startswith("-") else name
    return "".join(char if char.isalnum() or char in "_.-" else "_" for char in stem)


def compare_table(reports: Mapping[str, Optional[WaldReport]]) -> pd.DataFrame:
    """
    Side by side coefficient, standard error and p-value of every model, one row per term.

    Terms follow the order of the first available report. A failed model keeps its columns, left empty.
    """
    terms: List[str] = []
    for report in reports.values():
        if report is not None:
            terms.extend(term for term in report.terms if term not in terms)
    table: Dict[str, List[Any]] = {"term": terms}
    for name, report in reports.items():
        rows = {row.term: row for row in report.rows} if report is not None else {}
        for suffix, attribute in STAT_COLUMNS:
            table[f"{name}_{suffix}"] = [
                getattr(rows[term], attribute) if term in rows else np.nan for term in terms
            ]
    return pd.DataFrame(table)


def sign_consistency_table(pairs: Mapping[str, List[SignConsistency]]) -> pd.DataFrame:
    records = [dict(pair=name, **item.json()) for name, items in pairs.items() for item in items]
    columns = ["pair", "term", "coefficient_a", "coefficient_b", "same_sign", "magnitude_ratio"]
    return pd.DataFrame.from_records(records, columns=columns)


@dataclass
class RunReport:
    """
    Summary of a command run: model tables, diagnostics summaries, rejections and the settings that produced them.
    """
    command: str
    input: Optional[str] = None
    seed: Optional[int] = None
    config: JSON = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    rejections: Dict[str, int] = field(default_factory=dict)
    models: Dict[str, JSON] = field(default_factory=dict)
    sections: Dict[str, JSON] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    timestamp: Optional[str] = None

    def stamp(self) -> "RunReport":
        self.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return self

    def add_model(self,
                  name: str,
                  report: Optional[WaldReport] = None,
                  bundle: Optional[DiagnosticsBundle] = None,
                  error: Optional[JSON] = None,
                  ) -> None:
        entry: Dict[str, Any] = {"status": "failed" if error is not None else "fitted"}
        if report is not None:
            entry["report"] = report.json()
        if bundle is not None:
            entry["diagnostics"] = bundle.json()
        if error is not None:
            entry["error"] = error
        self.models[name] = entry

    @property
    def n_failed(self) -> int:
        return sum(1 for entry in self.models.values() if isinstance(entry, dict) and entry.get("status") == "failed")

    @property
    def all_failed(self) -> bool:
        return bool(self.models) and self.n_failed == len(self.models)

    def json(self) -> JSON:
        data: Dict[str, Any] = {
            "tool": __meta__.__package__,
            "version": __meta__.__version__,
            "command": self.command,
        }
        if self.timestamp:
            data["timestamp"] = self.timestamp
        if self.input is not None:
            data["input"] = self.input
        if self.seed is not None:
            data["seed"] = self.seed
        data["settings"] = self.settings
        data["config"] = self.config
        data["rejections"] = self.rejections
        if self.models:
            data["models"] = self.models
        data.update(self.sections)
        data["files"] = [os.path.basename(path) for path in self.files]
        return data

    def summary(self) -> JSON:
        """
        Short form printed by the command line.
        """
        data: Dict[str, Any] = {"command": self.command}
        if self.rejections:
            data["rejections"] = self.rejections
        if self.models:
            data["models"] = {
                name: {
                    "status": entry.get("status"),
                    "converged": entry.get("report", {}).get("converged"),
                    "boundary": entry.get("report", {}).get("boundary"),
                } if isinstance(entry, dict) else entry
                for name, entry in self.models.items()
            }
        data["files"] = [os.path.basename(path) for path in self.files]
        return data
