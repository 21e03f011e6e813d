"""
Operations behind the command line helpers.

Every operation reads its inputs, delegates all computations to the library modules, writes its files under the
output directory and returns the :class:`RunReport` describing the run.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ratiocoda.config import RunConfig
from ratiocoda.constants import DEFAULT_METHOD, DEFAULT_SCHEME
from ratiocoda.ingest import (
    FIELD_FAMILY,
    FIELD_FIRM_ID,
    FIELD_YEAR,
    IngestConfig,
    IngestSchemaError,
    PanelDataset,
    SchemeError,
    parse_panel_csv,
    read_column_mapping,
    write_panel_csv,
    write_rejections
)
from ratiocoda.lmm import (
    DiagnosticsBundle,
    Method,
    SignConsistency,
    WaldReport,
    build_design,
    diagnostics,
    fit,
    sign_consistency,
    wald_report
)
from ratiocoda.ratios import (
    PERMUTED_SUFFIX,
    RatioKind,
    RatioSpec,
    Scheme,
    default_catalog,
    evaluate_frame,
    get_ratio,
    permute
)
from ratiocoda.report import (
    RunReport,
    compare_table,
    sign_consistency_table,
    write_csv,
    write_diagnostics,
    write_json,
    write_wald
)
from ratiocoda.simulate import gen_panel, load_sim_config, toy_companies, toy_frame
from ratiocoda.stats import describe_series, group_means, tukey_outliers
from ratiocoda.typedefs import JSON, ConfigDict, MethodName, SchemeName
from ratiocoda.utils import RatioCodaError, get_logger

LOGGER = get_logger(__name__)

GROUP_FAMILY = "family"
GROUP_NON_FAMILY = "non_family"
GROUP_ALL = "all"

ModelResult = Tuple[Optional[WaldReport], Optional[DiagnosticsBundle], Optional[JSON]]


def _prepare(out_dir: str, command: str, input_path: Optional[str], config: RunConfig,
             timestamps: bool) -> RunReport:
    os.makedirs(out_dir, exist_ok=True)
    run = RunReport(command, input=os.path.basename(input_path) if input_path else None, config=config.json())
    return run.stamp() if timestamps else run


def load_panel(input_path: str, config: Optional[RunConfig] = None, columns: Optional[str] = None) -> PanelDataset:
    """
    Reads the input panel with the column mapping file when given, otherwise with the configured mapping.
    """
    config = config or RunConfig()
    if not os.path.isfile(input_path):
        raise IngestSchemaError(f"Input panel [{input_path}] not found.", path=input_path)
    ingest = config.ingest
    if columns:
        mapping = read_column_mapping(columns)
        ingest = IngestConfig(mapping.columns, config.ingest.year_min, config.ingest.year_max)
    return parse_panel_csv(input_path, ingest)


def _scheme(scheme: Union[Scheme, SchemeName, None]) -> Scheme:
    found = Scheme.get(scheme or DEFAULT_SCHEME)
    if found is None:
        raise SchemeError(f"Unknown composition scheme [{scheme}], expected one of {Scheme.values()}.",
                          scheme=str(scheme))
    return found


def _groups(panel: PanelDataset, frame: pd.DataFrame) -> pd.Series:
    if not panel.has_family:
        LOGGER.warning("Panel has no family flag, ratios are described as a single group.")
        return pd.Series(GROUP_ALL, index=frame.index)
    return frame[FIELD_FAMILY].map({True: GROUP_FAMILY, False: GROUP_NON_FAMILY})


def run_describe(input_path: str,
                 scheme: Union[Scheme, SchemeName, None] = DEFAULT_SCHEME,
                 ratios: Optional[Sequence[str]] = None,
                 config: Optional[RunConfig] = None,
                 out_dir: str = ".",
                 columns: Optional[str] = None,
                 timestamps: bool = False,
                 ) -> RunReport:
    """
    Boxplot summary and skewness of every ratio within family and non-family firms, with their group averages.

    Writes ``boxplots.json``, ``skewness.csv`` and ``group_means.csv``.
    """
    config = config or RunConfig()
    found = _scheme(scheme)
    run = _prepare(out_dir, "describe", input_path, config, timestamps)
    panel = load_panel(input_path, config, columns).require_rows()
    specs = [get_ratio(name, found, config.extra_ratios) for name in ratios] if ratios else default_catalog(found)
    frame = panel.to_frame()
    groups = _groups(panel, frame)
    group_order = [grp for grp in (GROUP_FAMILY, GROUP_NON_FAMILY, GROUP_ALL) if (groups == grp).any()]
    keys = list(zip(frame[FIELD_FIRM_ID].astype(str), (int(year) for year in frame[FIELD_YEAR])))

    boxplots: List[JSON] = []
    skews: List[Dict[str, object]] = []
    means: List[Dict[str, object]] = []
    for spec in specs:
        usable = frame.loc[:, list(spec.labels)].notna().all(axis=1) if set(spec.labels) <= set(frame.columns) \
            else pd.Series(False, index=frame.index)
        if not usable.any():
            LOGGER.warning("Ratio [%s] cannot be evaluated on any row, skipped.", spec.name)
            continue
        values = evaluate_frame(spec, frame.loc[usable])
        rows = np.flatnonzero(usable.to_numpy())
        for group in group_order:
            selected = (groups.loc[usable] == group).to_numpy()
            if not selected.any():
                continue
            described = describe_series(values.to_numpy()[selected], [keys[idx] for idx in rows[selected]])
            boxplots.append({"group": group, "ratio": spec.name, "kind": spec.kind.value,
                             "boxplot": described.boxplot.json()})
            skews.append({"group": group, "ratio": spec.name, "n": described.boxplot.n,
                          "skewness": described.skewness})
        for group, result in group_means(values.to_numpy(), list(groups.loc[usable])).items():
            means.append({"ratio": spec.name, "group": group, **result.json()})

    run.settings = {"scheme": found.value, "ratios": [spec.name for spec in specs]}
    run.rejections = panel.rejection_counts()
    run.sections["summaries"] = len(boxplots)
    run.files = [
        write_json(os.path.join(out_dir, "boxplots.json"), boxplots),
        write_csv(os.path.join(out_dir, "skewness.csv"),
                  pd.DataFrame.from_records(skews, columns=["group", "ratio", "n", "skewness"])),
        write_csv(os.path.join(out_dir, "group_means.csv"),
                  pd.DataFrame.from_records(means, columns=["ratio", "group", "n", "arithmetic_mean",
                                                            "geometric_mean"])),
    ]
    return run


def _fit_model(panel: PanelDataset, spec: RatioSpec, method: Method, baseline_year: int) -> ModelResult:
    try:
        frame = build_design(panel, spec, baseline_year=baseline_year)
        result = fit(frame, method)
        return wald_report(result), diagnostics(result), None
    except RatioCodaError as exc:
        LOGGER.error("Model of [%s] failed: %s", spec.name, exc)
        return None, None, exc.json()


def run_fit(input_path: str,
            response: str,
            scheme: Union[Scheme, SchemeName, None] = DEFAULT_SCHEME,
            method: Union[Method, MethodName] = DEFAULT_METHOD,
            config: Optional[RunConfig] = None,
            out_dir: str = ".",
            columns: Optional[str] = None,
            timestamps: bool = False,
            ) -> Tuple[RunReport, WaldReport, DiagnosticsBundle]:
    """
    Fits the random-intercept model of one response.

    Writes ``<name>_wald.csv``, ``<name>_wald.json``, ``<name>_diagnostics.jsonl``, ``<name>_diagnostics.json`` and
    ``rejections.jsonl``.

    :raises DesignError: when the design cannot be estimated.
    :raises LmmFitError: when the fit does not converge.
    """
    config = config or RunConfig()
    found = _scheme(scheme)
    run = _prepare(out_dir, "fit", input_path, config, timestamps)
    panel = load_panel(input_path, config, columns).require_rows()
    spec = get_ratio(response, found, config.extra_ratios)
    frame = build_design(panel, spec, baseline_year=config.baseline_year)
    result = fit(frame, Method.get(method) or DEFAULT_METHOD)
    report = wald_report(result)
    bundle = diagnostics(result)

    run.settings = {"scheme": found.value, "response": spec.json(), "method": result.method.value,
                    "baseline_year": config.baseline_year}
    run.rejections = panel.rejection_counts()
    run.add_model(spec.name, report, bundle)
    rejections = os.path.join(out_dir, "rejections.jsonl")
    with open(rejections, mode="w", encoding="utf-8", newline="\n") as stream:
        write_rejections(list(panel.rejected) + list(frame.rejected), stream)
    run.files = write_wald(out_dir, report) + write_diagnostics(out_dir, bundle) + [rejections]
    return run, report, bundle


def compare_models(scheme: Scheme, permuted: bool = False) -> List[RatioSpec]:
    """
    Responses compared side by side: the catalog of the scheme, with the permutation of every balance when requested.
    """
    specs: List[RatioSpec] = []
    catalog = default_catalog(scheme)
    names = {spec.name for spec in catalog}
    for spec in catalog:
        specs.append(spec)
        if permuted and spec.kind == RatioKind.COMPOSITIONAL and f"{spec.name}{PERMUTED_SUFFIX}" not in names:
            specs.append(permute(spec))
    return specs


def run_compare(input_path: str,
                scheme: Union[Scheme, SchemeName, None] = DEFAULT_SCHEME,
                method: Union[Method, MethodName] = DEFAULT_METHOD,
                config: Optional[RunConfig] = None,
                out_dir: str = ".",
                columns: Optional[str] = None,
                jobs: int = 1,
                permuted: bool = False,
                timestamps: bool = False,
                ) -> RunReport:
    """
    Fits every catalog response on the same panel and reports the models side by side.

    Models may be fitted concurrently, results are always assembled in catalog order. A failing model is recorded in
    the report without stopping the others.

    Writes ``compare_table.csv``, ``report.json``, ``<name>_diagnostics.jsonl`` per fitted model and
    ``sign_consistency.csv``.
    """
    config = config or RunConfig()
    found = _scheme(scheme)
    chosen = Method.get(method) or Method.REML
    run = _prepare(out_dir, "compare", input_path, config, timestamps)
    panel = load_panel(input_path, config, columns).require_rows()
    specs = compare_models(found, permuted)

    def fit_one(spec: RatioSpec) -> ModelResult:
        return _fit_model(panel, spec, chosen, config.baseline_year)

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as executor:
        results = list(executor.map(fit_one, specs))

    reports: Dict[str, Optional[WaldReport]] = {}
    files: List[str] = []
    for spec, (report, bundle, error) in zip(specs, results):
        run.add_model(spec.name, report, bundle, error)
        reports[spec.name] = report
        if bundle is not None:
            path = os.path.join(out_dir, f"{spec.name}_diagnostics.jsonl")
            with open(path, mode="w", encoding="utf-8", newline="\n") as stream:
                bundle.to_jsonl(stream)
            files.append(path)

    pairs: Dict[str, List[SignConsistency]] = {}
    for name, report in reports.items():
        base = name[:-len(PERMUTED_SUFFIX)] if name.endswith(PERMUTED_SUFFIX) else None
        if report is not None and base and reports.get(base) is not None:
            pairs[f"{base}/{name}"] = sign_consistency(reports[base], report)

    run.settings = {"scheme": found.value, "method": chosen.value, "baseline_year": config.baseline_year,
                    "models": [spec.name for spec in specs]}
    run.rejections = panel.rejection_counts()
    run.sections["sign_consistency"] = {
        pair: [item.json() for item in items] for pair, items in pairs.items()
    }
    table_path = write_csv(os.path.join(out_dir, "compare_table.csv"), compare_table(reports))
    signs_path = write_csv(os.path.join(out_dir, "sign_consistency.csv"), sign_consistency_table(pairs))
    report_path = os.path.join(out_dir, "report.json")
    run.files = [table_path, report_path] + files + [signs_path]
    write_json(report_path, run.json())
    if run.all_failed:
        LOGGER.error("All %s models failed.", len(specs))
    return run


def run_simulate(config_path_or_dict: Union[str, ConfigDict, None] = None,
                 seed: Optional[int] = None,
                 out_dir: str = ".",
                 timestamps: bool = False,
                 ) -> RunReport:
    """
    Generates a synthetic panel, written as ``panel.csv`` with its ``ground_truth.json``.
    """
    sim_config = load_sim_config(config_path_or_dict, seed)
    os.makedirs(out_dir, exist_ok=True)
    run = RunReport("simulate", seed=sim_config.seed, config={"simulate": sim_config.json()})
    if timestamps:
        run.stamp()
    panel, truth = gen_panel(sim_config)
    panel_path = os.path.join(out_dir, "panel.csv")
    with open(panel_path, mode="w", encoding="utf-8", newline="\n") as stream:
        write_panel_csv(panel, stream)
    truth_path = write_json(os.path.join(out_dir, "ground_truth.json"), {"config": sim_config.json(), **truth.json()})
    run.settings = {"n_firms": sim_config.n_firms, "years": sim_config.years, "rows": panel.n_rows}
    run.files = [panel_path, truth_path]
    return run


def toy_bundle() -> JSON:
    """
    Ten companies with both traditional ratios of their two values, their balance and its sign reversal, along with
    the boxplot summary of every series keyed by company number.
    """
    companies = toy_companies()
    frame = toy_frame()
    ratio_a = RatioSpec("ratio_a", ("x1", ), ("x2", ))
    ratio_b = permute(ratio_a)
    balance = RatioSpec("balance", ("x1", ), ("x2", ), RatioKind.COMPOSITIONAL)
    specs = [ratio_a, ratio_b, balance, permute(balance)]
    keys = frame.index.tolist()
    series: Dict[str, List[float]] = {}
    boxplots: Dict[str, JSON] = {}
    outliers: Dict[str, List[int]] = {}
    for spec in specs:
        values = evaluate_frame(spec, frame)
        summary = tukey_outliers(values.to_numpy(), keys=keys)
        series[spec.name] = [float(val) for val in values]
        boxplots[spec.name] = summary.json()
        outliers[spec.name] = [int(key) for key in summary.outlier_keys]
    return {
        "companies": [item.json() for item in companies],
        "ratios": [spec.json() for spec in specs],
        "series": series,
        "boxplots": boxplots,
        "outliers": outliers,
    }


def run_toy(out_dir: str = ".", timestamps: bool = False) -> Tuple[RunReport, JSON]:
    """
    Writes the ten company example as ``toy.json``.
    """
    os.makedirs(out_dir, exist_ok=True)
    run = RunReport("toy")
    if timestamps:
        run.stamp()
    bundle = toy_bundle()
    run.sections["outliers"] = bundle["outliers"]
    run.files = [write_json(os.path.join(out_dir, "toy.json"), bundle)]
    return run, bundle
