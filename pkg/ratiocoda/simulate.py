"""
Synthetic firm-year panels with a known balance-coordinate ground truth.

Both balances of the three-part composition (STL, LTL, EQ) follow the random-intercept model with the covariates of
the design. Components are obtained by back-transforming the balances and scaling them by a lognormal total, so they
are strictly positive by construction.

Random numbers come from :class:`numpy.random.Generator` over the ``PCG64`` bit generator, whose streams are portable
across platforms for a given seed. Normal draws use the ziggurat transform of that generator.
"""
import copy
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from schema import And, Or, Schema, Use

from ratiocoda.coda import D3_LABELS, d3_sbp, ilr_inverse_matrix
from ratiocoda.config import ConfigFieldError, get_section, validate_fields
from ratiocoda.constants import DEFAULT_BASELINE_YEAR
from ratiocoda.ingest import PanelDataset, PanelRow, TechIntensity
from ratiocoda.lmm.design import (
    COL_FAMILY,
    COL_FIRM_SIZE,
    COL_HIGH_TECH,
    COL_INNOVATION,
    COL_INTERCEPT,
    COL_MILD_TECH,
    YEAR_PREFIX
)
from ratiocoda.typedefs import JSON, ConfigDict, RowKey
from ratiocoda.utils import get_logger

LOGGER = get_logger(__name__)

COORDINATES = ("z1", "z2")
DEFAULT_SEED = 20240607
HEAVY_TAIL_DF = 3
_TECH_LEVELS = (TechIntensity.LOW, TechIntensity.MID, TechIntensity.HIGH)
_COVARIATES = (COL_INTERCEPT, COL_FAMILY, COL_MILD_TECH, COL_HIGH_TECH, COL_INNOVATION, COL_FIRM_SIZE)
_YEAR_TERM = re.compile(rf"{YEAR_PREFIX}\d+")


def default_true_beta() -> Dict[str, Dict[str, float]]:
    return {
        "z1": {
            COL_INTERCEPT: 0.3,
            COL_FAMILY: -0.05,
            COL_MILD_TECH: 0.02,
            COL_HIGH_TECH: -0.03,
            COL_INNOVATION: -0.02,
            COL_FIRM_SIZE: 0.04,
        },
        "z2": {
            COL_INTERCEPT: -0.4,
            COL_FAMILY: 0.03,
            COL_MILD_TECH: -0.02,
            COL_HIGH_TECH: 0.05,
            COL_INNOVATION: 0.01,
            COL_FIRM_SIZE: -0.03,
        },
    }


def _check_beta(value: Any) -> bool:
    if not isinstance(value, dict) or set(value) - set(COORDINATES):
        return False
    for coefs in value.values():
        if not isinstance(coefs, dict):
            return False
        for name, coef in coefs.items():
            if name not in _COVARIATES and not (isinstance(name, str) and _YEAR_TERM.fullmatch(name)):
                return False
            if isinstance(coef, bool) or not isinstance(coef, (int, float)):
                return False
    return True


_share = And(Use(float), lambda val: 0.0 <= val <= 1.0)
_nonneg = And(Use(float), lambda val: val >= 0.0)
_positive_count = And(int, lambda val: val > 0)

SIM_CONFIG_VALIDATORS = {
    "n_firms": _positive_count,
    "years": _positive_count,
    "first_year": And(int, lambda val: 0 < val < 10000),
    "true_beta": Schema(_check_beta, error="expected coefficients of 'z1' and 'z2' by design column name"),
    "sigma_u": _nonneg,
    "sigma_e": _nonneg,
    "family_share": _share,
    "tech_mix": And([_nonneg], lambda val: len(val) == 3 and abs(sum(val) - 1.0) < 1e-9),
    "innovation_rate": _share,
    "log_employees_mean": Use(float),
    "log_employees_sd": _nonneg,
    "employees_jitter_sd": _nonneg,
    "total_assets_log_mean": Use(float),
    "total_assets_log_sd": _nonneg,
    "seed": And(int, lambda val: 0 <= val < 2 ** 64),
    "heavy_tails": Or(bool, And(str, Use(lambda val: val.strip().lower() in ("true", "yes", "on", "1")))),
}


@dataclass(frozen=True)
class SimConfig:
    n_firms: int = 500
    years: int = 12
    first_year: int = DEFAULT_BASELINE_YEAR
    true_beta: Dict[str, Dict[str, float]] = field(default_factory=default_true_beta)
    sigma_u: float = 0.3
    sigma_e: float = 0.15
    family_share: float = 0.45
    tech_mix: Tuple[float, float, float] = (0.5, 0.3, 0.2)
    innovation_rate: float = 0.4
    log_employees_mean: float = 3.5
    log_employees_sd: float = 1.0
    employees_jitter_sd: float = 0.1
    total_assets_log_mean: float = 15.0
    total_assets_log_sd: float = 1.5
    seed: int = DEFAULT_SEED
    heavy_tails: bool = False

    def __post_init__(self) -> None:
        checked = validate_fields("simulate", self.json(), SIM_CONFIG_VALIDATORS)
        object.__setattr__(self, "tech_mix", tuple(checked["tech_mix"]))

    @property
    def n_rows(self) -> int:
        return self.n_firms * self.years

    def coefficient(self, coordinate: str, name: str) -> float:
        return float(self.true_beta.get(coordinate, {}).get(name, 0.0))

    def json(self) -> JSON:
        data = asdict(self)
        data["tech_mix"] = list(self.tech_mix)
        return data


def load_sim_config(path_or_dict: Union[str, ConfigDict, None] = None, seed: Optional[int] = None) -> SimConfig:
    """
    Simulation settings of the ``simulate`` section of a configuration file or mapping, over the defaults.

    A mapping without a ``simulate`` section is taken as the section itself. Coefficients given under ``true_beta``
    update the default coefficients of their coordinate.

    :param seed: overrides the configured seed.
    :raises ConfigFieldError: naming the first invalid field.
    """
    if isinstance(path_or_dict, dict) and "simulate" not in path_or_dict:
        section: Any = copy.deepcopy(path_or_dict)
    else:
        section = get_section(path_or_dict, "simulate") or {}
    data = validate_fields("simulate", section, SIM_CONFIG_VALIDATORS)
    if "true_beta" in data:
        beta = default_true_beta()
        for coordinate, coefs in data["true_beta"].items():
            beta[coordinate].update({name: float(coef) for name, coef in coefs.items()})
        data["true_beta"] = beta
    if "tech_mix" in data:
        data["tech_mix"] = tuple(data["tech_mix"])
    if seed is not None:
        data["seed"] = int(seed)
    try:
        return SimConfig(**data)
    except TypeError as exc:
        raise ConfigFieldError(f"Invalid simulation settings: {exc}", field="simulate") from exc


@dataclass(frozen=True, eq=False)
class GroundTruth:
    true_beta: Dict[str, Dict[str, float]]
    sigma_u: float
    sigma_e: float
    seed: int
    row_keys: Tuple[RowKey, ...]
    balances: np.ndarray
    firm_ids: Tuple[str, ...]
    firm_intercepts: np.ndarray

    def balances_of(self, key: RowKey) -> Tuple[float, float]:
        index = self.row_keys.index(key)
        return float(self.balances[index, 0]), float(self.balances[index, 1])

    def json(self) -> JSON:
        return {
            "seed": self.seed,
            "sigma_u": self.sigma_u,
            "sigma_e": self.sigma_e,
            "true_beta": self.true_beta,
            "firm_intercepts": {
                firm: {coord: float(value) for coord, value in zip(COORDINATES, values)}
                for firm, values in zip(self.firm_ids, self.firm_intercepts)
            },
            "balances": [
                {"firm_id": key[0], "year": key[1], "z1": float(values[0]), "z2": float(values[1])}
                for key, values in zip(self.row_keys, self.balances)
            ],
        }


def _noise(rng: np.random.Generator, shape: Tuple[int, ...], heavy_tails: bool) -> np.ndarray:
    """
    Standard normal draws, or Student-t draws rescaled to unit variance.
    """
    if not heavy_tails:
        return rng.standard_normal(shape)
    return rng.standard_t(HEAVY_TAIL_DF, shape) / np.sqrt(HEAVY_TAIL_DF / (HEAVY_TAIL_DF - 2))


def gen_panel(config: Optional[SimConfig] = None) -> Tuple[PanelDataset, GroundTruth]:
    """
    Generates a balanced panel of ``n_firms x years`` rows, deterministic for a given seed.
    """
    config = config or SimConfig()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n_firms, n_years = config.n_firms, config.years
    years = np.arange(config.first_year, config.first_year + n_years)

    # firm level draws
    family = rng.random(n_firms) < config.family_share
    tech = rng.choice(3, size=n_firms, p=np.asarray(config.tech_mix) / np.sum(config.tech_mix))
    log_employees = rng.normal(config.log_employees_mean, config.log_employees_sd, size=n_firms)
    intercepts = config.sigma_u * rng.standard_normal((n_firms, 2))

    # firm-year draws
    innovation = rng.random((n_firms, n_years)) < config.innovation_rate
    log_size = log_employees[:, np.newaxis] + config.employees_jitter_sd * rng.standard_normal((n_firms, n_years))
    noise = config.sigma_e * _noise(rng, (n_firms, n_years, 2), config.heavy_tails)
    log_total = rng.normal(config.total_assets_log_mean, config.total_assets_log_sd, size=(n_firms, n_years))

    covariates = {
        COL_INTERCEPT: np.ones((n_firms, n_years)),
        COL_FAMILY: np.repeat(family[:, np.newaxis], n_years, axis=1).astype(float),
        COL_MILD_TECH: np.repeat((tech == 1)[:, np.newaxis], n_years, axis=1).astype(float),
        COL_HIGH_TECH: np.repeat((tech == 2)[:, np.newaxis], n_years, axis=1).astype(float),
        COL_INNOVATION: innovation.astype(float),
        COL_FIRM_SIZE: log_size,
    }
    balances = np.empty((n_firms, n_years, 2))
    for axis, coordinate in enumerate(COORDINATES):
        linear = np.zeros((n_firms, n_years))
        for name, coef in config.true_beta.get(coordinate, {}).items():
            if name.startswith(YEAR_PREFIX):
                linear += coef * (years == int(name[len(YEAR_PREFIX):]))[np.newaxis, :]
            else:
                linear += coef * covariates[name]
        balances[:, :, axis] = linear + intercepts[:, axis, np.newaxis] + noise[:, :, axis]

    flat = balances.reshape(-1, 2)
    parts = ilr_inverse_matrix(flat, d3_sbp()) * np.exp(log_total.reshape(-1, 1))
    labels = list(d3_sbp().labels)
    stl, ltl, equity = (parts[:, labels.index(label)] for label in D3_LABELS)
    employees = np.exp(log_size).ravel()
    firm_ids = tuple(f"F{idx + 1:04d}" for idx in range(n_firms))

    rows: List[PanelRow] = []
    keys: List[RowKey] = []
    for index in range(n_firms * n_years):
        firm, step = divmod(index, n_years)
        row = PanelRow(
            firm_id=firm_ids[firm],
            year=int(years[step]),
            family=bool(family[firm]),
            tech_intensity=_TECH_LEVELS[int(tech[firm])],
            innovation=bool(innovation[firm, step]),
            employees=float(employees[index]),
            stl=float(stl[index]),
            ltl=float(ltl[index]),
            equity=float(equity[index]),
            line=index + 2,
        )
        rows.append(row)
        keys.append(row.key)
    LOGGER.info("Generated %s firms over %s years with seed %s.", n_firms, n_years, config.seed)
    truth = GroundTruth(
        true_beta=copy.deepcopy(config.true_beta),
        sigma_u=config.sigma_u,
        sigma_e=config.sigma_e,
        seed=config.seed,
        row_keys=tuple(keys),
        balances=flat,
        firm_ids=firm_ids,
        firm_intercepts=intercepts,
    )
    return PanelDataset(tuple(rows), (), has_family=True, has_assets=False), truth


def gen_lognormal_components(n: int, seed: int = DEFAULT_SEED, log_mean: float = 0.0,
                             log_sd: float = 1.0) -> pd.DataFrame:
    """
    Independent lognormal STL, LTL and EQ parts, one row per draw.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    parts = np.exp(rng.normal(log_mean, log_sd, size=(n, len(D3_LABELS))))
    return pd.DataFrame(parts, columns=list(D3_LABELS))


@dataclass(frozen=True)
class ToyCompany:
    company: int
    x1: float
    x2: float

    def json(self) -> JSON:
        return {"company": self.company, "x1": self.x1, "x2": self.x2}


# two positive balance-sheet values per company, where a single company stands out in each direction of the ratio
_TOY_VALUES = (
    (470.0, 520.0), (418.0, 310.0), (255.0, 845.0), (498.0, 150.0), (409.0, 610.0),
    (475.0, 430.0), (519.0, 700.0), (388.0, 260.0), (319.0, 390.0), (586.0, 480.0),
)


def toy_companies() -> List[ToyCompany]:
    """
    Ten fictitious companies numbered from 1.

    Company 4 is the only Tukey outlier of ``x1 / x2`` and company 3 the only one of ``x2 / x1``, while both stand out
    symmetrically on ``ln(x1 / x2)``.
    """
    return [ToyCompany(idx, x1, x2) for idx, (x1, x2) in enumerate(_TOY_VALUES, start=1)]


def toy_frame() -> pd.DataFrame:
    """
    Companies as a frame indexed by company number with columns ``x1`` and ``x2``.
    """
    records = [(item.company, item.x1, item.x2) for item in toy_companies()]
    return pd.DataFrame.from_records(records, columns=["company", "x1", "x2"]).set_index("company")
