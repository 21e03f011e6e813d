import contextlib
import dataclasses
import json as json_pkg  # avoid conflict name with json argument employed for some function
import math
import os
from io import StringIO
from typing import Any, Callable, Collection, Iterable, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from ratiocoda.cli import main as ratiocoda_cli
from ratiocoda.constants import RATIOCODA_ROOT
from ratiocoda.ingest import PanelDataset, PanelRow, TechIntensity
from ratiocoda.lmm.design import ModelFrame
from ratiocoda.utils import get_logger

TEST_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
TEST_PANEL_FILE = os.path.join(TEST_DATA_DIR, "panel_5rows.csv")
TEST_RENAMED_PANEL_FILE = os.path.join(TEST_DATA_DIR, "panel_renamed.csv")
TEST_COLUMNS_FILE = os.path.join(TEST_DATA_DIR, "columns.cfg")
# employ example configs for tests where needed to ensure that configurations are valid
TEST_CFG_FILE = os.path.join(RATIOCODA_ROOT, "config/ratiocoda.example.yml")
TEST_COLUMNS_EXAMPLE_FILE = os.path.join(RATIOCODA_ROOT, "config/columns.example.cfg")

LOGGER = get_logger(__name__)

TECH_CODES = {"L": TechIntensity.LOW, "M": TechIntensity.MID, "H": TechIntensity.HIGH}


def make_row(firm_id: str,
             year: int,
             family: Optional[bool] = True,
             tech: str = "L",
             innovation: bool = False,
             employees: float = 10.0,
             parts: Tuple[float, float, float] = (50.0, 30.0, 20.0),
             assets: Optional[Tuple[float, float]] = None,
             line: int = 0,
             ) -> PanelRow:
    """
    Panel row with compact arguments, components given as ``(stl, ltl, equity)``.
    """
    return PanelRow(
        firm_id=firm_id,
        year=year,
        family=family,
        tech_intensity=TECH_CODES[tech],
        innovation=innovation,
        employees=employees,
        stl=parts[0],
        ltl=parts[1],
        equity=parts[2],
        fixed_assets=assets[0] if assets else None,
        current_assets=assets[1] if assets else None,
        line=line,
    )


def make_panel(rows: Sequence[PanelRow], has_family: bool = True) -> PanelDataset:
    rows = [row if row.line else dataclasses.replace(row, line=idx + 2) for idx, row in enumerate(rows)]
    has_assets = all(row.fixed_assets is not None and row.current_assets is not None for row in rows)
    return PanelDataset(tuple(rows), (), has_family=has_family, has_assets=has_assets)


def design_panel(years: Sequence[int] = (2007, )) -> PanelDataset:
    """
    Eight firms with covariates of full rank, observed every requested year.
    """
    firms = [
        (True, "L", False, 2.0),
        (False, "M", True, 1.0),
        (True, "H", False, 3.0),
        (False, "L", True, 1.5),
        (True, "M", True, 0.5),
        (False, "H", False, 2.5),
        (False, "L", False, 1.0),
        (True, "H", True, 4.0),
    ]
    rows = []
    for idx, (family, tech, innovation, log_size) in enumerate(firms):
        for step, year in enumerate(years):
            parts = (40.0 + idx + step, 25.0 + 2 * idx, 30.0 + 3 * step)
            rows.append(make_row(f"F{idx + 1}", year, family, tech, innovation, math.exp(log_size), parts))
    return make_panel(rows)


def random_frame(rng: np.random.Generator,
                 n_groups: int = 3,
                 n_per_group: Union[int, Sequence[int]] = 10,
                 n_columns: int = 3,
                 sigma_u: float = 1.0,
                 sigma_e: float = 0.5,
                 ) -> ModelFrame:
    """
    Random-intercept data with an intercept and continuous covariates.
    """
    counts = [n_per_group] * n_groups if isinstance(n_per_group, int) else list(n_per_group)
    groups = np.repeat([f"g{idx}" for idx in range(len(counts))], counts)
    n_rows = int(sum(counts))
    design = np.column_stack([np.ones(n_rows)] + [rng.normal(size=n_rows) for _ in range(n_columns - 1)])
    beta = rng.normal(size=n_columns)
    effects = sigma_u * rng.normal(size=len(counts))
    codes = np.repeat(np.arange(len(counts)), counts)
    response = design @ beta + effects[codes] + sigma_e * rng.normal(size=n_rows)
    names = ["Intercept"] + [f"x{idx}" for idx in range(1, n_columns)]
    return ModelFrame(response, design, tuple(names), groups)


def dense_gls(frame: ModelFrame, lam: float) -> Tuple[np.ndarray, float, float]:
    """
    Brute force generalized least squares with the explicit ``n x n`` covariance ``I + lam Z Z'``.

    :returns: coefficients, profiled residual variance and restricted log-likelihood.
    """
    groups = np.asarray(frame.group_ids)
    z_mat = (groups[:, np.newaxis] == np.unique(groups)[np.newaxis, :]).astype(float)
    h_mat = np.eye(frame.n_rows) + lam * z_mat @ z_mat.T
    h_inv = np.linalg.inv(h_mat)
    xhx = frame.design.T @ h_inv @ frame.design
    beta = np.linalg.solve(xhx, frame.design.T @ h_inv @ frame.response)
    resid = frame.response - frame.design @ beta
    dof = frame.n_rows - frame.n_columns
    sigma2 = float(resid @ h_inv @ resid) / dof
    loglik = -0.5 * (dof * math.log(2 * math.pi * sigma2) + np.linalg.slogdet(h_mat)[1]
                     + np.linalg.slogdet(xhx)[1] + dof)
    return beta, sigma2, float(loglik)


def run_cli(args: List[str]) -> Tuple[int, str, str]:
    """
    Runs the command line in-process and returns its exit code with the captured ``stdout`` and ``stderr``.
    """
    out, err = StringIO(), StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = ratiocoda_cli(args)
        except SystemExit as exc:
            code = exc.code
    return int(code or 0), out.getvalue(), err.getvalue()


def read_text(path: str) -> str:
    with open(path, mode="r", encoding="utf-8") as file:
        return file.read()


def read_json(path: str) -> Any:
    with open(path, mode="r", encoding="utf-8") as file:
        return json_pkg.load(file)


def visual_repr(item: Any) -> str:
    try:
        if isinstance(item, (dict, list)):
            return json_pkg.dumps(item, indent=4, ensure_ascii=False)
    except Exception:  # noqa
        pass
    return f"'{repr(item)}'"


def format_test_val_ref(val, ref, pre="Fail", msg=None):
    if msg is None:
        _msg = f"({pre}) Test value: {visual_repr(val)}, Reference value: {visual_repr(ref)}"
    else:
        _msg = f"{msg}\n({pre}) Test value: {visual_repr(val)}, Reference value: {visual_repr(ref)}"
    return _msg


def all_equal(iter_val, iter_ref, any_order=False):
    if not (hasattr(iter_val, "__iter__") and hasattr(iter_ref, "__iter__")):
        return False
    if len(iter_val) != len(iter_ref):
        return False
    if any_order:
        return all(it in iter_ref for it in iter_val)
    return all(it == ir for it, ir in zip(iter_val, iter_ref))


def check_all_equal(iter_val: Collection[Any],
                    iter_ref: Collection[Any],
                    msg: Optional[str] = None,
                    any_order: bool = False,
                    ) -> None:
    """
    :param iter_val: tested values.
    :param iter_ref: reference values.
    :param msg: override message to display if failing test.
    :param any_order: allow equal values to be provided in any order, otherwise order must match as well as values.
    :raises AssertionError:
        If all values in :paramref:`iter_val` are not equal to values within :paramref:`iter_ref`.
        If :paramref:`any_order` is ``False``, also raises if equal items are not in the same order.
    """
    r_val = repr(iter_val)
    r_ref = repr(iter_ref)
    assert all_equal(iter_val, iter_ref, any_order), format_test_val_ref(r_val, r_ref, pre="All Equal Fail", msg=msg)


def check_val_equal(val: Any, ref: Any, msg: Optional[str] = None) -> None:
    """:raises AssertionError: if :paramref:`val` is not equal to :paramref:`ref`."""
    assert val == ref, format_test_val_ref(val, ref, pre="Equal Fail", msg=msg)


def check_val_not_equal(val: Any, ref: Any, msg: Optional[str] = None) -> None:
    """:raises AssertionError: if :paramref:`val` is equal to :paramref:`ref`."""
    assert val != ref, format_test_val_ref(val, ref, pre="Not Equal Fail", msg=msg)


def check_val_is_in(val: Any, ref: Any, msg: Optional[str] = None) -> None:
    """:raises AssertionError: if :paramref:`val` is not in to :paramref:`ref`."""
    assert val in ref, format_test_val_ref(val, ref, pre="Is In Fail", msg=msg)


def check_val_not_in(val: Any, ref: Any, msg: Optional[str] = None) -> None:
    """:raises AssertionError: if :paramref:`val` is in to :paramref:`ref`."""
    assert val not in ref, format_test_val_ref(val, ref, pre="Not In Fail", msg=msg)


def check_val_type(val: Any, ref: Union[Type[Any], Iterable[Type[Any]]], msg: Optional[str] = None) -> None:
    """:raises AssertionError: if :paramref:`val` is not an instanced of :paramref:`ref`."""
    assert isinstance(val, ref), format_test_val_ref(val, repr(ref), pre="Type Fail", msg=msg)


def check_close(val: Any, ref: Any, rtol: float = 1e-12, atol: float = 0.0, msg: Optional[str] = None) -> None:
    """:raises AssertionError: if values of :paramref:`val` are not all close to those of :paramref:`ref`."""
    assert np.allclose(val, ref, rtol=rtol, atol=atol), format_test_val_ref(
        np.asarray(val).tolist(), np.asarray(ref).tolist(), pre="Close Fail", msg=msg
    )


def check_raises(func: Callable[[], Any], exception_type: Type[Exception], msg: Optional[str] = None) -> Exception:
    """
    Calls the callable and verifies that the specific exception was raised.

    :raise AssertionError: on failing exception check or missing raised exception.
    :returns: raised exception of expected type if it was raised.
    """
    msg = f": {msg}" if msg else "."
    try:
        func()
    except Exception as exc:  # pylint: disable=W0703
        msg = f"Wrong exception [{type(exc).__name__!s}] raised instead of [{exception_type.__name__!s}]{msg}"
        assert isinstance(exc, exception_type), msg
        return exc
    raise AssertionError(f"Exception [{exception_type.__name__!s}] was not raised{msg}")


def check_no_raise(func: Callable[[], Any], msg: Optional[str] = None) -> Any:
    """
    Calls the callable and verifies that no exception was raised.

    :raise AssertionError: on any raised exception.
    """
    try:
        return func()
    except Exception as exc:  # pylint: disable=W0703
        msg = f": {msg}" if msg else "."
        raise AssertionError(f"Exception [{type(exc).__name__!r}] was raised when none is expected{msg}")
