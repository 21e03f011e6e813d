"""
Random-intercept linear mixed model fitted by profiled (restricted) maximum likelihood.

The model is ``y = X b + Z u + e`` with ``u ~ N(0, s2u I)`` per group and ``e ~ N(0, s2e I)``. Writing the marginal
covariance as ``s2e H`` with ``H = I + lam Z Z'`` and ``lam = s2u / s2e``, the fixed effects and ``s2e`` have closed
forms for any ``lam``, which leaves a one dimensional optimization over ``ln(lam)``.

``H`` is block diagonal by group and each block ``I + lam 1 1'`` has the inverse square root
``I - a 1 1' / n`` with ``a = 1 - 1 / sqrt(1 + lam n)``. Whitening rows with it reduces the generalized least squares
problem to ordinary least squares solved by a column-pivoted QR decomposition, without ever forming an ``n x n``
matrix.
"""
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm

from ratiocoda.lmm.design import DesignError, ModelFrame
from ratiocoda.typedefs import JSON, MethodName, RowKey
from ratiocoda.utils import ExtendedEnum, RatioCodaError, get_logger

LOGGER = get_logger(__name__)

LOG_LAMBDA_MIN = math.log(1e-8)
LOG_LAMBDA_MAX = math.log(1e8)
GRID_POINTS = 25
MAX_EVALUATIONS = 200
LOG_LAMBDA_XATOL = 1e-10
# residuals below this fraction of the response scale are numerical noise of an exact fit
EXACT_FIT_TOLERANCE = 1e-12


class LmmFitError(RatioCodaError, ArithmeticError):
    """
    Variance ratio optimization that did not converge within its evaluation budget.

    The ``trace`` detail lists the ``(ln(lam), criterion)`` pairs evaluated so far.
    """
    exit_code = 3


class Method(ExtendedEnum):
    REML = "reml"
    ML = "ml"


class Profile(NamedTuple):
    lam: float
    criterion: float
    beta: np.ndarray
    rss: float
    sigma2: float
    r_mat: np.ndarray
    pivots: np.ndarray


class ProfiledCriterion:
    """
    Profiled log-likelihood of a model frame as a function of the variance ratio ``lam``.
    """

    def __init__(self, frame: ModelFrame, method: Union[Method, MethodName] = Method.REML) -> None:
        self.frame = frame
        self.method = Method.get(method)
        if self.method is None:
            raise LmmFitError(f"Unknown estimation method [{method}], expected one of {Method.values()}.")
        self.levels, self.codes = np.unique(frame.group_ids, return_inverse=True)
        self.counts = np.bincount(self.codes).astype(float)
        x_sums = np.zeros((self.levels.size, frame.n_columns))
        np.add.at(x_sums, self.codes, frame.design)
        self.x_means = x_sums / self.counts[:, np.newaxis]
        self.y_means = np.bincount(self.codes, weights=frame.response) / self.counts

    @property
    def n_groups(self) -> int:
        return int(self.levels.size)

    def whiten(self, lam: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Design and response premultiplied by ``H^(-1/2)``.
        """
        shrink = 1.0 - 1.0 / np.sqrt(1.0 + lam * self.counts)
        x_white = self.frame.design - shrink[self.codes, np.newaxis] * self.x_means[self.codes]
        y_white = self.frame.response - shrink[self.codes] * self.y_means[self.codes]
        return x_white, y_white

    def profile(self, lam: float) -> Profile:
        n_rows, n_cols = self.frame.n_rows, self.frame.n_columns
        x_white, y_white = self.whiten(lam)
        q_mat, r_mat, pivots = linalg.qr(x_white, mode="economic", pivoting=True)
        coef = linalg.solve_triangular(r_mat, q_mat.T @ y_white)
        beta = np.empty(n_cols)
        beta[pivots] = coef
        resid = y_white - x_white @ beta
        rss = max(float(resid @ resid), np.finfo(float).tiny)
        logdet_h = float(np.sum(np.log1p(lam * self.counts)))
        if self.method == Method.REML:
            dof = n_rows - n_cols
            sigma2 = rss / dof
            logdet_xhx = 2.0 * float(np.sum(np.log(np.abs(np.diag(r_mat)))))
            value = -0.5 * (dof * math.log(2.0 * math.pi * sigma2) + logdet_h + logdet_xhx + dof)
        else:
            sigma2 = rss / n_rows
            value = -0.5 * (n_rows * math.log(2.0 * math.pi * sigma2) + logdet_h + n_rows)
        return Profile(lam, value, beta, rss, sigma2, r_mat, pivots)

    def __call__(self, lam: float) -> float:
        return self.profile(lam).criterion


def criterion(frame: ModelFrame, lam: float, method: Union[Method, MethodName] = Method.REML) -> float:
    """
    Profiled criterion of the frame at variance ratio :paramref:`lam`.
    """
    return ProfiledCriterion(frame, method)(lam)


@dataclass(frozen=True, eq=False)
class LmmFit:
    column_names: Tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    cov_beta: np.ndarray
    z_stat: np.ndarray
    p_value: np.ndarray
    sigma2_u: float
    sigma2_e: float
    lambda_: float
    fitted: np.ndarray
    residuals: np.ndarray
    marginal_residuals: np.ndarray
    random_effects: np.ndarray
    group_levels: np.ndarray
    loglik: float
    method: Method
    converged: bool
    boundary: bool
    n_evals: int
    n_rows: int
    n_groups: int
    response_name: str = "y"
    row_keys: Tuple[RowKey, ...] = ()
    trace: Tuple[Tuple[float, float], ...] = field(default=())

    @property
    def loglik_reml(self) -> Optional[float]:
        return self.loglik if self.method == Method.REML else None

    def coefficient(self, name: str) -> float:
        return float(self.beta[self.column_names.index(name)])

    def standard_error(self, name: str) -> float:
        return float(self.se[self.column_names.index(name)])

    def json(self) -> JSON:
        return {
            "response": self.response_name,
            "method": self.method.value,
            "converged": self.converged,
            "boundary": self.boundary,
            "n_rows": self.n_rows,
            "n_groups": self.n_groups,
            "n_evals": self.n_evals,
            "sigma2_u": self.sigma2_u,
            "sigma2_e": self.sigma2_e,
            "lambda": self.lambda_,
            "loglik": self.loglik,
        }


def _optimize(objective: ProfiledCriterion, trace: List[Tuple[float, float]]) -> Tuple[float, bool]:
    """
    Grid search over ``ln(lam)`` refined by bounded scalar minimization around the best grid point.

    :returns: selected ``lam`` and whether it lies on a boundary of the search domain.
    """
    def negative(log_lam: float) -> float:
        value = objective(math.exp(log_lam))
        trace.append((float(log_lam), value))
        return -value

    grid = np.linspace(LOG_LAMBDA_MIN, LOG_LAMBDA_MAX, GRID_POINTS)
    values = np.array([negative(log_lam) for log_lam in grid])
    best = int(np.argmin(values))
    lower, upper = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
    result = optimize.minimize_scalar(negative, bounds=(lower, upper), method="bounded",
                                      options={"xatol": LOG_LAMBDA_XATOL, "maxiter": MAX_EVALUATIONS - GRID_POINTS})
    if not result.success:
        best_value = max(value for _, value in trace)
        raise LmmFitError(f"Variance ratio optimization did not converge after {len(trace)} evaluations "
                          f"(best criterion {best_value:.10g}): {result.message}",
                          trace=[list(item) for item in trace])
    log_lam, value = float(result.x), -float(result.fun)
    if values[best] < result.fun:
        log_lam, value = float(grid[best]), -float(values[best])
    LOGGER.debug("Variance ratio optimum ln(lam)=%.8g with criterion %.12g after %s evaluations.",
                 log_lam, value, len(trace))
    zero = objective(0.0)
    trace.append((float("-inf"), zero))
    if zero >= value:
        LOGGER.debug("Criterion at lam=0 (%.12g) is not improved upon, random intercept variance on boundary.", zero)
        return 0.0, True
    return math.exp(log_lam), bool(log_lam >= LOG_LAMBDA_MAX - 1e-6)


def fit(frame: ModelFrame, method: Union[Method, MethodName] = Method.REML) -> LmmFit:
    """
    Fits the random-intercept model of the frame.

    With less than two groups the random intercept variance is not identifiable, it is fixed at zero and the fit is
    flagged on the boundary. A zero random intercept variance is never an error.

    :raises DesignError: when the frame has no more rows than columns.
    :raises LmmFitError: when the variance ratio optimization does not converge.
    """
    if frame.n_rows <= frame.n_columns:
        raise DesignError(f"Model requires more rows ({frame.n_rows}) than design columns ({frame.n_columns}).",
                          column=None)
    objective = ProfiledCriterion(frame, method)
    trace: List[Tuple[float, float]] = []
    if objective.n_groups < 2:
        LOGGER.warning("Model of [%s] has %s group, random intercept variance fixed at 0.",
                       frame.response_name, objective.n_groups)
        lam, boundary = 0.0, True
    else:
        lam, boundary = _optimize(objective, trace)
    best = objective.profile(lam)

    r_inv = linalg.solve_triangular(best.r_mat, np.eye(frame.n_columns))
    cov = np.empty((frame.n_columns, frame.n_columns))
    cov[np.ix_(best.pivots, best.pivots)] = best.sigma2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.diag(cov))
    z_stat = best.beta / se
    p_value = 2.0 * norm.sf(np.abs(z_stat))

    linear = frame.design @ best.beta
    marginal = frame.response - linear
    weights = lam * objective.counts / (1.0 + lam * objective.counts)
    random_effects = weights * np.bincount(objective.codes, weights=marginal) / objective.counts
    fitted = linear + random_effects[objective.codes]
    residuals = frame.response - fitted
    scale = max(1.0, float(np.max(np.abs(frame.response))))
    if float(np.max(np.abs(residuals))) <= EXACT_FIT_TOLERANCE * scale:
        LOGGER.debug("Model of [%s] fits exactly, residuals reported as zeros.", frame.response_name)
        fitted = frame.response.copy()
        residuals = np.zeros_like(residuals)

    LOGGER.info("Fitted [%s] by %s: sigma2_u=%.6g sigma2_e=%.6g%s", frame.response_name, objective.method.value,
                lam * best.sigma2, best.sigma2, " (boundary)" if boundary else "")
    return LmmFit(
        column_names=frame.column_names,
        beta=best.beta,
        se=se,
        cov_beta=cov,
        z_stat=z_stat,
        p_value=p_value,
        sigma2_u=lam * best.sigma2,
        sigma2_e=best.sigma2,
        lambda_=lam,
        fitted=fitted,
        residuals=residuals,
        marginal_residuals=marginal,
        random_effects=random_effects,
        group_levels=objective.levels,
        loglik=best.criterion,
        method=objective.method,
        converged=True,
        boundary=boundary,
        n_evals=len(trace) + 1,
        n_rows=frame.n_rows,
        n_groups=objective.n_groups,
        response_name=frame.response_name,
        row_keys=frame.row_keys,
        trace=tuple(trace),
    )


def fit_reml(frame: ModelFrame) -> LmmFit:
    return fit(frame, Method.REML)
