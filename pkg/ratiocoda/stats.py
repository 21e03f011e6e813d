"""
Descriptive diagnostics of ratio series: quartiles, Tukey fences, outliers, skewness and group averages.

Quartiles use linear interpolation between order statistics (position ``h = (n - 1) p`` on the sorted sample) and
fences are placed at 1.5 interquartile ranges from the quartiles.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as sp_stats

from ratiocoda.coda import geometric_mean
from ratiocoda.constants import TUKEY_MULTIPLIER
from ratiocoda.typedefs import JSON, BoxplotJSON
from ratiocoda.utils import RatioCodaError, get_logger

LOGGER = get_logger(__name__)

AnySample = Union[Sequence[float], np.ndarray]


class SampleError(RatioCodaError, ValueError):
    """
    Sample that cannot be summarized, such as one holding non-finite values.
    """


class EmptySampleError(SampleError):
    """
    Sample without any value.
    """


class DegenerateDistributionError(RatioCodaError, ArithmeticError):
    """
    Sample whose spread is null, or too small, for the requested moment.
    """
    exit_code = 3


def _as_sample(sample: AnySample) -> np.ndarray:
    values = np.asarray(sample, dtype=float).ravel()
    if not values.size:
        raise EmptySampleError("Cannot summarize an empty sample.")
    if not np.all(np.isfinite(values)):
        index = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SampleError(f"Sample holds a non-finite value at index [{index}].", index=index)
    return values


@dataclass(frozen=True)
class BoxplotSummary:
    n: int
    q1: float
    median: float
    q3: float
    lower_fence: float
    upper_fence: float
    whisker_low: float
    whisker_high: float
    outlier_indices: Tuple[int, ...]
    outlier_keys: Tuple[Any, ...] = field(default=())

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    @property
    def n_outliers(self) -> int:
        return len(self.outlier_indices)

    def json(self) -> BoxplotJSON:
        data: BoxplotJSON = {
            "n": self.n,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "lower_fence": self.lower_fence,
            "upper_fence": self.upper_fence,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outlier_indices": list(self.outlier_indices),
        }
        if self.outlier_keys:
            data["outlier_keys"] = [list(key) if isinstance(key, tuple) else key for key in self.outlier_keys]
        return data


def quartiles(sample: AnySample) -> Tuple[float, float, float]:
    """
    First quartile, median and third quartile by linear interpolation.

    :raises EmptySampleError: on an empty sample.
    """
    values = _as_sample(sample)
    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    return float(q1), float(median), float(q3)


def tukey_outliers(sample: AnySample, keys: Optional[Sequence[Hashable]] = None) -> BoxplotSummary:
    """
    Boxplot summary of the sample with outliers beyond the Tukey fences.

    Fences are computed for any sample size, but they are only meaningful from four values onward.

    :param sample: values to summarize.
    :param keys: optional row identities aligned with the values, reported for every outlier.
    """
    values = _as_sample(sample)
    if keys is not None and len(keys) != values.size:
        raise SampleError(f"Got {len(keys)} keys for {values.size} sample values.")
    if values.size < 4:
        LOGGER.debug("Tukey fences computed on only %s values.", values.size)
    q1, median, q3 = quartiles(values)
    spread = TUKEY_MULTIPLIER * (q3 - q1)
    lower, upper = q1 - spread, q3 + spread
    outside = (values < lower) | (values > upper)
    inliers = values[~outside]
    indices = tuple(int(idx) for idx in np.flatnonzero(outside))
    return BoxplotSummary(
        n=int(values.size),
        q1=q1,
        median=median,
        q3=q3,
        lower_fence=float(lower),
        upper_fence=float(upper),
        whisker_low=float(inliers.min()) if inliers.size else q1,
        whisker_high=float(inliers.max()) if inliers.size else q3,
        outlier_indices=indices,
        outlier_keys=tuple(keys[idx] for idx in indices) if keys is not None else (),
    )


def skewness(sample: AnySample) -> float:
    """
    Moment coefficient of skewness ``m3 / m2 ** 1.5`` with biased central moments.

    :raises DegenerateDistributionError: with less than three values or a null variance.
    """
    values = _as_sample(sample)
    if values.size < 3:
        raise DegenerateDistributionError(f"Skewness requires at least 3 values, got {values.size}.")
    centered = values - values.mean()
    if not np.any(np.abs(centered) > np.finfo(float).eps * max(1.0, float(np.abs(values).max()))):
        raise DegenerateDistributionError("Skewness is undefined for a sample without variance.")
    return float(sp_stats.skew(values, bias=True))


@dataclass(frozen=True)
class GroupMeans:
    n: int
    arithmetic_mean: float
    geometric_mean: Optional[float]

    def json(self) -> JSON:
        return {"n": self.n, "arithmetic_mean": self.arithmetic_mean, "geometric_mean": self.geometric_mean}


def group_means(values: AnySample, groups: Sequence[Hashable]) -> Dict[Hashable, GroupMeans]:
    """
    Arithmetic and geometric averages of the values within each group, groups in order of first appearance.

    The geometric average is the central value that stays consistent under reciprocal ratios. It is only reported for
    strictly positive groups, otherwise it is ``None``.
    """
    array = _as_sample(values)
    if len(groups) != array.size:
        raise SampleError(f"Got {len(groups)} group labels for {array.size} values.")
    labels: List[Hashable] = list(dict.fromkeys(groups))
    group_array = np.asarray([labels.index(grp) for grp in groups])
    results = {}
    for index, label in enumerate(labels):
        subset = array[group_array == index]
        geo = geometric_mean(subset) if np.all(subset > 0) else None
        results[label] = GroupMeans(int(subset.size), float(subset.mean()), geo)
    return results


@dataclass(frozen=True)
class SeriesDescription:
    boxplot: BoxplotSummary
    skewness: Optional[float]

    def json(self) -> JSON:
        return {"boxplot": self.boxplot.json(), "skewness": self.skewness}


def describe_series(sample: AnySample, keys: Optional[Sequence[Hashable]] = None) -> SeriesDescription:
    """
    Boxplot summary and skewness of a series, the skewness being ``None`` when it is undefined.
    """
    summary = tukey_outliers(sample, keys)
    try:
        skew: Optional[float] = skewness(sample)
    except DegenerateDistributionError as exc:
        LOGGER.warning("Skewness not reported: %s", exc)
        skew = None
    return SeriesDescription(summary, skew)
