from typing import Sequence

import numpy as np
from scipy import stats

from ksrecon.errors import DegenerateStatisticsError, DimensionMismatchError

SIGNIFICANCE = 0.05


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided paired t-test of a against b; returns (t, p)"""
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if a_arr.shape != b_arr.shape or a_arr.ndim != 1:
        raise DimensionMismatchError(f"Paired samples must be equal-length 1-D, got {a_arr.shape} and {b_arr.shape}")
    if a_arr.size < 2:
        raise DegenerateStatisticsError(f"Need at least two pairs, got {a_arr.size}")
    diff = a_arr - b_arr
    if np.all(diff == diff[0]):
        raise DegenerateStatisticsError("Paired differences have zero variance")
    result = stats.ttest_rel(a_arr, b_arr)
    return float(result.statistic), float(result.pvalue)
