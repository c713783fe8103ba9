"""Regression goodness-of-fit metrics shared by the models."""

from __future__ import annotations

import numpy as np

from .errors import ConstantTargetError


def r_squared(y, y_hat) -> float:
    """Coefficient of determination: 1 - SSE / SST.

    SSE sums squared prediction errors, SST squared deviations of the
    target from its own mean. Undefined (raises) when the target has
    zero variance. Equals 1 exactly when predictions match the target
    on every sample.
    """
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise ConstantTargetError("target has zero variance; R^2 is undefined")
    sse = float(np.sum((y - y_hat) ** 2))
    return 1.0 - sse / sst


def mean_absolute_error(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    return float(np.mean(np.abs(y - y_hat)))
