"""Independent reference implementations used to pin expected values.

Everything here is computed through a different route than the library:
matrix least squares, explicit sandwich algebra, high-precision special
functions, and exhaustive enumeration.  Tests compare library output
against these, never the other way around.
"""

from __future__ import annotations

from itertools import combinations

import mpmath
import numpy as np


def lstsq_fit(y, x):
    """Intercept, slope, residuals, leverages via matrix least squares."""
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ coef
    hat = X @ np.linalg.inv(X.T @ X) @ X.T
    return coef[0], coef[1], residuals, np.diag(hat)


def sandwich_slope_variance(x, residual_like, groups=None, factor=1.0):
    """Slope entry of factor * (X'X)^-1 (sum_g s_g s_g') (X'X)^-1.

    ``groups`` maps observations to score-aggregation units (identity when
    omitted); ``residual_like`` supplies the residual entering each score.
    """
    n = x.shape[0]
    X = np.column_stack([np.ones(n), x])
    if groups is None:
        groups = np.arange(n)
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((2, 2))
    for g in np.unique(groups):
        idx = groups == g
        score = X[idx].T @ residual_like[idx]
        meat += np.outer(score, score)
    return factor * (bread @ meat @ bread)[1, 1]


def weighted_score_slope_variance(x, residual_like, weights, factor=1.0):
    """Like sandwich_slope_variance but with weighted score aggregation.

    ``weights`` is (N, F); score f sums w_if * x_row_i * r_i over i, with
    x_row the full design row.  Matches sector-level aggregation when the
    regressor is demeaned inside the scores, which the plain design-matrix
    form here reproduces only in the slope entry after bread multiplication.
    """
    n = x.shape[0]
    X = np.column_stack([np.ones(n), x])
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((2, 2))
    for f in range(weights.shape[1]):
        score = X.T @ (weights[:, f] * residual_like)
        meat += np.outer(score, score)
    return factor * (bread @ meat @ bread)[1, 1]


def student_t_sf(value, dof):
    """High-precision Student-t survival function via incomplete beta."""
    value = mpmath.mpf(value)
    dof = mpmath.mpf(dof)
    z = dof / (dof + value**2)
    tail = mpmath.betainc(dof / 2, mpmath.mpf(1) / 2, 0, z, regularized=True) / 2
    return tail if value >= 0 else 1 - tail


def balanced_assignment_slopes(y, group_of, n_groups):
    """Difference of treated/control unit means for every balanced assignment."""
    y = np.asarray(y, dtype=float)
    out = []
    for treated in combinations(range(n_groups), n_groups // 2):
        mask = np.isin(group_of, treated)
        out.append(y[mask].mean() - y[~mask].mean())
    return np.array(out)
