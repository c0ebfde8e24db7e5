"""Partially linear coefficients via residual-on-residual regression.

Both outcome equations share the same structure: a linear term in X scaled by
the propensity score plus an unknown function of the score alone. Local linear
first stages remove the score component from D*Y, (1-D)*Y and each column of
X*p_hat; a single OLS of the response residuals on the regressor residuals
then recovers the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .exceptions import SingularResidualGram
from .kernels import KernelSpec
from .propensity import PropensityFit

# Above this sample size the first stage evaluates on a fine bin grid and
# interpolates to the observation points; the O(n^2) exact evaluation is used
# below it.
_EXACT_MAX_N = 10_000
_N_BINS = 4096
_CHUNK = 256


def silverman_bandwidth(x: np.ndarray) -> float:
    """1.06 * sd * n^(-1/5); standard first-stage rate."""
    return 1.06 * float(np.std(x)) * len(x) ** (-0.2)


def local_linear_smooth(
    x: np.ndarray,
    responses: np.ndarray,
    h: float,
    kernel: KernelSpec,
    eval_points: np.ndarray | None = None,
    exact: bool | None = None,
) -> np.ndarray:
    """Local linear fit of each response column on x, evaluated pointwise.

    Returns an array of shape (len(eval_points), k). When ``exact`` is left
    unset, samples above 10k observations are smoothed on a 4096-point grid
    and interpolated, which keeps the cost O(n + G^2) instead of O(n^2).
    """
    x = np.asarray(x, dtype=float)
    R = np.atleast_2d(np.asarray(responses, dtype=float).T).T
    if eval_points is None:
        eval_points = x
    if exact is None:
        exact = len(x) <= _EXACT_MAX_N
    if exact:
        return _local_linear_exact(x, R, eval_points, h, kernel)
    return _local_linear_binned(x, R, eval_points, h, kernel)


def _ll_solve(s0, s1, s2, t0, t1):
    # intercept of the weighted linear fit in the centered basis
    denom = s0 * s2 - s1 * s1
    safe = np.abs(denom) > 1e-300
    out = np.where(
        safe,
        (s2 * t0.T - s1 * t1.T) / np.where(safe, denom, 1.0),
        t0.T / np.maximum(s0, 1e-300),
    )
    return out.T


def _local_linear_exact(x, R, eval_points, h, kernel):
    m = len(eval_points)
    out = np.empty((m, R.shape[1]))
    for lo in range(0, m, _CHUNK):
        e = eval_points[lo : lo + _CHUNK, None]
        u = x[None, :] - e
        w = kernel(u / h)
        s0 = w.sum(axis=1)
        wu = w * u
        s1 = wu.sum(axis=1)
        s2 = (wu * u).sum(axis=1)
        t0 = w @ R
        t1 = wu @ R
        out[lo : lo + _CHUNK] = _ll_solve(s0, s1, s2, t0, t1)
    return out


def _local_linear_binned(x, R, eval_points, h, kernel):
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return np.tile(R.mean(axis=0), (len(eval_points), 1))
    grid = np.linspace(lo, hi, _N_BINS)
    delta = grid[1] - grid[0]
    # linear binning: each observation splits its mass between the two
    # neighbouring grid points, preserving first moments
    pos = (x - lo) / delta
    j = np.clip(pos.astype(np.int64), 0, _N_BINS - 2)
    frac = pos - j
    counts = np.bincount(j, 1.0 - frac, _N_BINS) + np.bincount(
        j + 1, frac, _N_BINS
    )
    binned = np.empty((_N_BINS, R.shape[1]))
    for c in range(R.shape[1]):
        binned[:, c] = np.bincount(j, (1.0 - frac) * R[:, c], _N_BINS)
        binned[:, c] += np.bincount(j + 1, frac * R[:, c], _N_BINS)
    fit_at_grid = np.empty((_N_BINS, R.shape[1]))
    for glo in range(0, _N_BINS, _CHUNK):
        e = grid[glo : glo + _CHUNK, None]
        u = grid[None, :] - e
        kw = kernel(u / h)
        w = kw * counts[None, :]
        s0 = w.sum(axis=1)
        wu = w * u
        s1 = wu.sum(axis=1)
        s2 = (wu * u).sum(axis=1)
        # ``binned`` already holds response *sums* per bin, so the kernel
        # weight applies without the count factor
        t0 = kw @ binned
        t1 = (kw * u) @ binned
        fit_at_grid[glo : glo + _CHUNK] = _ll_solve(s0, s1, s2, t0, t1)
    out = np.empty((len(eval_points), R.shape[1]))
    for c in range(R.shape[1]):
        out[:, c] = np.interp(eval_points, grid, fit_at_grid[:, c])
    return out


@dataclass(frozen=True)
class CoefFit:
    beta0: np.ndarray       # coefficient on X in the untreated outcome
    beta_diff: np.ndarray   # beta1 - beta0
    h_first_stage: float

    @property
    def beta1(self) -> np.ndarray:
        return self.beta0 + self.beta_diff


def fit_coefficients(
    data: Dataset,
    fit: PropensityFit | np.ndarray,
    kernel: KernelSpec,
    h: float | None = None,
) -> CoefFit:
    """Coefficients of both outcome equations from one pass of smoothing.

    ``fit`` may be a PropensityFit (its fitted scores must align with
    ``data``, i.e. the data is already trimmed) or a raw score vector.
    """
    p_hat = fit if isinstance(fit, np.ndarray) else fit.fitted
    if len(p_hat) != data.n:
        raise ValueError("fitted scores do not align with the data rows")
    if h is None:
        h = silverman_bandwidth(p_hat)
    d, y, x = data.d, data.y, data.x
    k = x.shape[1]
    # treated equation is linear in X * p, untreated in X * (1 - p); smoothing
    # X and X * p once yields both regressor residual blocks
    responses = np.column_stack([d * y, (1.0 - d) * y, x * p_hat[:, None], x])
    smoothed = local_linear_smooth(p_hat, responses, h, kernel)
    resid = responses - smoothed
    ry1, ry0 = resid[:, 0], resid[:, 1]
    rxp = resid[:, 2 : 2 + k]
    rx1mp = resid[:, 2 + k :] - rxp
    beta = []
    for rx, ry in ((rxp, ry1), (rx1mp, ry0)):
        gram = rx.T @ rx
        tol = 1e-8 * max(1.0, float(np.trace(gram)))
        if np.linalg.matrix_rank(gram, tol=tol) < k:
            raise SingularResidualGram(
                "scaled covariates have no variation net of the score; "
                "covariates must vary after conditioning on it"
            )
        beta.append(np.linalg.solve(gram, rx.T @ ry))
    beta1, beta0 = beta
    return CoefFit(beta0=beta0, beta_diff=beta1 - beta0, h_first_stage=float(h))


def y_tilde(data: Dataset, p_hat: np.ndarray, coef: CoefFit) -> np.ndarray:
    """Outcome purged of the covariate part: Y - b0'X - (b1-b0)'X p_hat."""
    return (
        data.y
        - data.x @ coef.beta0
        - (data.x @ coef.beta_diff) * p_hat
    )
