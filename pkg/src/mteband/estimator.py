"""Scikit-learn style front end for the full pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dataset import Dataset
from .inference import MteBand, build_band, critical_value
from .kernels import kernel_by_name
from .locpoly import fit_local_quadratic
from .pipeline import run_estimate


class MTEBandEstimator(BaseEstimator):
    """Marginal treatment effect curve with a uniform confidence band.

    Parameters follow scikit-learn conventions (``get_params`` /
    ``set_params`` / ``clone`` work as usual); ``fit`` takes either a
    :class:`~mteband.dataset.Dataset` or the four arrays (y, d, x, z).

    Parameters
    ----------
    kernel : str, "gaussian" or "quartic"
    method : str, band type reported by :meth:`confidence_band` by default
    alpha : float, miscoverage level
    region : (a0, b0), score interval for the band, inside (0, 1)
    grid_size : int, number of evaluation points
    bandwidth : float or None, overrides the rule of thumb
    variance : "s4" or "s5", variance estimator form
    min_kept : int, floor on the post-trim sample size
    """

    def __init__(
        self,
        kernel="gaussian",
        method="analytic",
        alpha=0.05,
        region=(0.15, 0.85),
        grid_size=101,
        bandwidth=None,
        variance="s4",
        min_kept=50,
    ):
        self.kernel = kernel
        self.method = method
        self.alpha = alpha
        self.region = region
        self.grid_size = grid_size
        self.bandwidth = bandwidth
        self.variance = variance
        self.min_kept = min_kept

    def fit(self, data, d=None, x=None, z=None, x_eval=None):
        """Fit on a Dataset, or on arrays via fit(y, d, x, z)."""
        if not isinstance(data, Dataset):
            if d is None or x is None or z is None:
                raise ValueError("pass a Dataset or all of (y, d, x, z)")
            data = Dataset(
                y=np.asarray(data, dtype=float),
                d=np.asarray(d, dtype=float),
                x=np.asarray(x, dtype=float),
                z=np.asarray(z, dtype=float),
            )
        result = run_estimate(
            data,
            kernel=self.kernel,
            region=tuple(self.region),
            grid_size=self.grid_size,
            alphas=(self.alpha,),
            methods=(self.method,),
            bandwidth=self.bandwidth,
            variance=self.variance,
            x_eval=x_eval,
            min_kept=self.min_kept,
        )
        self.result_ = result
        self.x_eval_ = (
            np.zeros(data.x.shape[1]) if x_eval is None
            else np.asarray(x_eval, dtype=float)
        )
        self.grid_ = result.grid
        self.mte_ = result.mte_hat
        self.bandwidth_ = result.h
        self.ell_n_ = result.ell_n
        self.coef_ = result.coef.beta_diff
        self.band_ = result.bands[(self.method, self.alpha)]
        return self

    def predict(self, p):
        """MTE estimate at arbitrary score values (refit, not interpolated)."""
        check_is_fitted(self, "result_")
        res = self.result_
        kern = kernel_by_name(self.kernel)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        trimmed = res.trim
        from .plm import y_tilde

        yt = y_tilde(trimmed.data, trimmed.fitted, res.coef)
        lp = fit_local_quadratic(trimmed.fitted, yt, p, res.h, kern)
        return float(res.coef.beta_diff @ self.x_eval_) + lp.theta1

    def confidence_band(self, alpha=None, method=None) -> MteBand:
        """Band at a possibly different level or method, without refitting."""
        check_is_fitted(self, "result_")
        alpha = self.alpha if alpha is None else alpha
        method = self.method if method is None else method
        res = self.result_
        crit = critical_value(
            method, alpha, res.ell_n,
            region=tuple(self.region), h=res.h,
        )
        band = build_band(
            res.mte_hat, res.variance, crit, res.n, res.h, res.grid,
            lam=kernel_by_name(self.kernel).lam,
        )
        return band
