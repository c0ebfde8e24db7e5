"""Variance estimation, critical values, and band assembly.

The half-width of the band is crit * s_hat(p) / sqrt(n h^3). The analytic
critical value comes from a polynomial-order approximation of the supremum of
a stationary Gaussian process; the Gumbel value from the classical limit; the
pointwise value is the usual normal quantile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .exceptions import (
    DensityUnderflow,
    InvalidAlpha,
    NegativeRadicand,
    NoRealSolution,
)
from .kernels import KernelSpec
from .locpoly import LocPolyFit, fit_local_quadratic

_EXACT_RESID_MAX = 10_000
_DENSITY_FLOOR = 1e-6

METHODS = ("analytic", "gumbel", "pointwise")


@dataclass(frozen=True)
class VarianceEstimate:
    s_hat: np.ndarray       # s(p) on the grid
    f_hat: np.ndarray       # kernel density of the score on the grid
    residuals: np.ndarray   # eps_i = y_tilde_i - theta0(p_i)
    h_kde: float
    form: str = "s4"        # "s4": K weights; "s5": K^2 (p-p_i)^2 / h^2


def _kde_bandwidth(x: np.ndarray) -> float:
    # Silverman's rule with the robust spread
    n = len(x)
    sd = float(np.std(x))
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * n ** (-0.2)


def _gaussian_kde(x: np.ndarray, grid: np.ndarray, h: float) -> np.ndarray:
    u = (grid[:, None] - x[None, :]) / h
    return np.exp(-0.5 * u * u).sum(axis=1) / (len(x) * h * math.sqrt(2 * math.pi))


def theta0_at_observations(
    lp: LocPolyFit, p_hat: np.ndarray, y_tilde_hat: np.ndarray, kernel: KernelSpec
) -> np.ndarray:
    """Local level refit exactly at each score when cheap, else interpolated
    from the fitted grid."""
    if len(p_hat) <= _EXACT_RESID_MAX:
        refit = fit_local_quadratic(
            p_hat, y_tilde_hat, p_hat, lp.h, kernel, strict=False
        )
        return refit.theta0
    return np.interp(p_hat, lp.grid, lp.theta0)


def estimate_variance(
    lp: LocPolyFit,
    p_hat: np.ndarray,
    y_tilde_hat: np.ndarray,
    kernel: KernelSpec,
    form: str = "s4",
) -> VarianceEstimate:
    """s_hat(p) on the fit's grid.

    ``form`` selects between the main estimator (kernel-weighted squared
    residuals) and the alternative that mirrors the first-order variance
    expansion (squared kernel and squared distance). Both target the same
    limit.
    """
    if form not in ("s4", "s5"):
        raise ValueError("variance form must be 's4' or 's5'")
    p_hat = np.asarray(p_hat, dtype=float)
    y_tilde_hat = np.asarray(y_tilde_hat, dtype=float)
    n, h, grid = len(p_hat), lp.h, lp.grid
    eps = y_tilde_hat - theta0_at_observations(lp, p_hat, y_tilde_hat, kernel)
    h_kde = _kde_bandwidth(p_hat)
    f_hat = _gaussian_kde(p_hat, grid, h_kde)
    if f_hat.min() < _DENSITY_FLOOR:
        raise DensityUnderflow(
            "score density below %g at p=%.4f"
            % (_DENSITY_FLOOR, grid[int(np.argmin(f_hat))])
        )
    u = (p_hat[None, :] - grid[:, None]) / h
    eps2 = eps * eps
    if form == "s4":
        w = kernel(u)
        s2 = (w @ eps2) * kernel.nu2 / (n * h * f_hat ** 2 * kernel.kappa2 ** 2)
    else:
        w = kernel(u) ** 2 * (u * h) ** 2
        s2 = (w @ eps2) / (n * h ** 3 * f_hat ** 2 * kernel.kappa2 ** 2)
    return VarianceEstimate(
        s_hat=np.sqrt(np.maximum(s2, 0.0)),
        f_hat=f_hat,
        residuals=eps,
        h_kde=float(h_kde),
        form=form,
    )


def solve_ell(h: float, a0: float, b0: float, lam: float) -> float:
    """Largest root of (b0-a0) h^-1 sqrt(lam) (2 pi)^-1 exp(-l^2/2) = 1."""
    if h <= 0 or not a0 < b0 or lam <= 0:
        raise ValueError("need h > 0, a0 < b0, lam > 0")
    arg = (b0 - a0) * math.sqrt(lam) / (2.0 * math.pi * h)
    if arg < 1.0:
        raise NoRealSolution(
            "bandwidth too large for the region: "
            "(b0-a0) sqrt(lam) / (2 pi h) = %.4f < 1" % arg
        )
    return math.sqrt(2.0 * math.log(arg))


@dataclass(frozen=True)
class CriticalValue:
    method: str             # analytic | gumbel | pointwise
    alpha: float
    ell_n: float            # 0 for pointwise
    value: float
    region: tuple = (float("nan"), float("nan"))
    h: float = float("nan")


def critical_value(
    method: str,
    alpha: float,
    ell_n: float | None = None,
    region: tuple = (float("nan"), float("nan")),
    h: float = float("nan"),
) -> CriticalValue:
    """Critical value c(1-alpha) for the requested band type."""
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha("alpha must be in (0, 1), got %r" % alpha)
    method = method.lower()
    if method == "pointwise":
        value, ell_n = float(ndtri(1.0 - alpha / 2.0)), 0.0
    elif method in ("analytic", "gumbel"):
        if ell_n is None or ell_n <= 0:
            raise ValueError("analytic and Gumbel bands need ell_n > 0")
        # t* solves exp(-2 e^{-t}) = 1 - alpha
        t_star = -math.log(-math.log(1.0 - alpha) / 2.0)
        if method == "gumbel":
            value = ell_n + t_star / ell_n
        else:
            radicand = ell_n * ell_n + 2.0 * t_star
            if radicand < 0.0:
                raise NegativeRadicand(
                    "ell_n^2 - 2 log log (1-alpha)^(-1/2) = %.4f < 0; "
                    "alpha too large for this ell_n" % radicand
                )
            value = math.sqrt(radicand)
    else:
        raise ValueError("unknown method %r (choose from %s)" % (method, METHODS))
    return CriticalValue(
        method=method,
        alpha=float(alpha),
        ell_n=float(ell_n),
        value=float(value),
        region=tuple(region),
        h=float(h),
    )


@dataclass(frozen=True)
class MteBand:
    grid: np.ndarray
    mte_hat: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    crit: CriticalValue
    n: int
    h: float
    lam: float

    def covers(self, truth: np.ndarray) -> bool:
        truth = np.asarray(truth, dtype=float)
        return bool(np.all((self.lower <= truth) & (truth <= self.upper)))

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "ell_n": self.crit.ell_n,
            "lambda": self.lam,
            "method": self.crit.method,
            "alpha": self.crit.alpha,
            "region": [float(self.grid[0]), float(self.grid[-1])],
            "crit": self.crit.value,
        }

    def write_csv(self, path) -> None:
        header = "p,mte_hat,se,lower,upper"
        table = np.column_stack(
            [self.grid, self.mte_hat, self.se, self.lower, self.upper]
        )
        np.savetxt(path, table, delimiter=",", header=header, comments="",
                   fmt="%.17g")

    def write_metadata(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.metadata(), f, indent=2)
            f.write("\n")


def read_band_csv(path) -> dict:
    table = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(table[name]) for name in table.dtype.names}


def build_band(
    mte_hat: np.ndarray,
    var: VarianceEstimate,
    crit: CriticalValue,
    n: int,
    h: float,
    grid: np.ndarray,
    lam: float = float("nan"),
) -> MteBand:
    """estimate +/- crit * s_hat / sqrt(n h^3) on the grid."""
    se = var.s_hat / math.sqrt(n * h ** 3)
    half = crit.value * se
    return MteBand(
        grid=np.asarray(grid, dtype=float),
        mte_hat=np.asarray(mte_hat, dtype=float),
        se=se,
        lower=mte_hat - half,
        upper=mte_hat + half,
        crit=crit,
        n=int(n),
        h=float(h),
        lam=float(lam),
    )
