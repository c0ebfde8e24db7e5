"""Local quadratic regression and the rule-of-thumb bandwidth.

The slope of a local quadratic fit of the purged outcome on the propensity
score is the nonparametric component of the MTE. The bandwidth comes from a
global quartic pilot fit (Fan-Gijbels rule of thumb for estimating a first
derivative with a second-order fit), rescaled from the n^(-1/7) rate to
n^(-2/13) to undersmooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .exceptions import DegenerateCurvature, InsufficientLocalMass
from .kernels import KernelSpec

_CHUNK = 256
_COND_MAX = 1e12
_CURVATURE_FLOOR = 1e-12
_ETA = 2.0 / 13.0


@dataclass(frozen=True)
class LocPolyFit:
    grid: np.ndarray    # evaluation points
    theta0: np.ndarray  # local level
    theta1: np.ndarray  # local slope: the nonparametric MTE component
    theta2: np.ndarray  # local curvature (coefficient on the squared term)
    h: float
    eff_n: np.ndarray   # kernel mass at each grid point


@dataclass(frozen=True)
class BandwidthChoice:
    h_rot: float   # Fan-Gijbels rule of thumb at the n^(-1/7) rate
    h_adj: float   # rescaled to the n^(-2/13) rate, capped at 1
    eta: float = _ETA


def rot_constant(kernel: KernelSpec) -> float:
    """The kernel constant of the rule of thumb for (derivative 1, order 2).

    With equivalent kernel K*(t) = t K(t) / kappa2 the constant is
    [3!^2 * 3 * int K*^2 / (2 * 2 * (int t^3 K*)^2)]^(1/7)
    = [27 * nu2 / kappa2^2 / (mu4 / kappa2)^2]^(1/7),
    where mu4 = int t^4 K(t) dt. Computed by quadrature, not hard-coded.
    """
    b = kernel.support_radius if math.isfinite(kernel.support_radius) else 8.0
    mu4 = quad(lambda u: u ** 4 * kernel(u), -b, b, epsabs=1e-9)[0]
    r = kernel.nu2 / kernel.kappa2 ** 2
    s = mu4 / kernel.kappa2
    return (27.0 * r / s ** 2) ** (1.0 / 7.0)


def rot_bandwidth(
    p_hat: np.ndarray,
    y_tilde: np.ndarray,
    kernel: KernelSpec,
    allow_flat: bool = False,
    pilot_degree: int = 8,
) -> BandwidthChoice:
    """Rule-of-thumb bandwidth from a global polynomial pilot fit.

    The default pilot degree of 8 lets the pilot's third derivative pick up
    the strong curvature of the target near the edges of the score range; a
    low-order pilot underestimates it and oversmooths badly.

    ``allow_flat`` enables the fallback for near-constant truths (third
    derivative of the pilot numerically zero): the curvature sum is replaced
    by n times the squared 90th percentile of |m'''|, floored at 1e-3.
    Without it, DegenerateCurvature is raised.
    """
    p_hat = np.asarray(p_hat, dtype=float)
    y_tilde = np.asarray(y_tilde, dtype=float)
    n = len(p_hat)
    if n < 30:
        raise ValueError("need at least 30 observations for the pilot fit")
    poly = np.polynomial.Polynomial.fit(p_hat, y_tilde, pilot_degree)
    resid = y_tilde - poly(p_hat)
    sigma2 = float(resid @ resid) / (n - pilot_degree - 1)
    m3 = poly.deriv(3)(p_hat)
    curv = float(np.sum(m3 * m3))
    if curv < _CURVATURE_FLOOR:
        if not allow_flat:
            raise DegenerateCurvature(
                "pilot third derivative is numerically zero; "
                "the rule of thumb is undefined for flat truths"
            )
        m_eff = max(float(np.percentile(np.abs(m3), 90.0)), 1e-3)
        curv = n * m_eff * m_eff
    span = float(p_hat.max() - p_hat.min())
    h_rot = rot_constant(kernel) * (sigma2 * span / curv) ** (1.0 / 7.0)
    h_adj = min(h_rot * n ** (1.0 / 7.0 - _ETA), 1.0)
    return BandwidthChoice(h_rot=float(h_rot), h_adj=float(h_adj))


def weight_floor(kernel: KernelSpec) -> float:
    """Effective mass of about five observations at the kernel mode."""
    return 5.0 * float(kernel(0.0))


def fit_local_quadratic(
    p_hat: np.ndarray,
    y_tilde: np.ndarray,
    grid: np.ndarray,
    h: float,
    kernel: KernelSpec,
    strict: bool = True,
) -> LocPolyFit:
    """Weighted quadratic fit in the centered basis at each grid point.

    The normal equations are formed in the scaled basis (p_i - p)/h for
    conditioning and the coefficients rescaled afterwards. With ``strict``
    (the default), a grid point with kernel mass below the floor or a
    condition number above 1e12 raises InsufficientLocalMass; the lenient
    mode (used for residual evaluation at the observation points) falls back
    to a least-squares solve instead.
    """
    p_hat = np.asarray(p_hat, dtype=float)
    y_tilde = np.asarray(y_tilde, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    g = len(grid)
    theta = np.empty((g, 3))
    eff_n = np.empty(g)
    floor = weight_floor(kernel)
    bad: list[int] = []
    for lo in range(0, g, _CHUNK):
        e = grid[lo : lo + _CHUNK, None]
        v = (p_hat[None, :] - e) / h
        w = kernel(v)
        s = [w.sum(axis=1)]
        wv = w
        for _ in range(4):
            wv = wv * v
            s.append(wv.sum(axis=1))
        t = np.stack(
            [w @ y_tilde, (w * v) @ y_tilde, (w * v * v) @ y_tilde], axis=1
        )
        a = np.empty((len(e), 3, 3))
        for i in range(3):
            for j in range(3):
                a[:, i, j] = s[i + j]
        eff_n[lo : lo + _CHUNK] = s[0]
        cond = np.linalg.cond(a)
        ok = (s[0] >= floor) & (cond < _COND_MAX) & np.isfinite(cond)
        sol = np.empty((len(e), 3))
        if ok.any():
            sol[ok] = np.linalg.solve(a[ok], t[ok, :, None])[:, :, 0]
        if (~ok).any():
            if strict:
                bad.extend((lo + np.nonzero(~ok)[0]).tolist())
            for i in np.nonzero(~ok)[0]:
                sol[i] = np.linalg.lstsq(a[i], t[i], rcond=None)[0]
        theta[lo : lo + _CHUNK] = sol
    if bad:
        raise InsufficientLocalMass(
            "too little kernel mass or ill-conditioned system at %d grid "
            "point(s), first at p=%.4f; increase h or shrink the region"
            % (len(bad), grid[bad[0]])
        )
    return LocPolyFit(
        grid=grid,
        theta0=theta[:, 0],
        theta1=theta[:, 1] / h,
        theta2=theta[:, 2] / (h * h),
        h=float(h),
        eff_n=eff_n,
    )


def mte_estimate(coef, lp: LocPolyFit, x_eval: np.ndarray) -> np.ndarray:
    """(beta1 - beta0)'x + theta1(p) on the fit's grid."""
    x_eval = np.asarray(x_eval, dtype=float)
    if x_eval.shape != coef.beta_diff.shape:
        raise ValueError("x_eval does not match the coefficient dimension")
    return float(coef.beta_diff @ x_eval) + lp.theta1
