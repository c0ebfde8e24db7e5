"""Probit propensity scores and common-support trimming.

The propensity score P(Z) = Pr(D=1|Z) is fit by Newton-Raphson on the probit
log-likelihood with the observed information and step-halving. The MTE is
identified only on the intersection of the fitted-score ranges of the treated
and untreated arms, so estimation always trims to that interval first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .dataset import Dataset
from .exceptions import (
    EmptyAfterTrim,
    NoOverlap,
    RankDeficient,
    SeparationDetected,
)

_MAX_ITER = 100
_MAX_HALVINGS = 20
_SCORE_TOL = 1e-8
_LOGLIK_RTOL = 1e-12
_SEPARATION_INDEX = 30.0


@dataclass(frozen=True)
class PropensityFit:
    gamma: np.ndarray           # (m+1,), intercept first
    fitted: np.ndarray          # (n,), each in (0,1)
    loglik: float
    support: tuple              # (s_lo, s_hi)
    kept: np.ndarray            # (n,) bool, inside common support
    n_iter: int = 0

    def predict(self, z: np.ndarray) -> np.ndarray:
        zt = np.column_stack([np.ones(len(z)), z])
        return ndtr(zt @ self.gamma)


def _loglik_score_hess(gamma, zt, d):
    xb = zt @ gamma
    q = 2.0 * d - 1.0
    ll = float(np.sum(log_ndtr(q * xb)))
    # inverse Mills ratio for each sign; phi(x)/Phi(qx) * q
    phi = np.exp(-0.5 * xb * xb) / np.sqrt(2.0 * np.pi)
    lam = q * phi / ndtr(q * xb)
    score = zt.T @ lam
    w = lam * (lam + xb)
    hess = -(zt * w[:, None]).T @ zt
    return ll, score, hess, xb


def fit_probit(data: Dataset) -> PropensityFit:
    """Probit MLE of Pr(D=1|Z) with an intercept.

    Raises SeparationDetected when the index diverges (perfect separation),
    RankDeficient when the normal equations are singular, and NoOverlap when
    the treated and untreated score ranges do not intersect.
    """
    d = data.d
    zt = np.column_stack([np.ones(data.n), data.z])
    n, p = zt.shape
    if n <= p:
        raise RankDeficient("need more observations than parameters")
    if np.linalg.matrix_rank(zt) < p:
        raise RankDeficient("design matrix [1, Z] is rank deficient")

    gamma = np.zeros(p)
    # start from the marginal rate: Phi(gamma0) = mean(D)
    from scipy.special import ndtri

    dbar = float(np.clip(d.mean(), 1e-6, 1 - 1e-6))
    gamma[0] = ndtri(dbar)

    ll, score, hess, xb = _loglik_score_hess(gamma, zt, d)
    n_iter = 0
    for n_iter in range(1, _MAX_ITER + 1):
        try:
            step = np.linalg.solve(-hess, score)
        except np.linalg.LinAlgError:
            raise RankDeficient("singular observed information") from None
        new_gamma, new = None, None
        for k in range(_MAX_HALVINGS + 1):
            cand = gamma + step / (2.0 ** k)
            cand_ll, cand_score, cand_hess, cand_xb = _loglik_score_hess(cand, zt, d)
            if np.isfinite(cand_ll) and cand_ll >= ll - 1e-14:
                new_gamma = cand
                new = (cand_ll, cand_score, cand_hess, cand_xb)
                break
        if new_gamma is None:
            break  # flat: no improving step
        gamma = new_gamma
        prev_ll = ll
        ll, score, hess, xb = new
        if np.max(np.abs(xb)) > _SEPARATION_INDEX:
            raise SeparationDetected(
                "probit index exceeded %.0f; likely perfect separation"
                % _SEPARATION_INDEX
            )
        if np.max(np.abs(score)) < _SCORE_TOL:
            break
        if abs(ll - prev_ll) < _LOGLIK_RTOL * (abs(prev_ll) + 1.0):
            break

    fitted = ndtr(zt @ gamma)
    fitted = np.clip(fitted, 1e-12, 1 - 1e-12)
    treated, untreated = fitted[d == 1], fitted[d == 0]
    if len(treated) == 0 or len(untreated) == 0:
        raise SeparationDetected("one treatment arm is empty")
    s_lo = max(treated.min(), untreated.min())
    s_hi = min(treated.max(), untreated.max())
    if s_lo >= s_hi:
        raise NoOverlap(
            "no common support: [%.4f, %.4f] is empty" % (s_lo, s_hi)
        )
    kept = (fitted >= s_lo) & (fitted <= s_hi)
    return PropensityFit(
        gamma=gamma,
        fitted=fitted,
        loglik=ll,
        support=(float(s_lo), float(s_hi)),
        kept=kept,
        n_iter=n_iter,
    )


@dataclass(frozen=True)
class TrimResult:
    data: Dataset
    fitted: np.ndarray          # scores of the kept rows, order preserved
    dropped_treated: int
    dropped_untreated: int


def trim_to_support(fit: PropensityFit, data: Dataset, min_kept: int = 50) -> TrimResult:
    """Drop observations whose fitted score falls outside the common support.

    The floor of 50 survivors is an implementation guard: local quadratic
    fitting needs positive effective mass at every grid point.
    """
    kept = fit.kept
    n_kept = int(kept.sum())
    if n_kept < min_kept:
        raise EmptyAfterTrim(
            "only %d observations inside the common support (floor %d)"
            % (n_kept, min_kept)
        )
    dropped_treated = int(((~kept) & (data.d == 1)).sum())
    dropped_untreated = int(((~kept) & (data.d == 0)).sum())
    return TrimResult(
        data=data.subset(kept),
        fitted=fit.fitted[kept],
        dropped_treated=dropped_treated,
        dropped_untreated=dropped_untreated,
    )
