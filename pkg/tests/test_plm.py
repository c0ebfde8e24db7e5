import numpy as np
import pytest

from mteband import Dataset, fit_coefficients, local_linear_smooth, y_tilde
from mteband.exceptions import SingularResidualGram
from mteband.plm import silverman_bandwidth
from mteband.propensity import fit_probit, trim_to_support
from mteband.simulation import SIGMA1, SimDesign, draw_replication


def _partially_linear_draw(rng, n, b1, b0):
    """Draw with no control-function term: D independent of the outcome
    noise given the score, so E[DY|X,P] = b1'X P exactly."""
    x = rng.standard_normal((n, 2))
    p = rng.uniform(0.05, 0.95, n)
    d = (rng.uniform(size=n) < p).astype(float)
    y = d * (x @ b1) + (1.0 - d) * (x @ b0) + 0.5 * rng.standard_normal(n)
    data = Dataset(y=y, d=d, x=x, z=np.column_stack([x, p]))
    return data, p


def test_first_stage_exactness_linear_response(rng, gauss):
    n = 600
    p = rng.uniform(0.1, 0.9, n)
    resp = np.column_stack([2.0 + 3.0 * p, -1.0 + 0.5 * p])
    sm = local_linear_smooth(p, resp, silverman_bandwidth(p), gauss, exact=True)
    assert np.max(np.abs(sm - resp)) < 1e-8


def test_exact_and_binned_paths_agree(rng, gauss):
    n = 9000
    p = rng.uniform(0.05, 0.95, n)
    resp = np.column_stack([np.sin(3 * p) + 0.1 * rng.standard_normal(n), p * p])
    h = silverman_bandwidth(p)
    a = local_linear_smooth(p, resp, h, gauss, exact=True)
    b = local_linear_smooth(p, resp, h, gauss, exact=False)
    assert np.max(np.abs(a - b)) < 2e-3


def test_coefficients_against_infeasible_oracle(rng, gauss):
    b1, b0 = np.array([0.8, 0.4]), np.array([0.5, 0.1])
    data, p = _partially_linear_draw(rng, 20_000, b1, b0)
    coef = fit_coefficients(data, p, gauss)
    # oracle: infeasible OLS using the true score (valid because the
    # control-function terms are identically zero in this draw)
    xp = data.x * p[:, None]
    oracle1 = np.linalg.lstsq(xp, data.d * data.y, rcond=None)[0]
    x1mp = data.x * (1.0 - p)[:, None]
    oracle0 = np.linalg.lstsq(x1mp, (1.0 - data.d) * data.y, rcond=None)[0]
    oracle_diff = oracle1 - oracle0
    assert np.max(np.abs(coef.beta_diff - (b1 - b0))) < 0.05
    assert np.max(np.abs(coef.beta0 - b0)) < 0.05
    assert np.max(np.abs(coef.beta_diff - oracle_diff)) < 0.07
    assert np.max(np.abs(coef.beta1 - b1)) < 0.05


def test_null_effect(rng, gauss):
    b = np.array([0.6, -0.2])
    data, p = _partially_linear_draw(rng, 20_000, b, b)
    coef = fit_coefficients(data, p, gauss)
    assert np.max(np.abs(coef.beta_diff)) < 0.05


def test_degenerate_covariate_rejected(rng, gauss):
    n = 500
    p = rng.uniform(0.1, 0.9, n)
    d = (rng.uniform(size=n) < p).astype(float)
    data = Dataset(y=rng.standard_normal(n), d=d, x=np.zeros((n, 1)), z=p[:, None])
    with pytest.raises(SingularResidualGram):
        fit_coefficients(data, p, gauss)


def test_misaligned_scores_rejected(rng, gauss):
    data, p = _partially_linear_draw(rng, 200, np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        fit_coefficients(data, p[:-1], gauss)


def test_y_tilde_definition(rng, gauss):
    data, p = _partially_linear_draw(rng, 400, np.ones(2), np.zeros(2))
    coef = fit_coefficients(data, p, gauss)
    yt = y_tilde(data, p, coef)
    manual = data.y - data.x @ coef.beta0 - (data.x @ coef.beta_diff) * p
    assert np.allclose(yt, manual, atol=1e-12)


def _beta_diff_on_design(n, seed, gauss):
    design = SimDesign(sigma=SIGMA1, n=n, reps=1, seed=seed)
    data = draw_replication(design, 0)
    fit = fit_probit(data)
    trim = trim_to_support(fit, data)
    return fit_coefficients(trim.data, trim.fitted, gauss).beta_diff


@pytest.mark.slow
def test_root_n_rate_of_beta_diff(gauss):
    truth = np.array([0.3, 0.3])
    errs = {25_000: [], 100_000: []}
    for seed in range(50):
        for n in errs:
            err = _beta_diff_on_design(n, 1000 + seed, gauss) - truth
            errs[n].append(err @ err)
    rmse_small = np.sqrt(np.mean(errs[25_000]))
    rmse_big = np.sqrt(np.mean(errs[100_000]))
    ratio = rmse_small / rmse_big
    assert 1.6 < ratio < 2.6
