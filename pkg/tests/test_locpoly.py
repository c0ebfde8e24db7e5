import math

import numpy as np
import pytest
from scipy.integrate import quad

from mteband import fit_local_quadratic, mte_estimate, rot_bandwidth
from mteband.exceptions import DegenerateCurvature, InsufficientLocalMass
from mteband.locpoly import rot_constant, weight_floor
from mteband.plm import CoefFit
from mteband.simulation import SIGMA1, SimDesign, draw_replication
from mteband.propensity import fit_probit, trim_to_support
from mteband.plm import fit_coefficients, y_tilde


def test_quadratic_reproduced_exactly(rng, gauss):
    p = rng.uniform(0.05, 0.95, 400)
    lp = fit_local_quadratic(p, p * p, np.array([0.5]), 0.25, gauss)
    assert lp.theta0[0] == pytest.approx(0.25, abs=1e-8)
    assert lp.theta1[0] == pytest.approx(1.0, abs=1e-8)
    assert lp.theta2[0] == pytest.approx(1.0, abs=1e-8)


def test_constant_data(rng, gauss):
    p = rng.uniform(0.1, 0.9, 300)
    grid = np.linspace(0.2, 0.8, 13)
    lp = fit_local_quadratic(p, np.full(300, 7.0), grid, 0.15, gauss)
    assert np.allclose(lp.theta0, 7.0, atol=1e-10)
    assert np.allclose(lp.theta1, 0.0, atol=1e-8)


@pytest.mark.parametrize("h", [0.08, 0.2, 0.7])
@pytest.mark.parametrize("a,b,c", [(0.3, -1.2, 2.0), (0.0, 0.0, 5.0)])
def test_polynomial_exactness_any_bandwidth(rng, gauss, h, a, b, c):
    p = rng.uniform(0.05, 0.95, 500)
    y = a + b * p + c * p * p
    grid = np.linspace(0.15, 0.85, 29)
    lp = fit_local_quadratic(p, y, grid, h, gauss)
    assert np.max(np.abs(lp.theta0 - (a + b * grid + c * grid * grid))) < 1e-8
    assert np.max(np.abs(lp.theta1 - (b + 2 * c * grid))) < 1e-8
    assert np.max(np.abs(lp.theta2 - c)) < 1e-8


def test_grid_shift_equivariance(rng, gauss):
    p = rng.uniform(0.2, 0.6, 400)
    y = np.sin(5.0 * p)
    grid = np.linspace(0.3, 0.5, 11)
    shift = 0.17
    lp1 = fit_local_quadratic(p, y, grid, 0.1, gauss)
    lp2 = fit_local_quadratic(p + shift, y, grid + shift, 0.1, gauss)
    assert np.max(np.abs(lp1.theta0 - lp2.theta0)) < 1e-10
    assert np.max(np.abs(lp1.theta1 - lp2.theta1)) < 1e-9


def test_huge_bandwidth_limits_to_global_quadratic(rng, gauss):
    p = rng.uniform(0.1, 0.9, 500)
    y = 1.0 - 2.0 * p + 3.0 * p * p + 1e-4 * rng.standard_normal(500)
    grid = np.linspace(0.2, 0.8, 7)
    lp = fit_local_quadratic(p, y, grid, 100.0, gauss)
    design = np.column_stack([np.ones(500), p, p * p])
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    global_fit = coef[0] + coef[1] * grid + coef[2] * grid * grid
    assert np.max(np.abs(lp.theta0 - global_fit)) < 1e-6


def test_insufficient_mass_far_from_data(rng, gauss):
    p = rng.uniform(0.4, 0.6, 300)
    y = rng.standard_normal(300)
    with pytest.raises(InsufficientLocalMass):
        fit_local_quadratic(p, y, np.array([0.05]), 0.01, gauss)
    lenient = fit_local_quadratic(
        p, y, np.array([0.05]), 0.01, gauss, strict=False
    )
    assert np.all(np.isfinite(lenient.theta0))


def test_eff_n_floor_respected(rng, gauss):
    p = rng.uniform(0.1, 0.9, 2000)
    y = rng.standard_normal(2000)
    lp = fit_local_quadratic(p, y, np.linspace(0.15, 0.85, 31), 0.05, gauss)
    assert np.all(lp.eff_n >= weight_floor(gauss))


def test_rot_constant_gaussian_closed_form(gauss):
    # [27 * nu2 / kappa2^2 / (mu4 / kappa2)^2]^(1/7) with mu4 = 3 for the
    # standard normal: (27 / (4 sqrt(pi) * 9))^(1/7)
    expected = (27.0 / (4.0 * math.sqrt(math.pi) * 9.0)) ** (1.0 / 7.0)
    assert rot_constant(gauss) == pytest.approx(expected, abs=1e-8)
    mu4 = quad(lambda u: u ** 4 * gauss(u), -8, 8)[0]
    assert mu4 == pytest.approx(3.0, abs=1e-8)


def test_rot_on_exact_cubic(rng, gauss):
    p = rng.uniform(0.05, 0.95, 800)
    y = p ** 3
    bw = rot_bandwidth(p, y, gauss)
    assert bw.h_rot > 0 and np.isfinite(bw.h_rot)
    assert bw.h_adj == pytest.approx(
        min(bw.h_rot * 800 ** (1.0 / 7.0 - 2.0 / 13.0), 1.0), rel=1e-12
    )
    assert 0 < bw.h_adj <= 1


def test_rot_degenerate_on_exact_quadratic(rng, gauss):
    p = rng.uniform(0.05, 0.95, 800)
    y = 1.0 + 2.0 * p - 0.5 * p * p
    with pytest.raises(DegenerateCurvature):
        rot_bandwidth(p, y, gauss)
    bw = rot_bandwidth(p, y, gauss, allow_flat=True)
    assert 0 < bw.h_adj <= 1


def test_rot_magnitude_on_reference_design(gauss):
    design = SimDesign(sigma=SIGMA1, n=3000, reps=1, seed=5)
    data = draw_replication(design, 0)
    fit = fit_probit(data)
    trim = trim_to_support(fit, data)
    coef = fit_coefficients(trim.data, trim.fitted, gauss)
    yt = y_tilde(trim.data, trim.fitted, coef)
    bw = rot_bandwidth(trim.fitted, yt, gauss)
    assert 0.02 < bw.h_adj < 0.06


def test_mte_estimate_assembly(rng, gauss):
    p = rng.uniform(0.1, 0.9, 300)
    grid = np.linspace(0.2, 0.8, 5)
    lp = fit_local_quadratic(p, np.zeros(300), grid, 0.2, gauss)
    coef = CoefFit(
        beta0=np.zeros(2), beta_diff=np.array([0.3, 0.3]), h_first_stage=0.1
    )
    # x_eval = 0 returns theta1 verbatim
    assert np.array_equal(mte_estimate(coef, lp, np.zeros(2)), lp.theta1)
    # theta1 = 0 here, so x = (1,1) gives 0.6 everywhere
    assert np.allclose(mte_estimate(coef, lp, np.ones(2)), 0.6, atol=1e-8)
    with pytest.raises(ValueError):
        mte_estimate(coef, lp, np.ones(3))
