import math

import numpy as np
import pytest
from scipy.integrate import quad

from mteband import (
    custom_kernel,
    eval_kernel,
    kernel_by_name,
    kernel_functionals,
)
from mteband.exceptions import NonDifferentiableKernel
from mteband.kernels import lambda_by_quadrature


def test_gaussian_at_zero(gauss):
    assert eval_kernel(gauss, 0.0) == pytest.approx(
        1.0 / math.sqrt(2.0 * math.pi), abs=1e-10
    )
    assert eval_kernel(gauss, 0.0) == pytest.approx(0.3989422804, abs=1e-9)


def test_gaussian_symmetry(gauss):
    assert eval_kernel(gauss, -1.3) == eval_kernel(gauss, 1.3)


def test_quartic_outside_support(quartic):
    assert eval_kernel(quartic, 2.0) == 0.0
    assert eval_kernel(quartic, -1.0001) == 0.0


def test_gaussian_kappa2_is_unit_variance(gauss):
    assert gauss.kappa2 == 1.0


def test_gaussian_nu2_closed_form_vs_quadrature(gauss):
    # oracle: direct quadrature of u^2 phi(u)^2
    phi = lambda u: math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    oracle = quad(lambda u: u * u * phi(u) ** 2, -8, 8, epsabs=1e-12)[0]
    assert gauss.nu2 == pytest.approx(1.0 / (4.0 * math.sqrt(math.pi)), abs=1e-12)
    assert gauss.nu2 == pytest.approx(oracle, abs=1e-9)
    assert gauss.nu2 == pytest.approx(0.1410474, abs=1e-7)


def test_gaussian_lambda_closed_form_vs_quadrature(gauss):
    # oracle: adaptive quadrature of -int g g'' / int g^2 with g = u phi(u);
    # analytically int g^2 = 1/(4 sqrt(pi)) and int g g'' = -3/(8 sqrt(pi))
    assert gauss.lam == 1.5
    assert lambda_by_quadrature(gauss) == pytest.approx(1.5, abs=1e-6)
    ratio = (3.0 / (8.0 * math.sqrt(math.pi))) / (1.0 / (4.0 * math.sqrt(math.pi)))
    assert ratio == 1.5


@pytest.mark.parametrize("name", ["gaussian", "quartic"])
def test_recomputed_functionals_match_stored(name):
    spec = kernel_by_name(name)
    kappa2, nu2, lam = kernel_functionals(spec)
    assert kappa2 == pytest.approx(spec.kappa2, abs=1e-6)
    assert nu2 == pytest.approx(spec.nu2, abs=1e-6)
    assert lam == pytest.approx(spec.lam, abs=1e-6)


@pytest.mark.parametrize("name", ["gaussian", "quartic"])
def test_lambda_analytic_vs_finite_difference(name):
    spec = kernel_by_name(name)
    assert lambda_by_quadrature(spec, fd=False) == pytest.approx(
        lambda_by_quadrature(spec, fd=True), abs=1e-4
    )


@pytest.mark.parametrize("name", ["gaussian", "quartic"])
def test_integrates_to_one_and_symmetric(name):
    spec = kernel_by_name(name)
    b = 8.0 if not np.isfinite(spec.support_radius) else spec.support_radius
    total = quad(lambda u: spec(u), -b, b, epsabs=1e-10)[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    u = np.linspace(0.01, b, 97)
    assert np.max(np.abs(spec(u) - spec(-u))) < 1e-12


def test_quartic_kappa2_analytic(quartic):
    # int u^2 * 15/16 (1-u^2)^2 du over [-1,1] = 1/7
    assert quartic.kappa2 == pytest.approx(1.0 / 7.0, abs=1e-9)


def test_functionals_positive():
    for name in ("gaussian", "quartic"):
        spec = kernel_by_name(name)
        assert spec.kappa2 > 0 and spec.nu2 > 0 and spec.lam > 0


def test_scaling_property_c2():
    # (1/c) K(u/c) with c=2 keeps unit mass and multiplies kappa2 by c^2
    c = 2.0

    def k(u):
        u = np.asarray(u, dtype=float)
        return np.exp(-0.5 * np.square(u / c)) / (c * math.sqrt(2.0 * math.pi))

    scaled = custom_kernel(k, support_radius=16.0)
    assert scaled.kappa2 == pytest.approx(c * c * 1.0, abs=1e-6)
    total = quad(lambda u: scaled(u), -16, 16, epsabs=1e-10)[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    # lambda scales by 1/c^2 under u -> u/c
    assert scaled.lam == pytest.approx(1.5 / (c * c), abs=1e-4)


def test_non_differentiable_custom_kernel_rejected():
    with pytest.raises(NonDifferentiableKernel):
        custom_kernel(
            lambda u: np.maximum(1.0 - np.abs(u), 0.0),
            support_radius=1.0,
            differentiable=False,
        )


def test_unknown_family_name():
    with pytest.raises(ValueError):
        kernel_by_name("epanechnikov-typo")
