"""Kernel functions and the scalar functionals consumed downstream.

Every band-construction formula needs three numbers computed from the kernel
K: kappa2 = int u^2 K(u) du, nu2 = int u^2 K(u)^2 du, and
lam = -int g g'' du / int g^2 du with g(u) = u K(u). The Gaussian kernel gets
closed-form values; everything else goes through adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .exceptions import NonDifferentiableKernel

# Quadrature settings. The Gaussian kernel is integrated on [-8, 8]: the mass
# outside is below 1e-15, and finite bounds keep QUADPACK happy.
_QUAD_TOL = 1e-9
_GAUSS_CUTOFF = 8.0
_FD_STEP = 1e-5


@dataclass(frozen=True)
class KernelSpec:
    """A kernel plus the scalar functionals of it used by the band formulas.

    Immutable after construction; safe to share across threads.
    """

    family: str
    kappa2: float
    nu2: float
    lam: float
    support_radius: float
    _k: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _k2: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, u):
        return eval_kernel(self, u)


def eval_kernel(spec: KernelSpec, u):
    """Evaluate K(u); zero outside the support for compact kernels."""
    u = np.asarray(u, dtype=float)
    out = spec._k(u)
    if np.isfinite(spec.support_radius):
        out = np.where(np.abs(u) <= spec.support_radius, out, 0.0)
    return out if out.ndim else float(out)


def _quad_bound(spec: KernelSpec) -> float:
    return spec.support_radius if np.isfinite(spec.support_radius) else _GAUSS_CUTOFF


def kernel_functionals(spec: KernelSpec) -> tuple[float, float, float]:
    """Recompute (kappa2, nu2, lam) by quadrature from the kernel callable.

    Uses the analytic second derivative when the family provides one,
    otherwise central differences with step 1e-5. Raises
    NonDifferentiableKernel when the family declares no second derivative.
    """
    b = _quad_bound(spec)
    k = spec._k
    kappa2 = quad(lambda u: u * u * k(np.float64(u)), -b, b, epsabs=_QUAD_TOL)[0]
    nu2 = quad(lambda u: u * u * k(np.float64(u)) ** 2, -b, b, epsabs=_QUAD_TOL)[0]
    lam = _lambda_functional(spec)
    return kappa2, nu2, lam


def _lambda_functional(spec: KernelSpec, fd: bool = False) -> float:
    """lam = -int g g'' / int g^2 with g(u) = u K(u)."""
    b = _quad_bound(spec)
    k = spec._k

    def g(u):
        return u * k(np.float64(u))

    if fd or spec._k2 is None:
        def g2(u):
            s = _FD_STEP
            return (g(u + s) - 2.0 * g(u) + g(u - s)) / (s * s)
    else:
        k2 = spec._k2

        def g2(u):
            # g'' = 2 K' + u K'': supplied as a single callable for g''.
            return k2(np.float64(u))

    num = quad(lambda u: g(u) * g2(u), -b, b, epsabs=_QUAD_TOL, limit=200)[0]
    den = quad(lambda u: g(u) ** 2, -b, b, epsabs=_QUAD_TOL, limit=200)[0]
    return -num / den


def lambda_by_quadrature(spec: KernelSpec, fd: bool = False) -> float:
    """Public hook for the invariance check between analytic and FD g''."""
    return _lambda_functional(spec, fd=fd)


def _validate(spec: KernelSpec) -> KernelSpec:
    b = _quad_bound(spec)
    total = quad(spec._k, -b, b, epsabs=_QUAD_TOL)[0]
    if abs(total - 1.0) > 1e-8:
        raise ValueError("kernel does not integrate to 1 (got %.12f)" % total)
    uu = np.linspace(0.0, b, 257)[1:]
    if np.max(np.abs(spec._k(uu) - spec._k(-uu))) > 1e-10:
        raise ValueError("kernel is not symmetric")
    if not (spec.kappa2 > 0 and spec.nu2 > 0 and spec.lam > 0):
        raise ValueError("kernel functionals must be positive")
    return spec


def gaussian_kernel() -> KernelSpec:
    """Standard normal density kernel with closed-form functionals.

    kappa2 = 1, nu2 = 1/(4 sqrt(pi)), lam = 3/2. The compact-support
    assumption of the asymptotic theory is relaxed here on purpose: the
    reference simulations and application both use the Gaussian kernel, and we
    truncate at |u| <= 8 only for quadrature bounds.
    """
    c = 1.0 / math.sqrt(2.0 * math.pi)

    def k(u):
        return c * np.exp(-0.5 * np.square(u))

    def g2(u):
        # g = u phi(u) => g'' = u (u^2 - 3) phi(u)
        return u * (np.square(u) - 3.0) * k(u)

    return KernelSpec(
        family="gaussian",
        kappa2=1.0,
        nu2=1.0 / (4.0 * math.sqrt(math.pi)),
        lam=1.5,
        support_radius=math.inf,
        _k=k,
        _k2=g2,
    )


def quartic_kernel() -> KernelSpec:
    """Quartic (biweight) kernel K(u) = 15/16 (1-u^2)^2 on [-1, 1]."""

    def k(u):
        u = np.asarray(u, dtype=float)
        out = 0.9375 * np.square(1.0 - np.square(u))
        return np.where(np.abs(u) <= 1.0, out, 0.0)

    def g2(u):
        # K' = -15/4 u (1-u^2), K'' = -15/4 (1-3u^2); g'' = 2K' + uK''
        u = np.asarray(u, dtype=float)
        kp = -3.75 * u * (1.0 - np.square(u))
        kpp = -3.75 * (1.0 - 3.0 * np.square(u))
        return np.where(np.abs(u) <= 1.0, 2.0 * kp + u * kpp, 0.0)

    base = KernelSpec(
        family="quartic",
        kappa2=1.0,
        nu2=1.0,
        lam=1.0,
        support_radius=1.0,
        _k=k,
        _k2=g2,
    )
    kappa2, nu2, lam = kernel_functionals(base)
    return _validate(
        KernelSpec(
            family="quartic",
            kappa2=kappa2,
            nu2=nu2,
            lam=lam,
            support_radius=1.0,
            _k=k,
            _k2=g2,
        )
    )


def custom_kernel(
    k: Callable[[np.ndarray], np.ndarray],
    support_radius: float,
    g_second_derivative: Callable[[np.ndarray], np.ndarray] | None = None,
    differentiable: bool = True,
    family: str = "custom",
) -> KernelSpec:
    """Build a KernelSpec from a user kernel callable.

    When ``differentiable`` is False (e.g. a tabulated kernel with kinks) the
    lambda functional cannot be formed and NonDifferentiableKernel is raised,
    signalling that the analytic band is invalid for this kernel.
    """
    if not differentiable:
        raise NonDifferentiableKernel(
            "custom kernel declared non-differentiable; "
            "the analytic critical value needs g'' with g(u) = u K(u)"
        )
    base = KernelSpec(
        family=family,
        kappa2=1.0,
        nu2=1.0,
        lam=1.0,
        support_radius=support_radius,
        _k=k,
        _k2=g_second_derivative,
    )
    kappa2, nu2, lam = kernel_functionals(base)
    return _validate(
        KernelSpec(
            family=family,
            kappa2=kappa2,
            nu2=nu2,
            lam=lam,
            support_radius=support_radius,
            _k=k,
            _k2=g_second_derivative,
        )
    )


_FAMILIES = {"gaussian": gaussian_kernel, "quartic": quartic_kernel}


def kernel_by_name(name: str) -> KernelSpec:
    try:
        return _FAMILIES[name.lower()]()
    except KeyError:
        raise ValueError(
            "unknown kernel %r (choose from %s)" % (name, sorted(_FAMILIES))
        ) from None
