"""Semiparametric marginal treatment effect estimation with uniform
confidence bands."""

__version__ = "0.1.0"

from .dataset import Dataset, load_csv
from .estimator import MTEBandEstimator
from .inference import (
    CriticalValue,
    MteBand,
    build_band,
    critical_value,
    estimate_variance,
    solve_ell,
)
from .kernels import (
    KernelSpec,
    custom_kernel,
    eval_kernel,
    gaussian_kernel,
    kernel_by_name,
    kernel_functionals,
    quartic_kernel,
)
from .locpoly import (
    BandwidthChoice,
    LocPolyFit,
    fit_local_quadratic,
    mte_estimate,
    rot_bandwidth,
)
from .pipeline import MteResult, run_estimate
from .plm import CoefFit, fit_coefficients, local_linear_smooth, y_tilde
from .propensity import PropensityFit, fit_probit, trim_to_support
from .simulation import (
    SIGMA1,
    SIGMA2,
    SIGMA3,
    CoverageReport,
    SimDesign,
    draw_replication,
    run_coverage,
    true_mte,
)

__all__ = [
    "BandwidthChoice",
    "CoefFit",
    "CoverageReport",
    "CriticalValue",
    "Dataset",
    "KernelSpec",
    "LocPolyFit",
    "MTEBandEstimator",
    "MteBand",
    "MteResult",
    "PropensityFit",
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "SimDesign",
    "build_band",
    "critical_value",
    "custom_kernel",
    "draw_replication",
    "estimate_variance",
    "eval_kernel",
    "fit_coefficients",
    "fit_local_quadratic",
    "fit_probit",
    "gaussian_kernel",
    "kernel_by_name",
    "kernel_functionals",
    "load_csv",
    "local_linear_smooth",
    "mte_estimate",
    "quartic_kernel",
    "rot_bandwidth",
    "run_coverage",
    "run_estimate",
    "solve_ell",
    "trim_to_support",
    "true_mte",
    "y_tilde",
]
