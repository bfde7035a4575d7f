"""Numerics for hypergroups on [0, oo) generated by a Sturm-Liouville function A."""

__version__ = "0.1.0"

from .asymptotics import (
    NuFamily,
    RegimeReport,
    approx_identity_defect,
    asymptotic_distances,
    classify,
    dilated_nu,
    nu_family,
    nu_infty,
    nu_measure,
    s_map,
    t_map,
    tau_transform,
)
from .eigen import CEstimate, EigenSolution, c_function, phi_at, phi_lambda
from .kernel import HyperbolicGrid, TranslatedFunction, TranslationKernel, convolve_H, kernel_density, translate_function
from .measure import GridMeasure, convolve_R, exp_weight, fourier_stieltjes, neumann_inverse, pair, tv_distance
from .model import (
    Family,
    SturmLiouvilleModel,
    bessel_kingman,
    bounded_demo,
    custom,
    index_rho,
    jacobi,
    load_model,
    naimark,
    transmutation,
    validate_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
