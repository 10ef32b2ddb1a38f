"""Numerical toolkit for a family of weighted averaging operators.

The package evaluates the two-sided power-weighted averaging operator, its
conjugate, weighted convolution averages, product-form multidimensional
variants and a discrete analogue; computes the classical, anisotropic and
grand-style norms of the catalog functions; and verifies the sharp
norm-ratio bound, its blow-up rate at the lower critical exponent, and the
transfer of the bound to grand-style norms.
"""

__version__ = "0.1.0"

from .errors import (ChlabError, ConfigError, ConvergenceError,
                     DivergenceError, DomainError, EmptyIntersectionError,
                     FitError, HomogeneityWarning, RangeError,
                     UnsupportedError)
from .exponents import (BOUNDARY_TOL, ExponentWindow, MultiParams,
                        OperatorParams, axis_windows, exponent_window,
                        multi_exponents, p_of_q, q_of_p, validate_params)
from .quadrature import (QuadratureSpec, QuadResult, beta_fn, gamma_fn,
                         halfline_lp_integral, jacobi_weighted_integral,
                         log_halfline_integral, tanh_sinh)
from .functions import (FunctionSpec, Piece, ProductFunctionSpec,
                        closed_form_image_U, dilate, evaluate,
                        function_from_json, function_to_json, indicator,
                        make_f0, make_f_delta_theta, make_g_plus,
                        power_function)
from .operators import (DiscreteKernel, ImageInfo, WeightSpec,
                        apply_M_discrete, apply_U, apply_U_log,
                        apply_U_multidim, apply_VS, apply_W, apply_W_log,
                        cesaro_kernel, image_info_U, image_info_VS,
                        image_info_W, power_weight, weight_one)
from .norms import (NormResult, PsiFunction, anisotropic_norm, clear_caches,
                    gls_image_norm, gls_norm, image_lq_norm, lp_norm,
                    natural_psi, psi_from_json)
from .bounds import (BlowupFit, SweepRecord, conjugate_bound_probe,
                     conjugate_probe_function, conjugate_sweep_records,
                     conjugate_upper_bound, default_conjugate_p_list,
                     fit_blowup, gls_transfer_ratio, hardy_convolution_bound,
                     lower_bound_K_empirical, psi_K_transfer, sweep_ratio,
                     upper_bound_K, vs_ratio_record)

__all__ = [
    "__version__",
    # errors
    "ChlabError", "ConfigError", "ConvergenceError", "DivergenceError",
    "DomainError", "EmptyIntersectionError", "FitError", "HomogeneityWarning",
    "RangeError", "UnsupportedError",
    # exponents
    "BOUNDARY_TOL", "ExponentWindow", "MultiParams", "OperatorParams",
    "axis_windows", "exponent_window", "multi_exponents", "p_of_q", "q_of_p",
    "validate_params",
    # quadrature
    "QuadratureSpec", "QuadResult", "beta_fn", "gamma_fn",
    "halfline_lp_integral", "jacobi_weighted_integral",
    "log_halfline_integral", "tanh_sinh",
    # functions
    "FunctionSpec", "Piece", "ProductFunctionSpec", "closed_form_image_U",
    "dilate", "evaluate", "function_from_json", "function_to_json",
    "indicator", "make_f0", "make_f_delta_theta", "make_g_plus",
    "power_function",
    # operators
    "DiscreteKernel", "ImageInfo", "WeightSpec", "apply_M_discrete",
    "apply_U", "apply_U_log", "apply_U_multidim", "apply_VS", "apply_W",
    "apply_W_log", "cesaro_kernel", "image_info_U", "image_info_VS",
    "image_info_W", "power_weight", "weight_one",
    # norms
    "NormResult", "PsiFunction", "anisotropic_norm", "clear_caches",
    "gls_image_norm", "gls_norm", "image_lq_norm", "lp_norm", "natural_psi",
    "psi_from_json",
    # bounds
    "BlowupFit", "SweepRecord", "conjugate_bound_probe",
    "conjugate_probe_function", "conjugate_sweep_records",
    "conjugate_upper_bound", "default_conjugate_p_list", "fit_blowup",
    "gls_transfer_ratio", "hardy_convolution_bound", "lower_bound_K_empirical",
    "psi_K_transfer", "sweep_ratio", "upper_bound_K", "vs_ratio_record",
]
