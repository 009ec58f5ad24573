"""Bandwidth selection for kernel density level sets and highest density regions (d = 2)."""

from .bandwidth import Bandwidth, KernelConstants, as_bandwidth, kernel_constants
from .contour import Contour, attach_normals, extract_contour, hausdorff_integral
from .density import MixtureDensity, get_model, sharp_mode, spherical_tau_level, standard_normal
from .errors import (
    DegenerateGradient,
    DegenerateSample,
    DimensionError,
    EmptyContour,
    GridCoverageError,
    InvalidBandwidth,
    InvalidModel,
    LsbandError,
    NoConvergence,
    NotSpherical,
)
from .estimator import HighestDensityRegion
from .kde import kde_density, kde_field, kde_gradient, kde_hessian, kde_sample
from .levels import EvalGrid, probability_content, tau_level, tau_level_resample
from .montecarlo import (
    CompareResult,
    RiskCurve,
    SimConfig,
    compare_methods,
    risk_curve,
    simulated_risk,
    symdiff_mass,
    wilcoxon_signed_rank,
)
from .pilot import PilotBandwidths, normal_scale_functional, pilot_bandwidths
from .risk import (
    RiskInputs,
    RiskReport,
    build_risk_inputs,
    d1,
    hdr_risk,
    ls_risk,
    psi_term,
    region_hess_integral,
    region_hessian_matrix,
)
from .selector import (
    HdrEstimate,
    NoveltyResult,
    SelectionResult,
    SelectorConfig,
    estimated_risk,
    hdr_estimate,
    lscv_bandwidth,
    novelty_classify,
    select_bandwidth,
)

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "CompareResult",
    "Contour",
    "DegenerateGradient",
    "DegenerateSample",
    "DimensionError",
    "EmptyContour",
    "EvalGrid",
    "GridCoverageError",
    "HdrEstimate",
    "HighestDensityRegion",
    "InvalidBandwidth",
    "InvalidModel",
    "KernelConstants",
    "LsbandError",
    "MixtureDensity",
    "NoConvergence",
    "NotSpherical",
    "NoveltyResult",
    "PilotBandwidths",
    "RiskCurve",
    "RiskInputs",
    "RiskReport",
    "SelectionResult",
    "SelectorConfig",
    "SimConfig",
    "as_bandwidth",
    "attach_normals",
    "build_risk_inputs",
    "compare_methods",
    "d1",
    "estimated_risk",
    "extract_contour",
    "get_model",
    "hausdorff_integral",
    "hdr_estimate",
    "hdr_risk",
    "kde_density",
    "kde_field",
    "kde_gradient",
    "kde_hessian",
    "kde_sample",
    "kernel_constants",
    "ls_risk",
    "lscv_bandwidth",
    "normal_scale_functional",
    "novelty_classify",
    "pilot_bandwidths",
    "probability_content",
    "psi_term",
    "region_hess_integral",
    "region_hessian_matrix",
    "risk_curve",
    "select_bandwidth",
    "sharp_mode",
    "simulated_risk",
    "spherical_tau_level",
    "standard_normal",
    "symdiff_mass",
    "tau_level",
    "tau_level_resample",
    "wilcoxon_signed_rank",
]
