"""Information-theoretic measures for the Heston model and Gaussian-process volatility fits."""

from ._volinfo import (
    GpFit,
    HestonParams,
    InputError,
    ToleranceError,
    VolinfoError,
    __version__,
    compare_models,
    fit_gp,
    flow,
    load_returns,
    mi_curve,
    stationary_pdf,
    stehfest_invert,
    synthetic_returns,
)

__all__ = [
    "GpFit",
    "HestonParams",
    "InputError",
    "ToleranceError",
    "VolinfoError",
    "__version__",
    "compare_models",
    "fit_gp",
    "flow",
    "load_returns",
    "mi_curve",
    "stationary_pdf",
    "stehfest_invert",
    "synthetic_returns",
]
