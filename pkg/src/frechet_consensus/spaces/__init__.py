"""Concrete opinion spaces."""

from .euclidean import Euclidean
from .gaussian import BuresWasserstein, GaussianMeasure, bw_barycenter, bw_dist
from .sdr_curves import (
    SDRCurveParams,
    SDRCurveSpace,
    sdr_barycenter,
    sdr_curve_dist,
    sdr_curve_eval,
    sdr_param_dist,
)
from .wasserstein import (
    GEVParams,
    QuantileFunction,
    Wasserstein1D,
    fit_gev,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    w1d_barycenter,
    w1d_dist,
)

__all__ = [
    "BuresWasserstein",
    "Euclidean",
    "GEVParams",
    "GaussianMeasure",
    "QuantileFunction",
    "SDRCurveParams",
    "SDRCurveSpace",
    "Wasserstein1D",
    "bw_barycenter",
    "bw_dist",
    "fit_gev",
    "gev_cdf",
    "gev_pdf",
    "gev_quantile",
    "sdr_barycenter",
    "sdr_curve_dist",
    "sdr_curve_eval",
    "sdr_param_dist",
    "w1d_barycenter",
    "w1d_dist",
]
