"""Key-rate lower bounds for binary-modulated CV-QKD with homodyne detection."""

from .eigen_bounds import InteriorPoint, MomentBounds, UncertaintyViolation, moment_bounds
from .keyrate import BoundBreakdown, SearchConfig, key_rate, maximize_s, optimize_alpha
from .observation import (
    ChannelParams,
    GaussianConditional,
    ObservedStatistics,
    conditional_from_params,
    conditional_from_stats,
    stats_from_params,
)
from .quadrature import QuadratureConfig

__all__ = [
    "BoundBreakdown",
    "ChannelParams",
    "GaussianConditional",
    "InteriorPoint",
    "MomentBounds",
    "ObservedStatistics",
    "QuadratureConfig",
    "SearchConfig",
    "UncertaintyViolation",
    "conditional_from_params",
    "conditional_from_stats",
    "key_rate",
    "maximize_s",
    "moment_bounds",
    "optimize_alpha",
    "stats_from_params",
]
