"""
Configuration module for geowarp.

Run configuration resolution lives in ``geowarp.config.config``; it is not
re-exported here because it depends on the core parameter models, which in
turn read these defaults.
"""

from .constants import (
    AblationVariants,
    FieldDefaults,
    GradientCheckDefaults,
    LossConstants,
    MaskDefaults,
    MetricDefaults,
    OptimizerDefaults,
    PhotometricDefaults,
    RansacDefaults,
    RunDefaults,
    SceneDefaults,
)

__all__ = [
    "AblationVariants",
    "FieldDefaults",
    "MaskDefaults",
    "PhotometricDefaults",
    "RansacDefaults",
    "OptimizerDefaults",
    "GradientCheckDefaults",
    "MetricDefaults",
    "SceneDefaults",
    "RunDefaults",
    "LossConstants",
]
