"""
GeoWarp package.

Geometric self-supervision machinery for joint depth, pose and optical flow:
reprojection and warping, validity/occlusion/dynamic masks, photometric,
smoothness, consistency and epipolar losses with analytic gradients, direct
optimization on analytic oracle scenes, and KITTI-format evaluators.
"""

# Version information
__version__ = "0.1.0"
__version_info__ = (0, 1, 0)
__author__ = "Wen-Ting Wang"
__email__ = "egpivo@gmail.com"
__description__ = "Geometric self-supervision toolkit with direct optimization"
__license__ = "Apache-2.0"
__url__ = "https://github.com/egpivo/geowarp"

__all__ = [
    "__version__",
    "__version_info__",
    "__author__",
    "__email__",
    "__description__",
    "__license__",
    "__url__",
]
