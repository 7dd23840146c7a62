"""
Dense 2-D field containers, bilinear sampling, finite differences and SSIM.
"""

from .io import (
    decode_gwf,
    decode_pnm,
    encode_gwf,
    encode_pnm,
    read_gwf,
    read_pnm,
    write_gwf,
    write_pnm,
)
from .models import (
    ImageBuffer,
    MaskField,
    ScalarField,
    VectorField,
    pixel_grid,
)
from .operators import (
    block_ratio,
    box_filter3,
    box_filter3_adjoint,
    build_pyramid,
    downsample,
    second_difference,
    second_difference_array,
    ssim_map,
    ssim_support,
    ssim_terms,
)
from .sampling import (
    bilinear_sample,
    bilinear_sample_with_gradient,
    cell_ratio,
    sample_array,
    sample_array_adjoint,
)

__all__ = [
    "ImageBuffer",
    "ScalarField",
    "VectorField",
    "MaskField",
    "pixel_grid",
    "bilinear_sample",
    "bilinear_sample_with_gradient",
    "sample_array",
    "sample_array_adjoint",
    "cell_ratio",
    "second_difference",
    "second_difference_array",
    "box_filter3",
    "box_filter3_adjoint",
    "ssim_map",
    "ssim_terms",
    "ssim_support",
    "downsample",
    "block_ratio",
    "build_pyramid",
    "encode_gwf",
    "decode_gwf",
    "write_gwf",
    "read_gwf",
    "encode_pnm",
    "decode_pnm",
    "write_pnm",
    "read_pnm",
]
