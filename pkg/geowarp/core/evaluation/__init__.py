"""
KITTI artifact formats and the flow, depth and odometry benchmark metrics.
"""

from .io import (
    decode_depth_png,
    decode_flow_png,
    decode_mask_png,
    encode_mask_png,
    encode_depth_png,
    encode_flow_png,
    format_calib,
    format_poses,
    parse_calib,
    parse_poses,
    read_calib,
    read_depth_png,
    read_file_list,
    read_flow_png,
    read_mask_png,
    read_poses,
    write_depth_png,
    write_flow_png,
    write_mask_png,
    write_poses,
)
from .metrics import (
    depth_metrics,
    flow_metrics,
    odometry_ate,
    scale_aligned_ate,
    summarize_rows,
    umeyama_alignment,
    umeyama_ate,
)
from .models import (
    DEPTH_COLUMNS,
    FLOW_REGIONS,
    AteResult,
    CalibRecord,
    DepthMetrics,
    FlowGroundTruth,
    FlowMetrics,
    TrajectoryFile,
)

__all__ = [
    "CalibRecord",
    "TrajectoryFile",
    "FlowGroundTruth",
    "FlowMetrics",
    "DepthMetrics",
    "AteResult",
    "FLOW_REGIONS",
    "DEPTH_COLUMNS",
    "parse_calib",
    "format_calib",
    "read_calib",
    "parse_poses",
    "format_poses",
    "read_poses",
    "write_poses",
    "decode_flow_png",
    "encode_flow_png",
    "read_flow_png",
    "write_flow_png",
    "decode_depth_png",
    "encode_depth_png",
    "read_depth_png",
    "write_depth_png",
    "decode_mask_png",
    "read_mask_png",
    "encode_mask_png",
    "write_mask_png",
    "read_file_list",
    "flow_metrics",
    "depth_metrics",
    "odometry_ate",
    "scale_aligned_ate",
    "umeyama_alignment",
    "umeyama_ate",
    "summarize_rows",
]
