"""Event-camera stereo disparity from velocity-synchronised event volumes."""

from ._accel import backend_name
from .core import (
    CameraRig,
    CostVolume,
    DisparityConfig,
    DisparityMap,
    Event,
    EventBatch,
    EventDisparityVolume,
    EventValidationError,
    TimestampVolume,
    Velocity,
    validate_batch,
)
from .cost import WindowSpec, iou_cost_volume, window_sum
from .disparity import disparity_to_depth, reject_outliers, winner_takes_all
from .motion import depth_from_disparity, motion_field_flow, perturb_velocity, time_shift
from .pipeline import batch_events, process_batch, run
from .volume import build_left_volume, build_right_volume, build_timestamp_volumes

__version__ = "0.1.0"

__all__ = [
    "CameraRig",
    "CostVolume",
    "DisparityConfig",
    "DisparityMap",
    "Event",
    "EventBatch",
    "EventDisparityVolume",
    "EventValidationError",
    "TimestampVolume",
    "Velocity",
    "WindowSpec",
    "backend_name",
    "batch_events",
    "build_left_volume",
    "build_right_volume",
    "build_timestamp_volumes",
    "depth_from_disparity",
    "disparity_to_depth",
    "iou_cost_volume",
    "motion_field_flow",
    "perturb_velocity",
    "process_batch",
    "reject_outliers",
    "run",
    "time_shift",
    "validate_batch",
    "window_sum",
    "winner_takes_all",
]
