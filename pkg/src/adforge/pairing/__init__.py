"""Product pairing: VLM profiling plus the geometric viewpoint filter."""

from .geometry import (
    CameraIntrinsics,
    PlaneFit,
    RansacParams,
    TiltCache,
    TiltEstimate,
    backproject_floor,
    camera_tilt,
    default_intrinsics,
    estimate_product_tilt,
    fit_floor_plane,
    viewpoint_compatible,
)
from .pairs import PairCandidate, PairReject, PairingResult, pair_candidates
from .profiles import ProductProfile, ProfileStore, parse_dims_cm, profile_product, truncate_words

__all__ = [
    "CameraIntrinsics",
    "PairCandidate",
    "PairReject",
    "PairingResult",
    "PlaneFit",
    "ProductProfile",
    "ProfileStore",
    "RansacParams",
    "TiltCache",
    "TiltEstimate",
    "backproject_floor",
    "camera_tilt",
    "default_intrinsics",
    "estimate_product_tilt",
    "fit_floor_plane",
    "pair_candidates",
    "parse_dims_cm",
    "profile_product",
    "truncate_words",
    "viewpoint_compatible",
]
