"""Floor-plane geometry: back-projection, RANSAC plane fitting, camera tilt.

Camera frame convention is y-down, z-forward; the world "up" axis seen from
the camera is (0, -1, 0). A fitted floor normal is oriented to point up
(y-component <= 0) and the camera tilt is the angle between that normal and
the up axis.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DegenerateGeometry, TooFewFloorPixels
from ..gateway.types import DepthMap, SegmentationMask

logger = logging.getLogger(__name__)

UP_AXIS = np.array([0.0, -1.0, 0.0])
MIN_FLOOR_PIXELS = 200
MAX_CLOUD_POINTS = 20_000
DEFAULT_FOV_DEG = 55.0


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float


def default_intrinsics(width: int, height: int, fov_deg: float = DEFAULT_FOV_DEG) -> CameraIntrinsics:
    """Pinhole intrinsics for an unknown camera: assumed horizontal FOV,
    square pixels, principal point at the image center."""
    fx = width / (2.0 * math.tan(math.radians(fov_deg) / 2.0))
    return CameraIntrinsics(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0)


@dataclass
class PlaneFit:
    normal: np.ndarray  # unit 3-vector, y-component <= 0
    offset: float  # plane is {x : normal . x + offset = 0}
    inlier_ratio: float
    inlier_count: int


@dataclass
class TiltEstimate:
    tilt_deg: float
    plane: PlaneFit
    quality: float  # inlier_ratio copy

    def to_dict(self) -> dict:
        return {
            "tilt_deg": self.tilt_deg,
            "quality": self.quality,
            "normal": [float(v) for v in self.plane.normal],
            "offset": float(self.plane.offset),
            "inlier_ratio": self.plane.inlier_ratio,
            "inlier_count": self.plane.inlier_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TiltEstimate":
        plane = PlaneFit(
            normal=np.array(data["normal"], dtype=np.float64),
            offset=float(data["offset"]),
            inlier_ratio=float(data["inlier_ratio"]),
            inlier_count=int(data["inlier_count"]),
        )
        return cls(tilt_deg=float(data["tilt_deg"]), plane=plane, quality=float(data["quality"]))


@dataclass
class RansacParams:
    iters: int = 200
    inlier_dist_m: float = 0.02
    seed: int = 0
    min_inlier_ratio: float = 0.3


def backproject_floor(
    depth: DepthMap,
    floor_mask: SegmentationMask,
    intrinsics: CameraIntrinsics,
    max_points: int = MAX_CLOUD_POINTS,
    seed: int = 0,
) -> np.ndarray:
    """Back-project masked valid depth pixels to camera-frame 3D points.

    Each pixel (u, v) with depth d maps to (d*(u-cx)/fx, d*(v-cy)/fy, d).
    The cloud is uniformly subsampled to at most `max_points`, seeded.
    """
    if (depth.height, depth.width) != floor_mask.foreground.shape:
        raise ValueError("depth and mask dimensions must match")
    select = floor_mask.foreground & depth.valid_mask
    count = int(select.sum())
    if count < MIN_FLOOR_PIXELS:
        raise TooFewFloorPixels(
            f"only {count} valid floor pixels, need at least {MIN_FLOOR_PIXELS}"
        )
    vs, us = np.nonzero(select)
    ds = depth.values[vs, us].astype(np.float64)
    points = np.stack(
        [
            ds * (us - intrinsics.cx) / intrinsics.fx,
            ds * (vs - intrinsics.cy) / intrinsics.fy,
            ds,
        ],
        axis=1,
    )
    if len(points) > max_points:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(points), size=max_points, replace=False)
        keep.sort()
        points = points[keep]
    return points


def fit_floor_plane(points: np.ndarray, ransac: Optional[RansacParams] = None) -> PlaneFit:
    """RANSAC over 3-point samples, then a least-squares refit on the inliers.

    The refit normal is the smallest eigenvector of the centered covariance,
    flipped to the y <= 0 orientation. Deterministic given the seed.
    """
    ransac = ransac or RansacParams()
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 3:
        raise DegenerateGeometry(f"need at least 3 points, got {len(points)}")

    rng = np.random.default_rng(ransac.seed)
    idx = rng.integers(0, len(points), size=(ransac.iters, 3))
    p0, p1, p2 = points[idx[:, 0]], points[idx[:, 1]], points[idx[:, 2]]
    normals = np.cross(p1 - p0, p2 - p0)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 1e-12
    if not ok.any():
        raise DegenerateGeometry("all sampled triples were collinear")
    normals[ok] /= norms[ok, None]
    offsets = -np.einsum("ij,ij->i", normals, p0)
    # distance of every point to every candidate plane: (N, iters)
    dist = np.abs(points @ normals.T + offsets[None, :])
    counts = (dist <= ransac.inlier_dist_m).sum(axis=0)
    counts[~ok] = -1
    best = int(np.argmax(counts))
    inliers = points[dist[:, best] <= ransac.inlier_dist_m]
    ratio = len(inliers) / len(points)
    if ratio < ransac.min_inlier_ratio:
        raise DegenerateGeometry(
            f"best plane explains only {ratio:.1%} of points "
            f"(threshold {ransac.min_inlier_ratio:.0%})"
        )

    centroid = inliers.mean(axis=0)
    centered = inliers - centroid
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    normal = eigvecs[:, 0]
    if normal[1] > 0 or (normal[1] == 0 and normal[2] > 0):
        normal = -normal
    normal = normal / np.linalg.norm(normal)
    return PlaneFit(
        normal=normal,
        offset=float(-normal @ centroid),
        inlier_ratio=ratio,
        inlier_count=len(inliers),
    )


def camera_tilt(plane: PlaneFit) -> TiltEstimate:
    """Angle between the fitted floor normal and the camera up axis."""
    cos_t = float(np.clip(np.dot(plane.normal, UP_AXIS), -1.0, 1.0))
    return TiltEstimate(tilt_deg=math.degrees(math.acos(cos_t)), plane=plane, quality=plane.inlier_ratio)


def viewpoint_compatible(
    a: TiltEstimate, b: TiltEstimate, threshold_deg: float
) -> tuple[bool, float]:
    """Scalar tilt comparison; the full normal-vector angle is logged for audit."""
    angle_diff = abs(a.tilt_deg - b.tilt_deg)
    vector_angle = math.degrees(
        math.acos(float(np.clip(np.dot(a.plane.normal, b.plane.normal), -1.0, 1.0)))
    )
    logger.debug(
        "viewpoint check: |dtilt|=%.2f deg, normal angle=%.2f deg, threshold=%.2f",
        angle_diff,
        vector_angle,
        threshold_deg,
    )
    return angle_diff <= threshold_deg, angle_diff


def estimate_product_tilt(
    gateway,
    image: np.ndarray,
    fov_deg: float = DEFAULT_FOV_DEG,
    ransac: Optional[RansacParams] = None,
    min_floor_px: int = MIN_FLOOR_PIXELS,
) -> TiltEstimate:
    """Tilt of the camera that took a product photo.

    Queries the segmentation backend for the floor region; catalog shots on
    white backgrounds rarely show any floor, in which case the product's
    bottom-contact band (lowest 10% of foreground rows) stands in.
    """
    h, w = image.shape[:2]
    floor = gateway.segment(image, "floor").foreground
    if int(floor.sum()) < min_floor_px:
        fg = gateway.segment(image, "product foreground").foreground
        rows = np.nonzero(fg.any(axis=1))[0]
        if len(rows):
            band_start = rows[-1] - max(1, round(0.10 * (rows[-1] - rows[0] + 1))) + 1
            band = np.zeros_like(fg)
            band[band_start : rows[-1] + 1] = True
            floor = fg & band
    if int(floor.sum()) < min_floor_px:
        raise TooFewFloorPixels(
            f"{int(floor.sum())} candidate floor pixels, need {min_floor_px}"
        )
    depth = gateway.estimate_depth(image)
    points = backproject_floor(
        depth,
        SegmentationMask(width=w, height=h, foreground=floor),
        default_intrinsics(w, h, fov_deg),
        seed=ransac.seed if ransac else 0,
    )
    return camera_tilt(fit_floor_plane(points, ransac))


class TiltCache:
    """Read-mostly per-item tilt estimates with JSON persistence."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._estimates: dict[str, TiltEstimate] = {}
        if self.path and self.path.exists():
            import json

            data = json.loads(self.path.read_text("utf-8"))
            self._estimates = {k: TiltEstimate.from_dict(v) for k, v in data.items()}

    def get(self, item_id: str) -> Optional[TiltEstimate]:
        return self._estimates.get(item_id)

    def put(self, item_id: str, estimate: TiltEstimate) -> None:
        with self._lock:
            self._estimates[item_id] = estimate
            self._save()

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._estimates

    def _save(self) -> None:
        if not self.path:
            return
        import json

        payload = {k: v.to_dict() for k, v in sorted(self._estimates.items())}
        self.path.write_text(json.dumps(payload, indent=2, sort_keys=True), "utf-8")
