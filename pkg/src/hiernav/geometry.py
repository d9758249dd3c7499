"""Planar pose math and pinhole camera geometry.

Conventions used throughout the package:

* World frame: x/y in meters on the floor plane, z up,
  counterclockwise headings.
* Robot frame: x forward, y left (right-handed, z up).
* Camera frame: z forward along the optical axis, x right, y down.
  The camera sits at the robot origin with zero tilt, so a heading is the
  direction of the optical axis in the world x/y plane and the stored
  pixel depth is the camera-frame z coordinate (plane depth, not ray
  length).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import InvariantError

if TYPE_CHECKING:
    from .scene import Scene, SceneObject

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = theta - TWO_PI * math.floor((theta + math.pi) / TWO_PI)
    # floor() puts the result in [-pi, pi); move the closed end to +pi.
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths, principal point, frame size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise InvariantError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvariantError(
                f"principal point ({self.cx}, {self.cy}) outside frame "
                f"{self.width}x{self.height}"
            )

    def contains(self, u: float, v: float) -> bool:
        """True iff pixel (u, v) lies inside [0, width) x [0, height)."""
        return 0.0 <= u < self.width and 0.0 <= v < self.height


@dataclass(frozen=True)
class AgentPose:
    """Planar robot pose; the heading is normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class PixelPoint:
    """A (possibly sub-pixel) image point with optional plane depth."""

    u: float
    v: float
    d: float | None = None


@dataclass(frozen=True)
class CameraPoint:
    """Camera-frame point: z forward, x right, y down (meters)."""

    x: float
    y: float
    z: float


def backproject(p: PixelPoint, k: CameraIntrinsics) -> CameraPoint:
    """Lift a pixel with depth to a camera-frame point.

    x = (u - cx) * d / fx, y = (v - cy) * d / fy, z = d.
    """
    if p.d is None or p.d <= 0:
        raise InvariantError(f"back-projection needs positive depth, got {p.d}")
    return CameraPoint(
        x=(p.u - k.cx) * p.d / k.fx,
        y=(p.v - k.cy) * p.d / k.fy,
        z=p.d,
    )


def project(c: CameraPoint, k: CameraIntrinsics) -> PixelPoint:
    """Project a camera-frame point to a pixel; depth is the z coordinate.

    Raises for points at or behind the camera plane.  Whether the result
    actually lands on the sensor is a separate question: test with
    ``k.contains(p.u, p.v)``.
    """
    if c.z <= 0:
        raise InvariantError(f"cannot project point behind camera, z={c.z}")
    return PixelPoint(
        u=k.fx * c.x / c.z + k.cx,
        v=k.fy * c.y / c.z + k.cy,
        d=c.z,
    )


def camera_to_robot(c: CameraPoint) -> tuple[float, float]:
    """Drop a camera-frame point onto the robot's ground plane.

    Camera z (forward) becomes robot x, camera x (right) becomes robot -y;
    the vertical component is discarded for planar navigation.
    """
    return (c.z, -c.x)


def robot_to_world(p: tuple[float, float], pose: AgentPose) -> tuple[float, float]:
    """Rotate a robot-frame planar point by the heading, then translate."""
    cos_t = math.cos(pose.theta)
    sin_t = math.sin(pose.theta)
    return (
        cos_t * p[0] - sin_t * p[1] + pose.x,
        sin_t * p[0] + cos_t * p[1] + pose.y,
    )


def world_to_robot(p: tuple[float, float], pose: AgentPose) -> tuple[float, float]:
    """Inverse of :func:`robot_to_world`."""
    cos_t = math.cos(pose.theta)
    sin_t = math.sin(pose.theta)
    dx = p[0] - pose.x
    dy = p[1] - pose.y
    return (cos_t * dx + sin_t * dy, -sin_t * dx + cos_t * dy)


def world_to_camera(
    point: tuple[float, float, float], pose: AgentPose, camera_height: float = 0.0
) -> CameraPoint:
    """Express a 3D world point in the camera frame at ``pose``.

    Used by the synthetic perceiver; the camera looks along the heading
    with zero tilt from ``camera_height`` above the robot origin.
    """
    rx, ry = world_to_robot((point[0], point[1]), pose)
    return CameraPoint(x=-ry, y=camera_height - point[2], z=rx)


def planar_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def success(
    pose: AgentPose, target: "SceneObject", scene: "Scene", radius: float = 1.0
) -> bool:
    """Task success: within ``radius`` meters of the target with line of sight."""
    if radius <= 0:
        raise InvariantError(f"success radius must be positive, got {radius}")
    from .scene import line_of_sight

    target_xy = (target.position[0], target.position[1])
    if planar_distance(pose.position, target_xy) > radius:
        return False
    return line_of_sight(scene, pose.position, target_xy)
