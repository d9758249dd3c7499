"""Deterministic simulator and policy engine for hierarchical long-horizon
object navigation: scene model, synthetic perception, global/local policies,
spatial-affordance dataset generation, and the evaluation harness.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    AgentPose,
    CameraIntrinsics,
    CameraPoint,
    PixelPoint,
    backproject,
    camera_to_robot,
    project,
    robot_to_world,
    success,
    wrap_angle,
)
from .scene import (  # noqa: F401
    OccupancyGrid,
    Region,
    Scene,
    SceneObject,
    TopDownView,
    line_of_sight,
    load_scene,
    render_top_down,
    sample_waypoint,
    save_scene,
)
