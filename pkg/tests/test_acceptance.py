"""Acceptance suite: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one pass/fail line
per criterion.  The ablation and noise criteria run reduced-rollout suites
over 20 master seeds; the whole module takes a few minutes.
"""

import json
import math
import statistics
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from hiernav.affordance import TruthRegion, accuracy, generate_samples, resolve_phrase
from hiernav.cli import main as cli_main
from hiernav.errors import MalformedReplyError, RemoteTimeoutError
from hiernav.evaluation import (
    BackendSelection,
    EpisodeConfig,
    load_suite,
    run_suite,
    sweep,
)
from hiernav.geometry import (
    AgentPose,
    CameraIntrinsics,
    CameraPoint,
    PixelPoint,
    backproject,
    camera_to_robot,
    planar_distance,
    project,
    robot_to_world,
    world_to_camera,
)
from hiernav.perception import (
    Instance_or_none there is none
)
