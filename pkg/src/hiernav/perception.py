"""Synthetic egocentric perception and the pointing-backend abstraction.

A panoramic scan projects every visible object's extent corners through
the pinhole model at evenly spaced headings.  Pointing backends answer
"where is <phrase> in this observation" with pixel points: a perfect
oracle, a noise-wrapped oracle, and a remote model client speaking the
chat wire protocol.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import affordance
from .errors import (
    InvariantError,
    MalformedReplyError,
    NoDepthError,
    OccupiedPoseError,
    PhraseError,
)
from .geometry import (
    AgentPose,
    CameraIntrinsics,
    PixelPoint,
    planar_distance,
    project,
    world_to_camera,
    wrap_angle,
)
from .remote import RemoteEndpointConfig, chat
from .scene import Scene, SceneObject, line_of_sight
from .seeding import stable_hash

DEFAULT_N_HEADINGS = 12
DEFAULT_MAX_RANGE = 10.0

_POINT_PATTERN = re.compile(r"\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\)")
_NONE_PATTERN = re.compile(r"\bNONE\b", re.IGNORECASE)

_STOPWORDS = {
    "a", "an", "and", "at", "by", "find", "for", "go", "in", "is", "me",
    "my", "near", "next", "of", "on", "please", "side", "that", "the",
    "to", "with",
}


@dataclass(frozen=True)
class Detection:
    """One object's visible projection: in-frame points and mean depth."""

    object_id: str
    points: tuple[PixelPoint, ...]
    mean_depth: float


@dataclass(frozen=True)
class Observation:
    """What the camera sees from ``pose`` at one scan heading."""

    pose: AgentPose
    heading_index: int
    n_headings: int
    intrinsics: CameraIntrinsics
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if not (0 <= self.heading_index < self.n_headings):
            raise InvariantError(
                f"heading index {self.heading_index} outside [0, {self.n_headings})"
            )

    @property
    def heading(self) -> float:
        return wrap_angle(
            self.pose.theta + self.heading_index * (2.0 * math.pi / self.n_headings)
        )

    @property
    def camera_pose(self) -> AgentPose:
        return AgentPose(self.pose.x, self.pose.y, self.heading)


@dataclass(frozen=True)
class PointingQuery:
    target_phrase: str
    observation: Observation

    def __post_init__(self) -> None:
        if not self.target_phrase or not self.target_phrase.strip():
            raise InvariantError("pointing query needs a nonempty target phrase")


@dataclass(frozen=True)
class PointingResult:
    found: bool
    points: tuple[PixelPoint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        if self.found != bool(self.points):
            raise InvariantError("found implies points and vice versa")


class PointingBackend(Protocol):
    def point(self, query: PointingQuery) -> PointingResult: ...


# ---------------------------------------------------------------------------
# Scanning


def panoramic_scan(
    scene: Scene,
    pose: AgentPose,
    intrinsics: CameraIntrinsics,
    n_headings: int = DEFAULT_N_HEADINGS,
    max_range: float = DEFAULT_MAX_RANGE,
    camera_height: float = 0.0,
) -> list[Observation]:
    """Observations at ``n_headings`` evenly spaced headings from one pose.

    An object is listed when it has line of sight from the pose, its center
    is within ``max_range``, and at least one of its extent corners (or its
    center) projects with positive depth inside the frame.  Deterministic;
    detections are ordered by object id.
    """
    if n_headings < 1:
        raise InvariantError(f"n_headings must be >= 1, got {n_headings}")
    if not scene.grid.is_free_point(pose.position):
        raise OccupiedPoseError(f"scan pose {pose.position} is on an occupied cell")

    candidates = [
        obj
        for obj in sorted(scene.objects, key=lambda o: o.id)
        if planar_distance(pose.position, obj.xy) <= max_range
        and line_of_sight(scene, pose.position, obj.xy)
    ]

    step = 2.0 * math.pi / n_headings
    observations = []
    for index in range(n_headings):
        camera_pose = AgentPose(pose.x, pose.y, pose.theta + index * step)
        detections = []
        for obj in candidates:
            points = []
            for world_point in [*obj.corners(), obj.position]:
                cam = world_to_camera(world_point, camera_pose, camera_height)
                if cam.z <= 1e-9:
                    continue
                pixel = project(cam, intrinsics)
                if intrinsics.contains(pixel.u, pixel.v):
                    points.append(pixel)
            if points:
                mean_depth = sum(p.d for p in points) / len(points)
                detections.append(Detection(obj.id, tuple(points), mean_depth))
        observations.append(
            Observation(
                pose=pose,
                heading_index=index,
                n_headings=n_headings,
                intrinsics=intrinsics,
                detections=tuple(detections),
            )
        )
    return observations


def centroid(points: list[PixelPoint] | tuple[PixelPoint, ...]) -> PixelPoint:
    """Component-wise mean of (u, v, d); d only when every point has one."""
    if not points:
        raise InvariantError("centroid of an empty point list")
    n = len(points)
    u = sum(p.u for p in points) / n
    v = sum(p.v for p in points) / n
    if all(p.d is not None for p in points):
        d = sum(p.d for p in points) / n
    else:
        d = None
    return PixelPoint(u=u, v=v, d=d)


def frame_from_observation(
    obs: Observation, scene: Scene
) -> tuple[affordance.AnnotatedFrame, dict[str, float]]:
    """Reinterpret an observation as an annotated frame for the resolver."""
    instances = []
    depths = {}
    k = obs.intrinsics
    for det in obs.detections:
        us = [p.u for p in det.points]
        vs = [p.v for p in det.points]
        x1, x2 = min(us), max(us)
        y1, y2 = min(vs), max(vs)
        # Single-point detections degenerate to zero-size boxes; pad them.
        if x2 - x1 < 1.0:
            x1, x2 = x1 - 0.5, x2 + 0.5
        if y2 - y1 < 1.0:
            y1, y2 = y1 - 0.5, y2 + 0.5
        x1, x2 = max(0.0, x1), min(float(k.width), x2)
        y1, y2 = max(0.0, y1), min(float(k.height), y2)
        category = scene.object_by_id(det.object_id).category
        instances.append(
            affordance.Instance(id=det.object_id, category=category, box=(x1, y1, x2, y2))
        )
        depths[det.object_id] = det.mean_depth
    frame = affordance.AnnotatedFrame(
        id=f"{scene.id}:h{obs.heading_index}",
        width=k.width,
        height=k.height,
        instances=tuple(instances),
    )
    return frame, depths


def match_phrase_to_object(
    objects: tuple[SceneObject, ...] | list[SceneObject], phrase: str
) -> str | None:
    """Resolve a free-form phrase against object categories and attributes.

    A candidate's category must appear in the phrase and every remaining
    non-stopword token of the phrase must appear among the candidate's
    category and attribute words.  Returns None unless exactly one object
    qualifies.
    """
    text = " ".join(phrase.lower().split())
    candidates = [o for o in objects if o.category.lower() in text]
    if not candidates:
        return None
    longest = max(len(o.category) for o in candidates)
    candidates = [o for o in candidates if len(o.category) == longest]
    qualified = []
    for obj in candidates:
        vocabulary = set(re.findall(r"[a-z0-9]+", obj.category.lower()))
        for attribute in obj.attributes:
            vocabulary.update(re.findall(r"[a-z0-9]+", attribute.lower()))
        required = set(re.findall(r"[a-z0-9]+", text)) - _STOPWORDS
        required -= set(re.findall(r"[a-z0-9]+", obj.category.lower()))
        if required <= vocabulary:
            qualified.append(obj.id)
    if len(qualified) == 1:
        return qualified[0]
    return None


# ---------------------------------------------------------------------------
# Backends


class OraclePointer:
    """Perfect pointer: answers from the scene's ground truth.

    Relational phrases go through the affordance resolver over the
    observation's detections; anything else falls back to category plus
    attribute matching against the scene.  The target counts as found only
    when it is among the observation's detections.
    """

    def __init__(self, scene: Scene):
        self.scene = scene

    def point(self, query: PointingQuery) -> PointingResult:
        obs = query.observation
        if not obs.detections:
            return PointingResult(found=False)
        by_id = {d.object_id: d for d in obs.detections}
        target = self._resolve(query.target_phrase, obs)
        if target is None or target not in by_id:
            return PointingResult(found=False)
        return PointingResult(found=True, points=by_id[target].points)

    def _resolve(self, phrase: str, obs: Observation) -> str | None:
        frame, depths = frame_from_observation(obs, self.scene)
        try:
            resolved = affordance.resolve_phrase(frame, phrase, depths)
            return resolved if isinstance(resolved, str) else None
        except PhraseError:
            return match_phrase_to_object(self.scene.objects, phrase)


class NoisyPointer:
    """Oracle wrapper with pixel jitter and Bernoulli detection errors.

    Per-point Gaussian noise of ``sigma`` pixels, whole-detection false
    negatives with probability ``p_fn``, and spurious detections with
    probability ``p_fp`` when the oracle sees nothing.  Noise draws are
    seeded from the query content, so results are reproducible run to run
    regardless of call order or threading.
    """

    def __init__(
        self,
        inner: PointingBackend,
        sigma: float = 0.0,
        p_fp: float = 0.0,
        p_fn: float = 0.0,
        seed: int = 0,
        spurious_depth_range: tuple[float, float] = (0.5, DEFAULT_MAX_RANGE),
    ):
        if sigma < 0 or not (0 <= p_fp <= 1) or not (0 <= p_fn <= 1):
            raise InvariantError("noise parameters out of range")
        self.inner = inner
        self.sigma = sigma
        self.p_fp = p_fp
        self.p_fn = p_fn
        self.seed = seed
        self.spurious_depth_range = spurious_depth_range

    def _rng(self, query: PointingQuery) -> np.random.Generator:
        obs = query.observation
        return np.random.default_rng(
            stable_hash(
                self.seed,
                query.target_phrase,
                obs.pose.x,
                obs.pose.y,
                obs.pose.theta,
                obs.heading_index,
            )
        )

    def point(self, query: PointingQuery) -> PointingResult:
        base = self.inner.point(query)
        rng = self._rng(query)
        k = query.observation.intrinsics
        if base.found:
            if rng.random() < self.p_fn:
                return PointingResult(found=False)
            jittered = []
            for p in base.points:
                u = float(np.clip(p.u + rng.normal(0.0, self.sigma), 0.0, k.width - 1e-6))
                v = float(np.clip(p.v + rng.normal(0.0, self.sigma), 0.0, k.height - 1e-6))
                jittered.append(PixelPoint(u=u, v=v, d=p.d))
            return PointingResult(found=True, points=tuple(jittered))
        if self.p_fp > 0 and rng.random() < self.p_fp:
            count = int(rng.integers(3, 9))
            lo, hi = self.spurious_depth_range
            points = tuple(
                PixelPoint(
                    u=float(rng.uniform(0.0, k.width - 1e-6)),
                    v=float(rng.uniform(0.0, k.height - 1e-6)),
                    d=float(rng.uniform(lo, hi)),
                )
                for _ in range(count)
            )
            return PointingResult(found=True, points=points)
        return base


class RemotePointer:
    """Pointing over the wire: query text plus an observation sketch.

    The reply must contain "(u, v)" pixel pairs on the target, or the word
    NONE when it is not visible; anything else is malformed and re-asked up
    to ``config.retries`` times.  Depth for returned pixels is looked up
    from the nearest synthetic detection point.
    """

    def __init__(self, config: RemoteEndpointConfig):
        self.config = config

    def point(self, query: PointingQuery) -> PointingResult:
        obs = query.observation
        k = obs.intrinsics
        sketch = json.dumps(
            {
                "image_size": [k.width, k.height],
                "heading_index": obs.heading_index,
                "detections": [
                    {
                        "object": d.object_id,
                        "centroid": [round(centroid(d.points).u, 2), round(centroid(d.points).v, 2)],
                        "depth": round(d.mean_depth, 3),
                        "n_points": len(d.points),
                    }
                    for d in obs.detections
                ],
            },
            sort_keys=True,
        )
        messages = [
            {
                "role": "user",
                "content": (
                    f"Point at: {query.target_phrase}\n"
                    f"Observation sketch: {sketch}\n"
                    'Reply with pixel points "(u, v)" on the target, '
                    "or NONE if it is not visible."
                ),
            }
        ]
        last_error = "no attempt made"
        for _ in range(self.config.retries + 1):
            try:
                text = chat(self.config, messages)
            except MalformedReplyError as exc:
                last_error = str(exc)
                continue
            pairs = [(float(u), float(v)) for u, v in _POINT_PATTERN.findall(text)]
            if pairs:
                in_frame = [(u, v) for u, v in pairs if k.contains(u, v)]
                if not in_frame:
                    last_error = f"all {len(pairs)} returned points fall outside the frame"
                    continue
                return PointingResult(
                    found=True,
                    points=tuple(self._with_depth(u, v, obs) for u, v in in_frame),
                )
            if _NONE_PATTERN.search(text):
                return PointingResult(found=False)
            last_error = f"no point pairs or NONE in reply: {text[:120]!r}"
        raise MalformedReplyError(last_error)

    @staticmethod
    def _with_depth(u: float, v: float, obs: Observation) -> PixelPoint:
        best = None
        best_dist = math.inf
        for det in obs.detections:
            for p in det.points:
                dist = math.hypot(p.u - u, p.v - v)
                if dist < best_dist:
                    best_dist = dist
                    best = p.d
        if best is None:
            raise NoDepthError(
                "observation has no synthetic detection to borrow depth from"
            )
        return PixelPoint(u=u, v=v, d=best)


def point(backend: PointingBackend, query: PointingQuery) -> PointingResult:
    """Dispatch a pointing query to a backend."""
    return backend.point(query)
