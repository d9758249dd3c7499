"""Local policy: waypoint exploration, pointing, and goal localization.

At each waypoint the agent runs a panoramic scan and a pointing query per
heading.  A detection is converted pixel -> camera -> robot -> world and
snapped to a nearby free cell; a miss triggers the two-stage fallback
(keep exploring the region from the farthest unvisited spot, or ask the
reasoning backend for the next region).  Motion is grid A*, deterministic
by construction.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvariantError,
    NoFreeCellError,
    OccupiedPoseError,
    ParseError,
    UnreachableGoalError,
)
from .geometry import (
    AgentPose,
    CameraIntrinsics,
    backproject,
    camera_to_robot,
    planar_distance,
    robot_to_world,
)
from .perception import (
    DEFAULT_MAX_RANGE,
    DEFAULT_N_HEADINGS,
    Observation,
    PointingBackend,
    PointingQuery,
    PointingResult,
    centroid,
    panoramic_scan,
)
from .policy_global import Instruction, ReasoningBackend
from .scene import (
    Point2,
    Region,
    Scene,
    TopDownView,
    region_free_cell_centers,
)

SNAP_TOLERANCE = 0.2  # meters; waypoints closer than this count as revisits


@dataclass
class ExplorationState:
    """The local loop's memory within one episode."""

    current_region_id: str
    step_budget_remaining: int
    visited_waypoints: list[Point2] = field(default_factory=list)
    scans_without_detection: int = 0
    regions_tried: list[str] = field(default_factory=list)

    def note_waypoint(self, point: Point2) -> None:
        """Record a visited waypoint; near-duplicates collapse into one."""
        if all(planar_distance(point, p) > SNAP_TOLERANCE for p in self.visited_waypoints):
            self.visited_waypoints.append(point)

    def spend_steps(self, count: int) -> None:
        if count > self.step_budget_remaining:
            raise InvariantError("cannot spend more budget than remains")
        self.step_budget_remaining -= count


@dataclass(frozen=True)
class StepOutcome:
    """What one waypoint visit decided; exactly one kind per outcome."""

    kind: str  # goal_found | continue | switch_region | exhausted
    goal: Point2 | None = None
    raw_goal: Point2 | None = None
    heading_index: int | None = None
    next_waypoint: Point2 | None = None
    region_id: str | None = None

    @classmethod
    def goal_found(cls, goal: Point2, raw_goal: Point2, heading_index: int) -> "StepOutcome":
        return cls("goal_found", goal=goal, raw_goal=raw_goal, heading_index=heading_index)

    @classmethod
    def continue_in_region(cls, next_waypoint: Point2) -> "StepOutcome":
        return cls("continue", next_waypoint=next_waypoint)

    @classmethod
    def switch_region(cls, region_id: str) -> "StepOutcome":
        return cls("switch_region", region_id=region_id)

    @classmethod
    def exhausted(cls) -> "StepOutcome":
        return cls("exhausted")


@dataclass
class EpisodeTrace:
    """Everything an episode did: poses plus tagged events, replayable."""

    task_id: str
    scene_id: str
    target_id: str | None = None
    target_position: tuple[float, float, float] | None = None
    success_radius: float = 1.0
    scene_path: str | None = None
    poses: list[AgentPose] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    @property
    def final_pose(self) -> AgentPose:
        if not self.poses:
            raise InvariantError("trace has no poses")
        return self.poses[-1]

    @property
    def steps(self) -> int:
        return max(0, len(self.poses) - 1)

    def add_pose(self, pose: AgentPose) -> None:
        self.poses.append(pose)

    def add_poses(self, poses: list[AgentPose]) -> None:
        self.poses.extend(poses)

    def add_event(self, tag: str, **fields) -> None:
        self.events.append({"step": max(0, len(self.poses) - 1), "tag": tag, **fields})

    def navigation_error(self) -> float:
        if self.target_position is None:
            raise InvariantError("trace carries no target position")
        return planar_distance(
            self.final_pose.position,
            (self.target_position[0], self.target_position[1]),
        )

    # -- serialization: one tagged record per line, ordered by step index

    def to_jsonl(self, path: str | Path) -> None:
        records = [
            {
                "tag": "trace_header",
                "task": self.task_id,
                "scene_id": self.scene_id,
                "scene_path": self.scene_path,
                "target_id": self.target_id,
                "target_position": list(self.target_position)
                if self.target_position
                else None,
                "success_radius": self.success_radius,
            }
        ]
        events_by_step: dict[int, list[dict]] = {}
        for event in self.events:
            events_by_step.setdefault(event["step"], []).append(event)
        for step, pose in enumerate(self.poses):
            records.append(
                {"tag": "pose", "step": step, "x": pose.x, "y": pose.y, "theta": pose.theta}
            )
            records.extend(events_by_step.get(step, ()))
        Path(path).write_text(
            "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
        )

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "EpisodeTrace":
        path = Path(path)
        header = None
        poses: list[AgentPose] = []
        events: list[dict] = []
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from exc
            tag = record.get("tag")
            if tag == "trace_header":
                header = record
            elif tag == "pose":
                try:
                    poses.append(AgentPose(record["x"], record["y"], record["theta"]))
                except KeyError as exc:
                    raise ParseError(f"{path}:{lineno}: pose record lacks {exc}") from exc
            else:
                events.append(record)
        if header is None:
            raise ParseError(f"{path}: no trace_header record")
        target = header.get("target_position")
        trace = cls(
            task_id=header["task"],
            scene_id=header["scene_id"],
            scene_path=header.get("scene_path"),
            target_id=header.get("target_id"),
            target_position=tuple(target) if target else None,
            success_radius=header.get("success_radius", 1.0),
        )
        trace.poses = poses
        trace.events = events
        return trace


# ---------------------------------------------------------------------------
# Grid planner

_NEIGHBORS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)
_SQRT2 = math.sqrt(2.0)


def _astar(grid, start, goal):
    """Deterministic A*: Euclidean heuristic, ties broken by cell index.

    Diagonal moves are blocked when either adjacent orthogonal cell is
    occupied (no corner cutting).
    """
    width = grid.width
    height = grid.height
    occ = grid.occ_rows
    goal_row, goal_col = goal
    hypot = math.hypot
    push = heapq.heappush
    pop = heapq.heappop

    g_score = {start: 0.0}
    came_from = {}
    open_heap = [(hypot(start[0] - goal_row, start[1] - goal_col),
                  start[0] * width + start[1], start)]
    closed = set()
    while open_heap:
        _, _, current = pop(open_heap)
        if current in closed:
            continue
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            return path[::-1]
        closed.add(current)
        row, col = current
        g_current = g_score[current]
        for dr, dc in _NEIGHBORS:
            nr, nc = row + dr, col + dc
            if not (0 <= nr < height and 0 <= nc < width):
                continue
            if occ[nr][nc]:
                continue
            if dr != 0 and dc != 0:
                if occ[nr][col] or occ[row][nc]:
                    continue
                tentative = g_current + _SQRT2
            else:
                tentative = g_current + 1.0
            neighbor = (nr, nc)
            if tentative < g_score.get(neighbor, math.inf) - 1e-12:
                g_score[neighbor] = tentative
                came_from[neighbor] = current
                push(
                    open_heap,
                    (tentative + hypot(nr - goal_row, nc - goal_col),
                     nr * width + nc, neighbor),
                )
    return None


def navigate_to(scene: Scene, start: AgentPose, goal: Point2) -> list[AgentPose]:
    """Shortest 8-connected grid path from the pose to the goal point.

    Returns one pose per path cell, headings along the motion; the first
    pose keeps the exact start position.  Raises
    :class:`UnreachableGoalError` when no path exists.
    """
    grid = scene.grid
    start_cell = grid.world_to_cell(start.position)
    if grid.is_occupied(start_cell):
        raise OccupiedPoseError(f"start pose {start.position} is on an occupied cell")
    goal_cell = grid.world_to_cell(goal)
    if grid.is_occupied(goal_cell):
        raise UnreachableGoalError(f"goal {goal} lies on an occupied cell")
    if start_cell == goal_cell:
        return [start]
    cells = _astar(grid, start_cell, goal_cell)
    if cells is None:
        raise UnreachableGoalError(f"no path from {start.position} to {goal}")
    positions = [start.position] + [grid.cell_center(c) for c in cells[1:]]
    poses = []
    for i, position in enumerate(positions):
        if i + 1 < len(positions):
            nxt = positions[i + 1]
            theta = math.atan2(nxt[1] - position[1], nxt[0] - position[0])
        else:
            theta = poses[-1].theta if poses else start.theta
        poses.append(AgentPose(position[0], position[1], theta))
    return poses


# ---------------------------------------------------------------------------
# Goal localization


def localize_goal_raw(
    result: PointingResult, obs: Observation, pose_at_scan: AgentPose
) -> Point2:
    """Averaged point -> camera -> robot -> world, before any snapping."""
    if not result.found:
        raise InvariantError("cannot localize a not-found pointing result")
    center = centroid(result.points)
    if center.d is None:
        raise InvariantError("pointing result carries no depth to localize with")
    camera_heading = AgentPose(
        pose_at_scan.x,
        pose_at_scan.y,
        pose_at_scan.theta + obs.heading_index * (2.0 * math.pi / obs.n_headings),
    )
    return robot_to_world(camera_to_robot(backproject(center, obs.intrinsics)), camera_heading)


def clamp_to_free_cell(point: Point2, scene: Scene, radius: float = 1.0) -> Point2:
    """Center of the nearest free cell within ``radius`` of ``point``.

    The projected target often sits on (or inside) the object itself; the
    agent should stand next to it, on traversable ground.
    """
    grid = scene.grid
    reach = int(math.ceil(radius / grid.cell_size)) + 1
    col0 = int((point[0] - grid.origin[0]) / grid.cell_size)
    row0 = int((point[1] - grid.origin[1]) / grid.cell_size)
    best = None
    best_key = None
    for row in range(max(0, row0 - reach), min(grid.height, row0 + reach + 1)):
        for col in range(max(0, col0 - reach), min(grid.width, col0 + reach + 1)):
            if grid.cells[row, col]:
                continue
            center = grid.cell_center((row, col))
            dist = planar_distance(center, point)
            if dist > radius:
                continue
            key = (dist, row, col)
            if best_key is None or key < best_key:
                best_key = key
                best = center
    if best is None:
        raise NoFreeCellError(f"no free cell within {radius} m of {point}")
    return best


def localize_goal(
    result: PointingResult,
    obs: Observation,
    pose_at_scan: AgentPose,
    scene: Scene,
    clamp_radius: float = 1.0,
) -> Point2:
    """Full localization: averaged pixel point to a standable world goal."""
    return clamp_to_free_cell(localize_goal_raw(result, obs, pose_at_scan), scene, clamp_radius)


# ---------------------------------------------------------------------------
# Waypoint loop


@dataclass(frozen=True)
class LocalPolicyConfig:
    intrinsics: CameraIntrinsics
    n_headings: int = DEFAULT_N_HEADINGS
    max_range: float = DEFAULT_MAX_RANGE
    clamp_radius: float = 1.0
    camera_height: float = 0.0


def pointing_hits(
    observations: list[Observation],
    pointing: PointingBackend,
    target_phrase: str,
) -> list[tuple[Observation, PointingResult]]:
    """Query every heading; found results sorted best-supported first.

    A detection near the frame edge loses corner points to culling and its
    centroid drifts off the object, so localization prefers the heading
    with the most points (ties: lower heading index).
    """
    hits = []
    for obs in observations:
        result = pointing.point(PointingQuery(target_phrase, obs))
        if result.found:
            hits.append((obs, result))
    hits.sort(key=lambda pair: (-len(pair[1].points), pair[0].heading_index))
    return hits


def next_waypoint_farthest(
    state: ExplorationState, region: Region, scene: Scene
) -> Point2 | None:
    """Free cell in the region farthest from everything already visited.

    Guarantees coverage progress; deterministic (first best in row-major
    order wins).  Returns None when the region is saturated.
    """
    centers = region_free_cell_centers(region, scene)
    if len(centers) == 0:
        return None
    if not state.visited_waypoints:
        return (float(centers[0, 0]), float(centers[0, 1]))
    visited = np.asarray(state.visited_waypoints, dtype=float)
    deltas = centers[:, None, :] - visited[None, :, :]
    scores = np.min(np.hypot(deltas[..., 0], deltas[..., 1]), axis=1)
    best = int(np.argmax(scores))  # first of equals: row-major tie-break
    if scores[best] <= SNAP_TOLERANCE:
        return None
    return (float(centers[best, 0]), float(centers[best, 1]))


def step_waypoint(
    state: ExplorationState,
    scene: Scene,
    current_pose: AgentPose,
    pointing: PointingBackend,
    reasoning: ReasoningBackend,
    instruction: Instruction,
    target_phrase: str,
    view: TopDownView,
    config: LocalPolicyConfig,
    trace: EpisodeTrace | None = None,
) -> StepOutcome:
    """One waypoint visit: scan, point, and decide what happens next.

    On a detection the goal is localized and returned.  On a miss the
    reasoning backend first decides continue-vs-switch; continuing picks
    the farthest unvisited free cell in the current region, switching asks
    the backend for the most promising untried region.  ``exhausted`` means
    every region was tried.
    """
    if state.step_budget_remaining <= 0:
        return StepOutcome.exhausted()
    state.note_waypoint(current_pose.position)
    observations = panoramic_scan(
        scene,
        current_pose,
        config.intrinsics,
        n_headings=config.n_headings,
        max_range=config.max_range,
        camera_height=config.camera_height,
    )
    if trace is not None:
        trace.add_event(
            "scan",
            region=state.current_region_id,
            waypoint=[current_pose.x, current_pose.y],
            n_headings=config.n_headings,
        )
    for obs, result in pointing_hits(observations, pointing, target_phrase):
        raw = localize_goal_raw(result, obs, current_pose)
        try:
            goal = clamp_to_free_cell(raw, scene, config.clamp_radius)
        except NoFreeCellError:
            continue  # nothing standable near this detection; try the next hit
        if trace is not None:
            trace.add_event(
                "detection",
                heading_index=obs.heading_index,
                n_points=len(result.points),
                raw_goal=[raw[0], raw[1]],
                goal=[goal[0], goal[1]],
            )
        return StepOutcome.goal_found(goal, raw, obs.heading_index)

    decision = reasoning.continue_or_switch(
        instruction,
        view.annotations().get(state.current_region_id),
        state.scans_without_detection,
        list(state.regions_tried),
    )
    state.scans_without_detection += 1
    if trace is not None:
        trace.add_event(
            "fallback",
            decision=decision,
            scans_without_detection=state.scans_without_detection,
        )
    if decision == "continue":
        nxt = next_waypoint_farthest(state, scene.region_by_id(state.current_region_id), scene)
        if nxt is not None:
            return StepOutcome.continue_in_region(nxt)
        # Region saturated; fall through to a switch.
    tried = set(state.regions_tried) | {state.current_region_id}
    annotations = view.annotations()
    candidates = [
        (rid, annotations.get(rid)) for rid in view.region_ids() if rid not in tried
    ]
    if not candidates:
        return StepOutcome.exhausted()
    chosen = reasoning.choose_region(instruction, candidates)
    state.regions_tried.append(state.current_region_id)
    state.current_region_id = chosen
    state.scans_without_detection = 0
    if trace is not None:
        trace.add_event("region_switch", region=chosen)
    return StepOutcome.switch_region(chosen)
