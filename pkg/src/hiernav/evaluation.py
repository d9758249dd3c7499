"""Benchmark harness: tasks, seeded multi-rollout episodes, NE/SR metrics.

An episode is the full loop: global decision, waypoint dispatch, repeated
scan/point/fallback steps, and grid navigation, ending in a goal approach,
exhaustion, or a spent step budget.  Navigation error (NE) is the planar
distance from the terminal pose to the target; success additionally needs
line of sight within the task radius.  Everything derives its randomness
from the master seed, so suites are reproducible byte for byte.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import BackendError, HiernavError, InvariantError, ParseError
from .geometry import AgentPose, CameraIntrinsics, planar_distance, success
from .perception import (
    DEFAULT_MAX_RANGE,
    DEFAULT_N_HEADINGS,
    NoisyPointer,
    OraclePointer,
    PointingBackend,
    RemotePointer,
    match_phrase_to_object,
)
from .policy_global import (
    Instruction,
    OracleReasoner,
    OracleTable,
    ReasoningBackend,
    RemoteReasoner,
    dispatch,
)
from .policy_local import (
    EpisodeTrace,
    ExplorationState,
    LocalPolicyConfig,
    navigate_to,
    step_waypoint,
)
from .remote import RemoteEndpointConfig
from .scene import Scene, load_scene, render_top_down, sample_waypoint
from .seeding import stable_hash

DEFAULT_INTRINSICS = CameraIntrinsics(
    fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480
)

SWEEP_AXES = ("annotation_mode", "pointing_noise", "continue_threshold_K")


@dataclass(frozen=True)
class Task:
    """One navigation task: an instruction and its unique target object."""

    id: str
    scene_id: str
    instruction: Instruction
    target_object_id: str
    start_poses: tuple[AgentPose, ...]
    success_radius: float = 1.0

    def __post_init__(self) -> None:
        if not self.start_poses:
            raise InvariantError(f"task '{self.id}': needs at least one start pose")
        if self.success_radius <= 0:
            raise InvariantError(f"task '{self.id}': success radius must be positive")


@dataclass(frozen=True)
class Suite:
    name: str
    scenes: dict[str, Scene]
    scene_paths: dict[str, str]
    tasks: tuple[Task, ...]
    oracle_table: OracleTable | None = None
    default_rollouts: int = 10


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything an episode needs beyond the task and the backends."""

    annotation_mode: str = "full"
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS
    n_headings: int = DEFAULT_N_HEADINGS
    max_range: float = DEFAULT_MAX_RANGE
    continue_threshold: int = 3
    step_budget: int = 500
    clamp_radius: float = 1.0
    camera_height: float = 0.0
    rollouts: int = 10
    master_seed: int = 0

    def local_config(self) -> LocalPolicyConfig:
        return LocalPolicyConfig(
            intrinsics=self.intrinsics,
            n_headings=self.n_headings,
            max_range=self.max_range,
            clamp_radius=self.clamp_radius,
            camera_height=self.camera_height,
        )


@dataclass(frozen=True)
class BackendSelection:
    """Which reasoning and pointing backends a run uses."""

    reasoning: str = "oracle"  # oracle | remote
    pointing: str = "oracle"  # oracle | noisy | remote
    sigma: float = 0.0
    p_fp: float = 0.0
    p_fn: float = 0.0
    reasoning_endpoint: RemoteEndpointConfig | None = None
    pointing_endpoint: RemoteEndpointConfig | None = None

    def __post_init__(self) -> None:
        if self.reasoning not in ("oracle", "remote"):
            raise InvariantError(f"unknown reasoning backend '{self.reasoning}'")
        if self.pointing not in ("oracle", "noisy", "remote"):
            raise InvariantError(f"unknown pointing backend '{self.pointing}'")
        if self.reasoning == "remote" and self.reasoning_endpoint is None:
            raise InvariantError("remote reasoning backend needs an endpoint")
        if self.pointing == "remote" and self.pointing_endpoint is None:
            raise InvariantError("remote pointing backend needs an endpoint")

    def build_reasoning(
        self, table: OracleTable | None, continue_threshold: int
    ) -> ReasoningBackend:
        if self.reasoning == "remote":
            return RemoteReasoner(self.reasoning_endpoint)
        if table is None:
            raise BackendError(
                "oracle reasoning backend needs an oracle table (suite has none)"
            )
        return OracleReasoner(table, continue_threshold)

    def build_pointing(self, scene: Scene, master_seed: int) -> PointingBackend:
        if self.pointing == "remote":
            return RemotePointer(self.pointing_endpoint)
        oracle = OraclePointer(scene)
        if self.pointing == "oracle":
            return oracle
        return NoisyPointer(
            oracle,
            sigma=self.sigma,
            p_fp=self.p_fp,
            p_fn=self.p_fn,
            seed=stable_hash(master_seed, "pointing-noise"),
        )


# ---------------------------------------------------------------------------
# Suite loading


@lru_cache(maxsize=None)
def _suite_schema() -> dict:
    text = resources.files("hiernav.schemas").joinpath("suite.schema.json").read_text()
    return json.loads(text)


def load_suite(path: str | Path) -> Suite:
    """Load a suite file, its scenes, and its oracle table; validate tasks.

    Each task's target must exist, its start poses must be on free cells,
    and (when an oracle table is bundled) its object phrase must match the
    target object uniquely within the scene.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, _suite_schema())
    except jsonschema.ValidationError as exc:
        raise ParseError(f"{path}: at {exc.json_path}: {exc.message}") from exc

    base = path.parent
    scenes = {}
    scene_paths = {}
    for scene_id, rel in data["scenes"].items():
        scene = load_scene(base / rel)
        if scene.id != scene_id:
            raise InvariantError(
                f"{path}: scene key '{scene_id}' maps to a file with id '{scene.id}'"
            )
        scenes[scene_id] = scene
        scene_paths[scene_id] = str(base / rel)

    table = None
    if data.get("oracle_table"):
        table = OracleTable.from_file(base / data["oracle_table"])

    tasks = []
    for entry in data["tasks"]:
        task = Task(
            id=entry["id"],
            scene_id=entry["scene"],
            instruction=Instruction(entry["instruction"]),
            target_object_id=entry["target_object_id"],
            start_poses=tuple(AgentPose(x, y, t) for x, y, t in entry["start_poses"]),
            success_radius=entry.get("success_radius", 1.0),
        )
        _validate_task(task, scenes, table)
        tasks.append(task)
    task_ids = [t.id for t in tasks]
    if len(set(task_ids)) != len(task_ids):
        raise InvariantError(f"{path}: duplicate task ids")
    return Suite(
        name=data["name"],
        scenes=scenes,
        scene_paths=scene_paths,
        tasks=tuple(tasks),
        oracle_table=table,
        default_rollouts=data.get("rollouts", 10),
    )


def _validate_task(task: Task, scenes: dict[str, Scene], table: OracleTable | None) -> None:
    if task.scene_id not in scenes:
        raise InvariantError(f"task '{task.id}': unknown scene '{task.scene_id}'")
    scene = scenes[task.scene_id]
    try:
        scene.object_by_id(task.target_object_id)
    except KeyError:
        raise InvariantError(
            f"task '{task.id}': target '{task.target_object_id}' not in scene"
        ) from None
    for pose in task.start_poses:
        if not scene.grid.in_bounds(pose.position) or not scene.grid.is_free_point(
            pose.position
        ):
            raise InvariantError(
                f"task '{task.id}': start pose {pose.position} not on a free cell"
            )
    if table is not None:
        entry = table.match(task.instruction.text)
        matched = match_phrase_to_object(scene.objects, entry.object_phrase)
        if matched != task.target_object_id:
            raise InvariantError(
                f"task '{task.id}': object phrase '{entry.object_phrase}' does not "
                f"uniquely match target '{task.target_object_id}' "
                f"(matched {matched!r})"
            )


# ---------------------------------------------------------------------------
# Episodes


@dataclass(frozen=True)
class EpisodeResult:
    ne: float
    success: bool
    steps: int
    trace: EpisodeTrace
    error_tag: str | None = None


def run_episode(
    task: Task,
    scene: Scene,
    reasoning: ReasoningBackend,
    pointing: PointingBackend,
    config: EpisodeConfig,
    seed: int,
    scene_path: str | None = None,
) -> EpisodeResult:
    """One full rollout; deterministic for fixed (task, seed, backends).

    Backend and environment failures do not raise: they terminate the
    episode where it stands, tagged with the error class, with NE measured
    from the failure pose.
    """
    target = scene.object_by_id(task.target_object_id)
    start = task.start_poses[stable_hash(seed, "start") % len(task.start_poses)]
    trace = EpisodeTrace(
        task_id=task.id,
        scene_id=scene.id,
        target_id=target.id,
        target_position=target.position,
        success_radius=task.success_radius,
        scene_path=scene_path,
    )
    trace.add_pose(start)
    pose = start
    error_tag: str | None = None
    reason = "exhausted"

    def goto(point) -> bool:
        """Walk one leg, truncated at the budget; True while budget lasts."""
        nonlocal pose
        path = navigate_to(scene, pose, point)
        steps = len(path) - 1
        state_budget = state.step_budget_remaining
        if steps > state_budget:
            path = path[: state_budget + 1]
            steps = len(path) - 1
        state.spend_steps(steps)
        trace.add_poses(path[1:])
        pose = path[-1]
        return state.step_budget_remaining > 0

    state = ExplorationState(
        current_region_id="", step_budget_remaining=config.step_budget
    )
    try:
        view = render_top_down(scene, config.annotation_mode)
        decision = reasoning.decide(task.instruction, view)
        trace.add_event(
            "global_decision",
            object=decision.target_object_phrase,
            region=decision.target_region_id,
            rationale=decision.rationale,
        )
        state.current_region_id = decision.target_region_id
        waypoint_index = 0
        waypoint = dispatch(decision, scene, stable_hash(seed, "waypoint", waypoint_index))
        trace.add_event("waypoint", point=[waypoint[0], waypoint[1]])
        local_config = config.local_config()
        in_budget = goto(waypoint)
        while in_budget:
            outcome = step_waypoint(
                state,
                scene,
                pose,
                pointing,
                reasoning,
                task.instruction,
                decision.target_object_phrase,
                view,
                local_config,
                trace,
            )
            if outcome.kind == "goal_found":
                trace.add_event("goal", point=[outcome.goal[0], outcome.goal[1]])
                goto(outcome.goal)
                reason = "goal"
                break
            if outcome.kind == "continue":
                trace.add_event(
                    "waypoint",
                    point=[outcome.next_waypoint[0], outcome.next_waypoint[1]],
                )
                in_budget = goto(outcome.next_waypoint)
            elif outcome.kind == "switch_region":
                waypoint_index += 1
                waypoint = sample_waypoint(
                    scene.region_by_id(outcome.region_id),
                    scene,
                    stable_hash(seed, "waypoint", waypoint_index),
                )
                trace.add_event("waypoint", point=[waypoint[0], waypoint[1]])
                in_budget = goto(waypoint)
            else:  # exhausted
                reason = "exhausted"
                break
    except HiernavError as exc:
        error_tag = type(exc).__name__
        reason = "error"

    ne = planar_distance(pose.position, target.xy)
    succeeded = (
        not error_tag
        and reason == "goal"
        and success(pose, target, scene, radius=task.success_radius)
    )
    trace.add_event(
        "terminate",
        reason=reason,
        ne=ne,
        success=succeeded,
        **({"error": error_tag} if error_tag else {}),
    )
    return EpisodeResult(
        ne=ne, success=succeeded, steps=trace.steps, trace=trace, error_tag=error_tag
    )


# ---------------------------------------------------------------------------
# Suites


@dataclass(frozen=True)
class RolloutRow:
    task_id: str
    scene_id: str
    rollout: int
    seed: int
    ne: float
    success: bool
    steps: int
    error_tag: str | None = None
    trace_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "task": self.task_id,
            "scene": self.scene_id,
            "rollout": self.rollout,
            "seed": self.seed,
            "ne": self.ne,
            "success": self.success,
            "steps": self.steps,
            "error": self.error_tag,
            "trace": self.trace_path,
        }


@dataclass(frozen=True)
class SuiteResult:
    """Per-rollout rows plus the Tab-style per-scene aggregates."""

    suite_name: str
    rows: tuple[RolloutRow, ...]
    scene_ne: dict[str, float] = field(default_factory=dict)
    scene_sr: dict[str, float] = field(default_factory=dict)
    avg_sr: float = 0.0

    @staticmethod
    def aggregate(suite_name: str, rows: list[RolloutRow]) -> "SuiteResult":
        rows = sorted(rows, key=lambda r: (r.task_id, r.rollout))
        scene_ne, scene_sr = SuiteResult.recompute_aggregates(rows)
        avg = (
            sum(scene_sr.values()) / len(scene_sr) if scene_sr else 0.0
        )
        return SuiteResult(
            suite_name=suite_name,
            rows=tuple(rows),
            scene_ne=scene_ne,
            scene_sr=scene_sr,
            avg_sr=avg,
        )

    @staticmethod
    def recompute_aggregates(rows) -> tuple[dict[str, float], dict[str, float]]:
        by_scene: dict[str, list[RolloutRow]] = {}
        for row in rows:
            by_scene.setdefault(row.scene_id, []).append(row)
        scene_ne = {
            scene: statistics.fmean(r.ne for r in scene_rows)
            for scene, scene_rows in sorted(by_scene.items())
        }
        scene_sr = {
            scene: sum(1 for r in scene_rows if r.success) / len(scene_rows)
            for scene, scene_rows in sorted(by_scene.items())
        }
        return scene_ne, scene_sr

    def to_dict(self) -> dict:
        return {
            "suite": self.suite_name,
            "per_scene": {
                scene: {"ne": self.scene_ne[scene], "sr": self.scene_sr[scene]}
                for scene in sorted(self.scene_ne)
            },
            "avg_sr": self.avg_sr,
            "rollouts": [row.to_dict() for row in self.rows],
        }

    def to_text(self) -> str:
        lines = [f"suite: {self.suite_name}"]
        header = f"{'scene':<16}{'NE (m)':>10}{'SR':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for scene in sorted(self.scene_ne):
            lines.append(
                f"{scene:<16}{self.scene_ne[scene]:>10.2f}"
                f"{self.scene_sr[scene] * 100:>9.1f}%"
            )
        lines.append("-" * len(header))
        lines.append(f"{'Avg. SR':<16}{'':>10}{self.avg_sr * 100:>9.1f}%")
        return "\n".join(lines) + "\n"


def rollout_seed(master_seed: int, task_id: str, rollout: int) -> int:
    return stable_hash(master_seed, task_id, rollout)


def run_suite(
    suite: Suite,
    selection: BackendSelection,
    config: EpisodeConfig,
    output_dir: str | Path | None = None,
) -> SuiteResult:
    """Rollouts x tasks with deterministic per-rollout seeds.

    When ``output_dir`` is given, traces are written under it (as
    ``traces/<task>_r<k>.trace.jsonl``) and rows carry the relative path.
    """
    reasoning = selection.build_reasoning(suite.oracle_table, config.continue_threshold)
    traces_dir = None
    if output_dir is not None:
        traces_dir = Path(output_dir) / "traces"
        traces_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for task in sorted(suite.tasks, key=lambda t: t.id):
        scene = suite.scenes[task.scene_id]
        pointing = selection.build_pointing(scene, config.master_seed)
        for rollout in range(config.rollouts):
            seed = rollout_seed(config.master_seed, task.id, rollout)
            result = run_episode(
                task,
                scene,
                reasoning,
                pointing,
                config,
                seed,
                scene_path=suite.scene_paths.get(task.scene_id),
            )
            trace_path = None
            if traces_dir is not None:
                name = f"{task.id}_r{rollout:02d}.trace.jsonl"
                result.trace.to_jsonl(traces_dir / name)
                trace_path = f"traces/{name}"
            rows.append(
                RolloutRow(
                    task_id=task.id,
                    scene_id=task.scene_id,
                    rollout=rollout,
                    seed=seed,
                    ne=result.ne,
                    success=result.success,
                    steps=result.steps,
                    error_tag=result.error_tag,
                    trace_path=trace_path,
                )
            )
    return SuiteResult.aggregate(suite.name, rows)


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepResult:
    axis: str
    results: tuple[tuple[object, SuiteResult], ...]

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "rows": [
                {"value": value, "avg_sr": result.avg_sr,
                 "per_scene": {s: {"ne": result.scene_ne[s], "sr": result.scene_sr[s]}
                               for s in sorted(result.scene_ne)}}
                for value, result in self.results
            ],
        }

    def to_text(self) -> str:
        lines = [f"sweep over {self.axis}"]
        header = f"{'value':<16}{'Avg. SR':>10}{'mean NE':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for value, result in self.results:
            mean_ne = (
                statistics.fmean(result.scene_ne.values()) if result.scene_ne else 0.0
            )
            lines.append(
                f"{str(value):<16}{result.avg_sr * 100:>9.1f}%{mean_ne:>10.2f}"
            )
        return "\n".join(lines) + "\n"


def sweep(
    suite: Suite,
    axis: str,
    values: list,
    selection: BackendSelection,
    config: EpisodeConfig,
    output_dir: str | Path | None = None,
) -> SweepResult:
    """One run_suite per axis value, everything else held fixed."""
    if axis not in SWEEP_AXES:
        raise InvariantError(f"unknown sweep axis '{axis}'; expected one of {SWEEP_AXES}")
    results = []
    for value in values:
        run_selection = selection
        run_config = config
        if axis == "annotation_mode":
            run_config = replace(config, annotation_mode=value)
        elif axis == "pointing_noise":
            run_selection = replace(selection, pointing="noisy", sigma=float(value))
        else:  # continue_threshold_K
            run_config = replace(config, continue_threshold=int(value))
        sub_dir = None
        if output_dir is not None:
            sub_dir = Path(output_dir) / f"{axis}_{value}"
        results.append((value, run_suite(suite, run_selection, run_config, sub_dir)))
    return SweepResult(axis=axis, results=tuple(results))
