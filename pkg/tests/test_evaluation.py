import dataclasses
import json
from pathlib import Path

import pytest

from hiernav.errors import InvariantError, ParseError
from hiernav.evaluation import (
    BackendSelection,
    EpisodeConfig,
    RolloutRow,
    SuiteResult,
    Task,
    load_suite,
    rollout_seed,
    run_episode,
    run_suite,
    sweep,
)
from hiernav.geometry import AgentPose
from hiernav.perception import OraclePointer
from hiernav.policy_global import Instruction, OracleEntry, OracleReasoner, OracleTable
from hiernav.policy_local import EpisodeTrace
from hiernav.scene import Region, SceneObject

from conftest import make_scene, rect

BENCH = Path(__file__).resolve().parents[1] / "bench"


@pytest.fixture(scope="module")
def office_suite():
    return load_suite(BENCH / "office.suite.json")


def mini_scene():
    rows = ["." * 30 for _ in range(10)]
    regions = [
        Region("r1", rect(0.2, 0.2, 4.0, 9.8), annotation="hall"),
        Region("r2", rect(4.0, 0.2, 29.8, 9.8), annotation="tea room"),
    ]
    target = SceneObject(
        id="coffee_machine", category="coffee machine",
        position=(10.0, 5.0, 0.5), extent=(0.4, 0.4, 0.5),
    )
    return make_scene(rows, regions=regions, objects=[target], scene_id="mini")


MINI_TABLE = OracleTable(entries=(OracleEntry("coffee", "coffee machine", "tea"),))


def mini_task(radius=1.0):
    return Task(
        id="mini_t01",
        scene_id="mini",
        instruction=Instruction("I want a cup of coffee"),
        target_object_id="coffee_machine",
        start_poses=(AgentPose(5.0, 5.0, 0.0),),
        success_radius=radius,
    )


class TestRunEpisode:
    def test_success_in_first_choice_region(self):
        scene = mini_scene()
        result = run_episode(
            mini_task(), scene,
            OracleReasoner(MINI_TABLE), OraclePointer(scene),
            EpisodeConfig(), seed=11,
        )
        assert result.success
        assert result.ne <= 1.0
        assert result.error_tag is None
        tags = [e["tag"] for e in result.trace.events]
        assert tags[0] == "global_decision"
        assert "goal" in tags and tags[-1] == "terminate"

    def test_unknown_instruction_tagged_failure(self):
        scene = mini_scene()
        task = dataclasses.replace(
            mini_task(), instruction=Instruction("collate the stapler audit")
        )
        result = run_episode(
            task, scene, OracleReasoner(MINI_TABLE), OraclePointer(scene),
            EpisodeConfig(), seed=3,
        )
        assert not result.success
        assert result.error_tag == "UnknownInstructionError"

    def test_ne_is_planar_distance_from_failure_pose(self):
        # Failure at the start pose (0.5, 0.5); target 3 m / 4 m away.
        rows = ["." * 10 for _ in range(10)]
        target = SceneObject(id="t", category="beacon",
                             position=(3.5, 4.5, 0.2), extent=(0.1, 0.1, 0.1))
        scene = make_scene(rows, regions=[Region("r1", rect(0, 0, 10, 10))],
                           objects=[target], scene_id="ne")
        task = Task(
            id="ne_t", scene_id="ne", instruction=Instruction("unknown chore"),
            target_object_id="t", start_poses=(AgentPose(0.5, 0.5, 0.0),),
        )
        result = run_episode(
            task, scene, OracleReasoner(MINI_TABLE), OraclePointer(scene),
            EpisodeConfig(), seed=0,
        )
        assert result.ne == pytest.approx(5.0)
        assert result.error_tag == "UnknownInstructionError"

    def test_deterministic_per_seed(self):
        scene = mini_scene()
        a = run_episode(mini_task(), scene, OracleReasoner(MINI_TABLE),
                        OraclePointer(scene), EpisodeConfig(), seed=9)
        b = run_episode(mini_task(), scene, OracleReasoner(MINI_TABLE),
                        OraclePointer(scene), EpisodeConfig(), seed=9)
        assert a.ne == b.ne and a.steps == b.steps
        assert a.trace.poses == b.trace.poses

    def test_budget_exhaustion_is_failure_not_error(self):
        scene = mini_scene()
        result = run_episode(
            mini_task(), scene, OracleReasoner(MINI_TABLE), OraclePointer(scene),
            EpisodeConfig(step_budget=3), seed=5,
        )
        assert not result.success
        assert result.error_tag is None
        assert result.steps <= 3
        assert result.trace.events[-1]["reason"] == "exhausted"


class TestSuiteAggregates:
    def test_avg_sr_is_mean_of_scene_srs(self):
        rows = []
        per_scene_successes = {"s1": 6, "s2": 7, "s3": 6, "s4": 7, "s5": 7}
        for scene, wins in per_scene_successes.items():
            for k in range(10):
                rows.append(
                    RolloutRow(
                        task_id=f"{scene}_t", scene_id=scene, rollout=k, seed=k,
                        ne=0.5 if k < wins else 4.0, success=k < wins, steps=10,
                    )
                )
        result = SuiteResult.aggregate("synthetic", rows)
        assert result.avg_sr == pytest.approx(0.66)
        assert sum(r.success for r in result.rows) == 33

    def test_aggregates_recompute_exactly_from_rows(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=4)
        result = run_suite(office_suite, BackendSelection(), config)
        ne, sr = SuiteResult.recompute_aggregates(result.rows)
        assert ne == result.scene_ne
        assert sr == result.scene_sr
        assert result.avg_sr == pytest.approx(sum(sr.values()) / len(sr))

    def test_identical_master_seed_identical_result(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=7)
        a = run_suite(office_suite, BackendSelection(), config)
        b = run_suite(office_suite, BackendSelection(), config)
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(
            b.to_dict(), sort_keys=True
        )

    def test_shrinking_radius_never_raises_sr(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=2)
        wide = run_suite(office_suite, BackendSelection(), config)
        narrow_suite = dataclasses.replace(
            office_suite,
            tasks=tuple(
                dataclasses.replace(t, success_radius=0.25) for t in office_suite.tasks
            ),
        )
        narrow = run_suite(narrow_suite, BackendSelection(), config)
        for scene in wide.scene_sr:
            assert narrow.scene_sr[scene] <= wide.scene_sr[scene]

    def test_ne_invariant_under_trace_replay(self, office_suite, tmp_path):
        config = EpisodeConfig(rollouts=1, master_seed=3)
        result = run_suite(office_suite, BackendSelection(), config, output_dir=tmp_path)
        assert all(r.trace_path for r in result.rows)
        for row in result.rows[:20]:
            replayed = EpisodeTrace.from_jsonl(tmp_path / row.trace_path)
            assert replayed.navigation_error() == pytest.approx(row.ne, abs=1e-12)

    def test_rollout_seed_derivation(self):
        assert rollout_seed(1, "t", 0) != rollout_seed(1, "t", 1)
        assert rollout_seed(1, "t", 0) != rollout_seed(2, "t", 0)
        assert rollout_seed(5, "a", 3) == rollout_seed(5, "a", 3)


class TestSweep:
    def test_single_value_equals_run_suite(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=1)
        single = sweep(office_suite, "annotation_mode", ["full"], BackendSelection(), config)
        direct = run_suite(office_suite, BackendSelection(), config)
        assert len(single.results) == 1
        value, result = single.results[0]
        assert value == "full"
        assert result.to_dict() == direct.to_dict()

    def test_annotation_mode_rows(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=1)
        table = sweep(
            office_suite, "annotation_mode",
            ["full", "no_room_level", "none", "no_map"],
            BackendSelection(), config,
        )
        assert [v for v, _ in table.results] == ["full", "no_room_level", "none", "no_map"]
        text = table.to_text()
        for mode in ("full", "no_room_level", "none", "no_map"):
            assert mode in text

    def test_continue_threshold_axis(self, office_suite):
        config = EpisodeConfig(rollouts=1, master_seed=1)
        table = sweep(office_suite, "continue_threshold_K", [1, 3], BackendSelection(), config)
        assert len(table.results) == 2

    def test_unknown_axis_rejected(self, office_suite):
        with pytest.raises(InvariantError):
            sweep(office_suite, "lens_distortion", [1], BackendSelection(), EpisodeConfig())


class TestLoadSuite:
    def test_bench_counts(self, office_suite):
        assert len(office_suite.scenes) == 5
        assert len(office_suite.tasks) == 50
        per_scene = {}
        for task in office_suite.tasks:
            per_scene[task.scene_id] = per_scene.get(task.scene_id, 0) + 1
        assert set(per_scene.values()) == {10}
        assert office_suite.default_rollouts == 10

    def test_scene_names_match_bench_set(self, office_suite):
        assert set(office_suite.scenes) == {
            "meeting_a", "meeting_b", "tea_room", "workstation", "balcony"
        }

    def test_phrase_uniqueness_validated(self, tmp_path):
        scene = mini_scene()
        from hiernav.scene import save_scene

        save_scene(scene, tmp_path / "mini.json")
        (tmp_path / "table.json").write_text(json.dumps({
            "version": 1,
            "entries": [{"instruction_pattern": "coffee",
                         "object_phrase": "samovar", "region_keyword": "tea"}],
        }))
        suite = {
            "version": 1, "name": "bad", "scenes": {"mini": "mini.json"},
            "oracle_table": "table.json",
            "tasks": [{
                "id": "t", "scene": "mini", "instruction": "I want a cup of coffee",
                "target_object_id": "coffee_machine",
                "start_poses": [[5.0, 5.0, 0.0]],
            }],
        }
        (tmp_path / "bad.suite.json").write_text(json.dumps(suite))
        with pytest.raises(InvariantError, match="uniquely"):
            load_suite(tmp_path / "bad.suite.json")

    def test_start_pose_on_wall_rejected(self, tmp_path):
        scene = mini_scene()
        from hiernav.scene import save_scene

        save_scene(scene, tmp_path / "mini.json")
        suite = {
            "version": 1, "name": "bad", "scenes": {"mini": "mini.json"},
            "tasks": [{
                "id": "t", "scene": "mini", "instruction": "x",
                "target_object_id": "coffee_machine",
                "start_poses": [[55.0, 5.0, 0.0]],
            }],
        }
        (tmp_path / "bad.suite.json").write_text(json.dumps(suite))
        with pytest.raises(InvariantError, match="free cell"):
            load_suite(tmp_path / "bad.suite.json")

    def test_schema_violation(self, tmp_path):
        (tmp_path / "bad.suite.json").write_text(json.dumps({"version": 1}))
        with pytest.raises(ParseError):
            load_suite(tmp_path / "bad.suite.json")


class TestBackendSelection:
    def test_remote_requires_endpoint(self):
        with pytest.raises(InvariantError):
            BackendSelection(reasoning="remote")
        with pytest.raises(InvariantError):
            BackendSelection(pointing="remote")

    def test_unknown_kind(self):
        with pytest.raises(InvariantError):
            BackendSelection(reasoning="psychic")
