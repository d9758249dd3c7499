import math

import pytest

from hiernav.errors import InvariantError, OccupiedPoseError
from hiernav.geometry import AgentPose, CameraIntrinsics, PixelPoint, wrap_angle
from hiernav.perception import (
    NoisyPointer,
    Observation,
    OraclePointer,
    PointingQuery,
    PointingResult,
    centroid,
    match_phrase_to_object,
    panoramic_scan,
    point,
)
from hiernav.scene import Region, Scene, SceneObject

from conftest import make_scene, open_room, rect

K = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)
K_90 = CameraIntrinsics(fx=320.0, fy=320.0, cx=320.0, cy=240.0, width=640, height=480)


def bearing_frame_check(world_point, pose_xy, heading, k, camera_height=0.0):
    """Trig-route visibility check for a single world point."""
    dx = world_point[0] - pose_xy[0]
    dy = world_point[1] - pose_xy[1]
    r = math.hypot(dx, dy)
    bearing = wrap_angle(math.atan2(dy, dx) - heading)
    z = r * math.cos(bearing)
    if z <= 1e-9:
        return False
    u = k.fx * (-r * math.sin(bearing)) / z + k.cx
    v = k.fy * (camera_height - world_point[2]) / z + k.cy
    return k.contains(u, v)


def obj(obj_id, x, y, z=0.4, extent=(0.3, 0.3, 0.3), category="box", attributes=()):
    return SceneObject(
        id=obj_id, category=category, position=(x, y, z), extent=extent,
        attributes=tuple(attributes),
    )


class TestPanoramicScan:
    def test_empty_scene(self):
        scene = open_room(20, cell_size=0.5)
        obs = panoramic_scan(scene, AgentPose(5, 5, 0), K, n_headings=6)
        assert len(obs) == 6
        assert all(o.detections == () for o in obs)
        assert [o.heading_index for o in obs] == list(range(6))

    def test_object_straight_ahead_in_exactly_one_quadrant(self):
        scene = make_scene(["." * 20] * 20, cell_size=0.5,
                           objects=[obj("b1", 7.0, 5.0, z=0.3, extent=(0.2, 0.2, 0.2))])
        pose = AgentPose(5.0, 5.0, 0.0)
        observations = panoramic_scan(scene, pose, K_90, n_headings=4)
        detected = [o.heading_index for o in observations if o.detections]
        assert detected == [0]
        # Brute-force check over all four 90-degree frusta.
        for index in range(4):
            heading = wrap_angle(index * math.pi / 2)
            visible = bearing_frame_check((7.0, 5.0, 0.3), (5.0, 5.0), heading, K_90)
            assert visible == (index in detected)

    def test_object_behind_wall_absent(self):
        rows = ["." * 20] * 20
        rows[10] = "#" * 20
        scene = make_scene(rows, cell_size=0.5, objects=[obj("b1", 5.0, 8.0)])
        observations = panoramic_scan(scene, AgentPose(5.0, 2.0, 0.0), K, n_headings=8)
        assert all(o.detections == () for o in observations)

    def test_range_cap(self):
        scene = make_scene(["." * 60] * 60, cell_size=0.5, objects=[obj("far", 28.0, 15.0)])
        pose = AgentPose(2.0, 15.0, 0.0)
        assert all(
            o.detections == ()
            for o in panoramic_scan(scene, pose, K, n_headings=4, max_range=10.0)
        )
        seen = panoramic_scan(scene, pose, K, n_headings=4, max_range=30.0)
        assert any(o.detections for o in seen)

    def test_detections_invariant_under_object_permutation(self):
        objects = [obj("zeta", 7.0, 5.0), obj("alpha", 5.0, 7.0), obj("mid", 3.0, 5.0)]
        a = make_scene(["." * 20] * 20, cell_size=0.5, objects=objects)
        b = make_scene(["." * 20] * 20, cell_size=0.5, objects=objects[::-1])
        pose = AgentPose(5.0, 5.0, 0.3)
        obs_a = panoramic_scan(a, pose, K, n_headings=6)
        obs_b = panoramic_scan(b, pose, K, n_headings=6)
        assert obs_a == obs_b

    def test_union_over_headings_matches_brute_force(self, rng):
        for trial in range(50):
            n_objects = int(rng.integers(1, 6))
            objects = [
                obj(
                    f"o{i}",
                    float(rng.uniform(1.0, 14.0)),
                    float(rng.uniform(1.0, 14.0)),
                    z=float(rng.uniform(0.1, 0.9)),
                    extent=(0.2, 0.2, 0.2),
                )
                for i in range(n_objects)
            ]
            scene = make_scene(["." * 30] * 30, cell_size=0.5, objects=objects)
            pose = AgentPose(float(rng.uniform(2, 13)), float(rng.uniform(2, 13)),
                             float(rng.uniform(-3, 3)))
            if not scene.grid.is_free_point(pose.position):
                continue
            n_headings = int(rng.integers(4, 13))
            observations = panoramic_scan(scene, pose, K, n_headings=n_headings)
            detected_union = {
                d.object_id for o in observations for d in o.detections
            }
            for o in objects:
                dist = math.hypot(o.position[0] - pose.x, o.position[1] - pose.y)
                expect = False
                if dist <= 10.0:
                    for index in range(n_headings):
                        heading = wrap_angle(pose.theta + index * 2 * math.pi / n_headings)
                        if any(
                            bearing_frame_check(pt, pose.position, heading, K)
                            for pt in [*o.corners(), o.position]
                        ):
                            expect = True
                            break
                assert (o.id in detected_union) == expect, f"trial {trial} object {o.id}"

    def test_occupied_pose_rejected(self):
        rows = ["..", "#."]
        scene = make_scene(rows, cell_size=1.0)
        with pytest.raises(OccupiedPoseError):
            panoramic_scan(scene, AgentPose(0.5, 1.5, 0.0), K, n_headings=4)

    def test_bad_heading_count(self):
        with pytest.raises(InvariantError):
            panoramic_scan(open_room(4), AgentPose(2, 2, 0), K, n_headings=0)


class TestCentroid:
    def test_mean(self):
        c = centroid([PixelPoint(10, 10, 1.0), PixelPoint(20, 20, 3.0)])
        assert (c.u, c.v, c.d) == (15.0, 15.0, 2.0)

    def test_single_point_identity(self):
        c = centroid([PixelPoint(33.5, 7.25, 4.0)])
        assert (c.u, c.v, c.d) == (33.5, 7.25, 4.0)

    def test_permutation_invariant(self, rng):
        points = [
            PixelPoint(float(rng.uniform(0, 640)), float(rng.uniform(0, 480)),
                       float(rng.uniform(0.5, 9)))
            for _ in range(7)
        ]
        shuffled = list(points)
        rng.shuffle(shuffled)
        assert centroid(points) == centroid(shuffled)

    def test_empty_rejected(self):
        with pytest.raises(InvariantError):
            centroid([])


def _scan_scene():
    objects = [
        obj("machine", 7.0, 5.0, category="coffee machine"),
        obj("mug_red", 5.0, 7.0, category="mug", attributes=("red",)),
        obj("mug_blue", 3.0, 5.0, category="mug", attributes=("blue",)),
        obj("hidden", 5.0, 1.0, category="plant"),
    ]
    rows = ["." * 20] * 20
    rows[4] = "." * 8 + "#####" + "." * 7  # wall between (5, 5) and "hidden"
    return make_scene(rows, cell_size=0.5, objects=objects)


class TestOraclePointer:
    def _setup(self):
        scene = _scan_scene()
        pose = AgentPose(5.0, 5.0, 0.0)
        observations = panoramic_scan(scene, pose, K, n_headings=12)
        return scene, observations

    def _query_all(self, backend, observations, phrase):
        for o in observations:
            result = point(backend, PointingQuery(phrase, o))
            if result.found:
                return result, o
        return PointingResult(found=False), None

    def test_visible_target_found_with_projected_points(self):
        scene, observations = self._setup()
        backend = OraclePointer(scene)
        result, o = self._query_all(backend, observations, "coffee machine")
        assert result.found
        detection = next(d for d in o.detections if d.object_id == "machine")
        assert result.points == detection.points

    def test_occluded_target_not_found(self):
        scene, observations = self._setup()
        backend = OraclePointer(scene)
        result, _ = self._query_all(backend, observations, "plant")
        assert not result.found
        assert result.points == ()

    def test_attribute_disambiguation(self):
        scene, observations = self._setup()
        backend = OraclePointer(scene)
        result, o = self._query_all(backend, observations, "the red mug")
        assert result.found
        assert any(d.object_id == "mug_red" for d in o.detections)
        detection = next(d for d in o.detections if d.object_id == "mug_red")
        assert result.points == detection.points

    def test_bare_category_resolves_per_frame(self):
        # Resolution is frame-local: a heading that sees exactly one mug
        # points at it; a heading that sees both refuses to guess.
        scene, observations = self._setup()
        backend = OraclePointer(scene)
        pointed_at = set()
        for o in observations:
            result = point(backend, PointingQuery("mug", o))
            mugs_in_frame = {
                d.object_id for d in o.detections if d.object_id.startswith("mug")
            }
            if len(mugs_in_frame) == 1:
                assert result.found
                pointed_at.update(mugs_in_frame)
            elif len(mugs_in_frame) > 1:
                assert not result.found
        assert pointed_at == {"mug_red", "mug_blue"}


class TestMatchPhrase:
    def test_category_and_attribute(self):
        objects = [
            obj("m1", 1, 1, category="mug", attributes=("red",)),
            obj("m2", 2, 2, category="mug", attributes=("blue", "by the window")),
        ]
        assert match_phrase_to_object(objects, "the red mug") == "m1"
        assert match_phrase_to_object(objects, "mug by the window") == "m2"
        assert match_phrase_to_object(objects, "mug") is None
        assert match_phrase_to_object(objects, "teapot") is None

    def test_longest_category_wins(self):
        objects = [
            obj("c1", 1, 1, category="cup"),
            obj("c2", 2, 2, category="coffee cup"),
        ]
        assert match_phrase_to_object(objects, "the coffee cup") == "c2"


class TestNoisyPointer:
    def _queries(self, count=100):
        scene = _scan_scene()
        out = []
        rng_poses = [(4.0 + 0.1 * i, 5.0 + 0.07 * i, 0.1 * i) for i in range(count // 12 + 1)]
        for x, y, t in rng_poses:
            for o in panoramic_scan(scene, AgentPose(x, y, t), K, n_headings=12):
                out.append(PointingQuery("coffee machine", o))
        return scene, out[:count]

    def test_degenerate_noise_equals_oracle(self):
        scene, queries = self._queries(100)
        oracle = OraclePointer(scene)
        noisy = NoisyPointer(oracle, sigma=0.0, p_fp=0.0, p_fn=0.0, seed=42)
        for q in queries:
            assert noisy.point(q) == oracle.point(q)

    def test_reproducible_and_order_independent(self):
        scene, queries = self._queries(40)
        oracle = OraclePointer(scene)
        a = NoisyPointer(oracle, sigma=2.0, p_fp=0.1, p_fn=0.1, seed=7)
        b = NoisyPointer(oracle, sigma=2.0, p_fp=0.1, p_fn=0.1, seed=7)
        forward = [a.point(q) for q in queries]
        backward = [b.point(q) for q in reversed(queries)][::-1]
        assert forward == backward

    def test_false_negative_rate_one_hides_everything(self):
        scene, queries = self._queries(30)
        noisy = NoisyPointer(OraclePointer(scene), p_fn=1.0, seed=1)
        assert all(not noisy.point(q).found for q in queries)

    def test_false_positive_fabricates_in_frame_points(self):
        scene, queries = self._queries(60)
        noisy = NoisyPointer(OraclePointer(scene), p_fp=1.0, seed=3)
        oracle = OraclePointer(scene)
        fabricated = [q for q in queries if not oracle.point(q).found]
        assert fabricated
        for q in fabricated:
            result = noisy.point(q)
            assert result.found
            for p in result.points:
                assert q.observation.intrinsics.contains(p.u, p.v)
                assert p.d is not None and p.d > 0

    def test_jitter_keeps_points_in_frame(self):
        scene, queries = self._queries(60)
        noisy = NoisyPointer(OraclePointer(scene), sigma=50.0, seed=9)
        for q in queries:
            result = noisy.point(q)
            for p in result.points:
                assert q.observation.intrinsics.contains(p.u, p.v)
