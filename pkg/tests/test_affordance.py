import json

import numpy as np
import pytest

from hiernav.affordance import (
    AffordanceSample,
    AnnotatedFrame,
    DirectionalRelation,
    Instance,
    TruthRegion,
    accuracy,
    compute_relations,
    generate_samples,
    load_annotated_frames,
    parse_phrase,
    read_samples,
    resolve_phrase,
    write_samples,
)
from hiernav.errors import (
    AmbiguousMatchError,
    InvariantError,
    NoMatchError,
    ParseError,
    PhraseGrammarError,
)
from hiernav.geometry import PixelPoint


def box_at(cx, cy, w=40.0, h=40.0):
    return (cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def frame_with(instances, free_regions=(), width=640, height=480, frame_id="f0"):
    return AnnotatedFrame(
        id=frame_id, width=width, height=height,
        instances=tuple(instances), free_regions=tuple(free_regions),
    )


def brute_force_relations(frame, depths=None, margin=0.5, depth_margin=0.3):
    """Independent comparator implementing the dominant-axis margin rule."""
    out = set()
    for a in frame.instances:
        for b in frame.instances:
            if a is b:
                continue
            acx = (a.box[0] + a.box[2]) / 2
            acy = (a.box[1] + a.box[3]) / 2
            bcx = (b.box[0] + b.box[2]) / 2
            bcy = (b.box[1] + b.box[3]) / 2
            dims = [
                a.box[2] - a.box[0], a.box[3] - a.box[1],
                b.box[2] - b.box[0], b.box[3] - b.box[1],
            ]
            threshold = margin * min(dims)
            du, dv = acx - bcx, acy - bcy
            if max(abs(du), abs(dv)) > threshold:
                if abs(du) >= abs(dv):
                    out.add((a.id, b.id, "left" if du < 0 else "right"))
                else:
                    out.add((a.id, b.id, "up" if dv < 0 else "down"))
            if depths and a.id in depths and b.id in depths:
                dd = depths[a.id] - depths[b.id]
                if abs(dd) > depth_margin:
                    out.add((a.id, b.id, "front" if dd < 0 else "back"))
    return out


class TestComputeRelations:
    def test_clear_horizontal_pair(self):
        frame = frame_with([
            Instance("a", "tv", box_at(100, 100)),
            Instance("b", "sofa", box_at(300, 100)),
        ])
        rels = {(r.subject, r.reference, r.relation) for r in compute_relations(frame)}
        assert ("a", "b", "left") in rels
        assert ("b", "a", "right") in rels

    def test_concentric_boxes_emit_nothing(self):
        frame = frame_with([
            Instance("a", "tv", box_at(100, 100, 80, 80)),
            Instance("b", "shelf", box_at(100, 100, 40, 40)),
        ])
        assert compute_relations(frame) == []

    def test_depth_gives_front_back(self):
        frame = frame_with([
            Instance("a", "tv", box_at(100, 100)),
            Instance("b", "sofa", box_at(102, 100)),
        ])
        rels = {
            (r.subject, r.reference, r.relation)
            for r in compute_relations(frame, depths={"a": 1.0, "b": 3.0})
        }
        assert ("a", "b", "front") in rels and ("b", "a", "back") in rels
        # No planar relation: the centers nearly coincide.
        assert not any(r in rels for r in [("a", "b", "left"), ("a", "b", "right")])

    def test_no_depth_skips_front_back(self):
        frame = frame_with([
            Instance("a", "tv", box_at(100, 100)),
            Instance("b", "sofa", box_at(102, 100)),
        ])
        assert compute_relations(frame) == []

    def test_matches_brute_force_comparator(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            instances = []
            for i in range(n):
                w = float(rng.uniform(20, 120))
                h = float(rng.uniform(20, 120))
                cx = float(rng.uniform(80, 560))
                cy = float(rng.uniform(80, 400))
                instances.append(Instance(f"i{i}", f"cat{i}", box_at(cx, cy, w, h)))
            depths = {f"i{i}": float(rng.uniform(0.5, 5.0)) for i in range(n)}
            frame = frame_with(instances)
            got = {
                (r.subject, r.reference, r.relation)
                for r in compute_relations(frame, depths)
            }
            assert got == brute_force_relations(frame, depths)

    def test_antisymmetry(self, rng):
        opposite = {"left": "right", "right": "left", "up": "down",
                    "down": "up", "front": "back", "back": "front"}
        for _ in range(30):
            instances = [
                Instance(
                    f"i{i}", f"c{i}",
                    box_at(float(rng.uniform(60, 580)), float(rng.uniform(60, 420)),
                           float(rng.uniform(20, 100)), float(rng.uniform(20, 100))),
                )
                for i in range(4)
            ]
            depths = {f"i{i}": float(rng.uniform(0.5, 6.0)) for i in range(4)}
            rels = {
                (r.subject, r.reference, r.relation)
                for r in compute_relations(frame_with(instances), depths)
            }
            for subject, reference, relation in rels:
                assert (reference, subject, opposite[relation]) in rels


class TestResolvePhrase:
    def _tv_sofa_frame(self):
        return frame_with([
            Instance("tv1", "tv", box_at(100, 100)),
            Instance("sofa1", "sofa", box_at(102, 100)),
            Instance("cup1", "cup", box_at(400, 100, 30, 30)),
        ])

    def test_front_relation_with_depth(self):
        frame = self._tv_sofa_frame()
        depths = {"tv1": 1.0, "sofa1": 3.0, "cup1": 2.0}
        assert resolve_phrase(frame, "the tv in front of the sofa", depths) == "tv1"

    def test_bare_category(self):
        assert resolve_phrase(self._tv_sofa_frame(), "the cup") == "cup1"
        assert resolve_phrase(self._tv_sofa_frame(), "cup") == "cup1"

    def test_ambiguous_match(self):
        frame = frame_with([
            Instance("cup1", "cup", box_at(100, 100, 30, 30)),
            Instance("cup2", "cup", box_at(200, 100, 30, 30)),
            Instance("table1", "table", box_at(400, 100, 80, 80)),
        ])
        with pytest.raises(AmbiguousMatchError):
            resolve_phrase(frame, "the cup to the left of the table")

    def test_no_match(self):
        with pytest.raises(NoMatchError):
            resolve_phrase(self._tv_sofa_frame(), "the plant")

    def test_spatial_free_region(self):
        free = ((200, 80), (280, 80), (280, 160), (200, 160))
        frame = frame_with(
            [Instance("table1", "table", box_at(400, 120, 80, 80))],
            free_regions=[free],
        )
        idx = resolve_phrase(frame, "empty space on the left side of the table")
        assert idx == 0

    def test_grammar_rejects_junk(self):
        with pytest.raises(PhraseGrammarError):
            parse_phrase("")
        with pytest.raises(PhraseGrammarError):
            parse_phrase("empty space")
        with pytest.raises(PhraseGrammarError):
            parse_phrase("the")

    def test_grammar_shapes(self):
        assert parse_phrase("Find the red mug") == ("red mug", None, None, False)
        assert parse_phrase("the tv in front of the sofa") == ("tv", "front", "sofa", False)
        assert parse_phrase("empty space behind the chair") == ("", "back", "chair", True)
        assert parse_phrase("the box on top of the shelf") == ("box", "up", "shelf", False)


class TestGenerateSamples:
    def _rich_frame(self):
        return frame_with(
            [
                Instance("tv1", "tv", box_at(120, 120, 60, 40)),
                Instance("sofa1", "sofa", box_at(420, 130, 120, 70)),
                Instance("lamp1", "lamp", box_at(120, 350, 30, 60)),
            ],
            free_regions=[((500, 300), (620, 300), (620, 460), (500, 460))],
        )

    def test_trivial_frames_yield_nothing(self):
        assert generate_samples(frame_with([]), seed=1) == []
        assert generate_samples(
            frame_with([Instance("a", "tv", box_at(100, 100))]), seed=1
        ) == []

    def test_queries_resolve_to_truth(self, rng):
        total = 0
        frames = 0
        seed = 0
        while total < 1000:
            frames += 1
            n = int(rng.integers(2, 6))
            instances = []
            for i in range(n):
                instances.append(
                    Instance(
                        f"i{i}", f"cat{int(rng.integers(0, 4))}",
                        box_at(float(rng.uniform(80, 560)), float(rng.uniform(80, 400)),
                               float(rng.uniform(20, 90)), float(rng.uniform(20, 90))),
                    )
                )
            frame = frame_with(instances, frame_id=f"f{frames}")
            depths = {f"i{i}": float(rng.uniform(0.5, 6.0)) for i in range(n)}
            for sample in generate_samples(frame, seed=seed, depths=depths):
                resolved = resolve_phrase(frame, sample.query, depths)
                truth = sample.truth_region
                inst = frame.instance_by_id(resolved)
                assert TruthRegion(box=inst.box) == truth
                total += 1
            seed += 1
        assert total >= 1000

    def test_point_counts_and_containment(self, rng):
        total = 0
        seed = 100
        while total < 10000:
            frame = self._rich_frame()
            samples = generate_samples(frame, seed=seed)
            for sample in samples:
                assert 5 <= len(sample.answer_points) <= 8
                for p in sample.answer_points:
                    assert sample.truth_region.contains(p.u, p.v)
                total += len(sample.answer_points)
            seed += 1
        assert total >= 10000

    def test_deterministic_and_stable_order(self):
        frame = self._rich_frame()
        a = generate_samples(frame, seed=7)
        b = generate_samples(frame, seed=7)
        assert [s.to_dict() for s in a] == [s.to_dict() for s in b]
        c = generate_samples(frame, seed=8)
        assert [s.query for s in a] == [s.query for s in c]  # order is seed-free

    def test_spatial_samples_emitted(self):
        samples = generate_samples(self._rich_frame(), seed=3)
        kinds = {s.kind for s in samples}
        assert kinds == {"object", "spatial"}


class TestAccuracy:
    def test_three_of_four(self):
        truth = TruthRegion(box=(0, 0, 10, 10))
        points = [PixelPoint(5, 5), PixelPoint(1, 1), PixelPoint(9, 9), PixelPoint(15, 5)]
        assert accuracy(points, truth) == 0.75

    def test_centroid_of_convex_mask(self):
        truth = TruthRegion(polygon=((0, 0), (10, 0), (10, 10), (0, 10)))
        assert accuracy([PixelPoint(5, 5)] * 4, truth) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(InvariantError):
            accuracy([], TruthRegion(box=(0, 0, 1, 1)))

    def test_matches_recount_oracle(self, rng):
        for _ in range(200):
            if rng.random() < 0.5:
                x1, y1 = rng.uniform(0, 300, size=2)
                truth = TruthRegion(box=(x1, y1, x1 + rng.uniform(10, 200), y1 + rng.uniform(10, 200)))
            else:
                cx, cy = rng.uniform(100, 400, size=2)
                angles = np.sort(rng.uniform(0, 2 * np.pi, size=int(rng.integers(3, 9))))
                radii = rng.uniform(10, 120, size=len(angles))
                truth = TruthRegion(
                    polygon=tuple(
                        (cx + r * np.cos(a), cy + r * np.sin(a))
                        for r, a in zip(radii, angles)
                    )
                )
            points = [
                PixelPoint(float(rng.uniform(0, 500)), float(rng.uniform(0, 500)))
                for _ in range(int(rng.integers(1, 51)))
            ]
            expected = sum(truth.contains(p.u, p.v) for p in points) / len(points)
            assert accuracy(points, truth) == expected

    def test_permutation_invariant_and_monotone(self, rng):
        truth = TruthRegion(box=(0, 0, 50, 50))
        points = [
            PixelPoint(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)))
            for _ in range(20)
        ]
        shuffled = list(points)
        rng.shuffle(shuffled)
        assert accuracy(points, truth) == accuracy(shuffled, truth)
        before = accuracy(points, truth)
        after = accuracy(points + [PixelPoint(25, 25)], truth)
        assert after >= min(before, after)  # adding an in-mask point never hurts the count
        assert sum(truth.contains(p.u, p.v) for p in points) + 1 == sum(
            truth.contains(p.u, p.v) for p in points + [PixelPoint(25, 25)]
        )


class TestFrameInvariants:
    def test_degenerate_box_rejected(self):
        with pytest.raises(InvariantError, match="degenerate"):
            frame_with([Instance("a", "tv", (10, 10, 10, 40))])

    def test_box_outside_frame_rejected(self):
        with pytest.raises(InvariantError, match="leaves the frame"):
            frame_with([Instance("a", "tv", (600, 10, 700, 40))])

    def test_free_region_overlapping_instance_rejected(self):
        with pytest.raises(InvariantError, match="overlaps"):
            frame_with(
                [Instance("a", "tv", (100, 100, 200, 200))],
                free_regions=[((150, 150), (250, 150), (250, 250), (150, 250))],
            )

    def test_mask_outside_box_rejected(self):
        with pytest.raises(InvariantError, match="mask"):
            frame_with([
                Instance("a", "tv", (100, 100, 200, 200),
                         mask=((100, 100), (300, 100), (150, 150))),
            ])


class TestIO:
    def _write_inputs(self, tmp_path):
        annotations = {
            "images": [{"id": 1, "width": 640, "height": 480}],
            "annotations": [
                {"id": 10, "image_id": 1, "category_id": 1, "bbox": [80, 90, 60, 50]},
                {"id": 11, "image_id": 1, "category_id": 2, "bbox": [360, 95, 120, 80],
                 "segmentation": [[360, 95, 480, 95, 480, 175, 360, 175]]},
            ],
            "categories": [{"id": 1, "name": "tv"}, {"id": 2, "name": "sofa"}],
        }
        sidecar = {
            "version": 1,
            "free_regions": {"1": [[[80, 300], [200, 300], [200, 420], [80, 420]]]},
            "depths": {"1": {"10": 1.2, "11": 3.4}},
        }
        ann_path = tmp_path / "annotations.json"
        side_path = tmp_path / "free_regions.json"
        ann_path.write_text(json.dumps(annotations))
        side_path.write_text(json.dumps(sidecar))
        return ann_path, side_path

    def test_load_and_generate(self, tmp_path):
        ann_path, side_path = self._write_inputs(tmp_path)
        frames, depths = load_annotated_frames(ann_path, side_path)
        assert len(frames) == 1
        frame = frames[0]
        assert {i.category for i in frame.instances} == {"tv", "sofa"}
        assert frame.instance_by_id("11").mask is not None
        samples = generate_samples(frame, seed=5, depths=depths["1"])
        assert samples
        assert any(s.kind == "spatial" for s in samples)

    def test_schema_violation_reported(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"images": [{"id": 1}], "annotations": []}))
        with pytest.raises(ParseError, match="width"):
            load_annotated_frames(path)

    def test_samples_roundtrip(self, tmp_path):
        frame = frame_with(
            [
                Instance("tv1", "tv", box_at(120, 120, 60, 40)),
                Instance("sofa1", "sofa", box_at(420, 130, 120, 70)),
            ],
        )
        samples = generate_samples(frame, seed=9)
        out = tmp_path / "samples.jsonl"
        write_samples(samples, out)
        loaded = read_samples(out)
        assert [s.to_dict() for s in loaded] == [s.to_dict() for s in samples]
