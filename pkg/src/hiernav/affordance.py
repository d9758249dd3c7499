"""Spatial-affordance dataset pipeline.

Takes detection/segmentation annotations (a COCO-style subset plus a
free-space sidecar), derives six-way directional relations between
instances, resolves relational target phrases, generates object- and
spatial-affordance question/answer samples with 5-8 sampled points, and
scores pointing predictions against ground-truth regions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import (
    AmbiguousMatchError,
    InvariantError,
    NoMatchError,
    ParseError,
    PhraseGrammarError,
)
from .geometry import PixelPoint
from .scene import point_in_polygon, polygon_centroid

RELATIONS = ("up", "down", "left", "right", "front", "back")

OPPOSITE = {
    "up": "down",
    "down": "up",
    "left": "right",
    "right": "left",
    "front": "back",
    "back": "front",
}

# Canonical surface form used when generating queries.
RELATION_QUERY_PHRASE = {
    "left": "to the left of",
    "right": "to the right of",
    "up": "above",
    "down": "below",
    "front": "in front of",
    "back": "behind",
}

# Accepted surface forms when parsing queries, matched longest-first.
_RELATION_SURFACE_FORMS = [
    ("on the left side of", "left"),
    ("on the right side of", "right"),
    ("to the left of", "left"),
    ("to the right of", "right"),
    ("left of", "left"),
    ("right of", "right"),
    ("in front of", "front"),
    ("front of", "front"),
    ("on top of", "up"),
    ("above", "up"),
    ("over", "up"),
    ("below", "down"),
    ("under", "down"),
    ("beneath", "down"),
    ("behind", "back"),
]

Box = tuple[float, float, float, float]  # x1, y1, x2, y2
Polygon = tuple[tuple[float, float], ...]


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Instance:
    """One annotated object instance in a frame."""

    id: str
    category: str
    box: Box
    mask: Polygon | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "box", tuple(float(v) for v in self.box))
        if self.mask is not None:
            object.__setattr__(
                self, "mask", tuple((float(x), float(y)) for x, y in self.mask)
            )

    @property
    def center(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.box
        return ((x1 + x2) / 2.0, (y1 + y2) / 2.0)

    @property
    def size(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.box
        return (x2 - x1, y2 - y1)


@dataclass(frozen=True)
class AnnotatedFrame:
    """A frame's instances plus author-provided free-space polygons."""

    id: str
    width: int
    height: int
    instances: tuple[Instance, ...] = ()
    free_regions: tuple[Polygon, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(
            self,
            "free_regions",
            tuple(tuple((float(x), float(y)) for x, y in poly) for poly in self.free_regions),
        )
        self._validate()

    def _validate(self) -> None:
        seen: set[str] = set()
        for inst in self.instances:
            if inst.id in seen:
                raise InvariantError(f"frame '{self.id}': duplicate instance id '{inst.id}'")
            seen.add(inst.id)
            x1, y1, x2, y2 = inst.box
            if not (x1 < x2 and y1 < y2):
                raise InvariantError(
                    f"frame '{self.id}': instance '{inst.id}' box {inst.box} is degenerate"
                )
            if x1 < 0 or y1 < 0 or x2 > self.width or y2 > self.height:
                raise InvariantError(
                    f"frame '{self.id}': instance '{inst.id}' box leaves the frame"
                )
            if inst.mask is not None:
                tol = 1e-6
                for vx, vy in inst.mask:
                    if not (x1 - tol <= vx <= x2 + tol and y1 - tol <= vy <= y2 + tol):
                        raise InvariantError(
                            f"frame '{self.id}': instance '{inst.id}' mask leaves its box"
                        )
        for idx, poly in enumerate(self.free_regions):
            if len(poly) < 3:
                raise InvariantError(
                    f"frame '{self.id}': free region {idx} needs >= 3 vertices"
                )
            for inst in self.instances:
                if _polygon_box_overlap(poly, inst.box):
                    raise InvariantError(
                        f"frame '{self.id}': free region {idx} overlaps "
                        f"instance '{inst.id}'"
                    )

    def instance_by_id(self, instance_id: str) -> Instance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise KeyError(f"no instance '{instance_id}' in frame '{self.id}'")


@dataclass(frozen=True)
class DirectionalRelation:
    subject: str
    reference: str
    relation: str

    def __post_init__(self) -> None:
        if self.subject == self.reference:
            raise InvariantError("a relation needs two distinct instances")
        if self.relation not in RELATIONS:
            raise InvariantError(f"unknown relation '{self.relation}'")


@dataclass(frozen=True)
class TruthRegion:
    """Ground-truth area an answer point must fall in: a box or a polygon."""

    box: Box | None = None
    polygon: Polygon | None = None

    def __post_init__(self) -> None:
        if (self.box is None) == (self.polygon is None):
            raise InvariantError("truth region is exactly one of box or polygon")
        if self.box is not None:
            object.__setattr__(self, "box", tuple(float(v) for v in self.box))
        if self.polygon is not None:
            object.__setattr__(
                self, "polygon", tuple((float(x), float(y)) for x, y in self.polygon)
            )

    def contains(self, u: float, v: float) -> bool:
        """Strict interior containment; boundary points count as outside."""
        if self.box is not None:
            x1, y1, x2, y2 = self.box
            return x1 < u < x2 and y1 < v < y2
        return point_in_polygon((u, v), self.polygon)

    def to_dict(self) -> dict:
        if self.box is not None:
            return {"type": "box", "box": list(self.box)}
        return {"type": "polygon", "polygon": [[x, y] for x, y in self.polygon]}

    @classmethod
    def from_dict(cls, data: dict) -> "TruthRegion":
        if data["type"] == "box":
            return cls(box=tuple(data["box"]))
        return cls(polygon=tuple((x, y) for x, y in data["polygon"]))


@dataclass(frozen=True)
class AffordanceSample:
    """One question/answer pair: a query, 5-8 points, and its truth region."""

    frame_id: str
    kind: str  # "object" | "spatial"
    query: str
    answer_points: tuple[PixelPoint, ...]
    truth_region: TruthRegion

    def __post_init__(self) -> None:
        if self.kind not in ("object", "spatial"):
            raise InvariantError(f"unknown sample kind '{self.kind}'")
        object.__setattr__(self, "answer_points", tuple(self.answer_points))
        if not (5 <= len(self.answer_points) <= 8):
            raise InvariantError(
                f"sample '{self.query}': needs 5-8 points, got {len(self.answer_points)}"
            )
        for p in self.answer_points:
            if not self.truth_region.contains(p.u, p.v):
                raise InvariantError(
                    f"sample '{self.query}': point ({p.u}, {p.v}) outside truth region"
                )

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_id,
            "kind": self.kind,
            "query": self.query,
            "points": [[p.u, p.v] for p in self.answer_points],
            "truth": self.truth_region.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AffordanceSample":
        return cls(
            frame_id=data["frame"],
            kind=data["kind"],
            query=data["query"],
            answer_points=tuple(PixelPoint(u, v) for u, v in data["points"]),
            truth_region=TruthRegion.from_dict(data["truth"]),
        )


def _polygon_box_overlap(poly: Polygon, box: Box) -> bool:
    """Open-set overlap test: shared boundary does not count."""
    x1, y1, x2, y2 = box
    for vx, vy in poly:
        if x1 < vx < x2 and y1 < vy < y2:
            return True
    corners = ((x1, y1), (x2, y1), (x2, y2), (x1, y2))
    for corner in corners:
        if point_in_polygon(corner, poly):
            return True
    box_edges = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for c, d in box_edges:
            if _segments_properly_cross(a, b, c, d):
                return True
    return False


def _segments_properly_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(c, d, a), orient(c, d, b)
    d3, d4 = orient(a, b, c), orient(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0


# ---------------------------------------------------------------------------
# Relations


def _planar_relation(
    ca: tuple[float, float],
    cb: tuple[float, float],
    scale: float,
    margin: float,
) -> str | None:
    """Dominant-axis relation of a relative to b, or None when ambiguous.

    Image coordinates: u grows rightward, v grows downward, so a smaller v
    means "up".  The dominant gap must exceed margin * scale.
    """
    du = ca[0] - cb[0]
    dv = ca[1] - cb[1]
    if max(abs(du), abs(dv)) <= margin * scale:
        return None
    if abs(du) >= abs(dv):
        return "left" if du < 0 else "right"
    return "up" if dv < 0 else "down"


def compute_relations(
    frame: AnnotatedFrame,
    depths: dict[str, float] | None = None,
    margin: float = 0.5,
    depth_margin: float = 0.3,
) -> list[DirectionalRelation]:
    """Directional relations between every sufficiently separated pair.

    Planar relations (left/right/up/down) follow the dominant center gap
    and are suppressed when the gap does not exceed ``margin`` times the
    smallest box dimension of the pair.  Front/back relations are emitted
    from per-instance depth (meters, smaller = closer) when both depths are
    provided and differ by more than ``depth_margin``; without depth they
    are skipped rather than guessed.
    """
    out: list[DirectionalRelation] = []
    for a in frame.instances:
        for b in frame.instances:
            if a.id == b.id:
                continue
            scale = min(*a.size, *b.size)
            rel = _planar_relation(a.center, b.center, scale, margin)
            if rel is not None:
                out.append(DirectionalRelation(a.id, b.id, rel))
            if depths is not None and a.id in depths and b.id in depths:
                dd = depths[a.id] - depths[b.id]
                if abs(dd) > depth_margin:
                    out.append(
                        DirectionalRelation(a.id, b.id, "front" if dd < 0 else "back")
                    )
    return out


# ---------------------------------------------------------------------------
# Phrase grammar


def _normalize_phrase(phrase: str) -> str:
    text = " ".join(phrase.lower().strip().strip(".?!").split())
    if text.startswith("find "):
        text = text[len("find "):]
    return text


def _split_relation(text: str) -> tuple[str, str, str] | None:
    """Split at the earliest relation surface form: (head, relation, rest)."""
    best: tuple[int, int, str] | None = None  # (position, -length, relation)
    for surface, relation in _RELATION_SURFACE_FORMS:
        needle = f" {surface} "
        pos = text.find(needle)
        if pos >= 0:
            key = (pos, -len(surface), relation)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    pos, neg_len, relation = best
    surface_len = -neg_len
    head = text[:pos].strip()
    rest = text[pos + surface_len + 2:].strip()
    return head, relation, rest


def _strip_article(text: str) -> str:
    if text in ("the", "a", "an"):
        return ""
    for article in ("the ", "a ", "an "):
        if text.startswith(article):
            return text[len(article):]
    return text


def parse_phrase(phrase: str) -> tuple[str, str | None, str | None, bool]:
    """Parse a query into (head_category, relation, reference_category, spatial).

    Grammar: ``the <category> [<relation> the <category>]`` for object
    queries and ``empty space <relation> the <category>`` for spatial ones.
    Raises :class:`PhraseGrammarError` on anything else.
    """
    if not phrase or not phrase.strip():
        raise PhraseGrammarError("empty phrase")
    text = _normalize_phrase(phrase)
    spatial = False
    for prefix in ("the empty space", "empty space"):
        if text == prefix:
            raise PhraseGrammarError("spatial query needs a relation and a reference")
        if text.startswith(prefix + " "):
            spatial = True
            text = "space " + text[len(prefix) + 1:]
            break
    split = _split_relation(text)
    if split is None:
        if spatial:
            raise PhraseGrammarError(f"spatial query '{phrase}' lacks a relation")
        head = _strip_article(text)
        if not head:
            raise PhraseGrammarError(f"query '{phrase}' names no category")
        return head, None, None, False
    head, relation, rest = split
    reference = _strip_article(rest)
    if not reference:
        raise PhraseGrammarError(f"query '{phrase}' lacks a reference category")
    if spatial:
        return "", relation, reference, True
    head = _strip_article(head)
    if not head:
        raise PhraseGrammarError(f"query '{phrase}' names no category")
    return head, relation, reference, False


def resolve_phrase(
    frame: AnnotatedFrame,
    phrase: str,
    depths: dict[str, float] | None = None,
    margin: float = 0.5,
    depth_margin: float = 0.3,
) -> str | int:
    """Resolve a query to the unique instance id (or free-region index).

    Raises :class:`NoMatchError` when nothing qualifies and
    :class:`AmbiguousMatchError` when several candidates do.
    """
    head, relation, reference, spatial = parse_phrase(phrase)

    if spatial:
        refs = [i for i in frame.instances if i.category.lower() == reference]
        if not refs:
            raise NoMatchError(f"no '{reference}' instance to reference in '{phrase}'")
        if relation in ("front", "back"):
            raise NoMatchError("free regions carry no depth; front/back unsupported")
        hits = []
        for idx, poly in enumerate(frame.free_regions):
            center = polygon_centroid(poly)
            xs = [p[0] for p in poly]
            ys = [p[1] for p in poly]
            poly_size = (max(xs) - min(xs), max(ys) - min(ys))
            for ref in refs:
                scale = min(*ref.size, *poly_size)
                if _planar_relation(center, ref.center, scale, margin) == relation:
                    hits.append(idx)
                    break
        if not hits:
            raise NoMatchError(f"no free region satisfies '{phrase}'")
        if len(hits) > 1:
            raise AmbiguousMatchError(f"{len(hits)} free regions satisfy '{phrase}'")
        return hits[0]

    candidates = [i for i in frame.instances if i.category.lower() == head]
    if not candidates:
        raise NoMatchError(f"no '{head}' instance in frame '{frame.id}'")
    if relation is None:
        if len(candidates) > 1:
            raise AmbiguousMatchError(
                f"{len(candidates)} '{head}' instances in frame '{frame.id}'"
            )
        return candidates[0].id

    refs = [i for i in frame.instances if i.category.lower() == reference]
    if not refs:
        raise NoMatchError(f"no '{reference}' instance to reference in '{phrase}'")
    relations = {
        (r.subject, r.reference, r.relation)
        for r in compute_relations(frame, depths, margin, depth_margin)
    }
    hits = [
        c.id
        for c in candidates
        if any((c.id, ref.id, relation) in relations for ref in refs if ref.id != c.id)
    ]
    if not hits:
        raise NoMatchError(f"no '{head}' satisfies '{phrase}'")
    if len(hits) > 1:
        raise AmbiguousMatchError(f"{len(hits)} '{head}' instances satisfy '{phrase}'")
    return hits[0]


# ---------------------------------------------------------------------------
# Sample generation


def _sample_points_in_box(rng: np.random.Generator, box: Box, count: int) -> list[PixelPoint]:
    x1, y1, x2, y2 = box
    return [
        PixelPoint(float(rng.uniform(x1, x2)), float(rng.uniform(y1, y2)))
        for _ in range(count)
    ]


def _sample_points_in_polygon(
    rng: np.random.Generator, poly: Polygon, count: int
) -> list[PixelPoint]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    out: list[PixelPoint] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 100000:
            raise InvariantError("rejection sampling failed; degenerate polygon?")
        u = float(rng.uniform(min(xs), max(xs)))
        v = float(rng.uniform(min(ys), max(ys)))
        if point_in_polygon((u, v), poly):
            out.append(PixelPoint(u, v))
    return out


def generate_samples(
    frame: AnnotatedFrame,
    seed: int,
    depths: dict[str, float] | None = None,
    margin: float = 0.5,
    depth_margin: float = 0.3,
) -> list[AffordanceSample]:
    """Emit every unambiguous affordance sample a frame supports.

    Object samples come from (instance, relation, reference-instance)
    triples, spatial samples from (free region, relation, reference) pairs.
    A sample is kept only when its own query resolves back to its truth
    target, so the queries are unambiguous by construction.  Deterministic
    per seed, including point sampling and output order.
    """
    rng = np.random.default_rng(seed)
    samples: list[AffordanceSample] = []
    seen_queries: set[str] = set()

    relations = compute_relations(frame, depths, margin, depth_margin)
    for rel in relations:
        subject = frame.instance_by_id(rel.subject)
        reference = frame.instance_by_id(rel.reference)
        query = (
            f"the {subject.category} "
            f"{RELATION_QUERY_PHRASE[rel.relation]} the {reference.category}"
        )
        if query in seen_queries:
            continue
        seen_queries.add(query)
        try:
            resolved = resolve_phrase(frame, query, depths, margin, depth_margin)
        except (NoMatchError, AmbiguousMatchError):
            continue
        if resolved != subject.id:
            continue
        count = int(rng.integers(5, 9))
        if subject.mask is not None:
            truth = TruthRegion(polygon=subject.mask)
            points = _sample_points_in_polygon(rng, subject.mask, count)
        else:
            truth = TruthRegion(box=subject.box)
            points = _sample_points_in_box(rng, subject.box, count)
        samples.append(
            AffordanceSample(
                frame_id=frame.id,
                kind="object",
                query=query,
                answer_points=tuple(points),
                truth_region=truth,
            )
        )

    for idx, poly in enumerate(frame.free_regions):
        for relation in ("left", "right", "up", "down"):
            for reference in frame.instances:
                query = (
                    f"empty space {RELATION_QUERY_PHRASE[relation]} "
                    f"the {reference.category}"
                )
                if query in seen_queries:
                    continue
                try:
                    resolved = resolve_phrase(frame, query, depths, margin, depth_margin)
                except (NoMatchError, AmbiguousMatchError):
                    continue
                if resolved != idx:
                    continue
                seen_queries.add(query)
                count = int(rng.integers(5, 9))
                points = _sample_points_in_polygon(rng, poly, count)
                samples.append(
                    AffordanceSample(
                        frame_id=frame.id,
                        kind="spatial",
                        query=query,
                        answer_points=tuple(points),
                        truth_region=TruthRegion(polygon=poly),
                    )
                )

    return samples


def accuracy(predictions: list[PixelPoint], truth_region: TruthRegion) -> float:
    """Fraction of predicted points strictly inside the truth region."""
    if not predictions:
        raise InvariantError("accuracy needs at least one predicted point")
    hits = sum(1 for p in predictions if truth_region.contains(p.u, p.v))
    return hits / len(predictions)


# ---------------------------------------------------------------------------
# File I/O


@lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    text = resources.files("hiernav.schemas").joinpath(name).read_text()
    return json.loads(text)


def _load_validated(path: Path, schema_name: str) -> dict:
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise ParseError(f"{path}: at {exc.json_path}: {exc.message}") from exc
    return data


def load_annotated_frames(
    annotations_path: str | Path,
    free_regions_path: str | Path | None = None,
) -> tuple[list[AnnotatedFrame], dict[str, dict[str, float]]]:
    """Load COCO-style annotations plus the optional free-space sidecar.

    Returns the frames (input order preserved) and per-frame instance
    depths from the sidecar, for front/back relations.
    """
    data = _load_validated(Path(annotations_path), "annotations.schema.json")
    categories = {c["id"]: c["name"] for c in data.get("categories", [])}

    sidecar_regions: dict[str, list] = {}
    sidecar_depths: dict[str, dict[str, float]] = {}
    if free_regions_path is not None:
        sidecar = _load_validated(Path(free_regions_path), "free_regions.schema.json")
        sidecar_regions = sidecar.get("free_regions", {})
        sidecar_depths = {
            frame: {k: float(v) for k, v in depths.items()}
            for frame, depths in sidecar.get("depths", {}).items()
        }

    by_image: dict[str, list[Instance]] = {}
    for ann in data.get("annotations", []):
        frame_id = str(ann["image_id"])
        x, y, w, h = ann["bbox"]
        mask = None
        seg = ann.get("segmentation")
        if seg:
            ring = seg[0]
            mask = tuple((ring[i], ring[i + 1]) for i in range(0, len(ring), 2))
        category = categories.get(ann["category_id"], str(ann["category_id"]))
        by_image.setdefault(frame_id, []).append(
            Instance(
                id=str(ann["id"]),
                category=category,
                box=(x, y, x + w, y + h),
                mask=mask,
            )
        )

    frames = []
    for image in data.get("images", []):
        frame_id = str(image["id"])
        frames.append(
            AnnotatedFrame(
                id=frame_id,
                width=image["width"],
                height=image["height"],
                instances=tuple(by_image.get(frame_id, ())),
                free_regions=tuple(
                    tuple((x, y) for x, y in poly)
                    for poly in sidecar_regions.get(frame_id, [])
                ),
            )
        )
    return frames, sidecar_depths


def write_samples(samples: list[AffordanceSample], path: str | Path) -> None:
    """Write one JSON record per line; re-checks every sample's invariants."""
    lines = []
    for sample in samples:
        for p in sample.answer_points:
            if not sample.truth_region.contains(p.u, p.v):
                raise InvariantError(
                    f"sample '{sample.query}': point outside truth region on export"
                )
        lines.append(json.dumps(sample.to_dict(), sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_samples(path: str | Path) -> list[AffordanceSample]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(AffordanceSample.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, InvariantError) as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out
