"""Scene data model, file ingestion, occupancy queries, and top-down views.

A scene is a set of annotated 2D regions, a set of 3D objects, and a
uniform occupancy grid used for both travel and line of sight.  Scenes are
authored as structured JSON files (see ``schemas/scene.schema.json``) and
are immutable after load, so they can be shared freely across
concurrently running episodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import (
    InvariantError,
    NoFreeSpaceError,
    OutOfBoundsError,
    ParseError,
)

ANNOTATION_MODES = ("full", "no_room_level", "none", "no_map")

# Tolerance for "this coordinate sits exactly on a gridline", in cell units.
_GRID_EPS = 1e-9

Point2 = tuple[float, float]
Cell = tuple[int, int]  # (row, col)


# ---------------------------------------------------------------------------
# Polygon helpers


def polygon_area(polygon: tuple[Point2, ...]) -> float:
    """Unsigned shoelace area."""
    acc = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def point_in_polygon(point: Point2, polygon: tuple[Point2, ...]) -> bool:
    """Even-odd crossing test; points on edges count half-open."""
    x, y = point
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def polygon_centroid(polygon: tuple[Point2, ...]) -> Point2:
    """Area centroid; falls back to vertex mean for degenerate rings."""
    acc_a = acc_x = acc_y = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        acc_a += cross
        acc_x += (x1 + x2) * cross
        acc_y += (y1 + y2) * cross
    if abs(acc_a) < 1e-12:
        return (
            sum(p[0] for p in polygon) / n,
            sum(p[1] for p in polygon) / n,
        )
    return (acc_x / (3.0 * acc_a), acc_y / (3.0 * acc_a))


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point2, b: Point2, c: Point2) -> bool:
    return (
        min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    )


def segments_intersect(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool:
    """True iff closed segments p1-p2 and p3-p4 share any point."""
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def _polygon_is_simple(polygon: tuple[Point2, ...]) -> bool:
    n = len(polygon)
    for i in range(n):
        a1, a2 = polygon[i], polygon[(i + 1) % n]
        for j in range(i + 1, n):
            # Skip the edge itself and the two adjacent edges.
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = polygon[j], polygon[(j + 1) % n]
            if segments_intersect(a1, a2, b1, b2):
                return False
    return True


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class Region:
    """An annotated planar region: a simple polygon in world coordinates."""

    id: str
    polygon: tuple[Point2, ...]
    annotation: str | None = None
    parent: str | None = None

    def __post_init__(self) -> None:
        poly = tuple((float(x), float(y)) for x, y in self.polygon)
        object.__setattr__(self, "polygon", poly)
        if len(poly) < 3:
            raise InvariantError(f"region '{self.id}': polygon needs >= 3 vertices")
        if polygon_area(poly) <= 0:
            raise InvariantError(f"region '{self.id}': polygon area must be > 0")
        if not _polygon_is_simple(poly):
            raise InvariantError(f"region '{self.id}': polygon is self-intersecting")

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    def contains(self, point: Point2) -> bool:
        return point_in_polygon(point, self.polygon)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "polygon": [[x, y] for x, y in self.polygon],
            "annotation": self.annotation,
            "parent": self.parent,
        }


@dataclass(frozen=True)
class SceneObject:
    """A 3D object: axis-aligned extent around a world-frame center."""

    id: str
    category: str
    position: tuple[float, float, float]
    extent: tuple[float, float, float]
    containing_region: str | None = None
    attributes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "extent", tuple(float(v) for v in self.extent))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if any(e < 0 for e in self.extent):
            raise InvariantError(f"object '{self.id}': extent components must be >= 0")
        if self.position[2] < 0:
            raise InvariantError(f"object '{self.id}': position.z must be >= 0")

    @property
    def xy(self) -> Point2:
        return (self.position[0], self.position[1])

    def corners(self) -> list[tuple[float, float, float]]:
        """The 8 corners of the axis-aligned extent box."""
        x, y, z = self.position
        ex, ey, ez = (e / 2.0 for e in self.extent)
        return [
            (x + sx * ex, y + sy * ey, z + sz * ez)
            for sx in (-1.0, 1.0)
            for sy in (-1.0, 1.0)
            for sz in (-1.0, 1.0)
        ]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "position": list(self.position),
            "extent": list(self.extent),
            "containing_region": self.containing_region,
            "attributes": list(self.attributes),
        }


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Uniform 2D grid; ``cells[row, col]`` is True where occupied.

    Row 0 sits at ``origin``; world y grows with the row index.  Bounds are
    the half-open box [origin, origin + size * cell_size).
    """

    cells: np.ndarray
    origin: Point2
    cell_size: float

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=bool)
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        if cells.ndim != 2:
            raise InvariantError("occupancy grid must be two-dimensional")
        if self.cell_size <= 0:
            raise InvariantError(f"cell_size must be > 0, got {self.cell_size}")
        # Plain nested lists: scalar indexing in the planners and the ray
        # caster is an order of magnitude faster than numpy item access.
        object.__setattr__(self, "occ_rows", cells.tolist())

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    def in_bounds(self, point: Point2) -> bool:
        gx = (point[0] - self.origin[0]) / self.cell_size
        gy = (point[1] - self.origin[1]) / self.cell_size
        return 0.0 <= gx < self.width and 0.0 <= gy < self.height

    def world_to_cell(self, point: Point2) -> Cell:
        if not self.in_bounds(point):
            raise OutOfBoundsError(f"point {point} outside grid bounds")
        col = int((point[0] - self.origin[0]) / self.cell_size)
        row = int((point[1] - self.origin[1]) / self.cell_size)
        return (min(row, self.height - 1), min(col, self.width - 1))

    def cell_center(self, cell: Cell) -> Point2:
        row, col = cell
        return (
            self.origin[0] + (col + 0.5) * self.cell_size,
            self.origin[1] + (row + 0.5) * self.cell_size,
        )

    def is_occupied(self, cell: Cell) -> bool:
        return self.occ_rows[cell[0]][cell[1]]

    def is_free_point(self, point: Point2) -> bool:
        return not self.is_occupied(self.world_to_cell(point))

    def to_rows(self) -> list[str]:
        return ["".join("#" if c else "." for c in row) for row in self.cells]

    @classmethod
    def from_rows(cls, rows: list[str], origin: Point2, cell_size: float) -> "OccupancyGrid":
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise InvariantError(f"grid rows have inconsistent widths: {sorted(widths)}")
        cells = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
        return cls(cells=cells, origin=origin, cell_size=cell_size)


@dataclass(frozen=True, eq=False)
class Scene:
    """A loaded scene: regions, objects, and the occupancy grid."""

    id: str
    regions: tuple[Region, ...]
    objects: tuple[SceneObject, ...]
    grid: OccupancyGrid

    def __post_init__(self) -> None:
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "region_cells_cache", {})
        self._validate()

    def _validate(self) -> None:
        region_ids = [r.id for r in self.regions]
        if len(set(region_ids)) != len(region_ids):
            dup = sorted({r for r in region_ids if region_ids.count(r) > 1})
            raise InvariantError(f"scene '{self.id}': duplicate region ids {dup}")
        object_ids = [o.id for o in self.objects]
        if len(set(object_ids)) != len(object_ids):
            dup = sorted({o for o in object_ids if object_ids.count(o) > 1})
            raise InvariantError(f"scene '{self.id}': duplicate object ids {dup}")
        by_id = {r.id: r for r in self.regions}
        for region in self.regions:
            if region.parent is not None:
                parent = by_id.get(region.parent)
                if parent is None:
                    raise InvariantError(
                        f"region '{region.id}': parent '{region.parent}' does not exist"
                    )
                if parent.parent is not None:
                    raise InvariantError(
                        f"region '{region.id}': nesting deeper than room -> sub-area"
                    )
        for obj in self.objects:
            if obj.containing_region is not None and obj.containing_region not in by_id:
                raise InvariantError(
                    f"object '{obj.id}': containing_region "
                    f"'{obj.containing_region}' does not exist"
                )
            ex, ey = obj.extent[0] / 2.0, obj.extent[1] / 2.0
            for corner in (
                (obj.position[0] - ex, obj.position[1] - ey),
                (obj.position[0] + ex, obj.position[1] + ey),
            ):
                if not self.grid.in_bounds(corner):
                    raise InvariantError(
                        f"object '{obj.id}': footprint leaves the grid at {corner}"
                    )

    @property
    def cell_size(self) -> float:
        return self.grid.cell_size

    def region_by_id(self, region_id: str) -> Region:
        for region in self.regions:
            if region.id == region_id:
                return region
        raise KeyError(f"no region '{region_id}' in scene '{self.id}'")

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(f"no object '{object_id}' in scene '{self.id}'")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "id": self.id,
            "cell_size": self.grid.cell_size,
            "origin": list(self.grid.origin),
            "grid": self.grid.to_rows(),
            "regions": [r.to_dict() for r in self.regions],
            "objects": [o.to_dict() for o in self.objects],
        }


@dataclass(frozen=True)
class TopDownView:
    """What a reasoning backend is allowed to see of a scene."""

    scene_id: str
    annotation_mode: str
    payload: dict = field(repr=False)

    def __post_init__(self) -> None:
        if self.annotation_mode not in ANNOTATION_MODES:
            raise InvariantError(
                f"unknown annotation mode '{self.annotation_mode}'; "
                f"expected one of {ANNOTATION_MODES}"
            )
        if self.annotation_mode == "no_map":
            if set(self.payload) != {"region_ids"}:
                raise InvariantError("no_map views carry only the region id list")

    def region_ids(self) -> list[str]:
        if self.annotation_mode == "no_map":
            return list(self.payload["region_ids"])
        return [entry["id"] for entry in self.payload["regions"]]

    def annotations(self) -> dict[str, str | None]:
        """Visible label per region id (None where stripped or absent)."""
        if self.annotation_mode == "no_map":
            return {rid: None for rid in self.payload["region_ids"]}
        return {entry["id"]: entry["annotation"] for entry in self.payload["regions"]}

    def polygons(self) -> dict[str, tuple[Point2, ...]]:
        """Visible geometry per region id; empty for no_map views."""
        if self.annotation_mode == "no_map":
            return {}
        return {
            entry["id"]: tuple((float(x), float(y)) for x, y in entry["polygon"])
            for entry in self.payload["regions"]
        }

    def describe(self) -> str:
        """Stable one-line textual rendering, used in prompts."""
        if self.annotation_mode == "no_map":
            ids = self.payload["region_ids"]
            return "regions: " + "; ".join(ids) if ids else "(no regions)"
        entries = self.payload["regions"]
        if not entries:
            return "(no regions)"
        parts = []
        for entry in entries:
            poly = ", ".join(f"({x:.1f}, {y:.1f})" for x, y in entry["polygon"])
            label = entry["annotation"]
            if label is None:
                parts.append(f"{entry['id']} [{poly}]")
            else:
                parts.append(f"{entry['id']} '{label}' [{poly}]")
        return "regions: " + "; ".join(parts)


# ---------------------------------------------------------------------------
# Grid traversal


def _cells_touching(gx: float, gy: float, width: int, height: int) -> list[Cell]:
    """All cells whose closed square contains grid-space point (gx, gy)."""
    nearest_x = round(gx)
    if abs(gx - nearest_x) < _GRID_EPS:
        cols = (int(nearest_x) - 1, int(nearest_x))
    else:
        cols = (int(math.floor(gx)),)
    nearest_y = round(gy)
    if abs(gy - nearest_y) < _GRID_EPS:
        rows = (int(nearest_y) - 1, int(nearest_y))
    else:
        rows = (int(math.floor(gy)),)
    return [
        (r, c)
        for r in rows
        for c in cols
        if 0 <= r < height and 0 <= c < width
    ]


def _segment_sample_points(grid: OccupancyGrid, a: Point2, b: Point2):
    """Grid-space points that pin down every cell the segment touches:
    all gridline crossings plus the midpoints between consecutive ones.
    """
    ax = (a[0] - grid.origin[0]) / grid.cell_size
    ay = (a[1] - grid.origin[1]) / grid.cell_size
    bx = (b[0] - grid.origin[0]) / grid.cell_size
    by = (b[1] - grid.origin[1]) / grid.cell_size
    dx = bx - ax
    dy = by - ay

    ts = [0.0, 1.0]
    if dx != 0.0:
        lo, hi = min(ax, bx), max(ax, bx)
        for k in range(int(math.ceil(lo)), int(math.floor(hi)) + 1):
            t = (k - ax) / dx
            if 0.0 < t < 1.0:
                ts.append(t)
    if dy != 0.0:
        lo, hi = min(ay, by), max(ay, by)
        for k in range(int(math.ceil(lo)), int(math.floor(hi)) + 1):
            t = (k - ay) / dy
            if 0.0 < t < 1.0:
                ts.append(t)
    ts.sort()

    prev_t: float | None = None
    for t in ts:
        if prev_t is not None and t - prev_t > _GRID_EPS:
            mid = (prev_t + t) / 2.0
            yield ax + mid * dx, ay + mid * dy
        yield ax + t * dx, ay + t * dy
        prev_t = t


def supercover_cells(grid: OccupancyGrid, a: Point2, b: Point2) -> set[Cell]:
    """Every cell the closed segment a-b touches, corner grazes included.

    The traversal is conservative by construction: crossing points (and the
    midpoints between consecutive crossings) are expanded to all cells whose
    closed square contains them, so a segment through a lattice corner
    reports all four incident cells and a segment along a gridline reports
    both sides.
    """
    cells: set[Cell] = set()
    for gx, gy in _segment_sample_points(grid, a, b):
        cells.update(_cells_touching(gx, gy, grid.width, grid.height))
    return cells


def line_of_sight(scene: Scene, a: Point2, b: Point2) -> bool:
    """True iff the segment a-b touches no occupied cell.

    Symmetric in its endpoints.  A degenerate segment (a == b) is always
    clear.  Raises :class:`OutOfBoundsError` if either endpoint lies
    outside the grid.
    """
    grid = scene.grid
    for point in (a, b):
        if not grid.in_bounds(point):
            raise OutOfBoundsError(f"line_of_sight endpoint {point} outside grid")
    if a == b:
        return True
    occ = grid.occ_rows
    width, height = grid.width, grid.height
    floor = math.floor
    for gx, gy in _segment_sample_points(grid, a, b):
        nearest = round(gx)
        if abs(gx - nearest) < _GRID_EPS:
            cols = (int(nearest) - 1, int(nearest))
        else:
            cols = (int(floor(gx)),)
        nearest = round(gy)
        if abs(gy - nearest) < _GRID_EPS:
            rows = (int(nearest) - 1, int(nearest))
        else:
            rows = (int(floor(gy)),)
        for r in rows:
            if 0 <= r < height:
                row = occ[r]
                for c in cols:
                    if 0 <= c < width and row[c]:
                        return False
    return True


# ---------------------------------------------------------------------------
# Sampling and views


def region_free_cells(region: Region, scene: Scene) -> list[Cell]:
    """Free cells whose centers fall inside the region polygon, row-major.

    Cached per (region id, polygon) on the scene: scenes are immutable, so
    the sweep result never changes.
    """
    cache = scene.region_cells_cache
    key = (region.id, region.polygon)
    cached = cache.get(key)
    if cached is not None:
        return cached[0]
    grid = scene.grid
    xs = [p[0] for p in region.polygon]
    ys = [p[1] for p in region.polygon]
    col_lo = max(0, int((min(xs) - grid.origin[0]) / grid.cell_size) - 1)
    col_hi = min(grid.width, int((max(xs) - grid.origin[0]) / grid.cell_size) + 2)
    row_lo = max(0, int((min(ys) - grid.origin[1]) / grid.cell_size) - 1)
    row_hi = min(grid.height, int((max(ys) - grid.origin[1]) / grid.cell_size) + 2)
    occ = grid.occ_rows
    out = []
    for row in range(row_lo, row_hi):
        for col in range(col_lo, col_hi):
            if occ[row][col]:
                continue
            if region.contains(grid.cell_center((row, col))):
                out.append((row, col))
    centers = np.array(
        [grid.cell_center(c) for c in out], dtype=float
    ).reshape(len(out), 2)
    cache[key] = (out, centers)
    return out


def region_free_cell_centers(region: Region, scene: Scene) -> np.ndarray:
    """(N, 2) world centers of :func:`region_free_cells`, same order."""
    region_free_cells(region, scene)
    return scene.region_cells_cache[(region.id, region.polygon)][1]


def sample_waypoint(region: Region, scene: Scene, rng_seed: int) -> Point2:
    """Uniformly pick a free cell inside the region; return its center.

    Deterministic for a fixed seed.
    """
    eligible = region_free_cells(region, scene)
    if not eligible:
        raise NoFreeSpaceError(f"region '{region.id}' has no free cell")
    rng = np.random.default_rng(rng_seed)
    cell = eligible[int(rng.integers(len(eligible)))]
    return scene.grid.cell_center(cell)


def render_top_down(scene: Scene, mode: str = "full") -> TopDownView:
    """Project the scene to the view a reasoning backend receives.

    full keeps every label; no_room_level strips labels of regions without
    a parent (the rooms) while keeping sub-area labels; none keeps geometry
    only; no_map reduces the scene to the region id list.
    """
    if mode not in ANNOTATION_MODES:
        raise InvariantError(
            f"unknown annotation mode '{mode}'; expected one of {ANNOTATION_MODES}"
        )
    if mode == "no_map":
        payload: dict = {"region_ids": [r.id for r in scene.regions]}
        return TopDownView(scene_id=scene.id, annotation_mode=mode, payload=payload)
    entries = []
    for region in scene.regions:
        if mode == "full":
            annotation = region.annotation
        elif mode == "no_room_level":
            annotation = region.annotation if region.parent is not None else None
        else:  # "none"
            annotation = None
        entries.append(
            {
                "id": region.id,
                "polygon": [[x, y] for x, y in region.polygon],
                "annotation": annotation,
            }
        )
    return TopDownView(scene_id=scene.id, annotation_mode=mode, payload={"regions": entries})


# ---------------------------------------------------------------------------
# File I/O


@lru_cache(maxsize=None)
def _scene_schema() -> dict:
    text = resources.files("hiernav.schemas").joinpath("scene.schema.json").read_text()
    return json.loads(text)


def _load_json(path: Path, schema: dict) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"{path}: at {exc.json_path}: {exc.message}") from exc
    return data


def load_scene(path: str | Path) -> Scene:
    """Load and validate a scene file; pure (same file, same scene)."""
    path = Path(path)
    data = _load_json(path, _scene_schema())
    grid = OccupancyGrid.from_rows(
        data["grid"], origin=tuple(data["origin"]), cell_size=data["cell_size"]
    )
    regions = tuple(
        Region(
            id=entry["id"],
            polygon=tuple((x, y) for x, y in entry["polygon"]),
            annotation=entry.get("annotation"),
            parent=entry.get("parent"),
        )
        for entry in data["regions"]
    )
    objects = tuple(
        SceneObject(
            id=entry["id"],
            category=entry["category"],
            position=tuple(entry["position"]),
            extent=tuple(entry["extent"]),
            containing_region=entry.get("containing_region"),
            attributes=tuple(entry.get("attributes", ())),
        )
        for entry in data["objects"]
    )
    return Scene(id=data["id"], regions=regions, objects=objects, grid=grid)


def save_scene(scene: Scene, path: str | Path) -> None:
    """Write a scene back to its file form; inverse of :func:`load_scene`."""
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2) + "\n")
