"""Trajectory figures from serialized episode traces.

Renders the top-down map (when the trace's scene file is reachable), the
pose polyline split at region switches, waypoints, scan markers, and the
goal.  Output is vector (SVG by default) and byte-stable: the SVG hash
salt is pinned and the creation date is stripped.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .policy_local import EpisodeTrace  # noqa: E402
from .scene import Scene, load_scene  # noqa: E402

_SEGMENT_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:purple", "tab:brown")


def _resolve_scene(trace: EpisodeTrace, trace_path: Path, override: str | None) -> Scene | None:
    candidates = []
    if override:
        candidates.append(Path(override))
    if trace.scene_path:
        candidates.append(Path(trace.scene_path))
        candidates.append(trace_path.parent / trace.scene_path)
    for candidate in candidates:
        if candidate.is_file():
            return load_scene(candidate)
    return None


def _draw_scene(ax, scene: Scene) -> None:
    grid = scene.grid
    x0, y0 = grid.origin
    extent = (
        x0,
        x0 + grid.width * grid.cell_size,
        y0,
        y0 + grid.height * grid.cell_size,
    )
    ax.imshow(
        grid.cells,
        origin="lower",
        extent=extent,
        cmap="Greys",
        vmin=0.0,
        vmax=1.4,
        interpolation="none",
    )
    for region in scene.regions:
        if region.parent is not None:
            continue
        xs = [p[0] for p in region.polygon] + [region.polygon[0][0]]
        ys = [p[1] for p in region.polygon] + [region.polygon[0][1]]
        ax.plot(xs, ys, color="silver", linewidth=0.6, zorder=1)
        if region.annotation:
            cx = sum(p[0] for p in region.polygon) / len(region.polygon)
            cy = sum(p[1] for p in region.polygon) / len(region.polygon)
            ax.text(cx, cy, region.annotation, fontsize=6, color="dimgray",
                    ha="center", va="center", zorder=1)


def plot_trace(
    trace_path: str | Path,
    out_path: str | Path,
    scene_path: str | None = None,
) -> None:
    """Write a vector figure of one episode; deterministic output bytes."""
    trace_path = Path(trace_path)
    trace = EpisodeTrace.from_jsonl(trace_path)
    scene = _resolve_scene(trace, trace_path, scene_path)

    plt.rcParams["svg.hashsalt"] = "hiernav"
    fig, ax = plt.subplots(figsize=(7, 5))
    if scene is not None:
        _draw_scene(ax, scene)

    # Split the polyline wherever a region switch happened.
    switch_steps = sorted(
        e["step"] for e in trace.events if e["tag"] == "region_switch"
    )
    xs = [p.x for p in trace.poses]
    ys = [p.y for p in trace.poses]
    bounds = [0, *switch_steps, len(trace.poses) - 1]
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        if hi <= lo:
            continue
        color = _SEGMENT_COLORS[i % len(_SEGMENT_COLORS)]
        label = "path" if i == 0 else f"after switch {i}"
        ax.plot(xs[lo:hi + 1], ys[lo:hi + 1], color=color, linewidth=1.4,
                zorder=3, label=label)
    for step in switch_steps:
        ax.plot(xs[step], ys[step], marker="x", color="red", markersize=7, zorder=4)

    for event in trace.events:
        if event["tag"] == "waypoint":
            ax.plot(*event["point"], marker="o", mfc="none", mec="tab:blue",
                    markersize=5, zorder=4)
        elif event["tag"] == "scan":
            ax.plot(*event["waypoint"], marker="+", color="tab:cyan",
                    markersize=6, zorder=4)
        elif event["tag"] == "goal":
            ax.plot(*event["point"], marker="*", color="gold", mec="black",
                    markersize=13, zorder=5)
    ax.plot(xs[0], ys[0], marker="^", color="tab:green", markersize=9, zorder=5)
    if trace.target_position is not None:
        ax.plot(trace.target_position[0], trace.target_position[1], marker="s",
                mfc="none", mec="crimson", markersize=8, zorder=5)

    ax.set_aspect("equal")
    ax.set_title(f"{trace.task_id} ({trace.scene_id})", fontsize=9)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if len(bounds) > 2:
        ax.legend(fontsize=6, loc="upper right")
    fig.savefig(out_path, metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
