"""Bundled benchmark: five office scenes, ten navigation tasks each.

The scenes are synthetic floor plans (rooms off a corridor, 0.1 m cells)
authored so that every task is completable: the target room's annotation
contains the task's oracle keyword, targets sit in scan range of any
waypoint in their room, and all rooms connect through doors.  Room ids are
deliberately non-semantic (r1, r2, ...): semantics live in annotations
only, which is what the annotation-mode ablations strip.  Corridors get
the early ids and target-heavy rooms are the largest region of their
scene, so degraded reasoning fallbacks (largest-region with geometry,
first-id without) order the way the ablation expects.

``python3 -m hiernav.benchmark <out_dir>`` regenerates the file set.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .scene import OccupancyGrid, Region, Scene, SceneObject, save_scene

CELL = 0.1
WALL = 0.2


class _Canvas:
    def __init__(self, width_m: float, height_m: float):
        self.cells = np.zeros(
            (round(height_m / CELL), round(width_m / CELL)), dtype=bool
        )

    def _span(self, lo: float, hi: float, limit: int) -> tuple[int, int]:
        return max(0, round(lo / CELL)), min(limit, round(hi / CELL))

    def fill(self, x0, y0, x1, y1) -> None:
        c0, c1 = self._span(x0, x1, self.cells.shape[1])
        r0, r1 = self._span(y0, y1, self.cells.shape[0])
        self.cells[r0:r1, c0:c1] = True

    def clear(self, x0, y0, x1, y1) -> None:
        c0, c1 = self._span(x0, x1, self.cells.shape[1])
        r0, r1 = self._span(y0, y1, self.cells.shape[0])
        self.cells[r0:r1, c0:c1] = False


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _obj(obj_id, category, x, y, z=0.4, extent=(0.4, 0.4, 0.4), region=None, attrs=()):
    return SceneObject(
        id=obj_id,
        category=category,
        position=(x, y, z),
        extent=extent,
        containing_region=region,
        attributes=tuple(attrs),
    )


def _scene(scene_id, width, height, walls, doors, regions, objects) -> Scene:
    canvas = _Canvas(width, height)
    canvas.fill(0, 0, width, WALL)
    canvas.fill(0, height - WALL, width, height)
    canvas.fill(0, 0, WALL, height)
    canvas.fill(width - WALL, 0, width, height)
    for rect in walls:
        canvas.fill(*rect)
    for rect in doors:
        canvas.clear(*rect)
    grid = OccupancyGrid(cells=canvas.cells, origin=(0.0, 0.0), cell_size=CELL)
    return Scene(id=scene_id, regions=tuple(regions), objects=tuple(objects), grid=grid)


def _task(task_id, scene_id, instruction, target, starts, pattern, phrase, keyword):
    return (
        {
            "id": task_id,
            "scene": scene_id,
            "instruction": instruction,
            "target_object_id": target,
            "start_poses": [list(p) for p in starts],
        },
        {
            "instruction_pattern": pattern,
            "object_phrase": phrase,
            "region_keyword": keyword,
        },
    )


# ---------------------------------------------------------------------------
# Scenes


def _meeting_a():
    width, height = 16.0, 10.0
    walls = [
        (0, 4.2, width, 4.4),  # south corridor wall
        (0, 5.6, width, 5.8),  # north corridor wall
        (9.4, 5.8, 9.6, height),  # north divider
        (5.2, 0, 5.4, 4.2),  # south dividers
        (10.6, 0, 10.8, 4.2),
    ]
    doors = [
        (2.0, 5.6, 3.2, 5.8),  # corridor -> r6
        (12.0, 5.6, 13.2, 5.8),  # corridor -> r4
        (2.0, 4.2, 3.2, 4.4),  # corridor -> r2
        (7.0, 4.2, 8.2, 4.4),  # corridor -> r3
        (12.6, 4.2, 13.8, 4.4),  # corridor -> r5
    ]
    regions = [
        Region("r1", _rect(0.2, 4.4, 15.8, 5.6), annotation="corridor"),
        Region("r2", _rect(0.2, 0.2, 5.2, 4.2), annotation="storage room"),
        Region("r3", _rect(5.4, 0.2, 10.6, 4.2), annotation="printer room"),
        Region("r4", _rect(9.6, 5.8, 15.8, 9.8), annotation="lounge"),
        Region("r5", _rect(10.8, 0.2, 15.8, 4.2), annotation="kitchenette"),
        Region("r6", _rect(0.2, 5.8, 9.4, 9.8), annotation="meeting room A"),
        Region("r6a", _rect(0.2, 5.8, 3.0, 9.8), annotation="screen wall", parent="r6"),
    ]
    objects = [
        _obj("projector", "projector", 3.0, 8.8, z=0.7, region="r6"),
        _obj("whiteboard", "whiteboard", 5.5, 9.2, z=0.6, extent=(0.8, 0.2, 0.6), region="r6"),
        _obj("conference_phone", "conference phone", 4.5, 7.5, z=0.5, extent=(0.3, 0.3, 0.2), region="r6"),
        _obj("laser_pointer", "laser pointer", 6.5, 8.2, z=0.5, extent=(0.2, 0.2, 0.1), region="r6"),
        _obj("wall_calendar", "wall calendar", 2.5, 6.5, z=0.8, extent=(0.4, 0.2, 0.5), region="r6"),
        _obj("flip_chart", "flip chart", 7.5, 6.8, z=0.6, extent=(0.5, 0.5, 0.8), region="r6"),
        _obj("magazine_rack", "magazine rack", 13.5, 8.5, z=0.4, region="r4"),
        _obj("sofa", "sofa", 12.0, 7.0, z=0.3, extent=(1.4, 0.6, 0.5), region="r4"),
        _obj("printer", "printer", 8.0, 1.5, z=0.5, region="r3"),
        _obj("kettle", "kettle", 13.0, 1.2, z=0.4, extent=(0.25, 0.25, 0.3), region="r5"),
        _obj("recycling_bin", "recycling bin", 1.0, 1.0, z=0.3, region="r2"),
        _obj("mop_bucket", "mop bucket", 3.5, 2.5, z=0.2, extent=(0.3, 0.3, 0.3), region="r2"),
    ]
    scene = _scene("meeting_a", width, height, walls, doors, regions, objects)
    starts = [
        [(1.0, 5.0, 0.0), (8.0, 5.0, 0.0), (15.0, 5.0, 1.57)],
        [(2.5, 5.0, 0.0), (12.0, 5.0, 3.14), (2.0, 2.0, 0.0)],
        [(14.5, 5.0, 3.14), (5.0, 5.0, 0.0), (12.0, 1.5, 1.57)],
    ]
    rows = [
        ("t01", "Set up the projector for the presentation", "projector",
         "set up the projector", "projector", "meeting room a"),
        ("t02", "I need to write on the whiteboard", "whiteboard",
         "write on the whiteboard", "whiteboard", "meeting room a"),
        ("t03", "Start the video call", "conference_phone",
         "start the video call", "conference phone", "meeting room a"),
        ("t04", "Bring me the laser pointer", "laser_pointer",
         "laser pointer", "laser pointer", "meeting room a"),
        ("t05", "I want to check the meeting schedule", "wall_calendar",
         "meeting schedule", "wall calendar", "meeting room a"),
        ("t06", "Flip to a fresh page on the easel", "flip_chart",
         "fresh page on the easel", "flip chart", "meeting room a"),
        ("t07", "I want to read a magazine", "magazine_rack",
         "read a magazine", "magazine rack", "lounge"),
        ("t08", "I need a place to sit and relax", "sofa",
         "sit and relax", "sofa", "lounge"),
        ("t09", "Print my document for me", "printer",
         "print my document", "printer", "printer room"),
        ("t10", "Boil some water for the noodles", "kettle",
         "boil some water", "kettle", "kitchenette"),
    ]
    tasks = [
        _task(f"meeting_a_{tid}", "meeting_a", instr, target,
              starts[i % len(starts)], pattern, phrase, keyword)
        for i, (tid, instr, target, pattern, phrase, keyword) in enumerate(rows)
    ]
    return scene, tasks


def _meeting_b():
    width, height = 14.0, 10.0
    walls = [
        (6.4, 0, 6.6, height),  # vertical corridor walls
        (7.6, 0, 7.8, height),
        (0, 3.4, 6.4, 3.6),  # left divider
        (7.8, 4.2, width, 4.4),  # right divider
    ]
    doors = [
        (6.4, 1.6, 6.6, 2.8),  # corridor -> r2
        (6.4, 6.4, 6.6, 7.6),  # corridor -> r5
        (7.6, 6.4, 7.8, 7.6),  # corridor -> r4
        (7.6, 1.6, 7.8, 2.8),  # corridor -> r6
        (7.6, 9.0, 7.8, 9.8),  # keep r4 reachable from top of corridor too
    ]
    regions = [
        Region("r1", _rect(6.6, 0.2, 7.6, 9.8), annotation="corridor"),
        Region("r2", _rect(0.2, 0.2, 6.4, 3.4), annotation="supply closet"),
        Region("r4", _rect(7.8, 4.4, 13.8, 9.8), annotation="server room"),
        Region("r5", _rect(0.2, 3.6, 6.4, 9.8), annotation="meeting room B"),
        Region("r5a", _rect(0.2, 7.0, 3.0, 9.8), annotation="window seats", parent="r5"),
        Region("r6", _rect(7.8, 0.2, 13.8, 4.2), annotation="break room"),
    ]
    objects = [
        _obj("speakerphone", "speakerphone", 3.0, 6.5, z=0.5, extent=(0.3, 0.3, 0.15), region="r5"),
        _obj("presentation_screen", "presentation screen", 1.0, 8.5, z=0.8,
             extent=(0.3, 0.8, 0.6), region="r5"),
        _obj("document_tray", "document tray", 4.5, 8.0, z=0.5, extent=(0.35, 0.3, 0.2), region="r5"),
        _obj("marker_set", "marker set", 5.5, 5.0, z=0.5, extent=(0.25, 0.15, 0.1), region="r5"),
        _obj("dimmer_panel", "dimmer panel", 1.0, 4.5, z=0.9, extent=(0.2, 0.15, 0.25), region="r5"),
        _obj("display_remote", "display remote", 2.5, 5.6, z=0.45, extent=(0.15, 0.1, 0.05), region="r5"),
        _obj("vending_machine", "vending machine", 12.5, 1.2, z=0.8,
             extent=(0.8, 0.6, 1.6), region="r6"),
        _obj("microwave", "microwave", 9.0, 1.0, z=0.6, extent=(0.5, 0.4, 0.3), region="r6"),
        _obj("server_rack", "server rack", 12.5, 8.5, z=0.9, extent=(0.6, 0.6, 1.8), region="r4"),
        _obj("supply_shelf", "supply shelf", 2.0, 1.2, z=0.7, extent=(0.8, 0.4, 1.2), region="r2"),
        _obj("floor_fan", "floor fan", 10.5, 6.5, z=0.5, extent=(0.4, 0.4, 0.8), region="r4"),
    ]
    scene = _scene("meeting_b", width, height, walls, doors, regions, objects)
    starts = [
        [(7.1, 1.0, 1.57), (7.1, 9.0, -1.57), (7.1, 5.0, 0.0)],
        [(7.1, 3.0, 1.57), (2.0, 2.0, 0.0), (7.1, 7.0, -1.57)],
        [(7.1, 8.0, -1.57), (10.0, 2.0, 3.14), (7.1, 2.0, 1.57)],
    ]
    rows = [
        ("t01", "Dial into the board call", "speakerphone",
         "board call", "speakerphone", "meeting room b"),
        ("t02", "I want to see the quarterly chart", "presentation_screen",
         "quarterly chart", "presentation screen", "meeting room b"),
        ("t03", "Hand out the printed agendas", "document_tray",
         "printed agendas", "document tray", "meeting room b"),
        ("t04", "I need a marker for the glass board", "marker_set",
         "marker for the glass board", "marker set", "meeting room b"),
        ("t05", "Dim the meeting lights", "dimmer_panel",
         "dim the meeting lights", "dimmer panel", "meeting room b"),
        ("t06", "Get the remote for the display", "display_remote",
         "remote for the display", "display remote", "meeting room b"),
        ("t07", "I want a quick snack", "vending_machine",
         "quick snack", "vending machine", "break room"),
        ("t08", "Warm up my lunch", "microwave",
         "warm up my lunch", "microwave", "break room"),
        ("t09", "Check the rack temperature", "server_rack",
         "rack temperature", "server rack", "server room"),
        ("t10", "Fetch a box of staples", "supply_shelf",
         "box of staples", "supply shelf", "supply closet"),
    ]
    tasks = [
        _task(f"meeting_b_{tid}", "meeting_b", instr, target,
              starts[i % len(starts)], pattern, phrase, keyword)
        for i, (tid, instr, target, pattern, phrase, keyword) in enumerate(rows)
    ]
    return scene, tasks


def _tea_room():
    width, height = 12.0, 9.0
    walls = [
        (0, 3.8, width, 4.0),  # south corridor wall
        (0, 5.0, width, 5.2),  # north corridor wall
        (7.4, 5.2, 7.6, height),  # north divider
        (5.8, 0, 6.0, 3.8),  # south divider
    ]
    doors = [
        (1.6, 5.0, 2.8, 5.2),  # corridor -> r4
        (9.0, 5.0, 10.2, 5.2),  # corridor -> r3
        (2.6, 3.8, 3.8, 4.0),  # corridor -> r2
        (8.2, 3.8, 9.4, 4.0),  # corridor -> r5
    ]
    regions = [
        Region("r1", _rect(0.2, 4.0, 11.8, 5.0), annotation="corridor"),
        Region("r2", _rect(0.2, 0.2, 5.8, 3.8), annotation="copy room"),
        Region("r3", _rect(7.6, 5.2, 11.8, 8.8), annotation="pantry"),
        Region("r4", _rect(0.2, 5.2, 7.4, 8.8), annotation="tea room"),
        Region("r4a", _rect(0.2, 5.2, 2.6, 8.8), annotation="counter side", parent="r4"),
        Region("r5", _rect(6.0, 0.2, 11.8, 3.8), annotation="reading nook"),
    ]
    objects = [
        _obj("coffee_machine", "coffee machine", 1.2, 8.0, z=0.6, extent=(0.4, 0.4, 0.5), region="r4"),
        _obj("tea_pot", "tea pot", 2.5, 7.0, z=0.5, extent=(0.25, 0.25, 0.25), region="r4"),
        _obj("fruit_bowl", "fruit bowl", 4.0, 8.2, z=0.5, extent=(0.35, 0.35, 0.2), region="r4"),
        _obj("sugar_jar", "sugar jar", 5.5, 6.2, z=0.5, extent=(0.15, 0.15, 0.2), region="r4"),
        _obj("sink_basin", "sink basin", 6.5, 8.0, z=0.5, extent=(0.5, 0.4, 0.25), region="r4"),
        _obj("serving_tray", "serving tray", 3.2, 5.8, z=0.45, extent=(0.4, 0.3, 0.1), region="r4"),
        _obj("biscuit_tin", "biscuit tin", 9.0, 7.5, z=0.6, extent=(0.25, 0.25, 0.2), region="r3"),
        _obj("napkin_stack", "napkin stack", 10.8, 6.0, z=0.6, extent=(0.2, 0.2, 0.25), region="r3"),
        _obj("book_stand", "book stand", 8.0, 1.5, z=0.5, extent=(0.4, 0.3, 0.4), region="r5"),
        _obj("floor_lamp", "floor lamp", 10.5, 2.8, z=0.9, extent=(0.3, 0.3, 1.6), region="r5"),
        _obj("copier", "copier", 2.0, 1.5, z=0.6, extent=(0.7, 0.6, 1.0), region="r2"),
    ]
    scene = _scene("tea_room", width, height, walls, doors, regions, objects)
    starts = [
        [(0.8, 4.5, 0.0), (6.0, 4.5, 0.0), (11.2, 4.5, 3.14)],
        [(3.0, 4.5, 0.0), (9.0, 4.5, 3.14), (3.0, 2.0, 1.57)],
        [(10.0, 4.5, 3.14), (1.5, 4.5, 0.0), (9.5, 2.0, 1.57)],
    ]
    rows = [
        ("t01", "I want a cup of coffee", "coffee_machine",
         "cup of coffee", "coffee machine", "tea room"),
        ("t02", "Make me some green tea", "tea_pot",
         "green tea", "tea pot", "tea room"),
        ("t03", "I want to eat some fruit", "fruit_bowl",
         "eat some fruit", "fruit bowl", "tea room"),
        ("t04", "Add sugar to my drink", "sugar_jar",
         "sugar to my drink", "sugar jar", "tea room"),
        ("t05", "Rinse my mug in the sink", "sink_basin",
         "rinse my mug", "sink basin", "tea room"),
        ("t06", "Carry the cups on a tray", "serving_tray",
         "cups on a tray", "serving tray", "tea room"),
        ("t07", "Grab the biscuits", "biscuit_tin",
         "biscuits", "biscuit tin", "pantry"),
        ("t08", "Top up the napkins", "napkin_stack",
         "napkins", "napkin stack", "pantry"),
        ("t09", "I want to read the novel", "book_stand",
         "read the novel", "book stand", "reading nook"),
        ("t10", "Turn on the reading light", "floor_lamp",
         "reading light", "floor lamp", "reading nook"),
    ]
    tasks = [
        _task(f"tea_room_{tid}", "tea_room", instr, target,
              starts[i % len(starts)], pattern, phrase, keyword)
        for i, (tid, instr, target, pattern, phrase, keyword) in enumerate(rows)
    ]
    return scene, tasks


def _workstation():
    width, height = 15.0, 9.0
    walls = [
        (0, 3.8, width, 4.0),
        (0, 5.0, width, 5.2),
        (9.4, 5.2, 9.6, height),  # north divider
        (4.8, 0, 5.0, 3.8),  # south dividers
        (9.8, 0, 10.0, 3.8),
    ]
    doors = [
        (3.0, 5.0, 4.2, 5.2),  # corridor -> r5
        (11.4, 5.0, 12.6, 5.2),  # corridor -> r2
        (1.6, 3.8, 2.8, 4.0),  # corridor -> r3
        (6.8, 3.8, 8.0, 4.0),  # corridor -> r4
        (11.8, 3.8, 13.0, 4.0),  # corridor -> r6
    ]
    regions = [
        Region("r1", _rect(0.2, 4.0, 14.8, 5.0), annotation="corridor"),
        Region("r2", _rect(9.6, 5.2, 14.8, 8.8), annotation="storage room"),
        Region("r3", _rect(0.2, 0.2, 4.8, 3.8), annotation="focus room"),
        Region("r4", _rect(5.0, 0.2, 9.8, 3.8), annotation="print station"),
        Region("r5", _rect(0.2, 5.2, 9.4, 8.8), annotation="workstation area"),
        Region("r5a", _rect(6.4, 5.2, 9.4, 8.8), annotation="desk row", parent="r5"),
        Region("r6", _rect(10.0, 0.2, 14.8, 3.8), annotation="locker corner"),
    ]
    objects = [
        _obj("desktop_tower", "desktop tower", 3.0, 8.0, z=0.5, extent=(0.3, 0.5, 0.5), region="r5"),
        _obj("headphone_stand", "headphone stand", 4.5, 6.0, z=0.55, extent=(0.2, 0.2, 0.35), region="r5"),
        _obj("charging_dock", "charging dock", 6.0, 8.2, z=0.5, extent=(0.25, 0.2, 0.1), region="r5"),
        _obj("standing_desk", "standing desk", 7.5, 6.5, z=0.55, extent=(1.2, 0.7, 0.4), region="r5"),
        _obj("desk_plant", "desk plant", 1.5, 6.8, z=0.6, extent=(0.25, 0.25, 0.4), region="r5"),
        _obj("spiral_notebook", "spiral notebook", 5.2, 7.4, z=0.5, extent=(0.2, 0.25, 0.05), region="r5"),
        _obj("flatbed_scanner", "flatbed scanner", 6.5, 1.5, z=0.5, extent=(0.45, 0.35, 0.15), region="r4"),
        _obj("paper_shredder", "paper shredder", 8.5, 2.5, z=0.4, extent=(0.35, 0.3, 0.5), region="r4"),
        _obj("locker_cabinet", "locker cabinet", 13.5, 1.2, z=0.8, extent=(0.9, 0.5, 1.6), region="r6"),
        _obj("shoe_rack", "shoe rack", 11.0, 2.8, z=0.3, extent=(0.8, 0.3, 0.5), region="r6"),
        _obj("filing_box", "filing box", 12.0, 7.5, z=0.4, extent=(0.4, 0.3, 0.3), region="r2"),
        _obj("step_ladder", "step ladder", 10.5, 6.0, z=0.6, extent=(0.5, 0.4, 1.1), region="r2"),
    ]
    scene = _scene("workstation", width, height, walls, doors, regions, objects)
    starts = [
        [(0.8, 4.5, 0.0), (7.5, 4.5, 0.0), (14.2, 4.5, 3.14)],
        [(4.0, 4.5, 0.0), (11.0, 4.5, 3.14), (2.5, 2.0, 1.57)],
        [(13.0, 4.5, 3.14), (5.5, 4.5, 0.0), (12.0, 2.0, 1.57)],
    ]
    rows = [
        ("t01", "Boot up my computer", "desktop_tower",
         "boot up my computer", "desktop tower", "workstation area"),
        ("t02", "I need my headphones", "headphone_stand",
         "headphones", "headphone stand", "workstation area"),
        ("t03", "Plug in my laptop to charge", "charging_dock",
         "laptop to charge", "charging dock", "workstation area"),
        ("t04", "Raise my desk for standing", "standing_desk",
         "desk for standing", "standing desk", "workstation area"),
        ("t05", "Water the desk plant", "desk_plant",
         "water the desk plant", "desk plant", "workstation area"),
        ("t06", "Find my spiral notebook", "spiral_notebook",
         "spiral notebook", "spiral notebook", "workstation area"),
        ("t07", "Scan this contract", "flatbed_scanner",
         "scan this contract", "flatbed scanner", "print station"),
        ("t08", "Shred these old papers", "paper_shredder",
         "shred these old papers", "paper shredder", "print station"),
        ("t09", "Stow my backpack away", "locker_cabinet",
         "stow my backpack", "locker cabinet", "locker corner"),
        ("t10", "Grab my gym shoes", "shoe_rack",
         "gym shoes", "shoe rack", "locker corner"),
    ]
    tasks = [
        _task(f"workstation_{tid}", "workstation", instr, target,
              starts[i % len(starts)], pattern, phrase, keyword)
        for i, (tid, instr, target, pattern, phrase, keyword) in enumerate(rows)
    ]
    return scene, tasks


def _balcony():
    width, height = 13.0, 8.0
    walls = [
        (0, 3.2, width, 3.4),  # south hallway wall
        (0, 4.6, width, 4.8),  # north hallway wall (balcony railing wall)
        (6.4, 0, 6.6, 3.2),  # south divider
    ]
    doors = [
        (2.2, 4.6, 3.4, 4.8),  # hallway -> balcony (west door)
        (9.4, 4.6, 10.6, 4.8),  # hallway -> balcony (east door)
        (2.2, 3.2, 3.4, 3.4),  # hallway -> r2
        (9.4, 3.2, 10.6, 3.4),  # hallway -> r3
    ]
    regions = [
        Region("r1", _rect(0.2, 3.4, 12.8, 4.6), annotation="hallway"),
        Region("r2", _rect(0.2, 0.2, 6.4, 3.2), annotation="laundry room"),
        Region("r3", _rect(6.6, 0.2, 12.8, 3.2), annotation="mud room"),
        Region("r4", _rect(0.2, 4.8, 12.8, 7.8), annotation="balcony"),
        Region("r4a", _rect(10.0, 4.8, 12.8, 7.8), annotation="planter corner", parent="r4"),
    ]
    objects = [
        _obj("clothes_hanger", "clothes hanger", 5.0, 6.8, z=0.9, extent=(0.6, 0.3, 0.9), region="r4"),
        _obj("drying_rack", "drying rack", 6.5, 5.6, z=0.5, extent=(0.7, 0.4, 0.8), region="r4"),
        _obj("watering_can", "watering can", 8.0, 7.0, z=0.4, extent=(0.25, 0.25, 0.3), region="r4"),
        _obj("potted_plant", "potted plant", 4.5, 5.4, z=0.45, extent=(0.35, 0.35, 0.6), region="r4"),
        _obj("broom", "broom", 7.2, 6.4, z=0.6, extent=(0.2, 0.2, 1.1), region="r4"),
        _obj("wind_chime", "wind chime", 6.0, 7.4, z=0.9, extent=(0.15, 0.15, 0.4), region="r4"),
        _obj("deck_chair", "deck chair", 8.5, 5.8, z=0.4, extent=(0.6, 0.6, 0.8), region="r4"),
        _obj("washing_machine", "washing machine", 1.2, 1.2, z=0.5, extent=(0.6, 0.6, 0.9), region="r2"),
        _obj("detergent_bottle", "detergent bottle", 4.0, 2.5, z=0.5, extent=(0.15, 0.15, 0.3), region="r2"),
        _obj("umbrella_stand", "umbrella stand", 11.5, 1.2, z=0.4, extent=(0.3, 0.3, 0.6), region="r3"),
        _obj("boot_tray", "boot tray", 8.0, 1.5, z=0.2, extent=(0.6, 0.35, 0.1), region="r3"),
    ]
    scene = _scene("balcony", width, height, walls, doors, regions, objects)
    starts = [
        [(0.8, 4.0, 0.0), (6.5, 4.0, 0.0), (12.2, 4.0, 3.14)],
        [(3.0, 4.0, 0.0), (10.0, 4.0, 3.14), (2.0, 1.8, 1.57)],
        [(11.0, 4.0, 3.14), (4.5, 4.0, 0.0), (9.0, 1.8, 1.57)],
    ]
    rows = [
        ("t01", "Help me hang the clothes on the balcony", "clothes_hanger",
         "hang the clothes", "clothes hanger", "balcony"),
        ("t02", "Dry the towels outside", "drying_rack",
         "dry the towels", "drying rack", "balcony"),
        ("t03", "Water the flowers please", "watering_can",
         "water the flowers", "watering can", "balcony"),
        ("t04", "Check on the potted plant", "potted_plant",
         "potted plant", "potted plant", "balcony"),
        ("t05", "Sweep the balcony floor", "broom",
         "sweep the balcony", "broom", "balcony"),
        ("t06", "Listen to the wind chime", "wind_chime",
         "wind chime", "wind chime", "balcony"),
        ("t07", "I want to sit in the sun", "deck_chair",
         "sit in the sun", "deck chair", "balcony"),
        ("t08", "Start a load of laundry", "washing_machine",
         "load of laundry", "washing machine", "laundry room"),
        ("t09", "Get the detergent", "detergent_bottle",
         "detergent", "detergent bottle", "laundry room"),
        ("t10", "Take the umbrella with you", "umbrella_stand",
         "umbrella", "umbrella stand", "mud room"),
    ]
    tasks = [
        _task(f"balcony_{tid}", "balcony", instr, target,
              starts[i % len(starts)], pattern, phrase, keyword)
        for i, (tid, instr, target, pattern, phrase, keyword) in enumerate(rows)
    ]
    return scene, tasks


# ---------------------------------------------------------------------------
# Assembly


def build_benchmark():
    """All five scenes plus their task rows and oracle entries."""
    scenes = []
    tasks = []
    entries = []
    for builder in (_meeting_a, _meeting_b, _tea_room, _workstation, _balcony):
        scene, scene_tasks = builder()
        scenes.append(scene)
        for task, entry in scene_tasks:
            tasks.append(task)
            entries.append(entry)
    return scenes, tasks, entries


def write_benchmark(out_dir: str | Path) -> None:
    """Write the benchmark file set: scenes/, suite, and oracle table."""
    out_dir = Path(out_dir)
    (out_dir / "scenes").mkdir(parents=True, exist_ok=True)
    scenes, tasks, entries = build_benchmark()
    for scene in scenes:
        save_scene(scene, out_dir / "scenes" / f"{scene.id}.json")
    suite = {
        "version": 1,
        "name": "office",
        "rollouts": 10,
        "oracle_table": "oracle_table.json",
        "scenes": {scene.id: f"scenes/{scene.id}.json" for scene in scenes},
        "tasks": tasks,
    }
    (out_dir / "office.suite.json").write_text(json.dumps(suite, indent=2) + "\n")
    table = {"version": 1, "entries": entries}
    (out_dir / "oracle_table.json").write_text(json.dumps(table, indent=2) + "\n")


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    out = args[0] if args else "bench"
    write_benchmark(out)
    print(f"benchmark written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
