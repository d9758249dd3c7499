"""Global policy: instruction -> target object phrase + target region.

Builds the structured scene-view prompt, asks a reasoning backend for the
object to look for and the region most likely to contain it, then hands a
sampled waypoint in that region to the local policy.  Two backends: a
deterministic keyword-table oracle and a remote chat-model client.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import jsonschema

from .errors import (
    InvariantError,
    MalformedReplyError,
    NoRegionMatchError,
    ParseError,
    UnknownInstructionError,
)
from .remote import RemoteEndpointConfig, chat
from .scene import Scene, TopDownView, polygon_area, sample_waypoint

PROMPT_TEMPLATE = (
    "You need to complete the human instruction: {instruction}. "
    "Now given this top-down scene view {scene_view} and several optional regions, "
    "please think about what object you should find to complete the instruction "
    "and where you should look for this object. "
    "Please show your thinking process and give your answer at the end."
)

# The template above asks for a free-form answer; remote backends get this
# suffix so the reply is machine-parseable.
ANSWER_FORMAT_SUFFIX = (
    'Finish your reply with two lines of the form "OBJECT: <object phrase>" '
    'and "REGION: <region id>".'
)

_OBJECT_LINE = re.compile(r"^\s*OBJECT:\s*(.+?)\s*$", re.MULTILINE)
_REGION_LINE = re.compile(r"^\s*REGION:\s*(\S+)\s*$", re.MULTILINE)
_CONTINUE_OR_SWITCH = re.compile(r"\b(CONTINUE|SWITCH)\b", re.IGNORECASE)


@dataclass(frozen=True)
class Instruction:
    """A high-level human instruction, e.g. "I want a cup of coffee"."""

    text: str

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise InvariantError("instruction text must be nonempty")


@dataclass(frozen=True)
class GlobalDecision:
    """The inferred target object phrase, target region, and the why."""

    target_object_phrase: str
    target_region_id: str
    rationale: str


def build_prompt(instruction: Instruction, view: TopDownView) -> str:
    """Render the reasoning prompt; byte-stable for identical inputs."""
    return PROMPT_TEMPLATE.format(
        instruction=instruction.text, scene_view=view.describe()
    )


class ReasoningBackend(Protocol):
    """The three queries a reasoning backend answers during an episode."""

    def decide(self, instruction: Instruction, view: TopDownView) -> GlobalDecision: ...

    def continue_or_switch(
        self,
        instruction: Instruction,
        region_annotation: str | None,
        scans_without_detection: int,
        regions_tried: Sequence[str],
    ) -> str: ...

    def choose_region(
        self,
        instruction: Instruction,
        candidates: Sequence[tuple[str, str | None]],
    ) -> str: ...


# ---------------------------------------------------------------------------
# Oracle backend


@dataclass(frozen=True)
class OracleEntry:
    instruction_pattern: str
    object_phrase: str
    region_keyword: str


@dataclass(frozen=True)
class OracleTable:
    """Instruction patterns -> (object phrase, region keyword)."""

    entries: tuple[OracleEntry, ...]

    def match(self, instruction_text: str) -> OracleEntry:
        """First entry whose pattern appears in the instruction."""
        lowered = instruction_text.lower()
        for entry in self.entries:
            if entry.instruction_pattern.lower() in lowered:
                return entry
        raise UnknownInstructionError(
            f"no oracle entry matches instruction: {instruction_text!r}"
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "OracleTable":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        try:
            jsonschema.validate(data, _oracle_table_schema())
        except jsonschema.ValidationError as exc:
            raise ParseError(f"{path}: at {exc.json_path}: {exc.message}") from exc
        return cls(
            entries=tuple(
                OracleEntry(
                    instruction_pattern=e["instruction_pattern"],
                    object_phrase=e["object_phrase"],
                    region_keyword=e["region_keyword"],
                )
                for e in data["entries"]
            )
        )


@lru_cache(maxsize=None)
def _oracle_table_schema() -> dict:
    text = resources.files("hiernav.schemas").joinpath("oracle_table.schema.json").read_text()
    return json.loads(text)


class OracleReasoner:
    """Deterministic table-driven stand-in for a reasoning model.

    Region choice: the lexicographically smallest region whose visible
    annotation contains the keyword.  When no visible annotation matches
    (stripped labels, or a keyword miss), it falls back to a prior instead
    of failing: the largest visible region when geometry is available,
    otherwise the lexicographically first region id.  An empty view is the
    only unanswerable case.

    ``continue_threshold`` is the number of empty waypoint scans tolerated
    in a region before switching.
    """

    def __init__(self, table: OracleTable, continue_threshold: int = 3):
        if continue_threshold < 1:
            raise InvariantError("continue_threshold must be >= 1")
        self.table = table
        self.continue_threshold = continue_threshold

    def decide(self, instruction: Instruction, view: TopDownView) -> GlobalDecision:
        entry = self.table.match(instruction.text)
        region_id, rationale = self._pick_region(view, entry.region_keyword)
        return GlobalDecision(
            target_object_phrase=entry.object_phrase,
            target_region_id=region_id,
            rationale=rationale,
        )

    def _pick_region(self, view: TopDownView, keyword: str) -> tuple[str, str]:
        ids = view.region_ids()
        if not ids:
            raise NoRegionMatchError("scene view offers no regions")
        keyword_l = keyword.lower()
        matches = [
            rid
            for rid, annotation in view.annotations().items()
            if annotation is not None and keyword_l in annotation.lower()
        ]
        if matches:
            chosen = min(matches)
            return chosen, f"annotation of {chosen} contains '{keyword}'"
        polygons = view.polygons()
        if polygons:
            chosen = min(polygons, key=lambda rid: (-polygon_area(polygons[rid]), rid))
            return chosen, f"no annotation contains '{keyword}'; trying largest region"
        chosen = min(ids)
        return chosen, "no labels or geometry visible; trying first region id"

    def continue_or_switch(
        self,
        instruction: Instruction,
        region_annotation: str | None,
        scans_without_detection: int,
        regions_tried: Sequence[str],
    ) -> str:
        if scans_without_detection < self.continue_threshold:
            return "continue"
        return "switch"

    def choose_region(
        self,
        instruction: Instruction,
        candidates: Sequence[tuple[str, str | None]],
    ) -> str:
        if not candidates:
            raise NoRegionMatchError("no untried region left to choose")
        entry = self.table.match(instruction.text)
        keyword_l = entry.region_keyword.lower()

        def score(item: tuple[str, str | None]) -> tuple[int, str]:
            rid, annotation = item
            hit = 1 if annotation is not None and keyword_l in annotation.lower() else 0
            return (-hit, rid)

        return min(candidates, key=score)[0]


# ---------------------------------------------------------------------------
# Remote backend


class RemoteReasoner:
    """Reasoning over the chat wire protocol.

    Replies must end with OBJECT:/REGION: lines (the suffix asks for them);
    unparseable replies, or region ids absent from the view, are re-asked
    up to ``config.retries`` times before failing.
    """

    def __init__(self, config: RemoteEndpointConfig):
        self.config = config

    def decide(self, instruction: Instruction, view: TopDownView) -> GlobalDecision:
        prompt = build_prompt(instruction, view)
        content = (
            f"{prompt}\n"
            f"Scene payload: {json.dumps(view.payload, sort_keys=True)}\n"
            f"{ANSWER_FORMAT_SUFFIX}"
        )
        valid_ids = set(view.region_ids())
        last_error = "no attempt made"
        for _ in range(self.config.retries + 1):
            try:
                text = chat(self.config, [{"role": "user", "content": content}])
            except MalformedReplyError as exc:
                last_error = str(exc)
                continue
            objects = _OBJECT_LINE.findall(text)
            regions = _REGION_LINE.findall(text)
            if not objects or not regions:
                last_error = f"reply lacks OBJECT:/REGION: lines: {text[:120]!r}"
                continue
            region_id = regions[-1]
            if region_id not in valid_ids:
                last_error = f"region '{region_id}' is not in the scene view"
                continue
            return GlobalDecision(
                target_object_phrase=objects[-1],
                target_region_id=region_id,
                rationale=text,
            )
        raise MalformedReplyError(last_error)

    def continue_or_switch(
        self,
        instruction: Instruction,
        region_annotation: str | None,
        scans_without_detection: int,
        regions_tried: Sequence[str],
    ) -> str:
        label = region_annotation if region_annotation is not None else "(unlabeled)"
        content = (
            f"You are exploring a region labeled {label} to complete the "
            f"instruction: {instruction.text}. "
            f"{scans_without_detection} waypoint scans found nothing; "
            f"{len(regions_tried)} other regions were already tried. "
            'Answer with the single word CONTINUE to keep exploring this '
            "region or SWITCH to move to another region."
        )
        last_error = "no attempt made"
        for _ in range(self.config.retries + 1):
            try:
                text = chat(self.config, [{"role": "user", "content": content}])
            except MalformedReplyError as exc:
                last_error = str(exc)
                continue
            hits = _CONTINUE_OR_SWITCH.findall(text)
            if hits:
                return hits[-1].lower()
            last_error = f"reply lacks CONTINUE/SWITCH: {text[:120]!r}"
        raise MalformedReplyError(last_error)

    def choose_region(
        self,
        instruction: Instruction,
        candidates: Sequence[tuple[str, str | None]],
    ) -> str:
        if not candidates:
            raise NoRegionMatchError("no untried region left to choose")
        listing = "; ".join(
            f"{rid} ({annotation})" if annotation else rid for rid, annotation in candidates
        )
        content = (
            f"To complete the instruction: {instruction.text}, pick the most "
            f"promising unexplored region among: {listing}. "
            'Finish your reply with a line "REGION: <region id>".'
        )
        valid = {rid for rid, _ in candidates}
        last_error = "no attempt made"
        for _ in range(self.config.retries + 1):
            try:
                text = chat(self.config, [{"role": "user", "content": content}])
            except MalformedReplyError as exc:
                last_error = str(exc)
                continue
            regions = _REGION_LINE.findall(text)
            if regions and regions[-1] in valid:
                return regions[-1]
            last_error = f"reply names no candidate region: {text[:120]!r}"
        raise MalformedReplyError(last_error)


def dispatch(decision: GlobalDecision, scene: Scene, seed: int) -> tuple[float, float]:
    """Sample the first local waypoint inside the decided region."""
    region = scene.region_by_id(decision.target_region_id)
    return sample_waypoint(region, scene, seed)
