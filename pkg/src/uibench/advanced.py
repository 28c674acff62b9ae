"""Free-form task generation through an external LLM.

For screens with more than 2 but fewer than 15 detections, the normalized
detections are serialized as text (never the image itself) and sent to the
LLM with a per-task instruction.  Conversation tasks additionally get an
in-context example so the model keeps the box-token format.  Responses are
parsed into multi-turn conversations, every box token validated, near-miss
boxes snapped onto the provided detections, and invalid conversations
dropped with an itemized reason.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import (
    BBoxTokenError,
    NormBBox,
    bbox_to_token,
    normalize_bbox,
    parse_bbox_token,
    scan_bbox_tokens,
)
from .grouping import reading_order
from .llm import LlmClient, TransportError
from .prompts import ADVANCED_TASKS, PromptPool
from .screens import ScreenAnnotation
from .seeding import rng_for
from .taskgen import EligibilityError, TaskSample, Turn, validate_sample

CONVERSATION_TASKS = ("conv_perception", "conv_interaction")
MIN_ELEMENTS_EXCLUSIVE = 2
MAX_ELEMENTS_EXCLUSIVE = 15
SNAP_TOLERANCE = 20
QA_PAIRS_PER_TEST_SCREEN = 2

_SPEAKER_RE = re.compile(r"^(user|assistant)\s*:\s*", re.IGNORECASE | re.MULTILINE)
_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


class AdvParseError(ValueError):
    """Base class for response parsing failures."""


class ConversationFormatError(AdvParseError):
    """Response has no recognizable conversation structure."""


class ConversationTokenError(AdvParseError):
    """A box token in the response is invalid; carries its location."""

    def __init__(self, message: str, turn_index: int, span: tuple[int, int]):
        super().__init__(f"{message} (turn {turn_index}, chars {span[0]}..{span[1]})")
        self.turn_index = turn_index
        self.span = span


class EmptyConversationError(AdvParseError):
    """Response parsed to no usable turns."""


@dataclass(frozen=True)
class AdvancedPrompts:
    """Versioned prompt text for the four free-form tasks."""

    version: str
    system: str
    base: dict[str, str]
    one_shot: str
    format: dict[str, str]


def load_advanced_prompts(path: str | Path | None = None) -> AdvancedPrompts:
    if path is None:
        raw = resources.files("uibench").joinpath("assets/advanced_prompts.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    data = json.loads(raw)
    prompts = AdvancedPrompts(
        version=str(data.get("version", "1")),
        system=str(data.get("system", "")),
        base={k: str(v) for k, v in data["base"].items()},
        one_shot=str(data.get("one_shot", "")),
        format={k: str(v) for k, v in data.get("format", {}).items()},
    )
    missing = [t for t in ADVANCED_TASKS if t not in prompts.base]
    if missing:
        raise ValueError(f"advanced prompt file lacks base prompts for {missing}")
    return prompts


@dataclass(frozen=True)
class AdvPromptBundle:
    """Everything sent to the LLM for one (screen, task) pair: text only."""

    task: str
    detections_block: str
    base_prompt: str
    one_shot: str | None = None
    format_suffix: str = ""
    system: str = ""

    def full_prompt(self) -> str:
        parts = [self.base_prompt, "", "Detections:", self.detections_block]
        if self.one_shot:
            parts += ["", self.one_shot]
        if self.format_suffix:
            parts += ["", self.format_suffix]
        return "\n".join(parts)


def screen_eligible_advanced(screen: ScreenAnnotation) -> bool:
    """True iff the screen has more than 2 but fewer than 15 elements."""
    return MIN_ELEMENTS_EXCLUSIVE < len(screen.elements) < MAX_ELEMENTS_EXCLUSIVE


def detection_lines(screen: ScreenAnnotation) -> list[str]:
    """Serialize elements in reading order as '{type} {text?} {box token}'."""
    lines = []
    for e in reading_order(screen.elements):
        token = bbox_to_token(normalize_bbox(e.bbox, screen.width, screen.height))
        if e.text:
            lines.append(f"{e.ui_type} {e.text} {token}")
        else:
            lines.append(f"{e.ui_type} {token}")
    return lines


def screen_detections(screen: ScreenAnnotation) -> list[NormBBox]:
    """Normalized boxes of the screen's elements, in reading order."""
    return [
        normalize_bbox(e.bbox, screen.width, screen.height)
        for e in reading_order(screen.elements)
    ]


def build_prompt(
    screen: ScreenAnnotation, task: str, prompts: AdvancedPrompts
) -> AdvPromptBundle:
    """Assemble the text-only prompt bundle for one screen.

    Conversation tasks include the in-context example; description and
    inference tasks do not.  Image bytes never enter the bundle.
    """
    if task not in ADVANCED_TASKS:
        raise ValueError(f"not an advanced task: {task!r}")
    if not screen_eligible_advanced(screen):
        raise EligibilityError(
            f"{screen.screen_id}: {len(screen.elements)} elements outside "
            f"({MIN_ELEMENTS_EXCLUSIVE}, {MAX_ELEMENTS_EXCLUSIVE})"
        )
    is_conv = task in CONVERSATION_TASKS
    return AdvPromptBundle(
        task=task,
        detections_block="\n".join(detection_lines(screen)),
        base_prompt=prompts.base[task],
        one_shot=prompts.one_shot if is_conv else None,
        format_suffix=prompts.format.get("conversation" if is_conv else "plain", ""),
        system=prompts.system,
    )


def _strip_fence(raw: str) -> str:
    text = raw.strip()
    m = _FENCE_RE.match(text)
    return m.group(1).strip() if m else text


def _try_json_turns(text: str) -> list[tuple[str, str]] | None:
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(data, list):
        return None
    turns: list[tuple[str, str]] = []
    for item in data:
        if not isinstance(item, dict) or "role" not in item or "text" not in item:
            return None
        role = str(item["role"]).strip().lower()
        if role not in ("user", "assistant"):
            return None
        turns.append((role, str(item["text"]).strip()))
    return turns


def _marker_turns(text: str) -> list[tuple[str, str]] | None:
    matches = list(_SPEAKER_RE.finditer(text))
    if not matches:
        return None
    turns: list[tuple[str, str]] = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        turns.append((m.group(1).lower(), text[m.end():end].strip()))
    return turns


def _snap_box(box: NormBBox, detections: Sequence[NormBBox], tolerance: int) -> NormBBox:
    """Snap a near-miss box onto the closest provided detection.

    A detection is a snap candidate when every edge differs by at most the
    tolerance; the closest by total edge drift wins, earlier detections
    breaking ties.  Tolerance 0 disables snapping.
    """
    if tolerance <= 0:
        return box
    best = None
    best_key = None
    for i, d in enumerate(detections):
        diffs = [abs(a - b) for a, b in zip(box.as_tuple(), d.as_tuple())]
        if max(diffs) > tolerance:
            continue
        key = (sum(diffs), i)
        if best_key is None or key < best_key:
            best, best_key = d, key
    return best if best is not None else box


def _extract_boxes(
    text: str, turn_index: int, detections: Sequence[NormBBox], tolerance: int
) -> tuple[str, tuple[NormBBox, ...]]:
    """Validate, snap, and rewrite every box token in one turn's text."""
    out: list[str] = []
    regions: list[NormBBox] = []
    cursor = 0
    for start, end, tok in scan_bbox_tokens(text):
        try:
            box = parse_bbox_token(tok)
        except BBoxTokenError as exc:
            raise ConversationTokenError(str(exc), turn_index, (start, end)) from exc
        box = _snap_box(box, detections, tolerance)
        out.append(text[cursor:start])
        out.append(bbox_to_token(box))
        regions.append(box)
        cursor = end
    out.append(text[cursor:])
    return "".join(out), tuple(regions)


def parse_conversation(
    raw: str,
    task: str,
    screen: ScreenAnnotation,
    snap_tolerance: int = SNAP_TOLERANCE,
) -> list[Turn]:
    """Parse one LLM response into structured turns.

    Conversation tasks accept a JSON array of {role, text} objects or,
    as a fallback, "User:"/"Assistant:" line markers, and must open with
    a user turn.  Description and inference tasks take the whole response
    as a single assistant turn.  Every box token is validated and snapped.

    Raises:
        ConversationFormatError: no recognizable speaker structure.
        ConversationTokenError: an invalid box token, with its location.
        EmptyConversationError: nothing usable in the response.
    """
    text = _strip_fence(raw)
    if not text:
        raise EmptyConversationError("empty response")
    if task in CONVERSATION_TASKS:
        pairs = _try_json_turns(text)
        if pairs is None:
            pairs = _marker_turns(text)
        if pairs is None:
            raise ConversationFormatError("no JSON turns or speaker markers found")
        pairs = [(role, t) for role, t in pairs if t]
        if not pairs:
            raise EmptyConversationError("conversation has no non-empty turns")
        if pairs[0][0] != "user":
            raise ConversationFormatError("conversation must open with a user turn")
    else:
        pairs = [("assistant", text)]
    detections = screen_detections(screen)
    turns: list[Turn] = []
    for i, (role, turn_text) in enumerate(pairs):
        new_text, regions = _extract_boxes(turn_text, i, detections, snap_tolerance)
        turns.append(Turn(role, new_text, regions))
    return turns


def conversation_valid(turns: Sequence[Turn], task: str) -> bool:
    """Groundedness rule: interaction answers must each carry >= 1 box."""
    if task == "conv_interaction":
        return all(len(t.regions) >= 1 for t in turns if t.role == "assistant")
    return True


def serialize_conversation(turns: Sequence[Turn]) -> str:
    """Render turns in the marker format the fallback parser accepts."""
    return "\n".join(f"{t.role.capitalize()}: {t.text}" for t in turns)


def select_qa_pairs(turns: Sequence[Turn], seed: int, screen_id: str, k: int = QA_PAIRS_PER_TEST_SCREEN):
    """Pick k user/assistant pairs from a conversation, seed-deterministic.

    Pairs are consecutive (user, assistant) turns; when fewer than k exist,
    all are returned in conversation order.
    """
    pairs = [
        (turns[i], turns[i + 1])
        for i in range(len(turns) - 1)
        if turns[i].role == "user" and turns[i + 1].role == "assistant"
    ]
    if len(pairs) <= k:
        return pairs
    idxs = sorted(rng_for("qa_pairs", screen_id, seed).sample(range(len(pairs)), k))
    return [pairs[i] for i in idxs]


@dataclass
class GenerationReport:
    """Outcome counts for one generation run."""

    sent: int = 0
    parsed: int = 0
    dropped: dict[str, int] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def drop(self, screen_id: str, reason: str, detail: str) -> None:
        self.dropped[reason] = self.dropped.get(reason, 0) + 1
        self.failures.append({"screen_id": screen_id, "reason": reason, "detail": detail})

    def to_dict(self) -> dict:
        return {
            "sent": self.sent,
            "parsed": self.parsed,
            "dropped": dict(sorted(self.dropped.items())),
            "failures": self.failures,
        }


_REASONS = {
    ConversationFormatError: "format-error",
    ConversationTokenError: "token-error",
    EmptyConversationError: "empty",
}


def run_advgen(
    screens: Iterable[ScreenAnnotation],
    task: str,
    client: LlmClient,
    seed: int,
    pool: PromptPool | None = None,
    prompts: AdvancedPrompts | None = None,
    split: str = "train",
    snap_tolerance: int = SNAP_TOLERANCE,
    max_workers: int = 1,
) -> tuple[list[TaskSample], GenerationReport]:
    """Generate one advanced task's samples over a corpus.

    Eligible screens are prompted (concurrently up to max_workers), parsed,
    and validated; output order follows input screen order regardless of
    worker count.  Transport failures and invalid conversations are
    recorded per screen and never abort the run.  For the test split,
    conversation screens contribute up to two single-QA instances instead
    of the full conversation.

    Args:
        pool: instruction pool used to phrase the user turn of description
            and inference samples; conversation turns come from the LLM.
    """
    if task not in ADVANCED_TASKS:
        raise ValueError(f"not an advanced task: {task!r}")
    prompts = prompts or load_advanced_prompts()
    eligible = [s for s in screens if screen_eligible_advanced(s)]
    bundles = [build_prompt(s, task, prompts) for s in eligible]

    def _send(bundle: AdvPromptBundle) -> tuple[str | None, str | None]:
        try:
            return client.send(bundle.full_prompt(), bundle.system), None
        except (TransportError, KeyError) as exc:
            return None, str(exc)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            results = list(ex.map(_send, bundles))
    else:
        results = [_send(b) for b in bundles]

    report = GenerationReport(sent=len(eligible))
    samples: list[TaskSample] = []
    for screen, bundle, (raw, send_err) in zip(eligible, bundles, results):
        if raw is None:
            report.drop(screen.screen_id, "transport", send_err or "send failed")
            continue
        try:
            turns = parse_conversation(raw, task, screen, snap_tolerance)
        except AdvParseError as exc:
            report.drop(screen.screen_id, _REASONS[type(exc)], str(exc))
            continue
        if not conversation_valid(turns, task):
            report.drop(screen.screen_id, "missing-box", "assistant turn without a box")
            continue
        if task in CONVERSATION_TASKS:
            if split == "test":
                qa = select_qa_pairs(turns, seed, screen.screen_id)
                if not qa:
                    report.drop(screen.screen_id, "format-error", "no user/assistant pair")
                    continue
                for j, (u, a) in enumerate(qa):
                    samples.append(_make_sample(screen, task, (u, a), split, f"/qa{j}"))
                report.parsed += 1
                continue
            all_turns = tuple(turns)
        else:
            if pool is None:
                raise ValueError("description/inference generation needs a prompt pool")
            from .prompts import expand_prompt

            user = Turn("user", expand_prompt(pool, task, screen.screen_id, "-", seed))
            all_turns = (user,) + tuple(turns)
        samples.append(_make_sample(screen, task, all_turns, split, ""))
        report.parsed += 1
    return samples, report


def _make_sample(
    screen: ScreenAnnotation, task: str, turns: Sequence[Turn], split: str, suffix: str
) -> TaskSample:
    sample = TaskSample(
        sample_id=f"{screen.screen_id}/{task}{suffix}",
        task=task,
        screen_id=screen.screen_id,
        platform=screen.platform,
        split=split,
        turns=tuple(turns),
    )
    validate_sample(sample)
    return sample
