"""Template-based task sample generation from grouped screen annotations.

Three sample families come out of this module:

* elementary referring tasks (ocr, icon_recognition, widget_classification)
  where the prompt contains the element's box and the answer is text;
* elementary grounding tasks (find_text, find_icon, find_widget,
  widget_listing) where the answer contains box tokens;
* reformatted summarization/captioning/tappability records (screen2words,
  widget_captions, taperception) from an external annotation source.

Per screen the generator emits exactly one widget_listing sample plus one
referring and one grounding sample for every element that qualifies for a
category (text, icon, or widget).  Qualification couples both sides'
filters so the referring/grounding pairing is exact: the element must pass
the per-task content rules and be the only element of its kind with its
identity on the screen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .geometry import (
    BBox,
    NormBBox,
    bbox_to_token,
    normalize_bbox,
    parse_bbox_token,
    scan_bbox_tokens,
)
from .grouping import reading_order
from .prompts import (
    ELEMENTARY_GROUNDING,
    ELEMENTARY_REFERRING,
    PromptPool,
    expand_prompt,
)
from .screens import ScreenAnnotation, UIElement
from .seeding import rng_for

WIDGET_LISTING_PREFIX = "UI widgets present in this screen include"
TEST_CAP = 5000

REFERRING_TASKS = frozenset(
    {"ocr", "icon_recognition", "widget_classification", "widget_captions", "taperception"}
)
GROUNDING_TASKS = frozenset({"find_text", "find_icon", "find_widget", "widget_listing"})

# Category -> (referring task, grounding task).
CATEGORY_TASKS = {
    "text": ("ocr", "find_text"),
    "icon": ("icon_recognition", "find_icon"),
    "widget": ("widget_classification", "find_widget"),
}

_OCR_MAX_TOKENS = 10
_OCR_MIN_SINGLE_TOKEN_LEN = 2


class EligibilityError(ValueError):
    """Element does not qualify for the requested task."""


class EmptyScreenError(ValueError):
    """Screen has no elements to build a sample from."""


class RecordError(ValueError):
    """External record is missing a required field."""


@dataclass(frozen=True)
class Turn:
    """One conversation turn; regions mirror the box tokens in the text."""

    role: str
    text: str
    regions: tuple[NormBBox, ...] = ()

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "text": self.text,
            "regions": [list(r.as_tuple()) for r in self.regions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Turn":
        return cls(
            role=str(d["role"]),
            text=str(d["text"]),
            regions=tuple(NormBBox.from_seq(r) for r in d.get("regions", ())),
        )


@dataclass(frozen=True)
class TaskSample:
    """One model-facing training or test instance."""

    sample_id: str
    task: str
    screen_id: str
    platform: str
    split: str
    turns: tuple[Turn, ...]

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "task": self.task,
            "screen_id": self.screen_id,
            "platform": self.platform,
            "split": self.split,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSample":
        return cls(
            sample_id=str(d["sample_id"]),
            task=str(d["task"]),
            screen_id=str(d["screen_id"]),
            platform=str(d.get("platform", "unknown")),
            split=str(d.get("split", "train")),
            turns=tuple(Turn.from_dict(t) for t in d["turns"]),
        )


class SampleValidationError(ValueError):
    """Generated sample violates a structural rule."""


def validate_sample(sample: TaskSample) -> None:
    """Assert the structural rules every emitted sample must satisfy.

    Every bracketed quadruple in turn text must parse and match that turn's
    regions array in order; referring tasks need a region in a user turn;
    grounding tasks need one in an assistant turn; conv_interaction needs
    one in every assistant turn.
    """
    for t in sample.turns:
        if t.role not in ("user", "assistant"):
            raise SampleValidationError(f"{sample.sample_id}: bad role {t.role!r}")
        tokens = [tok for _, _, tok in scan_bbox_tokens(t.text)]
        parsed = [parse_bbox_token(tok) for tok in tokens]
        if parsed != list(t.regions):
            raise SampleValidationError(
                f"{sample.sample_id}: text tokens {parsed} != regions {list(t.regions)}"
            )
    user_regions = sum(len(t.regions) for t in sample.turns if t.role == "user")
    asst_regions = sum(len(t.regions) for t in sample.turns if t.role == "assistant")
    if sample.task in REFERRING_TASKS and user_regions < 1:
        raise SampleValidationError(f"{sample.sample_id}: referring sample without user region")
    if sample.task in GROUNDING_TASKS and asst_regions < 1:
        raise SampleValidationError(f"{sample.sample_id}: grounding sample without assistant region")
    if sample.task == "conv_interaction":
        for t in sample.turns:
            if t.role == "assistant" and len(t.regions) < 1:
                raise SampleValidationError(
                    f"{sample.sample_id}: interaction assistant turn without region"
                )


def load_icon_classes(path: str | Path | None = None) -> frozenset[str]:
    """Icon taxonomy, one class per line; default is the bundled 38-class file."""
    if path is None:
        raw = resources.files("uibench").joinpath("assets/icon_classes.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    return frozenset(line.strip() for line in raw.splitlines() if line.strip())


def eligible_ocr(e: UIElement) -> bool:
    """Text-length filter for reading tasks.

    True iff the element's text has fewer than 10 whitespace tokens, and a
    single-token text is at least 2 characters long.
    """
    if not e.text or not e.text.strip():
        return False
    tokens = e.text.split()
    if len(tokens) >= _OCR_MAX_TOKENS:
        return False
    if len(tokens) == 1 and len(tokens[0]) < _OCR_MIN_SINGLE_TOKEN_LEN:
        return False
    return True


def _identity_key(e: UIElement, kind: str) -> tuple | None:
    """Identity under which duplicates make an element un-targetable.

    Returns None when the element cannot be a target of this kind at all
    (wrong type or nothing to name it by).
    """
    if kind == "text":
        if e.ui_type == "Text" and e.text:
            return (e.text,)
        return None
    if kind == "icon":
        if e.ui_type == "Icon" and e.text:
            return (e.text,)
        return None
    if kind == "widget":
        if e.ui_type not in ("Text", "Icon") and e.text:
            return (e.ui_type, e.text)
        return None
    raise ValueError(f"unknown target kind {kind!r}")


def eligible_find_target(e: UIElement, screen: ScreenAnnotation, kind: str) -> bool:
    """Single-occurrence filter for locate-style tasks.

    False when the element has no nameable identity for the kind, or when
    any other element on the screen shares its identity key (both copies
    are excluded, since the box answer would be ambiguous).
    """
    key = _identity_key(e, kind)
    if key is None:
        return False
    for other in screen.elements:
        if other.id != e.id and _identity_key(other, kind) == key:
            return False
    return True


def _norm_token(e: UIElement, screen: ScreenAnnotation) -> tuple[NormBBox, str]:
    nb = normalize_bbox(e.bbox, screen.width, screen.height)
    return nb, bbox_to_token(nb)


def _category_of(e: UIElement) -> str | None:
    if e.ui_type == "Text":
        return "text"
    if e.ui_type == "Icon":
        return "icon"
    return "widget"


def element_category(
    e: UIElement, screen: ScreenAnnotation, icon_classes: frozenset[str] | None = None
) -> str | None:
    """The generation category this element qualifies for, or None.

    Couples both sides' filters so the referring/grounding pairing per
    category is exact: text elements must pass the text-length rules, icons
    must carry a known class, widgets must have display text, and in every
    case the element must be the only one of its kind with its identity.
    """
    cat = _category_of(e)
    if cat == "text" and not eligible_ocr(e):
        return None
    if cat == "icon" and icon_classes is not None and e.text not in icon_classes:
        return None
    if cat is None or not eligible_find_target(e, screen, cat):
        return None
    return cat


def gen_referring_sample(
    screen: ScreenAnnotation,
    e: UIElement,
    task: str,
    pool: PromptPool,
    seed: int,
    split: str = "train",
) -> TaskSample:
    """Build one region-in-prompt sample for an element.

    The user turn embeds the element's normalized box token in a prompt
    sampled from the pool; the assistant turn is the ground-truth string
    (displayed text, icon class, or canonical widget type).
    """
    if task not in ELEMENTARY_REFERRING:
        raise ValueError(f"not a referring task: {task!r}")
    if task == "ocr":
        if e.ui_type != "Text" or not eligible_ocr(e):
            raise EligibilityError(f"{e.id}: not ocr-eligible")
        answer = e.text or ""
    elif task == "icon_recognition":
        if e.ui_type != "Icon" or not e.text:
            raise EligibilityError(f"{e.id}: not an icon with a class")
        answer = e.text
    else:
        if e.ui_type in ("Text", "Icon"):
            raise EligibilityError(f"{e.id}: not a classifiable widget")
        answer = e.ui_type
    region, token = _norm_token(e, screen)
    prompt = expand_prompt(pool, task, screen.screen_id, e.id, seed, bbox_token=token)
    sample = TaskSample(
        sample_id=f"{screen.screen_id}/{task}/{e.id}",
        task=task,
        screen_id=screen.screen_id,
        platform=screen.platform,
        split=split,
        turns=(
            Turn("user", prompt, (region,)),
            Turn("assistant", answer),
        ),
    )
    validate_sample(sample)
    return sample


def _target_description(e: UIElement, kind: str) -> str:
    if kind == "widget":
        return f"{e.text} {e.ui_type}".lower()
    return e.text or ""


def gen_grounding_sample(
    screen: ScreenAnnotation,
    e: UIElement,
    task: str,
    pool: PromptPool,
    seed: int,
    split: str = "train",
) -> TaskSample:
    """Build one region-in-answer sample for an element.

    The user turn names the target (its text, icon class, or a lowercase
    "{text} {type}" description); the assistant turn is the element's
    normalized box token and nothing else.
    """
    if task not in ("find_text", "find_icon", "find_widget"):
        raise ValueError(f"not a grounding task: {task!r}")
    kind = {"find_text": "text", "find_icon": "icon", "find_widget": "widget"}[task]
    if not eligible_find_target(e, screen, kind):
        raise EligibilityError(f"{e.id}: not a unique {kind} target")
    region, token = _norm_token(e, screen)
    prompt = expand_prompt(
        pool, task, screen.screen_id, e.id, seed, target=_target_description(e, kind)
    )
    sample = TaskSample(
        sample_id=f"{screen.screen_id}/{task}/{e.id}",
        task=task,
        screen_id=screen.screen_id,
        platform=screen.platform,
        split=split,
        turns=(
            Turn("user", prompt),
            Turn("assistant", token, (region,)),
        ),
    )
    validate_sample(sample)
    return sample


def _listing_mention(e: UIElement) -> str:
    if e.ui_type == "Text":
        return f"Text displaying {e.text}" if e.text else "Text"
    if e.text:
        return f"{e.text} {e.ui_type}"
    return e.ui_type


def gen_widget_listing(
    screen: ScreenAnnotation,
    pool: PromptPool,
    seed: int,
    split: str = "train",
) -> TaskSample:
    """Build the one per-screen sample enumerating every element.

    The answer starts with the fixed prefix, then every element in reading
    order as "{displayed text} {UI type}" (Text elements as "Text
    displaying {text}"), each mention followed by its box token.
    """
    if not screen.elements:
        raise EmptyScreenError(f"{screen.screen_id}: no elements to list")
    mentions: list[str] = []
    regions: list[NormBBox] = []
    for e in reading_order(screen.elements):
        region, token = _norm_token(e, screen)
        mentions.append(f"{_listing_mention(e)} {token}")
        regions.append(region)
    answer = f"{WIDGET_LISTING_PREFIX} {', '.join(mentions)}"
    prompt = expand_prompt(pool, "widget_listing", screen.screen_id, "-", seed)
    sample = TaskSample(
        sample_id=f"{screen.screen_id}/widget_listing",
        task="widget_listing",
        screen_id=screen.screen_id,
        platform=screen.platform,
        split=split,
        turns=(
            Turn("user", prompt),
            Turn("assistant", answer, tuple(regions)),
        ),
    )
    validate_sample(sample)
    return sample


def _canon_yes_no(answer) -> str:
    truthy = {"yes", "yes.", "true", "tappable", "1"}
    falsy = {"no", "no.", "false", "not tappable", "0"}
    if isinstance(answer, bool):
        return "Yes." if answer else "No."
    s = str(answer).strip().lower()
    if s in truthy:
        return "Yes."
    if s in falsy:
        return "No."
    raise RecordError(f"cannot canonicalize tappability label {answer!r}")


def reformat_spotlight(
    record: dict,
    pool: PromptPool,
    seed: int,
    split: str = "train",
) -> TaskSample:
    """Turn one summarization/captioning/tappability record into a sample.

    Expected record fields: record_id, task, image, answer, platform?,
    and for widget_captions/taperception a bbox plus the screen's
    width/height (pixel bbox) -- a bbox given without dimensions is taken
    as already normalized to [0, 999].  Tappability answers canonicalize
    to "Yes."/"No.".
    """
    task = record.get("task")
    if task not in ("screen2words", "widget_captions", "taperception"):
        raise RecordError(f"not a reformattable task: {task!r}")
    record_id = str(record.get("record_id") or record.get("id") or record.get("image", "rec"))
    platform = str(record.get("platform", "unknown"))
    region: NormBBox | None = None
    token: str | None = None
    if task in ("widget_captions", "taperception"):
        if "bbox" not in record or record["bbox"] is None:
            raise RecordError(f"{record_id}: {task} record missing bbox")
        if "width" in record and "height" in record:
            region = normalize_bbox(
                BBox.from_seq(record["bbox"]), float(record["width"]), float(record["height"])
            )
        else:
            region = NormBBox.from_seq(record["bbox"])
        token = bbox_to_token(region)
    if task == "taperception":
        answer = _canon_yes_no(record.get("answer"))
    else:
        if record.get("answer") is None:
            raise RecordError(f"{record_id}: missing answer")
        answer = str(record["answer"])
    prompt = expand_prompt(pool, task, record_id, "-", seed, bbox_token=token)
    sample = TaskSample(
        sample_id=f"{record_id}/{task}",
        task=task,
        screen_id=str(record.get("screen_id", record_id)),
        platform=platform,
        split=split,
        turns=(
            Turn("user", prompt, (region,) if region is not None else ()),
            Turn("assistant", answer),
        ),
    )
    validate_sample(sample)
    return sample


def generate_elementary(
    screens: Iterable[ScreenAnnotation],
    pool: PromptPool,
    seed: int,
    split: str = "train",
    icon_classes: frozenset[str] | None = None,
) -> list[TaskSample]:
    """Full elementary-task generation over a corpus.

    Per screen: one widget_listing when the screen has any element, and for
    each element qualifying for a category one referring plus one grounding
    sample.  Output order is screen order, then listing, then elements in
    reading order, so generation is byte-reproducible.
    """
    samples: list[TaskSample] = []
    for screen in screens:
        if not screen.elements:
            continue
        samples.append(gen_widget_listing(screen, pool, seed, split))
        for e in reading_order(screen.elements):
            cat = element_category(e, screen, icon_classes)
            if cat is None:
                continue
            ref_task, grd_task = CATEGORY_TASKS[cat]
            samples.append(gen_referring_sample(screen, e, ref_task, pool, seed, split))
            samples.append(gen_grounding_sample(screen, e, grd_task, pool, seed, split))
    return samples


def generate_spotlight(
    records: Iterable[dict],
    pool: PromptPool,
    seed: int,
    split: str = "train",
) -> list[TaskSample]:
    """Reformat a stream of records, preserving input order."""
    return [reformat_spotlight(r, pool, seed, split) for r in records]


def cap_test_set(
    samples: Sequence[TaskSample], task: str, seed: int, cap: int = TEST_CAP
) -> list[TaskSample]:
    """Cap one task's test set at 5,000 samples.

    Keeps the smaller of the cap and the total, chosen by a deterministic
    shuffle under the run seed; surviving samples keep their original
    relative order.
    """
    if len(samples) <= cap:
        return list(samples)
    idxs = list(range(len(samples)))
    rng_for("cap_test_set", task, seed).shuffle(idxs)
    keep = sorted(idxs[:cap])
    return [samples[i] for i in keep]
