"""Screen annotation model and JSONL serialization.

A `ScreenAnnotation` is one screenshot's worth of detector output: screen
dimensions, platform, and a flat list of UI elements with pixel bounding
boxes.  Serialization round-trips unknown JSON fields so upstream metadata
survives the pipeline untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .geometry import BBox

SCHEMA_VERSION = 1

PLATFORMS = ("android", "iphone")

# Closed set of types the generators give special treatment; detectors may
# emit other types, which flow through untouched.
UI_TYPES = (
    "Button",
    "Text",
    "Icon",
    "Picture",
    "Checkbox",
    "Toggle",
    "Tab",
    "Input",
    "Slider",
    "PageControl",
)

_ELEMENT_FIELDS = frozenset(
    {"id", "ui_type", "text", "bbox", "member_ids", "interactive"}
)
_SCREEN_FIELDS = frozenset(
    {"screen_id", "platform", "width", "height", "elements", "image_path"}
)


@dataclass(frozen=True)
class UIElement:
    """One detected widget: type, optional display text, pixel bbox.

    For Icon elements `text` holds the icon class name.  `member_ids`
    records which raw detections a grouping pass folded into this element;
    it is None for elements no grouping pass has examined yet.
    """

    id: str
    ui_type: str
    bbox: BBox
    text: str | None = None
    member_ids: tuple[str, ...] | None = None
    interactive: bool | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def members(self) -> tuple[str, ...]:
        """Raw detection ids this element accounts for."""
        return self.member_ids if self.member_ids is not None else (self.id,)

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "ui_type": self.ui_type,
            "bbox": list(self.bbox.as_tuple()),
        }
        if self.text is not None:
            d["text"] = self.text
        if self.member_ids is not None:
            d["member_ids"] = list(self.member_ids)
        if self.interactive is not None:
            d["interactive"] = self.interactive
        d.update(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "UIElement":
        extra = {k: v for k, v in d.items() if k not in _ELEMENT_FIELDS}
        member_ids = d.get("member_ids")
        return cls(
            id=str(d["id"]),
            ui_type=str(d["ui_type"]),
            bbox=BBox.from_seq(d["bbox"]),
            text=d.get("text"),
            member_ids=tuple(str(m) for m in member_ids) if member_ids is not None else None,
            interactive=d.get("interactive"),
            extra=extra,
        )


@dataclass(frozen=True)
class ScreenAnnotation:
    """All detections for one screenshot."""

    screen_id: str
    platform: str
    width: float
    height: float
    elements: tuple[UIElement, ...]
    image_path: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        d: dict = {
            "screen_id": self.screen_id,
            "platform": self.platform,
            "width": self.width,
            "height": self.height,
            "elements": [e.to_dict() for e in self.elements],
        }
        if self.image_path is not None:
            d["image_path"] = self.image_path
        d.update(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScreenAnnotation":
        extra = {k: v for k, v in d.items() if k not in _SCREEN_FIELDS}
        return cls(
            screen_id=str(d["screen_id"]),
            platform=str(d["platform"]),
            width=float(d["width"]),
            height=float(d["height"]),
            elements=tuple(UIElement.from_dict(e) for e in d["elements"]),
            image_path=d.get("image_path"),
            extra=extra,
        )


class ScreenValidationError(ValueError):
    """Annotation violates a structural invariant."""


def validate_screen(screen: ScreenAnnotation) -> None:
    """Check structural invariants; raise ScreenValidationError on failure.

    Invariants: positive dimensions, known platform, unique element ids,
    and every bbox inside the screen rectangle.
    """
    if screen.width <= 0 or screen.height <= 0:
        raise ScreenValidationError(
            f"{screen.screen_id}: non-positive dimensions {screen.width}x{screen.height}"
        )
    if screen.platform not in PLATFORMS:
        raise ScreenValidationError(
            f"{screen.screen_id}: unknown platform {screen.platform!r}"
        )
    seen: set[str] = set()
    for e in screen.elements:
        if e.id in seen:
            raise ScreenValidationError(f"{screen.screen_id}: duplicate element id {e.id!r}")
        seen.add(e.id)
        b = e.bbox
        if b.x1 < 0 or b.y1 < 0 or b.x2 > screen.width or b.y2 > screen.height:
            raise ScreenValidationError(
                f"{screen.screen_id}/{e.id}: bbox {b.as_tuple()} outside screen"
            )


def json_line(obj: dict) -> str:
    """Canonical single-line JSON: sorted keys, no trailing whitespace."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def make_header(tool_version: str, config: dict | None = None) -> dict:
    """Header record embedded as the first line of generated JSONL files."""
    h: dict = {"schema_version": SCHEMA_VERSION, "tool_version": tool_version}
    if config:
        h["config"] = config
    return {"__header__": h}


def is_header(record: dict) -> bool:
    return "__header__" in record


def write_jsonl(path: str | Path, records: Iterable[dict], header: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header is not None:
            f.write(json_line(header) + "\n")
        for rec in records:
            f.write(json_line(rec) + "\n")


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield data records from a JSONL file, skipping any header line."""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if isinstance(rec, dict) and is_header(rec):
                continue
            yield rec


def read_screens(path: str | Path) -> list[ScreenAnnotation]:
    return [ScreenAnnotation.from_dict(r) for r in read_jsonl(path)]


def write_screens(path: str | Path, screens: Iterable[ScreenAnnotation],
                  header: dict | None = None) -> None:
    write_jsonl(path, (s.to_dict() for s in screens), header=header)
