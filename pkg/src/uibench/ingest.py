"""Ingestion of raw detector output into validated screen annotations.

The detector-output schema is JSON (one object per screen, or JSONL files
of such objects): ``screen_id``, ``platform`` ("iphone"/"android"),
``width``/``height`` in pixels, and ``elements``, each with a ``bbox``
[x1, y1, x2, y2], a ``ui_type`` label (state-suffixed variants accepted),
and optional ``id``/``text``.  Ingestion canonicalizes types, assigns
missing ids positionally, clips boxes that spill off-screen, and rejects
what it cannot repair, itemizing every reject while the run continues.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import BBox
from .grouping import canonicalize_type
from .screens import PLATFORMS, ScreenAnnotation, UIElement, validate_screen


@dataclass
class IngestReport:
    """What ingestion accepted, repaired, and rejected."""

    screens_in: int = 0
    screens_out: int = 0
    elements_in: int = 0
    elements_out: int = 0
    clipped: int = 0
    rejects: list[dict] = field(default_factory=list)

    def reject(self, screen_id: str, reason: str, element_id: str | None = None) -> None:
        item: dict = {"screen_id": screen_id, "reason": reason}
        if element_id is not None:
            item["element_id"] = element_id
        self.rejects.append(item)

    def to_dict(self) -> dict:
        return {
            "screens_in": self.screens_in,
            "screens_out": self.screens_out,
            "elements_in": self.elements_in,
            "elements_out": self.elements_out,
            "clipped": self.clipped,
            "rejects": self.rejects,
        }


def _ingest_element(
    raw: dict, index: int, width: float, height: float, screen_id: str, report: IngestReport
) -> UIElement | None:
    eid = str(raw.get("id") or f"e{index:03d}")
    bbox_raw = raw.get("bbox")
    if not isinstance(bbox_raw, (list, tuple)) or len(bbox_raw) != 4:
        report.reject(screen_id, "bbox must be a 4-number list", eid)
        return None
    try:
        x1, y1, x2, y2 = (float(v) for v in bbox_raw)
    except (TypeError, ValueError):
        report.reject(screen_id, "bbox has non-numeric coordinates", eid)
        return None
    if x1 > x2 or y1 > y2:
        report.reject(screen_id, f"inverted bbox ({x1}, {y1}, {x2}, {y2})", eid)
        return None
    cx1, cy1 = max(0.0, x1), max(0.0, y1)
    cx2, cy2 = min(float(width), x2), min(float(height), y2)
    if cx1 > cx2 or cy1 > cy2:
        report.reject(screen_id, "bbox entirely outside the screen", eid)
        return None
    if (cx1, cy1, cx2, cy2) != (x1, y1, x2, y2):
        report.clipped += 1
    ui_type_raw = raw.get("ui_type")
    if not ui_type_raw or not str(ui_type_raw).strip():
        report.reject(screen_id, "missing ui_type", eid)
        return None
    known = {"id", "ui_type", "text", "bbox", "member_ids", "interactive"}
    text = raw.get("text")
    return UIElement(
        id=eid,
        ui_type=canonicalize_type(str(ui_type_raw)),
        bbox=BBox(cx1, cy1, cx2, cy2),
        text=str(text) if text is not None else None,
        interactive=raw.get("interactive"),
        extra={k: v for k, v in raw.items() if k not in known},
    )


def ingest_screen(raw: dict, report: IngestReport) -> ScreenAnnotation | None:
    """Validate and canonicalize one raw detector record.

    Returns None (with itemized reject reasons) when the screen itself is
    unusable; element-level problems drop only that element.
    """
    report.screens_in += 1
    screen_id = str(raw.get("screen_id") or f"screen{report.screens_in:04d}")
    try:
        width = float(raw["width"])
        height = float(raw["height"])
    except (KeyError, TypeError, ValueError):
        report.reject(screen_id, "missing or non-numeric width/height")
        return None
    if width <= 0 or height <= 0:
        report.reject(screen_id, f"non-positive dimensions {width}x{height}")
        return None
    platform = str(raw.get("platform", "")).strip().lower()
    if platform not in PLATFORMS:
        report.reject(screen_id, f"unknown platform {raw.get('platform')!r}")
        return None
    elements_raw = raw.get("elements")
    if not isinstance(elements_raw, list):
        report.reject(screen_id, "elements must be a list")
        return None

    elements: list[UIElement] = []
    seen_ids: set[str] = set()
    for i, el_raw in enumerate(elements_raw):
        report.elements_in += 1
        if not isinstance(el_raw, dict):
            report.reject(screen_id, "element is not an object", f"index{i}")
            continue
        element = _ingest_element(el_raw, i, width, height, screen_id, report)
        if element is None:
            continue
        if element.id in seen_ids:
            report.reject(screen_id, f"duplicate element id {element.id!r}", element.id)
            continue
        seen_ids.add(element.id)
        elements.append(element)
        report.elements_out += 1

    known = {"screen_id", "platform", "width", "height", "elements", "image_path"}
    screen = ScreenAnnotation(
        screen_id=screen_id,
        platform=platform,
        width=width,
        height=height,
        elements=tuple(elements),
        image_path=raw.get("image_path"),
        extra={k: v for k, v in raw.items() if k not in known},
    )
    validate_screen(screen)
    report.screens_out += 1
    return screen


def _iter_raw_records(path: Path):
    text = path.read_text("utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        yield from json.loads(text)
        return
    if path.suffix == ".jsonl" or "\n" in text.strip():
        for line in text.splitlines():
            line = line.strip()
            if line:
                yield json.loads(line)
        return
    yield json.loads(text)


def ingest_paths(paths: list[str | Path]) -> tuple[list[ScreenAnnotation], IngestReport]:
    """Ingest every detector file (or directory of files) given.

    Files may hold one JSON object, a JSON array, or JSONL.  Unreadable
    files are itemized as rejects; the run continues.
    """
    report = IngestReport()
    screens: list[ScreenAnnotation] = []
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.suffix in (".json", ".jsonl")))
        else:
            files.append(p)
    for f in files:
        try:
            records = list(_iter_raw_records(f))
        except (OSError, json.JSONDecodeError) as exc:
            report.reject(str(f), f"unreadable file: {exc}")
            continue
        for raw in records:
            if not isinstance(raw, dict):
                report.reject(str(f), "record is not an object")
                continue
            screen = ingest_screen(raw, report)
            if screen is not None:
                screens.append(screen)
    return screens, report
