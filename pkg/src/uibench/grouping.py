"""Detection grouping: raw detector boxes to instruction-ready elements.

Two passes, applied in order: stacked single-line Text detections merge
into multi-line paragraphs, then a caption Text sitting directly under a
Picture is absorbed into it.  Both passes mark every element they examine
by filling `member_ids`, and marked elements pass through untouched on any
later run, so each pass is idempotent and never invents or drops a raw
detection id.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass
from typing import Sequence

from .geometry import BBox
from .screens import UIElement

_STATE_SUFFIX_RE = re.compile(r"^(.*?)\s*\(\s*(?:checked|unchecked)\s*\)\s*$", re.IGNORECASE)

# Canonical capitalization for types the generators know about.
_CANONICAL_TYPES = {
    t.lower(): t
    for t in (
        "Button", "Text", "Icon", "Picture", "Checkbox", "Toggle", "Tab",
        "Input", "Slider", "PageControl",
    )
}


@dataclass(frozen=True)
class GroupingConfig:
    """Thresholds for the two grouping passes.

    line_merge_gap: max vertical gap between stacked lines, as a fraction
        of the median Text height on the screen.
    horizontal_overlap_min: min horizontal overlap, as a fraction of the
        narrower box's width.
    caption_gap: max gap between a Picture's bottom and a caption's top,
        as a fraction of the Picture's height.
    """

    line_merge_gap: float = 0.6
    horizontal_overlap_min: float = 0.5
    caption_gap: float = 0.15


def canonicalize_type(raw: str) -> str:
    """Normalize a detector type label.

    Collapses state-suffixed variants to their base type, e.g.
    ``Checkbox (Checked)`` and ``Checkbox (Unchecked)`` both map to
    ``Checkbox``, and fixes capitalization of known types.  Unknown types
    come back trimmed but otherwise untouched.
    """
    label = " ".join(raw.split())
    m = _STATE_SUFFIX_RE.match(label)
    if m:
        label = m.group(1).strip()
    return _CANONICAL_TYPES.get(label.lower(), label)


def _reading_key(e: UIElement) -> tuple[float, float, str]:
    return (e.bbox.y1, e.bbox.x1, e.id)


def reading_order(elements: Sequence[UIElement]) -> list[UIElement]:
    """Top-to-bottom, ties left-to-right (then id for full determinism)."""
    return sorted(elements, key=_reading_key)


def _h_overlap_ratio(a: BBox, b: BBox) -> float:
    """Horizontal overlap as a fraction of the narrower box's width."""
    ow = min(a.x2, b.x2) - max(a.x1, b.x1)
    nw = min(a.width, b.width)
    if nw <= 0:
        # Degenerate zero-width box: count containment as full overlap.
        return 1.0 if ow >= 0 else 0.0
    return ow / nw


def _merge_texts(parts: Sequence[str | None]) -> str | None:
    joined = " ".join(p for p in parts if p)
    return joined if joined else None


def group_text_lines(
    elements: Sequence[UIElement], cfg: GroupingConfig | None = None
) -> tuple[UIElement, ...]:
    """Merge vertically stacked Text lines into paragraph elements.

    A fresh Text detection joins the first open chain whose last member it
    overlaps horizontally by at least ``horizontal_overlap_min`` of the
    narrower box and whose vertical gap is at most ``line_merge_gap`` times
    the median Text height.  Chains are built greedily top-down, so merging
    is transitive within a chain.  The merged element takes the union bbox,
    the first member's id, and member texts joined top-to-bottom with a
    single space.  Non-Text elements and Text elements a grouping pass has
    already marked pass through unchanged.  Output is in reading order.
    """
    cfg = cfg or GroupingConfig()
    fresh = [e for e in elements if e.ui_type == "Text" and e.member_ids is None]
    passthrough = [e for e in elements if not (e.ui_type == "Text" and e.member_ids is None)]
    if not fresh:
        return tuple(reading_order(elements))

    median_h = statistics.median(e.bbox.height for e in fresh)
    gap_limit = cfg.line_merge_gap * median_h

    chains: list[list[UIElement]] = []
    for e in reading_order(fresh):
        joined = False
        for chain in chains:
            last = chain[-1]
            gap = e.bbox.y1 - last.bbox.y2
            if (
                gap <= gap_limit
                and _h_overlap_ratio(last.bbox, e.bbox) >= cfg.horizontal_overlap_min
            ):
                chain.append(e)
                joined = True
                break
        if not joined:
            chains.append([e])

    merged: list[UIElement] = []
    for chain in chains:
        bbox = chain[0].bbox
        members: list[str] = []
        for m in chain:
            bbox = bbox.union(m.bbox)
            members.extend(m.members)
        merged.append(
            UIElement(
                id=chain[0].id,
                ui_type="Text",
                bbox=bbox,
                text=_merge_texts([m.text for m in chain]),
                member_ids=tuple(members),
                interactive=chain[0].interactive,
                extra=dict(chain[0].extra),
            )
        )
    return tuple(reading_order(passthrough + merged))


def group_picture_caption(
    elements: Sequence[UIElement], cfg: GroupingConfig | None = None
) -> tuple[UIElement, ...]:
    """Absorb a caption Text directly below a Picture into the Picture.

    For each Picture not yet marked by a grouping pass, the nearest Text
    whose top sits at or below the Picture's bottom within ``caption_gap``
    times the Picture's height, and which overlaps it horizontally by at
    least ``horizontal_overlap_min`` of the narrower box, is absorbed: the
    result is one Picture with the union bbox and the caption text.  Each
    Picture absorbs at most one Text and each Text is absorbed at most
    once.  Output is in reading order.
    """
    cfg = cfg or GroupingConfig()
    out: dict[str, UIElement] = {e.id: e for e in elements}
    absorbed: set[str] = set()

    for pic in reading_order(elements):
        if pic.ui_type != "Picture" or pic.member_ids is not None:
            continue
        gap_limit = cfg.caption_gap * pic.bbox.height
        best: UIElement | None = None
        best_key: tuple[float, float, str] | None = None
        for cand in elements:
            if cand.ui_type != "Text" or cand.id in absorbed or cand.id == pic.id:
                continue
            gap = cand.bbox.y1 - pic.bbox.y2
            if gap < 0 or gap > gap_limit:
                continue
            if _h_overlap_ratio(pic.bbox, cand.bbox) < cfg.horizontal_overlap_min:
                continue
            key = (gap, cand.bbox.x1, cand.id)
            if best_key is None or key < best_key:
                best, best_key = cand, key
        if best is None:
            out[pic.id] = UIElement(
                id=pic.id, ui_type=pic.ui_type, bbox=pic.bbox, text=pic.text,
                member_ids=pic.members, interactive=pic.interactive,
                extra=dict(pic.extra),
            )
            continue
        absorbed.add(best.id)
        del out[best.id]
        out[pic.id] = UIElement(
            id=pic.id,
            ui_type="Picture",
            bbox=pic.bbox.union(best.bbox),
            text=_merge_texts([pic.text, best.text]),
            member_ids=pic.members + best.members,
            interactive=pic.interactive,
            extra=dict(pic.extra),
        )
    return tuple(reading_order(list(out.values())))


def group_screen_elements(
    elements: Sequence[UIElement], cfg: GroupingConfig | None = None
) -> tuple[UIElement, ...]:
    """Both grouping passes in canonical order: text lines, then captions."""
    cfg = cfg or GroupingConfig()
    return group_picture_caption(group_text_lines(elements, cfg), cfg)
