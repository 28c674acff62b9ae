"""Visual prompt rendering: magenta referring boxes and numbered overlays.

Grounding questions for image-only chat models are asked by drawing every
candidate element's box on the screenshot with a numeric label, so the
model can answer "3" instead of emitting coordinates.  Rendering uses an
embedded bitmap digit font and touches only stroke and glyph pixels, so
output PNGs are byte-identical across runs and platforms.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .geometry import BBox, GeometryError, OutOfBoundsError
from .grouping import reading_order
from .screens import ScreenAnnotation

MAGENTA = (255, 0, 255)

# 5x7 digit glyphs, one string row per pixel row, '#' = on.
_DIGITS = {
    "0": ("#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", "#####"),
    "2": ("#####", "....#", "....#", "#####", "#....", "#....", "#####"),
    "3": ("#####", "....#", "....#", "#####", "....#", "....#", "#####"),
    "4": ("#...#", "#...#", "#...#", "#####", "....#", "....#", "....#"),
    "5": ("#####", "#....", "#....", "#####", "....#", "....#", "#####"),
    "6": ("#####", "#....", "#....", "#####", "#...#", "#...#", "#####"),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": ("#####", "#...#", "#...#", "#####", "#...#", "#...#", "#####"),
    "9": ("#####", "#...#", "#...#", "#####", "....#", "....#", "#####"),
}
_GLYPH_W = 5
_GLYPH_H = 7

_INT_RE = re.compile(r"\d+")


class UnparseableAnswerError(ValueError):
    """Answer text contains no integer label."""


class UnknownLabelError(ValueError):
    """Answer names a label outside the rendered 1..N range."""


@dataclass(frozen=True)
class SomStyle:
    """Overlay appearance; defaults match the rendering contract."""

    stroke: int = 4
    font_size: int = 14

    def __post_init__(self) -> None:
        if self.stroke <= 0 or self.font_size <= 0:
            raise ValueError("stroke and font_size must be positive")


@dataclass
class SomLabelMap:
    """Numeric label -> (element id, pixel box), plus render metadata."""

    labels: dict[int, tuple[str, BBox]] = field(default_factory=dict)
    font_size: int = 14
    stroke: int = 4
    anchor: str = "top-left"

    def box_for(self, label: int) -> BBox:
        return self.labels[label][1]

    def to_dict(self) -> dict:
        return {
            "labels": {
                str(k): {"element_id": eid, "bbox": list(b.as_tuple())}
                for k, (eid, b) in sorted(self.labels.items())
            },
            "font_size": self.font_size,
            "stroke": self.stroke,
            "anchor": self.anchor,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SomLabelMap":
        return cls(
            labels={
                int(k): (str(v["element_id"]), BBox.from_seq(v["bbox"]))
                for k, v in d["labels"].items()
            },
            font_size=int(d.get("font_size", 14)),
            stroke=int(d.get("stroke", 4)),
            anchor=str(d.get("anchor", "top-left")),
        )


def _fill(arr: np.ndarray, x1: float, y1: float, x2: float, y2: float) -> None:
    """Fill a rect with magenta, clipped to image bounds."""
    h, w = arr.shape[:2]
    xa = max(0, int(round(x1)))
    ya = max(0, int(round(y1)))
    xb = min(w, int(round(x2)))
    yb = min(h, int(round(y2)))
    if xa < xb and ya < yb:
        arr[ya:yb, xa:xb] = MAGENTA


def _stroke_rect(arr: np.ndarray, b: BBox, stroke: int) -> None:
    """Stroke a rectangle inward; degenerate boxes get a cross-hair dot."""
    if b.width <= 0 and b.height <= 0:
        cx, cy = b.center
        arm = stroke * 1.5
        _fill(arr, cx - arm, cy - stroke / 2, cx + arm, cy + stroke / 2)
        _fill(arr, cx - stroke / 2, cy - arm, cx + stroke / 2, cy + arm)
        return
    _fill(arr, b.x1, b.y1, b.x2, b.y1 + stroke)
    _fill(arr, b.x1, b.y2 - stroke, b.x2, b.y2)
    _fill(arr, b.x1, b.y1, b.x1 + stroke, b.y2)
    _fill(arr, b.x2 - stroke, b.y1, b.x2, b.y2)


def _draw_label(arr: np.ndarray, text: str, x: float, y: float, font_size: int) -> None:
    """Blit digit glyphs at (x, y) top-left, scaled to the font size."""
    scale = max(1, font_size // _GLYPH_H)
    pen_x = int(round(x))
    top = int(round(y))
    for ch in text:
        glyph = _DIGITS.get(ch)
        if glyph is None:
            continue
        for row, bits in enumerate(glyph):
            for col, bit in enumerate(bits):
                if bit != "#":
                    continue
                _fill(
                    arr,
                    pen_x + col * scale,
                    top + row * scale,
                    pen_x + (col + 1) * scale,
                    top + (row + 1) * scale,
                )
        pen_x += (_GLYPH_W + 1) * scale


def label_height(font_size: int) -> int:
    """Rendered glyph height in pixels for a font size."""
    return _GLYPH_H * max(1, font_size // _GLYPH_H)


def _to_array(image: Image.Image) -> np.ndarray:
    return np.array(image.convert("RGB"))


def render_single_ref(image: Image.Image, b: BBox, style: SomStyle | None = None) -> Image.Image:
    """Copy the image with one magenta-stroked referring box.

    Only the stroke pixels differ from the input; a zero-area box renders
    as a small cross-hair dot; boxes touching the edge are clipped.

    Raises:
        OutOfBoundsError: box not inside the image bounds.
    """
    style = style or SomStyle()
    if b.x1 < 0 or b.y1 < 0 or b.x2 > image.width or b.y2 > image.height:
        raise OutOfBoundsError(f"box {b.as_tuple()} outside image {image.width}x{image.height}")
    arr = _to_array(image)
    _stroke_rect(arr, b, style.stroke)
    return Image.fromarray(arr)


def render_som(
    image: Image.Image,
    screen: ScreenAnnotation,
    style: SomStyle | None = None,
) -> tuple[Image.Image, SomLabelMap]:
    """Overlay every element's box with a numeric label.

    Labels run 1..N in reading order.  Each label is drawn inside the
    box's top-left corner; when the box is shorter than the glyph height
    the label goes directly above the box instead.

    Raises:
        GeometryError: screen has no elements.
    """
    style = style or SomStyle()
    if not screen.elements:
        raise GeometryError(f"{screen.screen_id}: nothing to render")
    arr = _to_array(image)
    label_map = SomLabelMap(font_size=style.font_size, stroke=style.stroke)
    glyph_h = label_height(style.font_size)
    for label, e in enumerate(reading_order(screen.elements), start=1):
        b = e.bbox
        _stroke_rect(arr, b, style.stroke)
        if b.height < style.font_size:
            lx, ly = b.x1, b.y1 - glyph_h - 2
        else:
            lx, ly = b.x1 + style.stroke + 2, b.y1 + style.stroke + 2
        _draw_label(arr, str(label), lx, ly, style.font_size)
        label_map.labels[label] = (e.id, b)
    return Image.fromarray(arr), label_map


def resolve_label_answer(answer: str, label_map: SomLabelMap) -> BBox:
    """Map a model's numeric-label answer back to its box.

    Takes the first integer in the text, so "3", "3.", and "label 3" all
    resolve to label 3.

    Raises:
        UnparseableAnswerError: no integer anywhere in the answer.
        UnknownLabelError: integer outside the rendered label range.
    """
    m = _INT_RE.search(answer)
    if m is None:
        raise UnparseableAnswerError(f"no numeric label in answer {answer!r}")
    label = int(m.group(0))
    if label not in label_map.labels:
        raise UnknownLabelError(f"label {label} outside 1..{len(label_map.labels)}")
    return label_map.box_for(label)


def save_png(image: Image.Image, path) -> None:
    """Write a PNG deterministically (no timestamps or ancillary chunks)."""
    image.save(path, format="PNG")
