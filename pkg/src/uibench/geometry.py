"""Bounding box primitives: pixel boxes, normalized boxes, and text tokens.

Pixel-space boxes (`BBox`) use float corner coordinates with the origin at
the top-left of the screen.  Normalized boxes (`NormBBox`) live on a fixed
integer grid [0, 999] on both axes so that coordinates can be embedded in
model-facing text as compact tokens like ``[24, 101, 270, 150]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

NORM_MAX = 999

_TOKEN_RE = re.compile(
    r"^\s*\[\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\]\s*$"
)
# Candidate tokens inside free text: any bracketed integer quadruple.
_TOKEN_SCAN_RE = re.compile(r"\[\s*\d+\s*,\s*\d+\s*,\s*\d+\s*,\s*\d+\s*\]")


class GeometryError(ValueError):
    """Box corners are inverted or otherwise not a valid rectangle."""


class OutOfBoundsError(ValueError):
    """Box falls outside the screen it is being normalized against."""


class BBoxTokenError(ValueError):
    """Base class for failures while parsing a bbox text token."""


class MalformedTokenError(BBoxTokenError):
    """Text is not a bracketed quadruple of non-negative integers."""


class TokenRangeError(BBoxTokenError):
    """Token parsed but a coordinate is outside [0, 999]."""


class InvertedBoxError(BBoxTokenError):
    """Token parsed but x1 > x2 or y1 > y2."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel space, corners (x1, y1) top-left inclusive."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x1, self.y1, self.x2, self.y2)):
            raise GeometryError(f"non-finite coordinate in {self!r}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise GeometryError(
                f"inverted box ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.x1, other.x1),
            min(self.y1, other.y1),
            max(self.x2, other.x2),
            max(self.y2, other.y2),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @classmethod
    def from_seq(cls, seq) -> "BBox":
        x1, y1, x2, y2 = (float(v) for v in seq)
        return cls(x1, y1, x2, y2)


@dataclass(frozen=True)
class NormBBox:
    """Box on the integer [0, 999] grid, as embedded in prompt/answer text."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self) -> None:
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not isinstance(v, int):
                raise GeometryError(f"normalized coordinate {v!r} is not an int")
            if v < 0 or v > NORM_MAX:
                raise GeometryError(f"normalized coordinate {v} outside [0, {NORM_MAX}]")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise GeometryError(
                f"inverted box ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)

    @classmethod
    def from_seq(cls, seq) -> "NormBBox":
        x1, y1, x2, y2 = (int(v) for v in seq)
        return cls(x1, y1, x2, y2)


def _round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (not banker's)."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two pixel boxes.

    Returns 0.0 when the union is empty (both boxes degenerate); boxes with
    zero area simply contribute nothing to the intersection.
    """
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    inter = max(0.0, ix) * max(0.0, iy)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def iou_norm(a: NormBBox, b: NormBBox) -> float:
    """IoU on the normalized grid, treating coordinates as pixel corners."""
    return iou(BBox(*(float(v) for v in a.as_tuple())),
               BBox(*(float(v) for v in b.as_tuple())))


def normalize_bbox(b: BBox, screen_w: float, screen_h: float) -> NormBBox:
    """Map a pixel box onto the [0, 999] integer grid.

    Each coordinate is scaled by 999 / screen_dim and rounded half away
    from zero, so a full-screen box maps to (0, 0, 999, 999) exactly.

    Args:
        b: pixel box, must lie within [0, screen_w] x [0, screen_h].
        screen_w: screen width in pixels, > 0.
        screen_h: screen height in pixels, > 0.

    Raises:
        ValueError: non-positive screen dimensions.
        OutOfBoundsError: box extends beyond the screen.
    """
    if screen_w <= 0 or screen_h <= 0:
        raise ValueError(f"screen dimensions must be positive, got {screen_w}x{screen_h}")
    if b.x1 < 0 or b.y1 < 0 or b.x2 > screen_w or b.y2 > screen_h:
        raise OutOfBoundsError(
            f"box {b.as_tuple()} outside screen {screen_w}x{screen_h}"
        )
    return NormBBox(
        _round_half_away(b.x1 / screen_w * NORM_MAX),
        _round_half_away(b.y1 / screen_h * NORM_MAX),
        _round_half_away(b.x2 / screen_w * NORM_MAX),
        _round_half_away(b.y2 / screen_h * NORM_MAX),
    )


def denormalize_bbox(n: NormBBox, screen_w: float, screen_h: float) -> BBox:
    """Map a normalized box back to pixel space (float corners)."""
    if screen_w <= 0 or screen_h <= 0:
        raise ValueError(f"screen dimensions must be positive, got {screen_w}x{screen_h}")
    # Multiply before dividing so grid-aligned boxes come back exact.
    return BBox(
        n.x1 * screen_w / NORM_MAX,
        n.y1 * screen_h / NORM_MAX,
        n.x2 * screen_w / NORM_MAX,
        n.y2 * screen_h / NORM_MAX,
    )


def bbox_to_token(n: NormBBox) -> str:
    """Serialize a normalized box as the canonical text token.

    Format is exactly ``[x1, y1, x2, y2]`` with a single space after each
    comma, e.g. ``[24, 101, 270, 150]``.
    """
    return f"[{n.x1}, {n.y1}, {n.x2}, {n.y2}]"


def parse_bbox_token(text: str) -> NormBBox:
    """Parse a canonical bbox token back into a NormBBox.

    Tolerates surrounding whitespace and flexible spacing inside the
    brackets; rejects anything else.

    Raises:
        MalformedTokenError: text is not a bracketed integer quadruple.
        TokenRangeError: a coordinate is outside [0, 999].
        InvertedBoxError: x1 > x2 or y1 > y2.
    """
    m = _TOKEN_RE.match(text)
    if m is None:
        raise MalformedTokenError(f"not a bbox token: {text!r}")
    x1, y1, x2, y2 = (int(g) for g in m.groups())
    for v in (x1, y1, x2, y2):
        if v > NORM_MAX:
            raise TokenRangeError(f"coordinate {v} outside [0, {NORM_MAX}] in {text!r}")
    if x1 > x2 or y1 > y2:
        raise InvertedBoxError(f"inverted coordinates in {text!r}")
    return NormBBox(x1, y1, x2, y2)


def scan_bbox_tokens(text: str):
    """Find every bracketed integer quadruple in free text.

    Yields (match_start, match_end, token_text) for each candidate; the
    caller decides whether to parse or reject each one.  Bracketed text
    that is not an integer quadruple (e.g. ``[menu]``) is not a candidate.
    """
    for m in _TOKEN_SCAN_RE.finditer(text):
        yield m.start(), m.end(), m.group(0)
