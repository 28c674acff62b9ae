"""Resolution-adaptive screen partitioning into two square tiles.

Mobile screens are strongly non-square, so a screen is stretch-resized and
cut into exactly two base-resolution tiles along its long axis: portrait
screens get a horizontal cut (2 rows x 1 col), landscape screens a
vertical cut (1 row x 2 cols).  Each tile carries an affine transform
mapping original pixel coordinates to tile-local coordinates, and back.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import BBox

Grid = tuple[int, int]

ALLOWED_GRIDS: tuple[Grid, ...] = ((2, 1), (1, 2))


@dataclass(frozen=True)
class GridConfig:
    """Tiling parameters; base_resolution is the square tile side in px."""

    base_resolution: int = 336

    def __post_init__(self) -> None:
        if self.base_resolution <= 0:
            raise ValueError(f"base_resolution must be positive, got {self.base_resolution}")


@dataclass(frozen=True)
class TileTransform:
    """Mapping from original screen pixels into one tile's local pixels.

    A point (x, y) on the original screen lands at
    (x * scale_x - offset_x, y * scale_y - offset_y) in the tile.
    """

    index: int
    offset_x: float
    offset_y: float
    width: int
    height: int
    scale_x: float
    scale_y: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "offset_x": self.offset_x,
            "offset_y": self.offset_y,
            "width": self.width,
            "height": self.height,
            "scale_x": self.scale_x,
            "scale_y": self.scale_y,
        }


def select_grid(screen_w: float, screen_h: float) -> Grid:
    """Pick the 2-tile grid for a screen: (rows, cols).

    Portrait screens (height >= width, squares included) are cut
    horizontally into 2 rows; landscape screens vertically into 2 columns.
    """
    if screen_w <= 0 or screen_h <= 0:
        raise ValueError(f"screen dimensions must be positive, got {screen_w}x{screen_h}")
    return (1, 2) if screen_w > screen_h else (2, 1)


def resized_dims(grid: Grid, base_resolution: int) -> tuple[int, int]:
    """(width, height) of the stretch-resized full screen for a grid."""
    rows, cols = grid
    return (cols * base_resolution, rows * base_resolution)


def plan_tiles(
    screen_w: float,
    screen_h: float,
    grid: Grid | None = None,
    config: GridConfig | None = None,
) -> list[TileTransform]:
    """Plan the tile transforms for one screen.

    The screen is notionally stretch-resized to (cols*base, rows*base) and
    cut into base x base tiles in row-major order; the tiles partition the
    resized image exactly.

    Args:
        screen_w: original screen width in pixels.
        screen_h: original screen height in pixels.
        grid: (rows, cols); defaults to select_grid(screen_w, screen_h).
        config: tile sizing; defaults to GridConfig().
    """
    config = config or GridConfig()
    if grid is None:
        grid = select_grid(screen_w, screen_h)
    if grid not in ALLOWED_GRIDS:
        raise ValueError(f"unsupported grid {grid}; allowed: {ALLOWED_GRIDS}")
    if screen_w <= 0 or screen_h <= 0:
        raise ValueError(f"screen dimensions must be positive, got {screen_w}x{screen_h}")
    rows, cols = grid
    base = config.base_resolution
    full_w, full_h = resized_dims(grid, base)
    scale_x = full_w / screen_w
    scale_y = full_h / screen_h
    tiles: list[TileTransform] = []
    for r in range(rows):
        for c in range(cols):
            tiles.append(
                TileTransform(
                    index=r * cols + c,
                    offset_x=float(c * base),
                    offset_y=float(r * base),
                    width=base,
                    height=base,
                    scale_x=scale_x,
                    scale_y=scale_y,
                )
            )
    return tiles


def project_bbox(b: BBox, tile: TileTransform) -> BBox:
    """Project an original-pixel box into one tile's local coordinates.

    The result may extend beyond the tile rectangle when the box is not
    fully contained in that tile; callers clip if needed.
    """
    return BBox(
        b.x1 * tile.scale_x - tile.offset_x,
        b.y1 * tile.scale_y - tile.offset_y,
        b.x2 * tile.scale_x - tile.offset_x,
        b.y2 * tile.scale_y - tile.offset_y,
    )


def unproject_bbox(local: BBox, tile: TileTransform) -> BBox:
    """Inverse of project_bbox: tile-local box back to original pixels."""
    return BBox(
        (local.x1 + tile.offset_x) / tile.scale_x,
        (local.y1 + tile.offset_y) / tile.scale_y,
        (local.x2 + tile.offset_x) / tile.scale_x,
        (local.y2 + tile.offset_y) / tile.scale_y,
    )


def split_image(img, grid: Grid | None = None, config: GridConfig | None = None):
    """Stretch-resize a PIL image and cut it into the planned tiles.

    Returns (resized_full, tiles) where tiles is a list of base x base
    PIL images in row-major order.  Uses bilinear resampling.
    """
    from PIL import Image

    config = config or GridConfig()
    if grid is None:
        grid = select_grid(img.width, img.height)
    full_w, full_h = resized_dims(grid, config.base_resolution)
    resized = img.resize((full_w, full_h), Image.BILINEAR)
    tiles = []
    for t in plan_tiles(img.width, img.height, grid, config):
        x0, y0 = int(t.offset_x), int(t.offset_y)
        tiles.append(resized.crop((x0, y0, x0 + t.width, y0 + t.height)))
    return resized, tiles
