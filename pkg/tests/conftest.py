"""Shared fixtures: the bundled corpus, prompt assets, synthetic images."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from uibench.grouping import group_screen_elements
from uibench.prompts import load_pool
from uibench.screens import ScreenAnnotation, read_screens
from uibench.taskgen import load_icon_classes

DATA_DIR = Path(__file__).resolve().parents[1] / "data" / "synthetic"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def corpus_screens() -> list[ScreenAnnotation]:
    return read_screens(DATA_DIR / "screens.jsonl")


@pytest.fixture(scope="session")
def grouped_screens(corpus_screens) -> list[ScreenAnnotation]:
    return [
        ScreenAnnotation(s.screen_id, s.platform, s.width, s.height,
                         group_screen_elements(s.elements), s.image_path, s.extra)
        for s in corpus_screens
    ]


@pytest.fixture(scope="session")
def pool():
    return load_pool()


@pytest.fixture(scope="session")
def icon_classes():
    return load_icon_classes()


def gradient_image(width: int, height: int) -> Image.Image:
    """Deterministic RGB test image with per-pixel variation."""
    x = np.arange(width, dtype=np.uint32)
    y = np.arange(height, dtype=np.uint32)
    xx, yy = np.meshgrid(x, y)
    arr = np.stack(
        [(xx % 256), (yy % 256), ((xx * 7 + yy * 13) % 256)], axis=-1
    ).astype(np.uint8)
    return Image.fromarray(arr, "RGB")
