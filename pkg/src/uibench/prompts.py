"""Instruction prompt pools and deterministic paraphrase selection.

Every task has a pool of instruction templates; index 0 is the task's base
prompt and the rest are paraphrases.  Training-style generation varies the
template per sample to avoid prompt overfitting, selected by a hash of the
sample identity so generation is reproducible end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .seeding import choose_index

ELEMENTARY_REFERRING = ("ocr", "icon_recognition", "widget_classification")
ELEMENTARY_GROUNDING = ("find_text", "find_icon", "find_widget", "widget_listing")
ELEMENTARY_TASKS = ELEMENTARY_REFERRING + ELEMENTARY_GROUNDING
SPOTLIGHT_TASKS = ("screen2words", "widget_captions", "taperception")
ADVANCED_TASKS = (
    "detailed_description",
    "conv_perception",
    "conv_interaction",
    "function_inference",
)

# Tasks whose prompt embeds the referred box / the target description.
BBOX_PROMPT_TASKS = frozenset(
    {"ocr", "icon_recognition", "widget_classification", "widget_captions", "taperception"}
)
TARGET_PROMPT_TASKS = frozenset({"find_text", "find_icon", "find_widget"})

BBOX_PLACEHOLDER = "[bbox]"
TARGET_PLACEHOLDER = "{target}"


class UnknownTaskError(ValueError):
    """Task name has no prompt pool."""


class PromptPoolError(ValueError):
    """Pool file is malformed or a template lacks its placeholder."""


@dataclass(frozen=True)
class PromptPool:
    """Task name -> instruction templates; index 0 is the base prompt."""

    pools: dict[str, tuple[str, ...]]
    version: str = "1"

    def templates(self, task: str) -> tuple[str, ...]:
        try:
            return self.pools[task]
        except KeyError:
            raise UnknownTaskError(f"no prompt pool for task {task!r}") from None

    def base_prompt(self, task: str) -> str:
        return self.templates(task)[0]


def validate_pool(pool: PromptPool) -> None:
    """Check pool invariants; raise PromptPoolError on violation."""
    for task, templates in pool.pools.items():
        if not templates:
            raise PromptPoolError(f"empty prompt pool for task {task!r}")
        if task in BBOX_PROMPT_TASKS:
            missing = [t for t in templates if BBOX_PLACEHOLDER not in t]
            if missing:
                raise PromptPoolError(f"{task}: template missing {BBOX_PLACEHOLDER}: {missing[0]!r}")
        if task in TARGET_PROMPT_TASKS:
            missing = [t for t in templates if TARGET_PLACEHOLDER not in t]
            if missing:
                raise PromptPoolError(f"{task}: template missing {TARGET_PLACEHOLDER}: {missing[0]!r}")


def load_pool(path: str | Path | None = None) -> PromptPool:
    """Load a prompt pool JSON file; default is the bundled pool."""
    if path is None:
        raw = resources.files("uibench").joinpath("assets/prompt_pools.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    data = json.loads(raw)
    try:
        pool = PromptPool(
            pools={task: tuple(ts) for task, ts in data["pools"].items()},
            version=str(data.get("version", "1")),
        )
    except (KeyError, TypeError) as exc:
        raise PromptPoolError(f"malformed prompt pool file: {exc}") from exc
    validate_pool(pool)
    return pool


def expand_prompt(
    pool: PromptPool,
    task: str,
    *key,
    bbox_token: str | None = None,
    target: str | None = None,
    base_only: bool = False,
) -> str:
    """Pick a template for a sample and fill in its placeholders.

    Template choice hashes (task, *key), so the same sample identity always
    gets the same paraphrase regardless of generation order.  With
    base_only=True the base prompt (index 0) is used, the evaluation-time
    convention.

    Raises:
        UnknownTaskError: no pool for the task.
        ValueError: a required placeholder value is missing.
    """
    templates = pool.templates(task)
    idx = 0 if base_only else choose_index(len(templates), "prompt", task, *key)
    text = templates[idx]
    if BBOX_PLACEHOLDER in text:
        if bbox_token is None:
            raise ValueError(f"task {task!r} template needs bbox_token")
        text = text.replace(BBOX_PLACEHOLDER, bbox_token)
    if TARGET_PLACEHOLDER in text:
        if target is None:
            raise ValueError(f"task {task!r} template needs target")
        text = text.replace(TARGET_PLACEHOLDER, target)
    return text
