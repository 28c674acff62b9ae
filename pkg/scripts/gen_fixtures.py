#!/usr/bin/env python3
"""Generate canned LLM responses for the bundled synthetic corpus.

For every free-form-eligible screen and every advanced task, builds the
exact prompt the generator would send and writes a deterministic response
under its prompt key, so pipeline runs replay offline byte-for-byte.

The responses cover the full parsing surface: plain JSON conversations,
fenced JSON, "User:/Assistant:" marker fallback, mixed-case roles, boxes
needing a snap back onto a detection, plus three deliberately broken
replies (free prose where a conversation is required, an out-of-range box
token, and an interaction answer with no box) so drop reporting stays
exercised end to end.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from uibench.advanced import build_prompt, load_advanced_prompts, screen_eligible_advanced
from uibench.geometry import bbox_to_token, normalize_bbox
from uibench.grouping import group_screen_elements, reading_order
from uibench.llm import prompt_key
from uibench.prompts import ADVANCED_TASKS
from uibench.screens import ScreenAnnotation, read_screens


def _mention(e) -> str:
    if e.ui_type == "Text":
        return f'the text "{e.text}"'
    if e.ui_type == "Icon":
        return f"a {e.text} icon"
    if e.text:
        return f'the "{e.text}" {e.ui_type.lower()}'
    return f"a {e.ui_type.lower()}"


def _tokens(screen: ScreenAnnotation) -> list[tuple]:
    out = []
    for e in reading_order(screen.elements):
        nb = normalize_bbox(e.bbox, screen.width, screen.height)
        out.append((e, nb, bbox_to_token(nb)))
    return out


def _nudged(token_parts, dx: int = 3) -> str:
    x1, y1, x2, y2 = token_parts.as_tuple()
    return f"[{min(x1 + dx, x2)}, {y1}, {x2}, {y2}]"


def desc_response(screen: ScreenAnnotation, idx: int) -> str:
    rows = _tokens(screen)
    if screen.screen_id == "syn-015":
        return ("The screen shows a weather overview. The forecast tabs sit at "
                "[1200, 50, 1300, 90] near the top.")
    first_e, first_nb, _ = rows[0]
    parts = [
        f"This {screen.platform} screen presents {len(rows)} elements.",
        f"At the top, {_mention(first_e)} appears at {_nudged(first_nb)}.",
    ]
    for e, _, tok in rows[1:]:
        parts.append(f"Further down, {_mention(e)} occupies {tok}.")
    return " ".join(parts)


def perception_response(screen: ScreenAnnotation, idx: int) -> str:
    rows = _tokens(screen)
    if screen.screen_id == "syn-010":
        return "The screen shows a map application with a navigate button at the bottom."
    first_e, _, first_tok = rows[0]
    last_e, _, last_tok = rows[-1]
    turns = [
        {"role": "User", "text": "How many interface elements are visible on this screen?"},
        {"role": "Assistant", "text": f"There are {len(rows)} elements visible."},
        {"role": "user", "text": "What is shown at the top of the screen?"},
        {"role": "assistant", "text": f"The topmost element is {_mention(first_e)} at {first_tok}."},
        {"role": "user", "text": f"Where is {_mention(last_e)}?"},
        {"role": "assistant", "text": f"It sits near the bottom at {last_tok}."},
    ]
    if idx % 5 == 2:
        return "\n".join(f"{t['role'].capitalize()}: {t['text']}" for t in turns)
    body = json.dumps(turns, ensure_ascii=False, indent=1)
    if idx % 4 == 1:
        return f"```json\n{body}\n```"
    return body


def interaction_response(screen: ScreenAnnotation, idx: int) -> str:
    rows = _tokens(screen)
    picks = [rows[0], rows[len(rows) // 2], rows[-1]]
    seen = set()
    picks = [p for p in picks if not (p[0].id in seen or seen.add(p[0].id))]
    turns = []
    for j, (e, _, tok) in enumerate(picks):
        name = e.text or e.ui_type.lower()
        turns.append({"role": "user", "text": f"How do I use {name}?"})
        if screen.screen_id == "syn-017" and j == 1:
            turns.append({"role": "assistant", "text": "Just tap it anywhere on the screen."})
        else:
            turns.append({"role": "assistant", "text": f"Tap {_mention(e)} at {tok}."})
    return json.dumps(turns, ensure_ascii=False)


def inference_response(screen: ScreenAnnotation, idx: int) -> str:
    rows = _tokens(screen)
    interactive = [e for e, _, _ in rows if e.ui_type not in ("Text", "Picture")]
    named = ", ".join(filter(None, (e.text for e in interactive[:3]))) or "the listed controls"
    return (
        f"The overall purpose of this screen is to let the user act on "
        f"{named}. Its {len(rows)} elements are arranged for quick "
        f"single-hand use, with primary actions kept near the bottom."
    )


BUILDERS = {
    "detailed_description": desc_response,
    "conv_perception": perception_response,
    "conv_interaction": interaction_response,
    "function_inference": inference_response,
}


def main() -> int:
    base = Path(__file__).resolve().parents[1] / "data/synthetic"
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--screens", default=str(base / "screens.jsonl"))
    parser.add_argument("--out", default=str(base / "fixtures.json"))
    args = parser.parse_args()

    prompts = load_advanced_prompts()
    grouped = [
        ScreenAnnotation(s.screen_id, s.platform, s.width, s.height,
                         group_screen_elements(s.elements), s.image_path, s.extra)
        for s in read_screens(args.screens)
    ]
    eligible = [s for s in grouped if screen_eligible_advanced(s)]

    responses: dict[str, str] = {}
    for task in ADVANCED_TASKS:
        for idx, screen in enumerate(eligible):
            bundle = build_prompt(screen, task, prompts)
            key = prompt_key(bundle.full_prompt(), bundle.system)
            responses[key] = BUILDERS[task](screen, idx)

    payload = {"model": "fixture-synth", "responses": dict(sorted(responses.items()))}
    Path(args.out).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {len(responses)} fixture responses for {len(eligible)} screens -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
