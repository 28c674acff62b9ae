#!/usr/bin/env python3
"""Freeze the canonical pipeline manifest for the bundled corpus.

Runs the full pipeline on data/synthetic/ with the canonical settings
(seed 0, train split, spotlight records, all four advanced tasks from the
replay fixtures, the bundled mixture spec) into a scratch directory and
writes the resulting per-file hashes and tree hash to
data/synthetic/expected_manifest.json.  Reruns of the same pipeline must
reproduce these hashes byte-for-byte; the regression suite enforces that.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from uibench.llm import ReplayLlmClient
from uibench.pipeline import RunConfig, run_pipeline
from uibench.prompts import ADVANCED_TASKS

BASE = Path(__file__).resolve().parents[1] / "data/synthetic"


def canonical_config(out_dir: str) -> RunConfig:
    return RunConfig(
        annotations=str(BASE / "screens.jsonl"),
        out_dir=out_dir,
        seed=0,
        split="train",
        spotlight=str(BASE / "spotlight.jsonl"),
        fixtures=str(BASE / "fixtures.json"),
        advanced_tasks=ADVANCED_TASKS,
        mixture_spec=str(BASE / "mixture.json"),
    )


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        cfg = canonical_config(tmp)
        client = ReplayLlmClient.from_file(cfg.fixtures)
        manifest = run_pipeline(cfg, client=client).to_dict()
    expected = {
        "config": {k: v for k, v in manifest["config"].items()
                   if k not in ("annotations", "out_dir", "spotlight", "fixtures",
                                "mixture_spec", "images_dir")},
        "files": manifest["files"],
        "tree_hash": manifest["tree_hash"],
    }
    out = BASE / "expected_manifest.json"
    out.write_text(json.dumps(expected, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"froze {len(expected['files'])} file hashes, tree_hash={expected['tree_hash']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
