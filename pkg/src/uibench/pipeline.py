"""End-to-end batch pipeline: annotations in, dataset tree out.

Stages run sequentially: group, optional partition/overlay rendering,
elementary generation per platform, optional reformatting of external
records, optional LLM generation, mixture sampling, and corpus stats.
Every written file lands in a manifest with its content hash plus a tree
hash over all outputs, so reruns are verifiable byte-for-byte.  A failing
stage halts the run, keeps partial outputs, and writes the manifest with
a FAILED marker naming the stage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .advanced import load_advanced_prompts, run_advgen
from .grouping import GroupingConfig, group_screen_elements
from .llm import LlmClient
from .mixstats import MixtureSpec, corpus_stats, sample_mixture, trigrams_csv
from .prompts import ADVANCED_TASKS, ELEMENTARY_TASKS, SPOTLIGHT_TASKS, load_pool
from .screens import (
    SCHEMA_VERSION,
    ScreenAnnotation,
    make_header,
    read_jsonl,
    read_screens,
    write_jsonl,
)
from .som import SomStyle, render_som, save_png
from .taskgen import (
    TaskSample,
    cap_test_set,
    generate_elementary,
    generate_spotlight,
    load_icon_classes,
)
from .tiling import GridConfig, plan_tiles, select_grid, split_image


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    """Resolved configuration for one pipeline run."""

    annotations: str
    out_dir: str
    seed: int = 0
    split: str = "train"
    platform: str | None = None
    spotlight: str | None = None
    fixtures: str | None = None
    advanced_tasks: tuple[str, ...] = ()
    mixture_spec: str | None = None
    images_dir: str | None = None
    partition: bool = False
    render_som: bool = False
    pool_path: str | None = None
    icon_classes_path: str | None = None
    base_resolution: int = 336
    grouping: GroupingConfig = field(default_factory=GroupingConfig)
    som_style: SomStyle = field(default_factory=SomStyle)
    snap_tolerance: int = 20
    max_workers: int = 1
    stats_k: int = 20

    def header_dict(self) -> dict:
        """Path-free resolved settings embedded in output headers."""
        return {
            "seed": self.seed,
            "split": self.split,
            "platform": self.platform,
            "base_resolution": self.base_resolution,
            "grouping": {
                "line_merge_gap": self.grouping.line_merge_gap,
                "horizontal_overlap_min": self.grouping.horizontal_overlap_min,
                "caption_gap": self.grouping.caption_gap,
            },
            "snap_tolerance": self.snap_tolerance,
            "advanced_tasks": list(self.advanced_tasks),
            "stats_k": self.stats_k,
        }

    def to_dict(self) -> dict:
        d = self.header_dict()
        d.update(
            {
                "annotations": self.annotations,
                "out_dir": self.out_dir,
                "spotlight": self.spotlight,
                "fixtures": self.fixtures,
                "mixture_spec": self.mixture_spec,
                "images_dir": self.images_dir,
                "partition": self.partition,
                "render_som": self.render_som,
                "max_workers": self.max_workers,
            }
        )
        return d


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_hash(files: dict[str, str]) -> str:
    """Order-independent hash of the {relpath: sha256} mapping."""
    listing = "\n".join(f"{p}  {h}" for p, h in sorted(files.items()))
    return hashlib.sha256(listing.encode("utf-8")).hexdigest()


@dataclass
class Manifest:
    config: dict
    status: str = "OK"
    failed_stage: str | None = None
    files: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool_version": __version__,
            "schema_version": SCHEMA_VERSION,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "config": self.config,
            "files": dict(sorted(self.files.items())),
            "tree_hash": tree_hash(self.files),
        }


class PipelineRun:
    """Tracks outputs and writes the manifest on success or failure."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.manifest = Manifest(config=cfg.to_dict())

    def record(self, path: Path) -> None:
        rel = path.relative_to(self.out).as_posix()
        self.manifest.files[rel] = file_sha256(path)

    def write_jsonl(self, rel: str, records, config: dict | None = None) -> Path:
        path = self.out / rel
        write_jsonl(path, records, header=make_header(__version__, config or self.cfg.header_dict()))
        self.record(path)
        return path

    def write_text(self, rel: str, text: str) -> Path:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.record(path)
        return path

    def write_manifest(self) -> Path:
        path = self.out / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.manifest.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)
            + "\n",
            encoding="utf-8",
        )
        return path


def _samples_by_file(samples: list[TaskSample]) -> dict[tuple[str, str, str], list[TaskSample]]:
    grouped: dict[tuple[str, str, str], list[TaskSample]] = {}
    for s in samples:
        grouped.setdefault((s.platform, s.task, s.split), []).append(s)
    return grouped


def run_pipeline(cfg: RunConfig, client: LlmClient | None = None) -> Manifest:
    """Run every configured stage; returns the manifest.

    Raises:
        StageError: a stage failed; the manifest on disk has the FAILED
            marker and whatever files earlier stages produced.
    """
    run = PipelineRun(cfg)
    stage = "setup"
    try:
        pool = load_pool(cfg.pool_path)
        icon_classes = load_icon_classes(cfg.icon_classes_path)
        catalog: list[dict] = []

        stage = "group"
        screens = read_screens(cfg.annotations)
        if cfg.platform:
            screens = [s for s in screens if s.platform == cfg.platform]
        grouped = [
            ScreenAnnotation(
                screen_id=s.screen_id,
                platform=s.platform,
                width=s.width,
                height=s.height,
                elements=group_screen_elements(s.elements, cfg.grouping),
                image_path=s.image_path,
                extra=s.extra,
            )
            for s in screens
        ]
        run.write_jsonl("grouped/screens.jsonl", (s.to_dict() for s in grouped))

        if cfg.partition:
            stage = "partition"
            _run_partition(run, grouped)

        if cfg.render_som:
            stage = "som"
            _run_som(run, grouped)

        stage = "elementary"
        samples = generate_elementary(grouped, pool, cfg.seed, cfg.split, icon_classes)
        elementary_paths: dict[str, list[str]] = {}
        platforms = sorted({s.platform for s in grouped})
        grouped_samples = _samples_by_file(samples)
        for platform in platforms:
            for task in ELEMENTARY_TASKS:
                bucket = grouped_samples.get((platform, task, cfg.split), [])
                if cfg.split == "test":
                    bucket = cap_test_set(bucket, task, cfg.seed)
                rel = f"elementary/{platform}/{task}.{cfg.split}.jsonl"
                run.write_jsonl(rel, (s.to_dict() for s in bucket))
                elementary_paths.setdefault(platform, []).append(rel)
                catalog.append(
                    {"path": rel, "task": task, "platform": platform,
                     "split": cfg.split, "samples": len(bucket)}
                )

        if cfg.spotlight:
            stage = "spotlight"
            records = list(read_jsonl(cfg.spotlight))
            spot_samples = generate_spotlight(records, pool, cfg.seed, cfg.split)
            by_task: dict[str, list[TaskSample]] = {}
            for s in spot_samples:
                by_task.setdefault(s.task, []).append(s)
            for task in SPOTLIGHT_TASKS:
                bucket = by_task.get(task, [])
                if not bucket:
                    continue
                if cfg.split == "test":
                    bucket = cap_test_set(bucket, task, cfg.seed)
                rel = f"spotlight/{task}.{cfg.split}.jsonl"
                run.write_jsonl(rel, (s.to_dict() for s in bucket))
                catalog.append(
                    {"path": rel, "task": task, "platform": "all",
                     "split": cfg.split, "samples": len(bucket)}
                )

        if cfg.advanced_tasks:
            stage = "advanced"
            if client is None:
                raise ValueError("advanced generation needs an LLM client (fixtures or live)")
            prompts = load_advanced_prompts()
            for task in cfg.advanced_tasks:
                adv_samples, report = run_advgen(
                    grouped, task, client, cfg.seed,
                    pool=pool, prompts=prompts, split=cfg.split,
                    snap_tolerance=cfg.snap_tolerance, max_workers=cfg.max_workers,
                )
                rel = f"advanced/{task}.{cfg.split}.jsonl"
                run.write_jsonl(rel, (s.to_dict() for s in adv_samples))
                run.write_text(
                    f"advanced/report.{task}.json",
                    json.dumps(report.to_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                )
                catalog.append(
                    {"path": rel, "task": task, "platform": "all",
                     "split": cfg.split, "samples": len(adv_samples)}
                )

        if cfg.mixture_spec:
            stage = "mixture"
            spec = MixtureSpec.from_file(cfg.mixture_spec)
            mixed = sample_mixture(spec, base_dir=run.out)
            run.write_jsonl("mixture/mixture.jsonl", mixed)
            catalog.append(
                {"path": "mixture/mixture.jsonl", "task": "mixture", "platform": "all",
                 "split": cfg.split, "samples": len(mixed)}
            )

        stage = "stats"
        if cfg.mixture_spec:
            stats_input = list(read_jsonl(run.out / "mixture/mixture.jsonl"))
        else:
            stats_input = [s.to_dict() for s in samples]
        if stats_input:
            stats = corpus_stats(stats_input, "both")
            run.write_text(
                "stats/corpus_stats.json",
                json.dumps(stats.to_dict(cfg.stats_k), ensure_ascii=False, sort_keys=True, indent=2)
                + "\n",
            )
            run.write_text("stats/trigrams.csv", trigrams_csv(stats, cfg.stats_k))

        stage = "catalog"
        run.write_text(
            "datasets.json",
            json.dumps(
                {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
                 "datasets": sorted(catalog, key=lambda d: d["path"])},
                ensure_ascii=False, sort_keys=True, indent=2,
            )
            + "\n",
        )
    except Exception as exc:
        run.manifest.status = "FAILED"
        run.manifest.failed_stage = stage
        run.write_manifest()
        raise StageError(stage, str(exc)) from exc

    run.write_manifest()
    return run.manifest


def _resolve_image(run: PipelineRun, screen: ScreenAnnotation) -> Path:
    images = Path(run.cfg.images_dir) if run.cfg.images_dir else None
    if images is None:
        raise ValueError("this stage needs --images")
    name = screen.image_path or f"{screen.screen_id}.png"
    path = images / name
    if not path.exists():
        raise ValueError(f"image not found for {screen.screen_id}: {path}")
    return path


def _run_partition(run: PipelineRun, screens: list[ScreenAnnotation]) -> None:
    grid_cfg = GridConfig(base_resolution=run.cfg.base_resolution)
    records = []
    have_images = run.cfg.images_dir is not None
    for s in screens:
        grid = select_grid(s.width, s.height)
        tiles = plan_tiles(s.width, s.height, grid, grid_cfg)
        records.append(
            {"screen_id": s.screen_id, "grid": list(grid),
             "tiles": [t.to_dict() for t in tiles]}
        )
        if have_images:
            from PIL import Image

            with Image.open(_resolve_image(run, s)) as img:
                _, tile_imgs = split_image(img.convert("RGB"), grid, grid_cfg)
            for i, tile in enumerate(tile_imgs):
                path = run.out / f"partition/{s.screen_id}.tile{i}.png"
                path.parent.mkdir(parents=True, exist_ok=True)
                save_png(tile, path)
                run.record(path)
    run.write_jsonl("partition/tiles.jsonl", records)


def _run_som(run: PipelineRun, screens: list[ScreenAnnotation]) -> None:
    from PIL import Image

    for s in screens:
        if not s.elements:
            continue
        with Image.open(_resolve_image(run, s)) as img:
            annotated, label_map = render_som(img.convert("RGB"), s, run.cfg.som_style)
        png_path = run.out / f"som/{s.screen_id}.png"
        png_path.parent.mkdir(parents=True, exist_ok=True)
        save_png(annotated, png_path)
        run.record(png_path)
        run.write_text(f"som/{s.screen_id}.map.json", label_map.to_json() + "\n")
