"""Command line interface.

Subcommands mirror the pipeline stages: ingest, group, gen
(elementary|spotlight|advanced), partition, som, mix, stats, eval, and
pipeline for the whole flow.  Exit codes: 0 success, 2 validation failure
(bad arguments or inputs), 3 stage failure at runtime.  The only
environment variables honored are the LLM credential settings.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .advanced import load_advanced_prompts, run_advgen
from .evaluation import EvalRecord, aggregate, judge_records, load_judge_rubric, make_eval_records
from .grouping import GroupingConfig, group_screen_elements
from .ingest import ingest_paths
from .llm import client_from_args
from .mixstats import MixtureSpec, corpus_stats, sample_mixture, trigrams_csv
from .pipeline import RunConfig, StageError, run_pipeline
from .prompts import ADVANCED_TASKS, load_pool
from .screens import (
    ScreenAnnotation,
    make_header,
    read_jsonl,
    read_screens,
    write_jsonl,
    write_screens,
)
from .som import SomStyle, render_som, save_png
from .taskgen import TaskSample, cap_test_set, generate_elementary, generate_spotlight, load_icon_classes
from .tiling import GridConfig, plan_tiles, select_grid, split_image

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STAGE = 3


def _write_json(path: str | Path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def cmd_ingest(args) -> int:
    screens, report = ingest_paths(args.inputs)
    write_screens(args.output, screens, header=make_header(__version__))
    if args.report:
        _write_json(args.report, report.to_dict())
    print(f"ingested {report.screens_out}/{report.screens_in} screens, "
          f"{report.elements_out}/{report.elements_in} elements, "
          f"{len(report.rejects)} rejects")
    return EXIT_OK


def _grouping_config(args) -> GroupingConfig:
    return GroupingConfig(
        line_merge_gap=args.line_gap,
        horizontal_overlap_min=args.overlap,
        caption_gap=args.caption_gap,
    )


def cmd_group(args) -> int:
    cfg = _grouping_config(args)
    screens = read_screens(args.input)
    grouped = [
        ScreenAnnotation(
            screen_id=s.screen_id, platform=s.platform, width=s.width, height=s.height,
            elements=group_screen_elements(s.elements, cfg),
            image_path=s.image_path, extra=s.extra,
        )
        for s in screens
    ]
    write_screens(args.output, grouped, header=make_header(__version__))
    print(f"grouped {len(grouped)} screens")
    return EXIT_OK


def _write_samples(out_dir: Path, rel: str, samples: list[TaskSample]) -> None:
    write_jsonl(out_dir / rel, (s.to_dict() for s in samples), header=make_header(__version__))


def cmd_gen_elementary(args) -> int:
    pool = load_pool(args.pool)
    icon_classes = load_icon_classes(args.icon_classes)
    screens = read_screens(args.annotations)
    if args.platform:
        screens = [s for s in screens if s.platform == args.platform]
    samples = generate_elementary(screens, pool, args.seed, args.split, icon_classes)
    out_dir = Path(args.out_dir)
    by_file: dict[tuple[str, str], list[TaskSample]] = {}
    for s in samples:
        by_file.setdefault((s.platform, s.task), []).append(s)
    for (platform, task), bucket in sorted(by_file.items()):
        if args.split == "test":
            bucket = cap_test_set(bucket, task, args.seed)
        _write_samples(out_dir, f"{platform}/{task}.{args.split}.jsonl", bucket)
    print(f"generated {len(samples)} elementary samples over {len(screens)} screens")
    return EXIT_OK


def cmd_gen_spotlight(args) -> int:
    pool = load_pool(args.pool)
    records = list(read_jsonl(args.records))
    samples = generate_spotlight(records, pool, args.seed, args.split)
    out_dir = Path(args.out_dir)
    by_task: dict[str, list[TaskSample]] = {}
    for s in samples:
        by_task.setdefault(s.task, []).append(s)
    for task, bucket in sorted(by_task.items()):
        if args.split == "test":
            bucket = cap_test_set(bucket, task, args.seed)
        _write_samples(out_dir, f"{task}.{args.split}.jsonl", bucket)
    print(f"reformatted {len(samples)} records")
    return EXIT_OK


def cmd_gen_advanced(args) -> int:
    pool = load_pool(args.pool)
    prompts = load_advanced_prompts(args.prompts)
    client = client_from_args(args.fixtures, args.endpoint, args.model)
    screens = read_screens(args.annotations)
    tasks = list(ADVANCED_TASKS) if args.task == "all" else [args.task]
    out_dir = Path(args.out_dir)
    for task in tasks:
        samples, report = run_advgen(
            screens, task, client, args.seed, pool=pool, prompts=prompts,
            split=args.split, snap_tolerance=args.snap_tolerance,
            max_workers=args.workers,
        )
        _write_samples(out_dir, f"{task}.{args.split}.jsonl", samples)
        _write_json(out_dir / f"report.{task}.json", report.to_dict())
        print(f"{task}: sent={report.sent} parsed={report.parsed} "
              f"dropped={sum(report.dropped.values())}")
    return EXIT_OK


def cmd_partition(args) -> int:
    grid_cfg = GridConfig(base_resolution=args.base)
    screens = read_screens(args.annotations)
    out_dir = Path(args.out_dir)
    records = []
    for s in screens:
        grid = select_grid(s.width, s.height)
        tiles = plan_tiles(s.width, s.height, grid, grid_cfg)
        records.append(
            {"screen_id": s.screen_id, "grid": list(grid), "tiles": [t.to_dict() for t in tiles]}
        )
        if args.images:
            from PIL import Image

            name = s.image_path or f"{s.screen_id}.png"
            with Image.open(Path(args.images) / name) as img:
                _, tile_imgs = split_image(img.convert("RGB"), grid, grid_cfg)
            for i, tile in enumerate(tile_imgs):
                out_dir.mkdir(parents=True, exist_ok=True)
                save_png(tile, out_dir / f"{s.screen_id}.tile{i}.png")
    write_jsonl(out_dir / "tiles.jsonl", records, header=make_header(__version__))
    print(f"planned tiles for {len(records)} screens")
    return EXIT_OK


def cmd_som(args) -> int:
    from PIL import Image

    screens = read_screens(args.annotations)
    if args.screen_id:
        screens = [s for s in screens if s.screen_id == args.screen_id]
    if not screens:
        raise ValueError("no matching screen annotation")
    screen = screens[0]
    style = SomStyle(stroke=args.stroke, font_size=args.font_size)
    with Image.open(args.image) as img:
        annotated, label_map = render_som(img.convert("RGB"), screen, style)
    save_png(annotated, args.out_image)
    Path(args.out_map).write_text(label_map.to_json() + "\n", encoding="utf-8")
    print(f"rendered {len(label_map.labels)} labels")
    return EXIT_OK


def cmd_mix(args) -> int:
    spec = MixtureSpec.from_file(args.spec)
    mixed = sample_mixture(spec, base_dir=args.base_dir)
    write_jsonl(args.out, mixed, header=make_header(__version__))
    print(f"sampled {len(mixed)} records")
    return EXIT_OK


def cmd_stats(args) -> int:
    dataset = list(read_jsonl(args.input))
    stats = corpus_stats(dataset, args.role)
    _write_json(args.out, stats.to_dict(args.top_k))
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(trigrams_csv(stats, args.top_k), encoding="utf-8")
    print(f"vocab={stats.vocab_size} tokens={stats.total_tokens} turns={stats.turns}")
    return EXIT_OK


def cmd_eval(args) -> int:
    samples = [TaskSample.from_dict(r) for r in read_jsonl(args.gold)]
    if args.task != "all":
        samples = [s for s in samples if s.task == args.task]
    predictions: dict[str, str] = {}
    for rec in read_jsonl(args.pred):
        predictions[str(rec["sample_id"])] = str(rec.get("prediction", ""))
    records = make_eval_records(samples, predictions)
    advanced = [r for r in records if r.task in ADVANCED_TASKS]
    if advanced:
        if not (args.judge_fixtures or (args.endpoint and args.model)):
            raise ValueError("advanced tasks need --judge-fixtures or a live judge endpoint")
        client = client_from_args(args.judge_fixtures, args.endpoint, args.model)
        rubric = load_judge_rubric(args.rubric)
        counts = judge_records(advanced, client, rubric, max_workers=args.workers)
        print(f"judged={counts['judged']} excluded={counts['excluded']}")
    report = aggregate(records, iou_threshold=args.iou)
    _write_json(args.out, report.to_dict())
    if args.table:
        print(report.format_table())
    return EXIT_OK


def cmd_pipeline(args) -> int:
    advanced_tasks: tuple[str, ...] = ()
    if args.advanced != "none":
        advanced_tasks = ADVANCED_TASKS if args.advanced == "all" else (args.advanced,)
    cfg = RunConfig(
        annotations=args.annotations,
        out_dir=args.out,
        seed=args.seed,
        split=args.split,
        platform=args.platform,
        spotlight=args.spotlight,
        fixtures=args.fixtures,
        advanced_tasks=advanced_tasks,
        mixture_spec=args.mix_spec,
        images_dir=args.images,
        partition=args.partition,
        render_som=args.som,
        pool_path=args.pool,
        icon_classes_path=args.icon_classes,
        base_resolution=args.base,
        grouping=_grouping_config(args),
        snap_tolerance=args.snap_tolerance,
        max_workers=args.workers,
        stats_k=args.top_k,
    )
    client = None
    if advanced_tasks:
        client = client_from_args(args.fixtures, args.endpoint, args.model)
    manifest = run_pipeline(cfg, client=client)
    print(f"pipeline OK: {len(manifest.files)} files, tree_hash={manifest.to_dict()['tree_hash']}")
    return EXIT_OK


def _add_llm_flags(p: argparse.ArgumentParser, fixtures_flag: str = "--fixtures") -> None:
    p.add_argument(fixtures_flag, default=None,
                   help="replay fixture JSON; forces offline mode")
    p.add_argument("--endpoint", default=None, help="live LLM endpoint URL")
    p.add_argument("--model", default=None, help="live LLM model name")


def _add_grouping_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--line-gap", type=float, default=0.6,
                   help="line merge gap as a fraction of median text height")
    p.add_argument("--overlap", type=float, default=0.5,
                   help="min horizontal overlap fraction of the narrower box")
    p.add_argument("--caption-gap", type=float, default=0.15,
                   help="max picture-caption gap as a fraction of picture height")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uibench",
        description="Mobile UI dataset generation and evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate raw detector output")
    p.add_argument("inputs", nargs="+", help="detector JSON/JSONL files or directories")
    p.add_argument("--output", required=True, help="validated annotations JSONL")
    p.add_argument("--report", default=None, help="reject report JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("group", help="merge text lines and picture captions")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_grouping_flags(p)
    p.set_defaults(func=cmd_group)

    gen = sub.add_parser("gen", help="generate task samples").add_subparsers(
        dest="gen_kind", required=True
    )

    p = gen.add_parser("elementary", help="template tasks from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--platform", choices=["iphone", "android"], default=None)
    p.add_argument("--pool", default=None, help="prompt pool JSON override")
    p.add_argument("--icon-classes", default=None, help="icon taxonomy file override")
    p.set_defaults(func=cmd_gen_elementary)

    p = gen.add_parser("spotlight", help="reformat summary/caption/tap records")
    p.add_argument("--records", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--pool", default=None)
    p.set_defaults(func=cmd_gen_spotlight)

    p = gen.add_parser("advanced", help="LLM-generated free-form tasks")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--task", choices=list(ADVANCED_TASKS) + ["all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--pool", default=None)
    p.add_argument("--prompts", default=None, help="advanced prompt file override")
    p.add_argument("--snap-tolerance", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    _add_llm_flags(p)
    p.set_defaults(func=cmd_gen_advanced)

    p = sub.add_parser("partition", help="plan or render screen tiles")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--images", default=None, help="screenshot directory")
    p.add_argument("--base", type=int, default=336, help="tile side in pixels")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("som", help="render a numbered overlay for one screen")
    p.add_argument("--annotations", required=True)
    p.add_argument("--screen-id", default=None)
    p.add_argument("--image", required=True)
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-map", required=True)
    p.add_argument("--stroke", type=int, default=4)
    p.add_argument("--font-size", type=int, default=14)
    p.set_defaults(func=cmd_som)

    p = sub.add_parser("mix", help="sample a training mixture")
    p.add_argument("--spec", required=True, help="mixture spec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--base-dir", default=None, help="base for relative pool paths")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("stats", help="vocabulary and trigram statistics")
    p.add_argument("--input", required=True, help="dataset JSONL")
    p.add_argument("--role", choices=["user", "assistant", "both"], default="both")
    p.add_argument("--out", required=True, help="stats JSON")
    p.add_argument("--csv", default=None, help="optional top-k trigram CSV")
    p.add_argument("--top-k", type=int, default=20)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="score predictions against gold samples")
    p.add_argument("--task", default="all")
    p.add_argument("--gold", required=True, help="gold dataset JSONL")
    p.add_argument("--pred", required=True, help="predictions JSONL {sample_id, prediction}")
    p.add_argument("--out", required=True, help="metric report JSON")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--table", action="store_true", help="print the report table")
    p.add_argument("--rubric", default=None, help="judge rubric override")
    p.add_argument("--workers", type=int, default=1)
    _add_llm_flags(p, "--judge-fixtures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--platform", choices=["iphone", "android"], default=None)
    p.add_argument("--spotlight", default=None, help="summary/caption/tap records JSONL")
    p.add_argument("--advanced", choices=list(ADVANCED_TASKS) + ["all", "none"], default="none")
    p.add_argument("--mix-spec", default=None)
    p.add_argument("--images", default=None)
    p.add_argument("--partition", action="store_true")
    p.add_argument("--som", action="store_true")
    p.add_argument("--pool", default=None)
    p.add_argument("--icon-classes", default=None)
    p.add_argument("--base", type=int, default=336)
    p.add_argument("--snap-tolerance", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--top-k", type=int, default=20)
    _add_grouping_flags(p)
    _add_llm_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
