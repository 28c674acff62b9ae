"""Batch pipeline: stage outputs, manifest hashing, failure handling."""

import json
from pathlib import Path

import pytest

from conftest import DATA_DIR, gradient_image
from uibench.geometry import BBox
from uibench.pipeline import (
    Manifest,
    RunConfig,
    StageError,
    file_sha256,
    run_pipeline,
    tree_hash,
)
from uibench.screens import (
    ScreenAnnotation,
    UIElement,
    is_header,
    make_header,
    read_jsonl,
    write_screens,
)


def base_config(out_dir, **overrides):
    cfg = dict(
        annotations=str(DATA_DIR / "screens.jsonl"),
        out_dir=str(out_dir),
        spotlight=str(DATA_DIR / "spotlight.jsonl"),
        mixture_spec=str(DATA_DIR / "mixture.json"),
    )
    cfg.update(overrides)
    return RunConfig(**cfg)


@pytest.fixture(scope="module")
def basic_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipe")
    manifest = run_pipeline(base_config(out))
    return out, manifest


class TestHashing:
    def test_file_sha256(self, tmp_path):
        p = tmp_path / "f.bin"
        p.write_bytes(b"abc")
        assert file_sha256(p) == (
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        )

    def test_tree_hash_order_independent(self):
        a = tree_hash({"x.jsonl": "1" * 64, "y.jsonl": "2" * 64})
        b = tree_hash({"y.jsonl": "2" * 64, "x.jsonl": "1" * 64})
        assert a == b
        assert a != tree_hash({"x.jsonl": "1" * 64})


class TestBasicRun:
    def test_status_ok(self, basic_run):
        _, manifest = basic_run
        assert manifest.status == "OK"
        assert manifest.failed_stage is None

    def test_expected_file_set(self, basic_run):
        _, manifest = basic_run
        files = set(manifest.files)
        assert "grouped/screens.jsonl" in files
        for platform in ("iphone", "android"):
            for task in ("ocr", "icon_recognition", "widget_classification",
                         "find_text", "find_icon", "find_widget", "widget_listing"):
                assert f"elementary/{platform}/{task}.train.jsonl" in files
        for task in ("screen2words", "widget_captions", "taperception"):
            assert f"spotlight/{task}.train.jsonl" in files
        assert "mixture/mixture.jsonl" in files
        assert "stats/corpus_stats.json" in files
        assert "stats/trigrams.csv" in files
        assert "datasets.json" in files
        assert len(files) == 22
        assert "manifest.json" not in files

    def test_manifest_hashes_match_disk(self, basic_run):
        out, manifest = basic_run
        for rel, digest in manifest.files.items():
            assert file_sha256(out / rel) == digest, rel
        assert manifest.to_dict()["tree_hash"] == tree_hash(manifest.files)

    def test_headers_are_path_free(self, basic_run):
        out, _ = basic_run
        first = json.loads(
            (out / "grouped/screens.jsonl").read_text().splitlines()[0])
        assert is_header(first)
        config = first["__header__"]["config"]
        assert "annotations" not in config
        assert "out_dir" not in config
        assert config["seed"] == 0
        assert config["grouping"]["line_merge_gap"] == 0.6

    def test_mixture_size(self, basic_run):
        out, _ = basic_run
        mixed = list(read_jsonl(out / "mixture/mixture.jsonl"))
        assert len(mixed) == 12

    def test_catalog_sorted_and_complete(self, basic_run):
        out, manifest = basic_run
        catalog = json.loads((out / "datasets.json").read_text())
        paths = [d["path"] for d in catalog["datasets"]]
        assert paths == sorted(paths)
        data_files = {p for p in manifest.files
                      if p.endswith(".jsonl") and not p.startswith("grouped/")}
        assert set(paths) == data_files
        for entry in catalog["datasets"]:
            assert entry["samples"] >= 0
            assert entry["split"] == "train"

    def test_manifest_written_to_disk(self, basic_run):
        out, manifest = basic_run
        on_disk = json.loads((out / "manifest.json").read_text())
        assert on_disk == manifest.to_dict()

    def test_rerun_reproduces_tree_hash(self, basic_run, tmp_path):
        _, manifest = basic_run
        again = run_pipeline(base_config(tmp_path))
        assert again.to_dict()["tree_hash"] == manifest.to_dict()["tree_hash"]
        assert again.files == manifest.files


class TestVariants:
    def test_platform_filter(self, tmp_path):
        manifest = run_pipeline(RunConfig(
            annotations=str(DATA_DIR / "screens.jsonl"),
            out_dir=str(tmp_path), platform="iphone"))
        elementary = [p for p in manifest.files if p.startswith("elementary/")]
        assert elementary
        assert all(p.startswith("elementary/iphone/") for p in elementary)

    def test_test_split_file_names(self, tmp_path):
        manifest = run_pipeline(RunConfig(
            annotations=str(DATA_DIR / "screens.jsonl"),
            out_dir=str(tmp_path), split="test"))
        assert "elementary/iphone/ocr.test.jsonl" in manifest.files

    def test_partition_without_images(self, tmp_path):
        manifest = run_pipeline(RunConfig(
            annotations=str(DATA_DIR / "screens.jsonl"),
            out_dir=str(tmp_path), partition=True))
        assert "partition/tiles.jsonl" in manifest.files
        assert not any(p.endswith(".png") for p in manifest.files)
        tiles = list(read_jsonl(tmp_path / "partition/tiles.jsonl"))
        assert len(tiles) == 20
        for rec in tiles:
            assert rec["grid"] in ([1, 2], [2, 1])
            assert len(rec["tiles"]) == 2


class TestImageStages:
    @pytest.fixture()
    def mini_corpus(self, tmp_path):
        screens = [
            ScreenAnnotation("mini-0", "iphone", 100, 200, (
                UIElement("a", "Text", BBox(10, 10, 90, 30), text="Top text"),
                UIElement("b", "Button", BBox(10, 100, 90, 130), text="Go"),
            )),
            ScreenAnnotation("mini-1", "android", 200, 100, (
                UIElement("a", "Icon", BBox(20, 20, 60, 60), text="menu"),
            )),
        ]
        ann = tmp_path / "screens.jsonl"
        write_screens(ann, screens, header=make_header("test"))
        images = tmp_path / "images"
        images.mkdir()
        for s in screens:
            gradient_image(int(s.width), int(s.height)).save(
                images / f"{s.screen_id}.png")
        return ann, images, tmp_path / "out"

    def test_partition_and_som_render(self, mini_corpus):
        ann, images, out = mini_corpus
        manifest = run_pipeline(RunConfig(
            annotations=str(ann), out_dir=str(out), images_dir=str(images),
            partition=True, render_som=True, base_resolution=48))
        for screen_id in ("mini-0", "mini-1"):
            assert f"partition/{screen_id}.tile0.png" in manifest.files
            assert f"partition/{screen_id}.tile1.png" in manifest.files
            assert f"som/{screen_id}.png" in manifest.files
            assert f"som/{screen_id}.map.json" in manifest.files
        label_map = json.loads((out / "som/mini-0.map.json").read_text())
        assert set(label_map["labels"]) == {"1", "2"}

    def test_missing_image_fails_stage(self, mini_corpus):
        ann, images, out = mini_corpus
        (images / "mini-1.png").unlink()
        with pytest.raises(StageError) as exc_info:
            run_pipeline(RunConfig(
                annotations=str(ann), out_dir=str(out), images_dir=str(images),
                render_som=True))
        assert exc_info.value.stage == "som"


class TestFailureHandling:
    def test_bad_mixture_spec(self, tmp_path):
        with pytest.raises(StageError) as exc_info:
            run_pipeline(base_config(
                tmp_path, mixture_spec=str(tmp_path / "missing.json")))
        assert exc_info.value.stage == "mixture"
        on_disk = json.loads((tmp_path / "manifest.json").read_text())
        assert on_disk["status"] == "FAILED"
        assert on_disk["failed_stage"] == "mixture"
        # Earlier stages' outputs survive and stay listed.
        assert "grouped/screens.jsonl" in on_disk["files"]
        assert (tmp_path / "grouped/screens.jsonl").exists()

    def test_advanced_without_client(self, tmp_path):
        with pytest.raises(StageError) as exc_info:
            run_pipeline(RunConfig(
                annotations=str(DATA_DIR / "screens.jsonl"),
                out_dir=str(tmp_path),
                advanced_tasks=("detailed_description",)))
        assert exc_info.value.stage == "advanced"

    def test_missing_annotations(self, tmp_path):
        with pytest.raises(StageError) as exc_info:
            run_pipeline(RunConfig(
                annotations=str(tmp_path / "nope.jsonl"),
                out_dir=str(tmp_path / "out")))
        assert exc_info.value.stage == "group"
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["status"] == "FAILED"


class TestManifestModel:
    def test_to_dict_shape(self):
        m = Manifest(config={"seed": 1}, files={"a.jsonl": "0" * 64})
        d = m.to_dict()
        assert d["status"] == "OK"
        assert d["failed_stage"] is None
        assert d["config"] == {"seed": 1}
        assert d["tree_hash"] == tree_hash({"a.jsonl": "0" * 64})
        assert list(d["files"]) == ["a.jsonl"]
