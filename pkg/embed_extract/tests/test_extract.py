"""Contract tests: manifest in, ingest-ready embeddings file out."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from embed_extract.backends import BuiltinBackend, classify_scene, make_backend
from embed_extract.cli import main
from embed_extract.extractor import ManifestError, extract, read_manifest

# the breach pipeline's parser is the authority on the file contract
from rpzaudit.ingest import parse_embeddings


def sky_image(seed=0) -> Image.Image:
    rng = np.random.default_rng(seed)
    arr = np.zeros((96, 128, 3), dtype=np.int16)
    for y in range(96):
        t = y / 96
        arr[y, :, 0] = int(90 + 40 * t)
        arr[y, :, 1] = int(140 + 40 * t)
        arr[y, :, 2] = int(235 - 30 * t)
    arr[64:] = (60, 150, 70)  # grass band
    arr = np.clip(arr + rng.integers(-10, 10, arr.shape), 0, 255).astype(np.uint8)
    return Image.fromarray(arr)


def room_image(seed=0) -> Image.Image:
    rng = np.random.default_rng(seed)
    arr = np.zeros((96, 128, 3), dtype=np.int16)
    arr[:] = (150, 110, 80)
    arr[70:] = (120, 80, 50)
    arr[20:40, 30:60] = (205, 190, 150)
    arr = np.clip(arr + rng.integers(-12, 12, arr.shape), 0, 255).astype(np.uint8)
    return Image.fromarray(arr)


def write_sample_set(root: Path) -> Path:
    """Five photos for two posts: two skies, two rooms, one byte-duplicate room."""
    root.mkdir(parents=True, exist_ok=True)
    sky_image(0).save(root / "sky0.png")
    sky_image(1).save(root / "sky1.png")
    room_image(0).save(root / "room0.png")
    room_image(1).save(root / "room1.png")
    (root / "room0_copy.png").write_bytes((root / "room0.png").read_bytes())
    manifest = root / "manifest.csv"
    manifest.write_text(
        "photo_id,post_id,path\n"
        "ph-sky0,post-a,sky0.png\n"
        "ph-sky1,post-a,sky1.png\n"
        "ph-room0,post-b,room0.png\n"
        "ph-room1,post-b,room1.png\n"
        "ph-room0-dup,post-b,room0_copy.png\n",
        encoding="utf-8",
    )
    return manifest


class TestManifest:
    def test_reads_and_resolves_relative_paths(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        rows = read_manifest(manifest)
        assert len(rows) == 5
        assert rows[0].path == tmp_path / "sky0.png"

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="header"):
            read_manifest(path)

    def test_duplicate_photo_id_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("photo_id,post_id,path\np1,a,x.png\np1,b,y.png\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="duplicate"):
            read_manifest(path)


class TestExtract:
    def test_round_trip_through_pipeline_ingest_with_zero_rejects(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        out = tmp_path / "embeddings.jsonl"
        stats = extract(manifest, out)
        assert stats.written == 5 and stats.skipped == 0
        with out.open("r", encoding="utf-8") as fh:
            result = parse_embeddings(fh)
        assert len(result.entities) == 5
        assert not result.rejects
        assert len({p.dim for p in result.entities}) == 1

    def test_vectors_unit_norm(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        out = tmp_path / "embeddings.jsonl"
        extract(manifest, out)
        for line in out.read_text(encoding="utf-8").splitlines():
            vector = np.asarray(json.loads(line)["vector"])
            assert abs(float(np.linalg.norm(vector)) - 1.0) < 1e-4

    def test_duplicate_files_yield_identical_vectors(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        out = tmp_path / "embeddings.jsonl"
        extract(manifest, out)
        by_id = {json.loads(l)["photo_id"]: json.loads(l) for l in out.read_text().splitlines()}
        a = np.asarray(by_id["ph-room0"]["vector"])
        b = np.asarray(by_id["ph-room0-dup"]["vector"])
        assert by_id["ph-room0"]["scene_label"] == by_id["ph-room0-dup"]["scene_label"]
        cosine = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert cosine == pytest.approx(1.0, abs=1e-12)

    def test_rerun_byte_identical(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        first = tmp_path / "first.jsonl"
        second = tmp_path / "second.jsonl"
        extract(manifest, first)
        extract(manifest, second)
        assert first.read_bytes() == second.read_bytes()

    def test_scene_labels_separate_skies_from_rooms(self, tmp_path):
        manifest = write_sample_set(tmp_path)
        out = tmp_path / "embeddings.jsonl"
        extract(manifest, out)
        labels = {json.loads(l)["photo_id"]: json.loads(l)["scene_label"]
                  for l in out.read_text().splitlines()}
        assert labels["ph-sky0"] == "outdoor" and labels["ph-sky1"] == "outdoor"
        assert labels["ph-room0"] == "indoor" and labels["ph-room1"] == "indoor"

    def test_undecodable_image_skipped_into_sidecar(self, tmp_path):
        root = tmp_path
        write_sample_set(root)
        (root / "broken.png").write_text("this is not an image", encoding="utf-8")
        manifest = root / "manifest.csv"
        manifest.write_text(
            "photo_id,post_id,path\nph-ok,post-a,room0.png\nph-broken,post-a,broken.png\n",
            encoding="utf-8",
        )
        out = root / "embeddings.jsonl"
        stats = extract(manifest, out)
        assert stats.written == 1 and stats.skipped == 1
        ids = [json.loads(l)["photo_id"] for l in out.read_text().splitlines()]
        assert ids == ["ph-ok"]
        sidecar = (out.parent / (out.name + ".log")).read_text(encoding="utf-8")
        assert "ph-broken" in sidecar and "no vector emitted" in sidecar
        assert "confidence=0.0" in sidecar

    def test_missing_file_also_skipped(self, tmp_path):
        write_sample_set(tmp_path)
        manifest = tmp_path / "manifest.csv"
        manifest.write_text(
            "photo_id,post_id,path\nph-gone,post-a,nowhere.png\n", encoding="utf-8"
        )
        stats = extract(manifest, tmp_path / "out.jsonl")
        assert stats.written == 0 and stats.skipped == 1


class TestBackend:
    def test_featureless_image_is_unknown(self):
        grey = Image.fromarray(np.full((96, 128, 3), 100, dtype=np.uint8))
        label, confidence = classify_scene(grey)
        assert label == "unknown"
        assert confidence < 0.6

    def test_builtin_dim(self):
        backend = BuiltinBackend()
        vector = backend.encode(room_image())
        assert vector.shape == (backend.dim,)

    def test_unknown_backend_name(self):
        with pytest.raises(ValueError, match="unknown backend"):
            make_backend("mystery")


class TestCli:
    def test_cli_end_to_end(self, tmp_path, capsys):
        manifest = write_sample_set(tmp_path)
        out = tmp_path / "emb.jsonl"
        code = main(["--manifest", str(manifest), "--out", str(out), "--batch-size", "4"])
        assert code == 0
        assert out.exists()
        assert "wrote 5 records" in capsys.readouterr().out

    def test_cli_missing_manifest(self, tmp_path):
        assert main(["--manifest", str(tmp_path / "no.csv"), "--out", str(tmp_path / "o")]) == 2

    def test_cli_bad_manifest(self, tmp_path):
        bad = tmp_path / "m.csv"
        bad.write_text("x,y\n", encoding="utf-8")
        assert main(["--manifest", str(bad), "--out", str(tmp_path / "o")]) == 1
