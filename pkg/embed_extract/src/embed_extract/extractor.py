"""Manifest-driven extraction into the embeddings file contract.

Input: a 3-column UTF-8 CSV (header `photo_id,post_id,path`). Output: one
JSON line per decodable photo with `photo_id, post_id, scene_label, dim,
vector`, which is exactly what the breach pipeline's ingest expects.

Undecodable images never abort a batch: they are noted in a sidecar log
(`<out>.log`) with scene_label unknown and zero confidence, and no record
is emitted for them. The output file is written atomically (temp file,
then rename), so a crashed run never leaves a half-written contract file.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .backends import make_backend

MANIFEST_COLUMNS = ("photo_id", "post_id", "path")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    photo_id: str
    post_id: str
    path: Path


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse and validate the manifest CSV: header, uniqueness, no blanks."""
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    base = Path(path).parent
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_COLUMNS)}, got {reader.fieldnames}"
            )
        for line_no, record in enumerate(reader, start=2):
            photo_id = (record["photo_id"] or "").strip()
            post_id = (record["post_id"] or "").strip()
            raw_path = (record["path"] or "").strip()
            if not photo_id or not post_id or not raw_path:
                raise ManifestError(f"manifest line {line_no}: empty field")
            if photo_id in seen:
                raise ManifestError(f"manifest line {line_no}: duplicate photo_id {photo_id!r:.60}")
            seen.add(photo_id)
            file_path = Path(raw_path)
            if not file_path.is_absolute():
                file_path = base / file_path
            rows.append(ManifestRow(photo_id, post_id, file_path))
    return rows


@dataclass
class ExtractStats:
    written: int = 0
    skipped: int = 0
    unknown_label: int = 0


def extract(
    manifest_path: str | Path,
    out_path: str | Path,
    backend_name: str = "builtin",
    batch_size: int = 16,
) -> ExtractStats:
    """Run the extraction; returns counts. See module docstring for contract."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rows = read_manifest(manifest_path)
    backend = make_backend(backend_name)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    stats = ExtractStats()
    sidecar_lines: list[str] = [f"backend={backend.name}"]
    records: list[str] = []

    for row in rows:
        try:
            with Image.open(row.path) as image:
                image.load()
                label, confidence = backend.scene(image)
                vector = backend.encode(image)
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            stats.skipped += 1
            sidecar_lines.append(
                f"SKIP {row.photo_id}: scene_label=unknown confidence=0.0 "
                f"no vector emitted ({type(exc).__name__}: {exc})"
            )
            continue
        if label == "unknown":
            stats.unknown_label += 1
        sidecar_lines.append(f"OK {row.photo_id}: scene_label={label} confidence={confidence:.3f}")
        records.append(
            json.dumps(
                {
                    "photo_id": row.photo_id,
                    "post_id": row.post_id,
                    "scene_label": label,
                    "dim": int(vector.shape[0]),
                    "vector": [float(v) for v in vector],
                },
                ensure_ascii=False,
            )
        )
        stats.written += 1

    # atomic publish: the contract file either fully exists or not at all
    fd, temp_name = tempfile.mkstemp(dir=out_path.parent, prefix=out_path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for line in records:
                fh.write(line + "\n")
        os.replace(temp_name, out_path)
    except BaseException:
        os.unlink(temp_name)
        raise

    sidecar = out_path.with_suffix(out_path.suffix + ".log")
    sidecar.write_text("\n".join(sidecar_lines) + "\n", encoding="utf-8")
    return stats
