"""Restartable exporters producing the pipeline's interchange files.

Every exporter streams manifest records in order and appends each record's
bytes to ``<out>.part``, journaling progress to ``<out>.part.state.json``
after every batch. A rerun picks up exactly where the journal says the last
run stopped (truncating any torn tail), so a partial export plus a resume
yields byte-identical output to a single uninterrupted run. The final file
appears atomically via rename, together with a ``<out>.meta.json`` sidecar
pinning the model identifier and listing per-record errors.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engines import (
    load_rgb,
    make_aesthetic,
    make_embedder,
    make_similarity,
    make_spotter,
)
from .formats import (
    AESTHETIC_VARIANT,
    SIMILARITY_VARIANTS,
    embedding_row,
    embeddings_header,
    ocr_line,
    read_manifest,
    score_line,
)

DEFAULT_EMBEDDING_MODEL = "grid4"
DEFAULT_OCR_MODEL = "glyph5x7"
DEFAULT_SIMILARITY_MODEL = "cosine-grid4"
DEFAULT_AESTHETIC_MODEL = "contrast-v1"
DEFAULT_BATCH = 32


@dataclass
class AdapterConfig:
    """Model selection and batching shared by the exporters."""

    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    ocr_model: str = DEFAULT_OCR_MODEL
    similarity_model: str = DEFAULT_SIMILARITY_MODEL
    aesthetic_model: str = DEFAULT_AESTHETIC_MODEL
    batch: int = DEFAULT_BATCH
    device: str = "cpu"  # hint for engines that can use accelerators
    limit: int | None = None  # per-invocation record cap; None = run to completion

    def validate(self) -> None:
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.limit is not None and self.limit < 1:
            raise ValueError(f"limit must be >= 1, got {self.limit}")


@dataclass
class ExportSummary:
    out: Path
    total: int
    done: int
    finished: bool
    errors: list[dict] = field(default_factory=list)


class _Checkpoint:
    """Append-only partial file plus an atomically replaced progress journal."""

    def __init__(self, out: Path, model: str, header: bytes):
        self.out = out
        self.part = out.with_name(out.name + ".part")
        self.state_path = out.with_name(out.name + ".part.state.json")
        self.model = model
        self.header = header
        self.done = 0
        self.errors: list[dict] = []
        self._offset = len(header)
        if not self._resume():
            out.parent.mkdir(parents=True, exist_ok=True)
            self.part.write_bytes(header)
            self.done, self.errors, self._offset = 0, [], len(header)
            self._write_state()
        self._fh = open(self.part, "ab")

    def _resume(self) -> bool:
        if not (self.part.exists() and self.state_path.exists()):
            return False
        try:
            state = json.loads(self.state_path.read_text(encoding="utf-8"))
            done, offset = int(state["done"]), int(state["offset"])
            errors, model = list(state["errors"]), str(state["model"])
        except (OSError, ValueError, KeyError, TypeError):
            return False
        size = self.part.stat().st_size
        if model != self.model or offset < len(self.header) or offset > size:
            return False
        with open(self.part, "rb") as fh:
            if fh.read(len(self.header)) != self.header:
                return False
        if size > offset:  # torn tail from an interrupted batch
            os.truncate(self.part, offset)
        self.done, self.errors, self._offset = done, errors, offset
        return True

    def _write_state(self) -> None:
        payload = json.dumps(
            {"done": self.done, "errors": self.errors, "model": self.model, "offset": self._offset},
            sort_keys=True, separators=(",", ":"),
        )
        tmp = self.state_path.with_name(self.state_path.name + ".tmp")
        tmp.write_text(payload + "\n", encoding="utf-8")
        os.replace(tmp, self.state_path)

    def record_done(self, data: bytes, errors: list[dict] | None = None) -> None:
        self._fh.write(data)
        self._offset += len(data)
        self.done += 1
        if errors:
            self.errors.extend(errors)

    def commit(self) -> None:
        self._fh.flush()
        self._write_state()

    def suspend(self) -> None:
        self.commit()
        self._fh.close()

    def finish(self, meta: dict) -> None:
        self._fh.flush()
        self._fh.close()
        os.replace(self.part, self.out)
        payload = dict(meta)
        payload["errors"] = self.errors
        meta_path = self.out.with_name(self.out.name + ".meta.json")
        meta_path.write_text(
            json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )
        self.state_path.unlink(missing_ok=True)


def _summary(cp: _Checkpoint, total: int, finished: bool) -> ExportSummary:
    return ExportSummary(out=cp.out, total=total, done=cp.done,
                         finished=finished, errors=list(cp.errors))


def export_embeddings(
    manifest: str | Path,
    out: str | Path,
    model: str = DEFAULT_EMBEDDING_MODEL,
    batch: int = DEFAULT_BATCH,
    limit: int | None = None,
    images_root: str | Path | None = None,
) -> ExportSummary:
    """One float32 row per manifest record; unreadable images embed as zeros."""
    AdapterConfig(embedding_model=model, batch=batch, limit=limit).validate()
    rows = read_manifest(manifest)
    root = Path(images_root) if images_root is not None else Path(manifest).parent
    embedder = make_embedder(model)
    cp = _Checkpoint(Path(out), model, embeddings_header(len(rows), embedder.dim))
    zero = np.zeros(embedder.dim, dtype="<f4")

    processed = 0
    for row in rows[cp.done:]:
        if limit is not None and processed >= limit:
            cp.suspend()
            return _summary(cp, len(rows), finished=False)
        errs = None
        try:
            vector = embedder.embed(load_rgb(root / row.image))
        except Exception as exc:
            vector = zero
            errs = [{"id": row.id, "reason": f"{type(exc).__name__} while embedding '{row.image}'"}]
        cp.record_done(embedding_row(vector, embedder.dim), errs)
        processed += 1
        if processed % batch == 0:
            cp.commit()
    cp.finish({"model": model, "count": len(rows), "dim": embedder.dim})
    return _summary(cp, len(rows), finished=True)


def export_ocr(
    manifest: str | Path,
    out: str | Path,
    model: str = DEFAULT_OCR_MODEL,
    batch: int = DEFAULT_BATCH,
    limit: int | None = None,
    images_root: str | Path | None = None,
) -> ExportSummary:
    """One spans line per readable image (empty list when no text is found);
    records the model could not process are omitted and listed in the sidecar.
    """
    AdapterConfig(ocr_model=model, batch=batch, limit=limit).validate()
    rows = read_manifest(manifest)
    root = Path(images_root) if images_root is not None else Path(manifest).parent
    spotter = make_spotter(model)
    cp = _Checkpoint(Path(out), model, b"")

    processed = 0
    for row in rows[cp.done:]:
        if limit is not None and processed >= limit:
            cp.suspend()
            return _summary(cp, len(rows), finished=False)
        try:
            data = ocr_line(row.id, spotter.spot(load_rgb(root / row.image)))
            errs = None
        except Exception as exc:
            data = b""
            errs = [{"id": row.id, "reason": f"{type(exc).__name__} while spotting '{row.image}'"}]
        cp.record_done(data, errs)
        processed += 1
        if processed % batch == 0:
            cp.commit()
    cp.finish({"model": model, "count": cp.done - len(cp.errors)})
    return _summary(cp, len(rows), finished=True)


def export_scores(
    manifest: str | Path,
    variants: str | Path,
    out: str | Path,
    model: str = DEFAULT_SIMILARITY_MODEL,
    aesthetic_model: str = DEFAULT_AESTHETIC_MODEL,
    batch: int = DEFAULT_BATCH,
    limit: int | None = None,
) -> ExportSummary:
    """Similarity rows for every present ``<id>.<variant>.png`` plus one
    aesthetic row per readable raw image; missing variants are counted, not
    written.
    """
    AdapterConfig(similarity_model=model, aesthetic_model=aesthetic_model,
                  batch=batch, limit=limit).validate()
    rows = read_manifest(manifest)
    variants_dir = Path(variants)
    similarity = make_similarity(model)
    aesthetic = make_aesthetic(aesthetic_model)
    tag = f"{model}+{aesthetic_model}"
    header = (f"# model={model} aesthetic={aesthetic_model}\n"
              "id,variant,score\n").encode("utf-8")
    cp = _Checkpoint(Path(out), tag, header)

    processed = 0
    for row in rows[cp.done:]:
        if limit is not None and processed >= limit:
            cp.suspend()
            return _summary(cp, len(rows), finished=False)
        blob = b""
        errs: list[dict] = []
        for variant in SIMILARITY_VARIANTS:
            path = variants_dir / f"{row.id}.{variant}.png"
            if not path.exists():
                errs.append({"id": row.id, "variant": variant, "reason": "variant image missing"})
                continue
            try:
                value = similarity.score(load_rgb(path), row.caption)
            except Exception as exc:
                errs.append({"id": row.id, "variant": variant,
                             "reason": f"{type(exc).__name__} while scoring"})
                continue
            blob += score_line(row.id, variant, value)
        raw_path = variants_dir / f"{row.id}.raw.png"
        if raw_path.exists():
            try:
                blob += score_line(row.id, AESTHETIC_VARIANT, aesthetic.score(load_rgb(raw_path)))
            except Exception as exc:
                errs.append({"id": row.id, "variant": AESTHETIC_VARIANT,
                             "reason": f"{type(exc).__name__} while scoring"})
        else:
            errs.append({"id": row.id, "variant": AESTHETIC_VARIANT,
                         "reason": "variant image missing"})
        cp.record_done(blob, errs)
        processed += 1
        if processed % batch == 0:
            cp.commit()

    cp.commit()  # flush so the row recount below sees every byte
    written = cp.part.read_bytes().count(b"\n") - header.count(b"\n")
    cp.finish({"model": model, "aesthetic_model": aesthetic_model,
               "count": len(rows), "rows": written})
    return _summary(cp, len(rows), finished=True)
