import json
import struct

import numpy as np
import pytest

from plens_adapters.formats import (
    EMBEDDINGS_HEADER,
    EMBEDDINGS_MAGIC,
    EMBEDDINGS_VERSION,
    FormatError,
    Span,
    embedding_row,
    embeddings_header,
    ocr_line,
    read_manifest,
    score_line,
)


def _write_manifest(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "manifest.jsonl"
    _write_manifest(
        path,
        [
            {"id": "a", "image": "images/a.png", "caption": "a stop sign"},
            {"id": "b", "image": "images/b.png", "caption": ""},
        ],
    )
    rows = read_manifest(path)
    assert [(r.id, r.image, r.caption) for r in rows] == [
        ("a", "images/a.png", "a stop sign"),
        ("b", "images/b.png", ""),
    ]


def test_manifest_rejects_duplicates_and_bad_rows(tmp_path):
    path = tmp_path / "manifest.jsonl"
    _write_manifest(
        path,
        [
            {"id": "a", "image": "x.png", "caption": "one"},
            {"id": "a", "image": "y.png", "caption": "two"},
        ],
    )
    with pytest.raises(FormatError, match="duplicate id"):
        read_manifest(path)

    _write_manifest(path, [{"id": "a", "caption": "no image field"}])
    with pytest.raises(FormatError, match="missing string field 'image'"):
        read_manifest(path)

    _write_manifest(path, [{"id": "", "image": "x.png", "caption": "c"}])
    with pytest.raises(FormatError, match="empty id"):
        read_manifest(path)

    path.write_text('{"id": "a", "image":\n', encoding="utf-8")
    with pytest.raises(FormatError, match="malformed"):
        read_manifest(path)

    path.write_text("[1, 2, 3]\n", encoding="utf-8")
    with pytest.raises(FormatError, match="not an object"):
        read_manifest(path)


def test_ocr_line_bytes_exact():
    span = Span(poly=[(1, 2), (11, 2), (11, 9), (1, 9)], text="stop", conf=0.75)
    line = ocr_line("img03", [span])
    want = (
        '{"id":"img03","spans":[{"poly":[[1.0,2.0],[11.0,2.0],[11.0,9.0],[1.0,9.0]],'
        '"text":"stop","conf":0.75}]}\n'
    )
    assert line == want.encode("utf-8")
    assert ocr_line("img00", []) == b'{"id":"img00","spans":[]}\n'


def test_embeddings_header_fields():
    header = embeddings_header(count=10, dim=16)
    magic, version, count, dim = struct.unpack(EMBEDDINGS_HEADER, header)
    assert magic == EMBEDDINGS_MAGIC
    assert version == EMBEDDINGS_VERSION
    assert (count, dim) == (10, 16)
    assert len(header) == struct.calcsize(EMBEDDINGS_HEADER)


def test_embedding_row_checks_shape_and_finiteness():
    row = embedding_row(np.arange(4, dtype=np.float64), dim=4)
    assert row == np.arange(4, dtype="<f4").tobytes()
    with pytest.raises(ValueError, match="shape"):
        embedding_row(np.zeros(3), dim=4)
    with pytest.raises(ValueError, match="NaN or Inf"):
        embedding_row(np.array([0.0, np.nan, 0.0, 0.0]), dim=4)


def test_score_line_repr_and_variant_guard():
    assert score_line("a", "raw", 0.5) == b"a,raw,0.5\n"
    assert score_line("a", "aesthetic", 1 / 3) == f"a,aesthetic,{(1 / 3)!r}\n".encode()
    with pytest.raises(ValueError, match="unknown score variant"):
        score_line("a", "clip_score", 0.5)
