"""Command-line entry point.

Subcommands compose over a shared workspace directory with conventional
file locations. Every run writes a config snapshot next to its outputs
(flags plus seeds, workspace-relative paths) so any output can be
reproduced from its snapshot alone. Progress goes to stderr; data goes to
files or stdout.

Exit codes: 0 success, 1 validation/data errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from . import cluster as cl
from . import curate as cu
from . import probes as pb
from . import report as rp
from . import scoring as sc
from .geometry import ImageBuffer
from .ingest import (
    ExternalScoreTable,
    FormatError,
    load_embeddings,
    load_manifest,
    load_ocr,
    load_scores,
    save_manifest,
    validate_paths,
)
from .inpaint import DEFAULT_RADIUS, make_variants
from .seeds import record_seed, stage_seed
from .textmatch import DEFAULT_TAU, match_pair


class UsageError(Exception):
    """Bad flag values discovered after parsing; maps to exit code 2."""


@dataclass
class Workspace:
    """Conventional layout rooted at one directory.

    Inputs live at fixed names (manifest.jsonl, ocr.jsonl, embeddings.bin,
    scores.csv); each stage owns one output subdirectory.
    """

    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.jsonl"

    @property
    def ocr(self) -> Path:
        return self.root / "ocr.jsonl"

    @property
    def embeddings(self) -> Path:
        return self.root / "embeddings.bin"

    @property
    def scores(self) -> Path:
        return self.root / "scores.csv"

    @property
    def matches_dir(self) -> Path:
        return self.root / "matches"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def variants_dir(self) -> Path:
        return self.root / "variants"

    @property
    def probes_dir(self) -> Path:
        return self.root / "probes"

    @property
    def scores_dir(self) -> Path:
        return self.root / "scores"

    @property
    def curated_dir(self) -> Path:
        return self.root / "curated"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    def resolve(self, ref: str | Path) -> Path:
        path = Path(ref)
        return path if path.is_absolute() else self.root / path

    def relativize(self, value):
        """Workspace-relative form for snapshots; non-paths pass through."""
        if isinstance(value, Path):
            value = str(value)
        if isinstance(value, str):
            path = Path(value)
            if path.is_absolute():
                try:
                    return path.relative_to(self.root.resolve()).as_posix()
                except ValueError:
                    return path.as_posix()
        return value


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _effective_jobs(args) -> int:
    env = os.environ.get("PLENS_JOBS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"PLENS_JOBS must be an integer, got '{env}'") from None
    if args.jobs is not None:
        return max(1, args.jobs)
    return os.cpu_count() or 1


_SNAPSHOT_SKIP = {"config", "workspace", "func"}


def write_snapshot(ws: Workspace, args, anchor: Path) -> Path:
    """Serialize the run's flags next to its outputs.

    anchor is the primary output: snapshots land at <file>.config.json or
    <dir>/config.json. Paths are stored workspace-relative so reruns in a
    different root still produce identical bytes.
    """
    snap = {}
    for key, value in vars(args).items():
        if key in _SNAPSHOT_SKIP:
            continue
        snap[key] = ws.relativize(value)
    if anchor.is_dir():
        path = anchor / "config.json"
    else:
        path = anchor.parent / (anchor.name + ".config.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(json.dumps(snap, sort_keys=True, ensure_ascii=False, separators=(",", ":")))
        handle.write("\n")
    return path


def _load_pairs_and_ocr(ws: Workspace):
    pairs = load_manifest(ws.manifest)
    ocr = load_ocr(ws.ocr)
    return pairs, ocr


def _comatches_for_covered(pairs, ocr, tau):
    """Match every OCR-covered pair; report how many had no OCR entry."""
    comatches = {}
    missing = 0
    for pair in pairs:
        result = ocr.get(pair.id)
        if result is None:
            missing += 1
            continue
        comatches[pair.id] = match_pair(pair, result, tau=tau)
    if missing:
        _progress(f"{missing} pairs have no OCR entry; skipped")
    return comatches


# ---------------------------------------------------------------------------
# labels file (id,cluster)
# ---------------------------------------------------------------------------

def save_labels(ids: Sequence[str], labels: Sequence[int], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("id,cluster\n")
        for pair_id, label in zip(ids, labels):
            handle.write(f"{pair_id},{int(label)}\n")


def load_labels(path: str | Path) -> dict[str, int]:
    labels: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header != "id,cluster":
            raise FormatError(f"{path}: bad labels header '{header}'")
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            pair_id, sep, label = line.rpartition(",")
            if not sep or not pair_id:
                raise FormatError(f"{path}:{lineno}: expected id,cluster")
            try:
                labels[pair_id] = int(label)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad cluster '{label}'") from None
    return labels


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(ws: Workspace, args) -> int:
    manifest = ws.resolve(args.manifest) if args.manifest else ws.manifest

    def pick(flag, conventional):
        if flag:
            return ws.resolve(flag)
        return conventional if conventional.exists() else None

    report = validate_paths(
        manifest,
        ocr_path=pick(args.ocr, ws.ocr),
        embeddings_path=pick(args.embeddings, ws.embeddings),
        scores_path=pick(args.scores, ws.scores),
    )
    for error in report.errors:
        print(f"error: {error}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    _progress(f"validate: {len(report.errors)} errors, {len(report.warnings)} warnings")
    return 0 if report.valid else 1


def cmd_match(ws: Workspace, args) -> int:
    pairs, ocr = _load_pairs_and_ocr(ws)
    comatches = _comatches_for_covered(pairs, ocr, args.tau)
    out = ws.resolve(args.out) if args.out else ws.matches_dir / "matches.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        for pair in pairs:
            comatch = comatches.get(pair.id)
            if comatch is None:
                continue
            handle.write(json.dumps(
                {
                    "id": comatch.id,
                    "co_words": comatch.co_words,
                    "cotr": comatch.cotr,
                    "fuzzy_cotr": comatch.fuzzy_cotr,
                    "class": comatch.pair_class.value,
                },
                ensure_ascii=False, separators=(",", ":"),
            ))
            handle.write("\n")
    write_snapshot(ws, args, out)
    _progress(f"match: wrote {len(comatches)} records to {out}")
    return 0


def cmd_cluster(ws: Workspace, args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if args.pca_dim < 0:
        raise UsageError("--pca-dim must be >= 0")
    if not 0.0 < args.fit_sample <= 1.0:
        raise UsageError("--fit-sample must be in (0, 1]")
    pairs = load_manifest(ws.manifest)
    matrix = load_embeddings(ws.embeddings)
    if matrix.count != len(pairs):
        raise ValueError(
            f"embedding count {matrix.count} != manifest record count {len(pairs)}"
        )
    out_dir = ws.resolve(args.out_dir) if args.out_dir else ws.models_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    seed = stage_seed(args.seed, "cluster")
    data = matrix.vectors.astype(np.float64)
    n = data.shape[0]
    if args.fit_sample < 1.0:
        n_fit = max(1, int(round(args.fit_sample * n)))
        rng = np.random.default_rng(seed)
        fit_idx = np.sort(rng.choice(n, size=n_fit, replace=False))
        fit_data = data[fit_idx]
    else:
        fit_data = data

    if 0 < args.pca_dim < data.shape[1]:
        pca = cl.fit_pca(fit_data, out_dim=args.pca_dim)
        cl.save_pca(pca, out_dir / "pca.bin")
        fit_data = cl.transform_pca(pca, fit_data)
        data = cl.transform_pca(pca, data)
        _progress(f"cluster: pca {matrix.dim} -> {args.pca_dim}")

    model = cl.fit_kmeans(
        fit_data, k=args.k, iters=args.iters, restarts=args.restarts, seed=seed
    )
    labels = cl.assign(model, data)
    cl.save_kmeans(model, out_dir / "kmeans.bin")
    save_labels([p.id for p in pairs], labels.tolist(), out_dir / "labels.csv")
    write_snapshot(ws, args, out_dir)
    _progress(
        f"cluster: k={args.k} inertia={model.inertia:.6g} "
        f"fit_rows={fit_data.shape[0]} -> {out_dir}"
    )
    return 0


def cmd_inpaint(ws: Workspace, args) -> int:
    if args.radius <= 0:
        raise UsageError("--radius must be > 0")
    if args.dilate < 0:
        raise UsageError("--dilate must be >= 0")
    pairs, ocr = _load_pairs_and_ocr(ws)
    out_dir = ws.resolve(args.out_dir) if args.out_dir else ws.variants_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    donors = [result for result in ocr.values() if result.spans]
    seed = stage_seed(args.seed, "inpaint")
    n_texted = 0
    n_raw_only = 0
    for pair in pairs:
        image = ImageBuffer.from_png(ws.resolve(pair.image_ref))
        image.to_png(out_dir / f"{pair.id}.raw.png")
        result = ocr.get(pair.id)
        if result is None or not result.spans:
            n_raw_only += 1
            continue
        comatch = match_pair(pair, result, tau=args.tau)
        variants = make_variants(
            image, result, comatch, donors,
            seed=record_seed(seed, pair.id),
            radius=args.radius, dilate=args.dilate,
        )
        for tag, variant in variants.as_dict().items():
            if tag == "raw":
                continue
            variant.to_png(out_dir / f"{pair.id}.{tag}.png")
        n_texted += 1
    write_snapshot(ws, args, out_dir)
    _progress(f"inpaint: {n_texted} pairs got full variants, {n_raw_only} raw-only -> {out_dir}")
    return 0


class _ConstScorer:
    name = "const"

    def score(self, image, caption: str) -> float:
        return 0.5


class _LengthScorer:
    """Score grows with rendered text length; exercises grouping plumbing."""

    name = "len"

    def score(self, image, caption: str) -> float:
        return min(1.0, len(caption) / 40.0)


_PROBE_SCORERS = {"const": _ConstScorer, "len": _LengthScorer}


def cmd_probe(ws: Workspace, args) -> int:
    if args.n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    if args.cap < 1:
        raise UsageError("--cap must be >= 1")
    if args.bins < 1:
        raise UsageError("--bins must be >= 1")
    try:
        templates = tuple(pb.Template(t) for t in args.templates.split(","))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pairs = load_manifest(ws.manifest)
    vocab = pb.build_ngram_vocab((p.caption for p in pairs), n=args.n, cap=args.cap)
    out = ws.resolve(args.out) if args.out else ws.probes_dir / "probe.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    pb.save_vocab(vocab, out.parent / "vocab.tsv")
    scorer = _PROBE_SCORERS[args.scorer]()
    groupings = {
        "frequency": pb.group_by_frequency(vocab, bins=args.bins),
        "length": pb.group_by_length(vocab),
    }
    probe = pb.run_probe(
        scorer, vocab, templates=templates, groupings=groupings,
        width=args.canvas, height=args.canvas, font_size=args.font_size,
    )
    with open(out, "w", encoding="utf-8", newline="") as handle:
        for stat in probe.template_stats + probe.groups:
            handle.write(json.dumps(
                {
                    "grouping": stat.grouping, "band": stat.band, "template": stat.template,
                    "count": stat.count, "mean": stat.mean, "std": stat.std,
                },
                ensure_ascii=False, separators=(",", ":"),
            ))
            handle.write("\n")
        handle.write(json.dumps(
            {
                "grouping": "summary", "items": len(probe.items),
                "mean_score": probe.mean_score, "failures": probe.failures,
            },
            ensure_ascii=False, separators=(",", ":"),
        ))
        handle.write("\n")
    write_snapshot(ws, args, out)
    _progress(f"probe: {len(vocab)} grams x {len(templates)} templates -> {out}")
    return 0


def cmd_score(ws: Workspace, args) -> int:
    pairs, ocr = _load_pairs_and_ocr(ws)
    if args.scorer == "mock":
        comatches = _comatches_for_covered(pairs, ocr, args.tau)
        scorer = sc.mock_text_bias_scorer(base=args.base, alpha=args.alpha)
    else:
        scores_in = ws.resolve(args.scores_in) if args.scores_in else ws.scores
        comatches = None
        scorer = sc.table_scorer(load_scores(scores_in))
    records = sc.relative_scores(pairs, comatches, scorer)
    out = ws.resolve(args.out) if args.out else ws.scores_dir / "relative.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    sc.save_relative_scores(records, out)
    write_snapshot(ws, args, out)
    failed = sum(1 for r in records if r.error)
    _progress(f"score: {len(records)} pairs ({failed} failed) -> {out}")
    return 0


def _write_subset(ws: Workspace, pairs, ids, out: Path) -> None:
    chosen = sorted(ids)
    by_id = {p.id: p for p in pairs}
    out.parent.mkdir(parents=True, exist_ok=True)
    save_manifest([by_id[i] for i in chosen if i in by_id], out)


def cmd_curate(ws: Workspace, args) -> int:
    spec = cu.CurationSpec(
        kind=args.filter, comparator=args.cmp, threshold=args.threshold,
        target_size=args.size, seed=args.seed,
        clip_thresh=args.clip_thresh, aes_thresh=args.aes_thresh,
        dedup_sim=args.dedup_sim,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.filter == "presence" and args.mode is None:
        raise UsageError("--mode is required for the presence filter")
    if args.filter == "eval-split" and args.size is None:
        raise UsageError("--size is required for eval-split")

    pairs, ocr = _load_pairs_and_ocr(ws)
    seed = stage_seed(args.seed, "curate")
    out = ws.resolve(args.out) if args.out else ws.curated_dir / "subset.jsonl"
    stages: list[tuple[str, int]]

    if args.filter == "eval-split":
        scores_in = ws.resolve(args.scores_in) if args.scores_in else ws.scores_dir / "relative.csv"
        records = sc.load_relative_scores(scores_in)
        clean, parrot = cu.build_eval_split(
            pairs, ocr, records, args.size, args.seed, rsc_thresh=args.rsc_thresh
        )
        clean_out = out.parent / f"{out.stem}.clean{out.suffix}"
        parrot_out = out.parent / f"{out.stem}.parrot{out.suffix}"
        _write_subset(ws, pairs, clean, clean_out)
        _write_subset(ws, pairs, parrot, parrot_out)
        write_snapshot(ws, args, clean_out)
        print("stage,survivors")
        print(f"clean,{len(clean)}")
        print(f"parrot,{len(parrot)}")
        _progress(f"curate: eval split -> {clean_out}, {parrot_out}")
        return 0

    if args.filter == "presence":
        ids = cu.filter_by_presence(pairs, ocr, args.mode)
        stages = [(f"presence_{args.mode}", len(ids))]
    elif args.filter == "cotr":
        comatches = _comatches_for_covered(pairs, ocr, args.tau)
        ids = cu.filter_by_cotr(comatches, ocr, args.cmp, args.threshold)
        stages = [(f"cotr_{args.cmp}_{args.threshold:g}", len(ids))]
    elif args.filter in ("rsa", "rsc"):
        scores_in = ws.resolve(args.scores_in) if args.scores_in else ws.scores_dir / "relative.csv"
        records = sc.load_relative_scores(scores_in)
        ids = cu.filter_by_relative(records, args.filter, args.cmp, args.threshold)
        stages = [(f"{args.filter}_{args.cmp}_{args.threshold:g}", len(ids))]
    elif args.filter == "simple-fix":
        labels_path = ws.resolve(args.labels) if args.labels else ws.models_dir / "labels.csv"
        labels = load_labels(labels_path)
        table = load_scores(ws.resolve(args.ext_scores) if args.ext_scores else ws.scores)
        matrix = load_embeddings(ws.embeddings)
        if matrix.count != len(pairs):
            raise ValueError(
                f"embedding count {matrix.count} != manifest record count {len(pairs)}"
            )
        embeddings = {p.id: matrix.vectors[i] for i, p in enumerate(pairs)}
        ids, stages = cu.simple_fix_pipeline(pairs, ocr, table, labels, embeddings, spec)
    else:  # unreachable; spec.validate() rejects unknown kinds
        raise UsageError(f"unknown filter '{args.filter}'")

    if args.size is not None and args.filter != "simple-fix":
        ids = set(cu.sample_subset(ids, args.size, seed))
        stages.append(("sampled", len(ids)))

    _write_subset(ws, pairs, ids, out)
    write_snapshot(ws, args, out)
    print("stage,survivors")
    for name, count in stages:
        print(f"{name},{count}")
    _progress(f"curate: {len(ids)} survivors -> {out}")
    return 0


def cmd_report(ws: Workspace, args) -> int:
    pairs, ocr = _load_pairs_and_ocr(ws)
    comatches = _comatches_for_covered(pairs, ocr, args.tau)
    covered = [p for p in pairs if p.id in comatches]
    out = ws.resolve(args.out) if args.out else ws.reports_dir / f"{args.kind}.{args.format}"
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.kind == "overall":
        obj = rp.dataset_stats(covered, comatches)
    elif args.kind == "clusters":
        labels_path = ws.resolve(args.labels) if args.labels else ws.models_dir / "labels.csv"
        obj = rp.cluster_composition(covered, comatches, load_labels(labels_path))
    elif args.kind == "heatmap":
        if args.max_words < 1:
            raise UsageError("--max-words must be >= 1")
        obj = rp.word_count_heatmap(covered, comatches, max_words=args.max_words)
    else:  # textsize
        dims = {}
        unreadable = 0
        for pair in covered:
            path = ws.resolve(pair.image_ref)
            try:
                with Image.open(path) as im:
                    dims[pair.id] = im.size
            except OSError:
                unreadable += 1
        if unreadable:
            _progress(f"report: {unreadable} images unreadable; their pairs are skipped")
        scores = load_scores(ws.scores) if ws.scores.exists() else None
        obj = rp.text_size_stats(covered, ocr, comatches, dims, scores=scores)

    rp.export_report(obj, out, fmt=args.format)
    write_snapshot(ws, args, out)
    _progress(f"report: {args.kind} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plens",
        description="Profile image-text pairs for caption/embedded-text overlap and curate subsets.",
    )
    parser.add_argument("--workspace", default=".", help="workspace root directory")
    parser.add_argument("--seed", type=int, default=0, help="global seed; stages derive their own")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker count (PLENS_JOBS overrides; stages are deterministic regardless)")
    parser.add_argument("--config", default=None,
                        help="JSON snapshot whose values become flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.plens_subparsers = {}

    def sub_parser(name, **kwargs):
        child = sub.add_parser(name, **kwargs)
        parser.plens_subparsers[name] = child
        return child

    p = sub_parser("validate", help="check manifest/OCR/embeddings/scores consistency")
    p.add_argument("--manifest")
    p.add_argument("--ocr")
    p.add_argument("--embeddings")
    p.add_argument("--scores")
    p.set_defaults(func=cmd_validate)

    p = sub_parser("match", help="compute caption/embedded-text overlap per pair")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--out")
    p.set_defaults(func=cmd_match)

    p = sub_parser("cluster", help="PCA + k-means over the embedding matrix")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--pca-dim", type=int, default=0, help="0 disables the PCA step")
    p.add_argument("--iters", type=int, default=cl.DEFAULT_ITERS)
    p.add_argument("--restarts", type=int, default=cl.DEFAULT_RESTARTS)
    p.add_argument("--fit-sample", type=float, default=1.0,
                   help="fraction of rows used to fit (all rows are assigned)")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_cluster)

    p = sub_parser("inpaint", help="write the five text-removal scoring variants per pair")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    p.add_argument("--dilate", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_inpaint)

    p = sub_parser("probe", help="render caption n-grams as synthetic text and score them")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--cap", type=int, default=pb.DEFAULT_VOCAB_CAP)
    p.add_argument("--templates", default=",".join(t.value for t in pb.ALL_TEMPLATES))
    p.add_argument("--bins", type=int, default=pb.DEFAULT_FREQ_BINS)
    p.add_argument("--canvas", type=int, default=pb.DEFAULT_CANVAS)
    p.add_argument("--font-size", type=int, default=pb.DEFAULT_FONT_SIZE)
    p.add_argument("--scorer", choices=sorted(_PROBE_SCORERS), default="const")
    p.add_argument("--out")
    p.set_defaults(func=cmd_probe)

    p = sub_parser("score", help="score every variant and derive relative scores")
    p.add_argument("--scorer", choices=("mock", "table"), default="mock")
    p.add_argument("--base", type=float, default=0.2)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--scores-in", help="external score table (table scorer)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub_parser("curate", help="produce a curated subset manifest")
    p.add_argument("--filter", choices=cu.FILTER_KINDS, required=True)
    p.add_argument("--mode", choices=cu.PRESENCE_MODES, default=None)
    p.add_argument("--cmp", choices=cu.COMPARATORS, default="ge")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--scores-in", help="relative-scores csv (rsa/rsc/eval-split)")
    p.add_argument("--labels", help="cluster labels csv (simple-fix)")
    p.add_argument("--ext-scores", help="external score table (simple-fix)")
    p.add_argument("--clip-thresh", type=float, default=0.3)
    p.add_argument("--aes-thresh", type=float, default=0.45)
    p.add_argument("--dedup-sim", type=float, default=0.95)
    p.add_argument("--rsc-thresh", type=float, default=0.2,
                   help="parrot-pool cutoff for eval-split")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curate)

    p = sub_parser("report", help="emit dataset statistics")
    p.add_argument("--kind", choices=("overall", "clusters", "heatmap", "textsize"), required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--max-words", type=int, default=40)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--labels", help="cluster labels csv (clusters kind)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def _config_defaults(argv: Sequence[str]) -> dict:
    """Pre-scan for --config and load its snapshot as parser defaults."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        snap = json.load(handle)
    if not isinstance(snap, dict):
        raise UsageError(f"config snapshot {path} is not a JSON object")
    snap.pop("command", None)
    snap.pop("func", None)
    return snap


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        defaults = _config_defaults(argv)
        if defaults:
            # Subparsers parse into a fresh namespace and copy the result over,
            # so their option defaults would shadow values set on the root
            # parser; push config values into every subparser as well.
            parser.set_defaults(**defaults)
            for sp in parser.plens_subparsers.values():
                sp.set_defaults(**defaults)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        _effective_jobs(args)  # validates --jobs/PLENS_JOBS; stages are single-worker deterministic
        ws = Workspace(root=Path(args.workspace))
        if not ws.root.is_dir():
            raise FileNotFoundError(f"workspace '{ws.root}' is not a directory")
        return args.func(ws, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
