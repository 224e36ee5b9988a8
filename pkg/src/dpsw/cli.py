"""Command-line front end: extract, evaluate, sweep, export-map, synth."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import multiprocessing
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import (
    CORPUS_SEEDS,
    CorpusManifest,
    EmptyCorpusError,
    IngestionError,
    load_grayscale,
    open_corpus,
    write_synthetic_corpus,
)
from .descriptor import (
    DEFAULT_MEMORIES,
    DEFAULT_THRESHOLDS,
    Column,
    Extractor,
)
from .evaluation import DEFAULT_RIDGE, CvReport, LabeledDataset, cross_validate
from .pixel_map import MAX_STEP, MIN_STEP, WalkMap, export_edge_list

log = logging.getLogger("dpsw")

SWEEP_AXES = ("memory", "memory-combination", "threshold", "threshold-combination")
SWEEP_RULES = ("min", "max", "both")


class CsvFormatError(ValueError):
    pass


def parse_int_set(text: str) -> tuple[int, ...]:
    """Parse ``"0..6"``, ``"0,2,5"`` or a mix such as ``"0..3,7"``."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.update(range(lo, hi + 1))
        else:
            out.add(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no values in {text!r}")
    if min(out) < 0:
        raise argparse.ArgumentTypeError("values must be >= 0")
    return tuple(sorted(out))


def _int_set(text):
    try:
        return parse_int_set(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def format_set(values: Sequence[int]) -> str:
    values = sorted(values)
    if len(values) > 1 and values == list(range(values[0], values[-1] + 1)):
        return f"{values[0]}..{values[-1]}"
    return ",".join(str(v) for v in values)


@dataclass
class RunConfig:
    rule: str = "min"
    memories: tuple = DEFAULT_MEMORIES
    thresholds: tuple = DEFAULT_THRESHOLDS
    folds: int = 10
    seed: int = 0
    ridge: float = DEFAULT_RIDGE
    jobs: int = 1
    min_step: int = MIN_STEP
    max_step: int = MAX_STEP

    def __post_init__(self):
        if self.rule not in SWEEP_RULES:
            raise ValueError(f"rule must be one of {SWEEP_RULES}")
        if not self.memories or not self.thresholds:
            raise ValueError("memory and threshold sets must be non-empty")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    @property
    def rules(self) -> tuple[str, ...]:
        return ("min", "max") if self.rule == "both" else (self.rule,)

    def extractor(self, rules=None) -> Extractor:
        return Extractor(
            memories=self.memories,
            thresholds=self.thresholds,
            rules=rules or self.rules,
            min_step=self.min_step,
            max_step=self.max_step,
        )


# ---------------------------------------------------------------------------
# feature files


def _extract_one(args):
    extractor, path = args
    return extractor.extract(load_grayscale(path)).values


def _init_worker():
    import numba

    numba.set_num_threads(1)


def extract_matrix(manifest: CorpusManifest, extractor: Extractor, jobs: int = 1) -> np.ndarray:
    """Feature matrix in manifest order. ``jobs > 1`` spreads images over processes."""
    tasks = [(extractor, p) for p, _ in manifest.entries]
    if jobs > 1 and len(tasks) > 1:
        # fork is unsafe once the OpenMP runtime behind numba is up
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx, initializer=_init_worker) as pool:
            rows = list(pool.map(_extract_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = []
        for i, t in enumerate(tasks, 1):
            rows.append(_extract_one(t))
            log.debug("extracted %d/%d %s", i, len(tasks), t[1])
    return np.vstack(rows) if rows else np.empty((0, extractor.n_features))


def layout_path(features_path: Path) -> Path:
    return features_path.with_name(features_path.stem + ".layout.json")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_features(path: Path, manifest: CorpusManifest, matrix: np.ndarray, layout: Sequence[Column],
                   extractor: Optional[Extractor] = None) -> None:
    lines = [",".join(["label", "path"] + [f"f{i}" for i in range(len(layout))])]
    for (p, label), row in zip(manifest.entries, matrix):
        # repr() of a float is locale-independent and round-trips exactly
        lines.append(",".join([_csv_field(label), _csv_field(manifest.display_path(p))] + [repr(float(v)) for v in row]))
    _atomic_write(path, "\n".join(lines) + "\n")
    meta = {"columns": [c._asdict() for c in layout]}
    if extractor is not None:
        meta.update(
            memories=list(extractor.memories),
            thresholds=list(extractor.thresholds),
            rules=list(extractor.rules),
            min_step=extractor.min_step,
            max_step=extractor.max_step,
        )
    _atomic_write(layout_path(path), json.dumps(meta, indent=1, sort_keys=True) + "\n")


def _csv_field(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def read_features(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """``(labels, paths, matrix)`` from a feature CSV; errors name the line."""
    labels, paths, rows = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if not header or header[:2] != ["label", "path"]:
            raise CsvFormatError(f"{path}:1: header must start with 'label,path'")
        width = len(header) - 2
        if width < 1:
            raise CsvFormatError(f"{path}:1: no feature columns")
        for lineno, row in enumerate(rd, start=2):
            if not row:
                continue
            if len(row) != width + 2:
                raise CsvFormatError(f"{path}:{lineno}: expected {width + 2} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row[2:]]
            except ValueError as e:
                raise CsvFormatError(f"{path}:{lineno}: {e}") from None
            if not all(np.isfinite(vals)):
                raise CsvFormatError(f"{path}:{lineno}: non-finite feature value")
            labels.append(row[0])
            paths.append(row[1])
            rows.append(vals)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return labels, paths, np.array(rows)


# ---------------------------------------------------------------------------
# commands


def cmd_extract(args) -> int:
    cfg = _run_config(args)
    manifest = open_corpus(args.input)
    ex = cfg.extractor()
    t0 = time.perf_counter()
    matrix = extract_matrix(manifest, ex, cfg.jobs)
    log.info("extracted %d images x %d features in %.1fs", len(manifest), ex.n_features, time.perf_counter() - t0)
    out = Path(args.output)
    write_features(out, manifest, matrix, ex.layout(), ex)
    print(f"wrote {out} ({len(manifest)} rows, {ex.n_features} features)")
    return 0


def evaluate_matrix(matrix: np.ndarray, labels: Sequence[str], cfg: RunConfig, extra: Optional[dict] = None) -> CvReport:
    data = LabeledDataset.from_labels(matrix, labels)
    return cross_validate(data, cfg.folds, cfg.seed, cfg.ridge, config=extra)


def cmd_evaluate(args) -> int:
    cfg = _run_config(args)
    path = Path(args.input)
    labels, _, matrix = read_features(path)
    provenance = {}
    lp = layout_path(path)
    if lp.exists():
        meta = json.loads(lp.read_text(encoding="utf-8"))
        provenance = {k: meta[k] for k in ("memories", "thresholds", "rules") if k in meta}
    report = evaluate_matrix(matrix, labels, cfg, provenance)
    if args.output:
        _atomic_write(Path(args.output), report.to_json())
    print(report.summary())
    return 0


def sweep_rows(matrix: np.ndarray, layout: Sequence[Column], labels: Sequence[str], axis: str,
               cfg: RunConfig) -> list[dict]:
    """One row per setting with CCR and std for each of min, max and both.

    Memory sweeps use the ``k = 0`` map; threshold sweeps use the full memory set.
    Combination axes grow ascending prefixes of the set.
    """
    layout = [Column(*c) for c in layout]
    mus = sorted({c.mu for c in layout})
    ks = sorted({c.k for c in layout})
    if axis.startswith("memory"):
        if 0 not in ks:
            raise ValueError("memory sweeps need features at threshold index 0")
        settings = mus
        pick = (lambda s: lambda c: c.k == 0 and c.mu == s) if axis == "memory" else \
               (lambda s: lambda c: c.k == 0 and c.mu <= s)
    elif axis.startswith("threshold"):
        settings = ks
        pick = (lambda s: lambda c: c.k == s) if axis == "threshold" else (lambda s: lambda c: c.k <= s)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    present = {c.rule for c in layout}
    rows = []
    for s in settings:
        row = {"setting": s if not axis.endswith("combination") else format_set([v for v in settings if v <= s])}
        for rule in SWEEP_RULES:
            allowed = {"min", "max"} if rule == "both" else {rule}
            if not allowed <= present:
                continue
            keep = pick(s)
            cols = [i for i, c in enumerate(layout) if c.rule in allowed and keep(c)]
            rep = evaluate_matrix(matrix[:, cols], labels, cfg)
            row[f"ccr_{rule}"] = rep.ccr_mean
            row[f"std_{rule}"] = rep.ccr_std
        rows.append(row)
    return rows


def write_sweep(path: Path, rows: list[dict]) -> None:
    keys = list(rows[0].keys())
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(
            (f"{r[k]:.4f}" if isinstance(r[k], float) else _csv_field(str(r[k]))) for k in keys
        ))
    _atomic_write(path, "\n".join(lines) + "\n")


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    src = Path(args.input)
    if src.suffix == ".csv" and layout_path(src).exists():
        labels, _, matrix = read_features(src)
        layout = [Column(**c) for c in json.loads(layout_path(src).read_text(encoding="utf-8"))["columns"]]
    else:
        manifest = open_corpus(src)
        ex = cfg.extractor(rules=("min", "max"))
        matrix = extract_matrix(manifest, ex, cfg.jobs)
        labels, layout = manifest.labels, ex.layout()
    axes = SWEEP_AXES if args.axis == "all" else (args.axis,)
    out = Path(args.output)
    if len(axes) > 1:
        out.mkdir(parents=True, exist_ok=True)
    for axis in axes:
        rows = sweep_rows(matrix, layout, labels, axis, cfg)
        dest = out / f"{axis}.csv" if len(axes) > 1 else out
        write_sweep(dest, rows)
        print(f"wrote {dest} ({len(rows)} rows)")
    return 0


def cmd_export_map(args) -> int:
    raster = load_grayscale(args.input)
    rule = args.rule
    if rule == "both":
        raise SystemExit("export-map needs a single rule (min or max)")
    wm = WalkMap(raster, rule, args.threshold, args.min_step, args.max_step)
    records = export_edge_list(wm, Path(args.output))
    print(f"wrote {args.output} ({len(records)} edges, threshold {wm.threshold})")
    return 0


def cmd_synth(args) -> int:
    for seed in args.corpus_seeds:
        root = Path(args.output) if len(args.corpus_seeds) == 1 else Path(args.output) / f"seed{seed}"
        manifest = write_synthetic_corpus(root, seed=seed, samples=args.samples, size=args.size)
        manifest.write_csv(root / "manifest.csv")
        print(f"wrote {len(manifest)} images in {len(manifest.classes)} classes to {root}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _run_config(args) -> RunConfig:
    return RunConfig(
        rule=getattr(args, "rule", "min"),
        memories=getattr(args, "memories", DEFAULT_MEMORIES),
        thresholds=getattr(args, "thresholds", DEFAULT_THRESHOLDS),
        folds=getattr(args, "folds", 10),
        seed=getattr(args, "seed", 0),
        ridge=getattr(args, "ridge", DEFAULT_RIDGE),
        jobs=getattr(args, "jobs", 1),
        min_step=getattr(args, "min_step", MIN_STEP),
        max_step=getattr(args, "max_step", MAX_STEP),
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dpsw",
        description="Texture features from deterministic tourist walks on thresholded pixel maps.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def walk_flags(sp, rule_default="min"):
        sp.add_argument("--rule", choices=SWEEP_RULES, default=rule_default,
                        help="movement rule(s); 'both' concatenates min then max")
        sp.add_argument("--memories", type=_int_set, default=DEFAULT_MEMORIES, metavar="SET",
                        help="memory sizes, e.g. 0..6 or 0,2,4 (default 0..6)")
        sp.add_argument("--thresholds", type=_int_set, default=DEFAULT_THRESHOLDS, metavar="SET",
                        help="threshold indices k, e.g. 0..9 (default 0..9)")
        step_flags(sp)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes across images")

    def step_flags(sp):
        sp.add_argument("--min-step", type=int, default=MIN_STEP,
                        help="min-rule threshold increment: weights >= k*STEP are kept")
        sp.add_argument("--max-step", type=int, default=MAX_STEP,
                        help="max-rule threshold increment: weights <= 255-k*STEP are kept")

    def eval_flags(sp):
        sp.add_argument("--folds", type=int, default=10, help="cross-validation folds")
        sp.add_argument("--seed", type=int, default=0, help="fold-assignment seed")
        sp.add_argument("--ridge", type=float, default=DEFAULT_RIDGE,
                        help="covariance ridge, relative to the mean within-class variance")

    sp = sub.add_parser("extract", help="feature CSV (+ layout JSON) for a corpus",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--input", required=True, help="corpus directory (one subfolder per class) or path,label CSV")
    sp.add_argument("--output", required=True, help="feature CSV; the layout goes to <stem>.layout.json")
    walk_flags(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("evaluate", help="cross-validated LDA on a feature CSV",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--input", required=True, help="feature CSV from 'extract'")
    sp.add_argument("--output", help="report JSON")
    eval_flags(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("sweep", help="CCR curves over memories or thresholds",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--input", required=True,
                    help="corpus directory / manifest CSV, or a feature CSV extracted with --rule both")
    sp.add_argument("--output", required=True, help="sweep CSV, or a directory when --axis all")
    sp.add_argument("--axis", choices=SWEEP_AXES + ("all",), default="all")
    walk_flags(sp)
    eval_flags(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("export-map", help="edge list of one thresholded map",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--input", required=True, help="grayscale image")
    sp.add_argument("--output", required=True, help="edge-list text file (x1,y1,x2,y2,w)")
    sp.add_argument("--rule", choices=("min", "max"), default="min")
    sp.add_argument("--threshold", type=int, default=0, metavar="K", help="threshold index k")
    step_flags(sp)
    sp.set_defaults(func=cmd_export_map)

    sp = sub.add_parser("synth", help="write the seeded synthetic corpus as PGM files",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--output", required=True, help="destination directory")
    sp.add_argument("--corpus-seeds", type=_int_set, default=(0,), metavar="SET",
                    help=f"corpus seeds; the acceptance suite uses {format_set(CORPUS_SEEDS)}")
    sp.add_argument("--samples", type=int, default=10, help="samples per class")
    sp.add_argument("--size", type=int, default=64, help="image side in pixels")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (IngestionError, EmptyCorpusError, CsvFormatError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
