"""Per-pair generation chain, dataset ingestion, manifest and run report."""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import blending
from .config import PipelineConfig
from .errors import (
    DegenerateHull,
    DimensionMismatch,
    MalformedLandmarks,
    MissingDirectory,
    RegionTouchesBorder,
    SolverDiverged,
    UnreadableImage,
)
from .forgery_types import ForgeryType, decide_types
from .imaging import load_image, save_image
from .prompts import fine_prompt
from .regions import (
    REGION_NAMES,
    derive_regions,
    extract_forgery_regions,
    generate_mask,
    load_landmarks,
    region_means,
    select_region,
)

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

SKIP_REASONS = (
    "no-region",
    "no-type",
    "solver-diverged",
    "region-touches-border",
    "bad-landmarks",
    "unreadable-image",
    "size-mismatch",
    "unpaired",
)

MANIFEST_KEYS = (
    "id",
    "real_path",
    "fake_path",
    "mixed_path",
    "region",
    "blend_method",
    "blend_params",
    "type_verdicts",
    "type_scores",
    "selected_type",
    "prompt",
    "region_means",
    "seed",
)


@dataclass(frozen=True)
class PairEntry:
    stem: str
    real_path: Path
    fake_path: Path
    landmarks_path: Path


@dataclass
class RunReport:
    pairs_scanned: int = 0
    samples_emitted: int = 0
    skips: dict[str, int] = field(default_factory=lambda: {r: 0 for r in SKIP_REASONS})
    wall_time: float = 0.0

    def skip(self, reason: str) -> None:
        self.skips[reason] = self.skips.get(reason, 0) + 1

    def consistent(self) -> bool:
        return self.pairs_scanned == self.samples_emitted + sum(self.skips.values())

    def to_json(self) -> dict:
        return {
            "pairs_scanned": self.pairs_scanned,
            "samples_emitted": self.samples_emitted,
            "skips": dict(self.skips),
            "wall_time": round(self.wall_time, 3),
        }


def sample_seed(global_seed: int, stem: str) -> int:
    digest = hashlib.sha256(f"{global_seed}:{stem}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _num(x: float) -> float:
    # 12 significant digits keeps manifests stable across platforms
    return float(f"{x:.12g}")


def _stems(root: Path, suffixes) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.suffix.lower() in suffixes:
            stem = path.relative_to(root).with_suffix("").as_posix()
            found.setdefault(stem, path)
    return found


def ingest(cfg: PipelineConfig) -> tuple[list[PairEntry], list[str]]:
    """Pair files by relative stem across the three input roots.

    Returns the matched entries in lexicographic stem order and the stems that
    appear in some but not all roots.
    """
    for d in (cfg.real_dir, cfg.fake_dir, cfg.landmarks_dir):
        if not Path(d).is_dir():
            raise MissingDirectory(f"input directory {d} does not exist")
    real = _stems(Path(cfg.real_dir), IMAGE_SUFFIXES)
    fake = _stems(Path(cfg.fake_dir), IMAGE_SUFFIXES)
    marks = _stems(Path(cfg.landmarks_dir), (".json",))
    matched = sorted(real.keys() & fake.keys() & marks.keys())
    unmatched = sorted((real.keys() | fake.keys() | marks.keys()) - set(matched))
    entries = [PairEntry(s, real[s], fake[s], marks[s]) for s in matched]
    return entries, unmatched


@dataclass(frozen=True)
class Outcome:
    record: dict | None = None
    skip: str | None = None
    detail: str = ""


def _relpath(path: Path, base: Path) -> str:
    return Path(os.path.relpath(Path(path).resolve(), Path(base).resolve())).as_posix()


def process_pair(entry: PairEntry, cfg: PipelineConfig, sample_index: int = 0) -> Outcome:
    """Run the full chain on one pair and write the mixed image."""
    sample_id = entry.stem if sample_index == 0 else f"{entry.stem}#{sample_index}"
    seed = sample_seed(cfg.seed, sample_id)
    rng = np.random.default_rng(seed)
    try:
        real = load_image(entry.real_path)
        fake = load_image(entry.fake_path)
    except UnreadableImage as exc:
        return Outcome(skip="unreadable-image", detail=str(exc))
    if real.shape != fake.shape:
        return Outcome(skip="size-mismatch", detail=f"{real.shape} vs {fake.shape}")
    h, w = real.shape[:2]
    try:
        regions = derive_regions(load_landmarks(entry.landmarks_path), w, h, cfg.region.landmark_slack)
    except (MalformedLandmarks, DegenerateHull) as exc:
        return Outcome(skip="bad-landmarks", detail=str(exc))

    mask = generate_mask(real, fake)
    means = region_means(mask, regions)
    candidates = extract_forgery_regions(mask, regions, cfg.region.theta)
    region_name = select_region(candidates, rng)
    if region_name is None:
        return Outcome(skip="no-region")
    region = regions[region_name]

    method = blending.draw_method(cfg.blend, rng)
    report, ftype = decide_types(region.crop(real), region.crop(fake), method.kind, cfg.types, rng)
    if ftype is None:
        return Outcome(skip="no-type")
    try:
        result = blending.blend_with(real, fake, region.membership, method, cfg.blend)
    except RegionTouchesBorder as exc:
        return Outcome(skip="region-touches-border", detail=str(exc))
    except SolverDiverged as exc:
        return Outcome(skip="solver-diverged", detail=str(exc))

    images_dir = Path(cfg.images_dir)
    stem_out = entry.stem if sample_index == 0 else f"{entry.stem}_s{sample_index}"
    mixed_path = images_dir / f"{stem_out}.png"
    mixed_path.parent.mkdir(parents=True, exist_ok=True)
    save_image(mixed_path, result.image)

    if method.kind == "alpha":
        params = {"alpha": method.alpha}
    else:
        params = {
            "tolerance": method.tolerance,
            "max_iters": method.max_iters,
            "iterations": result.iterations,
            "residual": _num(result.residual),
        }
    base = Path(cfg.manifest).parent
    record = {
        "id": sample_id,
        "real_path": _relpath(entry.real_path, base),
        "fake_path": _relpath(entry.fake_path, base),
        "mixed_path": _relpath(mixed_path, base),
        "region": region_name,
        "blend_method": method.kind,
        "blend_params": params,
        "type_verdicts": {t.phrase: v for t, v in report.verdicts.items()},
        "type_scores": {t.phrase: {k: _num(v) for k, v in s.items()} for t, s in report.scores.items()},
        "selected_type": ftype.phrase,
        "prompt": fine_prompt(region_name, ftype).text,
        "region_means": {name: _num(means[name]) for name in REGION_NAMES},
        "seed": seed,
    }
    return Outcome(record=record)


def _process_job(job, cfg: PipelineConfig) -> Outcome:
    entry, index = job
    try:
        return process_pair(entry, cfg, index)
    except DimensionMismatch as exc:
        return Outcome(skip="size-mismatch", detail=str(exc))


def run(cfg: PipelineConfig) -> tuple[RunReport, list[dict]]:
    """Process every pair, write the JSONL manifest (ingestion order) and the report."""
    t0 = time.perf_counter()
    entries, unmatched = ingest(cfg)
    report = RunReport()
    for stem in unmatched:
        log.warning("skipping %s: not present in all input roots", stem)
        report.pairs_scanned += 1
        report.skip("unpaired")

    jobs = [(e, k) for e in entries for k in range(cfg.samples_per_pair)]
    worker = functools.partial(_process_job, cfg=cfg)
    Path(cfg.images_dir).mkdir(parents=True, exist_ok=True)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(worker, jobs))
    else:
        outcomes = [worker(j) for j in jobs]

    records = []
    for (entry, _), outcome in zip(jobs, outcomes):
        report.pairs_scanned += 1
        if outcome.record is None:
            log.info("skipping %s: %s %s", entry.stem, outcome.skip, outcome.detail)
            report.skip(outcome.skip)
        else:
            report.samples_emitted += 1
            records.append(outcome.record)

    manifest = Path(cfg.manifest)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")
    report.wall_time = time.perf_counter() - t0
    Path(cfg.report_path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    return report, records


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False, separators=(", ", ": "))


def read_manifest(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def lint_record(rec: dict) -> list[str]:
    """Problems with one manifest record; empty when it is consistent."""
    problems = []
    rid = rec.get("id", "?")
    if tuple(rec) != MANIFEST_KEYS:
        problems.append(f"{rid}: keys {list(rec)} differ from {list(MANIFEST_KEYS)}")
        if not set(MANIFEST_KEYS) <= set(rec):
            return problems
    region = rec["region"]
    if region not in REGION_NAMES:
        problems.append(f"{rid}: unknown region {region!r}")
        return problems
    try:
        ftype = ForgeryType.from_phrase(rec["selected_type"])
    except ValueError:
        problems.append(f"{rid}: unknown forgery type {rec['selected_type']!r}")
        return problems
    if rec["prompt"] != fine_prompt(region, ftype).text:
        problems.append(f"{rid}: prompt does not match region/type")
    method = rec["blend_method"]
    if method not in ("alpha", "poisson"):
        problems.append(f"{rid}: unknown blend method {method!r}")
    if (ftype is ForgeryType.BLEND_BOUNDARY) != (method == "alpha"):
        problems.append(f"{rid}: blend boundary must coincide with alpha blending")
    if method == "poisson" and rec["type_verdicts"].get(ftype.phrase) is not True:
        problems.append(f"{rid}: selected type {ftype.phrase!r} has no True verdict")
    if set(rec["region_means"]) != set(REGION_NAMES):
        problems.append(f"{rid}: region_means must cover {list(REGION_NAMES)}")
    return problems


def lint_manifest(path: str | Path) -> list[str]:
    problems = []
    seen = set()
    for rec in read_manifest(path):
        problems += lint_record(rec)
        rid = rec.get("id")
        if rid in seen:
            problems.append(f"{rid}: duplicate id")
        seen.add(rid)
    return problems
