"""Benchmark protocol: pair inputs with all-on ground truth and score models.

Every image of a scene is paired against the scene's all-lights-on render,
which itself is never an input. Models are scored best-of-three over a fixed
intensity sweep, with all images rescaled to 256x256 before metrics.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import imgio
from ..lonoff import read_manifest
from .embedder import FeatureEmbedder, perceptual_distance
from .metrics import EvalError, frechet_distance, lmse, mse

log = logging.getLogger(__name__)

SCORE_SIZE = 256


@dataclass(frozen=True)
class PairingEntry:
    scene: str
    input_id: str
    input_path: str
    gt_path: str


@dataclass(frozen=True)
class BenchmarkPairing:
    entries: tuple[PairingEntry, ...]

    def __post_init__(self):
        for e in self.entries:
            if e.input_path == e.gt_path:
                raise EvalError(f"{e.scene}/{e.input_id} is paired with itself")

    def __len__(self):
        return len(self.entries)


def pair_benchmark(manifest_path) -> BenchmarkPairing:
    """Pair every non-all-on image with its scene's all-on render.

    Scenes without an all-on image are excluded with a warning. A scene
    whose only image is the all-on contributes no pairs.
    """
    base = Path(manifest_path).parent
    by_scene: dict[tuple[str, str], list] = {}
    for rec in read_manifest(manifest_path):
        by_scene.setdefault((rec.category, rec.scene), []).append(rec)

    entries = []
    for (category, scene), recs in sorted(by_scene.items()):
        gts = [r for r in recs if all(v > 0 for v in r.intensities)]
        if len(gts) != 1:
            warnings.warn(
                f"scene {category}/{scene} has {len(gts)} all-on images; skipped"
            )
            continue
        gt = gts[0]
        for r in sorted(recs, key=lambda r: r.path):
            if r is gt:
                continue
            entries.append(
                PairingEntry(
                    scene=f"{category}/{scene}",
                    input_id=Path(r.path).stem,
                    input_path=str(base / r.path),
                    gt_path=str(base / gt.path),
                )
            )
    return BenchmarkPairing(tuple(entries))


@dataclass
class EvalRecord:
    scene: str
    input_id: str
    scores: dict[str, float] = field(default_factory=dict)
    chosen: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class BestOfThree:
    score: float
    index: int
    variant_scores: tuple[float, ...]


def _scoring_size(img: np.ndarray) -> np.ndarray:
    if img.shape[:2] == (SCORE_SIZE, SCORE_SIZE):
        return img
    return imgio.resize_bilinear(img, (SCORE_SIZE, SCORE_SIZE))


def best_of_three(model, input_image, gt_image, intensities=(1.0, 2.0, 3.0),
                  metric=mse) -> BestOfThree:
    """Translate at each intensity and keep the best-scoring variant.

    Scalar intensities broadcast across the model's conditioning width.
    Ties go to the first minimum.
    """
    if len(intensities) != 3:
        raise EvalError(f"expected 3 intensities, got {len(intensities)}")
    if not (intensities[0] < intensities[1] < intensities[2]):
        raise EvalError(f"intensities must be strictly increasing: {intensities}")
    if model.cfg.masked:
        raise EvalError("mask-conditioned models are not benchmarked")
    width = model.cfg.cond_width
    gt_scored = _scoring_size(gt_image)
    scores = []
    for v in intensities:
        out = model.translate(input_image, (float(v),) * width)
        scores.append(metric(_scoring_size(out), gt_scored))
    index = int(np.argmin(scores))
    return BestOfThree(scores[index], index, tuple(scores))


@dataclass(frozen=True)
class EvalConfig:
    intensities: tuple[float, float, float] = (1.0, 2.0, 3.0)
    metrics: tuple[str, ...] = ("mse", "lmse")
    embedder_path: str | None = None
    frechet_samples: int = 2000
    workers: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["intensities"] = list(self.intensities)
        d["metrics"] = list(self.metrics)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalConfig":
        d = dict(d)
        d["intensities"] = tuple(d["intensities"])
        d["metrics"] = tuple(d["metrics"])
        return cls(**d)


@dataclass
class BenchmarkReport:
    config: EvalConfig
    records: list[EvalRecord]
    aggregates: dict[str, float]
    baseline: dict[str, float]
    failures: list[str]
    pair_count: int


def _metric_registry(config: EvalConfig, embedder: FeatureEmbedder | None):
    registry = {"mse": mse, "lmse": lmse}
    if embedder is not None:
        registry["perceptual"] = lambda a, b: perceptual_distance(a, b, embedder)
    for name in config.metrics:
        if name not in registry:
            raise EvalError(
                f"unknown metric {name!r}"
                + (" (no embedder configured)" if name == "perceptual" else "")
            )
    return {name: registry[name] for name in config.metrics}


def run_benchmark(model, pairing: BenchmarkPairing,
                  config: EvalConfig = EvalConfig()) -> BenchmarkReport:
    """Score a model over a pairing, next to the input-copy baseline.

    Per-pair failures are logged and excluded from the aggregates; the
    report keeps their count and messages. Aggregation order is fixed, so
    reports for a deterministic model are byte-identical across runs.
    """
    embedder = (
        FeatureEmbedder.from_checkpoint(config.embedder_path)
        if config.embedder_path
        else None
    )
    metrics = _metric_registry(config, embedder)

    def score_pair(entry: PairingEntry):
        inp = imgio.load_png(entry.input_path)
        gt = imgio.load_png(entry.gt_path)
        record = EvalRecord(entry.scene, entry.input_id)
        base_scores = {}
        for name, fn in metrics.items():
            best = best_of_three(model, inp, gt, config.intensities, fn)
            record.scores[name] = best.score
            record.chosen[name] = best.index
            base_scores[name] = fn(_scoring_size(inp), _scoring_size(gt))
        return record, base_scores, inp, gt

    results = []
    failures = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [(e, pool.submit(score_pair, e)) for e in pairing.entries]
            for entry, fut in futures:
                try:
                    results.append(fut.result())
                except Exception as e:  # noqa: BLE001 - per-pair isolation
                    log.warning("pair %s/%s failed: %s", entry.scene, entry.input_id, e)
                    failures.append(f"{entry.scene}/{entry.input_id}: {e}")
    else:
        for entry in pairing.entries:
            try:
                results.append(score_pair(entry))
            except Exception as e:  # noqa: BLE001 - per-pair isolation
                log.warning("pair %s/%s failed: %s", entry.scene, entry.input_id, e)
                failures.append(f"{entry.scene}/{entry.input_id}: {e}")

    records = [r for r, _, _, _ in results]
    aggregates = {}
    baseline = {}
    for name in metrics:
        aggregates[name] = float(np.mean([r.scores[name] for r in records])) if records else float("nan")
        baseline[name] = float(np.mean([b[name] for _, b, _, _ in results])) if records else float("nan")

    if embedder is not None and len(records) >= 2:
        cap = min(config.frechet_samples, len(results))
        inputs = np.stack([inp for _, _, inp, _ in results[:cap]])
        gts = np.stack([gt for _, _, _, gt in results[:cap]])
        outputs = np.stack([
            model.translate(inp, (config.intensities[rec.chosen["mse"]],) * model.cfg.cond_width)
            if "mse" in rec.chosen
            else inp
            for (rec, _, inp, _) in results[:cap]
        ])
        gt_feats = embedder.embed(gts)
        aggregates["frechet"] = frechet_distance(embedder.embed(outputs), gt_feats)
        baseline["frechet"] = frechet_distance(embedder.embed(inputs), gt_feats)

    return BenchmarkReport(
        config=config,
        records=records,
        aggregates=aggregates,
        baseline=baseline,
        failures=failures,
        pair_count=len(pairing),
    )


def format_report(report: BenchmarkReport) -> str:
    """Fixed-order text table, one metric per row, one method per column."""
    names = list(report.aggregates)
    width = max([len(n) for n in names] + [6])
    lines = [
        f"{'metric':<{width}}  {'relight':>12}  {'input-copy':>12}",
    ]
    for name in names:
        lines.append(
            f"{name:<{width}}  {report.aggregates[name]:>12.6g}  "
            f"{report.baseline[name]:>12.6g}"
        )
    ok = len(report.records)
    lines.append(f"pairs: {ok}/{report.pair_count} scored, {len(report.failures)} failed")
    return "\n".join(lines) + "\n"
