"""Compressor sweep: does compressing the test audio change genre accuracy?

A classifier is trained on uncompressed clips. Each of 90 compressor settings
is then applied to the held-out clips, features are recomputed from the
compressed audio, and accuracy is compared against the uncompressed baseline.

Grid entries are named ``<base><parameter><index>``: base is H/M/L (high,
medium, low), parameter is T (threshold), R (ratio), K (knee), A (attack),
Re (release) or M (makeup), and index 1..5 picks the value from that
parameter's grid in ascending order. ``LT3`` is the low base with a -10 dB
threshold.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, read_wav
from .compressor import CompressorSettings, compress
from .features import FeatureConfig, extract_feature_vector
from .svm import predict_ovo, train_ovo

log = logging.getLogger(__name__)

__all__ = [
    "BaseSetting",
    "GridEntry",
    "PARAMETER_GRIDS",
    "Clip",
    "EntryResult",
    "SweepReport",
    "REPORT_COLUMNS",
    "base_settings",
    "build_grid",
    "load_dataset",
    "clips_from_buffers",
    "split_dataset",
    "FeatureCache",
    "run_sweep",
    "rank_report",
    "format_table",
]


@dataclass(frozen=True)
class BaseSetting:
    name: str
    code: str
    settings: CompressorSettings


def base_settings() -> tuple[BaseSetting, BaseSetting, BaseSetting]:
    """High, medium and low compression presets."""
    return (
        BaseSetting("high", "H", CompressorSettings(-20.0, 8.0, 0.0, 0.001, 0.010, 7.0)),
        BaseSetting("medium", "M", CompressorSettings(-10.0, 5.0, 5.0, 0.005, 0.050, 5.0)),
        BaseSetting("low", "L", CompressorSettings(-5.0, 2.0, 20.0, 0.010, 0.100, 3.0)),
    )


# (code, field, ascending values); each contains every base's own value
PARAMETER_GRIDS = (
    ("T", "threshold_db", (-40.0, -20.0, -10.0, -5.0, -3.0)),
    ("R", "ratio", (1.5, 2.0, 5.0, 8.0, 12.0)),
    ("K", "knee_width_db", (0.0, 5.0, 10.0, 20.0, 40.0)),
    ("A", "attack_s", (0.0, 0.001, 0.005, 0.010, 0.050)),
    ("Re", "release_s", (0.010, 0.050, 0.100, 0.250, 0.500)),
    ("M", "makeup_db", (-1.0, 0.0, 3.0, 5.0, 7.0)),
)


@dataclass(frozen=True)
class GridEntry:
    name: str
    base: str
    parameter: str
    index: int
    settings: CompressorSettings


def build_grid() -> tuple[GridEntry, ...]:
    """All 90 one-parameter variations of the three base settings."""
    entries = []
    for base in base_settings():
        for code, attr, values in PARAMETER_GRIDS:
            for idx, value in enumerate(values, start=1):
                entries.append(GridEntry(f"{base.code}{code}{idx}", base.name, attr, idx,
                                         base.settings.replace(**{attr: value})))
    return tuple(entries)


# -- dataset -----------------------------------------------------------------

@dataclass(frozen=True)
class Clip:
    """A labelled clip, backed by a WAV path or an in-memory buffer.

    `key` identifies the audio content and is used for feature caching.
    """

    label: str
    key: str
    path: Path | None = None
    buffer: AudioBuffer | None = field(default=None, repr=False, compare=False)

    def load(self) -> AudioBuffer:
        return self.buffer if self.buffer is not None else read_wav(self.path)


def load_dataset(root) -> list[Clip]:
    """Collect ``<root>/<genre>/*.wav`` into clips labelled by directory name."""
    root = Path(root)
    clips = []
    for genre_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for wav in sorted(genre_dir.glob("*.wav")):
            key = hashlib.sha1(wav.read_bytes()).hexdigest()
            clips.append(Clip(genre_dir.name, key, path=wav))
    if not clips:
        raise ValueError(f"no <genre>/*.wav files under {root}")
    return clips


def clips_from_buffers(labelled) -> list[Clip]:
    """Wrap ``(label, AudioBuffer)`` pairs as clips."""
    return [Clip(label, buf.digest(), buffer=buf) for label, buf in labelled]


def split_dataset(clips, test_fraction: float = 0.2, seed=0):
    """Stratified train/test split.

    Each class contributes ``floor(n * test_fraction + 0.5)`` clips to the test
    side, clamped to [1, n - 1]. Classes are visited in sorted order and shuffled
    with one generator seeded by `seed`, so the split is reproducible.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    by_label = {}
    for i, c in enumerate(clips):
        by_label.setdefault(c.label, []).append(i)
    test_idx = []
    for label in sorted(by_label):
        idx = by_label[label]
        if len(idx) < 2:
            raise ValueError(f"class {label!r} has {len(idx)} clip(s); need at least 2 to stratify")
        n_test = min(max(int(np.floor(len(idx) * test_fraction + 0.5)), 1), len(idx) - 1)
        test_idx.extend(np.asarray(idx)[rng.permutation(len(idx))[:n_test]].tolist())
    test_set = set(test_idx)
    train = [c for i, c in enumerate(clips) if i not in test_set]
    test = [c for i, c in enumerate(clips) if i in test_set]
    return train, test


# -- features ----------------------------------------------------------------

def _clip_features(clip: Clip, settings_list, config: FeatureConfig):
    """Feature rows for `clip` under each settings (None = uncompressed)."""
    audio = clip.load()
    rows = []
    for s in settings_list:
        buf = audio if s is None else compress(audio, s)
        rows.append(extract_feature_vector(buf, config).to_array())
    return np.vstack(rows)


def _clip_features_or_none(args):
    clip, settings_list, config = args
    try:
        return _clip_features(clip, settings_list, config)
    except (ValueError, OSError) as exc:
        log.warning("skipping clip %s (%s): %s", clip.path or clip.key[:12], clip.label, exc)
        return None


class FeatureCache:
    """Feature vectors keyed by (clip content, compressor settings).

    Clips whose extraction fails are remembered and reported by `failed`.
    """

    def __init__(self, config: FeatureConfig | None = None, workers: int = 1):
        self.config = config or FeatureConfig()
        self.workers = workers
        self._rows = {}
        self.failed = set()

    def fill(self, clips, settings_list) -> None:
        todo = []
        for c in clips:
            if c.key in self.failed:
                continue
            missing = [s for s in settings_list if (c.key, s) not in self._rows]
            if missing:
                todo.append((c, missing))
        if not todo:
            return
        jobs = [(c, missing, self.config) for c, missing in todo]
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(self.workers) as pool:
                results = list(pool.map(_clip_features_or_none, jobs))
        else:
            results = [_clip_features_or_none(j) for j in jobs]
        for (c, missing), rows in zip(todo, results):
            if rows is None:
                self.failed.add(c.key)
                continue
            for s, row in zip(missing, rows):
                self._rows[(c.key, s)] = row

    def matrix(self, clips, settings=None) -> np.ndarray:
        return np.vstack([self._rows[(c.key, settings)] for c in clips])


# -- sweep -------------------------------------------------------------------

@dataclass
class EntryResult:
    name: str
    settings: CompressorSettings | None
    accuracies: list = field(default_factory=list)
    predictions: list = field(default_factory=list)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


REPORT_COLUMNS = ("name", "threshold_db", "ratio", "knee_db", "attack_s", "release_s", "makeup_db",
                  "mean_accuracy", "delta_vs_baseline", "iterations")


@dataclass
class SweepReport:
    """Per-iteration accuracies for the baseline and every grid entry."""

    baseline: EntryResult
    entries: list
    metadata: dict
    splits: list = field(default_factory=list)

    def delta(self, entry: EntryResult) -> float:
        return entry.mean_accuracy - self.baseline.mean_accuracy

    def rows(self) -> list[dict]:
        """Ranked entry rows followed by the baseline row (91 rows for the full grid)."""
        rows = rank_report(self)
        n = len(self.baseline.accuracies)
        for r in rows:
            r["iterations"] = n
        rows.append({"name": "baseline", "threshold_db": "", "ratio": "", "knee_db": "", "attack_s": "",
                     "release_s": "", "makeup_db": "", "mean_accuracy": self.baseline.mean_accuracy,
                     "delta_vs_baseline": 0.0, "iterations": n})
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            for r in self.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})

    def to_dict(self) -> dict:
        def entry(e):
            return {"name": e.name, "settings": e.settings.as_dict() if e.settings else None,
                    "accuracies": e.accuracies, "mean_accuracy": e.mean_accuracy,
                    "delta_vs_baseline": self.delta(e), "predictions": e.predictions}

        return {"metadata": self.metadata, "splits": self.splits, "baseline": entry(self.baseline),
                "entries": [entry(e) for e in self.entries]}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def _accuracy(pred, truth) -> float:
    return float(np.mean([p == t for p, t in zip(pred, truth)]))


def run_sweep(clips, grid=None, iterations: int = 10, seed: int = 42, test_fraction: float = 0.2,
              gamma="auto", C: float = 1.0, feature_config: FeatureConfig | None = None,
              workers: int = 1, cache: FeatureCache | None = None) -> SweepReport:
    """Train on uncompressed audio, test under every grid entry, repeat over splits.

    Every entry in an iteration is scored on the same test clips with the same
    model. Iteration ``i`` splits with a generator spawned from
    ``SeedSequence(seed)``, so the report depends only on the clips, the seed
    and the configuration.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    grid = build_grid() if grid is None else tuple(grid)
    names = [g.name for g in grid]
    if len(set(names)) != len(names):
        raise ValueError("grid entry names must be unique")
    cache = cache or FeatureCache(feature_config, workers)
    all_settings = [None] + [g.settings for g in grid]

    baseline = EntryResult("baseline", None)
    results = [EntryResult(g.name, g.settings) for g in grid]
    splits = []
    for it, child in enumerate(np.random.SeedSequence(seed).spawn(iterations)):
        train, test = split_dataset(clips, test_fraction, np.random.default_rng(child))
        cache.fill(train, [None])
        cache.fill(test, all_settings)
        train = [c for c in train if c.key not in cache.failed]
        test = [c for c in test if c.key not in cache.failed]
        if not test:
            raise ValueError(f"iteration {it}: every test clip failed feature extraction")

        model = train_ovo(cache.matrix(train), [c.label for c in train], gamma=gamma, C=C)
        truth = [c.label for c in test]
        pred = predict_ovo(model, cache.matrix(test))
        baseline.accuracies.append(_accuracy(pred, truth))
        baseline.predictions.append(pred)
        for g, res in zip(grid, results):
            pred = predict_ovo(model, cache.matrix(test, g.settings))
            res.accuracies.append(_accuracy(pred, truth))
            res.predictions.append(pred)
        splits.append({"test": [str(c.path) if c.path else c.key for c in test], "labels": truth})
        log.info("iteration %d/%d: baseline accuracy %.3f", it + 1, iterations, baseline.accuracies[-1])

    metadata = {
        "seed": seed,
        "iterations": iterations,
        "test_fraction": test_fraction,
        "gamma": gamma,
        "C": C,
        "n_clips": len(clips),
        "skipped_clips": len(cache.failed),
        "parameter_grids": {attr: list(values) for _, attr, values in PARAMETER_GRIDS},
        "base_settings": {b.name: b.settings.as_dict() for b in base_settings()},
    }
    if cache.failed:
        log.warning("%d clip(s) skipped after feature extraction failures", len(cache.failed))
    return SweepReport(baseline, results, metadata, splits)


# -- ranking -----------------------------------------------------------------

def rank_report(report: SweepReport, top_k: int | None = None) -> list[dict]:
    """Entries by mean accuracy, best first; equal accuracies fall back to name order."""
    ranked = sorted(report.entries, key=lambda e: (-e.mean_accuracy, e.name))
    if top_k is not None:
        ranked = ranked[:top_k]
    return [
        {
            "name": e.name,
            "threshold_db": e.settings.threshold_db,
            "ratio": e.settings.ratio,
            "knee_db": e.settings.knee_width_db,
            "attack_s": e.settings.attack_s,
            "release_s": e.settings.release_s,
            "makeup_db": e.settings.makeup_db,
            "mean_accuracy": e.mean_accuracy,
            "delta_vs_baseline": report.delta(e),
        }
        for e in ranked
    ]


def format_table(report: SweepReport, top_k: int = 5) -> str:
    """Plain-text ranking table with the baseline as a footer line."""
    head = ["Name", "Threshold", "Ratio", "Knee Width", "Attack", "Release", "Makeup Gain", "Accuracy", "Delta"]
    lines = ["  ".join(f"{h:>11}" for h in head)]
    for r in rank_report(report, top_k):
        cells = [r["name"], f"{r['threshold_db']:g}", f"{r['ratio']:g}", f"{r['knee_db']:g}",
                 f"{r['attack_s']:g}", f"{r['release_s']:g}", f"{r['makeup_db']:g}",
                 f"{r['mean_accuracy']:.4f}", f"{r['delta_vs_baseline']:+.4f}"]
        lines.append("  ".join(f"{c:>11}" for c in cells))
    lines.append(f"baseline (uncompressed): {report.baseline.mean_accuracy:.4f} "
                 f"over {len(report.baseline.accuracies)} split(s)")
    return "\n".join(lines)
