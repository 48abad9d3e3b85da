"""Novelty scoring: reconstruction error, latent distance, and their mix.

The hybrid score of a sample x is

    novelty(x) = alpha * D(E(x)) + beta * err(x)

where D is the Mahalanobis distance of the embedding from the fitted
training Gaussian, err is the per-sample reconstruction error, and the
mixing weights are the reciprocal standard deviations of each feature over
a validation set of inliers, so neither super-feature dominates.  Higher
score = more novel.

Any model exposing ``encode`` and ``reconstruction_errors`` works here;
both the trained autoencoder and the analytic projection codec do.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from latent_guard.latent_stats import GaussianStats, mahalanobis_many

MODE_RECONSTRUCTION = "RE"
MODE_LATENT_DISTANCE = "LD"
MODE_HYBRID = "H"
MODES = (MODE_RECONSTRUCTION, MODE_LATENT_DISTANCE, MODE_HYBRID)

CALIBRATION_VERSION = 1


@dataclass(frozen=True)
class NoveltyCalibration:
    """Mixing weights plus the validation standard deviations behind them."""

    alpha: float
    beta: float
    val_dm_std: float
    val_re_std: float

    def __post_init__(self):
        for name in ("alpha", "beta", "val_dm_std", "val_re_std"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"calibration {name} must be positive and finite, got {value}")

    def to_json(self) -> str:
        payload = {"format_version": CALIBRATION_VERSION, **asdict(self)}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NoveltyCalibration":
        payload = json.loads(text)
        payload.pop("format_version", None)
        return cls(**payload)


def features(model, stats: GaussianStats, images) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (reconstruction_error, latent_distance) over a batch."""
    if hasattr(model, "encode_and_reconstruction_errors"):
        z, re = model.encode_and_reconstruction_errors(images)
    else:
        re = np.asarray(model.reconstruction_errors(images), dtype=np.float64)
        z = np.atleast_2d(model.encode(images))
    ld = mahalanobis_many(stats, z)
    return re, ld


def calibrate(model, stats: GaussianStats, val_inliers) -> NoveltyCalibration:
    """Fits mixing weights on validation inliers.

    Standard deviations use the population convention (divisor n); any
    consistent convention merely rescales both weights together, which
    leaves hybrid rankings unchanged.
    """
    if len(val_inliers) < 2:
        raise ValueError(f"need at least 2 validation inliers, got {len(val_inliers)}")
    re, ld = features(model, stats, val_inliers)
    dm_std = float(ld.std())
    re_std = float(re.std())
    if dm_std == 0.0 or re_std == 0.0:
        raise ValueError(
            "degenerate validation set: zero standard deviation in "
            f"(latent distance = {dm_std}, reconstruction error = {re_std})"
        )
    return NoveltyCalibration(
        alpha=1.0 / dm_std, beta=1.0 / re_std, val_dm_std=dm_std, val_re_std=re_std
    )


def _combine(re, ld, mode, calibration):
    if mode == MODE_RECONSTRUCTION:
        return re
    if mode == MODE_LATENT_DISTANCE:
        return ld
    if mode == MODE_HYBRID:
        if calibration is None:
            raise ValueError("hybrid scoring requires a calibration")
        return calibration.alpha * ld + calibration.beta * re
    raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")


def novelty_scores(model, stats, images, mode, calibration=None) -> np.ndarray:
    """Scores for a batch of samples; higher = more novel."""
    re, ld = features(model, stats, images)
    return _combine(re, ld, mode, calibration)


def novelty_score(model, stats, x, mode, calibration=None) -> float:
    """Score for a single sample."""
    x = np.asarray(x, dtype=np.float64)
    return float(novelty_scores(model, stats, x[None], mode, calibration)[0])


def classify(scores, threshold) -> np.ndarray:
    """novel iff score > threshold (ties at the threshold count as inlier).

    Infinite thresholds degenerate cleanly (-inf flags everything novel,
    +inf nothing); NaN is rejected.
    """
    if np.isnan(threshold):
        raise ValueError("threshold must not be NaN")
    return np.asarray(scores, dtype=np.float64) > threshold


SCORES_CSV_HEADER = ["sample_id", "true_is_inlier", "re", "ld", "hybrid"]


def write_scores_csv(path, sample_ids, is_inlier, re, ld, hybrid) -> None:
    """Per-sample feature/score export used by eval and the scatter plot."""
    columns = [np.asarray(c) for c in (sample_ids, is_inlier, re, ld, hybrid)]
    if len({len(c) for c in columns}) != 1:
        raise ValueError("score CSV columns must have equal lengths")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SCORES_CSV_HEADER)
        for sid, inl, r, d, h in zip(*columns):
            writer.writerow([int(sid), int(inl), repr(float(r)), repr(float(d)), repr(float(h))])


def read_scores_csv(path):
    """Returns (sample_ids, is_inlier, re, ld, hybrid) arrays."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SCORES_CSV_HEADER:
            raise ValueError(f"{path}: expected header {SCORES_CSV_HEADER}, got {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no score rows")
    sample_ids = np.array([int(r[0]) for r in rows])
    is_inlier = np.array([bool(int(r[1])) for r in rows])
    re = np.array([float(r[2]) for r in rows])
    ld = np.array([float(r[3]) for r in rows])
    hybrid = np.array([float(r[4]) for r in rows])
    return sample_ids, is_inlier, re, ld, hybrid
