"""Near/far-field user classification from the channel alone.

A far-field channel is fit perfectly by some steering vector; a near-field
channel spreads its energy over many angles, so its best steering-vector
correlation drops well below 1.  That best-fit correlation is the decision
statistic: no distance estimate is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beams import _steer_matrix
from .errors import DimensionMismatch, LengthMismatch, SingleClass
from .geometry import ArrayConfig, ChannelMatrix, ChannelVec, FieldLabel


@dataclass(frozen=True)
class ClassifierConfig:
    """Angle-grid density and decision threshold.

    angle_grid_size None means 4N at classification time.
    """

    threshold: float
    angle_grid_size: int | None = None

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.angle_grid_size is not None and self.angle_grid_size < 2:
            raise ValueError("angle_grid_size must be >= 2")


def _stat_grid(cfg: ArrayConfig, grid_size: int) -> np.ndarray:
    # full cos range so any arrival direction is covered
    return _steer_matrix(cfg, np.linspace(-1.0, 1.0, grid_size))


def field_stat(cfg: ArrayConfig, h: ChannelVec | np.ndarray, grid_size: int | None = None) -> float:
    """Best far-field-model fit: max steering correlation over a cos-uniform
    angle grid, in [0, 1]."""
    if grid_size is None:
        grid_size = 4 * cfg.n_antennas
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    hv = h.entries if isinstance(h, ChannelVec) else np.asarray(h)
    steer = _stat_grid(cfg, grid_size)
    if hv.shape[0] != steer.shape[0]:
        raise DimensionMismatch(f"channel length {hv.shape[0]} vs array size {steer.shape[0]}")
    norm = np.linalg.norm(hv)
    if norm == 0.0:
        return 0.0
    return float(np.abs(steer.conj().T @ hv).max() / norm)


def field_stats(cfg: ArrayConfig, h_matrix: np.ndarray, grid_size: int | None = None) -> np.ndarray:
    """field_stat for every column of an N x K channel matrix at once."""
    if grid_size is None:
        grid_size = 4 * cfg.n_antennas
    h = h_matrix.matrix if isinstance(h_matrix, ChannelMatrix) else np.asarray(h_matrix)
    steer = _stat_grid(cfg, grid_size)
    if h.shape[0] != steer.shape[0]:
        raise DimensionMismatch(f"channel rows {h.shape[0]} vs array size {steer.shape[0]}")
    norms = np.linalg.norm(h, axis=0)
    corr = np.abs(steer.conj().T @ h)
    with np.errstate(invalid="ignore", divide="ignore"):
        stats = np.where(norms > 0, corr.max(axis=0) / norms, 0.0)
    return stats


def classify(cfg: ArrayConfig, h_matrix, cc: ClassifierConfig) -> list[FieldLabel]:
    """Label each user FAR iff its far-field fit reaches the threshold."""
    stats = field_stats(cfg, h_matrix, cc.angle_grid_size)
    return [FieldLabel.FAR if s >= cc.threshold else FieldLabel.NEAR for s in stats]


def calibrate_threshold(stats: np.ndarray, labels) -> float:
    """Threshold maximizing balanced accuracy on labeled statistics.

    Candidates are midpoints of adjacent sorted unique statistic values;
    ties resolve to the lowest threshold.  Deterministic.
    """
    stats = np.asarray(stats, dtype=np.float64)
    labels = np.asarray([int(l) for l in labels])
    if stats.shape != labels.shape:
        raise LengthMismatch(f"{stats.shape} stats vs {labels.shape} labels")
    if len(set(labels.tolist())) < 2:
        raise SingleClass("calibration needs both NEAR and FAR examples")

    uniq = np.unique(stats)
    if uniq.size == 1:
        return float(uniq[0])
    candidates = (uniq[:-1] + uniq[1:]) / 2.0

    near = labels == int(FieldLabel.NEAR)
    far = ~near
    best_t, best_acc = None, -1.0
    for t in candidates:
        pred_far = stats >= t
        recall_far = np.mean(pred_far[far]) if far.any() else 0.0
        recall_near = np.mean(~pred_far[near]) if near.any() else 0.0
        acc = 0.5 * (recall_far + recall_near)
        if acc > best_acc + 1e-15:
            best_t, best_acc = float(t), float(acc)
    return best_t


@dataclass(frozen=True)
class ConfusionReport:
    accuracy: float
    precision_near: float
    recall_near: float
    precision_far: float
    recall_far: float

    @property
    def balanced_accuracy(self) -> float:
        return 0.5 * (self.recall_near + self.recall_far)


def confusion(pred, truth) -> ConfusionReport:
    """Standard per-class precision/recall; rates are 0 on empty denominators."""
    p = np.asarray([int(x) for x in pred])
    t = np.asarray([int(x) for x in truth])
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} truths")

    def rate(num, den):
        return float(num / den) if den > 0 else 0.0

    near, far = int(FieldLabel.NEAR), int(FieldLabel.FAR)
    tp_near = int(np.sum((p == near) & (t == near)))
    tp_far = int(np.sum((p == far) & (t == far)))
    return ConfusionReport(
        accuracy=rate(tp_near + tp_far, len(t)),
        precision_near=rate(tp_near, int(np.sum(p == near))),
        recall_near=rate(tp_near, int(np.sum(t == near))),
        precision_far=rate(tp_far, int(np.sum(p == far))),
        recall_far=rate(tp_far, int(np.sum(t == far))),
    )


def add_csi_noise(h_matrix: np.ndarray, csi_snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb channels with complex Gaussian noise at a per-column CSI SNR."""
    h = np.asarray(h_matrix)
    n_ant = h.shape[0]
    col_power = np.mean(np.abs(h) ** 2, axis=0, keepdims=True)
    noise_var = col_power * 10.0 ** (-csi_snr_db / 10.0)
    noise = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    return h + np.sqrt(noise_var / 2.0) * noise
