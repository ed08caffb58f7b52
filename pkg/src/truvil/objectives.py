"""Training objectives and pixel-level evaluation metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch


@dataclass
class LossConfig:
    alpha: float = 0.5
    gamma: float = 2.0
    epsilon: float = 1e-6
    lambda1: float = 0.5
    lambda2: float = 0.5
    p_min: float = 1e-7  # probability clamp for log stability

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _check_shapes(y: torch.Tensor, y_hat: torch.Tensor):
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(y.shape)} vs {tuple(y_hat.shape)}")


def focal_loss(y: torch.Tensor, y_hat: torch.Tensor, cfg: LossConfig | None = None) -> torch.Tensor:
    """Class-balanced focal loss, averaged over pixels.

    Positive pixels contribute -alpha * (1 - p)^gamma * log p and negatives
    -(1 - alpha) * p^gamma * log(1 - p); predictions are clamped away from
    {0, 1} before the logs.
    """
    cfg = cfg or LossConfig()
    _check_shapes(y, y_hat)
    p = y_hat.clamp(cfg.p_min, 1.0 - cfg.p_min)
    pos = cfg.alpha * (1.0 - p) ** cfg.gamma * y * torch.log(p)
    neg = (1.0 - cfg.alpha) * p ** cfg.gamma * (1.0 - y) * torch.log(1.0 - p)
    return -(pos + neg).mean()


def iou_loss(y: torch.Tensor, y_hat: torch.Tensor, epsilon: float = 1e-6) -> torch.Tensor:
    """One minus the soft intersection-over-union of prediction and target."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_shapes(y, y_hat)
    inter = (y * y_hat).sum()
    union = (y + y_hat - y * y_hat).sum()
    return 1.0 - inter / (union + epsilon)


def hybrid_loss(y: torch.Tensor, y_hat: torch.Tensor, cfg: LossConfig | None = None) -> torch.Tensor:
    cfg = cfg or LossConfig()
    return cfg.lambda1 * focal_loss(y, y_hat, cfg) + cfg.lambda2 * iou_loss(y, y_hat, cfg.epsilon)


def f1_iou(pred_mask: np.ndarray, gt_mask: np.ndarray) -> tuple[float, float]:
    """Pixel-level (IoU, F1) from confusion counts.

    Degenerate convention: both masks empty scores (1, 1); an empty ground
    truth with any predicted positives scores (0, 0).
    """
    pred = np.asarray(pred_mask).astype(bool)
    gt = np.asarray(gt_mask).astype(bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    tp = int(np.logical_and(pred, gt).sum())
    fp = int(np.logical_and(pred, ~gt).sum())
    fn = int(np.logical_and(~pred, gt).sum())
    if tp + fp + fn == 0:
        return 1.0, 1.0
    iou = tp / (tp + fp + fn)
    f1 = 2 * tp / (2 * tp + fp + fn)
    return iou, f1


@dataclass
class EvalReport:
    """Per-video localization scores with their arithmetic means."""

    threshold: float
    per_video: list[tuple[str, float, float]] = field(default_factory=list)

    @property
    def mean_iou(self) -> float:
        return float(np.mean([v[1] for v in self.per_video])) if self.per_video else 0.0

    @property
    def mean_f1(self) -> float:
        return float(np.mean([v[2] for v in self.per_video])) if self.per_video else 0.0

    def to_text(self) -> str:
        lines = [f"{vid}\t{iou:.6f}\t{f1:.6f}" for vid, iou, f1 in self.per_video]
        lines.append(
            f"# aggregate\tIoU={self.mean_iou:.6f}\tF1={self.mean_f1:.6f}"
            f"\tthreshold={self.threshold:g}\tvideos={len(self.per_video)}"
        )
        return "\n".join(lines) + "\n"

    def to_records(self) -> str:
        """Machine-readable form: one JSON record per line plus a footer."""
        lines = [
            json.dumps({"video": vid, "iou": iou, "f1": f1}, sort_keys=True)
            for vid, iou, f1 in self.per_video
        ]
        lines.append(
            json.dumps(
                {
                    "aggregate": True,
                    "mean_iou": self.mean_iou,
                    "mean_f1": self.mean_f1,
                    "threshold": self.threshold,
                    "videos": len(self.per_video),
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.to_text())
        path.with_suffix(path.suffix + ".jsonl").write_text(self.to_records())
