"""Decoding: multi-scale fusion to a quarter-resolution feature, then
gated combination with the full-resolution noise residual to produce a
per-pixel probability map.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from PIL import Image

from .backbone import FeaturePyramid


@dataclass
class LocalizationMap:
    """Probability field for one frame of a clip, values in [0, 1]."""

    probs: np.ndarray
    frame_index: int

    def __post_init__(self):
        if self.probs.ndim != 2:
            raise ValueError(f"expected an HxW field, got shape {self.probs.shape}")


class PyramidFusion(nn.Module):
    """Project every pyramid member to a common width, upsample all of them
    to quarter resolution and merge with a final pointwise layer."""

    def __init__(self, member_channels: tuple[int, ...], unified_channels: int):
        super().__init__()
        if unified_channels < 1:
            raise ValueError("unified_channels must be >= 1")
        self.proj = nn.ModuleList(
            nn.Conv3d(c, unified_channels, kernel_size=1) for c in member_channels
        )
        self.merge = nn.Conv3d(
            len(member_channels) * unified_channels, unified_channels, kernel_size=1
        )

    def forward(self, pyramid: FeaturePyramid, out_hw: tuple[int, int]) -> torch.Tensor:
        members = list(pyramid)
        if len(members) != len(self.proj):
            raise ValueError(f"expected {len(self.proj)} pyramid members, got {len(members)}")
        t = members[0].shape[2]
        ups = [
            F.interpolate(p(m), size=(t, *out_hw), mode="trilinear", align_corners=False)
            for p, m in zip(self.proj, members)
        ]
        return self.merge(torch.cat(ups, dim=1))


class GatedNoiseDecoder(nn.Module):
    """Fuse the full-resolution noise residual with the upsampled semantic
    feature through a learned spatial gate, then predict probabilities.

    The gate reweights the low-level (noise) feature before it joins the
    semantic feature, so boundary detail is admitted selectively.
    """

    def __init__(self, semantic_channels: int, width: int = 64, noise_channels: int = 3):
        super().__init__()
        self.low_conv = nn.Conv3d(noise_channels, width, kernel_size=(1, 3, 3), padding=(0, 1, 1))
        self.gate_conv = nn.Conv3d(
            width + semantic_channels, 1, kernel_size=(1, 3, 3), padding=(0, 1, 1)
        )
        self.head = nn.Sequential(
            nn.Conv3d(width + semantic_channels, width, kernel_size=(1, 3, 3), padding=(0, 1, 1)),
            nn.ReLU(),
            nn.Conv3d(width, width, kernel_size=(1, 3, 3), padding=(0, 1, 1)),
        )
        self.project = nn.Conv3d(width, 1, kernel_size=1)

    def forward(self, semantic: torch.Tensor, noise_full: torch.Tensor) -> torch.Tensor:
        target = noise_full.shape[2:]
        high = F.interpolate(semantic, size=target, mode="trilinear", align_corners=False)
        if high.shape[2:] != noise_full.shape[2:]:
            raise ValueError("semantic feature does not upsample onto the noise resolution")
        low = self.low_conv(noise_full)
        gate = torch.sigmoid(self.gate_conv(torch.cat([low, high], dim=1)))
        refined = low * gate
        out = self.head(torch.cat([refined, high], dim=1))
        return torch.sigmoid(self.project(out))  # (N, 1, T, H, W)


def binarize(probs: np.ndarray, threshold: float) -> np.ndarray:
    """Threshold a probability field; ties (== threshold) count as positive."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (np.asarray(probs) >= threshold).astype(np.uint8)


def save_probability_image(probs: np.ndarray, path: str | Path) -> None:
    """8-bit grayscale export, probability x 255 rounded half up."""
    scaled = np.floor(np.asarray(probs, dtype=np.float64) * 255.0 + 0.5)
    Image.fromarray(np.clip(scaled, 0, 255).astype(np.uint8), mode="L").save(path)


def save_mask_image(mask: np.ndarray, path: str | Path) -> None:
    """1-bit binary export."""
    Image.fromarray(np.asarray(mask).astype(bool)).convert("1").save(path)
