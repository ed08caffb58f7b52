"""Self-similarity attention over time, positions and channels, plus the
cross-stream fusion block that exchanges information between the RGB and
noise branches at stage 3.

Each attention computes a plain softmax over raw dot-product similarity
(no projections, no temperature scaling) and blends the aggregated result
back through a learnable scalar that starts at zero, so every module is an
exact identity at initialization.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class TimeAttention(nn.Module):
    """Per-channel attention across frames.

    For input (N, C, T, H, W) each channel is flattened to T vectors of
    length H*W; frame j aggregates all frames i weighted by
    softmax_i(x_i . x_j), and the result is scaled by beta and added back.
    """

    def __init__(self):
        super().__init__()
        self.beta = nn.Parameter(torch.zeros(()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n, c, t, h, w = x.shape
        flat = x.reshape(n, c, t, h * w)
        sim = torch.matmul(flat, flat.transpose(-1, -2))  # (N, C, T, T)
        attn = torch.softmax(sim, dim=-1)
        out = torch.matmul(attn, flat).reshape(n, c, t, h, w)
        return self.beta * out + x


class PositionAttention(nn.Module):
    """Attention across all T*H*W positions, each described by its
    C-dimensional feature vector."""

    def __init__(self):
        super().__init__()
        self.beta = nn.Parameter(torch.zeros(()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n, c, t, h, w = x.shape
        flat = x.reshape(n, c, t * h * w).transpose(1, 2)  # (N, S, C)
        sim = torch.matmul(flat, flat.transpose(-1, -2))  # (N, S, S)
        attn = torch.softmax(sim, dim=-1)
        out = torch.matmul(attn, flat).transpose(1, 2).reshape(n, c, t, h, w)
        return self.beta * out + x


class ChannelAttention(nn.Module):
    """Attention across channel maps, each flattened over space and time."""

    def __init__(self):
        super().__init__()
        self.beta = nn.Parameter(torch.zeros(()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n, c, t, h, w = x.shape
        flat = x.reshape(n, c, t * h * w)  # (N, C, S)
        sim = torch.matmul(flat, flat.transpose(-1, -2))  # (N, C, C)
        attn = torch.softmax(sim, dim=-1)
        out = torch.matmul(attn, flat).reshape(n, c, t, h, w)
        return self.beta * out + x


class CrossModalityFusion(nn.Module):
    """Exchange stage-3 information between the RGB and noise streams.

    Position attention on one stream is combined with channel attention on
    the other, together with a shared time feature computed over the
    frame-wise concatenation of both streams. Each combination is reduced
    back to the stage width by a 1x1 convolution.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.pos_rgb = PositionAttention()
        self.pos_noise = PositionAttention()
        self.chan_rgb = ChannelAttention()
        self.chan_noise = ChannelAttention()
        self.time_joint = TimeAttention()
        self.time_conv = nn.Conv3d(channels, channels, kernel_size=1)
        self.rgb_conv = nn.Conv3d(3 * channels, channels, kernel_size=1)
        self.noise_conv = nn.Conv3d(3 * channels, channels, kernel_size=1)

    def time_feature(self, rgb: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
        """Time attention over the 2T-frame concatenation, folded back to T
        frames by averaging the two halves."""
        t = rgb.shape[2]
        joint = self.time_joint(torch.cat([rgb, noise], dim=2))
        folded = 0.5 * (joint[:, :, :t] + joint[:, :, t:])
        return self.time_conv(folded)

    def forward(self, rgb: torch.Tensor, noise: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if rgb.shape != noise.shape:
            raise ValueError(f"shape mismatch: rgb {tuple(rgb.shape)} vs noise {tuple(noise.shape)}")
        if rgb.shape[1] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {rgb.shape[1]}")
        shared_time = self.time_feature(rgb, noise)
        fused_rgb = self.rgb_conv(
            torch.cat([self.pos_rgb(rgb), self.chan_noise(noise), shared_time], dim=1)
        )
        fused_noise = self.noise_conv(
            torch.cat([self.pos_noise(noise), self.chan_rgb(rgb), shared_time], dim=1)
        )
        return fused_rgb, fused_noise
