"""Two-stream four-stage spatiotemporal encoder.

Both streams share the same architecture but learn independent weights.
Stages 1-2 aggregate context with depthwise local convolutions, stages 3-4
with full space-time self-attention. Noise residuals extracted from the
RGB stream are added into the noise stream after each of the first two
stages, and the streams exchange information at stage 3 through the fusion
module passed in by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import CrossModalityFusion
from .srm import HighPassLayer, inject_noise

STAGE_STRIDES = (4, 2, 2, 2)
STAGE_AGGREGATORS = ("local", "local", "global", "global")
DEFAULT_DEPTHS = (5, 8, 20, 7)
DEFAULT_WIDTHS = (64, 128, 320, 512)


@dataclass(frozen=True)
class StageSpec:
    depth: int
    channels: int
    aggregator: str
    spatial_stride: int

    def __post_init__(self):
        if self.aggregator not in ("local", "global"):
            raise ValueError(f"unknown aggregator {self.aggregator!r}")


def make_stage_specs(widths=DEFAULT_WIDTHS, depths=DEFAULT_DEPTHS) -> tuple[StageSpec, ...]:
    if len(widths) != 4 or len(depths) != 4:
        raise ValueError("exactly four stages expected")
    return tuple(
        StageSpec(d, w, agg, s)
        for d, w, agg, s in zip(depths, widths, STAGE_AGGREGATORS, STAGE_STRIDES)
    )


class FeaturePyramid(NamedTuple):
    """The five multi-scale features handed to the decoder: noise-stream
    outputs of stages 1-3 (stage 3 post-fusion), the noise-stream stage-4
    output, and the RGB-stream stage-4 output."""

    noise_s1: torch.Tensor  # 1/4 scale
    noise_s2: torch.Tensor  # 1/8
    noise_s3: torch.Tensor  # 1/16
    noise_s4: torch.Tensor  # 1/32
    rgb_s4: torch.Tensor    # 1/32


def pad_to_multiple(x: torch.Tensor, multiple: int) -> torch.Tensor:
    """Symmetric spatial padding (extra row/column on the bottom/right) so
    both spatial dims divide ``multiple``; realizes ceil-mode strides."""
    h, w = x.shape[-2:]
    ph, pw = (-h) % multiple, (-w) % multiple
    if ph == 0 and pw == 0:
        return x
    pad = (pw // 2, pw - pw // 2, ph // 2, ph - ph // 2)
    if x.ndim == 5:  # replicate needs the temporal axis padded explicitly
        pad = pad + (0, 0)
    return F.pad(x, pad, mode="replicate")


class PatchEmbed(nn.Module):
    """Non-overlapping strided convolution entering a stage; spatial only,
    frames are never merged."""

    def __init__(self, in_channels: int, out_channels: int, stride: int):
        super().__init__()
        self.stride = stride
        self.proj = nn.Conv3d(
            in_channels, out_channels, kernel_size=(1, stride, stride), stride=(1, stride, stride)
        )
        self.norm = nn.GroupNorm(1, out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.norm(self.proj(pad_to_multiple(x, self.stride)))


class DynamicPositionEmbedding(nn.Module):
    """Depthwise 3x3x3 convolution added residually; zero-initialized so a
    fresh block starts as the identity on this path."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv3d(channels, channels, kernel_size=3, padding=1, groups=channels)
        nn.init.zeros_(self.conv.weight)
        nn.init.zeros_(self.conv.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class LocalAggregator(nn.Module):
    """Depthwise space-time convolution (3 frames, 5x5 spatial) between two
    pointwise projections; the local form of token aggregation."""

    def __init__(self, channels: int):
        super().__init__()
        self.value = nn.Conv3d(channels, channels, kernel_size=1)
        self.relate = nn.Conv3d(
            channels, channels, kernel_size=(3, 5, 5), padding=(1, 2, 2), groups=channels
        )
        self.proj = nn.Conv3d(channels, channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.proj(self.relate(self.value(x)))


class GlobalAggregator(nn.Module):
    """Full multi-head self-attention over all space-time tokens."""

    def __init__(self, channels: int, head_dim: int = 64):
        super().__init__()
        self.heads = max(1, channels // head_dim)
        self.scale = (channels // self.heads) ** -0.5
        self.qkv = nn.Linear(channels, 3 * channels)
        self.proj = nn.Linear(channels, channels)

    def _attend(self, tokens: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        n, s, c = tokens.shape
        qkv = self.qkv(tokens).reshape(n, s, 3, self.heads, c // self.heads)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)
        attn = torch.softmax(q @ k.transpose(-2, -1) * self.scale, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(n, s, c)
        return self.proj(out), attn

    def attention_map(self, x: torch.Tensor) -> torch.Tensor:
        """Softmax attention weights (N, heads, S, S) for introspection."""
        n, c, t, h, w = x.shape
        tokens = x.reshape(n, c, t * h * w).transpose(1, 2)
        return self._attend(tokens)[1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n, c, t, h, w = x.shape
        tokens = x.reshape(n, c, t * h * w).transpose(1, 2)
        out, _ = self._attend(tokens)
        return out.transpose(1, 2).reshape(n, c, t, h, w)


class FeedForward(nn.Module):
    def __init__(self, channels: int, mult: int = 4):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv3d(channels, channels * mult, kernel_size=1),
            nn.GELU(),
            nn.Conv3d(channels * mult, channels, kernel_size=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class UniformerBlock(nn.Module):
    """Position embedding, relation aggregation and feed-forward refinement,
    each on its own residual path."""

    def __init__(self, spec: StageSpec):
        super().__init__()
        self.spec = spec
        self.pos = DynamicPositionEmbedding(spec.channels)
        self.norm1 = nn.GroupNorm(1, spec.channels)
        if spec.aggregator == "local":
            self.aggregate = LocalAggregator(spec.channels)
        else:
            self.aggregate = GlobalAggregator(spec.channels)
        self.norm2 = nn.GroupNorm(1, spec.channels)
        self.ffn = FeedForward(spec.channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.spec.channels:
            raise ValueError(f"expected {self.spec.channels} channels, got {x.shape[1]}")
        x = x + self.pos(x)
        x = x + self.aggregate(self.norm1(x))
        x = x + self.ffn(self.norm2(x))
        return x


class EncoderStage(nn.Module):
    def __init__(self, in_channels: int, spec: StageSpec):
        super().__init__()
        self.embed = PatchEmbed(in_channels, spec.channels, spec.spatial_stride)
        self.blocks = nn.Sequential(*[UniformerBlock(spec) for _ in range(spec.depth)])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(self.embed(x))


class TwoStreamEncoder(nn.Module):
    """Parallel RGB and noise stacks with per-stage noise injection and
    stage-3 cross-stream fusion.

    The noise input defaults to the high-pass residual of the clip but can
    be supplied explicitly.
    """

    def __init__(self, specs: tuple[StageSpec, ...], fusion: CrossModalityFusion):
        super().__init__()
        if fusion.channels != specs[2].channels:
            raise ValueError("fusion width must match stage-3 channels")
        self.specs = specs
        self.input_noise = HighPassLayer(3)
        widths = [3] + [s.channels for s in specs]
        self.rgb_stages = nn.ModuleList(EncoderStage(widths[i], specs[i]) for i in range(4))
        self.noise_stages = nn.ModuleList(EncoderStage(widths[i], specs[i]) for i in range(4))
        self.noise_inject = nn.ModuleList(HighPassLayer(specs[i].channels) for i in range(2))
        self.fusion = fusion

    def _validate(self, clip: torch.Tensor):
        if clip.ndim != 5 or clip.shape[1] != 3:
            raise ValueError(f"expected (N, 3, T, H, W), got {tuple(clip.shape)}")
        if clip.shape[2] < 1:
            raise ValueError("clip must contain at least one frame")
        h, w = clip.shape[-2:]
        if h % 4 or w % 4 or h < 32 or w < 32:
            raise ValueError(f"spatial dims must be multiples of 4 and >= 32, got {h}x{w}")

    def forward(
        self, clip: torch.Tensor, noise_input: torch.Tensor | None = None
    ) -> tuple[FeaturePyramid, torch.Tensor]:
        self._validate(clip)
        if noise_input is None:
            noise_input = self.input_noise(clip)
        elif noise_input.shape != clip.shape:
            raise ValueError("noise input must match the clip shape")

        rgb, noise = clip, noise_input
        pyramid = []
        for i in range(2):
            rgb = self.rgb_stages[i](rgb)
            noise = inject_noise(self.noise_inject[i], rgb, self.noise_stages[i](noise))
            pyramid.append(noise)

        rgb = self.rgb_stages[2](rgb)
        noise = self.noise_stages[2](noise)
        rgb, noise = self.fusion(rgb, noise)
        pyramid.append(noise)

        rgb = self.rgb_stages[3](rgb)
        noise = self.noise_stages[3](noise)
        pyramid.extend([noise, rgb])
        return FeaturePyramid(*pyramid), noise_input
