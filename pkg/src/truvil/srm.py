"""Fixed high-pass residual filtering for the noise stream.

The filter bank holds the three standard SRM residual kernels used across
image forensics work: a first-order 5x5 edge residual (divisor 4), a
second-order 3x3 residual (divisor 2) and the 5x5 square residual
(divisor 12). The kernels are fixed; only the 1x1 projections around them
learn.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

_EDGE_RESIDUAL = [
    [0, 0, 0, 0, 0],
    [0, -1, 2, -1, 0],
    [0, 2, -4, 2, 0],
    [0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0],
]

_SECOND_ORDER = [
    [0, 0, 0],
    [1, -2, 1],
    [0, 0, 0],
]

_SQUARE = [
    [-1, 2, -2, 2, -1],
    [2, -6, 8, -6, 2],
    [-2, 8, -12, 8, -2],
    [2, -6, 8, -6, 2],
    [-1, 2, -2, 2, -1],
]

_KERNEL_DEFS = (
    ("edge_residual", _EDGE_RESIDUAL, 4.0),
    ("second_order", _SECOND_ORDER, 2.0),
    ("square", _SQUARE, 12.0),
)


@dataclass(frozen=True)
class SrmKernelBank:
    """Three fixed zero-sum residual kernels with their divisors."""

    names: tuple[str, ...]
    kernels: tuple[np.ndarray, ...]
    divisors: tuple[float, ...]

    def __post_init__(self):
        if len(self.kernels) != 3:
            raise ValueError(f"kernel bank must hold exactly 3 kernels, got {len(self.kernels)}")
        for name, k in zip(self.names, self.kernels):
            if k.ndim != 2 or max(k.shape) > 5:
                raise ValueError(f"kernel {name!r} must be 2D with support <= 5x5, got {k.shape}")
        for k in self.kernels:
            k.setflags(write=False)

    def normalized(self) -> list[np.ndarray]:
        """Kernels with their divisors applied, each summing to zero."""
        return [k / d for k, d in zip(self.kernels, self.divisors)]

    def as_conv_weight(self) -> torch.Tensor:
        """Normalized kernels padded to a common 5x5 support, stacked as a
        grouped-conv weight of shape (3, 1, 5, 5)."""
        padded = []
        for k in self.normalized():
            ph = (5 - k.shape[0]) // 2
            pw = (5 - k.shape[1]) // 2
            padded.append(np.pad(k, ((ph, 5 - k.shape[0] - ph), (pw, 5 - k.shape[1] - pw))))
        return torch.from_numpy(np.stack(padded)[:, None])  # float64; cast at use


def srm_kernel_bank() -> SrmKernelBank:
    """Construct the canonical three-kernel bank. Deterministic; the same
    values on every call."""
    names = tuple(name for name, _, _ in _KERNEL_DEFS)
    kernels = tuple(np.asarray(vals, dtype=np.float64) for _, vals, _ in _KERNEL_DEFS)
    divisors = tuple(div for _, _, div in _KERNEL_DEFS)
    return SrmKernelBank(names, kernels, divisors)


def save_kernel_bank_text(bank: SrmKernelBank, path: str | Path) -> None:
    """Write the bank as plain text: one block per kernel, a header line
    carrying the name and divisor, then the raw (un-normalized) rows."""
    lines = []
    for name, k, d in zip(bank.names, bank.kernels, bank.divisors):
        lines.append(f"kernel {name} divisor {d:g}")
        for row in k:
            lines.append(" ".join(f"{v:g}" for v in row))
        lines.append("")
    Path(path).write_text("\n".join(lines))


def load_kernel_bank_text(path: str | Path) -> SrmKernelBank:
    """Inverse of :func:`save_kernel_bank_text`."""
    names, kernels, divisors = [], [], []
    rows: list[list[float]] = []

    def flush():
        if rows:
            kernels.append(np.asarray(rows, dtype=np.float64))
            rows.clear()

    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            flush()
            continue
        if line.startswith("kernel "):
            flush()
            parts = line.split()
            if len(parts) != 4 or parts[2] != "divisor":
                raise ValueError(f"malformed kernel header: {line!r}")
            names.append(parts[1])
            divisors.append(float(parts[3]))
        else:
            rows.append([float(v) for v in line.split()])
    flush()
    return SrmKernelBank(tuple(names), tuple(kernels), tuple(divisors))


def _pad_spatial(x: torch.Tensor, pad: int) -> torch.Tensor:
    # reflect padding needs pad < dim; replicate covers degenerate sizes
    mode = "reflect" if min(x.shape[-2:]) > pad else "replicate"
    return F.pad(x, (pad, pad, pad, pad), mode=mode)


def fixed_filter_response(x: torch.Tensor, weight: torch.Tensor | None = None) -> torch.Tensor:
    """Apply the three fixed kernels, one per channel, to a 3-channel video
    tensor of shape (N, 3, T, H, W). Frames are filtered independently; the
    output shape equals the input shape.
    """
    if x.ndim != 5 or x.shape[1] != 3:
        raise ValueError(f"expected (N, 3, T, H, W), got {tuple(x.shape)}")
    if x.shape[-1] == 0 or x.shape[-2] == 0:
        raise ValueError("spatial dimensions must be nonzero")
    if weight is None:
        weight = srm_kernel_bank().as_conv_weight().to(x.dtype).to(x.device)
    n, c, t, h, w = x.shape
    flat = x.permute(0, 2, 1, 3, 4).reshape(n * t, c, h, w)
    out = F.conv2d(_pad_spatial(flat, 2), weight, groups=3)
    return out.reshape(n, t, c, h, w).permute(0, 2, 1, 3, 4)


class HighPassLayer(nn.Module):
    """High-pass residual layer usable at any network depth.

    A learnable 1x1 projection reduces the incoming channels to 3, the fixed
    kernel bank filters each frame spatially, and a second 1x1 projection
    restores the original width. For 3-channel input the reduce projection
    starts as the identity so raw frames initially meet the kernels directly.
    """

    def __init__(self, channels: int):
        super().__init__()
        if channels < 1:
            raise ValueError("channels must be >= 1")
        self.channels = channels
        self.reduce = nn.Conv3d(channels, 3, kernel_size=1)
        self.restore = nn.Conv3d(3, channels, kernel_size=1)
        if channels == 3:
            with torch.no_grad():
                self.reduce.weight.copy_(torch.eye(3).reshape(3, 3, 1, 1, 1))
                self.reduce.bias.zero_()
        self.register_buffer("filter_weight", srm_kernel_bank().as_conv_weight().float())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 5:
            raise ValueError(f"expected (N, C, T, H, W), got {tuple(x.shape)}")
        if x.shape[1] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {x.shape[1]}")
        if x.shape[-1] == 0 or x.shape[-2] == 0:
            raise ValueError("spatial dimensions must be nonzero")
        y = self.reduce(x)
        y = fixed_filter_response(y, self.filter_weight)
        return self.restore(y)


def inject_noise(high_pass: HighPassLayer, rgb: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
    """Add the high-pass residual of an RGB-stream feature onto the matching
    noise-stream feature."""
    if rgb.shape != noise.shape:
        raise ValueError(f"shape mismatch: rgb {tuple(rgb.shape)} vs noise {tuple(noise.shape)}")
    return noise + high_pass(rgb)
