"""Synthetic miniature datasets for smoke tests and overfit checks.

Each video is a textured drifting background; a square region per frame is
"inpainted" by blurring it and pulling it toward its local mean, which
wipes out the high-frequency residual there. Per-frame masks mark the
square.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageFilter


def _background(rng: np.ndarray, size: int, phase: float) -> np.ndarray:
    xs = np.linspace(0, 1, size)
    gx, gy = np.meshgrid(xs, xs)
    base = 0.5 + 0.25 * np.sin(6.0 * gx + phase) * np.cos(5.0 * gy - 0.5 * phase)
    img = np.stack([base, np.roll(base, size // 7, axis=0), 1.0 - base], axis=-1)
    texture = rng.uniform(-0.12, 0.12, size=img.shape)
    return np.clip(img + texture, 0.0, 1.0)


def _smooth_square(frame: np.ndarray, y0: int, x0: int, side: int) -> np.ndarray:
    img = Image.fromarray((frame * 255).astype(np.uint8))
    blurred = np.asarray(img.filter(ImageFilter.GaussianBlur(radius=2.5)), dtype=np.float32) / 255.0
    region = blurred[y0 : y0 + side, x0 : x0 + side]
    region = 0.6 * region + 0.4 * region.mean(axis=(0, 1), keepdims=True)
    out = frame.copy()
    out[y0 : y0 + side, x0 : x0 + side] = region
    return out


def make_toy_dataset(
    root: str | Path,
    n_videos: int = 20,
    size: int = 64,
    frames: int = 9,
    seed: int = 0,
) -> Path:
    """Write a dataset tree of n_videos under ``root`` and return it."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for v in range(n_videos):
        vdir = root / f"video{v:03d}"
        (vdir / "frames").mkdir(parents=True, exist_ok=True)
        (vdir / "masks").mkdir(parents=True, exist_ok=True)
        side = int(rng.integers(size // 4, size // 2))
        y = int(rng.integers(0, size - side))
        x = int(rng.integers(0, size - side))
        dy, dx = int(rng.integers(-1, 2)), int(rng.integers(-1, 2))
        for f in range(frames):
            frame = _background(rng, size, phase=0.3 * f + v)
            y = int(np.clip(y + dy, 0, size - side))
            x = int(np.clip(x + dx, 0, size - side))
            doctored = _smooth_square(frame, y, x, side)
            mask = np.zeros((size, size), dtype=np.uint8)
            mask[y : y + side, x : x + side] = 255
            Image.fromarray((doctored * 255).astype(np.uint8)).save(
                vdir / "frames" / f"{f:05d}.png"
            )
            Image.fromarray(mask, mode="L").save(vdir / "masks" / f"{f:05d}.png")
    return root
