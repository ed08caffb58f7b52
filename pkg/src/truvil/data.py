"""Clip-based dataset ingestion and sampling.

Directory contract: ``<root>/<video_id>/frames/NNNNN.png`` with aligned
``<root>/<video_id>/masks/NNNNN.png`` (JPEG frames allowed; masks are
thresholded to binary at 128). Videos and frames are always visited in
lexicographic order so scans are reproducible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_EXTS = (".png", ".jpg", ".jpeg")
MASK_THRESHOLD = 128


class DatasetError(Exception):
    """Raised for malformed dataset trees; the message names the offending path."""


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    frame_paths: tuple[Path, ...]
    mask_paths: tuple[Path, ...]
    split: str = "train"
    compressed: bool = False

    def __len__(self) -> int:
        return len(self.frame_paths)


@dataclass
class ClipSample:
    clip: np.ndarray  # (T, H, W, 3) float32 in [0, 1]
    mask: np.ndarray  # (H, W) uint8 in {0, 1}, middle frame
    video_id: str
    center: int


def _list_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_EXTS)


def scan_dataset(root: str | Path, split: str = "train", require_masks: bool = True) -> list[VideoRecord]:
    """Enumerate all videos under a dataset root, validating frame/mask
    alignment. An empty root yields an empty list."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root is not a directory: {root}")
    records = []
    for video_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        frames_dir = video_dir / "frames"
        if not frames_dir.is_dir():
            raise DatasetError(f"missing frames directory: {frames_dir}")
        frames = _list_images(frames_dir)
        if not frames:
            raise DatasetError(f"no frames found under: {frames_dir}")
        masks: list[Path] = []
        if require_masks:
            masks_dir = video_dir / "masks"
            if not masks_dir.is_dir():
                raise DatasetError(f"missing masks directory: {masks_dir}")
            for frame in frames:
                for ext in IMAGE_EXTS:
                    candidate = masks_dir / (frame.stem + ext)
                    if candidate.exists():
                        masks.append(candidate)
                        break
                else:
                    raise DatasetError(f"no mask aligned with frame: {frame}")
        records.append(
            VideoRecord(video_dir.name, tuple(frames), tuple(masks), split=split)
        )
    return records


def load_frame(path: Path, size_hw: tuple[int, int] | None = None) -> np.ndarray:
    """Decode a frame to float32 RGB in [0, 1], bilinear-resized if asked."""
    try:
        img = Image.open(path).convert("RGB")
    except Exception as exc:
        raise DatasetError(f"unreadable frame: {path} ({exc})") from exc
    if size_hw is not None and (img.height, img.width) != size_hw:
        img = img.resize((size_hw[1], size_hw[0]), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32) / 255.0


def load_mask(path: Path, size_hw: tuple[int, int] | None = None) -> np.ndarray:
    """Decode a mask to {0, 1}; nearest resize keeps it binary."""
    try:
        img = Image.open(path).convert("L")
    except Exception as exc:
        raise DatasetError(f"unreadable mask: {path} ({exc})") from exc
    if size_hw is not None and (img.height, img.width) != size_hw:
        img = img.resize((size_hw[1], size_hw[0]), Image.NEAREST)
    return (np.asarray(img) >= MASK_THRESHOLD).astype(np.uint8)


def reflect_indices(center: int, t: int, length: int) -> list[int]:
    """Indices of the T frames around ``center`` with reflection at both
    ends (no edge repetition)."""
    if length == 1:
        return [0] * t
    half = t // 2
    out = []
    for offset in range(-half, half + 1):
        i = center + offset
        while i < 0 or i >= length:
            if i < 0:
                i = -i
            else:
                i = 2 * (length - 1) - i
        out.append(i)
    return out


def sample_clip(
    record: VideoRecord,
    center: int,
    t: int = 5,
    size_hw: tuple[int, int] | None = (240, 432),
) -> ClipSample:
    """Cut a T-frame clip centered on one frame, with that frame's mask."""
    if t % 2 == 0 or t < 1:
        raise ValueError(f"clip length must be odd and positive, got {t}")
    if not 0 <= center < len(record):
        raise ValueError(f"center {center} out of range for {record.video_id} ({len(record)} frames)")
    indices = reflect_indices(center, t, len(record))
    frames = np.stack([load_frame(record.frame_paths[i], size_hw) for i in indices])
    mask = load_mask(record.mask_paths[center], size_hw)
    return ClipSample(frames, mask, record.video_id, center)


def make_training_mix(
    records: list[VideoRecord], compressed_fraction: float, seed: int
) -> list[tuple[VideoRecord, bool]]:
    """Seeded schedule pairing each video with a compress flag; exactly
    floor(fraction * N) videos are flagged, the same ones on every rerun."""
    if not 0.0 <= compressed_fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {compressed_fraction}")
    count = math.floor(compressed_fraction * len(records))
    rng = random.Random(seed)
    chosen = set(rng.sample(range(len(records)), count))
    return [(rec, i in chosen) for i, rec in enumerate(records)]


def mark_compressed(record: VideoRecord, frame_paths: tuple[Path, ...]) -> VideoRecord:
    return replace(record, frame_paths=frame_paths, compressed=True)
