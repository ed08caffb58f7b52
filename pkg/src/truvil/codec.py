"""H.264 round-trip compression through an external encoder CLI.

The encoder is any ffmpeg-compatible executable: frames go in as an image
sequence, come out as an MP4 encoded with libx264 at a constant rate
factor, and are decoded back to frames. Resolution order for finding it:
the TRUVIL_FFMPEG environment variable, ``ffmpeg`` on PATH, then the
bundled WebAssembly shim under tools/ffmpeg-wasm (if its dependencies are
installed; see README).
"""

from __future__ import annotations

import os
import shutil
import subprocess
from pathlib import Path

from .data import DatasetError, VideoRecord, mark_compressed, scan_dataset


class EncoderError(Exception):
    """Encoder missing or failed; carries the encoder's own diagnostics."""


def _bundled_shim() -> Path | None:
    shim = Path(__file__).resolve().parents[2] / "tools" / "ffmpeg-wasm" / "ffmpeg"
    core = shim.parent / "node_modules" / "@ffmpeg" / "core"
    if shim.is_file() and core.is_dir() and shutil.which("node"):
        return shim
    return None


def find_encoder() -> str | None:
    """Path of a usable H.264 encoder CLI, or None."""
    override = os.environ.get("TRUVIL_FFMPEG")
    if override:
        return override
    on_path = shutil.which("ffmpeg")
    if on_path:
        return on_path
    shim = _bundled_shim()
    return str(shim) if shim else None


def run_encoder(args: list[str], encoder: str | None = None) -> None:
    encoder = encoder or find_encoder()
    if encoder is None:
        raise EncoderError(
            "no H.264 encoder found: set TRUVIL_FFMPEG, put ffmpeg on PATH, "
            "or install the bundled shim (cd tools/ffmpeg-wasm && npm install)"
        )
    proc = subprocess.run(
        [encoder, *args], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
    )
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-12:]
        raise EncoderError(
            f"encoder exited with {proc.returncode}: {encoder} {' '.join(args)}\n"
            + "\n".join(tail)
        )


def compress_augment(
    record: VideoRecord,
    crf: int,
    workdir: str | Path,
    pix_fmt: str = "yuv420p",
    framerate: int = 10,
    encoder: str | None = None,
) -> VideoRecord:
    """Round-trip a video's frames through H.264 at the given CRF.

    Frames are re-encoded into one MP4 stream and decoded back to PNG under
    ``workdir``; masks are untouched. The returned record points at the
    decoded frames and is flagged compressed.
    """
    if not isinstance(crf, int) or not 0 <= crf <= 51:
        raise ValueError(f"crf must be an integer in [0, 51], got {crf!r}")
    stage = Path(workdir) / record.video_id
    in_dir, out_dir = stage / "in", stage / "frames"
    in_dir.mkdir(parents=True, exist_ok=True)
    out_dir.mkdir(parents=True, exist_ok=True)

    for i, src in enumerate(record.frame_paths, start=1):
        shutil.copyfile(src, in_dir / f"{i:05d}{src.suffix.lower()}")
    ext = record.frame_paths[0].suffix.lower()
    stream = stage / "clip.mp4"

    run_encoder(
        [
            "-y",
            "-framerate", str(framerate),
            "-i", str(in_dir / f"%05d{ext}"),
            "-c:v", "libx264",
            "-crf", str(crf),
            "-pix_fmt", pix_fmt,
            str(stream),
        ],
        encoder,
    )
    run_encoder(["-y", "-i", str(stream), str(out_dir / "%05d.png")], encoder)

    decoded = sorted(out_dir.glob("*.png"))
    if len(decoded) != len(record.frame_paths):
        raise EncoderError(
            f"frame count drifted in round-trip for {record.video_id}: "
            f"{len(record.frame_paths)} in, {len(decoded)} out"
        )
    renamed = []
    for src, original in zip(decoded, record.frame_paths):
        target = out_dir / f"{original.stem}.png"
        if src != target:
            src.rename(target)
        renamed.append(target)
    return mark_compressed(record, tuple(sorted(renamed)))


def compress_dataset(
    root: str | Path,
    out_root: str | Path,
    crf: int,
    pix_fmt: str = "yuv420p",
    encoder: str | None = None,
) -> list[VideoRecord]:
    """Materialize a compressed copy of a whole dataset tree (masks copied)."""
    out_root = Path(out_root)
    records = scan_dataset(root)
    compressed = []
    for record in records:
        new = compress_augment(record, crf, out_root, pix_fmt=pix_fmt, encoder=encoder)
        masks_dir = out_root / record.video_id / "masks"
        masks_dir.mkdir(parents=True, exist_ok=True)
        new_masks = []
        for mask in record.mask_paths:
            target = masks_dir / mask.name
            if not target.exists():
                shutil.copyfile(mask, target)
            new_masks.append(target)
        in_dir = out_root / record.video_id / "in"
        if in_dir.is_dir():
            shutil.rmtree(in_dir)
        compressed.append(
            VideoRecord(
                record.video_id,
                new.frame_paths,
                tuple(new_masks),
                split=record.split,
                compressed=True,
            )
        )
    if not compressed:
        raise DatasetError(f"no videos found under: {root}")
    return compressed
