"""Full network assembly: two-stream encoder, pyramid fusion and gated
noise decoding, producing a middle-frame probability map per clip."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .attention import CrossModalityFusion
from .backbone import TwoStreamEncoder, make_stage_specs
from .decoder import GatedNoiseDecoder, LocalizationMap, PyramidFusion


class TruvilNet(nn.Module):
    def __init__(
        self,
        widths: tuple[int, int, int, int],
        depths: tuple[int, int, int, int],
        unified_channels: int = 256,
        decoder_channels: int = 64,
    ):
        super().__init__()
        specs = make_stage_specs(widths, depths)
        self.encoder = TwoStreamEncoder(specs, CrossModalityFusion(specs[2].channels))
        member_channels = (widths[0], widths[1], widths[2], widths[3], widths[3])
        self.fuse = PyramidFusion(member_channels, unified_channels)
        self.decoder = GatedNoiseDecoder(unified_channels, decoder_channels)

    def forward(self, clip: torch.Tensor) -> torch.Tensor:
        """Probability map (N, H, W) for the middle frame of each clip
        (N, 3, T, H, W)."""
        pyramid, noise_input = self.encoder(clip)
        h, w = clip.shape[-2:]
        fused = self.fuse(pyramid, (h // 4, w // 4))
        probs = self.decoder(fused, noise_input)  # (N, 1, T, H, W)
        return probs[:, 0, clip.shape[2] // 2]


def clip_to_tensor(clip: np.ndarray, device=None) -> torch.Tensor:
    """(T, H, W, 3) float array in [0, 1] -> (1, 3, T, H, W) tensor."""
    if clip.ndim != 4 or clip.shape[-1] != 3:
        raise ValueError(f"expected (T, H, W, 3), got {clip.shape}")
    t = torch.from_numpy(np.ascontiguousarray(clip, dtype=np.float32))
    return t.permute(3, 0, 1, 2).unsqueeze(0).to(device or "cpu")


@torch.no_grad()
def predict_clip(model: TruvilNet, clip: np.ndarray) -> LocalizationMap:
    """Run one clip through the network in eval mode."""
    model.eval()
    probs = model(clip_to_tensor(clip, next(model.parameters()).device))
    return LocalizationMap(probs[0].cpu().numpy(), frame_index=clip.shape[0] // 2)
