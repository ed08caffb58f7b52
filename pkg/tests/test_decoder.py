import numpy as np
import pytest
import torch
import torch.nn.functional as F
from PIL import Image

from truvil.backbone import FeaturePyramid
from truvil.decoder import (
    GatedNoiseDecoder,
    LocalizationMap,
    PyramidFusion,
    binarize,
    save_mask_image,
    save_probability_image,
)
from util import assert_close, trilinear_oracle


def full_width_pyramid(batch=1, t=5):
    shapes = [(64, 60, 108), (128, 30, 54), (320, 15, 27), (512, 8, 14), (512, 8, 14)]
    return FeaturePyramid(*[torch.randn(batch, c, t, h, w) for c, h, w in shapes])


def test_fusion_shape_trace_full_widths():
    fusion = PyramidFusion((64, 128, 320, 512, 512), 256)
    out = fusion(full_width_pyramid(), (60, 108))
    assert out.shape == (1, 256, 5, 60, 108)


def test_fusion_zero_members_zero_bias_gives_zero():
    fusion = PyramidFusion((4, 8, 12, 16, 16), 8)
    with torch.no_grad():
        for proj in fusion.proj:
            proj.bias.zero_()
        fusion.merge.bias.zero_()
    pyramid = FeaturePyramid(
        torch.zeros(1, 4, 3, 8, 8),
        torch.zeros(1, 8, 3, 4, 4),
        torch.zeros(1, 12, 3, 2, 2),
        torch.zeros(1, 16, 3, 1, 1),
        torch.zeros(1, 16, 3, 1, 1),
    )
    out = fusion(pyramid, (8, 8))
    assert out.abs().max().item() == 0.0


def test_fusion_validates_member_count():
    fusion = PyramidFusion((4, 8), 8)
    with pytest.raises(ValueError):
        fusion(full_width_pyramid(), (60, 108))
    with pytest.raises(ValueError):
        PyramidFusion((4, 8), 0)


def test_upsample_matches_independent_trilinear_oracle():
    rng = np.random.default_rng(12)
    vol = rng.standard_normal((2, 3, 4))
    x = torch.from_numpy(vol)[None, None]
    up = F.interpolate(x, size=(2, 24, 32), mode="trilinear", align_corners=False)
    expected = trilinear_oracle(vol, (2, 24, 32))
    assert_close(up[0, 0].numpy(), expected, 1e-10, "8x trilinear upsample vs oracle:")


def test_upsample_reproduces_constant_regions_exactly():
    vol = np.full((2, 4, 4), 0.73125)
    up = F.interpolate(torch.from_numpy(vol)[None, None], size=(2, 32, 32), mode="trilinear")
    assert np.all(up[0, 0].numpy() == 0.73125)


def test_decoder_output_and_gate_in_unit_interval():
    torch.manual_seed(0)
    dec = GatedNoiseDecoder(semantic_channels=8, width=4)
    semantic = torch.randn(2, 8, 3, 4, 4) * 5
    noise = torch.randn(2, 3, 3, 16, 16) * 5
    out = dec(semantic, noise)
    assert out.shape == (2, 1, 3, 16, 16)
    assert out.min().item() >= 0.0 and out.max().item() <= 1.0

    high = F.interpolate(semantic, size=noise.shape[2:], mode="trilinear", align_corners=False)
    low = dec.low_conv(noise)
    gate = torch.sigmoid(dec.gate_conv(torch.cat([low, high], dim=1)))
    assert gate.min().item() >= 0.0 and gate.max().item() <= 1.0


def test_decoder_zero_weights_forward_oracle():
    dec = GatedNoiseDecoder(semantic_channels=4, width=4)
    with torch.no_grad():
        for p in dec.parameters():
            p.zero_()
    semantic = torch.randn(1, 4, 2, 4, 4)
    noise = torch.zeros(1, 3, 2, 8, 8)
    high = F.interpolate(semantic, size=noise.shape[2:], mode="trilinear", align_corners=False)
    low = dec.low_conv(noise)
    gate = torch.sigmoid(dec.gate_conv(torch.cat([low, high], dim=1)))
    assert torch.all(gate == 0.5)  # zero logits everywhere
    assert torch.all(dec(semantic, noise) == 0.5)


def test_decoder_map_driven_by_semantic_path_when_noise_path_zeroed():
    torch.manual_seed(1)
    dec = GatedNoiseDecoder(semantic_channels=4, width=4)
    with torch.no_grad():
        dec.low_conv.weight.zero_()
        dec.low_conv.bias.zero_()  # kills the noise path: refined = 0 * gate
    semantic = torch.randn(1, 4, 2, 4, 4)
    out_a = dec(semantic, torch.randn(1, 3, 2, 8, 8))
    out_b = dec(semantic, torch.randn(1, 3, 2, 8, 8))
    assert torch.equal(out_a, out_b)
    out_c = dec(torch.randn(1, 4, 2, 4, 4), torch.zeros(1, 3, 2, 8, 8))
    assert not torch.equal(out_a, out_c)


def test_decoder_gradient_reaches_both_paths():
    torch.manual_seed(2)
    dec = GatedNoiseDecoder(semantic_channels=4, width=4)
    semantic = torch.randn(1, 4, 2, 4, 4, requires_grad=True)
    noise = torch.randn(1, 3, 2, 8, 8, requires_grad=True)
    dec(semantic, noise).sum().backward()
    assert semantic.grad.norm().item() > 0.0
    assert noise.grad.norm().item() > 0.0


def test_binarize_rules():
    assert np.all(binarize(np.full((3, 3), 0.7), 0.5) == 1)
    assert np.all(binarize(np.full((3, 3), 0.5), 0.5) == 1)  # ties are positive
    rng = np.random.default_rng(3)
    probs = rng.random((8, 8))
    out = binarize(probs, 0.4)
    assert np.array_equal(out, (probs >= 0.4).astype(np.uint8))  # element-wise oracle
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            binarize(probs, bad)


def test_binarize_monotone_in_threshold():
    rng = np.random.default_rng(8)
    probs = rng.random((16, 16))
    counts = [binarize(probs, t).sum() for t in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_localization_map_validation():
    LocalizationMap(np.zeros((4, 4)), 2)
    with pytest.raises(ValueError):
        LocalizationMap(np.zeros((4, 4, 3)), 2)


def test_image_export_round_half_up(tmp_path):
    probs = np.array([[0.0, 0.5 / 255.0, 0.5, 1.0]])  # scaled: 0, 0.5, 127.5, 255
    path = tmp_path / "probs.png"
    save_probability_image(probs, path)
    back = np.asarray(Image.open(path))
    assert back.dtype == np.uint8
    assert back.tolist() == [[0, 1, 128, 255]]  # 0.5*255=127.5 rounds half up to 128

    mask = np.array([[1, 0], [0, 1]], dtype=np.uint8)
    mpath = tmp_path / "mask.png"
    save_mask_image(mask, mpath)
    img = Image.open(mpath)
    assert img.mode == "1"
    assert np.array_equal(np.asarray(img).astype(np.uint8), mask)
