"""Color conversion, trimap labeling, matte quantization, and sequence I/O."""

import numpy as np
import pytest

from vidmatte.imaging import (
    ALPHA_TEMPLATE,
    BACKGROUND,
    FOREGROUND,
    FRAME_TEMPLATE,
    TRIMAP_TEMPLATE,
    UNKNOWN,
    AlphaMatte,
    Frame,
    ImagingError,
    Stage,
    Trimap,
    lab_to_rgb,
    load_gray,
    load_image,
    load_matte,
    load_sequence,
    rgb_to_lab,
    save_alpha,
    save_gray,
    save_image,
    save_matte,
    trimap_from_gray,
)

# Reference Lab triples computed with scalar sRGB->XYZ->Lab formulas,
# D65 white point taken as the row sums of the RGB->XYZ matrix.
_LAB_REFERENCE = [
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
    ((1.0, 1.0, 1.0), (100.0, 0.0, 0.0)),
    ((0.5, 0.5, 0.5), (53.38896474, 0.0, 0.0)),
    ((1.0, 0.0, 0.0), (53.24079183, 80.09246954, 67.20319254)),
    ((0.2, 0.4, 0.6), (42.00814366, -0.15169986, -32.84603952)),
]


def test_rgb_to_lab_reference_triples():
    for rgb, expected in _LAB_REFERENCE:
        lab = rgb_to_lab(np.array(rgb))
        assert np.allclose(lab, expected, atol=1e-6), (rgb, lab)


def test_white_maps_to_l100():
    lab = rgb_to_lab(np.array([1.0, 1.0, 1.0]))
    assert abs(lab[0] - 100.0) < 0.01
    assert abs(lab[1]) < 0.01
    assert abs(lab[2]) < 0.01


def test_black_maps_to_origin():
    lab = rgb_to_lab(np.zeros(3))
    assert np.allclose(lab, 0.0)


def test_gray_axis_has_zero_chroma():
    grays = np.linspace(0.0, 1.0, 11)[:, None].repeat(3, axis=1)
    lab = rgb_to_lab(grays)
    assert np.allclose(lab[:, 1:], 0.0, atol=1e-12)
    # L must increase with gray level
    assert (np.diff(lab[:, 0]) > 0).all()


def test_round_trip_many_colors():
    rng = np.random.default_rng(7)
    rgb = rng.random((1000, 3))
    back = lab_to_rgb(rgb_to_lab(rgb))
    assert np.abs(back - rgb).max() <= 1e-3


def test_rgb_to_lab_preserves_leading_shape():
    rng = np.random.default_rng(3)
    img = rng.random((4, 5, 3))
    lab = rgb_to_lab(img)
    assert lab.shape == (4, 5, 3)
    # image conversion must agree with per-pixel conversion
    flat = rgb_to_lab(img.reshape(-1, 3)).reshape(4, 5, 3)
    assert np.allclose(lab, flat)


def test_frame_carries_lab():
    rng = np.random.default_rng(11)
    rgb = rng.random((6, 7, 3))
    frame = Frame(rgb, index=2)
    assert frame.height == 6 and frame.width == 7
    assert np.allclose(frame.lab, rgb_to_lab(rgb))


def test_frame_rejects_bad_inputs():
    with pytest.raises(ImagingError):
        Frame(np.zeros((4, 4)), index=0)
    with pytest.raises(ImagingError):
        Frame(np.full((4, 4, 3), 1.5), index=0)
    with pytest.raises(ImagingError):
        Frame(np.zeros((4, 4, 3)), index=-1)


def test_trimap_from_gray_mapping():
    gray = np.array([[0, 255, 128], [1, 254, 0], [255, 200, 17]], dtype=np.uint8)
    tri = trimap_from_gray(gray)
    assert tri.labels[0, 0] == BACKGROUND
    assert tri.labels[0, 1] == FOREGROUND
    assert tri.labels[0, 2] == UNKNOWN
    assert tri.labels[1, 0] == UNKNOWN
    assert tri.labels[1, 1] == UNKNOWN
    assert tri.labels[2, 2] == UNKNOWN
    # masks partition the image
    total = tri.foreground.sum() + tri.background.sum() + tri.unknown.sum()
    assert total == gray.size


def test_trimap_validation():
    with pytest.raises(ImagingError):
        Trimap(np.array([[0, 3], [2, 1]]))
    with pytest.raises(ImagingError):
        Trimap(np.zeros((3, 3), dtype=np.uint8))  # no foreground
    with pytest.raises(ImagingError):
        Trimap(np.full((3, 3), 2, dtype=np.uint8))  # no background


def test_alpha_matte_validation():
    AlphaMatte(np.full((3, 3), 0.5), index=0, stage=Stage.INITIAL)
    with pytest.raises(ImagingError):
        AlphaMatte(np.full((3, 3), 1.5), index=0, stage=Stage.INITIAL)
    with pytest.raises(ImagingError):
        AlphaMatte(np.zeros(3), index=0, stage=Stage.INITIAL)


def test_save_matte_rounds_half_up(tmp_path):
    path = tmp_path / "a.png"
    matte = AlphaMatte(np.full((2, 2), 0.5), index=0, stage=Stage.INITIAL)
    save_matte(matte, path)
    assert load_gray(path).tolist() == [[128, 128], [128, 128]]


def test_save_alpha_endpoints(tmp_path):
    alpha = np.array([[0.0, 1.0], [0.25, 0.75]])
    save_alpha(alpha, tmp_path / "a.png")
    values = load_gray(tmp_path / "a.png")
    assert values[0, 0] == 0 and values[0, 1] == 255
    assert values[1, 0] == 64 and values[1, 1] == 191


def test_save_load_matte_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    alpha = rng.random((8, 9))
    save_alpha(alpha, tmp_path / "m.png")
    back = load_matte(tmp_path / "m.png", index=4, stage=Stage.SMOOTHED)
    assert back.index == 4 and back.stage is Stage.SMOOTHED
    # quantization error bounded by half a gray level
    assert np.abs(back.alpha - alpha).max() <= 0.5 / 255 + 1e-12


def test_save_image_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    rgb = rng.random((5, 6, 3))
    save_image(rgb, tmp_path / "f.png")
    back = load_image(tmp_path / "f.png")
    assert np.abs(back - rgb).max() <= 0.5 / 255 + 1e-12


def test_load_image_missing_file(tmp_path):
    with pytest.raises(ImagingError):
        load_image(tmp_path / "nope.png")


def _write_pair(directory, idx, size=(4, 5)):
    h, w = size
    rng = np.random.default_rng(idx)
    save_image(rng.random((h, w, 3)), directory / (FRAME_TEMPLATE % idx))
    gray = np.full((h, w), 128, dtype=np.uint8)
    gray[0, 0] = 0
    gray[-1, -1] = 255
    save_gray(gray, directory / (TRIMAP_TEMPLATE % idx))


def test_load_sequence_sorted_by_index(tmp_path):
    for idx in (3, 0, 12):
        _write_pair(tmp_path, idx)
    frames, trimaps = load_sequence(tmp_path)
    assert [f.index for f in frames] == [0, 3, 12]
    assert len(trimaps) == 3


def test_load_sequence_missing_trimap(tmp_path):
    _write_pair(tmp_path, 0)
    save_image(np.zeros((4, 5, 3)), tmp_path / (FRAME_TEMPLATE % 1))
    with pytest.raises(ImagingError, match="trimap"):
        load_sequence(tmp_path)


def test_load_sequence_dimension_mismatch(tmp_path):
    _write_pair(tmp_path, 0)
    save_image(np.zeros((4, 5, 3)), tmp_path / (FRAME_TEMPLATE % 1))
    gray = np.full((6, 6), 128, dtype=np.uint8)
    gray[0, 0] = 0
    gray[5, 5] = 255
    save_gray(gray, tmp_path / (TRIMAP_TEMPLATE % 1))
    with pytest.raises(ImagingError, match="match"):
        load_sequence(tmp_path)


def test_load_sequence_empty_directory(tmp_path):
    with pytest.raises(ImagingError, match="no frames"):
        load_sequence(tmp_path)


def test_filename_templates():
    assert FRAME_TEMPLATE % 7 == "frame_0007.png"
    assert TRIMAP_TEMPLATE % 7 == "trimap_0007.png"
    assert ALPHA_TEMPLATE % 7 == "alpha_0007.png"
