import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from skelens.raster import binarize, load_gray, otsu_threshold, patch_at, save_image

gray_images = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)))


def brute_force_otsu(img):
    """Exhaustive search over every threshold for the largest between-class variance."""
    v = img.ravel().astype(float)
    best, best_t = -1.0, None
    for t in range(1, 256):
        lo, hi = v[v < t], v[v >= t]
        if lo.size == 0 or hi.size == 0:
            continue
        var = lo.size * hi.size * (lo.mean() - hi.mean()) ** 2
        if var > best + 1e-9:
            best, best_t = var, t
    return best_t


def test_load_white_png(tmp_path):
    p = tmp_path / "white.png"
    Image.fromarray(np.full((2, 2), 255, np.uint8)).save(p)
    out = load_gray(p)
    assert out.dtype == np.uint8
    assert out.tolist() == [[255, 255], [255, 255]]


def test_load_rgb_uses_bt601(tmp_path):
    p = tmp_path / "red.png"
    rgb = np.zeros((1, 1, 3), np.uint8)
    rgb[0, 0] = (255, 0, 0)
    Image.fromarray(rgb, "RGB").save(p)
    assert load_gray(p)[0, 0] == round(0.299 * 255) == 76


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match="file not found"):
        load_gray(tmp_path / "nope.png")


def test_load_garbage(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"not an image")
    with pytest.raises(OSError):
        load_gray(p)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_gray_round_trip(tmp_path, suffix):
    img = np.random.default_rng(1).integers(0, 256, (17, 9), dtype=np.uint8)
    p = tmp_path / f"img{suffix}"
    save_image(img, p, binary=False)
    np.testing.assert_array_equal(load_gray(p), img)


def test_pgm_is_binary_p5(tmp_path):
    p = tmp_path / "a.pgm"
    save_image(np.full((3, 4), 7, np.uint8), p)
    assert p.read_bytes()[:2] == b"P5"


def test_binary_saved_as_black_ink(tmp_path):
    p = tmp_path / "one.png"
    save_image(np.array([[1]], np.uint8), p)
    assert load_gray(p)[0, 0] == 0


def test_binary_round_trip_via_fixed_threshold(tmp_path):
    b = (np.random.default_rng(2).random((10, 13)) < 0.4).astype(np.uint8)
    p = tmp_path / "b.png"
    save_image(b, p)
    np.testing.assert_array_equal(binarize(load_gray(p), "fixed", threshold=128), b)


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_save_read_only_dir(tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    try:
        with pytest.raises(OSError):
            save_image(np.zeros((2, 2), np.uint8), d / "x.png")
    finally:
        d.chmod(0o700)


def test_save_missing_dir(tmp_path):
    with pytest.raises(OSError):
        save_image(np.zeros((2, 2), np.uint8), tmp_path / "no" / "x.png")


def test_save_bad_suffix(tmp_path):
    with pytest.raises(ValueError):
        save_image(np.zeros((2, 2), np.uint8), tmp_path / "x.jpg")


def test_otsu_all_white():
    assert binarize(np.full((5, 5), 255, np.uint8)).sum() == 0


def test_otsu_bimodal_matches_brute_force():
    rng = np.random.default_rng(3)
    img = np.where(rng.random((40, 40)) < 0.3, 40, 220).astype(np.uint8)
    img = np.clip(img.astype(int) + rng.integers(-10, 11, img.shape), 0, 255).astype(np.uint8)
    t = otsu_threshold(img)
    assert 40 < t < 220
    assert t == brute_force_otsu(img)


@settings(max_examples=60, deadline=None)
@given(gray_images)
def test_otsu_agrees_with_brute_force(img):
    if np.unique(img).size < 2:
        return
    assert otsu_threshold(img) == brute_force_otsu(img)


def test_fixed_rule():
    img = np.array([[100, 200]], np.uint8)
    assert binarize(img, "fixed", threshold=128).tolist() == [[1, 0]]


def test_fixed_out_of_range():
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2), np.uint8), "fixed", threshold=300)


def test_adaptive_window_too_large():
    with pytest.raises(ValueError):
        binarize(np.zeros((5, 5), np.uint8), "adaptive", window=7)


def test_adaptive_finds_dark_stroke():
    img = np.full((20, 20), 200, np.uint8)
    img[:, 9:11] = 30
    out = binarize(img, "adaptive", window=15, offset=5)
    assert out[:, 9:11].all()
    assert out[:, :5].sum() == 0


@settings(max_examples=80, deadline=None)
@given(gray_images, st.sampled_from(["otsu", "fixed", "adaptive"]))
def test_binarize_is_binary_and_shape_preserving(img, method):
    if method == "adaptive" and min(img.shape) < 3:
        return
    out = binarize(img, method, window=3)
    assert out.shape == img.shape
    assert set(np.unique(out)) <= {0, 1}


def test_patch_corner_zero_padded():
    p = patch_at(np.ones((4, 4), np.uint8), 0, 0)
    assert p.sum() == 4
    assert (p == 0).sum() == 5


def test_patch_interior():
    assert patch_at(np.ones((4, 4), np.uint8), 1, 2).sum() == 9


def test_patch_out_of_bounds():
    with pytest.raises(IndexError):
        patch_at(np.ones((4, 4), np.uint8), -1, 0)


def test_patch_uses_x_as_column():
    img = np.zeros((3, 5), np.uint8)
    img[0, 4] = 1
    assert patch_at(img, 4, 1)[0, 1] == 1


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.integers(0, 1)))
def test_patch_values_come_from_image_or_padding(img):
    allowed = set(np.unique(img)) | {0}
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            assert set(np.unique(patch_at(img, x, y))) <= allowed
