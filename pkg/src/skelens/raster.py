"""Raster I/O, binarization and 3x3 patch access.

Images are plain numpy arrays:

* gray images are 2-D ``uint8`` arrays in [0, 255];
* binary images are 2-D ``uint8`` arrays in {0, 1} where 1 is ink
  (dark foreground) and 0 is paper.

On disk, binary images are written ink-black (0) on white (255) so they
look like the documents they came from.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin, UnidentifiedImageError
from scipy import ndimage

from ._validation import check_binary, check_gray, is_binary

__all__ = [
    "load_gray",
    "save_image",
    "binarize",
    "otsu_threshold",
    "patch_at",
    "IMAGE_SUFFIXES",
]

IMAGE_SUFFIXES = (".png", ".pgm")

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


def load_gray(path) -> np.ndarray:
    """Read an 8-bit image file as a gray ``uint8`` array.

    Colour input is reduced to BT.601 luminance, rounded to the nearest
    integer. Alpha channels are dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.uint8).copy()
            elif mode == "1":
                arr = np.asarray(im.convert("L"), dtype=np.uint8).copy()
            elif mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ValueError(f"{path}: {mode} images are not supported (8-bit only)")
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = np.clip(np.rint(rgb @ _LUMA), 0, 255).astype(np.uint8)
    except UnidentifiedImageError as exc:
        raise OSError(f"cannot decode image: {path}") from exc
    if arr.ndim != 2 or 0 in arr.shape:
        raise ValueError(f"{path}: zero-dimension image")
    return arr


def save_image(img, path, *, binary: bool | None = None, text: dict | None = None) -> None:
    """Write a gray or binary image as PNG or binary PGM (chosen by suffix).

    With ``binary=None`` the kind is inferred: boolean arrays and arrays
    holding only 0 and 1 are treated as binary and written with ink = 0,
    paper = 255. Pass ``binary=False`` to store such an array as gray levels.
    `text` entries are stored as PNG text chunks (ignored for PGM).
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES:
        raise ValueError(f"unsupported image format {suffix!r}; use one of {IMAGE_SUFFIXES}")
    if binary is None:
        binary = is_binary(img)
    if binary:
        data = np.where(check_binary(img) == 1, 0, 255).astype(np.uint8)
    else:
        data = check_gray(img)
    parent = path.parent
    if not parent.is_dir():
        raise FileNotFoundError(f"directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PermissionError(f"cannot write to {parent}")
    im = Image.fromarray(data, mode="L")
    if suffix == ".png":
        info = PngImagePlugin.PngInfo()
        for key, value in (text or {}).items():
            info.add_text(str(key), str(value))
        im.save(path, format="PNG", pnginfo=info)
    else:
        im.save(path, format="PPM")


def otsu_threshold(img) -> int:
    """Otsu's threshold `t` for the rule ``ink = value < t``.

    Maximises the between-class variance of the split {v < t} / {v >= t}
    over t in 1..255; ties go to the smallest t. A single-level image has no
    split and returns its level, which marks every pixel as background.
    """
    img = check_gray(img)
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    levels = np.flatnonzero(hist)
    if levels.size == 1:
        return int(levels[0])
    total = hist.sum()
    weighted = hist * np.arange(256)
    # class 0 holds levels < t, so cumulate up to t-1
    w0 = np.cumsum(hist)[:-1]
    s0 = np.cumsum(weighted)[:-1]
    w1 = total - w0
    mu_total = weighted.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = s0 / w0
        mu1 = (mu_total - s0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[(w0 == 0) | (w1 == 0)] = -1.0
    return int(np.argmax(between)) + 1


def binarize(img, method: str = "otsu", *, threshold: int = 128,
             window: int = 15, offset: float = 5) -> np.ndarray:
    """Binarize a gray image; dark pixels become foreground (1).

    Parameters
    ----------
    method : {"otsu", "fixed", "adaptive"}
        ``fixed`` uses `threshold`; ``adaptive`` compares each pixel with the
        mean of its `window` x `window` neighbourhood (reflected borders)
        minus `offset`.
    """
    img = check_gray(img)
    if method == "otsu":
        t = otsu_threshold(img)
        return (img < t).astype(np.uint8)
    if method == "fixed":
        if not 0 <= threshold <= 255:
            raise ValueError(f"fixed threshold must be in [0, 255], got {threshold}")
        return (img < threshold).astype(np.uint8)
    if method == "adaptive":
        if window < 1 or window % 2 == 0:
            raise ValueError(f"adaptive window must be a positive odd integer, got {window}")
        if window > min(img.shape):
            raise ValueError(f"adaptive window {window} larger than image {img.shape}")
        mean = ndimage.uniform_filter(img.astype(np.float64), size=window, mode="reflect")
        return (img < mean - offset).astype(np.uint8)
    raise ValueError(f"unknown binarization method {method!r}")


def patch_at(img, x: int, y: int) -> np.ndarray:
    """3x3 neighbourhood centred on column `x`, row `y`; outside reads as 0."""
    img = check_binary(img)
    h, w = img.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"patch centre ({x}, {y}) outside {w}x{h} image")
    padded = np.pad(img, 1)
    return padded[y:y + 3, x:x + 3].copy()
