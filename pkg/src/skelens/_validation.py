"""Input validation helpers shared by the functional API and the estimators."""
from __future__ import annotations

import numpy as np


def check_gray(img, name: str = "image") -> np.ndarray:
    """Return `img` as a 2-D uint8 array, raising ``ValueError`` if it cannot be one.

    Float or wide integer input is accepted only when every value is an
    integer in [0, 255]; nothing is silently rescaled.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} has a zero dimension: {arr.shape}")
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if not np.issubdtype(arr.dtype, np.number):
        raise ValueError(f"{name} has non-numeric dtype {arr.dtype}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0 or arr.max() > 255 or np.any(arr != np.round(arr)):
        raise ValueError(f"{name} values must be integers in [0, 255]")
    return arr.astype(np.uint8)


def check_binary(img, name: str = "image") -> np.ndarray:
    """Return `img` as a 2-D uint8 array with values in {0, 1}."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    arr = check_gray(arr, name)
    if arr.size and arr.max() > 1:
        raise ValueError(f"{name} must be binary (values in {{0, 1}})")
    return arr


def is_binary(img) -> bool:
    arr = np.asarray(img)
    return arr.dtype == bool or bool(np.isin(arr, (0, 1)).all())


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def check_random_state(seed) -> np.random.Generator:
    """Turn `seed` into a ``numpy.random.Generator``.

    Generators are passed through untouched; integers, sequences and
    ``SeedSequence`` objects seed a fresh PCG64 stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sub_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """Derive an independent, reproducible child stream from `seed` and `keys`."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])


def as_image_list(X):
    """Split estimator input into a list of 2-D images.

    Returns ``(images, single)`` where `single` records whether `X` was one
    2-D image so the caller can unwrap its result.
    """
    if isinstance(X, np.ndarray):
        if X.ndim == 2:
            return [X], True
        if X.ndim == 3:
            return list(X), False
        raise ValueError(f"expected a 2-D image or a 3-D stack, got shape {X.shape}")
    images = list(X)
    if not images:
        raise ValueError("empty image collection")
    return images, False
