"""scikit-learn style wrappers around the functional API.

Every transformer accepts a single 2-D image, a 3-D stack, or a list of
2-D images (sizes may differ in a list) and returns the same kind of
container. None of them learns anything from data; ``fit`` only validates
hyper-parameters and materialises derived state (kernel set, function set).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_image_list, check_binary, check_gray, check_random_state, sub_seed
from .degrade import DegradeRecipe, degrade, synthesize_dsyn
from .ensemble import EnsembleConfig, senet
from .prepool import generate_phi_set
from .raster import binarize
from .thinning import KernelSet, load_kernel_set, skeletonize

__all__ = ["Binarizer", "Skeletonizer", "SkeletonEnsemble", "Degrader"]


def _wrap(outputs, single, X):
    if single:
        return outputs[0]
    if isinstance(X, np.ndarray):
        return np.stack(outputs)
    return outputs


class Binarizer(TransformerMixin, BaseEstimator):
    """Dark-ink binarization (``otsu``, ``fixed`` or ``adaptive``)."""

    def __init__(self, method="otsu", threshold=128, window=15, offset=5):
        self.method = method
        self.threshold = threshold
        self.window = window
        self.offset = offset

    def fit(self, X=None, y=None):
        if self.method not in ("otsu", "fixed", "adaptive"):
            raise ValueError(f"unknown binarization method {self.method!r}")
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self)
        images, single = as_image_list(X)
        out = [binarize(check_gray(im), self.method, threshold=self.threshold,
                        window=self.window, offset=self.offset) for im in images]
        return _wrap(out, single, X)


def _resolve_kernels(kernels) -> KernelSet:
    return kernels if isinstance(kernels, KernelSet) else load_kernel_set(kernels)


class Skeletonizer(TransformerMixin, BaseEstimator):
    """Thin images to single-pixel skeletons.

    Binary input (values in {0, 1}) is thinned directly; gray input is first
    binarized with `binarize`, unless `binarize` is None.
    """

    def __init__(self, kernels="default", binarize="otsu"):
        self.kernels = kernels
        self.binarize = binarize

    def fit(self, X=None, y=None):
        self.kernels_ = _resolve_kernels(self.kernels)
        return self

    def transform(self, X):
        check_is_fitted(self)
        images, single = as_image_list(X)
        out = []
        for im in images:
            arr = np.asarray(im)
            if self.binarize is not None and not (arr.dtype == bool or arr.max(initial=0) <= 1):
                arr = binarize(check_gray(arr), self.binarize)
            out.append(skeletonize(check_binary(arr), self.kernels_))
        return _wrap(out, single, X)


class SkeletonEnsemble(TransformerMixin, BaseEstimator):
    """Ensemble skeleton extraction from noisy gray images.

    Parameters
    ----------
    phi_count : int
        Number of random denoising functions (branches).
    group_size : int
        Skeletons fused per group in each round.
    weights : sequence of float or None
        Fusion weights, one per group member; uniform when None.
    threshold : float
        Vote threshold in (0, 1); 0.5 with uniform weights is a majority vote.
    seed : int
        Seeds the function set and the round groupings.
    pool : list of PrimitiveSpec or None
        Processing pool; the built-in pool when None.
    kernels : "default", path or KernelSet
    n_jobs : int
        Threads used for branches and groups. Output does not depend on it.

    Attributes
    ----------
    phi_ : PhiSet
    config_ : EnsembleConfig
    kernels_ : KernelSet
    """

    def __init__(self, phi_count=8, group_size=3, weights=None, threshold=0.5, seed=0,
                 pool=None, kernels="default", n_jobs=1):
        self.phi_count = phi_count
        self.group_size = group_size
        self.weights = weights
        self.threshold = threshold
        self.seed = seed
        self.pool = pool
        self.kernels = kernels
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.config_ = EnsembleConfig(
            phi_count=self.phi_count, group_size=self.group_size,
            weights=None if self.weights is None else tuple(self.weights),
            threshold=self.threshold, seed=self.seed)
        self.kernels_ = _resolve_kernels(self.kernels)
        self.phi_ = generate_phi_set(self.seed, self.phi_count, self.pool)
        return self

    def transform(self, X):
        check_is_fitted(self)
        images, single = as_image_list(X)
        out = [senet(check_gray(im), self.config_, self.kernels_, phi=self.phi_,
                     n_jobs=self.n_jobs) for im in images]
        return _wrap(out, single, X)


class Degrader(TransformerMixin, BaseEstimator):
    """Synthetic degradation of clean images.

    With ``recipe=None`` each image receives Gaussian noise whose standard
    deviation is drawn from ``U(sigma_range)``; otherwise the given
    :class:`~skelens.degrade.DegradeRecipe` is applied. Image ``i`` of a
    batch uses its own stream derived from ``(seed, i)``.
    """

    def __init__(self, recipe=None, sigma_range=(5.0, 15.0), seed=0):
        self.recipe = recipe
        self.sigma_range = sigma_range
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.recipe is not None and not isinstance(self.recipe, DegradeRecipe):
            self.recipe_ = DegradeRecipe.from_dict(self.recipe)
        else:
            self.recipe_ = self.recipe
        lo, hi = self.sigma_range
        if not 0 <= lo <= hi:
            raise ValueError(f"invalid sigma_range {self.sigma_range}")
        return self

    def transform(self, X):
        check_is_fitted(self)
        images, single = as_image_list(X)
        out = []
        for i, im in enumerate(images):
            rng = check_random_state(sub_seed(self.seed, i))
            if self.recipe_ is None:
                out.append(synthesize_dsyn(im, rng, self.sigma_range))
            else:
                out.append(degrade(im, self.recipe_, rng))
        return _wrap(out, single, X)
