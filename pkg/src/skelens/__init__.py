"""Robust single-pixel skeletons for degraded character images.

The package offers a functional API (``raster``, ``prepool``, ``thinning``,
``ensemble``, ``degrade``, ``metrics``) and scikit-learn style transformers
in ``skelens.estimators``.
"""
__version__ = "0.1.0"

from .degrade import DegradeRecipe, NoiseSpec, SignalDepSpec, degrade, synthesize_dsyn
from .ensemble import EnsembleConfig, senet
from .estimators import Binarizer, Degrader, SkeletonEnsemble, Skeletonizer
from .metrics import psnr, skeleton_loss, ssim
from .prepool import DenoiseFn, PrimitiveSpec, default_pool, generate_phi_set
from .raster import binarize, load_gray, save_image
from .thinning import KernelSet, default_kernel_set, skeletonize

__all__ = [
    "Binarizer",
    "DegradeRecipe",
    "Degrader",
    "DenoiseFn",
    "EnsembleConfig",
    "KernelSet",
    "NoiseSpec",
    "PrimitiveSpec",
    "SignalDepSpec",
    "SkeletonEnsemble",
    "Skeletonizer",
    "binarize",
    "default_kernel_set",
    "default_pool",
    "degrade",
    "generate_phi_set",
    "load_gray",
    "psnr",
    "save_image",
    "senet",
    "skeleton_loss",
    "skeletonize",
    "ssim",
    "synthesize_dsyn",
]
