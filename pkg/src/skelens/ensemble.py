"""Skeleton ensembling: many pre-processed skeletons voted down to one.

``senet`` runs every denoising function of a :class:`~skelens.prepool.PhiSet`
on the noisy image, binarizes (Otsu) and thins each result, then repeatedly
fuses random groups of skeletons by weighted voting and re-thins the fused
masks until a single skeleton is left.

Branches and groups are independent, so they may run on a thread pool. The
results never depend on `n_jobs`: all randomness is drawn up front from
seed-derived streams and results are gathered in submission order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_binary, check_gray, sub_seed
from .prepool import PhiSet, apply_denoise_fn, generate_phi_set
from .raster import binarize
from .thinning import KernelSet, default_kernel_set, skeletonize

__all__ = [
    "EnsembleConfig",
    "SkeletonSet",
    "BranchError",
    "extract_skeleton_set",
    "fuse",
    "ensemble_round",
    "senet",
    "max_rounds",
]

_ROUND_STREAM = 0x726F756E64


@dataclass(frozen=True)
class EnsembleConfig:
    phi_count: int = 8
    group_size: int = 3
    weights: tuple[float, ...] | None = None  # None -> uniform
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.phi_count < 1:
            raise ValueError(f"phi_count must be >= 1, got {self.phi_count}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if self.weights is None:
            object.__setattr__(self, "weights", (1.0 / self.group_size,) * self.group_size)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != self.group_size:
            raise ValueError(f"need {self.group_size} weights, got {len(weights)}")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must be non-negative and sum to 1, got {weights}")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")

    def to_dict(self) -> dict:
        return {"phi_count": self.phi_count, "group_size": self.group_size,
                "weights": list(self.weights), "threshold": self.threshold, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleConfig":
        unknown = set(d) - {"phi_count", "group_size", "weights", "threshold", "seed"}
        if unknown:
            raise ValueError(f"unknown ensemble keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("weights") is not None:
            d["weights"] = tuple(d["weights"])
        return cls(**d)


@dataclass(frozen=True)
class SkeletonSet:
    skeletons: tuple[np.ndarray, ...]
    generation: int = 1

    def __post_init__(self):
        sk = tuple(self.skeletons)
        object.__setattr__(self, "skeletons", sk)
        if not sk:
            raise ValueError("a skeleton set cannot be empty")
        if len({s.shape for s in sk}) != 1:
            raise ValueError("all skeletons in a set must share one shape")

    def __len__(self):
        return len(self.skeletons)

    def __iter__(self):
        return iter(self.skeletons)

    def __getitem__(self, i):
        return self.skeletons[i]


class BranchError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"branch {index} failed: {cause}")
        self.index = index
        self.cause = cause


def _map(fn, items, n_jobs: int):
    if n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def extract_skeleton_set(noisy, phi: PhiSet, kernels: KernelSet | None = None,
                         n_jobs: int = 1) -> SkeletonSet:
    """One skeleton per denoising function, in `phi` order (generation 1)."""
    noisy = check_gray(noisy)
    kernels = default_kernel_set() if kernels is None else kernels

    def branch(item):
        i, fn = item
        try:
            return skeletonize(binarize(apply_denoise_fn(fn, noisy), "otsu"), kernels)
        except Exception as exc:
            raise BranchError(i, exc) from exc

    return SkeletonSet(tuple(_map(branch, list(enumerate(phi)), n_jobs)), generation=1)


def fuse(group, weights, threshold: float) -> np.ndarray:
    """Weighted vote: a pixel is ink when the weight of skeletons marking it exceeds `threshold`."""
    group = [check_binary(g) for g in group]
    weights = list(weights)
    if len(group) != len(weights):
        raise ValueError(f"{len(group)} images but {len(weights)} weights")
    if not group:
        raise ValueError("cannot fuse an empty group")
    shape = group[0].shape
    if any(g.shape != shape for g in group):
        raise ValueError("dimension mismatch inside fusion group")
    score = np.zeros(shape, dtype=np.float64)
    for g, w in zip(group, weights):
        score += w * g
    return (score > threshold).astype(np.uint8)


def _round_rng(cfg: EnsembleConfig, generation: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(cfg.seed, _ROUND_STREAM, generation))


def ensemble_round(s: SkeletonSet, cfg: EnsembleConfig, kernels: KernelSet | None = None,
                   rng=None, n_jobs: int = 1) -> SkeletonSet:
    """Fuse a random partition of `s` into groups of ``cfg.group_size`` and re-thin.

    A trailing group of m >= 2 uses the first m weights rescaled to sum to 1;
    a trailing singleton is carried over as is.
    """
    if len(s) < 2:
        raise ValueError("an ensemble round needs at least 2 skeletons")
    kernels = default_kernel_set() if kernels is None else kernels
    rng = _round_rng(cfg, s.generation) if rng is None else rng
    order = rng.permutation(len(s))
    n = cfg.group_size
    groups = [order[i:i + n] for i in range(0, len(order), n)]

    def reduce(idx):
        members = [s[i] for i in idx]
        if len(members) == 1:
            return members[0]
        w = np.asarray(cfg.weights[:len(members)])
        total = w.sum()
        w = w / total if total > 0 else np.full(len(members), 1.0 / len(members))
        return skeletonize(fuse(members, w, cfg.threshold), kernels)

    return SkeletonSet(tuple(_map(reduce, groups, n_jobs)), generation=s.generation + 1)


def max_rounds(phi_count: int, group_size: int) -> int:
    """Upper bound on the number of ensemble rounds for `phi_count` branches."""
    if phi_count <= 1:
        return 0
    return math.ceil(math.log(phi_count, group_size)) + 1


def senet(noisy, cfg: EnsembleConfig | None = None, kernels: KernelSet | None = None, *,
          pool=None, phi: PhiSet | None = None, n_jobs: int = 1, on_generation=None) -> np.ndarray:
    """Ensemble skeleton of a noisy gray image.

    `phi` overrides the function set otherwise drawn from ``cfg.seed`` and
    `pool`. `on_generation`, if given, is called with every intermediate
    :class:`SkeletonSet`, starting with generation 1.
    """
    cfg = EnsembleConfig() if cfg is None else cfg
    kernels = default_kernel_set() if kernels is None else kernels
    if phi is None:
        phi = generate_phi_set(cfg.seed, cfg.phi_count, pool)
    current = extract_skeleton_set(noisy, phi, kernels, n_jobs=n_jobs)
    if on_generation is not None:
        on_generation(current)
    while len(current) > 1:
        current = ensemble_round(current, cfg, kernels, n_jobs=n_jobs)
        if on_generation is not None:
            on_generation(current)
    return current[0]
