"""Image-pair metrics and manifest-driven corpus evaluation."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import __version__
from ._validation import check_gray, check_same_shape, is_binary
from .raster import binarize, load_gray
from .thinning import KernelSet, default_kernel_set, skeletonize

__all__ = [
    "PSNR_CAP",
    "psnr",
    "ssim",
    "skeleton_loss",
    "PairEntry",
    "PairManifest",
    "PairRecord",
    "MetricsReport",
    "evaluate_pairs",
]

log = logging.getLogger(__name__)

PSNR_CAP = 99.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a, b, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical images give ``PSNR_CAP``."""
    a = check_gray(a, "a").astype(np.float64)
    b = check_gray(b, "b").astype(np.float64)
    check_same_shape(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(peak ** 2 / mse), PSNR_CAP))


def ssim(a, b, data_range: float = 255.0) -> float:
    """Mean structural similarity over all fully-inside 11x11 Gaussian windows.

    Window sigma 1.5, K1 = 0.01, K2 = 0.03, population (weighted) moments.
    """
    a = check_gray(a, "a").astype(np.float64)
    b = check_gray(b, "b").astype(np.float64)
    check_same_shape(a, b)
    if min(a.shape) < SSIM_WIN:
        raise ValueError(f"SSIM needs images of at least {SSIM_WIN}x{SSIM_WIN}, got {a.shape}")
    r = SSIM_WIN // 2

    def filt(x):
        out = ndimage.gaussian_filter(x, sigma=SSIM_SIGMA, radius=r, mode="reflect")
        return out[r:-r, r:-r]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
            / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(smap.mean())


def _as_skeleton(img, kernels: KernelSet) -> np.ndarray:
    arr = np.asarray(img)
    if is_binary(arr):
        binary = arr.astype(np.uint8)
    else:
        binary = binarize(arr, "otsu")
    return skeletonize(binary, kernels)


def skeleton_loss(candidate, reference, theta: float = 1.0, kernels: KernelSet | None = None) -> float:
    """Fraction of pixels where the skeletons of the two images differ, times `theta`.

    Inputs holding only 0/1 (or bool) are taken as binary ink masks; anything
    else is binarized with Otsu first.
    """
    kernels = default_kernel_set() if kernels is None else kernels
    sa = _as_skeleton(candidate, kernels)
    sb = _as_skeleton(reference, kernels)
    check_same_shape(sa, sb)
    h, w = sa.shape
    diff = int(np.count_nonzero(sa != sb))
    return theta * diff / (h * w)


@dataclass(frozen=True)
class PairEntry:
    id: str
    noisy: str
    clean: str


@dataclass
class PairManifest:
    """Noisy/clean file pairs; relative paths resolve against `root`."""

    entries: list[PairEntry]
    root: Path = Path(".")

    @classmethod
    def load(cls, path) -> "PairManifest":
        path = Path(path)
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, list):
            raise ValueError(f"{path}: manifest must be a JSON array")
        entries = []
        for i, item in enumerate(raw):
            if not isinstance(item, dict) or set(item) != {"id", "noisy", "clean"}:
                raise ValueError(f"{path}: entry {i} must have exactly keys id, noisy, clean")
            entries.append(PairEntry(str(item["id"]), str(item["noisy"]), str(item["clean"])))
        return cls(entries, path.parent)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump([asdict(e) for e in self.entries], fh, indent=2)
            fh.write("\n")

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.root / p

    def __len__(self):
        return len(self.entries)


@dataclass
class PairRecord:
    id: str
    psnr: float
    ssim: float
    sk_loss: float


@dataclass
class MetricsReport:
    records: list[PairRecord]
    aggregates: dict
    config: dict
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "aggregates": self.aggregates,
            "skipped": self.skipped,
            "config": self.config,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "psnr", "ssim", "sk_loss"])
            for r in self.records:
                writer.writerow([r.id, f"{r.psnr:.6f}", f"{r.ssim:.6f}", f"{r.sk_loss:.8f}"])


def _evaluate_one(manifest: PairManifest, entry: PairEntry, theta: float, kernels: KernelSet):
    noisy = load_gray(manifest.resolve(entry.noisy))
    clean = load_gray(manifest.resolve(entry.clean))
    if noisy.shape != clean.shape:
        raise ValueError(f"dimension mismatch: noisy {noisy.shape} vs clean {clean.shape}")
    return PairRecord(entry.id, psnr(noisy, clean), ssim(noisy, clean),
                      skeleton_loss(noisy, clean, theta, kernels))


def evaluate_pairs(manifest: PairManifest, *, skip_bad: bool = False, theta: float = 1.0,
                   kernels: KernelSet | None = None, n_jobs: int = 1) -> MetricsReport:
    """Score every noisy/clean pair and average over pairs.

    A pair that fails to load or has mismatched sizes raises ``PairError``
    naming its id, unless `skip_bad` is set, in which case it is listed in
    ``report.skipped``. Records keep manifest order whatever `n_jobs` is.
    """
    if len(manifest) == 0:
        raise ValueError("manifest is empty")
    kernels = default_kernel_set() if kernels is None else kernels

    def run(entry):
        try:
            return _evaluate_one(manifest, entry, theta, kernels)
        except (OSError, ValueError) as exc:
            return exc

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, manifest.entries))
    else:
        results = [run(e) for e in manifest.entries]

    records, skipped = [], []
    for entry, res in zip(manifest.entries, results):
        if isinstance(res, Exception):
            if not skip_bad:
                raise PairError(entry.id, res)
            log.warning("skipping pair %s: %s", entry.id, res)
            skipped.append({"id": entry.id, "error": str(res)})
        else:
            records.append(res)
    if not records:
        raise ValueError("no pair could be evaluated")

    aggregates = {
        "n_pairs": len(records),
        "psnr": float(np.mean([r.psnr for r in records])),
        "ssim": float(np.mean([r.ssim for r in records])),
        "sk_loss": float(np.mean([r.sk_loss for r in records])),
    }
    config = {
        "version": __version__,
        "aggregation": "unweighted mean over pairs",
        "targets": "grayscale as loaded",
        "psnr_peak": 255.0,
        "psnr_cap": PSNR_CAP,
        "ssim": {"window": SSIM_WIN, "sigma": SSIM_SIGMA, "K1": SSIM_K1, "K2": SSIM_K2},
        "sk_loss_theta": theta,
        "kernels": kernels.name,
    }
    return MetricsReport(records, aggregates, config, skipped)


class PairError(Exception):
    """A manifest entry could not be evaluated."""

    def __init__(self, pair_id: str, cause: Exception):
        super().__init__(f"pair {pair_id}: {cause}")
        self.pair_id = pair_id
        self.cause = cause
