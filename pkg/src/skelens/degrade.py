"""Synthetic degradation of clean character images.

The model is ``Y = W(X + sum_i f(N_i))``: several additive noise fields,
each at a randomly drawn level, are summed onto the clean image and the
result is passed through a signal-dependent distortion ``W``.

All randomness comes from numpy's PCG64 generator. Sub-streams are derived
with ``SeedSequence([seed, key, ...])`` so every image in a corpus can be
regenerated on its own.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import check_gray, check_random_state

__all__ = [
    "NoiseSpec",
    "SignalDepSpec",
    "DegradeRecipe",
    "add_mixed_noise",
    "apply_signal_dependent",
    "synthesize_dsyn",
    "degrade",
    "DSYN_SIGMA_RANGE",
]

DSYN_SIGMA_RANGE = (5.0, 15.0)
# large enough that any impulse saturates after the other fields are added
_IMPULSE = 1.0e4

_NOISE_FIELDS = {
    "awgn": {"sigma"},
    "salt_pepper": {"p"},
    "blob": {"count", "radius_range", "intensity"},
    "background_gradient": {"amplitude"},
}


@dataclass(frozen=True)
class NoiseSpec:
    """One additive noise category with its nominal level.

    ``level_jitter`` is the standard deviation of a per-image Gaussian
    perturbation of the level (sigma, p, count or amplitude); the drawn level
    is clamped to the valid range.
    """

    kind: str
    sigma: float | None = None
    p: float | None = None
    count: int | None = None
    radius_range: tuple[float, float] | None = None
    intensity: float | None = None
    amplitude: float | None = None
    level_jitter: float = 0.0

    def __post_init__(self):
        if self.kind not in _NOISE_FIELDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        given = {name for name in ("sigma", "p", "count", "radius_range", "intensity", "amplitude")
                 if getattr(self, name) is not None}
        if given != _NOISE_FIELDS[self.kind]:
            raise ValueError(
                f"{self.kind} takes fields {sorted(_NOISE_FIELDS[self.kind])}, got {sorted(given)}")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.p is not None and not 0 <= self.p <= 1:
            raise ValueError("p must be in [0, 1]")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be >= 0")
        if self.amplitude is not None and not 0 <= self.amplitude <= 255:
            raise ValueError("amplitude must be in [0, 255]")
        if self.intensity is not None and not 0 <= self.intensity <= 255:
            raise ValueError("intensity must be in [0, 255]")
        if self.radius_range is not None:
            lo, hi = self.radius_range
            object.__setattr__(self, "radius_range", (float(lo), float(hi)))
            if not 0 < lo <= hi:
                raise ValueError("radius_range must satisfy 0 < low <= high")
        if self.level_jitter < 0:
            raise ValueError("level_jitter must be >= 0")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if "radius_range" in d:
            d["radius_range"] = list(d["radius_range"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        unknown = set(d) - {"kind", "sigma", "p", "count", "radius_range", "intensity",
                            "amplitude", "level_jitter"}
        if unknown:
            raise ValueError(f"unknown noise keys: {sorted(unknown)}")
        d = dict(d)
        if "radius_range" in d:
            d["radius_range"] = tuple(d["radius_range"])
        return cls(**d)


@dataclass(frozen=True)
class SignalDepSpec:
    kind: str = "identity"
    sigma_w: float | None = None
    levels: int | None = None

    def __post_init__(self):
        if self.kind == "identity":
            ok = self.sigma_w is None and self.levels is None
        elif self.kind == "mult_gauss":
            ok = self.sigma_w is not None and self.levels is None and self.sigma_w >= 0
        elif self.kind == "quantize":
            ok = self.levels is not None and self.sigma_w is None and 2 <= self.levels <= 256
        else:
            raise ValueError(f"unknown signal-dependent kind {self.kind!r}")
        if not ok:
            raise ValueError(f"invalid parameters for {self.kind}: "
                             f"sigma_w={self.sigma_w}, levels={self.levels}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "SignalDepSpec":
        unknown = set(d) - {"kind", "sigma_w", "levels"}
        if unknown:
            raise ValueError(f"unknown signal_dep keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class DegradeRecipe:
    noises: tuple[NoiseSpec, ...] = ()
    signal_dep: SignalDepSpec = field(default_factory=SignalDepSpec)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "noises", tuple(self.noises))

    def to_dict(self) -> dict:
        return {"noises": [n.to_dict() for n in self.noises],
                "signal_dep": self.signal_dep.to_dict(),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "DegradeRecipe":
        unknown = set(d) - {"noises", "signal_dep", "seed"}
        if unknown:
            raise ValueError(f"unknown recipe keys: {sorted(unknown)}")
        return cls(tuple(NoiseSpec.from_dict(n) for n in d.get("noises", [])),
                   SignalDepSpec.from_dict(d.get("signal_dep", {"kind": "identity"})),
                   int(d.get("seed", 0)))


def _jittered(level, jitter, rng, lo=0.0, hi=np.inf):
    if jitter > 0:
        level = level + jitter * rng.standard_normal()
    return float(min(max(level, lo), hi))


def _noise_field(clean: np.ndarray, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    h, w = clean.shape
    if spec.kind == "awgn":
        sigma = _jittered(spec.sigma, spec.level_jitter, rng)
        return rng.normal(0.0, sigma, size=(h, w)) if sigma > 0 else np.zeros((h, w))
    if spec.kind == "salt_pepper":
        p = _jittered(spec.p, spec.level_jitter, rng, 0.0, 1.0)
        hit = rng.random((h, w)) < p
        salt = rng.random((h, w)) < 0.5
        return np.where(hit, np.where(salt, _IMPULSE, -_IMPULSE), 0.0)
    if spec.kind == "blob":
        count = int(round(_jittered(spec.count, spec.level_jitter, rng)))
        mask = np.zeros((h, w), dtype=bool)
        yy, xx = np.mgrid[0:h, 0:w]
        lo, hi = spec.radius_range
        for _ in range(count):
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            ry, rx = rng.uniform(lo, hi, size=2)
            theta = rng.uniform(0, np.pi)
            c, s = np.cos(theta), np.sin(theta)
            u = (xx - cx) * c + (yy - cy) * s
            v = -(xx - cx) * s + (yy - cy) * c
            mask |= (u / rx) ** 2 + (v / ry) ** 2 <= 1.0
        return np.where(mask, spec.intensity - clean.astype(np.float64), 0.0)
    if spec.kind == "background_gradient":
        amplitude = _jittered(spec.amplitude, spec.level_jitter, rng, 0.0, 255.0)
        theta = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:h, 0:w]
        proj = xx * np.cos(theta) + yy * np.sin(theta)
        span = proj.max() - proj.min()
        ramp = (proj - proj.min()) / span if span > 0 else np.zeros((h, w))
        # darkening stain, strongest on one side
        return -amplitude * ramp
    raise ValueError(f"unknown noise kind {spec.kind!r}")  # pragma: no cover


def add_mixed_noise(clean, noises, rng) -> np.ndarray:
    """Sum one noise field per spec onto `clean`, round half-to-even and clamp."""
    clean = check_gray(clean)
    noises = list(noises)
    if not noises:
        return clean.copy()
    rng = check_random_state(rng)
    total = clean.astype(np.float64)
    for spec in noises:
        total = total + _noise_field(clean, spec, rng)
    return np.clip(np.rint(total), 0, 255).astype(np.uint8)


def apply_signal_dependent(img, spec: SignalDepSpec, rng) -> np.ndarray:
    img = check_gray(img)
    if spec.kind == "identity":
        return img.copy()
    if spec.kind == "mult_gauss":
        rng = check_random_state(rng)
        eps = rng.normal(0.0, spec.sigma_w, size=img.shape) if spec.sigma_w > 0 else 0.0
        return np.clip(np.rint(img * (1.0 + eps)), 0, 255).astype(np.uint8)
    if spec.kind == "quantize":
        step = 255.0 / (spec.levels - 1)
        return np.clip(np.rint(np.rint(img / step) * step), 0, 255).astype(np.uint8)
    raise ValueError(f"unknown signal-dependent kind {spec.kind!r}")  # pragma: no cover


def synthesize_dsyn(clean, rng, sigma_range=DSYN_SIGMA_RANGE) -> np.ndarray:
    """Additive Gaussian noise with a per-image standard deviation ~ U(sigma_range)."""
    rng = check_random_state(rng)
    lo, hi = sigma_range
    sigma = rng.uniform(lo, hi)
    return add_mixed_noise(clean, [NoiseSpec("awgn", sigma=sigma)], rng)


def degrade(clean, recipe: DegradeRecipe, rng=None) -> np.ndarray:
    """``W(clean + sum of noise fields)``; `rng` defaults to one seeded by ``recipe.seed``."""
    rng = check_random_state(recipe.seed if rng is None else rng)
    noisy = add_mixed_noise(clean, recipe.noises, rng)
    return apply_signal_dependent(noisy, recipe.signal_dep, rng)
