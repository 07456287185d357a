"""Processing pool of classic pre-processing primitives and their random composition.

A :class:`DenoiseFn` chains exactly three primitives drawn from a pool;
``DenoiseFn(steps=(p, q, r))`` computes ``p(q(r(img)))``, so the last listed
step touches the image first.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import permutations
from math import perm

import numpy as np
from scipy import ndimage

from ._validation import check_gray, check_random_state, sub_seed

__all__ = [
    "PrimitiveSpec",
    "DenoiseFn",
    "PhiSet",
    "KINDS",
    "KERNEL_SIZES",
    "default_pool",
    "apply_primitive",
    "sample_denoise_fn",
    "apply_denoise_fn",
    "generate_phi_set",
]

KINDS = ("adaptive_threshold", "hist_equalize", "gamma", "bilateral", "gaussian", "median")
KERNEL_SIZES = (3, 5, 7)
_MAX_DRAWS_PER_BRANCH = 1000


@dataclass(frozen=True)
class PrimitiveSpec:
    """One entry of the processing pool.

    Only the fields used by `kind` may be set:

    ========================  =====================================
    kind                      fields
    ========================  =====================================
    ``adaptive_threshold``    ``window`` (odd), ``offset``
    ``hist_equalize``         none
    ``gamma``                 ``gamma`` > 0
    ``bilateral``             ``k``, ``sigma_space``, ``sigma_range``
    ``gaussian``              ``k``, ``sigma``
    ``median``                ``k``
    ========================  =====================================
    """

    kind: str
    k: int | None = None
    gamma: float | None = None
    sigma: float | None = None
    sigma_space: float | None = None
    sigma_range: float | None = None
    window: int | None = None
    offset: float | None = None

    def __post_init__(self):
        required = {
            "adaptive_threshold": {"window", "offset"},
            "hist_equalize": set(),
            "gamma": {"gamma"},
            "bilateral": {"k", "sigma_space", "sigma_range"},
            "gaussian": {"k", "sigma"},
            "median": {"k"},
        }
        if self.kind not in required:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        given = {name for name, value in self._fields() if value is not None}
        if given != required[self.kind]:
            raise ValueError(
                f"{self.kind} takes fields {sorted(required[self.kind])}, got {sorted(given)}")
        if self.k is not None and self.k not in KERNEL_SIZES:
            raise ValueError(f"kernel size must be one of {KERNEL_SIZES}, got {self.k}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for name in ("sigma", "sigma_space", "sigma_range"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.window is not None and (self.window < 3 or self.window % 2 == 0):
            raise ValueError(f"window must be an odd integer >= 3, got {self.window}")

    def _fields(self):
        return [(name, getattr(self, name)) for name in
                ("k", "gamma", "sigma", "sigma_space", "sigma_range", "window", "offset")]

    @property
    def extent(self) -> int:
        """Side length of the neighbourhood this primitive reads (1 for point ops)."""
        if self.k is not None:
            return self.k
        if self.window is not None:
            return self.window
        return 1

    # convenience constructors
    @classmethod
    def adaptive_threshold(cls, window: int = 15, offset: float = 5):
        return cls("adaptive_threshold", window=window, offset=offset)

    @classmethod
    def hist_equalize(cls):
        return cls("hist_equalize")

    @classmethod
    def gamma_transform(cls, g: float):
        return cls("gamma", gamma=g)

    @classmethod
    def bilateral(cls, k: int, sigma_space: float | None = None, sigma_range: float = 50.0):
        return cls("bilateral", k=k, sigma_space=k / 2 if sigma_space is None else sigma_space,
                   sigma_range=sigma_range)

    @classmethod
    def gaussian(cls, k: int, sigma: float | None = None):
        return cls("gaussian", k=k, sigma=k / 3 if sigma is None else sigma)

    @classmethod
    def median(cls, k: int):
        return cls("median", k=k)

    def to_dict(self) -> dict:
        return {key: value for key, value in asdict(self).items() if value is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "PrimitiveSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ValueError(f"primitive must be an object with a 'kind', got {d!r}")
        unknown = set(d) - {"kind", "k", "gamma", "sigma", "sigma_space", "sigma_range",
                            "window", "offset"}
        if unknown:
            raise ValueError(f"unknown primitive keys: {sorted(unknown)}")
        return cls(**d)

    def __str__(self):
        args = ", ".join(f"{name}={value:g}" for name, value in self._fields() if value is not None)
        return f"{self.kind}({args})"


def default_pool() -> list[PrimitiveSpec]:
    """The built-in pool: 13 primitives."""
    pool = [
        PrimitiveSpec.adaptive_threshold(15, 5),
        PrimitiveSpec.hist_equalize(),
        PrimitiveSpec.gamma_transform(0.5),
        PrimitiveSpec.gamma_transform(1.5),
    ]
    for k in KERNEL_SIZES:
        pool.append(PrimitiveSpec.bilateral(k))
        pool.append(PrimitiveSpec.gaussian(k))
        pool.append(PrimitiveSpec.median(k))
    return pool


@dataclass(frozen=True)
class DenoiseFn:
    """Ordered composition of three primitives.

    Sampled functions never repeat a primitive; hand-built ones may, which is
    how :meth:`identity` is expressed.
    """

    steps: tuple[PrimitiveSpec, PrimitiveSpec, PrimitiveSpec]

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if len(steps) != 3:
            raise ValueError(f"a denoising function has exactly 3 steps, got {len(steps)}")
        for step in steps:
            if not isinstance(step, PrimitiveSpec):
                raise TypeError(f"steps must be PrimitiveSpec, got {type(step).__name__}")

    @classmethod
    def identity(cls) -> "DenoiseFn":
        g = PrimitiveSpec.gamma_transform(1.0)
        return cls((g, g, g))

    def __call__(self, img):
        return apply_denoise_fn(self, img)

    def to_list(self) -> list[dict]:
        return [step.to_dict() for step in self.steps]

    @classmethod
    def from_list(cls, steps) -> "DenoiseFn":
        return cls(tuple(PrimitiveSpec.from_dict(s) for s in steps))

    def __str__(self):
        return " . ".join(str(s) for s in self.steps)


@dataclass(frozen=True)
class PhiSet:
    fns: tuple[DenoiseFn, ...]
    seed: int

    def __post_init__(self):
        fns = tuple(self.fns)
        object.__setattr__(self, "fns", fns)
        if not fns:
            raise ValueError("PhiSet must contain at least one function")
        if len({f.steps for f in fns}) != len(fns):
            raise ValueError("PhiSet functions must have distinct step sequences")

    def __len__(self):
        return len(self.fns)

    def __iter__(self):
        return iter(self.fns)

    def __getitem__(self, i):
        return self.fns[i]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "fns": [f.to_list() for f in self.fns]}

    @classmethod
    def from_dict(cls, d: dict) -> "PhiSet":
        return cls(tuple(DenoiseFn.from_list(f) for f in d["fns"]), int(d["seed"]))


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def _gamma(img, g):
    lut = _to_uint8(255.0 * (np.arange(256) / 255.0) ** g)
    return lut[img]


def _hist_equalize(img):
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    cdf_min = cdf[np.flatnonzero(hist)[0]]
    n = img.size
    if n == cdf_min:
        return img.copy()
    lut = _to_uint8((cdf - cdf_min) * 255.0 / (n - cdf_min))
    return lut[img]


def _bilateral(img, k, sigma_space, sigma_range):
    r = k // 2
    src = img.astype(np.float64)
    padded = np.pad(src, r, mode="symmetric")
    h, w = img.shape
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            weight = (np.exp(-(dx * dx + dy * dy) / (2.0 * sigma_space ** 2))
                      * np.exp(-((shifted - src) ** 2) / (2.0 * sigma_range ** 2)))
            num += weight * shifted
            den += weight
    return _to_uint8(num / den)


def apply_primitive(img, p: PrimitiveSpec) -> np.ndarray:
    """Apply one pool primitive; output has the input's shape and stays uint8.

    Neighbourhood filters extend the image by mirroring it at the border
    (``d c b a | a b c d``).
    """
    img = check_gray(img)
    if p.extent > min(img.shape):
        raise ValueError(f"{p} needs a {p.extent}x{p.extent} neighbourhood; image is {img.shape}")
    if p.kind == "gamma":
        return _gamma(img, p.gamma)
    if p.kind == "hist_equalize":
        return _hist_equalize(img)
    if p.kind == "median":
        return ndimage.median_filter(img, size=p.k, mode="reflect")
    if p.kind == "gaussian":
        out = ndimage.gaussian_filter(img.astype(np.float64), sigma=p.sigma,
                                      radius=p.k // 2, mode="reflect")
        return _to_uint8(out)
    if p.kind == "bilateral":
        return _bilateral(img, p.k, p.sigma_space, p.sigma_range)
    if p.kind == "adaptive_threshold":
        mean = ndimage.uniform_filter(img.astype(np.float64), size=p.window, mode="reflect")
        return np.where(img < mean - p.offset, 0, 255).astype(np.uint8)
    raise ValueError(f"unknown primitive kind {p.kind!r}")  # pragma: no cover


def sample_denoise_fn(rng, pool) -> DenoiseFn:
    """Draw three distinct pool entries, in order, from `rng`."""
    pool = list(pool)
    if len(pool) < 3:
        raise ValueError(f"pool needs at least 3 primitives, has {len(pool)}")
    rng = check_random_state(rng)
    idx = rng.choice(len(pool), size=3, replace=False)
    return DenoiseFn(tuple(pool[i] for i in idx))


def apply_denoise_fn(f: DenoiseFn, img) -> np.ndarray:
    out = check_gray(img)
    for step in reversed(f.steps):
        out = apply_primitive(out, step)
    return out


def generate_phi_set(seed: int, count: int, pool=None) -> PhiSet:
    """Draw `count` denoising functions with pairwise-distinct step sequences.

    Branch ``i`` draws from its own stream seeded by ``(seed, i)``; a branch
    whose draw repeats an earlier branch keeps drawing from that stream.
    """
    pool = default_pool() if pool is None else list(pool)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if len(set(pool)) != len(pool):
        raise ValueError("pool entries must be distinct")
    if len(pool) < 3:
        raise ValueError(f"pool needs at least 3 primitives, has {len(pool)}")
    available = perm(len(pool), 3)
    if count > available:
        raise ValueError(
            f"pool of {len(pool)} primitives yields only {available} distinct functions; "
            f"{count} requested")
    fns: list[DenoiseFn] = []
    seen: set = set()
    for i in range(count):
        rng = np.random.default_rng(sub_seed(seed, i))
        for _ in range(_MAX_DRAWS_PER_BRANCH):
            fn = sample_denoise_fn(rng, pool)
            if fn.steps not in seen:
                break
        else:
            # dense request: fall back to the first unused sequence in a seeded order
            remaining = [s for s in permutations(pool, 3) if s not in seen]
            fn = DenoiseFn(remaining[rng.integers(len(remaining))])
        seen.add(fn.steps)
        fns.append(fn)
    return PhiSet(tuple(fns), int(seed))
