"""Hit-or-miss thinning with a fixed set of 16 directional erosion kernels.

A kernel is a 3x3 mask over {0, 1, x} (x = don't care). A foreground pixel
whose neighbourhood agrees with the kernel at every non-x cell is erased.
One pass applies one kernel to every pixel at once, reading only the
pre-pass image; one cycle applies the 16 kernels in their stored order.
Cycles repeat until a whole cycle erases nothing.

The built-in kernels only ever erase simple points, never erase the tip of
a one-pixel line, and satisfy Ronse's conditions for parallel deletion, so
every pass keeps the 8-connected components and 4-connected holes of the
image intact (``tests/test_thinning.py`` checks this exhaustively).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_binary

__all__ = [
    "ANY",
    "Kernel",
    "KernelSet",
    "match_patch",
    "erode_pass",
    "skeletonize",
    "default_kernel_set",
    "load_kernel_set",
    "neighbour_codes",
]

ANY = -1
_CHARS = {"0": 0, "1": 1, "x": ANY}
_FAMILIES = "abcd"

# (row, col) of the 8 neighbours; bit b of a neighbourhood code is cell _NEIGHBOURS[b]
_NEIGHBOURS = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2))

# direction-1 member of each family; directions 2-4 are successive clockwise quarter turns
_DEFAULT_BASES = {
    "a": "000/x1x/111",   # flat border facing the empty side
    "b": "x00/110/x1x",   # convex corner
    "c": "000/x1x/110",   # border pixel leaning on a diagonal neighbour
    "d": "x00/11x/x1x",   # corner with the inner diagonal left free
}


@dataclass(frozen=True)
class Kernel:
    id: str
    cells: tuple[int, ...]  # row-major, values 0, 1 or ANY

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        if len(cells) != 9 or any(c not in (0, 1, ANY) for c in cells):
            raise ValueError(f"kernel {self.id}: need 9 cells from {{0, 1, x}}")
        if cells[4] != 1:
            raise ValueError(f"kernel {self.id}: centre cell must be 1")
        if 0 not in cells:
            raise ValueError(f"kernel {self.id}: needs at least one 0 cell")

    @classmethod
    def parse(cls, kid: str, text: str) -> "Kernel":
        """Build from ``"000/x1x/111"`` (rows separated by ``/`` or newlines)."""
        rows = [r.strip() for r in text.replace("/", "\n").split("\n") if r.strip()]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError(f"kernel {kid}: expected 3 rows of 3 characters, got {text!r}")
        try:
            cells = tuple(_CHARS[ch] for row in rows for ch in row)
        except KeyError as exc:
            raise ValueError(f"kernel {kid}: invalid cell character {exc.args[0]!r}") from None
        return cls(kid, cells)

    @property
    def grid(self) -> np.ndarray:
        return np.array(self.cells, dtype=np.int8).reshape(3, 3)

    def rotated(self, kid: str) -> "Kernel":
        """Quarter turn clockwise."""
        return Kernel(kid, tuple(np.rot90(self.grid, -1).ravel()))

    def rows(self) -> list[str]:
        inv = {v: k for k, v in _CHARS.items()}
        g = self.grid
        return ["".join(inv[int(v)] for v in g[i]) for i in range(3)]

    def lut(self) -> np.ndarray:
        """Boolean table over the 256 neighbourhood codes: True where the kernel matches."""
        codes = np.arange(256)
        ok = np.ones(256, dtype=bool)
        for bit, (i, j) in enumerate(_NEIGHBOURS):
            want = self.cells[3 * i + j]
            if want != ANY:
                ok &= ((codes >> bit) & 1) == want
        return ok


class KernelSet:
    """Ordered collection of the 16 kernels a1..d4."""

    def __init__(self, kernels, name: str = "custom"):
        kernels = tuple(kernels)
        expected = {f"{f}{d}" for f in _FAMILIES for d in range(1, 5)}
        ids = [k.id for k in kernels]
        if len(kernels) != 16 or set(ids) != expected:
            raise ValueError(f"a kernel set needs exactly the 16 ids a1..d4, got {ids}")
        self.kernels = kernels
        self.name = name
        self._luts = tuple(k.lut() for k in kernels)

    def __len__(self):
        return len(self.kernels)

    def __iter__(self):
        return iter(self.kernels)

    def __getitem__(self, i):
        return self.kernels[i]

    def __eq__(self, other):
        return isinstance(other, KernelSet) and self.kernels == other.kernels

    def __hash__(self):
        return hash(self.kernels)

    def __repr__(self):
        return f"KernelSet(name={self.name!r})"

    def dumps(self) -> str:
        blocks = [f"{k.id}\n" + "\n".join(k.rows()) for k in self.kernels]
        return "\n\n".join(blocks) + "\n"

    @classmethod
    def loads(cls, text: str, name: str = "custom") -> "KernelSet":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if len(lines) % 4:
            raise ValueError("kernel file must hold blocks of one id line and three rows")
        kernels = [Kernel.parse(lines[i], "\n".join(lines[i + 1:i + 4]))
                   for i in range(0, len(lines), 4)]
        return cls(kernels, name)


def load_kernel_set(ref) -> KernelSet:
    """``"default"`` or a path to a kernel text file."""
    if ref is None or ref == "default":
        return default_kernel_set()
    path = Path(ref)
    return KernelSet.loads(path.read_text(), name=str(path))


def default_kernel_set() -> KernelSet:
    kernels = []
    for family in _FAMILIES:
        k = Kernel.parse(f"{family}1", _DEFAULT_BASES[family])
        kernels.append(k)
        for direction in range(2, 5):
            k = k.rotated(f"{family}{direction}")
            kernels.append(k)
    return KernelSet(kernels, name="default")


def match_patch(patch, kernel: Kernel) -> int:
    """0 when `patch` agrees with `kernel` at every non-x cell (pixel gets erased), else 1."""
    cells = np.asarray(patch).ravel()
    if cells.size != 9:
        raise ValueError("patch must have 9 cells")
    score = 1
    for have, want in zip(cells, kernel.cells):
        score *= int(want == ANY or have == want)
    return 1 - score


def neighbour_codes(img: np.ndarray) -> np.ndarray:
    """8-bit neighbourhood code of every pixel (outside the image reads as 0)."""
    h, w = img.shape
    padded = np.pad(img.astype(np.uint8), 1)
    codes = np.zeros((h, w), dtype=np.uint8)
    for bit, (i, j) in enumerate(_NEIGHBOURS):
        codes |= padded[i:i + h, j:j + w] << bit
    return codes


def _pass(img: np.ndarray, lut: np.ndarray):
    hit = lut[neighbour_codes(img)] & (img == 1)
    if not hit.any():
        return img, False
    out = img.copy()
    out[hit] = 0
    return out, True


def erode_pass(img, kernel: Kernel):
    """One synchronous pass of `kernel`; returns ``(new_image, changed)``."""
    img = check_binary(img)
    return _pass(img, kernel.lut())


def skeletonize(img, kernels: KernelSet | None = None) -> np.ndarray:
    """Thin a binary image to its fixed point under `kernels` (default set if None)."""
    kernels = default_kernel_set() if kernels is None else kernels
    cur = check_binary(img).copy()
    luts = kernels._luts
    while True:
        changed = False
        for lut in luts:
            cur, hit = _pass(cur, lut)
            changed |= hit
        if not changed:
            return cur
