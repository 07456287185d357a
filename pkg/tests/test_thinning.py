import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage as ndi

from glyphs import real_glyphs, synthetic_glyphs
from skelens.raster import patch_at
from skelens.thinning import (
    ANY,
    Kernel,
    KernelSet,
    default_kernel_set,
    erode_pass,
    load_kernel_set,
    match_patch,
    skeletonize,
)

KS = default_kernel_set()
EIGHT = np.ones((3, 3), int)
FOUR = ndi.generate_binary_structure(2, 1)


def naive_match(patch, kernel):
    """Cell-by-cell loop: 0 on a full match, 1 otherwise."""
    for have, want in zip(np.ravel(patch), kernel.cells):
        if want != ANY and have != want:
            return 1
    return 0


def n_components(img):
    return ndi.label(img, EIGHT)[1]


def has_2x2(img):
    return bool((img[:-1, :-1] & img[1:, :-1] & img[:-1, 1:] & img[1:, 1:]).any())


def is_simple(patch):
    """Centre of a 3x3 patch is deletable without changing 8/4 topology (direct labelling)."""
    without = patch.copy()
    without[1, 1] = 0
    if ndi.label(without, EIGHT)[1] != 1:
        return False
    bg = 1 - without
    labels, _ = ndi.label(bg, FOUR)
    touching = {labels[i, j] for i, j in ((0, 1), (1, 0), (1, 2), (2, 1)) if without[i, j] == 0}
    return len(touching) == 1


def all_patches():
    for bits in range(512):
        yield np.array([(bits >> t) & 1 for t in range(9)], np.uint8).reshape(3, 3)


# --- match_patch -------------------------------------------------------------

@pytest.mark.parametrize("kernel", list(KS), ids=lambda k: k.id)
def test_match_exhaustive(kernel):
    for patch in all_patches():
        assert match_patch(patch, kernel) == naive_match(patch, kernel)


def test_match_one_disagreeing_cell():
    k = KS[0]
    patch = np.where(k.grid == ANY, 0, k.grid).astype(np.uint8)
    assert match_patch(patch, k) == 0
    i = next(i for i, c in enumerate(k.cells) if c == 0)
    patch.ravel()[i] = 1
    assert match_patch(patch, k) == 1


def test_all_any_kernel_matches_everything():
    # bypasses Kernel validation on purpose: such kernels are not allowed in a set
    k = object.__new__(Kernel)
    object.__setattr__(k, "id", "t")
    object.__setattr__(k, "cells", (ANY,) * 9)
    assert all(match_patch(p, k) == 0 for p in all_patches())


def test_lut_agrees_with_match_patch():
    for k in KS:
        lut = k.lut()
        for patch in all_patches():
            if patch[1, 1] != 1:
                continue
            code = sum(int(patch[i, j]) << b for b, (i, j) in
                       enumerate([(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)]))
            assert lut[code] == (match_patch(patch, k) == 0)


# --- kernel set --------------------------------------------------------------

def test_default_set_shape():
    assert len(KS) == 16
    assert [k.id for k in KS] == [f"{f}{d}" for f in "abcd" for d in range(1, 5)]
    assert all(k.cells[4] == 1 for k in KS)


def test_rotation_closure():
    grids = {k.grid.tobytes() for k in KS}
    for k in KS:
        assert np.rot90(k.grid, -1).astype(np.int8).tobytes() in grids


def test_family_a_covers_four_borders():
    # each a-kernel wants an empty row or column on one side and ink on the opposite side
    sides = set()
    for k in KS[:4]:
        g = k.grid
        for name, empty, full in [("n", g[0], g[2]), ("s", g[2], g[0]),
                                  ("w", g[:, 0], g[:, 2]), ("e", g[:, 2], g[:, 0])]:
            if (empty == 0).all() and (full == 1).all():
                sides.add(name)
    assert sides == {"n", "e", "s", "w"}


def test_kernels_keep_line_tips():
    # a pixel with fewer than two ink neighbours never matches
    for k in KS:
        for patch in all_patches():
            if patch[1, 1] == 1 and patch.sum() <= 2:
                assert match_patch(patch, k) == 1


def test_kernels_delete_only_simple_points():
    for k in KS:
        for patch in all_patches():
            if patch[1, 1] == 1 and match_patch(patch, k) == 0:
                assert is_simple(patch), (k.id, patch)


def _pair_windows(horizontal):
    """All 3x4 (or 4x3) windows around two 4-adjacent centre pixels that are both ink."""
    for bits in range(1 << 12):
        w = np.array([(bits >> t) & 1 for t in range(12)], np.uint8).reshape(3, 4)
        if w[1, 1] and w[1, 2]:
            yield (w, (1, 1), (1, 2)) if horizontal else (w.T.copy(), (1, 1), (2, 1))


@pytest.mark.parametrize("kernel", list(KS), ids=lambda k: k.id)
def test_parallel_deletion_of_adjacent_pairs_is_safe(kernel):
    # when both pixels match in one pass, the second is still simple after the first goes
    for horizontal in (True, False):
        for w, p, q in _pair_windows(horizontal):
            pw = np.pad(w, 1)
            pp = pw[p[0]:p[0] + 3, p[1]:p[1] + 3]
            qq = pw[q[0]:q[0] + 3, q[1]:q[1] + 3]
            if match_patch(pp, kernel) or match_patch(qq, kernel):
                continue
            after = pw.copy()
            after[p[0] + 1, p[1] + 1] = 0
            assert is_simple(after[q[0]:q[0] + 3, q[1]:q[1] + 3]), (kernel.id, w)


@pytest.mark.parametrize("kernel", list(KS), ids=lambda k: k.id)
def test_small_components_never_vanish(kernel):
    # no ink subset of a 2x2 square, isolated on paper, is deleted entirely in one pass
    for bits in range(1, 16):
        sq = np.array([(bits >> t) & 1 for t in range(4)], np.uint8).reshape(2, 2)
        img = np.pad(sq, 2)
        out, _ = erode_pass(img, kernel)
        assert out.any()


# --- erode_pass --------------------------------------------------------------

def test_erode_empty():
    out, changed = erode_pass(np.zeros((5, 5), np.uint8), KS[0])
    assert not out.any() and changed is False


def test_isolated_pixel_untouched():
    img = np.zeros((5, 5), np.uint8)
    img[2, 2] = 1
    for k in KS:
        out, changed = erode_pass(img, k)
        assert not changed
        np.testing.assert_array_equal(out, img)


def test_full_match_cleared():
    k = KS[0]
    patch = np.where(k.grid == ANY, 1, k.grid).astype(np.uint8)
    out, changed = erode_pass(patch, k)
    assert changed and out[1, 1] == 0


def test_pass_is_synchronous():
    # each pixel is decided on the pre-pass image, checked against patch_at directly
    rng = np.random.default_rng(4)
    img = (rng.random((12, 15)) < 0.55).astype(np.uint8)
    for k in KS:
        want = img.copy()
        for y in range(img.shape[0]):
            for x in range(img.shape[1]):
                want[y, x] = img[y, x] & match_patch(patch_at(img, x, y), k)
        out, changed = erode_pass(img, k)
        np.testing.assert_array_equal(out, want)
        assert changed == (not np.array_equal(want, img))


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 16), st.integers(1, 16)), elements=st.integers(0, 1)),
       st.integers(0, 15))
def test_erode_never_grows(img, i):
    out, _ = erode_pass(img, KS[i])
    assert not (out > img).any()


# --- skeletonize -------------------------------------------------------------

def test_empty_skeleton():
    assert not skeletonize(np.zeros((6, 6), np.uint8)).any()


def reference_thinning(img):
    """Sequential oracle: repeatedly drop simple, non-tip border pixels, one at a time."""
    cur = np.pad(img, 1).astype(np.uint8)
    changed = True
    while changed:
        changed = False
        for side in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            for y, x in zip(*np.nonzero(cur)):
                if cur[y + side[0], x + side[1]]:
                    continue
                patch = cur[y - 1:y + 2, x - 1:x + 2]
                if patch.sum() - 1 >= 2 and is_simple(patch):
                    cur[y, x] = 0
                    changed = True
    return cur[1:-1, 1:-1]


def _is_thin_horizontal_path(sk):
    cols = np.nonzero(sk.any(axis=0))[0]
    return (sk.sum(axis=0).max() == 1 and n_components(sk) == 1
            and np.array_equal(cols, np.arange(cols[0], cols[-1] + 1)))


def test_thick_bar():
    img = np.zeros((7, 20), np.uint8)
    img[2:5] = 1
    sk = skeletonize(img)
    ref = reference_thinning(img)
    assert not (sk > img).any()
    assert _is_thin_horizontal_path(sk) and _is_thin_horizontal_path(ref)
    # extent agrees with the oracle to within the two end pixels a 3-wide bar can lose
    span = np.nonzero(sk.any(axis=0))[0]
    ref_span = np.nonzero(ref.any(axis=0))[0]
    assert abs(len(span) - len(ref_span)) <= 2
    assert len(span) >= 16


def test_cycles_strictly_shrink():
    img = np.zeros((30, 30), np.uint8)
    img[4:26, 6:24] = 1
    cur, sizes = img, [int(img.sum())]
    while True:
        nxt = cur
        for k in KS:
            nxt, _ = erode_pass(nxt, k)
        if np.array_equal(nxt, cur):
            break
        sizes.append(int(nxt.sum()))
        cur = nxt
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert len(sizes) <= img.sum()
    np.testing.assert_array_equal(cur, skeletonize(img))


def _check_properties(img):
    sk = skeletonize(img)
    assert not (sk > img).any(), "not a subset"
    assert n_components(sk) == n_components(img), "components changed"
    np.testing.assert_array_equal(skeletonize(sk), sk)
    return sk


@pytest.mark.parametrize("name,img", synthetic_glyphs(), ids=lambda v: v if isinstance(v, str) else "")
def test_synthetic_glyph(name, img):
    sk = _check_properties(img)
    assert not has_2x2(sk)


@pytest.mark.parametrize("name,img", real_glyphs(), ids=lambda v: v if isinstance(v, str) else "")
def test_real_glyph_topology(name, img):
    _check_properties(img)


@settings(max_examples=80, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 1)))
def test_random_images_keep_topology(img):
    sk = skeletonize(img)
    assert not (sk > img).any()
    assert n_components(sk) == n_components(img)
    # 4-connected holes are preserved too
    assert ndi.label(1 - np.pad(sk, 1), FOUR)[1] == ndi.label(1 - np.pad(img, 1), FOUR)[1]
    np.testing.assert_array_equal(skeletonize(sk), sk)


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        skeletonize(np.full((3, 3), 255, np.uint8))


# --- text format -------------------------------------------------------------

def test_dump_load_round_trip(tmp_path):
    p = tmp_path / "k.txt"
    p.write_text("# custom copy\n" + KS.dumps())
    assert load_kernel_set(p) == KS
    assert KernelSet.loads(KS.dumps()) == KS


def test_load_rejects_wrong_count():
    text = "\n\n".join(KS.dumps().strip().split("\n\n")[:15])
    with pytest.raises(ValueError):
        KernelSet.loads(text)


@pytest.mark.parametrize("rows", ["000/x0x/111", "111/x1x/111", "00/x1x/111", "000/x1x/11?"])
def test_bad_kernel(rows):
    with pytest.raises(ValueError):
        Kernel.parse("a1", rows)


def test_custom_kernel_set_used():
    # swapping families changes the application order but keeps every property
    ks = KernelSet([Kernel(f"{'abcd'['dcba'.index(k.id[0])]}{k.id[1]}", k.cells)
                    for k in itertools.chain(KS[12:], KS[8:12], KS[4:8], KS[:4])])
    img = np.zeros((9, 12), np.uint8)
    img[2:7, 1:11] = 1
    sk = skeletonize(img, ks)
    assert n_components(sk) == 1 and not (sk > img).any()


def test_diagonal_crossing_core_is_irreducible():
    # two 1-pixel diagonals crossing through a 2x2 core: no core pixel is simple, so any
    # topology-preserving thinning has to keep the block
    img = np.zeros((10, 10), np.uint8)
    for i in range(4):
        img[1 + i, 1 + i] = img[8 - i, 8 - i] = 1
        img[1 + i, 8 - i] = img[8 - i, 1 + i] = 1
    assert img[4:6, 4:6].all()
    np.testing.assert_array_equal(skeletonize(img), img)
    for y in (4, 5):
        for x in (4, 5):
            assert not is_simple(img[y - 1:y + 2, x - 1:x + 2])
