import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phenotrap.imgproc import (
    Box,
    binary_dilate,
    binary_erode,
    connected_components,
    iou,
    morph_close,
    morph_open,
    srgb_to_hsv,
    srgb_to_lab,
    threshold,
)

from oracles import (
    close_oracle,
    dilate_oracle,
    erode_oracle,
    flood_components_oracle,
    hsv_oracle,
    lab_oracle,
    open_oracle,
)

rgb_triples = st.tuples(
    st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
)


class TestColorSpaces:
    def test_black_maps_to_lab_origin(self):
        L, a, b = srgb_to_lab((0, 0, 0))
        assert L == 0 and a == 0 and b == 0

    def test_white_point(self):
        L, a, b = srgb_to_lab((255, 255, 255))
        assert L == pytest.approx(100.0, abs=1e-6)
        assert abs(a) < 0.01 and abs(b) < 0.01

    def test_pure_green_chromaticity(self):
        # frozen from the reference colorimetry oracle (sRGB -> XYZ D65 -> CIELAB)
        _, a, _ = srgb_to_lab((0, 255, 0))
        assert a == pytest.approx(-86.18, abs=0.05)

    def test_vectorized_matches_scalar_shape(self):
        img = np.array([[[0, 255, 0], [255, 255, 255]]], dtype=np.uint8)
        out = srgb_to_lab(img)
        assert out.shape == (1, 2, 3)
        assert out[0, 0, 1] == pytest.approx(-86.18, abs=0.05)

    @given(rgb_triples)
    @settings(max_examples=200, deadline=None)
    def test_lab_matches_reference_oracle(self, rgb):
        # the oracle normalizes Y by exactly 1.0 while the library uses the
        # matrix's own row sum (off by 1e-7), hence the loose-ish tolerance
        got = srgb_to_lab(rgb)
        want = lab_oracle(*rgb)
        assert np.allclose(got, want, atol=1e-4)
        assert 0.0 <= got[0] <= 100.0

    def test_pure_red_hsv(self):
        h, s, v = srgb_to_hsv((255, 0, 0))
        assert h == 0 and s == 1 and v == 1

    def test_gray_has_zero_saturation(self):
        h, s, v = srgb_to_hsv((128, 128, 128))
        assert s == 0 and h == 0
        assert v == pytest.approx(128 / 255)

    def test_pure_blue_hsv(self):
        h, s, v = srgb_to_hsv((0, 0, 255))
        assert h == 240 and s == 1 and v == 1

    @given(rgb_triples)
    @settings(max_examples=200, deadline=None)
    def test_hsv_matches_stdlib_oracle(self, rgb):
        got = srgb_to_hsv(rgb)
        want = hsv_oracle(*rgb)
        assert np.allclose(got, want, atol=1e-9)

    @given(st.integers(0, 255))
    @settings(max_examples=60, deadline=None)
    def test_gray_inputs_are_achromatic(self, g):
        lab = srgb_to_lab((g, g, g))
        hsv = srgb_to_hsv((g, g, g))
        assert abs(lab[1]) < 0.01 and abs(lab[2]) < 0.01
        assert hsv[1] == 0


def _solid(shape, rgb):
    img = np.zeros(shape + (3,), dtype=np.uint8)
    img[..., 0], img[..., 1], img[..., 2] = rgb
    return img


class TestThreshold:
    def test_black_image_is_not_green(self):
        mask = threshold(_solid((4, 5), (0, 0, 0)), "lab.a", [(-200.0, -8.0)])
        assert not mask.any()

    def test_green_image_is_all_green(self):
        # a of pure green is about -86.18, well below -8
        mask = threshold(_solid((4, 5), (0, 255, 0)), "lab.a", [(-200.0, -8.0)])
        assert mask.all()

    def test_dual_hue_intervals_cover_pure_red(self):
        mask = threshold(_solid((3, 3), (255, 0, 0)), "hsv.h", [(0.0, 15.0), (345.0, 360.0)])
        assert mask.all()

    def test_empty_predicate_rejected(self):
        with pytest.raises(ValueError, match="degenerate threshold"):
            threshold(_solid((2, 2), (0, 0, 0)), "lab.a", [])

    def test_inverted_interval_rejected(self):
        with pytest.raises(ValueError, match="degenerate threshold"):
            threshold(_solid((2, 2), (0, 0, 0)), "lab.a", [(5.0, -5.0)])

    def test_unknown_channel(self):
        with pytest.raises(ValueError, match="unknown channel"):
            threshold(_solid((2, 2), (0, 0, 0)), "lab.q", [(0.0, 1.0)])

    def test_widening_interval_is_monotone(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        prev = 0
        for hi in (-40.0, -20.0, 0.0, 20.0, 60.0):
            count = int(threshold(img, "lab.a", [(-200.0, hi)]).sum())
            assert count >= prev
            prev = count


class TestMorphology:
    def test_isolated_pixel_removed_by_open(self):
        mask = np.zeros((9, 9), bool)
        mask[4, 4] = True
        assert not morph_open(mask, 3).any()

    def test_solid_square_survives_open(self):
        mask = np.zeros((20, 20), bool)
        mask[5:15, 5:15] = True
        got = morph_open(mask, 3)
        want = np.array(open_oracle(mask.tolist(), 3))
        assert (got == want).all()
        assert (got == mask).all()

    def test_close_fills_interior_hole(self):
        mask = np.zeros((12, 12), bool)
        mask[3:9, 3:9] = True
        mask[5, 5] = False
        got = morph_close(mask, 3)
        assert got[5, 5]
        assert (got[3:9, 3:9]).all()

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            morph_open(np.zeros((4, 4), bool), 4)

    @pytest.mark.parametrize("seed", range(12))
    def test_erode_dilate_match_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((11, 13)) < 0.45
        for side in (1, 3, 5):
            assert (binary_erode(mask, side) == np.array(erode_oracle(mask.tolist(), side))).all()
            assert (binary_dilate(mask, side) == np.array(dilate_oracle(mask.tolist(), side))).all()
            assert (morph_close(mask, side) == np.array(close_oracle(mask.tolist(), side))).all()

    @pytest.mark.parametrize("seed", range(8))
    def test_open_close_lattice_properties(self, seed):
        rng = np.random.default_rng(100 + seed)
        mask = rng.random((16, 16)) < 0.5
        opened = morph_open(mask, 3)
        closed = morph_close(mask, 3)
        assert (opened <= mask).all()  # anti-extensive
        assert (mask <= closed).all()  # extensive
        assert (morph_open(opened, 3) == opened).all()  # idempotent
        assert (morph_close(closed, 3) == closed).all()


class TestConnectedComponents:
    def test_empty_mask(self):
        assert connected_components(np.zeros((5, 5), bool)) == []

    def test_two_disjoint_squares(self):
        mask = np.zeros((10, 12), bool)
        mask[1:4, 1:4] = True
        mask[6:9, 7:10] = True
        comps = connected_components(mask, 8)
        assert len(comps) == 2
        assert all(c.area == 9 for c in comps)
        assert comps[0].centroid == (2.0, 2.0)
        assert comps[1].centroid == (8.0, 7.0)
        assert comps[0].bbox == Box(1.0, 1.0, 4.0, 4.0)

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_random_mask_matches_flood_fill(self, connectivity):
        rng = np.random.default_rng(42)
        mask = rng.random((64, 64)) < 0.4
        comps = connected_components(mask, connectivity)
        want = flood_components_oracle(mask.tolist(), connectivity)
        assert len(comps) == len(want)
        # same partition, same scanline order, consistent stats
        for comp, blob in zip(comps, want):
            assert comp.area == len(blob)
            ys = [p[0] for p in blob]
            xs = [p[1] for p in blob]
            assert comp.centroid[0] == pytest.approx(sum(xs) / len(xs))
            assert comp.centroid[1] == pytest.approx(sum(ys) / len(ys))
            assert comp.bbox == Box(min(xs), min(ys), max(xs) + 1, max(ys) + 1)
        assert sum(c.area for c in comps) == int(mask.sum())

    def test_centroid_inside_bbox(self):
        rng = np.random.default_rng(3)
        mask = rng.random((32, 32)) < 0.3
        for c in connected_components(mask):
            assert c.bbox.contains_point(*c.centroid)

    def test_bad_connectivity(self):
        with pytest.raises(ValueError):
            connected_components(np.zeros((2, 2), bool), 6)


class TestIou:
    def test_identical(self):
        assert iou(Box(1, 2, 7, 9), Box(1, 2, 7, 9)) == 1.0

    def test_disjoint(self):
        assert iou(Box(0, 0, 2, 2), Box(5, 5, 7, 7)) == 0.0

    def test_half_overlap_hand_arithmetic(self):
        # intersection 5x10 = 50, union 150
        assert iou(Box(0, 0, 10, 10), Box(5, 0, 15, 10)) == pytest.approx(1 / 3)

    def test_zero_area_rules(self):
        z = Box(3, 3, 3, 3)
        assert iou(z, z) == 1.0
        assert iou(z, Box(4, 4, 4, 4)) == 0.0
        assert iou(z, Box(0, 0, 10, 10)) == 0.0

    @given(st.lists(st.floats(0, 50), min_size=8, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_symmetry_and_range(self, vals):
        a = Box(min(vals[0], vals[1]), min(vals[2], vals[3]), max(vals[0], vals[1]), max(vals[2], vals[3]))
        b = Box(min(vals[4], vals[5]), min(vals[6], vals[7]), max(vals[4], vals[5]), max(vals[6], vals[7]))
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    def test_invalid_box_rejected(self):
        with pytest.raises(ValueError):
            Box(5, 0, 1, 2)
