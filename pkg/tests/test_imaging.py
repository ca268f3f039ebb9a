"""Imaging tests: PNG round trips, resize arithmetic, preprocessing, sheets."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from restyle.errors import ConfigurationError, FormatError, UnsupportedImageError
from restyle.imaging import (
    GUTTER,
    LABEL_BAND,
    RgbImage,
    contact_sheet,
    decode_png,
    deprocess,
    encode_png,
    failure_cell,
    load_png,
    preprocess,
    resize_bilinear,
    save_png,
    sheet_dimensions,
)


class TestPngIO:
    def test_round_trip(self, random_image, tmp_path):
        path = tmp_path / "img.png"
        save_png(random_image, path)
        loaded = load_png(path)
        assert np.array_equal(loaded.pixels, random_image.pixels)

    def test_truncated_file(self, random_image, tmp_path):
        path = tmp_path / "cut.png"
        save_png(random_image, path)
        blob = path.read_bytes()
        with pytest.raises(FormatError):
            decode_png(blob[: len(blob) - 30])

    def test_bad_signature(self):
        with pytest.raises(FormatError):
            decode_png(b"definitely not a png" * 4)

    def test_rgba_alpha_dropped(self, tmp_path):
        rng = np.random.default_rng(3)
        rgba = rng.integers(0, 256, size=(8, 8, 4), dtype=np.uint8)
        path = tmp_path / "rgba.png"
        Image.fromarray(rgba, "RGBA").save(path)
        loaded = load_png(path)
        assert np.array_equal(loaded.pixels, rgba[..., :3])

    def test_sixteen_bit_rejected(self):
        ihdr_body = struct.pack(">IIBBBBB", 4, 4, 16, 2, 0, 0, 0)
        blob = (
            b"\x89PNG\r\n\x1a\n"
            + struct.pack(">I", 13)
            + b"IHDR"
            + ihdr_body
            + b"\x00" * 8
        )
        with pytest.raises(UnsupportedImageError):
            decode_png(blob)

    def test_palette_rejected(self):
        ihdr_body = struct.pack(">IIBBBBB", 4, 4, 8, 3, 0, 0, 0)
        blob = (
            b"\x89PNG\r\n\x1a\n"
            + struct.pack(">I", 13)
            + b"IHDR"
            + ihdr_body
            + b"\x00" * 8
        )
        with pytest.raises(UnsupportedImageError):
            decode_png(blob)


class TestResize:
    def test_aspect_arithmetic(self):
        image = RgbImage(np.zeros((50, 100, 3), dtype=np.uint8))
        out = resize_bilinear(image, 64)
        assert (out.width, out.height) == (64, 32)

    def test_already_at_target(self, random_image):
        out = resize_bilinear(random_image, 16)
        assert out.width == 16 and out.height == 16
        assert np.array_equal(out.pixels, random_image.pixels)

    def test_constant_color_stays_constant(self):
        image = RgbImage.filled(40, 30, (10, 200, 60))
        out = resize_bilinear(image, 16)
        assert np.all(out.pixels.reshape(-1, 3) == [10, 200, 60])

    def test_portrait_orientation(self):
        image = RgbImage(np.zeros((100, 50, 3), dtype=np.uint8))
        out = resize_bilinear(image, 64)
        assert (out.width, out.height) == (32, 64)

    def test_minimum_bound(self, random_image):
        with pytest.raises(ConfigurationError):
            resize_bilinear(random_image, 7)


class TestPreprocessing:
    def test_round_trip_exact(self, net, random_image):
        tensor = preprocess(random_image, net)
        back = deprocess(tensor, net)
        assert np.array_equal(back.pixels, random_image.pixels)

    def test_mid_gray_value(self, net):
        image = RgbImage.filled(4, 4, (128, 128, 128))
        tensor = preprocess(image, net)
        assert tensor.data[0, 0, 0] == pytest.approx(128 / 255 - 0.5, abs=1e-12)

    def test_out_of_range_clamps_to_255(self, net):
        out = deprocess(np.full((3, 2, 2), 2.0), net)
        assert np.all(out.pixels == 255)

    def test_below_range_clamps_to_0(self, net):
        out = deprocess(np.full((3, 2, 2), -2.0), net)
        assert np.all(out.pixels == 0)


class TestContactSheet:
    def test_one_by_two_dimensions(self):
        cells = [[RgbImage.filled(64, 64), RgbImage.filled(64, 64)]]
        sheet = contact_sheet(cells, ["row"], ["a", "b"])
        assert (sheet.width, sheet.height) == (64 * 2 + GUTTER + LABEL_BAND, 64 + LABEL_BAND)
        assert (sheet.width, sheet.height) == (148, 80)

    def test_single_cell(self):
        sheet = contact_sheet([[RgbImage.filled(32, 24, (1, 2, 3))]], ["r"], ["c"])
        assert (sheet.width, sheet.height) == (32 + LABEL_BAND, 24 + LABEL_BAND)
        cell = sheet.pixels[LABEL_BAND : LABEL_BAND + 24, LABEL_BAND : LABEL_BAND + 32]
        assert np.all(cell.reshape(-1, 3) == [1, 2, 3])

    def test_columns_ascend_left_to_right(self):
        # Five distinct cells land in ascending label order at computed offsets.
        colors = [(i * 40, 0, 0) for i in range(5)]
        cells = [[RgbImage.filled(10, 10, c) for c in colors]]
        labels = ["100", "200", "300", "400", "500"]
        sheet = contact_sheet(cells, ["s"], labels)
        for k, color in enumerate(colors):
            x0 = LABEL_BAND + k * (10 + GUTTER)
            sample = sheet.pixels[LABEL_BAND + 5, x0 + 5]
            assert tuple(sample) == color

    def test_ragged_grid_rejected(self):
        rows = [[RgbImage.filled(8, 8)] * 2, [RgbImage.filled(8, 8)] * 3]
        with pytest.raises(ConfigurationError):
            contact_sheet(rows)

    def test_mismatched_cell_size_rejected(self):
        rows = [[RgbImage.filled(8, 8), RgbImage.filled(9, 8)]]
        with pytest.raises(ConfigurationError):
            contact_sheet(rows)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(4, 24), st.integers(4, 24))
    @settings(max_examples=30, deadline=None)
    def test_layout_formula_property(self, rows, cols, cw, ch):
        grid = [[RgbImage.filled(cw, ch) for _ in range(cols)] for _ in range(rows)]
        sheet = contact_sheet(grid)
        expect_w, expect_h = sheet_dimensions(rows, cols, cw, ch)
        assert (sheet.width, sheet.height) == (expect_w, expect_h)

    def test_failure_cell_is_marked(self):
        cell = failure_cell(32, 32)
        assert (cell.width, cell.height) == (32, 32)
        # mid-gray background with the cross color present
        assert np.any(np.all(cell.pixels == [220, 60, 60], axis=-1))
        assert np.any(np.all(cell.pixels == [128, 128, 128], axis=-1))


class TestRgbImage:
    def test_shape_validation(self):
        with pytest.raises(ConfigurationError):
            RgbImage(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ConfigurationError):
            RgbImage(np.zeros((4, 4, 3), dtype=np.float64))

    def test_png_bytes_round_trip(self, random_image):
        assert np.array_equal(decode_png(encode_png(random_image)).pixels, random_image.pixels)
