"""Image I/O, resizing, preprocessing, and contact-sheet rendering.

PNG pixel coding is delegated to Pillow; the IHDR header is validated by
hand first so unsupported inputs fail with precise errors instead of being
silently converted. Contact-sheet labels use a built-in 5×7 bitmap font, so
rendering never depends on system fonts.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigurationError, FormatError, UnsupportedImageError
from .network import LossNetwork
from .tensor import Tensor

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

GUTTER = 4          # white pixels between contact-sheet cells
LABEL_BAND = 16     # label strip along the top and left edges


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster stored as an H×W×3 uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ConfigurationError(f"RgbImage needs uint8 H×W×3 pixels, got {p.dtype} {p.shape}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @staticmethod
    def filled(width: int, height: int, rgb=(255, 255, 255)) -> "RgbImage":
        return RgbImage(np.tile(np.array(rgb, dtype=np.uint8), (height, width, 1)))


def _validate_png_header(blob: bytes) -> None:
    if len(blob) < 8 or blob[:8] != PNG_SIGNATURE:
        raise FormatError("not a PNG file (bad signature)")
    if len(blob) < 33:
        raise FormatError("PNG truncated before IHDR")
    length, chunk_type = struct.unpack(">I4s", blob[8:16])
    if chunk_type != b"IHDR" or length != 13:
        raise FormatError("PNG missing IHDR chunk")
    bit_depth, color_type = blob[24], blob[25]
    if bit_depth != 8:
        raise UnsupportedImageError(f"unsupported PNG bit depth {bit_depth} (only 8 is read)")
    if color_type not in (2, 6):
        raise UnsupportedImageError(
            f"unsupported PNG color type {color_type} (only RGB and RGBA are read)"
        )


def decode_png(blob: bytes) -> RgbImage:
    """Decode 8-bit RGB or RGBA PNG bytes; the alpha channel is dropped."""
    _validate_png_header(blob)
    try:
        with Image.open(io.BytesIO(blob)) as img:
            img.load()
            if img.mode == "RGBA":
                img = img.convert("RGB")
            if img.mode != "RGB":
                raise UnsupportedImageError(f"unsupported decoded mode '{img.mode}'")
            return RgbImage(np.asarray(img, dtype=np.uint8))
    except (UnidentifiedImageError, OSError, SyntaxError) as err:
        raise FormatError(f"malformed PNG data: {err}") from err


def encode_png(image: RgbImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image.pixels, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_png(path) -> RgbImage:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def save_png(image: RgbImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(image))


def resize_bilinear(image: RgbImage, longest_side: int) -> RgbImage:
    """Resize so the longest side equals longest_side, preserving aspect."""
    if longest_side < 8:
        raise ConfigurationError(f"longest_side must be >= 8, got {longest_side}")
    w, h = image.width, image.height
    if max(w, h) == longest_side:
        return image
    if w >= h:
        new_w = longest_side
        new_h = max(1, round(h * longest_side / w))
    else:
        new_h = longest_side
        new_w = max(1, round(w * longest_side / h))
    resized = Image.fromarray(image.pixels, "RGB").resize((new_w, new_h), Image.BILINEAR)
    return RgbImage(np.asarray(resized, dtype=np.uint8))


def preprocess(image: RgbImage, net: LossNetwork) -> Tensor:
    """[0,1]-scale and mean-subtract into the network's input domain (3×H×W)."""
    scaled = image.pixels.astype(np.float64).transpose(2, 0, 1) / 255.0
    return Tensor(scaled - net.channel_means[:, None, None])


def deprocess(tensor: Union[Tensor, np.ndarray], net: LossNetwork) -> RgbImage:
    """Invert preprocessing: add means, clamp to [0,1], quantize to 8 bits."""
    data = tensor.data if isinstance(tensor, Tensor) else np.asarray(tensor, dtype=np.float64)
    restored = np.clip(data + net.channel_means[:, None, None], 0.0, 1.0)
    samples = np.rint(restored * 255.0).astype(np.uint8)
    return RgbImage(samples.transpose(1, 2, 0).copy())


def preprocessed_bounds(net: LossNetwork):
    """Per-channel (low, high) of the valid preprocessed pixel range."""
    means = net.channel_means[:, None, None]
    return -means, 1.0 - means


# -- 5×7 bitmap font -----------------------------------------------------------

_GLYPHS = {
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11100", "10010", "10001", "10001", "10001", "10010", "11100"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "I": ("01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    "J": ("00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "N": ("10001", "11001", "10101", "10011", "10001", "10001", "10001"),
    "O": ("01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "Q": ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    "R": ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    "S": ("01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "U": ("10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    "V": ("10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    "W": ("10001", "10001", "10001", "10101", "10101", "11011", "10001"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    "Y": ("10001", "10001", "01010", "00100", "00100", "00100", "00100"),
    "Z": ("11111", "00001", "00010", "00100", "01000", "10000", "11111"),
    " ": ("00000", "00000", "00000", "00000", "00000", "00000", "00000"),
    ".": ("00000", "00000", "00000", "00000", "00000", "01100", "01100"),
    ",": ("00000", "00000", "00000", "00000", "01100", "00100", "01000"),
    ":": ("00000", "01100", "01100", "00000", "01100", "01100", "00000"),
    "-": ("00000", "00000", "00000", "11111", "00000", "00000", "00000"),
    "+": ("00000", "00100", "00100", "11111", "00100", "00100", "00000"),
    "_": ("00000", "00000", "00000", "00000", "00000", "00000", "11111"),
    "=": ("00000", "00000", "11111", "00000", "11111", "00000", "00000"),
    "/": ("00001", "00010", "00010", "00100", "01000", "01000", "10000"),
    "(": ("00010", "00100", "01000", "01000", "01000", "00100", "00010"),
    ")": ("01000", "00100", "00010", "00010", "00010", "00100", "01000"),
    "×": ("00000", "10001", "01010", "00100", "01010", "10001", "00000"),
    "?": ("01110", "10001", "00001", "00010", "00100", "00000", "00100"),
}

GLYPH_W, GLYPH_H = 5, 7


def draw_text(
    canvas: np.ndarray,
    x: int,
    y: int,
    text: str,
    rgb=(0, 0, 0),
    scale: int = 1,
) -> None:
    """Stamp text onto an H×W×3 uint8 canvas at (x, y); clips at the edges."""
    color = np.array(rgb, dtype=np.uint8)
    cx = x
    for ch in str(text):
        glyph = _GLYPHS.get(ch.upper() if ch.isalpha() else ch, _GLYPHS["?"])
        for gy, row in enumerate(glyph):
            for gx, bit in enumerate(row):
                if bit != "1":
                    continue
                py, px = y + gy * scale, cx + gx * scale
                sy = slice(py, py + scale)
                sx = slice(px, px + scale)
                if py >= canvas.shape[0] or px >= canvas.shape[1] or py < 0 or px < 0:
                    continue
                canvas[sy, sx] = color
        cx += (GLYPH_W + 1) * scale


def text_width(text: str, scale: int = 1) -> int:
    n = len(str(text))
    return 0 if n == 0 else (n * (GLYPH_W + 1) - 1) * scale


def sheet_dimensions(rows: int, cols: int, cell_w: int, cell_h: int):
    """Closed-form contact sheet size: label bands plus gutters plus cells."""
    width = LABEL_BAND + cols * cell_w + (cols - 1) * GUTTER
    height = LABEL_BAND + rows * cell_h + (rows - 1) * GUTTER
    return width, height


def failure_cell(width: int, height: int) -> RgbImage:
    """Mid-gray placeholder with a cross glyph for cells that failed."""
    cell = RgbImage.filled(width, height, (128, 128, 128))
    scale = max(1, min(width // (GLYPH_W + 1), height // (GLYPH_H + 1)) // 2)
    gx = (width - GLYPH_W * scale) // 2
    gy = (height - GLYPH_H * scale) // 2
    draw_text(cell.pixels, gx, gy, "×", rgb=(220, 60, 60), scale=scale)
    return cell


def contact_sheet(
    images: Sequence[Sequence[RgbImage]],
    row_labels: Optional[Sequence[str]] = None,
    col_labels: Optional[Sequence[str]] = None,
) -> RgbImage:
    """Lay a rectangular grid of same-size cells out with labels and gutters.

    Cells go row-major; column labels sit in the 16-px top band, row labels
    in the 16-px left band. Gutters are 4 px of white.
    """
    if not images or not images[0]:
        raise ConfigurationError("contact_sheet needs a non-empty grid")
    rows = len(images)
    cols = len(images[0])
    for r, row in enumerate(images):
        if len(row) != cols:
            raise ConfigurationError(f"ragged grid: row {r} has {len(row)} cells, expected {cols}")
    cell_w, cell_h = images[0][0].width, images[0][0].height
    for r, row in enumerate(images):
        for c, cell in enumerate(row):
            if (cell.width, cell.height) != (cell_w, cell_h):
                raise ConfigurationError(
                    f"cell ({r},{c}) is {cell.width}×{cell.height}, expected {cell_w}×{cell_h}"
                )
    row_labels = list(row_labels) if row_labels is not None else [""] * rows
    col_labels = list(col_labels) if col_labels is not None else [""] * cols
    if len(row_labels) != rows or len(col_labels) != cols:
        raise ConfigurationError("label counts must match the grid shape")

    width, height = sheet_dimensions(rows, cols, cell_w, cell_h)
    canvas = np.full((height, width, 3), 255, dtype=np.uint8)

    for c, label in enumerate(col_labels):
        x0 = LABEL_BAND + c * (cell_w + GUTTER)
        tx = x0 + max(0, (cell_w - text_width(label)) // 2)
        draw_text(canvas, tx, (LABEL_BAND - GLYPH_H) // 2, label)
    for r, label in enumerate(row_labels):
        y0 = LABEL_BAND + r * (cell_h + GUTTER)
        draw_text(canvas, 2, y0 + max(0, (cell_h - GLYPH_H) // 2), label)

    for r, row in enumerate(images):
        for c, cell in enumerate(row):
            y0 = LABEL_BAND + r * (cell_h + GUTTER)
            x0 = LABEL_BAND + c * (cell_w + GUTTER)
            canvas[y0 : y0 + cell_h, x0 : x0 + cell_w] = cell.pixels
    return RgbImage(canvas)
