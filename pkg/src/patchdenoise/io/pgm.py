"""Image loading and saving.

Binary 8-bit PGM (P5) is the required, dependency-free format and is
parsed by hand so round trips are bit-exact.  PNG (grayscale or RGB,
converted by channel averaging) is optional sugar through Pillow.
"""

import numpy as np

from ..errors import CodecError
from ..pipeline import to_grayscale


def _next_token(data, pos):
    """Skip whitespace and '#' comments, return (token, new_pos)."""
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise CodecError("unexpected end of header", offset=pos)
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def load_pgm(path):
    """Decode a binary 8-bit P5 file into a [0, 1] float image."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise CodecError(f"unsupported magic {magic!r}, expected P5", offset=0)
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise CodecError(f"bad header token {tok!r}", offset=pos) from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CodecError(f"bad dimensions {width}x{height}", offset=pos)
    if maxval != 255:
        raise CodecError(
            f"only 8-bit PGM supported (maxval 255), got {maxval}", offset=pos)
    pos += 1  # single whitespace byte separates header from payload
    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise CodecError(
            f"truncated payload: need {width * height} bytes, "
            f"have {len(payload)}", offset=pos + len(payload))
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return pixels.reshape(height, width)


def save_pgm(img, path):
    """Quantize a [0, 1] image to 8 bits and write a binary P5 file."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise CodecError(f"expected a 2-D image, got shape {img.shape}")
    quant = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(quant.tobytes())


def load_image(path):
    """Load a grayscale [0, 1] image; PGM natively, PNG via Pillow."""
    path = str(path)
    if path.lower().endswith((".png", ".jpg", ".jpeg")):
        try:
            from PIL import Image
        except ImportError:
            raise CodecError(
                "Pillow is required for non-PGM images "
                "(install the 'png' extra)") from None
        with Image.open(path) as im:
            arr = np.asarray(im, dtype=np.float64) / 255.0
        if arr.ndim == 3:
            arr = to_grayscale(arr[:, :, :3])
        return arr
    return load_pgm(path)


def save_image(img, path):
    """Save a grayscale image; only PGM output is supported."""
    save_pgm(img, path)
